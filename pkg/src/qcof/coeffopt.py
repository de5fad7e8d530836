"""Integer coefficient search for a quantized CoF relay.

For fixed channel ``h`` and SNR the effective noise variance, after the MMSE
scale ``alpha``, is the quadratic form ``a^T G a`` with
``G = (SNR^-1 I + h h^T)^-1``. Minimizing it over nonzero integer ``a`` is a
shortest-vector problem in the lattice generated by ``chol(G)^T``. We reduce
the basis with LLL and finish with Schnorr-Euchner enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import noise_variance

LLL_DELTA = 0.99
TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Equation:
    """One relay's linear combination: integer ``a``, scale ``alpha``, field ``q``."""

    a: np.ndarray
    alpha: float
    q: np.ndarray
    sigma_eps_sq: float
    p: int

    def __post_init__(self):
        if not np.any(self.q):
            raise ValueError("equation coefficients vanish modulo p")

    def __repr__(self):
        return (f"Equation(a={self.a.tolist()}, alpha={self.alpha:.6g}, "
                f"q={self.q.tolist()}, sigma_eps_sq={self.sigma_eps_sq:.6g})")


@dataclass(frozen=True, eq=False)
class GramFactor:
    G: np.ndarray
    Lfac: np.ndarray
    h: np.ndarray
    snr: float

    def norm_sq(self, a) -> np.ndarray:
        """||Lfac^T a||^2 for one vector or a stack of row vectors."""
        a = np.asarray(a, dtype=float)
        return np.sum((a @ self.Lfac) ** 2, axis=-1)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.G)


def optimal_alpha(h, a, snr: float) -> float:
    """MMSE scale SNR h^T a / (1 + SNR ||h||^2)."""
    h = np.asarray(h, dtype=float)
    a = np.asarray(a, dtype=float)
    return float(snr * (h @ a) / (1.0 + snr * (h @ h)))


def gram_matrix(h, snr: float) -> np.ndarray:
    # Sherman-Morrison: (I/SNR + h h^T)^-1 = SNR I - SNR^2 h h^T / (1 + SNR ||h||^2)
    h = np.asarray(h, dtype=float)
    L = h.size
    return snr * np.eye(L) - (snr * snr / (1.0 + snr * (h @ h))) * np.outer(h, h)


def gram_factor(h, snr: float) -> GramFactor:
    if snr <= 0:
        raise ValueError("snr must be positive")
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if not np.all(np.isfinite(h)):
        raise ValueError("h must be finite")
    G = gram_matrix(h, snr)
    try:
        Lfac = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Gram matrix is not positive definite") from exc
    return GramFactor(G=G, Lfac=Lfac, h=h, snr=float(snr))


def lll_reduce(basis, delta: float = LLL_DELTA):
    """LLL-reduce the columns of ``basis``.

    Returns ``(reduced, T)`` with ``reduced = basis @ T`` and ``T`` an
    integer unimodular matrix.
    """
    B = np.array(basis, dtype=float)
    n = B.shape[1]
    T = np.eye(n, dtype=np.int64)

    def gram_schmidt(B):
        Bs = np.zeros_like(B)
        mu = np.zeros((n, n))
        for i in range(n):
            v = B[:, i].copy()
            for j in range(i):
                mu[i, j] = B[:, i] @ Bs[:, j] / (Bs[:, j] @ Bs[:, j])
                v -= mu[i, j] * Bs[:, j]
            Bs[:, i] = v
        return Bs, mu

    Bs, mu = gram_schmidt(B)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j])
            if r:
                B[:, k] -= r * B[:, j]
                T[:, k] -= r * T[:, j]
                mu[k, :j + 1] -= r * np.append(mu[j, :j], 1.0)
        bk = Bs[:, k] @ Bs[:, k]
        bk1 = Bs[:, k - 1] @ Bs[:, k - 1]
        if bk >= (delta - mu[k, k - 1] ** 2) * bk1:
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            T[:, [k - 1, k]] = T[:, [k, k - 1]]
            # n <= ~10 here, recomputing beats the bookkeeping of an in-place update
            Bs, mu = gram_schmidt(B)
            k = max(k - 1, 1)
    return B, T


def _enumerate(R: np.ndarray, radius_sq: float, accept, shrink: bool):
    """Schnorr-Euchner enumeration of nonzero z with ||R z||^2 <= radius_sq.

    ``R`` is upper triangular. ``accept(z)`` filters leaves. With ``shrink``
    the radius tightens to each accepted leaf (keeping ties within
    ``TIE_RTOL``); otherwise every accepted leaf in the ball is returned.
    Returns a list of ``(norm_sq, z)``.
    """
    n = R.shape[0]
    found = []
    z = np.zeros(n, dtype=np.int64)
    center = np.zeros(n)
    partial = np.zeros(n + 1)  # partial[i]: squared length from levels >= i
    step = np.zeros(n, dtype=np.int64)
    state = {"r2": radius_sq}

    def set_level(i):
        s = R[i, i + 1:] @ z[i + 1:]
        center[i] = -s / R[i, i]
        z[i] = int(math.floor(center[i] + 0.5))
        step[i] = 0

    i = n - 1
    set_level(i)
    while True:
        d = (R[i, i] * (z[i] - center[i])) ** 2 + partial[i + 1]
        if d <= state["r2"] * (1 + TIE_RTOL):
            if i == 0:
                if np.any(z) and accept(z):
                    found.append((d, z.copy()))
                    if shrink and d < state["r2"]:
                        state["r2"] = d
                # next sibling at level 0
            else:
                partial[i] = d
                i -= 1
                set_level(i)
                continue
        else:
            i += 1
            if i == n:
                break
        # zig-zag to the next candidate at level i
        # while every higher coordinate is zero, z and -z are both reachable;
        # walking only the nonnegative side visits each pair once
        if not np.any(z[i + 1:]):
            z[i] += 1
        else:
            step[i] += 1
            offset = (step[i] + 1) // 2
            base = int(math.floor(center[i] + 0.5))
            up_first = center[i] >= base
            sign = 1 if (step[i] % 2 == 1) == up_first else -1
            z[i] = base + sign * offset
    if shrink:
        best = min((d for d, _ in found), default=None)
        if best is not None:
            found = [(d, z) for d, z in found if d <= best * (1 + TIE_RTOL)]
    return found


def canonical_sign(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    nz = np.flatnonzero(a)
    return -a if nz.size and a[nz[0]] < 0 else a


def _prepare(gram: GramFactor):
    basis = gram.Lfac.T
    reduced, T = lll_reduce(basis)
    _, R = np.linalg.qr(reduced)
    return reduced, T, R


def _valid(a, p: int | None) -> bool:
    return p is None or bool(np.any(np.mod(a, p)))


def _pick(cands, gram: GramFactor):
    """Smallest norm; exact ties resolved by lexicographic order of canonical a."""
    vals = gram.norm_sq(np.array([c for c in cands]))
    best = vals.min()
    tied = [tuple(c) for c, v in zip(cands, vals) if v <= best * (1 + TIE_RTOL)]
    return np.array(min(tied), dtype=np.int64)


def shortest_vector(gram: GramFactor, p: int | None) -> np.ndarray:
    """Nonzero integer a minimizing a^T G a with a not vanishing mod p.

    ``p=None`` drops the modular constraint (plain shortest vector).
    """
    reduced, T, R = _prepare(gram)
    norms = np.sum(reduced ** 2, axis=0)
    order = np.argsort(norms)
    radius = next(norms[j] for j in order if _valid(T[:, j], p))
    found = _enumerate(R, radius, lambda z: _valid(T @ z, p), shrink=True)
    cands = [canonical_sign(T @ z) for _, z in found]
    return _pick(cands, gram)


def candidate_vectors(gram: GramFactor, p: int, count: int) -> list[np.ndarray]:
    """The ``count`` best admissible integer vectors (up to sign), by increasing a^T G a."""
    reduced, T, R = _prepare(gram)
    norms = np.sum(reduced ** 2, axis=0)
    first = shortest_vector(gram, p)
    radius = float(gram.norm_sq(first))
    seen = {}
    for _ in range(40):
        radius = max(radius * 2.0, float(norms.max()))
        found = _enumerate(R, radius, lambda z: _valid(T @ z, p), shrink=False)
        seen = {}
        for _, z in found:
            a = canonical_sign(T @ z)
            seen[tuple(a)] = a
        if len(seen) >= count:
            break
    cands = list(seen.values())
    vals = gram.norm_sq(np.array(cands)) if cands else np.array([])
    order = sorted(range(len(cands)), key=lambda t: (round(vals[t] / vals.min(), 9), tuple(cands[t])))
    return [cands[t] for t in order[:count]]


def equation_for(h, a, snr: float, p: int) -> Equation:
    a = np.asarray(a, dtype=np.int64)
    alpha = optimal_alpha(h, a, snr)
    return Equation(
        a=a,
        alpha=alpha,
        q=np.mod(a, p),
        sigma_eps_sq=noise_variance(h, a, alpha, snr),
        p=p,
    )


def best_equation(h, snr: float, p: int) -> Equation:
    """Equation minimizing the effective noise variance at relay channel ``h``."""
    gram = gram_factor(h, snr)
    return equation_for(gram.h, shortest_vector(gram, p), snr, p)


def candidate_equations(h, snr: float, p: int, count: int) -> list[Equation]:
    gram = gram_factor(h, snr)
    return [equation_for(gram.h, a, snr, p) for a in candidate_vectors(gram, p, count)]
