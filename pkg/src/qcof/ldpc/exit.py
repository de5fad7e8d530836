"""Protograph EXIT analysis over Z_p with the Gaussian message model.

A message on an edge is summarized by one parameter ``nu``: its LLR vector
``lambda_x = log P(0)/P(x)``, x = 1..p-1, is Gaussian with mean nu/2 and
covariance nu/2 (I + 1 1^T). ``J(nu)`` is the mutual information of such a
message in units of log p.

Check nodes are evaluated from a two-input Monte Carlo table, folding
inputs one at a time (the intermediate message is re-summarized by its
nu). Variable nodes combine the exact channel LLRs with a Gaussian message
of the summed parameter. Every table uses common random numbers so it is
a smooth, monotone function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from ..channel import NoisePmf, effective_noise_pmf
from ..lattice import ModulationScheme
from .protograph import BaseMatrix

NU_MIN, NU_MAX = 1e-3, 400.0
GRID_POINTS = 48
J_SAMPLES = 300_000
CONVERGED = 1.0 - 1e-4
MAX_ITER = 1000
TABLE_SEED = 20240611


class JEstimate(NamedTuple):
    value: float
    stderr: float


def _gaussian_llrs(nu: float, g: np.ndarray, g0: np.ndarray) -> np.ndarray:
    s = math.sqrt(nu / 2.0)
    return nu / 2.0 + s * (g + g0)


def _mi_terms(llrs: np.ndarray, p: int) -> np.ndarray:
    """Per-sample log_p(1 + sum_x exp(-lambda_x))."""
    zero = np.zeros((llrs.shape[0], 1))
    return logsumexp(np.hstack([zero, -llrs]), axis=1) / math.log(p)


def j_function(nu: float, p: int, samples: int = J_SAMPLES, seed: int = 0) -> JEstimate:
    """Monte Carlo J(nu) with its standard error."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if nu == 0:
        return JEstimate(0.0, 0.0)
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    chunk = max(1, 2_000_000 // p)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        llr = _gaussian_llrs(nu, rng.standard_normal((m, p - 1)), rng.standard_normal((m, 1)))
        t = _mi_terms(llr, p)
        total += t.sum()
        total_sq += (t * t).sum()
        done += m
    mean = total / samples
    var = max(0.0, total_sq / samples - mean * mean)
    return JEstimate(1.0 - mean, math.sqrt(var / samples))


def _grid() -> np.ndarray:
    return np.geomspace(NU_MIN, NU_MAX, GRID_POINTS)


def _table_samples(p: int) -> int:
    return max(2000, 500_000 // p)


def _gaussian_tails(nu, g, g0):
    """(1 - P(0), P(x) for x = 1..p-1) of the posterior pmf of each sample.

    Kept apart so values near 1 lose no precision; tails stored as float32.
    """
    llr = _gaussian_llrs(nu, g, g0)
    logz = logsumexp(np.hstack([np.zeros((llr.shape[0], 1)), -llr]), axis=1)
    tails = np.exp(-llr - logz[:, None]).astype(np.float32)
    return -np.expm1(-logz), tails


@dataclass(frozen=True)
class _Tables:
    p: int
    grid: np.ndarray
    j: np.ndarray           # J on grid
    check: np.ndarray       # two-input check output MI on grid x grid

    def J(self, nu):
        nu = np.asarray(nu, dtype=float)
        x = np.log(np.clip(nu, NU_MIN, NU_MAX))
        y = np.interp(x, np.log(self.grid), np.log1p(-self.j))
        out = -np.expm1(y)
        # below the grid J is linear in nu to first order
        return np.where(nu < NU_MIN, self.j[0] * nu / NU_MIN, out)

    def J_inv(self, I):
        I = np.asarray(I, dtype=float)
        y = np.log1p(-np.clip(I, 0.0, self.j[-1]))
        # np.interp needs increasing x: log(1-J) decreases along the grid
        x = np.interp(-y, -np.log1p(-self.j), np.log(self.grid))
        return np.where(I < self.j[0], NU_MIN * np.maximum(I, 0.0) / self.j[0], np.exp(x))

    def check_pair(self, nu_a: float, nu_b: float) -> float:
        lg = np.log(self.grid)
        xa = np.clip(math.log(max(nu_a, NU_MIN)), lg[0], lg[-1])
        xb = np.clip(math.log(max(nu_b, NU_MIN)), lg[0], lg[-1])
        ia = min(int(np.searchsorted(lg, xa, side="right")) - 1, lg.size - 2)
        ib = min(int(np.searchsorted(lg, xb, side="right")) - 1, lg.size - 2)
        ta = (xa - lg[ia]) / (lg[ia + 1] - lg[ia])
        tb = (xb - lg[ib]) / (lg[ib + 1] - lg[ib])
        v = np.log1p(-self.check[ia:ia + 2, ib:ib + 2])
        y = ((1 - ta) * (1 - tb) * v[0, 0] + ta * (1 - tb) * v[1, 0]
             + (1 - ta) * tb * v[0, 1] + ta * tb * v[1, 1])
        out = -math.expm1(y)
        scale = min(1.0, nu_a / NU_MIN) * min(1.0, nu_b / NU_MIN)
        return out * scale


@lru_cache(maxsize=8)
def tables(p: int) -> _Tables:
    """J and check-node tables for Z_p (cached per p).

    Both check inputs come from the same sample set as J, paired with a
    one-row offset, so an input at very large nu reproduces J exactly.
    """
    rng = np.random.default_rng([TABLE_SEED, p])
    N = _table_samples(p)
    grid = _grid()
    g, g0 = rng.standard_normal((N, p - 1)), rng.standard_normal((N, 1))
    j = np.array([1.0 - _mi_terms(_gaussian_llrs(nu, g, g0), p).mean() for nu in grid])
    j = np.maximum.accumulate(np.clip(j, 0.0, 1.0 - 1e-15))

    parts = [_gaussian_tails(nu, g, g0) for nu in grid]
    check = np.empty((grid.size, grid.size))
    for a, (ea, ta) in enumerate(parts):
        ea, ta = ea[:-1], ta[:-1]
        for b, (eb, tb) in enumerate(parts):
            # 1 - sum_x a[x] b[-x], with b drawn from the next row
            cross = np.einsum("nx,nx->n", ta, tb[1:, ::-1], dtype=np.float64)
            miss = ea + eb[1:] - ea * eb[1:] - cross
            check[a, b] = 1.0 + np.mean(np.log1p(-np.clip(miss, 0.0, 1.0 - 1e-300))) / math.log(p)
    check = np.clip(check, 0.0, 1.0 - 1e-15)
    check = np.maximum.accumulate(np.maximum.accumulate(check, axis=0), axis=1)
    return _Tables(p=p, grid=grid, j=j, check=check)


@dataclass(frozen=True)
class _VarTable:
    nu: np.ndarray
    mi: np.ndarray

    def __call__(self, nu_sum: float) -> float:
        x = np.log1p(np.asarray(nu_sum) / NU_MIN)
        y = np.interp(x, np.log1p(self.nu / NU_MIN), np.log1p(-self.mi))
        return float(-np.expm1(y))


def _channel_llrs(pmf: NoisePmf, N: int, rng) -> np.ndarray:
    p = pmf.p
    u = pmf.sample(N, rng)
    logp = np.log(np.maximum(pmf.probs, 1e-300))
    x = np.arange(1, p)
    return logp[u][:, None] - logp[(u[:, None] - x[None, :]) % p]


def variable_table(pmf: NoisePmf, seed: int = TABLE_SEED) -> _VarTable:
    """MI of (exact channel LLR + Gaussian message of parameter nu) on a grid."""
    p = pmf.p
    rng = np.random.default_rng([seed, p, 1])
    N = _table_samples(p)
    ch = _channel_llrs(pmf, N, rng)
    g, g0 = rng.standard_normal((N, p - 1)), rng.standard_normal((N, 1))
    nus = np.concatenate([[0.0], _grid()])
    mi = np.array([1.0 - _mi_terms(ch + (_gaussian_llrs(nu, g, g0) if nu else 0.0), p).mean()
                   for nu in nus])
    mi = np.maximum.accumulate(np.clip(mi, 0.0, 1.0 - 1e-15))
    return _VarTable(nu=nus, mi=mi)


def _check_output(tab: _Tables, nus: list[float]) -> float:
    if not nus:
        return 1.0
    nus = sorted(nus, reverse=True)
    acc = nus[0]
    I = float(tab.J(acc))
    for nu in nus[1:]:
        I = tab.check_pair(acc, nu)
        acc = float(tab.J_inv(I))
    return I


def exit_converges(base: BaseMatrix, pmf: NoisePmf, max_iter: int = MAX_ITER,
                   target: float = CONVERGED) -> tuple[bool, int, float]:
    """Run the per-edge-type recursion; returns (converged, iterations, min edge MI)."""
    tab = tables(pmf.p)
    var_tab = variable_table(pmf)
    B = base.entries
    edges = [(i, j) for i in range(B.shape[0]) for j in range(B.shape[1]) if B[i, j]]
    I_cv = {e: 0.0 for e in edges}
    I_vc = {e: 0.0 for e in edges}
    by_var = {j: [(i, j) for (i, jj) in edges if jj == j] for j in range(B.shape[1])}
    by_chk = {i: [(ii, j) for (ii, j) in edges if ii == i] for i in range(B.shape[0])}
    prev_min = -1.0
    stall = 0
    worst = 0.0
    for it in range(1, max_iter + 1):
        nu_cv = {e: float(tab.J_inv(I_cv[e])) for e in edges}
        for (i, j) in edges:
            total = sum(B[e] * nu_cv[e] for e in by_var[j]) - nu_cv[(i, j)]
            I_vc[(i, j)] = var_tab(total)
        nu_vc = {e: float(tab.J_inv(I_vc[e])) for e in edges}
        for (i, j) in edges:
            inputs = []
            for e in by_chk[i]:
                inputs += [nu_vc[e]] * (B[e] - (e == (i, j)))
            I_cv[(i, j)] = _check_output(tab, inputs)
        worst = min(I_vc.values())
        if worst >= target:
            return True, it, worst
        if worst <= prev_min + 1e-9:
            stall += 1
            if stall >= 20:
                break
        else:
            stall = 0
        prev_min = max(prev_min, worst)
    return False, it, worst


def default_channel_family(p: int) -> Callable[[float], NoisePmf]:
    """sigma (in units of the fine lattice step) -> folded Gaussian noise pmf."""
    scheme = ModulationScheme(p, 1.0)
    return lambda sigma: effective_noise_pmf(sigma, scheme)


def capacity_sigma(rate_bits: float, p: int, channel_family=None, rtol: float = 1e-6) -> float:
    """Largest sigma with log2 p - H(z) >= rate_bits."""
    from ..rate import entropy_bits

    fam = channel_family or default_channel_family(p)
    lo, hi = 1e-3, 1.0
    while math.log2(p) - entropy_bits(fam(hi)) > rate_bits:
        hi *= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if math.log2(p) - entropy_bits(fam(mid)) > rate_bits:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def exit_threshold(base: BaseMatrix, p: int, channel_family=None, rtol: float = 1e-3,
                   max_iter: int = MAX_ITER) -> float:
    """Largest sigma for which the protograph EXIT recursion converges.

    Bisection to relative precision ``rtol``. Returns ``inf`` if the
    recursion still converges at a very large sigma (e.g. a noiseless family).
    """
    fam = channel_family or default_channel_family(p)

    def ok(sigma):
        return exit_converges(base, fam(sigma), max_iter=max_iter)[0]

    rate_bits = float(base.design_rate) * math.log2(p)
    start = capacity_sigma(rate_bits, p, channel_family) if channel_family is None else 1.0
    hi = start * 1.05
    if ok(hi):
        lo = hi
        while ok(hi):
            lo, hi = hi, hi * 2.0
            if hi > 1e3 * start:
                return math.inf
    else:
        lo = start * 0.5
        while not ok(lo):
            hi, lo = lo, lo * 0.5
            if lo < 1e-6:
                return 0.0
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
