"""Fast invariant checks behind ``qcof selftest``."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import coeffopt, lattice
from .channel import empirical_pmf, exact_noise_pmf, simulate_pipeline, total_variation
from .lattice import ModulationScheme


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    elapsed: float
    detail: str


def modulo_identity_failures(p: int, L: int, g=None) -> tuple[int, int]:
    """Count (u, a) pairs violating M^-1([sum a_l M(u_l)] mod kpZ) = sum q_l u_l.

    ``g`` is an optional label table (a permutation of 0..p-1) replacing the
    canonical labeling; it exists so the check can be shown to catch a bad map.
    Works with kappa = 1 so every quantity is an exact integer.
    """
    g = np.arange(p) if g is None else np.asarray(g, dtype=np.int64)
    g_inv = np.argsort(g)
    scheme = ModulationScheme(p, 1.0)
    U = np.array(list(itertools.product(range(p), repeat=L)), dtype=np.int64)
    A = np.array(list(itertools.product(range(-p, p + 1), repeat=L)), dtype=np.int64)
    V = lattice.mod_coarse(g[U].astype(float), scheme)          # (nu, L)
    v = lattice.mod_coarse(V @ A.T, scheme)                      # (nu, na)
    labels = np.mod(np.rint(v).astype(np.int64), p)
    got = g_inv[labels]
    want = np.mod(U @ np.mod(A, p).T, p)
    return int(np.count_nonzero(got != want)), got.size


def check_modulo_identity(g_hook=None) -> str:
    bad = total = 0
    for p in (2, 3, 5, 7):
        g = g_hook(p) if g_hook else None
        for L in (1, 2, 3):
            f, t = modulo_identity_failures(p, L, g)
            bad += f
            total += t
    if bad:
        raise AssertionError(f"{bad} of {total} cases violate the identity")
    return f"{total} cases"


def brute_force_min(gram: coeffopt.GramFactor, p: int | None, box: int = 20):
    """Exhaustive min of a^T G a over 0 < ||a||_inf <= box (test oracle, L <= 3)."""
    L = gram.h.size
    rng = np.arange(-box, box + 1)
    grid = np.stack(np.meshgrid(*([rng] * L), indexing="ij"), axis=-1).reshape(-1, L)
    grid = grid[np.any(grid != 0, axis=1)]
    if p is not None:
        grid = grid[np.any(np.mod(grid, p) != 0, axis=1)]
    vals = gram.norm_sq(grid)
    i = int(np.argmin(vals))
    return grid[i], float(vals[i])


def check_shortest_vector(instances: int = 60, seed: int = 0) -> str:
    rng = np.random.default_rng(seed)
    for t in range(instances):
        L = 1 + t % 3
        h = rng.normal(size=L) * 1.5
        snr = 10 ** (rng.choice([5.0, 15.0, 25.0]) / 10)
        gram = coeffopt.gram_factor(h, snr)
        a = coeffopt.shortest_vector(gram, 7)
        _, best = brute_force_min(gram, 7, box=20 if L < 3 else 12)
        got = float(gram.norm_sq(a))
        if not math.isclose(got, best, rel_tol=1e-9):
            raise AssertionError(f"h={h.tolist()}: enumeration {got} vs brute force {best}")
    return f"{instances} instances"


def check_pipeline(samples: int = 200_000, seed: int = 0) -> str:
    h = np.array([1.0, 0.75, -math.sqrt(2.0)])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in (7, 251):
        for snr_db in (10.0, 20.0):
            snr = 10 ** (snr_db / 10)
            eq = coeffopt.best_equation(h, snr, p)
            scheme = ModulationScheme.from_snr(snr, p)
            c = rng.integers(0, p, size=(3, samples))
            run = simulate_pipeline(c, h, eq.a, eq.alpha, scheme, rng)
            tv = total_variation(empirical_pmf(run.noise, p), exact_noise_pmf(h, eq.a, eq.alpha, scheme))
            worst = max(worst, tv)
    if worst >= 2e-2:
        raise AssertionError(f"total variation {worst:.4f}")
    return f"max TV {worst:.4f} at {samples} symbols"


CHECKS = (
    ("modulo_identity", check_modulo_identity),
    ("shortest_vector_oracle", check_shortest_vector),
    ("pipeline_vs_model", check_pipeline),
)


def run_selftest(g_hook=None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            detail = fn(g_hook) if fn is check_modulo_identity else fn()
            ok = True
        except AssertionError as exc:
            detail, ok = str(exc), False
        results.append(CheckResult(name, ok, time.perf_counter() - t0, detail))
    return results
