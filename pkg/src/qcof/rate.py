"""Computation rates of quantized CoF and the Wyner-model rates built on them.

All rates are in bits per real channel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coeffopt
from .channel import NoisePmf, effective_noise_pmf, exact_noise_pmf
from .coeffopt import Equation
from .lattice import ModulationScheme

NOISE_MODELS = ("gauss", "exact")


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class RatePoint:
    snr_db: float
    p: int
    rate_bits: float
    equation: Equation
    noise_entropy_bits: float


def entropy_bits(pmf) -> float:
    probs = pmf.probs if isinstance(pmf, NoisePmf) else np.asarray(pmf, dtype=float)
    nz = probs[probs > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def equation_noise_pmf(h, eq: Equation, scheme: ModulationScheme, noise_model: str = "gauss") -> NoisePmf:
    if noise_model == "gauss":
        return effective_noise_pmf(math.sqrt(eq.sigma_eps_sq), scheme)
    if noise_model == "exact":
        return exact_noise_pmf(h, eq.a, eq.alpha, scheme)
    raise ValueError(f"unknown noise model {noise_model!r}")


def rate_for_equation(h, eq: Equation, snr: float, p: int, noise_model: str = "gauss") -> float:
    scheme = ModulationScheme.from_snr(snr, p)
    H = entropy_bits(equation_noise_pmf(h, eq, scheme, noise_model))
    return max(0.0, math.log2(p) - H)


def computation_rate(h, snr: float, p: int, noise_model: str = "gauss") -> RatePoint:
    """log2 p - H(z) for the variance-minimizing equation at channel ``h``.

    ``snr`` is linear.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    eq = coeffopt.best_equation(h, snr, p)
    scheme = ModulationScheme.from_snr(snr, p)
    H = entropy_bits(equation_noise_pmf(h, eq, scheme, noise_model))
    return RatePoint(
        snr_db=10.0 * math.log10(snr),
        p=p,
        rate_bits=max(0.0, math.log2(p) - H),
        equation=eq,
        noise_entropy_bits=H,
    )


def cof_benchmark_rate(h, snr: float) -> float:
    """Unquantized lattice CoF rate 1/2 log2+(SNR / min_a a^T G a)."""
    gram = coeffopt.gram_factor(h, snr)
    a = coeffopt.shortest_vector(gram, None)
    return max(0.0, 0.5 * math.log2(snr / float(gram.norm_sq(a))))


def wyner_channel(gamma: float) -> np.ndarray:
    return np.array([gamma, 1.0, gamma])


def pa_channels(gamma: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Effective local channels (odd relay, even relay) under power split beta."""
    sb, s2b = math.sqrt(beta), math.sqrt(2.0 - beta)
    h_odd = np.array([gamma * s2b, sb, gamma * s2b])
    h_even = np.array([gamma * sb, s2b, gamma * sb])
    return h_odd, h_even


def wyner_rate(gamma: float, snr: float, p: int, r0: float, noise_model: str = "gauss") -> float:
    """min(max_a R(h, a), R0) for the symmetric local channel (gamma, 1, gamma)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if r0 <= 0:
        return 0.0
    return min(computation_rate(wyner_channel(gamma), snr, p, noise_model).rate_bits, r0)


def _pa_objective(gamma, beta, snr, p, noise_model, cache):
    key = round(beta, 12)
    if key not in cache:
        h_odd, h_even = pa_channels(gamma, beta)
        r_odd = computation_rate(h_odd, snr, p, noise_model).rate_bits
        r_even = computation_rate(h_even, snr, p, noise_model).rate_bits
        cache[key] = min(r_odd, r_even)
    return cache[key]


def pa_wyner_rate(gamma: float, snr: float, p: int, r0: float,
                  noise_model: str = "gauss", step: float = 0.01,
                  refine: float = 1e-3) -> tuple[float, float]:
    """Rate with alternating power split, maximized over beta in [0, 1].

    Coarse grid of ``step``, then a local grid of ``refine`` around the best
    coarse point. Returns ``(rate, beta_star)``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    cache: dict = {}
    grid = np.round(np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1), 12)
    vals = [_pa_objective(gamma, b, snr, p, noise_model, cache) for b in grid]
    # ties go to the largest beta, i.e. toward equal power
    best = max(range(len(grid)), key=lambda t: (vals[t], grid[t]))
    lo, hi = max(0.0, grid[best] - step), min(1.0, grid[best] + step)
    fine = np.round(np.arange(lo, hi + refine / 2, refine), 12)
    fine = fine[(fine >= 0) & (fine <= 1)]
    for b in fine:
        _pa_objective(gamma, b, snr, p, noise_model, cache)
    beta_star, r_prime = max(cache.items(), key=lambda kv: (kv[1], kv[0]))
    return min(r_prime, r0) if r0 > 0 else 0.0, float(beta_star)


def equivalent_snr_db(h, p: int, sigma_over_kappa: float, lo_db: float = -20.0,
                      hi_db: float = 120.0, tol_db: float = 1e-4) -> float:
    """SNR (dB) at which channel ``h``'s best equation has sigma_eps / kappa = ``sigma_over_kappa``.

    The ratio min_a a^T G a / SNR decreases with SNR, so bisection applies.
    Returns ``inf`` if even ``hi_db`` is not enough.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))

    def ratio(snr_db):
        snr = db_to_linear(snr_db)
        eq = coeffopt.best_equation(h, snr, p)
        return math.sqrt(eq.sigma_eps_sq) / ModulationScheme.from_snr(snr, p).kappa

    if ratio(hi_db) > sigma_over_kappa:
        return math.inf
    if ratio(lo_db) <= sigma_over_kappa:
        return lo_db
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        if ratio(mid) > sigma_over_kappa:
            lo_db = mid
        else:
            hi_db = mid
    return hi_db
