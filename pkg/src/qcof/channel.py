"""Transmit pipeline, real Gaussian MAC, quantized receiver and the
equivalent additive-noise channel over Z_p.

The effective noise of the quantized receiver is
``z = M^-1([Q(eps)] mod kpZ)`` with ``eps = sum_l (alpha h_l - a_l) x_l + alpha z``.
Two pmf models are provided: :func:`effective_noise_pmf` treats ``eps`` as
Gaussian, :func:`exact_noise_pmf` uses the uniform-plus-Gaussian law of
``eps`` implied by dithering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import ndtr

from . import lattice
from .lattice import ModulationScheme

PMF_TAIL = 1e-15


@dataclass(frozen=True)
class MacChannel:
    h: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if h.ndim != 1 or h.size < 1 or not np.all(np.isfinite(h)):
            raise ValueError("h must be a finite, nonempty 1-D vector")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def L(self) -> int:
        return self.h.size


@dataclass(frozen=True, eq=False)
class NoisePmf:
    """pmf of the effective noise, indexed by the integer label of Z_p."""

    probs: np.ndarray
    sigma_eps: float = float("nan")

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise ValueError("probs must be a vector of length p")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def p(self) -> int:
        return self.probs.size

    def shifted(self, u) -> np.ndarray:
        """Likelihoods P(u | c = x) = P(z = u - x) for every x, per observation.

        Returns an array of shape ``(len(u), p)``.
        """
        u = np.asarray(u, dtype=np.int64)
        x = np.arange(self.p)
        return self.probs[np.mod(u[..., None] - x, self.p)]

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.p, size=size, p=self.probs)


def _normalized(probs) -> np.ndarray:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return probs / probs.sum()


def point_mass_pmf(p: int) -> NoisePmf:
    probs = np.zeros(p)
    probs[0] = 1.0
    return NoisePmf(probs, 0.0)


def uniform_pmf(p: int) -> NoisePmf:
    return NoisePmf(np.full(p, 1.0 / p), float("inf"))


@dataclass(frozen=True)
class DitherSequence:
    """i.i.d. Uniform(V_s) dithers, regenerable from ``seed`` at the receiver."""

    d: np.ndarray
    seed: int | None = None

    @classmethod
    def generate(cls, L: int, n: int, scheme: ModulationScheme, seed: int) -> DitherSequence:
        rng = np.random.Generator(np.random.Philox(seed))
        lo, hi = scheme.voronoi()
        d = rng.uniform(lo, hi, size=(L, n))
        # uniform() may return hi on rounding; keep the interval half-open
        d = np.where(d >= hi, lo, d)
        return cls(d, seed)

    @classmethod
    def zeros(cls, L: int, n: int) -> DitherSequence:
        return cls(np.zeros((L, n)), None)


def transmit(codeword, dither, scheme: ModulationScheme) -> np.ndarray:
    """Channel input x = [M(c) + d] mod kpZ (elementwise)."""
    codeword = np.asarray(codeword)
    dither = np.asarray(dither, dtype=float)
    if codeword.shape != dither.shape:
        raise ValueError(f"codeword {codeword.shape} and dither {dither.shape} differ")
    return lattice.mod_coarse(lattice.modulate(codeword, scheme) + dither, scheme)


def mac_output(x, channel: MacChannel, rng: np.random.Generator | None) -> np.ndarray:
    """y = sum_l h_l x_l + z with unit-variance Gaussian z; ``rng=None`` disables noise."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] != channel.L:
        raise ValueError(f"x has {x.shape[0]} rows, channel has L={channel.L}")
    y = channel.h @ x
    if rng is not None:
        y = y + rng.standard_normal(y.shape)
    return y


def receiver_front_end(y, dithers, a, alpha: float, scheme: ModulationScheme) -> np.ndarray:
    """Quantized observation u = M^-1([Q(alpha y - sum_l a_l d_l)] mod kpZ)."""
    a = np.asarray(a, dtype=float)
    d = np.atleast_2d(np.asarray(dithers, dtype=float))
    if d.shape[0] != a.size:
        raise ValueError("need one dither row per coefficient")
    return lattice.sawtooth_front_end(alpha * np.asarray(y, dtype=float) - a @ d, scheme)


def noise_variance(h, a, alpha: float, snr: float) -> float:
    """Effective noise variance SNR * ||alpha h - a||^2 + alpha^2."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    h = np.asarray(h, dtype=float)
    a = np.asarray(a, dtype=float)
    return float(snr * np.sum((alpha * h - a) ** 2) + alpha ** 2)


def _folded_cell_mass(sigma: float, scheme: ModulationScheme) -> np.ndarray:
    """P(Q(eps)/k = n mod p) for eps ~ N(0, sigma^2), by summing Gaussian cell masses."""
    p, k = scheme.p, scheme.kappa
    s = sigma / k  # in units of the fine lattice
    # ~8.3 sigma carries all but 1e-16 of the mass; +1 cell covers the rounding
    nmax = int(math.ceil(8.3 * s)) + 1
    n = np.arange(-nmax, nmax + 1)
    lo = (n - 0.5) / s
    hi = (n + 0.5) / s
    # upper-tail form keeps precision in the right half, lower-tail in the left
    right = n > 0
    mass = np.where(
        right,
        ndtr(-lo) - ndtr(-hi),
        ndtr(hi) - ndtr(lo),
    )
    mass = np.where(mass < PMF_TAIL * 1e-3, 0.0, mass)
    return np.bincount(np.mod(n, p), weights=mass, minlength=p)


def effective_noise_pmf(sigma_eps: float, scheme: ModulationScheme) -> NoisePmf:
    """pmf of the effective noise when eps ~ N(0, sigma_eps^2)."""
    if not sigma_eps > 0:
        raise ValueError("sigma_eps must be positive")
    probs = _folded_cell_mass(float(sigma_eps), scheme)
    return NoisePmf(_normalized(probs), float(sigma_eps))


def uniform_widths(h, a, alpha: float, snr: float) -> np.ndarray:
    """Half-widths sqrt(3 SNR)|alpha h_l - a_l| of the non-integer error terms."""
    return math.sqrt(3.0 * snr) * np.abs(alpha * np.asarray(h, float) - np.asarray(a, float))


def _fourier_cell_pmf(widths, alpha: float, scheme: ModulationScheme) -> np.ndarray:
    """Cell pmf of eps = sum U(-w_l, w_l) + N(0, alpha^2) through its Fourier series.

    Folding modulo kpZ turns the density into a Fourier series with
    coefficients given by the characteristic function at w_m = 2 pi m / (kp);
    integrating over a cell of width k multiplies by sinc(m/p).
    """
    p, T = scheme.p, scheme.period
    acc = np.zeros(p)
    chunk = 4096
    start = 1
    while True:
        m = np.arange(start, start + chunk)
        w = 2.0 * np.pi * m / T
        phi = np.exp(-0.5 * (alpha * w) ** 2) * np.sinc(m / p)
        for wl in widths:
            phi = phi * np.sinc(w * wl / np.pi)
        acc += np.bincount(m % p, weights=phi, minlength=p)
        # every factor of |phi| is bounded by a decreasing envelope in m
        m_end = start + chunk
        w_end = 2.0 * np.pi * m_end / T
        tail = math.exp(-0.5 * (alpha * w_end) ** 2) * min(1.0, p / (np.pi * m_end))
        for wl in widths:
            tail *= min(1.0, 1.0 / (w_end * wl))
        if tail < 1e-18 or start > 1 << 22:
            break
        start += chunk
    r = np.arange(p)
    probs = (1.0 + 2.0 * np.cos(2.0 * np.pi * np.mod(np.outer(r, r), p) / p) @ acc) / p
    return probs


def _uniform_sum_cdf(x, widths) -> np.ndarray:
    """CDF of a sum of independent U(-w, w) variables (all w > 0)."""
    x = np.asarray(x, dtype=float)
    L = len(widths)
    scale = math.factorial(L) * np.prod(2.0 * np.asarray(widths))
    total = np.zeros_like(x)
    for signs in product((1.0, -1.0), repeat=L):
        shift = float(np.dot(signs, widths))
        total += np.prod(signs) * np.clip(x + shift, 0.0, None) ** L
    return np.clip(total / scale, 0.0, 1.0)


def _uniform_only_cell_pmf(widths, scheme: ModulationScheme) -> np.ndarray:
    p, k = scheme.p, scheme.kappa
    reach = float(np.sum(widths))
    nmax = int(math.ceil(reach / k)) + 1
    n = np.arange(-nmax, nmax + 1)
    edges = np.append((n - 0.5) * k, (nmax + 0.5) * k)
    cdf = _uniform_sum_cdf(edges, widths)
    mass = np.diff(cdf)
    return np.bincount(np.mod(n, p), weights=mass, minlength=p)


def exact_noise_pmf(h, a, alpha: float, scheme: ModulationScheme) -> NoisePmf:
    """pmf of the effective noise with the dithered (uniform) non-integer error terms."""
    snr = scheme.snr()
    widths = uniform_widths(h, a, alpha, snr)
    sigma = math.sqrt(noise_variance(h, a, alpha, snr))
    top = widths.max(initial=0.0)
    widths = widths[widths > 1e-12 * max(top, scheme.kappa)]
    if alpha != 0:
        if widths.size == 0:
            return effective_noise_pmf(abs(alpha), scheme)
        probs = _fourier_cell_pmf(widths, abs(alpha), scheme)
    else:
        if widths.size == 0:
            return point_mass_pmf(scheme.p)
        probs = _uniform_only_cell_pmf(widths, scheme)
    return NoisePmf(_normalized(probs), sigma)


@dataclass
class PipelineRun:
    """Outcome of one pass through transmit, MAC and quantized receiver."""

    u: np.ndarray
    combination: np.ndarray
    noise: np.ndarray
    x: np.ndarray = field(repr=False)


def simulate_pipeline(codewords, h, a, alpha: float, scheme: ModulationScheme,
                      rng: np.random.Generator, dither_seed: int | None = None,
                      noiseless: bool = False) -> PipelineRun:
    """Push ``codewords`` (L x n labels) through the full quantized CoF link.

    ``noise`` is the realized discrete noise u - sum q_l c_l over Z_p.
    """
    c = np.atleast_2d(np.asarray(codewords, dtype=np.int64))
    L, n = c.shape
    if dither_seed is None:
        dither_seed = int(rng.integers(0, 2**63 - 1))
    dither = DitherSequence.generate(L, n, scheme, dither_seed)
    x = transmit(c, dither.d, scheme)
    y = mac_output(x, MacChannel(h), None if noiseless else rng)
    u = receiver_front_end(y, dither.d, a, alpha, scheme)
    q = np.mod(np.asarray(a, dtype=np.int64), scheme.p)
    comb = np.mod(q @ c, scheme.p)
    return PipelineRun(u=u, combination=comb, noise=np.mod(u - comb, scheme.p), x=x)


def empirical_pmf(samples, p: int) -> np.ndarray:
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=p)
    return counts / counts.sum()


def total_variation(p1, p2) -> float:
    a = p1.probs if isinstance(p1, NoisePmf) else np.asarray(p1)
    b = p2.probs if isinstance(p2, NoisePmf) else np.asarray(p2)
    return 0.5 * float(np.abs(a - b).sum())
