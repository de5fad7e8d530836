"""One-dimensional nested lattices kZ (fine) and kpZ (coarse).

The fine lattice is the quantization grid, the coarse lattice sets the
shaping region V_s = [-kp/2, kp/2). Every function here is vectorized over
numpy arrays. Cell boundaries round toward +inf so that the direct
quantize-then-reduce path and the sawtooth-then-quantize path agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import PrimeField


@dataclass(frozen=True)
class ModulationScheme:
    p: int
    kappa: float

    def __post_init__(self):
        PrimeField(self.p)  # validates p
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")

    @classmethod
    def from_snr(cls, snr: float, p: int) -> ModulationScheme:
        """Scheme whose uniform-over-V_s input has second moment ``snr`` (linear)."""
        return cls(p, math.sqrt(12.0 * snr) / p)

    @classmethod
    def from_snr_db(cls, snr_db: float, p: int) -> ModulationScheme:
        return cls.from_snr(10.0 ** (snr_db / 10.0), p)

    @property
    def period(self) -> float:
        return self.kappa * self.p

    def snr(self) -> float:
        return self.kappa ** 2 * self.p ** 2 / 12.0

    def voronoi(self) -> tuple[float, float]:
        half = self.period / 2.0
        return -half, half

    def constellation(self) -> np.ndarray:
        """The p points of kZ inside V_s, sorted."""
        return np.sort(modulate(np.arange(self.p), self))


def _round_half_up(t):
    return np.floor(np.asarray(t, dtype=float) + 0.5)


def quantize_coarse(x, scheme: ModulationScheme):
    """Nearest point of the fine lattice kZ (ties go up)."""
    k = scheme.kappa
    return k * _round_half_up(np.asarray(x, dtype=float) / k)


def mod_coarse(x, scheme: ModulationScheme):
    """Reduce ``x`` modulo kpZ into V_s = [-kp/2, kp/2)."""
    T = scheme.period
    x = np.asarray(x, dtype=float)
    r = x - T * _round_half_up(x / T)
    # rounding in x/T can leave r a hair off the half-open interval; a value
    # within float noise of the upper edge (a lattice point when p is even) wraps
    edge = T / 2 * (1 - 1e-12) - 1e-12 * np.abs(x)
    r = np.where(r < -T / 2 - 1e-12 * np.abs(x), r + T, r)
    return np.where(r >= edge, r - T, r)


def modulate(u, scheme: ModulationScheme):
    """M(u) = [k g(u)] mod kpZ."""
    u = np.mod(np.asarray(u, dtype=np.int64), scheme.p)
    return mod_coarse(scheme.kappa * u, scheme)


def demodulate(v, scheme: ModulationScheme, atol: float = 1e-9):
    """Inverse of :func:`modulate` on the constellation.

    Raises ``ValueError`` when some ``v`` is not a constellation point.
    """
    v = np.asarray(v, dtype=float)
    t = v / scheme.kappa
    n = np.rint(t)
    lo, hi = scheme.voronoi()
    off_grid = np.abs(t - n) > atol * max(1.0, scheme.p)
    outside = (v < lo - atol * scheme.kappa) | (v >= hi - atol * scheme.kappa)
    if np.any(off_grid | outside):
        raise ValueError("value is not a point of the constellation")
    return np.mod(n.astype(np.int64), scheme.p)


def sawtooth(x, scheme: ModulationScheme):
    """Periodic sawtooth of period kp folding the real line onto V_s.

    Computed in units of k so that the fold is an integer shift of x/k.
    """
    t = np.asarray(x, dtype=float) / scheme.kappa
    p = scheme.p
    return t - p * np.floor(t / p + 0.5)


def uniform_quantizer(s, p: int):
    """p-level uniform quantizer on the folded value ``s`` (in units of k).

    Returns the level index as an element of Z_p.
    """
    return np.mod(_round_half_up(s).astype(np.int64), p)


def sawtooth_front_end(x, scheme: ModulationScheme):
    """Analog sawtooth followed by a p-level scalar quantizer.

    Same map as ``demodulate(mod_coarse(quantize_coarse(x)))`` computed the
    way an ADC-based receiver would.
    """
    return uniform_quantizer(sawtooth(x, scheme), scheme.p)


def quantize_then_reduce(x, scheme: ModulationScheme):
    """Reference composition M^-1([Q_kZ(x)] mod kpZ) working on integer labels."""
    n = _round_half_up(np.asarray(x, dtype=float) / scheme.kappa).astype(np.int64)
    return np.mod(n, scheme.p)
