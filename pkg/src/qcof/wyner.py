"""Symmetric Wyner uplink with quantized CoF relays and a central processor.

User ``k`` and relay ``l`` are indexed 0..L-1; relay ``l`` hears users
``l-1, l, l+1`` (mod L) with gains ``gamma, 1, gamma``. Under power
allocation the users at even index (the odd-numbered ones when counting
from 1) transmit at ``beta P`` in even slots and ``(2 - beta) P`` in odd
slots; the other users do the opposite.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import coeffopt, rate
from .channel import (DitherSequence, MacChannel, NoisePmf, mac_output, receiver_front_end,
                      transmit)
from .coeffopt import Equation
from .field import RankDeficientError, gaussian_eliminate
from .field import rank as field_rank
from .lattice import ModulationScheme
from .ldpc.bp import bp_decode
from .ldpc.code import LiftedCode, dump_matrix, parse_matrix

log = logging.getLogger(__name__)

REPAIR_CANDIDATES = 8


@dataclass(frozen=True)
class WynerConfig:
    L: int
    gamma: float
    snr_db: float
    r0_bits: float
    p: int
    beta: float = 1.0
    code: LiftedCode | None = field(default=None, repr=False)
    seed: int = 0
    slot: int = 0
    noise_model: str = "exact"

    def __post_init__(self):
        if self.L < 3:
            raise ValueError("the 3-tap Wyner model needs L >= 3")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.code is not None and self.code.p != self.p:
            raise ValueError("code field and config p differ")

    @property
    def snr(self) -> float:
        return rate.db_to_linear(self.snr_db)

    @property
    def scheme(self) -> ModulationScheme:
        return ModulationScheme.from_snr(self.snr, self.p)


def user_amplitudes(L: int, beta: float, slot: int) -> np.ndarray:
    """sqrt of each user's power factor in ``slot``; averages to 1 over two slots."""
    low, high = math.sqrt(beta), math.sqrt(2.0 - beta)
    even_low = slot % 2 == 0
    return np.array([(low if (k % 2 == 0) == even_low else high) for k in range(L)])


def neighbours(L: int, relay: int) -> np.ndarray:
    return np.array([(relay - 1) % L, relay, (relay + 1) % L])


@dataclass(frozen=True)
class SystemPlan:
    """Local channels, chosen equations and the assembled L x L system over Z_p."""

    config: WynerConfig
    local_channels: np.ndarray          # (L, 3)
    equations: tuple[Equation, ...]

    @property
    def L(self) -> int:
        return self.config.L

    def matrix(self) -> np.ndarray:
        L, p = self.L, self.config.p
        Q = np.zeros((L, L), dtype=np.int64)
        for l, eq in enumerate(self.equations):
            for k, q in zip(neighbours(L, l), eq.q):
                Q[l, k] = (Q[l, k] + q) % p
        return Q

    def rank(self) -> int:
        return field_rank(self.matrix(), self.config.p)

    def rates(self) -> np.ndarray:
        """Computation rate (bits) of each relay's equation."""
        cfg = self.config
        return np.array([
            rate.rate_for_equation(h, eq, cfg.snr, cfg.p, "gauss")
            for h, eq in zip(self.local_channels, self.equations)
        ])


def build_system(config: WynerConfig) -> SystemPlan:
    L = config.L
    amp = user_amplitudes(L, config.beta, config.slot)
    taps = np.array([config.gamma, 1.0, config.gamma])
    channels = np.array([taps * amp[neighbours(L, l)] for l in range(L)])
    eqs = tuple(_best_equation(tuple(h), config.snr, config.p) for h in channels)
    return SystemPlan(config=config, local_channels=channels, equations=eqs)


@lru_cache(maxsize=256)
def _best_equation(h: tuple, snr: float, p: int) -> Equation:
    return coeffopt.best_equation(np.array(h), snr, p)


@lru_cache(maxsize=256)
def _candidates(h: tuple, snr: float, p: int, count: int) -> tuple[Equation, ...]:
    return tuple(coeffopt.candidate_equations(np.array(h), snr, p, count))


@dataclass(frozen=True)
class RepairResult:
    plan: SystemPlan
    full_rank: bool
    changed: tuple[int, ...]
    message: str


def _row(L, relay, eq, p):
    r = np.zeros(L, dtype=np.int64)
    for k, q in zip(neighbours(L, relay), eq.q):
        r[k] = (r[k] + q) % p
    return r


def rank_repair(plan: SystemPlan, candidates: int = REPAIR_CANDIDATES) -> RepairResult:
    """Swap equations of relays whose rows are dependent for their next-best ones.

    Relays are visited in index order; a relay keeps its equation when its
    row raises the rank of the rows accepted so far, otherwise it takes the
    first candidate (in nondecreasing noise variance) that does.
    """
    cfg = plan.config
    L, p = cfg.L, cfg.p
    if plan.rank() == L:
        return RepairResult(plan, True, (), "already full rank")
    rows: list[np.ndarray] = []
    eqs = list(plan.equations)
    changed = []
    for l in range(L):
        row = _row(L, l, eqs[l], p)
        if field_rank(np.array(rows + [row]), p) > len(rows):
            rows.append(row)
            continue
        for cand in _candidates(tuple(plan.local_channels[l]), cfg.snr, p, candidates):
            row = _row(L, l, cand, p)
            if field_rank(np.array(rows + [row]), p) > len(rows):
                log.info("relay %d: a=%s -> %s, sigma^2 %.4g -> %.4g", l, eqs[l].a.tolist(),
                         cand.a.tolist(), eqs[l].sigma_eps_sq, cand.sigma_eps_sq)
                eqs[l] = cand
                changed.append(l)
                rows.append(row)
                break
        else:
            msg = f"relay {l}: no candidate among {candidates} restores rank"
            log.info(msg)
            return RepairResult(plan, False, (), msg)
    new = replace(plan, equations=tuple(eqs))
    return RepairResult(new, True, tuple(changed), f"repaired relays {changed}")


# relay -> central processor messages: the ldpc row format with a q-vector header


def encode_relay_message(relay: int, q_row, combination, p: int) -> str:
    combination = np.asarray(combination, dtype=np.int64)
    nz = np.flatnonzero(combination)
    return dump_matrix(1, combination.size, (np.zeros(nz.size, dtype=np.int64), nz, combination[nz]),
                       (p, relay, len(q_row), combination.size),
                       ["q " + " ".join(str(int(v)) for v in q_row)])


def decode_relay_message(text: str):
    header, extra, _, cols, body = parse_matrix(text)
    p, relay = header[0], header[1]
    q = next(np.array([int(v) for v in ln.split()[1:]], dtype=np.int64)
             for ln in extra if ln.startswith("q "))
    msg = np.zeros(cols, dtype=np.int64)
    msg[body[:, 1]] = body[:, 2]
    return relay, q, msg, p


def central_processor(wire: list[str]):
    """Stack forwarded rows and solve for the users' messages.

    Returns ``(messages or None, rank)``.
    """
    parsed = sorted(decode_relay_message(t) for t in wire)
    p = parsed[0][3]
    Q = np.array([q for _, q, _, _ in parsed])
    M = np.array([m for _, _, m, _ in parsed])
    try:
        return gaussian_eliminate(Q, M, p), Q.shape[0]
    except RankDeficientError as exc:
        return None, exc.rank


@dataclass(frozen=True)
class FrameResult:
    relay_decoded: tuple[bool, ...]
    relay_correct: tuple[bool, ...]
    rank: int
    recovered: np.ndarray | None
    equations: tuple[Equation, ...]
    success: bool


@lru_cache(maxsize=256)
def _relay_pmf(h: tuple, a: tuple, alpha: float, sigma_sq: float, snr: float, p: int,
               noise_model: str) -> NoisePmf:
    eq = Equation(a=np.array(a), alpha=alpha, q=np.mod(np.array(a), p), sigma_eps_sq=sigma_sq, p=p)
    return rate.equation_noise_pmf(np.array(h), eq, ModulationScheme.from_snr(snr, p), noise_model)


def run_frame(config: WynerConfig, plan: SystemPlan | None = None, frame: int = 0,
              corrupt_relay: int | None = None, max_iter: int = 200) -> FrameResult:
    """Simulate one frame end to end; deterministic in (config.seed, frame).

    ``corrupt_relay`` perturbs that relay's forwarded combination (fault
    injection).
    """
    code = config.code
    if code is None:
        raise ValueError("config.code is required to simulate frames")
    if code.rate_bits() > config.r0_bits + 1e-12:
        raise ValueError("code rate exceeds the backhaul rate R0")
    if plan is None:
        plan = build_system(config)
        if plan.rank() < config.L:
            plan = rank_repair(plan).plan
    p, L, scheme = config.p, config.L, config.scheme
    if code.rate_bits() > plan.rates().min():
        warnings.warn("code rate exceeds the smallest relay computation rate", stacklevel=2)

    ss = np.random.SeedSequence([config.seed, frame, config.slot])
    msg_seed, dither_seed, noise_seed = ss.spawn(3)
    rng = np.random.default_rng(msg_seed)
    W = rng.integers(0, p, size=(L, code.k))
    C = np.array([code.encode(w) for w in W])
    dither = DitherSequence.generate(L, code.n, scheme, int(dither_seed.generate_state(1)[0]))
    X = transmit(C, dither.d, scheme)
    noise_rng = np.random.default_rng(noise_seed)

    wire, decoded, correct = [], [], []
    for l, (h, eq) in enumerate(zip(plan.local_channels, plan.equations)):
        users = neighbours(L, l)
        y = mac_output(X[users], MacChannel(h), noise_rng)
        u = receiver_front_end(y, dither.d[users], eq.a, eq.alpha, scheme)
        pmf = _relay_pmf(tuple(h), tuple(eq.a.tolist()), eq.alpha, eq.sigma_eps_sq,
                         config.snr, p, config.noise_model)
        res = bp_decode(code, u, pmf, max_iter=max_iter)
        truth = np.mod(eq.q @ C[users], p)
        decoded.append(res.success)
        correct.append(bool(np.array_equal(res.codeword, truth)))
        combo = code.message_of(res.codeword)
        if corrupt_relay == l:
            combo = combo.copy()
            combo[0] = (combo[0] + 1) % p
        wire.append(encode_relay_message(l, _row(L, l, eq, p), combo, p))

    recovered, rk = central_processor(wire)
    success = recovered is not None and np.array_equal(recovered, W)
    return FrameResult(relay_decoded=tuple(decoded), relay_correct=tuple(correct), rank=rk,
                       recovered=recovered, equations=plan.equations, success=bool(success))


@dataclass(frozen=True)
class FerEstimate:
    errors: int
    frames: int

    @property
    def fer(self) -> float:
        return self.errors / self.frames if self.frames else float("nan")


def simulate_fer(config: WynerConfig, max_frames: int, max_errors: int = 50) -> FerEstimate:
    """Frame error rate, stopping at ``max_errors`` errors or ``max_frames`` frames.

    Slots alternate frame by frame, so power allocation is exercised in both roles.
    """
    plans = {}
    errors = frames = 0
    while frames < max_frames and errors < max_errors:
        slot = frames % 2
        if slot not in plans:
            cfg = replace(config, slot=slot)
            plan = build_system(cfg)
            if plan.rank() < cfg.L:
                plan = rank_repair(plan).plan
            plans[slot] = (cfg, plan)
        cfg, plan = plans[slot]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_frame(cfg, plan, frame=frames)
        errors += not res.success
        frames += 1
    return FerEstimate(errors, frames)


SWEEP_COLUMNS = ("gamma", "snr_db", "p", "r0", "beta_star", "rate_qcof", "rate_qcof_pa",
                 "rate_cof", "fer", "frames", "seed")


def sweep_point(gamma: float, snr_db: float, p: int, r0: float, seed: int,
                pa: bool = True, noise_model: str = "gauss", code: LiftedCode | None = None,
                L: int = 6, frames: int = 0) -> dict:
    """One row of the sweep table (FER columns blank unless ``frames`` and ``code``)."""
    snr = rate.db_to_linear(snr_db)
    row = {"gamma": gamma, "snr_db": snr_db, "p": p, "r0": r0, "seed": seed}
    row["rate_qcof"] = rate.wyner_rate(gamma, snr, p, r0, noise_model)
    if pa:
        row["rate_qcof_pa"], row["beta_star"] = rate.pa_wyner_rate(gamma, snr, p, r0, noise_model)
    else:
        row["rate_qcof_pa"], row["beta_star"] = float("nan"), float("nan")
    row["rate_cof"] = min(rate.cof_benchmark_rate(rate.wyner_channel(gamma), snr), r0)
    row["fer"], row["frames"] = float("nan"), 0
    if frames and code is not None:
        cfg = WynerConfig(L=L, gamma=gamma, snr_db=snr_db, r0_bits=r0, p=p, code=code, seed=seed)
        est = simulate_fer(cfg, frames)
        row["fer"], row["frames"] = est.fer, est.frames
    return row


def sweep(gammas, snr_db: float, p: int, r0: float, seed: int, **kwargs) -> list[dict]:
    """Rows for every gamma in ``gammas``; per-point seeds derive from ``seed``."""
    gammas = list(gammas)
    if not gammas:
        raise ValueError("empty gamma grid")
    return [sweep_point(g, snr_db, p, r0, seed=_derived_seed(seed, i), **kwargs)
            for i, g in enumerate(gammas)]


def _derived_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def decodable_pa_rate(gamma: float, snr_db: float, p: int, r0: float, L: int = 6,
                      step: float = 0.01) -> tuple[float, float]:
    """Power-allocated rate restricted to splits where both slots give a rank-L system.

    The system rate at a split is the smallest relay computation rate over
    both slots after rank repair. Returns ``(rate, beta)``.
    """
    best = (0.0, 1.0)
    for beta in np.round(np.arange(0.0, 1.0 + step / 2, step), 12):
        worst = math.inf
        for slot in (0, 1):
            cfg = WynerConfig(L=L, gamma=gamma, snr_db=snr_db, r0_bits=r0, p=p,
                              beta=float(beta), slot=slot)
            fixed = rank_repair(build_system(cfg))
            if not fixed.full_rank:
                worst = -math.inf
                break
            worst = min(worst, float(fixed.plan.rates().min()))
        cand = (min(worst, r0), float(beta))
        if cand >= best:
            best = cand
    return best
