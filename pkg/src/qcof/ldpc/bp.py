"""Sum-product decoding of Z_p LDPC codes over the additive channel u = c + z."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..channel import NoisePmf
from ..field import _inverse_table
from .code import LiftedCode

DEFAULT_MAX_ITER = 200
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class DecodeResult:
    codeword: np.ndarray
    success: bool
    iterations: int
    unsatisfied: int


class _Graph:
    """Index bookkeeping shared by every decode on one code."""

    def __init__(self, code: LiftedCode):
        p = code.p
        order = np.argsort(code.edge_check, kind="stable")
        self.check = code.edge_check[order]
        self.var = code.edge_var[order]
        coef = code.edge_coef[order] % p
        E = coef.size
        t = np.arange(p)
        inv = _inverse_table(p)[coef]
        # var -> check: P_t[e, t] = m[e, coef^-1 t]
        self.to_check = (inv[:, None] * t[None, :]) % p
        # check -> var: out[e, x] = S[e, -coef x]
        self.to_var = (-coef[:, None] * t[None, :]) % p
        self.incidence = sp.csr_matrix(
            (np.ones(E), (self.var, np.arange(E))), shape=(code.n, E)
        )
        deg = np.bincount(self.check, minlength=code.n_checks)
        start = np.concatenate([[0], np.cumsum(deg)])
        self.groups = []
        for d in np.unique(deg[deg > 0]):
            rows = np.flatnonzero(deg == d)
            self.groups.append(start[rows][:, None] + np.arange(d)[None, :])
        self.p = p
        self.n = code.n
        self.E = E


@lru_cache(maxsize=16)
def _graph(code: LiftedCode) -> _Graph:
    return _Graph(code)


def _check_update(g: _Graph, msg: np.ndarray) -> np.ndarray:
    """Extrinsic check-to-variable pmfs from variable-to-check pmfs (both in x)."""
    pt = np.take_along_axis(msg, g.to_check, axis=1)
    spec = np.fft.fft(pt, axis=1)
    out_spec = np.empty_like(spec)
    for idx in g.groups:
        block = spec[idx]  # (checks, d, p)
        ones = np.ones_like(block[:, :1])
        pre = np.cumprod(np.concatenate([ones, block[:, :-1]], axis=1), axis=1)
        suf = np.cumprod(np.concatenate([ones, block[:, :0:-1]], axis=1), axis=1)[:, ::-1]
        out_spec[idx] = pre * suf
    S = np.fft.ifft(out_spec, axis=1).real
    out = np.take_along_axis(S, g.to_var, axis=1)
    np.maximum(out, 0.0, out=out)
    out /= out.sum(axis=1, keepdims=True)
    return out


def _channel_log_likelihoods(u, pmf: NoisePmf) -> np.ndarray:
    return np.log(np.maximum(pmf.shifted(u), _LOG_FLOOR))


def _iterate(g: _Graph, chan_ll: np.ndarray, max_iter: int, stop=None):
    ext_log = chan_ll[g.var]
    log_r = np.zeros((g.E, g.p))
    total = chan_ll
    it = 0
    for it in range(1, max_iter + 1):
        msg = np.exp(ext_log - ext_log.max(axis=1, keepdims=True))
        msg /= msg.sum(axis=1, keepdims=True)
        log_r = np.log(np.maximum(_check_update(g, msg), _LOG_FLOOR))
        total = chan_ll + g.incidence @ log_r
        if stop is not None and stop(total):
            break
        ext_log = total[g.var] - log_r
    return total, it


def bp_decode(code: LiftedCode, u, channel_pmf: NoisePmf,
              max_iter: int = DEFAULT_MAX_ITER) -> DecodeResult:
    """Flooding sum-product decoder; stops at the first hard decision with zero syndrome."""
    if channel_pmf.p != code.p:
        raise ValueError("channel pmf and code use different fields")
    u = np.mod(np.asarray(u, dtype=np.int64), code.p)
    if u.shape != (code.n,):
        raise ValueError(f"received word must have length {code.n}")
    g = _graph(code)
    state = {}

    def stop(total):
        c = np.argmax(total, axis=1)
        state["c"] = c
        state["bad"] = int(np.count_nonzero(code.syndrome(c)))
        return state["bad"] == 0

    _, it = _iterate(g, _channel_log_likelihoods(u, channel_pmf), max_iter, stop)
    return DecodeResult(codeword=state["c"], success=state["bad"] == 0,
                        iterations=it, unsatisfied=state["bad"])


def bp_posteriors(code: LiftedCode, u, channel_pmf: NoisePmf, iterations: int) -> np.ndarray:
    """Per-symbol beliefs (n, p) after a fixed number of flooding iterations."""
    u = np.mod(np.asarray(u, dtype=np.int64), code.p)
    total, _ = _iterate(_graph(code), _channel_log_likelihoods(u, channel_pmf), iterations)
    post = np.exp(total - total.max(axis=1, keepdims=True))
    return post / post.sum(axis=1, keepdims=True)
