"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines appear in the
"acceptance criteria" summary section. ``python tests/test_acceptance.py``
runs the same checks and prints the lines directly.
"""

import math
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_RESULTS, brute_force_min  # noqa: E402

from qcof import cli  # noqa: E402
from qcof.channel import empirical_pmf, exact_noise_pmf, simulate_pipeline, total_variation  # noqa: E402
from qcof.coeffopt import best_equation, gram_factor  # noqa: E402
from qcof.lattice import ModulationScheme  # noqa: E402
from qcof.ldpc import (LiftedCode, bp_decode, bp_posteriors, capacity_sigma, exit_threshold,  # noqa: E402
                       ira_base, ira_family, lift, lift_for_length, ra_base)
from qcof.ldpc.exit import default_channel_family  # noqa: E402
from qcof.channel import NoisePmf, point_mass_pmf  # noqa: E402
from qcof.rate import (computation_rate, cof_benchmark_rate, db_to_linear, pa_wyner_rate,  # noqa: E402
                       wyner_rate)
from qcof.selftest import modulo_identity_failures  # noqa: E402
from qcof.wyner import WynerConfig, build_system, run_frame  # noqa: E402

REF_H = np.array([1.0, 0.75, -math.sqrt(2.0)])


def record(name, checks, detail, elapsed=None, limit=None):
    ok = all(checks)
    if limit is not None:
        detail += f"; {elapsed:.1f}s (limit {limit}s)"
        ok = ok and elapsed < limit
    ACCEPTANCE_RESULTS.append((name, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def test_1_modulo_identity_exhaustive():
    t0 = time.perf_counter()
    bad = total = 0
    for p in (2, 3, 5, 7):
        for L in (1, 2, 3):
            f, t = modulo_identity_failures(p, L)
            bad += f
            total += t
    assert record("1 modulo identity exhaustive", [bad == 0], f"{bad} failures in {total} cases",
                  time.perf_counter() - t0, 30)


def test_2_pipeline_matches_model():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    tvs = {}
    for p in (7, 251):
        for snr_db in (10.0, 20.0):
            snr = db_to_linear(snr_db)
            eq = best_equation(REF_H, snr, p)
            scheme = ModulationScheme.from_snr(snr, p)
            c = rng.integers(0, p, size=(3, 10**6))
            run = simulate_pipeline(c, REF_H, eq.a, eq.alpha, scheme, rng)
            tvs[(p, snr_db)] = total_variation(empirical_pmf(run.noise, p),
                                               exact_noise_pmf(REF_H, eq.a, eq.alpha, scheme))
    worst = max(tvs.values())
    assert record("2 pipeline vs model", [worst < 1e-2], f"max TV {worst:.4f} at 1e6 symbols",
                  time.perf_counter() - t0, 120)


def test_3_shortest_vector_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    agree = 0
    for t in range(200):
        h = rng.normal(size=3)
        snr = db_to_linear((5.0, 15.0, 25.0)[t % 3])
        eq = best_equation(h, snr, 7)
        _, val = brute_force_min(gram_factor(h, snr), 7, box=20)
        agree += math.isclose(eq.sigma_eps_sq, val, rel_tol=1e-9)
    assert record("3 shortest-vector oracle", [agree == 200], f"{agree}/200 agree",
                  time.perf_counter() - t0, 60)


def test_4_reference_rate_curves():
    t0 = time.perf_counter()
    grid = range(0, 65, 5)
    rates = {p: {s: computation_rate(REF_H, db_to_linear(s), p).rate_bits for s in grid}
             for p in (3, 7, 17, 251)}
    gaps = [cof_benchmark_rate(REF_H, db_to_linear(s)) - rates[251][s] for s in grid if s >= 25]
    a = all(0.15 <= g <= 0.35 for g in gaps)
    sat = {p: math.log2(p) - rates[p][60] for p in (3, 7, 17)}
    # p = 251 only reaches log2(251) far beyond the plotted range
    sat[251] = math.log2(251) - computation_rate(REF_H, db_to_linear(120), 251).rate_bits
    b = all(v <= 0.02 for v in sat.values())
    hi = [s for s in grid if s >= 50]
    c = all(rates[251][s] >= rates[17][s] >= rates[7][s] >= rates[3][s] for s in hi)
    detail = (f"(a) p=251 gap {min(gaps):.3f}..{max(gaps):.3f} bits at >=25 dB; "
              f"(b) saturation shortfall {max(sat.values()):.4f} bits (p<=17 at 60 dB, p=251 at 120 dB); "
              f"(c) ordering at >=50 dB {'holds' if c else 'broken'}")
    assert record("4 reference rate curves", [a, b, c], detail, time.perf_counter() - t0, 120)


def test_5_wyner_rate_curves():
    t0 = time.perf_counter()
    snr = db_to_linear(15)
    gammas = np.round(np.linspace(0, 1, 11), 10)
    plain = [wyner_rate(g, snr, 251, 2.0) for g in gammas]
    pa = [pa_wyner_rate(g, snr, 251, 2.0)[0] for g in gammas]
    a = max(plain + pa) <= 2.0
    b = math.isclose(plain[0], min(computation_rate([1.0], snr, 251).rate_bits, 2.0))
    mid = [q - r for g, q, r in zip(gammas, pa, plain) if 0.3 < g < 0.8]
    c = all(q >= r - 1e-12 for q, r in zip(pa, plain)) and max(mid) > 1e-6
    detail = (f"(a) max rate {max(plain + pa):.3f}; (b) gamma=0 rate {plain[0]:.4f}; "
              f"(c) largest mid-gamma PA gain {max(mid):.3f} bits")
    assert record("5 wyner rate curves", [a, b, c], detail, time.perf_counter() - t0, 300)


def test_6_ldpc_functional():
    t0 = time.perf_counter()
    parity_ok = True
    for p in (3, 7, 251):
        for base in (ra_base(Fraction(1, 2)), ira_base()):
            code = lift(base, 32, p, seed=p)
            rng = np.random.default_rng(p)
            C = np.array([code.encode(w) for w in rng.integers(0, p, size=(1000, code.k))])
            parity_ok &= not np.any((code.H @ C.T) % p)
    # tree-shaped Tanner graph, brute-force posteriors over all codewords
    worst = 0.0
    for p in (3, 5):
        H = np.array([[1, 2, 3, 0, 0, 0], [0, 0, 1, 4, 2, 0], [0, 0, 0, 0, 3, 1]])
        code = LiftedCode.from_parity_check(H, p)
        rng = np.random.default_rng(p)
        probs = rng.dirichlet(np.ones(p))
        words = np.array([code.encode(np.array(w)) for w in np.ndindex(*([p] * code.k))])
        for _ in range(10):
            u = rng.integers(0, p, code.n)
            like = np.prod(probs[(u - words) % p], axis=1)
            want = np.stack([np.bincount(words[:, i], weights=like, minlength=p) for i in range(code.n)])
            want /= want.sum(axis=1, keepdims=True)
            got = bp_posteriors(code, u, NoisePmf(probs, 1.0), iterations=8)
            worst = max(worst, float(np.max(np.abs(got - want))))
    code = lift(ira_base(), 256, 7, seed=0)
    c = code.encode(np.random.default_rng(0).integers(0, 7, code.k))
    res = bp_decode(code, c, point_mass_pmf(7))
    noiseless = res.success and res.iterations == 1 and np.array_equal(res.codeword, c)
    detail = (f"(a) parity {'ok' if parity_ok else 'violated'}; (b) tree posterior error {worst:.1e}; "
              f"(c) noiseless decode in {res.iterations} iteration(s)")
    assert record("6 ldpc functional", [parity_ok, worst < 1e-9, noiseless], detail,
                  time.perf_counter() - t0, 120)


def test_7_ldpc_near_capacity():
    t0 = time.perf_counter()
    p = 7
    rate_bits = 0.5 * math.log2(p)
    sigma = capacity_sigma(rate_bits + 0.5, p)
    pmf = default_channel_family(p)(sigma)
    code = lift_for_length(ra_base(Fraction(1, 2)), 16384, p, seed=7)
    rng = np.random.default_rng(7)
    errors = 0
    frames = 100
    for _ in range(frames):
        c = code.encode(rng.integers(0, p, code.k))
        res = bp_decode(code, (c + pmf.sample(code.n, rng)) % p, pmf)
        errors += not (res.success and np.array_equal(res.codeword, c))
    fer = errors / frames
    ra23 = exit_threshold(ra_base(Fraction(2, 3)), p)
    ira23 = exit_threshold(ira_family(Fraction(2, 3)), p)
    detail = (f"RA 1/2 n={code.n} at sigma={sigma:.4f}: FER {fer:.2f} ({errors}/{frames}); "
              f"rate-2/3 thresholds IRA {ira23:.4f} vs RA {ra23:.4f}")
    assert record("7 ldpc near capacity", [fer < 0.1, ira23 >= ra23], detail,
                  time.perf_counter() - t0, 900)


def test_8_wyner_end_to_end():
    t0 = time.perf_counter()
    p, L = 7, 6
    code = lift_for_length(ra_base(Fraction(1, 2)), 2048, p, seed=8)
    # equal power leaves the 6-cell system singular at gamma = 0.4 (see the decisions
    # ledger); the power split 0.8 keeps both slots at full rank
    base_cfg = WynerConfig(L=L, gamma=0.4, snr_db=28.0, r0_bits=2.0, p=p, beta=0.8, code=code, seed=8)
    plans, margins = {}, []
    for slot in (0, 1):
        cfg = WynerConfig(**{**base_cfg.__dict__, "slot": slot})
        plans[slot] = (cfg, build_system(cfg))
        margins.append(float(plans[slot][1].rates().min()) - code.rate_bits())
    full_rank = all(plan.rank() == L for _, plan in plans.values())
    ok = exact = 0
    frames = 100
    for f in range(frames):
        cfg, plan = plans[f % 2]
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            res = run_frame(cfg, plan, frame=f)
        if res.success:
            ok += 1
            exact += res.rank == L and all(res.relay_correct) and res.recovered is not None
    detail = (f"margin {min(margins):.2f} bits, rank {L} in both slots: {full_rank}; "
              f"success {ok}/{frames}, exact recoveries {exact}/{ok}")
    assert record("8 wyner end to end", [min(margins) >= 1.0, full_rank, ok / frames > 0.9, exact == ok],
                  detail, time.perf_counter() - t0, 600)


def test_9_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    runs = {
        "rates": ["rates", "--snr-db", "0:30:10", "--p", "7,251"],
        "wyner": ["wyner", "--gamma", "0:1:0.5", "--p", "7", "--simulate", "--frames", "3",
                  "--blocklength", "256", "--snr-db", "25", "--jobs", "2"],
        "ldpc": ["ldpc", "--base", "ra", "--rate", "1/2", "--simulate", "--frames", "2",
                 "--blocklength", "512"],
    }
    same = []
    for name, argv in runs.items():
        outs = []
        for k in range(2):
            path = tmp_path / f"{name}{k}.csv"
            assert cli.main(argv + ["--seed", "11", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        same.append(outs[0] == outs[1])
    detail = ", ".join(f"{n} {'identical' if s else 'DIFFERENT'}" for n, s in zip(runs, same))
    assert record("9 cli determinism", same, detail, time.perf_counter() - t0, None)


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
