"""Command-line interface: seeded, reproducible CSV runs.

SNR values are in dB throughout; SNR_linear = 10^(snr_db / 10).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import rate, wyner
from .ldpc import bp_decode, capacity_sigma, exit_threshold, ira_family, lift_for_length, ra_base
from .ldpc.exit import default_channel_family

REF_CHANNEL = (1.0, 0.75, -math.sqrt(2.0))
EXIT_USAGE = 1
EXIT_SELFTEST = 2


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of b) or a single number."""
    parts = text.split(":")
    try:
        vals = [float(v) for v in parts]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if len(vals) == 1:
        return vals
    if len(vals) != 3 or vals[2] <= 0 or vals[1] < vals[0]:
        raise UsageError(f"range must be a:b:step with a <= b and step > 0, got {text!r}")
    a, b, step = vals
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 10) for i in range(count)]


def parse_list(text: str, kind=int) -> list:
    try:
        vals = [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}") from exc
    if not vals:
        raise UsageError("empty list")
    return vals


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--seed", type=int, help="RNG seed (required)")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--jobs", type=int, help="worker processes (default 1)")
    common.add_argument("--p", help="comma-separated primes")
    common.add_argument("--noise-model", choices=rate.NOISE_MODELS,
                        help="gauss (Gaussian approximation, default) or exact")

    parser = argparse.ArgumentParser(
        prog="qcof",
        description="Quantized compute-and-forward: rates, Wyner sweeps, LDPC thresholds. "
                    "SNR is given in dB (linear = 10^(dB/10)).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rates", parents=[common], help="computation rate vs SNR")
    r.add_argument("--snr-db", help="a:b:step in dB (default 0:60:5)")
    r.add_argument("--h", help="comma-separated channel gains (default 1,0.75,-sqrt2)")

    w = sub.add_parser("wyner", parents=[common], help="Wyner-model rates vs gamma")
    w.add_argument("--gamma", help="a:b:step (default 0:1:0.1)")
    w.add_argument("--snr-db", help="single SNR in dB (default 15)")
    w.add_argument("--r0", type=float, help="backhaul rate in bits (default 2)")
    w.add_argument("--pa", choices=("on", "off", "both"), help="power allocation columns (default both)")
    w.add_argument("--simulate", action="store_true", default=None,
                   help="add a Monte Carlo FER column with a rate-1/2 RA code")
    w.add_argument("--frames", type=int, help="frame cap for --simulate (default 100)")
    w.add_argument("--L", type=int, help="users/relays for --simulate (default 6)")
    w.add_argument("--blocklength", type=int, help="code length for --simulate (default 2048)")

    ld = sub.add_parser("ldpc", parents=[common], help="EXIT thresholds of RA/IRA families")
    ld.add_argument("--base", choices=("ra", "ira", "both"), help="code family (default both)")
    ld.add_argument("--rate", help="comma-separated rates (default 1/2,2/3,4/5)")
    ld.add_argument("--simulate", action="store_true", default=None,
                    help="confirm with a finite-length FER run 0.5 bits inside threshold")
    ld.add_argument("--frames", type=int, help="frames for --simulate (default 100)")
    ld.add_argument("--blocklength", type=int, help="code length for --simulate (default 16384)")

    st = sub.add_parser("selftest", help="fast invariant suite")
    st.add_argument("--seed", type=int, default=0)
    return parser


DEFAULTS = {
    "rates": {"snr_db": "0:60:5", "p": "3,7,17,251", "h": ",".join(repr(v) for v in REF_CHANNEL),
              "noise_model": "gauss", "jobs": "1"},
    "wyner": {"gamma": "0:1:0.1", "snr_db": "15", "p": "7,251", "r0": "2", "pa": "both",
              "noise_model": "gauss", "jobs": "1", "simulate": "false", "frames": "100",
              "L": "6", "blocklength": "2048"},
    "ldpc": {"base": "both", "rate": "1/2,2/3,4/5", "p": "7", "noise_model": "gauss",
             "jobs": "1", "simulate": "false", "frames": "100", "blocklength": "16384"},
}


def resolve(args: argparse.Namespace) -> dict[str, str]:
    """Merge defaults < config file < flags into a flat string dict."""
    cmd = args.command
    merged = dict(DEFAULTS[cmd])
    if args.config:
        merged.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key] = str(value)
    if "seed" not in merged:
        raise UsageError("--seed is required")
    allowed = set(DEFAULTS[cmd]) | {"seed", "out"}
    unknown = set(merged) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return merged


def _bool(text: str) -> bool:
    return text.lower() in ("1", "true", "yes", "on")


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(command: str, cfg: dict[str, str], columns, rows, out) -> None:
    buf = io.StringIO()
    buf.write(f"# qcof {command}\n")
    buf.write("# config: " + " ".join(f"{k}={cfg[k]}" for k in sorted(cfg) if k != "out") + "\n")
    buf.write(f"# seed: {cfg['seed']}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for row in rows:
        wr.writerow([_fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _rates_point(task):
    h, snr_db, p, noise_model = task
    snr = rate.db_to_linear(snr_db)
    point = rate.computation_rate(h, snr, p, noise_model)
    return {
        "snr_db": snr_db, "p": p, "rate_qcof": point.rate_bits,
        "rate_cof": rate.cof_benchmark_rate(h, snr),
        "a_vector": ";".join(str(int(v)) for v in point.equation.a),
        "sigma_eps_sq": point.equation.sigma_eps_sq,
    }


def cmd_rates(cfg: dict[str, str]) -> tuple[list[str], list[dict]]:
    h = tuple(parse_list(cfg["h"], float))
    tasks = [(h, s, p, cfg["noise_model"])
             for p in parse_list(cfg["p"]) for s in parse_range(cfg["snr_db"])]
    rows = _map(_rates_point, tasks, int(cfg["jobs"]))
    return ["snr_db", "p", "rate_qcof", "rate_cof", "a_vector", "sigma_eps_sq"], rows


def _wyner_point(task):
    gamma, snr_db, p, r0, seed, pa, noise_model, frames, L, blocklength = task
    code = None
    if frames:
        code = lift_for_length(ra_base(Fraction(1, 2)), blocklength, p, seed=seed)
    row = wyner.sweep_point(gamma, snr_db, p, r0, seed, pa=pa != "off", noise_model=noise_model,
                            code=code, L=L, frames=frames)
    if pa == "on":
        row["rate_qcof"] = float("nan")
    return row


def cmd_wyner(cfg: dict[str, str]) -> tuple[list[str], list[dict]]:
    snrs = parse_range(cfg["snr_db"])
    if len(snrs) != 1:
        raise UsageError("wyner takes a single --snr-db value")
    seed = int(cfg["seed"])
    frames = int(cfg["frames"]) if _bool(cfg["simulate"]) else 0
    tasks = []
    for p in parse_list(cfg["p"]):
        for i, g in enumerate(parse_range(cfg["gamma"])):
            if not 0.0 <= g <= 1.0:
                raise UsageError("gamma must lie in [0, 1]")
            tasks.append((g, snrs[0], p, float(cfg["r0"]), wyner._derived_seed(seed, i),
                          cfg["pa"], cfg["noise_model"], frames, int(cfg["L"]),
                          int(cfg["blocklength"])))
    return list(wyner.SWEEP_COLUMNS), _map(_wyner_point, tasks, int(cfg["jobs"]))


def _family(name: str, r: Fraction):
    return ra_base(r) if name == "ra" else ira_family(r)


def _ldpc_point(task):
    name, r, p, simulate, frames, blocklength, seed = task
    base = _family(name, r)
    rate_bits = float(r) * math.log2(p)
    thr = exit_threshold(base, p)
    cap = capacity_sigma(rate_bits, p)
    row = {
        "family": name, "p": p, "rate": str(r), "exit_threshold_sigma": thr,
        "capacity_sigma": cap, "gap_db": 20 * math.log10(cap / thr),
        "equivalent_snr_db_on_fig2_channel": rate.equivalent_snr_db(REF_CHANNEL, p, thr),
        "sim_sigma": float("nan"), "fer": float("nan"), "frames": 0,
    }
    if simulate:
        fam = default_channel_family(p)
        # 0.5 bits of computation rate inside the threshold channel
        target = math.log2(p) - rate.entropy_bits(fam(thr)) + 0.5
        sigma = capacity_sigma(min(target, math.log2(p) - 1e-6), p)
        pmf = fam(sigma)
        code = lift_for_length(base, blocklength, p, seed=seed)
        rng = np.random.default_rng(seed)
        errors = 0
        for _ in range(frames):
            c = code.encode(rng.integers(0, p, code.k))
            res = bp_decode(code, (c + pmf.sample(code.n, rng)) % p, pmf)
            errors += not (res.success and np.array_equal(res.codeword, c))
        row.update(sim_sigma=sigma, fer=errors / frames if frames else float("nan"), frames=frames)
    return row


def cmd_ldpc(cfg: dict[str, str]) -> tuple[list[str], list[dict]]:
    names = ["ra", "ira"] if cfg["base"] == "both" else [cfg["base"]]
    try:
        rates = [Fraction(v) for v in cfg["rate"].split(",")]
    except ValueError as exc:
        raise UsageError(f"bad rate list {cfg['rate']!r}") from exc
    seed = int(cfg["seed"])
    simulate = _bool(cfg["simulate"])
    tasks = []
    for p in parse_list(cfg["p"]):
        for name in names:
            for r in rates:
                try:
                    _family(name, r)
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
                tasks.append((name, r, p, simulate, int(cfg["frames"]), int(cfg["blocklength"]), seed))
    cols = ["family", "p", "rate", "exit_threshold_sigma", "capacity_sigma", "gap_db",
            "equivalent_snr_db_on_fig2_channel", "sim_sigma", "fer", "frames"]
    return cols, _map(_ldpc_point, tasks, int(cfg["jobs"]))


def cmd_selftest(seed: int = 0, out=None, g_hook=None) -> int:
    """``g_hook(p)`` swaps in a label table for the modulo-identity check (fault injection)."""
    from .selftest import run_selftest

    out = out or sys.stdout
    failed = 0
    for res in run_selftest(g_hook):
        status = "PASS" if res.passed else "FAIL"
        out.write(f"{status} {res.name} ({res.elapsed:.2f}s) {res.detail}\n")
        failed += not res.passed
    return EXIT_SELFTEST if failed else 0


COMMANDS = {"rates": cmd_rates, "wyner": cmd_wyner, "ldpc": cmd_ldpc}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    if args.command == "selftest":
        return cmd_selftest(args.seed)
    try:
        cfg = resolve(args)
        for key in ("seed", "jobs"):
            int(cfg[key])
        if any(not rate_p_ok(p) for p in parse_list(cfg["p"])):
            raise UsageError("--p entries must be primes")
        columns, rows = COMMANDS[args.command](cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"qcof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_csv(args.command, cfg, columns, rows, cfg.get("out"))
    return 0


def rate_p_ok(p: int) -> bool:
    from .field import MAX_PRIME, is_prime

    return is_prime(p) and p <= MAX_PRIME
