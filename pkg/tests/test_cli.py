import csv
import io

import numpy as np
import pytest

from qcof import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_parse_range():
    assert cli.parse_range("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cli.parse_range("0:1:0.1")[-1] == 1.0
    assert cli.parse_range("15") == [15.0]
    for bad in ("1:0:1", "0:1:0", "a:b:c", "0:1"):
        with pytest.raises(cli.UsageError):
            cli.parse_range(bad)


def test_seed_is_mandatory(capsys):
    code, out, err = run(["rates", "--snr-db", "10", "--p", "7"], capsys)
    assert code == 1
    assert "seed" in err
    assert out == ""


@pytest.mark.parametrize("argv", [
    ["rates", "--seed", "1", "--snr-db", "10:0:1"],
    ["rates", "--seed", "1", "--p", "8"],
    ["wyner", "--seed", "1", "--snr-db", "10:20:5"],
    ["wyner", "--seed", "1", "--gamma", "0:2:1"],
    ["ldpc", "--seed", "1", "--rate", "3/4"],
    ["bogus"],
    ["rates", "--seed", "x"],
])
def test_usage_errors(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_single_point_rates(capsys):
    code, out, _ = run(["rates", "--seed", "3", "--snr-db", "25", "--p", "7"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# qcof rates"
    assert lines[1].startswith("# config: ")
    assert lines[2] == "# seed: 3"
    rows = rows_of(out)
    assert len(rows) == 1
    r = rows[0]
    assert float(r["snr_db"]) == 25.0 and r["p"] == "7"
    assert 0 < float(r["rate_qcof"]) <= np.log2(7)
    assert len(r["a_vector"].split(";")) == 3


def test_default_rates_grid(capsys):
    code, out, _ = run(["rates", "--seed", "0"], capsys)
    rows = rows_of(out)
    assert len(rows) == 13 * 4
    at25 = {int(r["p"]): float(r["rate_qcof"]) for r in rows if float(r["snr_db"]) == 25}
    assert at25[7] >= at25[3]
    hi = [r for r in rows if r["p"] == "251" and float(r["snr_db"]) >= 40]
    assert all(float(r["rate_cof"]) - float(r["rate_qcof"]) < 0.3 for r in hi)


def test_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["wyner", "--seed", "7", "--gamma", "0:1:0.5", "--p", "7"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_jobs_do_not_change_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["rates", "--seed", "1", "--snr-db", "0:20:10", "--p", "3,7"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--jobs", "2", "--out", str(b)]) == 0
    strip = lambda t: [ln for ln in t.splitlines() if not ln.startswith("# config")]
    assert strip(a.read_text()) == strip(b.read_text())


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nseed = 5\nsnr-db = 10\np = 3,7\n")
    code, out, _ = run(["rates", "--config", str(cfg)], capsys)
    assert code == 0
    assert {r["p"] for r in rows_of(out)} == {"3", "7"}
    code, out, _ = run(["rates", "--config", str(cfg), "--p", "17"], capsys)
    assert {r["p"] for r in rows_of(out)} == {"17"}
    assert "# seed: 5" in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("seed = 1\ncolour = red\n")
    assert run(["rates", "--config", str(bad)], capsys)[0] == 1


def test_wyner_columns(capsys):
    code, out, _ = run(["wyner", "--seed", "2", "--gamma", "0:1:0.25", "--p", "251"], capsys)
    rows = rows_of(out)
    assert len(rows) == 5
    for r in rows:
        assert float(r["rate_qcof"]) <= 2.0 and float(r["rate_qcof_pa"]) <= 2.0
        assert float(r["rate_qcof_pa"]) >= float(r["rate_qcof"]) - 1e-12
        assert r["fer"] == ""
    code, out, _ = run(["wyner", "--seed", "2", "--gamma", "0.5", "--p", "251", "--pa", "off"], capsys)
    assert rows_of(out)[0]["rate_qcof_pa"] == ""
    code, out, _ = run(["wyner", "--seed", "2", "--gamma", "0.5", "--p", "251", "--pa", "on"], capsys)
    assert rows_of(out)[0]["rate_qcof"] == ""


def test_wyner_simulation_columns(capsys):
    code, out, _ = run(["wyner", "--seed", "2", "--gamma", "0", "--snr-db", "40", "--p", "7",
                        "--simulate", "--frames", "2", "--blocklength", "256", "--L", "3"], capsys)
    assert code == 0
    r = rows_of(out)[0]
    assert r["frames"] == "2" and float(r["fer"]) == 0.0


@pytest.mark.slow
def test_ldpc_row(capsys):
    code, out, _ = run(["ldpc", "--seed", "1", "--base", "ira", "--rate", "1/2"], capsys)
    assert code == 0
    r = rows_of(out)[0]
    assert float(r["exit_threshold_sigma"]) < float(r["capacity_sigma"])
    assert float(r["gap_db"]) > 0


def test_selftest_passes(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 3
    assert all(ln.startswith("PASS ") and "s)" in ln for ln in lines)


def test_selftest_catches_corrupted_labels(capsys):
    def swapped(p):
        g = np.arange(p)
        g[[0, 1]] = g[[1, 0]]
        return g

    assert cli.cmd_selftest(g_hook=swapped) == cli.EXIT_SELFTEST
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("FAIL modulo_identity")
