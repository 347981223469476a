"""Command-line harness and CSV output."""

import io
import math
import subprocess
import sys

import pytest

from perturb_osc.cli import main
from perturb_osc.experiments import (SCAN_COLUMNS, SWEEP_COLUMNS, SweepConfig,
                                     UsageError, compute, fmt, order_scan,
                                     resolve_lambda, sweep, to_csv)

pytestmark = pytest.mark.property


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def read_csv(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return data, data.decode().splitlines()


def parse_block(text):
    return dict(line.split(None, 1) for line in text.splitlines() if line.strip())


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true"
    assert fmt(math.inf) == "inf"
    assert fmt(math.nan) == "nan"
    assert fmt(None) == ""
    assert fmt(3) == "3"


def test_freq_alpt_duffing():
    code, out = run_cli("freq", "--system", "duffing", "--mu", "1", "--method", "alpt",
                        "--order", "3")
    assert code == 0
    block = parse_block(out)
    assert float(block["omega"]) == pytest.approx(1.317764, abs=1e-6)


def test_freq_mu_zero():
    code, out = run_cli("freq", "--system", "duffing", "--mu", "0", "--method", "lpt",
                        "--order", "5")
    assert code == 0
    block = parse_block(out)
    assert float(block["omega"]) == 1.0
    assert float(block["delta"]) < 1e-14


def test_freq_rational_partials():
    code, out = run_cli("freq", "--mu", "1", "--method", "lpt", "--order", "3",
                        "--arith", "rational")
    assert code == 0
    assert "893/512" in out


def test_freq_csv_row():
    code, out = run_cli("freq", "--mu", "1", "--method", "lplde", "--lambda", "pms",
                        "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["lambda_used"]) == pytest.approx(math.sqrt(3) / 2)


def test_freq_vdp_mu10():
    code, out = run_cli("freq", "--system", "vdp", "--mu", "10", "--method", "lplde",
                        "--order", "6")
    block = parse_block(out)
    assert code == 0
    assert 2 * math.pi / float(block["omega_oracle"]) == pytest.approx(19.1, abs=0.05)
    assert "delta" in block


def test_exit_code_numerical_failure(capsys):
    code, out = run_cli("freq", "--mu", "100", "--method", "lpt", "--order", "20")
    assert code == 3
    assert "did not converge" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ("freq", "--mu", "-2", "--method", "lpt"),
    ("freq", "--system", "vdp", "--mu", "1", "--method", "lpt"),
    ("freq", "--mu", "1", "--method", "alpt", "--arith", "rational"),
    ("freq", "--mu", "1", "--method", "lpt", "--order", "99"),
    ("sweep", "--mu-min", "-2", "--mu-max", "1", "--mu-count", "3"),
    ("sweep", "--mu-min", "-0.5", "--mu-max", "1", "--mu-scale", "log"),
    ("order-scan", "--system", "vdp", "--mu", "1", "--method", "lpt"),
    ("oracle", "--system", "vdp", "--mu", "0"),
])
def test_exit_code_usage(argv, capsys):
    code, _ = run_cli(*argv)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ("freq", "--mu", "1", "--method", "nope"),
    ("freq", "--method", "lpt"),
    ("bogus",),
    ("freq", "--mu", "1", "--method", "lpt", "--lambda", "abc"),
])
def test_exit_code_bad_flags(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    assert exc.value.code == 2


def test_sweep_csv_structure_and_determinism(tmp_path):
    argv = ["sweep", "--system", "sextic", "--mu-min", "0.1", "--mu-max", "10",
            "--mu-count", "4", "--order", "6"]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(*argv, "--out", str(p1))[0] == 0
    assert run_cli(*argv, "--out", str(p2))[0] == 0
    d1, lines = read_csv(p1)
    d2, _ = read_csv(p2)
    assert b"\r" not in d1
    # the invocation differs only by output path
    assert d1.split(b"\n", 1)[1] == d2.split(b"\n", 1)[1]
    assert lines[0].startswith("# perturb_osc 0.1.0: perturb-osc sweep")
    assert lines[1] == ",".join(SWEEP_COLUMNS)
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 12
    keys = [(float(r[0]), r[1]) for r in rows]
    assert keys == sorted(keys)


def test_sweep_byte_identical_stdout(capsys):
    argv = ["sweep", "--mu-min", "0.5", "--mu-max", "2", "--mu-count", "3", "--order", "5"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_sweep_threads_do_not_change_output(monkeypatch):
    config = SweepConfig(system="duffing", mu_min=0.5, mu_max=20, mu_count=5, order=6)
    serial = to_csv(sweep(config), SWEEP_COLUMNS, "x")
    monkeypatch.setenv("PERTURB_OSC_THREADS", "4")
    threaded = to_csv(sweep(config), SWEEP_COLUMNS, "x")
    assert serial == threaded


def test_order_scan(tmp_path):
    out = tmp_path / "scan.csv"
    code, _ = run_cli("order-scan", "--system", "duffing", "--mu", "1", "--order", "5",
                      "--method", "lpt", "--method", "alpt", "--out", str(out))
    assert code == 0
    _, lines = read_csv(out)
    assert lines[1] == ",".join(SCAN_COLUMNS)
    rows = [line.split(",") for line in lines[2:]]
    assert [(int(r[0]), r[1]) for r in rows] == [(o, m) for o in range(1, 6)
                                                 for m in ("alpt", "lpt")]


def test_order_scan_lplde_fixed_lambda():
    recs = order_scan("octic", 2.0, ["lplde"], 4)
    lams = {r.lambda_used for r in recs}
    assert len(lams) == 1


def test_oracle_command():
    code, out = run_cli("oracle", "--system", "duffing", "--mu", "1")
    block = parse_block(out)
    assert code == 0
    assert float(block["omega_quadrature"]) == pytest.approx(float(block["omega_elliptic"]),
                                                             rel=1e-12)
    code, out = run_cli("oracle", "--system", "sextic", "--mu", "1")
    assert code == 0 and float(parse_block(out)["discrepancy"]) < 1e-10


def test_resolve_lambda():
    assert resolve_lambda("duffing", 1.0, None) is None
    assert resolve_lambda("duffing", 1.0, 0.5) == 0.25
    assert resolve_lambda("duffing", 2.0, "pms") == pytest.approx(1.5)
    with pytest.raises(UsageError):
        resolve_lambda("duffing", 1.0, "max")


def test_failed_method_has_infinite_delta():
    rec = compute("duffing", 100.0, "lpt", 20)
    assert not rec.converged and rec.delta == math.inf


def test_sweep_config_validation():
    with pytest.raises(UsageError):
        SweepConfig(system="quartic")
    with pytest.raises(UsageError):
        SweepConfig(system="vdp", methods=("lpt",))
    with pytest.raises(UsageError):
        SweepConfig(mu_count=0)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "perturb_osc", "freq", "--mu", "0.5",
                           "--method", "lpt", "--order", "2", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("system,mu,method")
