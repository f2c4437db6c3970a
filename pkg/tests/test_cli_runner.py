import csv
import json
import subprocess
import sys

import pytest

from sublevel_lab import bound_verifier as bv
from sublevel_lab import cli_runner as cli
from sublevel_lab.errors import ConfigError, QuadratureError


def _ini(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_defaults():
    cfg = cli.load_config()
    assert cfg.phase_name == "power" and cfg.lam_count == 25
    assert cfg.checks == {"assumption": True, "symmetrization": True, "sweep": True, "ledger": True, "prop1": False}
    assert cfg.lambda_grid()[0] == 10.0 and cfg.lambda_grid()[-1] == pytest.approx(1e4)


def test_config_file_and_case_sensitive_keys(tmp_path):
    path = _ini(tmp_path, """
[phase]
name = power
m = 3
n = 2
R = 1.5          ; radius
[amplitude]
kind = taper
[lambda]
min = 5
max = 50
count = 4
spacing = linear
[tolerances]
ratio_slack = 1e-3
""")
    cfg = cli.load_config(path)
    assert cfg.phase_params == {"m": 3, "n": 2, "R": 1.5}
    assert cfg.amplitude_kind == "taper"
    assert list(cfg.lambda_grid()) == [5.0, 20.0, 35.0, 50.0]
    assert cfg.tolerances["ratio_slack"] == 1e-3


@pytest.mark.parametrize("overrides, match", [
    (["phase.name=spiral"], "name"),
    (["phase.q=3"], "unknown parameter"),
    (["amplitude.kind=gauss"], "kind"),
    (["lambda.min=-1"], "min"),
    (["lambda.count=many"], "count"),
    (["lambda.max=1"], "max"),
    (["checks.sweep=maybe"], "sweep"),
    (["tolerances.speed=1"], "speed"),
    (["bogus.key=1"], "section"),
    (["no-dot=1"], "section.key"),
    (["run.jobs=0"], "jobs"),
])
def test_config_errors_name_the_key(overrides, match):
    with pytest.raises(ConfigError, match=match):
        cli.load_config(None, overrides)


def test_missing_config_file(tmp_path):
    assert cli.main(["check", "--config", str(tmp_path / "nope.ini")]) == cli.EXIT_CONFIG


def test_unknown_phase_exit_status(tmp_path, capsys):
    assert cli.main(["check", "--set", "phase.name=spiral", "--out", str(tmp_path)]) == 2
    assert "spiral" in capsys.readouterr().err


def test_rejected_phase_exit_status(tmp_path, capsys):
    # decreasing slopes do not give a radially increasing profile
    args = ["check", "--set", "phase.name=staircase", "--set", "phase.slopes=[8, 1]", "--out", str(tmp_path)]
    assert cli.main(args) == 2
    assert "[phase]" in capsys.readouterr().err


def test_bad_arguments_exit_status():
    assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG


def test_full_run_power(tmp_path):
    out = tmp_path / "o"
    status = cli.main(["run", "--set", "phase.m=3", "--set", "checks.prop1=true", "--out", str(out)])
    assert status == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 26
    ratio = rows[0].index("ratio")
    assert max(float(r[ratio]) for r in rows[1:]) <= 1.0
    for name in ("assumption.json", "table.csv", "symmetrization.json", "rearrangement.csv",
                 "ledger.json", "ledger.csv", "prop1.json", "sweep.json"):
        assert (out / name).exists()
    a = json.loads((out / "assumption.json").read_text())
    assert a["overall"] == "pass"
    ledger = _rows(out / "ledger.csv")
    assert all(r[-1] == "true" for r in ledger[1:])


def test_oscint_command(tmp_path):
    assert cli.main(["oscint", "--set", "lambda.value=250", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "oscint.json").read_text())
    assert d["difference"] <= d["combined_error"]


def test_staircase_assert_pass_fails(tmp_path):
    args = ["check", "--set", "phase.name=staircase", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    assert cli.main(args + ["--assert-pass"]) == 1


def test_staircase_sweep_not_asserted(tmp_path):
    args = ["sweep", "--set", "phase.name=staircase", "--set", "lambda.count=5", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    assert cli.main(args + ["--assert-pass"]) == 1


def test_tol_override_can_fail_a_run(tmp_path):
    # m = 2, n = 2 at lambda = pi gives ratio sqrt(pi)/5 < 1; a negative slack trips it
    base = ["sweep", "--set", "phase.m=2", "--set", "lambda.count=1", "--set", "lambda.min=3.14159",
            "--set", "lambda.max=3.14159", "--out", str(tmp_path)]
    assert cli.main(base) == 0
    assert cli.main(base + ["--tol", "ratio_slack=-0.9"]) == 1
    assert cli.main(base + ["--tol", "warp=1"]) == 2


def test_deterministic_and_parallel(tmp_path):
    common = ["sweep", "--set", "phase.m=4", "--set", "lambda.count=6"]
    cli.main(common + ["--out", str(tmp_path / "a")])
    cli.main(common + ["--out", str(tmp_path / "b")])
    cli.main(common + ["--out", str(tmp_path / "c"), "--jobs", "2"])
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "c" / "sweep.csv").read_bytes()
    assert (tmp_path / "a" / "sweep.json").read_bytes() == (tmp_path / "c" / "sweep.json").read_bytes()


def test_numeric_failure_keeps_partial_outputs(tmp_path, monkeypatch):
    real = bv.oscint_coarea

    def broken(table, amp, lam, *a, **k):
        if lam > 100:
            raise QuadratureError("forced", None)
        return real(table, amp, lam, *a, **k)

    monkeypatch.setattr(bv, "oscint_coarea", broken)
    status = cli.main(["run", "--set", "lambda.count=4", "--out", str(tmp_path)])
    assert status == 3
    assert (tmp_path / "assumption.json").exists()
    rows = _rows(tmp_path / "sweep.csv")
    err = rows[0].index("error")
    assert sum(1 for r in rows[1:] if "forced" in r[err]) == 2
    assert not (tmp_path / "ledger.csv").exists()


def test_catalog_listing(capsys):
    assert cli.main(["catalog"]) == 0
    text = capsys.readouterr().out
    for name in ("power", "flat", "staircase", "grid2d"):
        assert name in text
    assert cli.main(["catalog", "--json"]) == 0
    entries = json.loads(capsys.readouterr().out)
    assert {e["name"] for e in entries} == {"power", "flat", "staircase", "grid2d"}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "sublevel_lab", "catalog", "--json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)


def test_fmt_round_trips():
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x
    assert cli.fmt(None) == ""
