import csv
import json
import subprocess
import sys

import pytest

from natrod.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, main

TORSION = {"nu": 0, "mu": 1, "mu_d": 1, "alpha": 1, "alpha_d": 1}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_creep_example(tmp_path):
    # step m0 = 1 with unit parameters tends to u = 2, u_d = 1
    cfg = {"scenario": "creep", "params": TORSION, "input": {"kind": "torque", "amplitude": 1.0}, "numerics": {"t_end": 80}}
    assert main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = _rows(tmp_path / "o" / "trace.csv")
    assert rows[0] == ["t", "u", "u_d", "m_regular", "m_impulse_amplitude"]
    t, u, ud = (float(x) for x in rows[-1][:3])
    assert t == 80 and abs(u - 2) < 1e-6 and abs(ud - 1) < 1e-6
    assert "status: PASS" in (tmp_path / "o" / "report.txt").read_text()


def test_relaxation_example(tmp_path):
    p = dict(TORSION, mu=0.5, alpha=2.0)
    cfg = {"scenario": "relaxation", "params": p, "input": {"amplitude": 1.0}, "numerics": {"t_end": 15}}
    assert main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = _rows(tmp_path / "o" / "trace.csv")
    assert abs(float(rows[-1][3]) - 2 / 3) < 1e-12
    assert float(rows[1][4]) == 0.5


def test_counterexample_example(tmp_path):
    assert main(["--config", _write(tmp_path, {"scenario": "counterexample"}), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    report = (tmp_path / "o" / "report.txt").read_text()
    assert "PASS: xi(s0) < 0" in report and "PASS: integral of xi >= 0" in report and "status: PASS" in report
    assert _rows(tmp_path / "o" / "trace.csv")[0] == ["s", "u", "xi"]


def test_dynamic_long_format_and_determinism(tmp_path):
    cfg = {
        "scenario": "dynamic",
        "variant": "uniform",
        "params": dict(TORSION, nu=1e-3),
        "input": {"amplitude": 1.0},
        "numerics": {"t_end": 0.5, "grid_nodes": 16, "ramp_duration": 0.01},
        "output": {"sample_stride": 5},
    }
    path = _write(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["--config", path, "--out", str(tmp_path / "b"), "--quiet"]) == 0
    a = (tmp_path / "a" / "trace.csv").read_bytes()
    assert a == (tmp_path / "b" / "trace.csv").read_bytes()
    rows = _rows(tmp_path / "a" / "trace.csv")
    assert rows[0] == ["s", "t", "phi", "u_d"]
    assert (len(rows) - 1) % 16 == 0
    assert float(rows[-1][1]) == 0.5  # the final time is kept whatever the stride


def test_maximizer_check_is_seeded(tmp_path):
    cfg = {"scenario": "maximizer_check", "seed": 3, "params": {"n_cases": 2, "restarts": 5}}
    path = _write(tmp_path, cfg)
    assert main(["--config", path, "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["--config", path, "--out", str(tmp_path / "b"), "--quiet"]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_verify_writes_report_only(tmp_path):
    cfg = {"scenario": "creep_mu_zero", "params": dict(TORSION, mu=0), "input": {"amplitude": 2.0}, "numerics": {"t_end": 5}}
    assert main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o"), "--verify", "--quiet"]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["report.txt"]


def test_seventeen_digit_floats(tmp_path):
    cfg = {"scenario": "creep", "params": TORSION, "input": {"amplitude": 1.0}, "numerics": {"t_end": 1, "n_samples": 4}}
    main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o"), "--quiet"])
    value = _rows(tmp_path / "o" / "trace.csv")[2][1]
    assert float("%.17g" % float(value)) == float(value) and len(value.replace(".", "").lstrip("0")) >= 15


@pytest.mark.parametrize(
    "cfg, needle",
    [
        ({"scenario": "creep", "params": TORSION, "input": {"amplitude": 1}, "numerics": {"t_end": 1}, "extra": 1}, "config.extra"),
        ({"scenario": "creep", "params": dict(TORSION, beta=1), "input": {"amplitude": 1}, "numerics": {"t_end": 1}}, "params.beta"),
        ({"scenario": "creep", "params": TORSION, "input": {"amplitude": 1}}, "numerics.t_end"),
        ({"scenario": "creep", "params": TORSION, "input": {"kind": "twist", "amplitude": 1}, "numerics": {"t_end": 1}}, "input.kind"),
        ({"scenario": "dynamic", "params": TORSION, "input": {"amplitude": 1}, "numerics": {"t_end": 1}}, "config.variant"),
        ({"scenario": "creep", "params": dict(TORSION, alpha=-1), "input": {"amplitude": 1}, "numerics": {"t_end": 1}}, "alpha"),
        ({"scenario": "flying"}, "config.scenario"),
    ],
)
def test_config_errors_name_the_key(tmp_path, capsys, cfg, needle):
    assert main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    path = _write(tmp_path, '{"scenario": "creep",\n  "params": {,}\n}')
    assert main(["--config", path, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_output_dir_must_be_empty(tmp_path, capsys):
    out = tmp_path / "o"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert main(["--config", _write(tmp_path, {"scenario": "counterexample"}), "--out", str(out)]) == EXIT_CONFIG
    assert "not empty" in capsys.readouterr().err


def test_failed_check_gives_nonzero_exit(tmp_path):
    cfg = {"scenario": "counterexample", "params": {"s0": 0.5}}
    # u(0.5) = -0.5 < 0, so xi(s0) > 0 and the negativity check fails
    assert main(["--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_CHECK_FAILED
    assert "FAIL: xi(s0) < 0" in (tmp_path / "o" / "report.txt").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "natrod", "--config", _write(tmp_path, {"scenario": "counterexample"}), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "status: PASS" in proc.stdout
