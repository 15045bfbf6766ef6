import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from netflow_waves import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_fmt_seventeen_digits():
    x = 0.1 + 0.2
    assert cli.fmt(x) == "0.30000000000000004"
    assert float(cli.fmt(np.float64(1 / 3))) == 1 / 3
    assert cli.fmt(None) == "" and cli.fmt(True) == "true" and cli.fmt(7) == "7"


def test_jsonable_non_finite():
    out = cli.jsonable({"a": np.inf, "b": [np.float64(1.5), np.int64(2)], "c": np.bool_(True)})
    assert out == {"a": "inf", "b": [1.5, 2], "c": True}


def test_atomic_write_leaves_no_temp(tmp_path):
    cli.atomic_write(tmp_path / "x.csv", "a\n1\n")
    cli.atomic_write(tmp_path / "x.csv", "a\n2\n")
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]
    assert (tmp_path / "x.csv").read_bytes() == b"a\n2\n"


def test_run_linear_preset(capsys, tmp_path):
    code, out, err = run(capsys, "run", "--scenario", "linear", "--out-dir", str(tmp_path))
    assert code == 0, err
    header, led = read_csv(tmp_path / "ledger.csv")
    assert header[:6] == ["t", "E", "Phi", "gradvt2", "H", "source_work"]
    H = led[:, header.index("H")]
    assert np.max(np.abs(H - H[0])) / H[0] <= 1e-6
    header, traj = read_csv(tmp_path / "trajectory.csv")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    m = manifest["m"]
    assert len(header) == traj.shape[1] == 1 + 2 * m
    assert header[1] == "a_1" and header[-1] == f"a_dot_{m}"
    assert manifest["status"] == "completed" and manifest["t_stop"] is None
    assert manifest["scenario"]["domain"]["m"] == 32
    assert "c_poly" in manifest["bound_params"]
    assert (tmp_path / "ledger.png").stat().st_size > 0
    assert b"\r\n" not in (tmp_path / "ledger.csv").read_bytes()


def test_bounds_cubic_preset(capsys, tmp_path):
    code, out, err = run(capsys, "bounds", "--scenario", "cubic", "--out-dir", str(tmp_path),
                         "--no-figures")
    assert code == 0, err
    report = json.loads((tmp_path / "bounds.json").read_text())
    assert report["all_passed"]
    for name, rep in report["bounds"].items():
        assert rep["passed"], name
        assert rep["worst_margin"] == "inf" or rep["worst_margin"] >= 0, name
    assert not report["bounds"]["closed_form_envelope"]["skipped"]
    assert "closed_form_envelope" in out
    assert not (tmp_path / "ledger.png").exists()


def test_blowup_exit_three(capsys, tmp_path):
    code, out, err = run(capsys, "run", "--scenario", "blowup", "--force",
                         "--out-dir", str(tmp_path), "--no-figures")
    assert code == 3
    assert "blow-up" in err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "blow-up" and 0 < manifest["t_stop"] < 1


def test_blowup_preset_rejected_without_force(capsys, tmp_path):
    code, out, err = run(capsys, "run", "--scenario", "blowup", "--out-dir", str(tmp_path))
    assert code == 1 and "error:" in err and out == ""


def test_check_command(capsys, tmp_path):
    code, out, err = run(capsys, "check", "--scenario", "cubic-source", "--out-dir", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "check.json").read_text())
    assert set(data["reports"]) == {"growth", "lipschitz", "monotone", "domination"}
    assert "domination" in out and "pass" in out
    code, out, err = run(capsys, "check", "--scenario", "linear", "--out-dir", str(tmp_path))
    assert code == 2 and "FAIL" in out


def test_converge_command(capsys, tmp_path):
    code, out, err = run(capsys, "converge", "--scenario", "linear", "--out-dir", str(tmp_path),
                         "--t-final", "0.5", "--no-figures")
    assert code == 0, err
    with open(tmp_path / "convergence.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(cli.ConvergenceRow.FIELDS)
    assert [r[0] for r in rows[1:]] == ["m"] * 3 + ["dt"] * 3
    assert 12 <= float(rows[-1][4]) <= 20


def test_usage_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["run"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate", "--scenario", "linear"])
    assert info.value.code == 1
    code, out, err = run(capsys, "run", "--scenario", str(tmp_path / "missing.toml"))
    assert code == 1 and "no such file" in err
    bad = tmp_path / "bad.toml"
    bad.write_text("[time]\ndt = -1\n")
    code, out, err = run(capsys, "run", "--scenario", str(bad), "--out-dir", str(tmp_path))
    assert code == 1 and "time.dt" in err


def test_determinism_and_manifest_roundtrip(capsys, tmp_path):
    args = ["--modes", "8", "--t-final", "0.2", "--no-figures"]
    for d in ("a", "b"):
        assert run(capsys, "run", "--scenario", "cubic-source", "--out-dir",
                   str(tmp_path / d), *args)[0] == 0
    for name in ("trajectory.csv", "ledger.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    code = run(capsys, "run", "--scenario", str(tmp_path / "a" / "manifest.json"),
               "--out-dir", str(tmp_path / "c"))[0]
    assert code == 0
    for name in ("trajectory.csv", "ledger.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "netflow_waves", "run", "--scenario", "linear",
                           "--t-final", "0.1", "--out-dir", str(tmp_path), "--no-figures"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "trajectory.csv").exists()
