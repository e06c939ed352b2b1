import json
import subprocess
import sys

import pytest

from dgetc.cli import main

EASY = ["--xi=0.5,-0.25", "--nu", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve(capsys):
    code, out, _ = run(capsys, "solve", *EASY, "--repeats", "10")
    assert code == 0
    assert out.splitlines() == ["set: {0}", "value: 0.75", "ratio: 1.0"]


def test_hardness(capsys):
    code, out, _ = run(capsys, "hardness", *EASY)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "item,h,gap,zone"
    assert lines[1].startswith("0,4.0,0.5,") and lines[2].startswith("1,16.0,0.25,")
    assert lines[-1] == "global,20.0"


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check", "--xi=0.2,-0.7,0.9", "--nu", "0.5")
    assert code == 0
    assert all(": pass" in line for line in out.splitlines())


def test_check_fails_on_supermodular(tmp_path, capsys):
    d = 3
    values = [bin(k).count("1") ** 2 / 9 for k in range(1 << d)]
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"family": "table", "values": values}))
    code, out, _ = run(capsys, "check", "--function", str(path))
    assert code == 1
    assert "submodular: FAIL" in out


def test_permutation_flag(capsys):
    code, out, _ = run(capsys, "solve", *EASY, "--permutation", "1,0")
    assert code == 0 and out.splitlines()[0] == "set: {1}"


def test_run_and_overrides(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DGETC_TIMESTAMP", "pinned")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"function": {"xi": [0.5, -0.25]}, "T": 1000, "replications": 1}))
    outs = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "--seed", "4", "run", str(cfg), "-o", str(tmp_path / name), "--set", "T=20000", "--set", "replications=2")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    assert "replications: 2" in outs[0]
    for f in ("summary.csv", "aggregate.csv", "trace_0001.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "a" / "config.json").read_text())["seed"] == 4


def test_run_no_trace(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"function": {"xi": [0.5, -0.25]}, "T": 20000}))
    assert run(capsys, "--no-trace", "run", str(cfg), "-o", str(tmp_path / "o"))[0] == 0
    assert not list((tmp_path / "o").glob("trace_*"))


def test_sweep(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text(
        "base:\n  function: {xi: [0.5, -0.25]}\n  T: 20000\ngrid:\n  algorithm: [dgetc, rgl]\n"
    )
    code, out, _ = run(capsys, "--no-trace", "sweep", str(grid), "-o", str(tmp_path / "s"))
    assert code == 0 and "failed cells: 0" in out
    assert (tmp_path / "s" / "sweep.csv").exists()


def test_sweep_reports_failed_cell(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"function": {"xi": [5.0]}, "T": 10}]))
    code, _, err = run(capsys, "sweep", str(grid))
    assert code == 1 and "failed" in err


def test_validation_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"function": {"xi": [0.5]}, "algorithm": "nope"}))
    code, _, err = run(capsys, "run", str(cfg))
    assert code == 1 and "error:" in err
    code, _, err = run(capsys, "run", str(tmp_path / "missing.json"))
    assert code == 1


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    code, _, err = run(capsys, "solve")
    assert code == 2 and "--xi" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dgetc", "solve", *EASY], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and proc.stdout.startswith("set: {0}")
