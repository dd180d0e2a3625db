import json
import os
import subprocess
import sys

import pytest

from vortexlab.cli import main
from vortexlab.vortex import read_field


def _json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
    return str(path)


def test_vortex_solve(tmp_path, capsys):
    zeros = _json(tmp_path / "z.json", {"points": [[0.1, 0.0]], "multiplicities": [2]})
    out = tmp_path / "field.csv"
    assert main(["vortex", "solve", "--zeros", zeros, "--r", "16", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["checks"]["energy_quantized"] and payload["N"] == 2
    f = read_field(out.read_text())
    assert f.r == 16.0 and f.u.shape == (f.grid.n + 1, f.grid.n + 1)


def test_vortex_solve_explicit_grid(tmp_path, capsys):
    zeros = _json(tmp_path / "z.json", {"atoms": [[0.0, 0.0, 1]]})
    out = tmp_path / "field.csv"
    assert main(["vortex", "solve", "--zeros", zeros, "--r", "16", "--h", "0.015",
                 "--R", "4", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["R"] == 4.0 and payload["h"] <= 0.015


def test_vortex_solve_under_resolved(tmp_path, capsys):
    zeros = _json(tmp_path / "z.json", {"points": [[0.0, 0.0]]})
    code = main(["vortex", "solve", "--zeros", zeros, "--r", "64", "--h", "0.1",
                 "--out", str(tmp_path / "f.csv")])
    assert code == 2
    assert "under-resolved" in capsys.readouterr().err


def test_measure_approx(tmp_path, capsys):
    m = _json(tmp_path / "m.json", {"kind": "atoms", "atoms": [[-0.4, 0, 0.5], [0.4, 0, 0.5]]})
    assert main(["measure", "approx", "--measure", m, "--cell-radius", "0.1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["N"] == 2 and payload["multiplicities"] == [1, 1]


def test_pipeline_run_and_summarize(tmp_path, capsys):
    cfg = _json(tmp_path / "c.json", {"measure": {"kind": "generator", "name": "single-atom"},
                                      "levels": 2})
    out = tmp_path / "run"
    assert main(["pipeline", "run", "--config", cfg, "--out", str(out)]) == 0
    stored = json.loads(capsys.readouterr().out)
    assert stored["all_pass"]
    assert main(["report", "summarize", "--dir", str(out)]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["flags"] == stored["flags"] and again["consistent"]


def test_pipeline_failing_flag_exit_one(tmp_path, capsys):
    cfg = _json(tmp_path / "c.json", {"measure": {"kind": "generator", "name": "single-atom"},
                                      "levels": 2, "schedule": {"r_max": 300}})
    assert main(["pipeline", "run", "--config", cfg, "--out", str(tmp_path / "run")]) == 1
    assert json.loads(capsys.readouterr().out)["flags"]["levels_complete"] is False


def test_pipeline_invalid_config_exit_two(tmp_path, capsys):
    cfg = _json(tmp_path / "c.json", {"measure": {"kind": "generator", "name": "single-atom"},
                                      "levels": 0})
    assert main(["pipeline", "run", "--config", cfg, "--out", str(tmp_path / "run")]) == 2
    assert "/levels: levels must be >= 1" in capsys.readouterr().err


def test_summarize_tampered_exit_two(tmp_path, capsys):
    cfg = _json(tmp_path / "c.json", {"measure": {"kind": "generator", "name": "single-atom"},
                                      "levels": 1})
    out = tmp_path / "run"
    main(["pipeline", "run", "--config", cfg, "--out", str(out)])
    with open(out / "nodal.csv", "a") as fh:
        fh.write("\n")
    capsys.readouterr()
    assert main(["report", "summarize", "--dir", str(out)]) == 2
    assert "manifest-mismatch" in capsys.readouterr().err


def test_missing_file_exit_two(tmp_path, capsys):
    assert main(["measure", "approx", "--measure", str(tmp_path / "nope.json"),
                 "--cell-radius", "0.2"]) == 2
    assert "io-error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    m = _json(tmp_path / "m.json", {"kind": "generator", "name": "uniform-disk"})
    proc = subprocess.run([sys.executable, "-m", "vortexlab", "measure", "approx", "--measure", m,
                           "--cell-radius", "0.3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["N"] == 7
