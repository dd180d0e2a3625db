import json
import math
import os

import pytest
from conftest import load_config

from vortexlab.errors import LabError
from vortexlab.pipeline import (DEFAULTS, ConfigError, RunArtifacts, export, parse_config,
                                run_pipeline, summarize, validate_manifest)
from vortexlab.schedule import theta_exponent

MINIMAL = {"measure": {"kind": "generator", "name": "single-atom", "params": {"point": [0, 0]}},
           "levels": 1}


# -- configuration ----------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config(json.dumps(MINIMAL))
    for key in ("cell_radius0", "denominator_cap", "seed", "output_dir"):
        assert cfg[key] == DEFAULTS[key]
    assert cfg["solver"] == DEFAULTS["solver"]
    assert cfg.cell_radii() == [0.3]


def test_levels_zero_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(dict(MINIMAL, levels=0)))
    assert ("/levels", "levels must be >= 1") in exc.value.errors
    assert exc.value.code == "invalid-config"


def test_unknown_key_and_range_errors_have_pointers():
    bad = dict(MINIMAL, colour="red", solver={"kappa": 2.0, "tol": -1})
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(bad))
    got = dict(exc.value.errors)
    assert "colour" in got["/"]
    assert got["/solver/kappa"] == "kappa must be <= 1"
    assert got["/solver/tol"] == "tol must be > 0"


def test_cell_radii_must_decrease():
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(dict(MINIMAL, levels=2, cell_radii=[0.2, 0.3])))
    assert exc.value.errors == [("/cell_radii", "cell_radii must be strictly decreasing")]


def test_invalid_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_round_trip_identical():
    cfg = parse_config(json.dumps(dict(MINIMAL, solver={"kappa": 0.25, "tol": 1e-8})))
    again = parse_config(cfg.to_json())
    assert again == cfg and again.to_json() == cfg.to_json()


def test_measure_from_file(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"kind": "atoms", "atoms": [[0.1, 0.1, 1.0]]}))
    cfg = parse_config(json.dumps({"measure": {"file": "m.json"}, "levels": 1}))
    m = cfg.measure(str(tmp_path))
    assert m.kind == "atoms" and m.total_mass == 1.0


# -- running ------------------------------------------------------------------------------

def test_single_atom_three_levels(acceptance_runs):
    art = acceptance_runs["single"][0]["art"]
    assert [row["N_n"] for row in art.report] == [1, 1, 1]
    assert all(0.99 <= row["E_n"] / (2 * math.pi) <= 1.01 for row in art.report)
    w1 = [row["W1_to_target"] for row in art.report]
    assert all(b < a for a, b in zip(w1, w1[1:]))
    assert w1[-1] <= 0.05


def test_disk_frostman_theta_and_energy_growth(acceptance_runs):
    art = acceptance_runs["disk_frostman"][0]["art"]
    assert art.frostman["theta"] == theta_exponent(2.0) == 0.25
    col = [row["E_rtheta"] for row in art.report]
    assert all(b < a for a, b in zip(col, col[1:]))


def test_generic_path_interpolates(acceptance_runs):
    art = acceptance_runs["disk"][0]["art"]
    assert art.frostman["d"] is None
    assert all(e.F <= e.epsilon for e in art.schedule.entries)


@pytest.mark.parametrize("name", ["single", "two", "disk", "disk_frostman", "segment", "cantor"])
def test_level_monotonicity(acceptance_runs, name):
    art = acceptance_runs[name][0]["art"]
    rs = [e.r for e in art.schedule.entries]
    eps = [a.cell_radius for a in art.approxes]
    assert all(b > a for a, b in zip(rs, rs[1:]))
    assert all(b < a for a, b in zip(eps, eps[1:]))
    w1d = [row["W1_to_diracs"] for row in art.report]
    assert all(b < a for a, b in zip(w1d, w1d[1:]))


@pytest.mark.parametrize("name", ["single", "two"])
def test_local_factor_trend_fixed_N(acceptance_runs, name):
    art = acceptance_runs[name][0]["art"]
    col = [row["h_log_integral_mean"] for row in art.report]
    assert all(b < a for a, b in zip(col, col[1:]))


def test_rerun_byte_identical(acceptance_runs):
    a, b = acceptance_runs["two"]
    assert a["manifest"] == b["manifest"]


def test_failed_level_keeps_earlier(tmp_path):
    cfg = parse_config(json.dumps(dict(MINIMAL, levels=3, schedule={"r_max": 300})))
    art = run_pipeline(cfg)
    assert art.error["code"] == "schedule-overflow" and art.error["level"] == 2
    assert len(art.fields) == 1 and len(art.report) == 1
    assert art.summary["flags"]["levels_complete"] is False
    export(art, tmp_path)
    out = summarize(tmp_path)
    assert out["consistent"] and not out["all_pass"]


def test_frostman_estimated_dimension():
    cfg = parse_config(json.dumps({
        "measure": {"kind": "generator", "name": "uniform-segment",
                    "params": {"start": [-0.6, 0], "end": [0.6, 0]}},
        "levels": 1, "frostman": {"enabled": True}}))
    art = run_pipeline(cfg)
    assert art.frostman["d"] == pytest.approx(1.0, abs=0.15)
    assert art.frostman["theta"] == pytest.approx(0.25, abs=0.02)
    assert art.frostman["theta"] == theta_exponent(art.frostman["d"])


def test_frostman_failure_recorded():
    cfg = parse_config(json.dumps(dict(MINIMAL, frostman={"enabled": True})))
    art = run_pipeline(cfg)
    assert art.error["stage"] == "frostman" and art.error["code"] == "invalid-dimension"
    assert not art.summary["all_pass"]


# -- export ---------------------------------------------------------------------------------

def test_export_rejects_empty():
    with pytest.raises(LabError) as exc:
        export(RunArtifacts(parse_config(json.dumps(MINIMAL))), "unused")
    assert exc.value.code == "io-error"


def test_export_reimport_reproduces_summary(acceptance_runs):
    for name, runs in acceptance_runs.items():
        out = summarize(runs[0]["dir"])
        assert out["consistent"], name
        assert out["flags"] == runs[0]["art"].summary["flags"]


def test_manifest_detects_any_byte_change(tmp_path):
    art = run_pipeline(parse_config(json.dumps(MINIMAL)))
    export(art, tmp_path)
    assert validate_manifest(tmp_path) == []
    path = os.path.join(tmp_path, "report.csv")
    data = open(path, "rb").read()
    open(path, "wb").write(data[:-2] + bytes([data[-2] ^ 1]) + data[-1:])
    assert validate_manifest(tmp_path) == ["report.csv"]
    with pytest.raises(LabError) as exc:
        summarize(tmp_path)
    assert exc.value.code == "manifest-mismatch"
    open(path, "wb").write(data)
    assert validate_manifest(tmp_path) == []


def test_export_files_parse(acceptance_runs):
    d = acceptance_runs["segment"][0]["dir"]
    manifest = json.load(open(os.path.join(d, "manifest.json")))
    names = set(manifest["files"])
    for n in (1, 2, 3):
        assert {f"approx_{n}.json", f"violations_{n}.csv", f"decay_{n}.csv", f"field_{n}.csv"} <= names
    summary = json.load(open(os.path.join(d, "summary.json")))
    assert set(summary["flags"]) >= {"energy_ratio", "w1_target_decreasing", "max_principle"}
    ident = json.load(open(os.path.join(d, "identities.json")))
    assert len(ident) == 3 and all(item["curvature"]["parts"]["mixed_x"] == 0.0 for item in ident)


def test_configs_dir_loads():
    for name in ("single", "two", "disk", "disk_frostman", "segment", "cantor"):
        assert load_config(name)["levels"] == 3
