import functools
import json
import os
import time

import pytest
from hypothesis import HealthCheck, settings

from vortexlab.pipeline import export, parse_config, run_pipeline
from vortexlab.vortex import GridSpec, ZeroConfig, solve_vortex

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(ROOT, "configs")
ACCEPTANCE_CONFIGS = ("single", "two", "disk", "disk_frostman", "segment", "cantor")

CRITERIA = {}


def record(number, ok, detail):
    """Store the outcome of an acceptance criterion for the closing summary."""
    CRITERIA[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@functools.lru_cache(maxsize=None)
def _solve_cached(points, mult, r, grid):
    return solve_vortex(ZeroConfig(points, mult), r, grid)


def solve(points, mult=None, r=16.0, grid=None):
    """Cached solve keyed on the zero set, r and grid."""
    points = tuple(tuple(float(c) for c in p) for p in points)
    mult = tuple(int(m) for m in mult) if mult is not None else tuple(1 for _ in points)
    grid = GridSpec.for_r(r) if grid is None else grid
    return _solve_cached(points, mult, float(r), grid)


def load_config(name):
    with open(os.path.join(CONFIG_DIR, name + ".json"), encoding="utf-8") as fh:
        return parse_config(fh.read())


@pytest.fixture(scope="session")
def acceptance_runs(tmp_path_factory):
    """Every acceptance config run twice and exported twice."""
    out = {}
    for name in ACCEPTANCE_CONFIGS:
        runs = []
        for k in range(2):
            t = time.perf_counter()
            art = run_pipeline(load_config(name), base_dir=CONFIG_DIR)
            d = tmp_path_factory.mktemp(f"{name}_{k}")
            manifest = export(art, d)
            runs.append({"art": art, "dir": str(d), "manifest": manifest,
                         "seconds": time.perf_counter() - t})
        out[name] = runs
    return out


def read_manifest_bytes(directory):
    with open(os.path.join(directory, "manifest.json"), "rb") as fh:
        return fh.read()


def manifest_of(directory):
    return json.loads(read_manifest_bytes(directory))
