"""Property tests for the invariants of every module."""

import json
import math
import os

import numpy as np
import pytest
from conftest import solve
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vortexlab.concentrate import hausdorff_distance, sigma_split, sublevel_set
from vortexlab.errors import LabError
from vortexlab.measure import (DiskMeasure, ball_masses, dirac_approximate, largest_remainder,
                               separation, w1_distance)
from vortexlab.pipeline import export, parse_config, run_pipeline, validate_manifest
from vortexlab.vortex import total_energy
from vortexlab.schedule import (build_schedule, interpolated_F, schedule_ratios, select_r,
                                theta_exponent, verify_schedule)

settings.load_profile("lab")


def disk_point(max_radius=0.9):
    return st.tuples(st.floats(0, max_radius), st.floats(0, 2 * math.pi)).map(
        lambda p: (p[0] * math.cos(p[1]), p[0] * math.sin(p[1])))


def rotate(pts, angle):
    c, s = math.cos(angle), math.sin(angle)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts @ np.array([[c, s], [-s, c]])


angles = st.floats(0, 2 * math.pi)
atom_lists = st.lists(st.tuples(disk_point(0.9), st.floats(0.05, 1.0)), min_size=1, max_size=8)


def atoms_measure(atoms):
    return DiskMeasure.from_atoms([p for p, _ in atoms], [w for _, w in atoms])


# -- measure ----------------------------------------------------------------------

@given(st.lists(disk_point(0.95), min_size=1, max_size=10), angles)
def test_separation_rotation_invariant(pts, angle):
    pts = np.array(pts)
    assume(len(pts) == 1 or min(np.hypot(*(p - q)) for i, p in enumerate(pts)
                                for q in pts[:i]) > 1e-6)
    assert separation(rotate(pts, angle)) == pytest.approx(separation(pts), rel=1e-9, abs=1e-12)


@given(atom_lists, st.floats(0.08, 0.3))
def test_dirac_w1_bound(atoms, cell_radius):
    m = atoms_measure(atoms)
    try:
        a = dirac_approximate(m, cell_radius, 400)
    except LabError:
        return
    k = len(a.multiplicities)
    bound = cell_radius + 2 * (1 - a.captured_mass) + k / a.N
    assert a.multiplicities.sum() == a.N and np.all(a.multiplicities >= 1)
    assert w1_distance(m, a.as_measure()) <= bound + 1e-9


@given(disk_point(0.8), disk_point(0.8), angles, st.floats(0.05, 0.5),
       st.lists(disk_point(1.0), min_size=1, max_size=6))
def test_ball_mass_rotation_invariant(p, q, angle, radius, probes):
    assume(math.dist(p, q) > 1e-3)
    m = DiskMeasure.uniform_segment(p, q)
    pr, qr = rotate([p, q], angle)
    mr = DiskMeasure.uniform_segment(pr, qr)
    got = ball_masses(mr, rotate(probes, angle), radius)
    assert np.allclose(got, ball_masses(m, np.array(probes), radius), atol=1e-9)


@given(atom_lists, atom_lists, atom_lists)
def test_w1_triangle(a, b, c):
    ma, mb, mc = atoms_measure(a), atoms_measure(b), atoms_measure(c)
    assert w1_distance(ma, mc) <= w1_distance(ma, mb) + w1_distance(mb, mc) + 1e-9
    assert w1_distance(ma, mb) == pytest.approx(w1_distance(mb, ma), abs=1e-9)
    assert w1_distance(ma, ma) == pytest.approx(0.0, abs=1e-9)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12), st.integers(1, 200))
def test_largest_remainder_sums(weights, N):
    w = np.array(weights) / sum(weights)
    mult = largest_remainder(w, N)
    assert mult.sum() == N
    assert np.all(np.abs(mult - w * N) < 1)


# -- schedule --------------------------------------------------------------------------

@given(st.integers(1, 500), st.floats(1e-3, 0.5), st.floats(0.05, 2.0), st.integers(1, 12))
def test_select_r_minimal_power_of_two(N, F, margin, kmin):
    r_min = 2.0 ** kmin
    try:
        r = select_r(N, F, margin, r_min=r_min)
    except LabError:
        return
    assert r >= r_min and math.log2(r) == int(math.log2(r))
    assert all(v <= margin for v in schedule_ratios(N, F, r))
    if r > r_min:
        assert any(v > margin for v in schedule_ratios(N, F, r / 2))


@given(st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_theta_monotone(d1, d2):
    lo, hi = sorted((d1, d2))
    assert theta_exponent(lo) <= theta_exponent(hi) <= 0.25
    if lo >= 1:
        assert theta_exponent(lo) == 0.25


@given(st.lists(st.tuples(st.integers(1, 60), st.floats(0.02, 0.5)), min_size=1, max_size=5))
def test_interpolated_F_dominated(pairs):
    F = interpolated_F(pairs)
    xs = np.arange(1, 300)
    vals = F(xs)
    assert np.all(vals > 0) and np.all(np.diff(vals) <= 0)
    for N, eps in pairs:
        assert F(N) <= eps
    levels = sorted(set((N, min(e for n2, e in pairs if n2 == N)) for N, _ in pairs))
    s = build_schedule(levels, F, 0.25, margin_scale=4.0)
    check = verify_schedule(s)
    assert check["within_margin"] and check["eps_dominates_F"]
    rs = [e.r for e in s.entries]
    assert all(b >= 2 * a for a, b in zip(rs, rs[1:]))


# -- concentration -------------------------------------------------------------------

point_sets = st.lists(disk_point(1.0), min_size=1, max_size=12).map(np.array)


@given(point_sets, point_sets, point_sets)
def test_hausdorff_metric(a, b, c):
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, c) <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + 1e-12


FIELDS = [((0.0, 0.0),), ((-0.4, 0.0), (0.4, 0.0)), ((0.2, 0.3), (-0.3, -0.1), (0.1, -0.5))]


@given(st.sampled_from(range(len(FIELDS))), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_z_theta_nested(idx, t1, t2):
    f = solve(FIELDS[idx], r=16.0)
    lo, hi = sorted((t1, t2))
    big, small = sublevel_set(f, "Z_theta", lo).mask, sublevel_set(f, "Z_theta", hi).mask
    assert np.all(big[small])
    assert sigma_split(f)[0] + sigma_split(f)[1] == pytest.approx(1.0, abs=1e-12)


# -- pipeline ---------------------------------------------------------------------------

@given(st.integers(1, 6), st.floats(0.05, 1.0), st.floats(1e-10, 1e-4), st.integers(0, 2 ** 31))
def test_config_round_trip(levels, kappa, tol, seed):
    cfg = parse_config(json.dumps({"measure": {"kind": "generator", "name": "uniform-disk"},
                                   "levels": levels, "seed": seed,
                                   "solver": {"kappa": kappa, "tol": tol}}))
    again = parse_config(cfg.to_json())
    assert again == cfg and again.to_json() == cfg.to_json()


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    d = tmp_path_factory.mktemp("export")
    cfg = parse_config(json.dumps({"measure": {"kind": "generator", "name": "single-atom"},
                                   "levels": 1}))
    export(run_pipeline(cfg), d)
    return str(d)


@given(st.sampled_from(["config.json", "report.csv", "schedule.csv", "nodal.csv"]),
       st.integers(0, 10 ** 6), st.integers(1, 255))
def test_manifest_flags_exactly_changed_file(exported, name, pos, flip):
    path = os.path.join(exported, name)
    data = open(path, "rb").read()
    changed = bytearray(data)
    changed[pos % len(data)] ^= flip
    try:
        open(path, "wb").write(bytes(changed))
        assert validate_manifest(exported) == [name]
    finally:
        open(path, "wb").write(data)
    assert validate_manifest(exported) == []


# -- vortex -------------------------------------------------------------------------------

@settings(max_examples=6)
@given(st.lists(disk_point(0.7), min_size=1, max_size=3), st.lists(st.integers(1, 2), min_size=3,
                                                                    max_size=3))
def test_vortex_quantized_and_nonpositive(pts, mult):
    pts = np.array(pts)
    assume(len(pts) == 1 or separation(pts) > 0.1)
    mult = mult[:len(pts)]
    f = solve(pts, mult, r=16.0)
    assert total_energy(f) / (2 * math.pi * sum(mult)) == pytest.approx(1.0, abs=0.02)
    assert f.u.max() <= 1e-8
