import math

import numpy as np
import pytest

from vortexlab.errors import LabError
from vortexlab.measure import DiskMeasure, dirac_approximate, separation
from vortexlab.schedule import (CSV_COLUMNS, MAX_LOG2_R, ScheduleEntry, ScheduleParams,
                                build_schedule, frostman_F, interpolated_F, read_schedule_csv,
                                schedule_csv, schedule_ratios, select_r, theta_exponent,
                                verify_schedule)


def first_power_of_two(N, F, margin):
    """Independent oracle: scan r = 2, 4, 8, ... and evaluate the ratios directly."""
    for k in range(1, MAX_LOG2_R + 1):
        r = 2.0 ** k
        if (N * r ** -0.25 <= margin and N / (F * math.sqrt(r)) <= margin
                and math.log(r) / (F * math.sqrt(r)) <= margin):
            return r
    return None


# -- theta ---------------------------------------------------------------------

@pytest.mark.parametrize("d, expected", [(2, 0.25), (1, 0.25), (0.5, 1 / 6)])
def test_theta_exponent(d, expected):
    assert theta_exponent(d) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("d", [0, -1])
def test_theta_invalid(d):
    with pytest.raises(LabError) as exc:
        theta_exponent(d)
    assert exc.value.code == "invalid-dimension"


# -- F -----------------------------------------------------------------------

@pytest.mark.parametrize("d, C, expected", [(1, 1, 0.25), (2, 1, 0.5), (0.5, 2, 0.125)])
def test_frostman_F_examples(d, C, expected):
    assert frostman_F(d, C)(4) == pytest.approx(expected)


def test_frostman_F_decreasing_to_zero():
    F = frostman_F(1.5, 0.7)
    x = np.geomspace(1, 1e12, 50)
    v = F(x)
    assert np.all(v > 0) and np.all(np.diff(v) < 0) and v[-1] < 1e-7


def test_interpolated_single_pair():
    F = interpolated_F([(2, 0.3)])
    assert F(2) <= 0.3
    x = np.arange(1, 200)
    assert np.all(np.diff(F(x)) <= 0)
    assert F(1e6) < F(2)


def test_interpolated_running_minimum():
    F = interpolated_F([(2, 0.3), (4, 0.4)])
    assert F(4) <= 0.3
    assert F(3) <= F(2)


def test_interpolated_tail_slope_clamped():
    F = interpolated_F([(2, 0.3), (3, 1e-6)])
    # raw log-log slope is about -30; slopes steeper than -100 would be clamped
    assert F(6) == pytest.approx(1e-6 * 2.0 ** -(math.log(0.3 / 1e-6) / math.log(1.5)), rel=1e-9)
    G = interpolated_F([(2, 0.3), (3, 1e-30)])
    assert G(6) == pytest.approx(1e-30 * 2.0 ** -100, rel=1e-9)
    H = interpolated_F([(2, 0.3), (4, 0.3)])
    # flat data still decays through the -0.01 floor on the tail slope
    assert H(400) < H(4)


def test_interpolated_disk_levels_dominated_by_separation():
    m = DiskMeasure.uniform_disk()
    approxes = [dirac_approximate(m, e, 1000) for e in (0.3, 0.2, 0.15)]
    F = interpolated_F([(a.N, a.epsilon) for a in approxes])
    for a in approxes:
        assert F(a.N) <= separation(a.points)


def test_interpolated_invalid_epsilon():
    with pytest.raises(LabError) as exc:
        interpolated_F([(2, 0.3), (4, 0.0)])
    assert exc.value.code == "invalid-epsilon"


# -- select_r ------------------------------------------------------------------------

def test_select_r_unit_margin():
    assert select_r(1, 1.0, 1.0) == 2.0 == first_power_of_two(1, 1.0, 1.0)


def test_select_r_half_margin_matches_scan():
    # log(16)/4 = 0.693 > 0.5, so 16 is rejected; the scan stops at 128
    assert select_r(1, 1.0, 0.5) == first_power_of_two(1, 1.0, 0.5) == 128.0


@pytest.mark.parametrize("N, F", [(1, 1.0), (3, 0.2), (7, 0.1), (19, 0.05)])
def test_select_r_smaller_margin_never_smaller_r(N, F):
    rs = [select_r(N, F, m) for m in (4.0, 2.0, 1.0, 0.5, 0.25)]
    assert rs == sorted(rs)


def test_select_r_overflow():
    with pytest.raises(LabError) as exc:
        select_r(10 ** 40, 1.0, 1.0)
    assert exc.value.code == "schedule-overflow"


def test_select_r_respects_r_min():
    assert select_r(1, 1.0, 1.0, r_min=300) == 512.0


# -- verify_schedule --------------------------------------------------------------------

def test_single_entry_vacuous():
    s = ScheduleParams((ScheduleEntry(1, 5, 0.1, 0.1, 1e6, 1.0),), 0.25)
    assert all(verify_schedule(s)["checks"].values())


def test_margin_one_over_n_rows():
    m = DiskMeasure.uniform_disk()
    approxes = [dirac_approximate(m, 0.3 * 0.75 ** k, 1000) for k in range(4)]
    pairs = [(a.N, a.epsilon) for a in approxes]
    s = build_schedule(pairs, interpolated_F(pairs), 0.25)
    rep = verify_schedule(s)
    for row in rep["rows"]:
        assert max(row["ratio1"], row["ratio2"], row["ratio3"]) <= 1.0 / row["n"]
    assert rep["within_margin"] and rep["eps_dominates_F"]
    rs = [e.r for e in s.entries]
    assert all(b > a for a, b in zip(rs, rs[1:]))


def test_frostman_schedule_five_levels():
    m = DiskMeasure.uniform_disk()
    approxes = [dirac_approximate(m, 0.3 * 0.8 ** k, 5000) for k in range(5)]
    C = min(a.epsilon * math.sqrt(a.N) for a in approxes) * (1 - 1e-12)
    pairs = [(a.N, a.epsilon) for a in approxes]
    s = build_schedule(pairs, frostman_F(2, C), theta_exponent(2), frostman_d=2)
    rep = verify_schedule(s)
    col = [row["N_rtheta"] for row in rep["rows"]]
    assert all(b < a for a, b in zip(col, col[1:]))
    assert col[-1] <= 1 / 5
    assert rep["checks"]["N_rtheta"] and rep["eps_dominates_F"]


def test_ratios_recomputed_independently():
    pairs = [(3, 0.2), (7, 0.12)]
    s = build_schedule(pairs, interpolated_F(pairs), 0.25)
    for e in s.entries:
        r1, r2, r3 = schedule_ratios(e.N, e.F, e.r)
        assert r1 == e.N * e.r ** -0.25
        assert r2 == e.N / (e.F * math.sqrt(e.r))
        assert r3 == math.log(e.r) / (e.F * math.sqrt(e.r))


def test_csv_round_trip():
    pairs = [(3, 0.2), (7, 0.12), (12, 0.09)]
    s = build_schedule(pairs, interpolated_F(pairs), 0.25)
    text = schedule_csv(s)
    assert text.splitlines()[0].split(",") == list(CSV_COLUMNS)
    rows = read_schedule_csv(text)
    for row, ref in zip(rows, verify_schedule(s)["rows"]):
        for k in CSV_COLUMNS:
            assert row[k] == ref[k]
