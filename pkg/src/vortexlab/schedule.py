"""Strength schedules r_n for sequences of vortex configurations.

For a sequence of configurations with total multiplicity N_n and separation
eps_n, the strengths r_n are chosen so that the three ratios

    N r^{-1/4},   N / (F(N) sqrt(r)),   log(r) / (F(N) sqrt(r))

are all at most a margin that shrinks with the level (``1/n`` by default).
``F`` is a positive decreasing function with ``F(N_n) <= eps_n``: either the
power law ``C x^{-1/d}`` of a d-Frostman measure or a log-log interpolation
of observed ``(N_n, eps_n)`` pairs.

Error codes: ``invalid-dimension``, ``invalid-epsilon``, ``schedule-overflow``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import LabError

MAX_LOG2_R = 120
CSV_COLUMNS = ("n", "N_n", "epsilon_n", "F_n", "r_n", "ratio1", "ratio2", "ratio3", "N_rtheta",
               "margin")


def theta_exponent(d):
    """Energy growth exponent ``min(1/4, d / (2 (d + 1)))``."""
    if not d > 0:
        raise LabError("invalid-dimension", f"d must be positive, got {d!r}")
    return min(0.25, d / (2.0 * (d + 1.0)))


def frostman_F(d, C):
    """Return ``x -> C x**(-1/d)``."""
    if not d > 0:
        raise LabError("invalid-dimension", f"d must be positive, got {d!r}")
    if not C > 0:
        raise ValueError("C must be positive")
    d, C = float(d), float(C)

    def F(x):
        return C * np.power(np.asarray(x, dtype=float), -1.0 / d)

    return F


class _LogLogEnvelope:
    """Positive non-increasing interpolant, piecewise linear in log-log space."""

    def __init__(self, logx, logy, tail_slope):
        self.logx = logx
        self.logy = logy
        self.tail_slope = tail_slope

    def __call__(self, x):
        lx = np.log(np.asarray(x, dtype=float))
        y = np.interp(lx, self.logx, self.logy)
        beyond = lx > self.logx[-1]
        y = np.where(beyond, self.logy[-1] + self.tail_slope * (lx - self.logx[-1]), y)
        # relative shave so exp(log(eps)) never rounds above eps
        out = np.exp(y) * (1 - 1e-12)
        return float(out) if out.ndim == 0 else out


def interpolated_F(pairs, min_tail_slope=-100.0, max_tail_slope=-0.01):
    """Decreasing F with ``F(N_n) <= eps_n`` for the given ``(N_n, eps_n)``.

    The eps values are replaced by their running minimum (repeated N keep the
    smallest eps), joined linearly in log-log space, held constant before the
    first knot and continued past the last knot with the last log-log slope
    clamped to ``[min_tail_slope, max_tail_slope]`` so that ``F -> 0``.
    """
    pairs = sorted((int(N), float(e)) for N, e in pairs)
    if not pairs:
        raise ValueError("need at least one (N, eps) pair")
    if any(e <= 0 for _, e in pairs):
        raise LabError("invalid-epsilon", "epsilon values must be positive")
    if any(N < 1 for N, _ in pairs):
        raise ValueError("N values must be >= 1")
    Ns, eps = [], []
    for N, e in pairs:
        if Ns and Ns[-1] == N:
            eps[-1] = min(eps[-1], e)
        else:
            Ns.append(N)
            eps.append(e)
    eps = np.minimum.accumulate(np.array(eps))
    logx = np.log(np.array(Ns, dtype=float))
    logy = np.log(eps)
    if len(Ns) > 1:
        slope = (logy[-1] - logy[-2]) / (logx[-1] - logx[-2])
    else:
        slope = max_tail_slope
    slope = float(np.clip(slope, min_tail_slope, max_tail_slope))
    return _LogLogEnvelope(logx, logy, slope)


def schedule_ratios(N, F_of_N, r):
    """The three schedule ratios at strength r."""
    sr = math.sqrt(r)
    return N * r ** -0.25, N / (F_of_N * sr), math.log(r) / (F_of_N * sr)


def select_r(N, F_of_N, margin, r_min=2.0):
    """Smallest power of two ``r >= r_min`` whose three ratios are <= margin.

    The first two ratios decrease in r; the third rises up to ``r = e**2``
    and decreases after, so the doubling scan returns the first power of two
    at which all three hold.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not F_of_N > 0:
        raise ValueError("F_of_N must be positive")
    if not margin > 0:
        raise ValueError("margin must be positive")
    k = max(1, int(math.ceil(math.log2(r_min) - 1e-12)))
    while k <= MAX_LOG2_R:
        r = 2.0 ** k
        if all(v <= margin for v in schedule_ratios(N, F_of_N, r)):
            return r
        k += 1
    raise LabError("schedule-overflow", f"no r <= 2^{MAX_LOG2_R} meets margin {margin}")


@dataclass(frozen=True)
class ScheduleEntry:
    n: int
    N: int
    epsilon: float
    F: float
    r: float
    margin: float


@dataclass(frozen=True)
class ScheduleParams:
    entries: tuple
    theta: float
    frostman_d: float | None = None
    margin_scale: float = 1.0

    def margins(self):
        return [e.margin for e in self.entries]


def margin_for_level(n, scale=1.0):
    """Target bound ``scale / n`` on every ratio at level n (1-based)."""
    return scale / n


def build_schedule(levels, F, theta, frostman_d=None, margin_scale=1.0, r_min=2.0):
    """Select r_n for each ``(N_n, eps_n)`` in ``levels`` (1-based order).

    Strengths are forced strictly increasing by also requiring
    ``r_n >= 2 r_{n-1}``.
    """
    entries = []
    prev = r_min / 2.0
    for n, (N, eps) in enumerate(levels, start=1):
        Fn = float(F(N))
        margin = margin_for_level(n, margin_scale)
        r = select_r(N, Fn, margin, r_min=max(r_min, 2 * prev))
        entries.append(ScheduleEntry(n, int(N), float(eps), Fn, r, margin))
        prev = r
    return ScheduleParams(tuple(entries), float(theta), frostman_d, float(margin_scale))


def _trend_ok(values, bound):
    """Non-increasing after the first index and final value within bound."""
    vals = list(values)
    if len(vals) <= 1:
        return True
    tail = vals[1:]
    mono = all(b <= a for a, b in zip(tail, tail[1:]))
    return bool(mono and vals[-1] <= bound)


def verify_schedule(s):
    """Recompute the ratios and ``N r^-theta`` per level and check their trend.

    Returns a dict with a ``rows`` list (one dict per level) and a ``checks``
    dict of four booleans (``ratio1``, ``ratio2``, ``ratio3``, ``N_rtheta``);
    also reports ``within_margin`` (every ratio at most its row margin) and
    ``eps_dominates_F``.
    """
    rows = []
    for e in s.entries:
        r1, r2, r3 = schedule_ratios(e.N, e.F, e.r)
        rows.append({"n": e.n, "N_n": e.N, "epsilon_n": e.epsilon, "F_n": e.F, "r_n": e.r,
                     "ratio1": r1, "ratio2": r2, "ratio3": r3,
                     "N_rtheta": e.N * e.r ** (-s.theta), "margin": e.margin})
    if len(rows) == 1:
        checks = {k: True for k in ("ratio1", "ratio2", "ratio3", "N_rtheta")}
    else:
        last = rows[-1]["margin"]
        checks = {k: _trend_ok([row[k] for row in rows], last)
                  for k in ("ratio1", "ratio2", "ratio3", "N_rtheta")}
    within = all(max(row["ratio1"], row["ratio2"], row["ratio3"]) <= row["margin"] for row in rows)
    return {"rows": rows, "checks": checks, "within_margin": within,
            "eps_dominates_F": all(e.epsilon >= e.F for e in s.entries)}


def schedule_csv(s):
    """CSV text of a schedule (one row per level)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in verify_schedule(s)["rows"]:
        w.writerow([row["n"], row["N_n"]] + [repr(float(row[k])) for k in CSV_COLUMNS[2:]])
    return buf.getvalue()


def read_schedule_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: (int(v) if k in ("n", "N_n") else float(v)) for k, v in row.items()} for row in rows]
