"""Concentration measures of vortex fields and the set geometry around zeros.

The concentration measure of a field is its normalized energy density
``r (1 - e^u) / E`` restricted to the unit disk. This module builds it,
thresholds the field into sub-level sets, measures how tightly those sets
hug the zeros, fits the exponential decay of ``1 - e^u`` away from them, and
assembles a per-level convergence report for a sequence of fields.

Error codes: ``zero-energy``, ``empty-set``, ``orphan-component``,
``insufficient-samples``, ``region-overlap``, ``sequence-mismatch``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import LabError
from .measure import DiskMeasure, w1_distance
from .vortex import local_factor_h, total_energy


# -- concentration measure --------------------------------------------------

def _disk_window(f):
    """Index slices of the node block covering the closed unit disk."""
    xs, ys = f.grid.axes()
    ix = np.nonzero(np.abs(xs) <= 1.0)[0]
    iy = np.nonzero(np.abs(ys) <= 1.0)[0]
    return slice(ix[0], ix[-1] + 1), slice(iy[0], iy[-1] + 1)


def energy_density(f):
    """Node masses ``r (1 - e^u) h^2`` over the whole grid."""
    return f.r * -np.expm1(f.u) * f.grid.h ** 2


def sigma_measure(f):
    """Concentration measure: node masses ``r (1 - e^u) h^2 / E`` at nodes in
    the closed unit disk, as a grid measure (total mass at most one)."""
    E = total_energy(f)
    if not E > 0:
        raise LabError("zero-energy", "field carries no energy")
    sx, sy = _disk_window(f)
    X, Y = f.grid.mesh()
    X, Y = X[sy, sx], Y[sy, sx]
    masses = energy_density(f)[sy, sx] / E
    masses = np.where(np.hypot(X, Y) <= 1.0, np.maximum(masses, 0.0), 0.0)
    h = f.grid.h
    return DiskMeasure.from_grid(masses, h, (X[0, 0] - h / 2, Y[0, 0] - h / 2))


def sigma_split(f):
    """``(mass inside the disk, mass outside)`` of the normalized density;
    the two parts sum to one up to rounding."""
    X, Y = f.grid.mesh()
    dens = energy_density(f)
    E = dens.sum()
    if not E > 0:
        raise LabError("zero-energy", "field carries no energy")
    inside = np.hypot(X, Y) <= 1.0
    return float(dens[inside].sum() / E), float(dens[~inside].sum() / E)


# -- sub-level sets -----------------------------------------------------------

@dataclass(frozen=True)
class Component:
    nodes: np.ndarray           # flat indices into the grid
    zero_labels: tuple          # indices of zeros whose nearest node is here
    diameter: float


@dataclass(frozen=True, eq=False)
class SubLevelSet:
    mode: str
    level: float
    mask: np.ndarray
    points: np.ndarray          # coordinates of the selected nodes
    components: tuple

    def __len__(self):
        return len(self.points)


def _diameter(pts):
    if len(pts) <= 1:
        return 0.0
    cand = pts
    if len(pts) > 3:
        try:
            cand = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear: extremes along the spread direction suffice
            cand = pts[[np.argmin(pts[:, 0] + pts[:, 1] * 1e-3), np.argmax(pts[:, 0] + pts[:, 1] * 1e-3),
                        np.argmin(pts[:, 1]), np.argmax(pts[:, 1])]]
    diff = cand[:, None, :] - cand[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def nearest_node(f, point):
    xs, ys = f.grid.axes()
    h = f.grid.h
    ix = int(np.clip(np.round((point[0] - xs[0]) / h), 0, f.grid.n))
    iy = int(np.clip(np.round((point[1] - ys[0]) / h), 0, f.grid.n))
    return iy, ix


def sublevel_set(f, mode="Omega_minus", theta=None):
    """Node sets ``{1 - e^u >= theta}`` (``mode="Z_theta"``) or
    ``{e^u <= 1/2}`` (``mode="Omega_minus"``) with their 4-connected
    components, each tagged with the zeros it contains."""
    a = np.exp(f.u)
    if mode == "Z_theta":
        if theta is None or not 0 < theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        mask = 1.0 - a >= theta
        level = float(theta)
    elif mode == "Omega_minus":
        mask = a <= 0.5
        level = 0.5
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _with_components(f, mode, level, mask)


def threshold_set(f, bound):
    """Nodes with ``e^u <= bound`` (the near-zero set), as a SubLevelSet."""
    return _with_components(f, "near_zero", float(bound), np.exp(f.u) <= bound)


def _with_components(f, mode, level, mask):
    X, Y = f.grid.mesh()
    labels, count = ndimage.label(mask)
    zero_comp = {}
    for j, p in enumerate(f.zeros.points):
        lab = labels[nearest_node(f, p)]
        if lab:
            zero_comp.setdefault(lab, []).append(j)
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(1, count + 2))
    xy = np.stack([X.ravel(), Y.ravel()], axis=1)
    comps = []
    for lab in range(1, count + 1):
        idx = order[bounds[lab - 1]:bounds[lab]]
        comps.append(Component(idx, tuple(zero_comp.get(lab, ())), _diameter(xy[idx])))
    return SubLevelSet(mode, level, mask, xy[mask.ravel()], tuple(comps))


def _as_points(a):
    pts = a.points if isinstance(a, SubLevelSet) else np.asarray(a, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise LabError("empty-set", "Hausdorff distance of an empty set")
    return pts


def hausdorff_distance(a, b):
    """Exact Hausdorff distance between two finite point sets."""
    pa, pb = _as_points(a), _as_points(b)
    dab = cKDTree(pb).query(pa)[0].max()
    dba = cKDTree(pa).query(pb)[0].max()
    return float(max(dab, dba))


# -- localization and decay -------------------------------------------------

def component_radius_check(f):
    """Per-zero ``radius * sqrt(r) / N`` of the Omega-minus component that
    contains the zero (radius = farthest component node from the zero)."""
    if len(f.zeros) == 0:
        return np.zeros(0)
    om = sublevel_set(f, "Omega_minus")
    orphans = [c for c in om.components if not c.zero_labels]
    if orphans:
        raise LabError("orphan-component", f"{len(orphans)} component(s) contain no zero")
    X, Y = f.grid.mesh()
    xy = np.stack([X.ravel(), Y.ravel()], axis=1)
    radius = np.zeros(len(f.zeros))
    found = np.zeros(len(f.zeros), dtype=bool)
    for c in om.components:
        for j in c.zero_labels:
            radius[j] = np.hypot(*(xy[c.nodes] - f.zeros.points[j]).T).max()
            found[j] = True
    if not np.all(found):
        raise LabError("orphan-component", "a zero lies outside every component")
    return radius * math.sqrt(f.r) / f.N


def distance_to_set(f, mask):
    """Euclidean distance from every node to the nearest node of ``mask``."""
    return ndimage.distance_transform_edt(~mask) * f.grid.h


def decay_fit(f, min_samples=30):
    """Fit ``log(1 - e^u) ~ slope * sqrt(r) * dist(z, Omega-minus) + b``.

    Uses interior nodes at distance at least ``2/sqrt(r)`` from the set with
    ``1 - e^u > 1e-12``.

    Returns
    -------
    c_hat, intercept, r2 : float
        ``c_hat = -slope``, the fit intercept and its coefficient of
        determination.
    """
    x, y = decay_samples(f)
    if len(x) < min_samples:
        raise LabError("insufficient-samples", f"{len(x)} eligible nodes")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 0.0
    return float(-slope), float(intercept), float(r2)


def decay_samples(f):
    """The (x, y) series behind :func:`decay_fit`."""
    om = np.exp(f.u) <= 0.5
    if not om.any():
        raise LabError("insufficient-samples", "Omega-minus is empty")
    dist = distance_to_set(f, om)
    tail = -np.expm1(f.u)
    sq = math.sqrt(f.r)
    keep = np.zeros_like(om)
    keep[1:-1, 1:-1] = True
    keep &= (dist >= 2.0 / sq) & (tail > 1e-12)
    return sq * dist[keep], np.log(tail[keep])


@dataclass(frozen=True)
class Region:
    """Annulus ``inner <= |z - center| <= outer`` (a disk when inner = 0)."""

    center: tuple = (0.0, 0.0)
    inner: float = 0.0
    outer: float = 1.0

    def contains(self, X, Y):
        d = np.hypot(X - self.center[0], Y - self.center[1])
        return (d >= self.inner) & (d <= self.outer)

    def distance(self, p):
        d = math.hypot(p[0] - self.center[0], p[1] - self.center[1])
        if d < self.inner:
            return self.inner - d
        return max(0.0, d - self.outer)


def vanishing_mass_check(fields, region):
    """``sigma_n(region)`` for each field, requiring the region to stay at
    least twice the largest Omega-minus radius away from every zero."""
    out = []
    for f in fields:
        radii = component_radius_check(f) * f.N / math.sqrt(f.r)
        reach = 2 * float(radii.max()) if len(radii) else 0.0
        for p in f.zeros.points:
            if region.distance(p) < reach:
                raise LabError("region-overlap",
                              f"zero ({p[0]:.6g}, {p[1]:.6g}) within {reach:.4g} of region")
        X, Y = f.grid.mesh()
        dens = energy_density(f)
        E = dens.sum()
        if not E > 0:
            raise LabError("zero-energy", "field carries no energy")
        sel = region.contains(X, Y) & (np.hypot(X, Y) <= 1.0)
        out.append(float(dens[sel].sum() / E))
    return np.array(out)


# -- report -----------------------------------------------------------------

REPORT_COLUMNS = ("n", "r_n", "N_n", "E_n", "E_ratio", "W1_to_target", "W1_to_diracs",
                  "E_rtheta", "decay_slope", "decay_r2", "balls_ratio", "h_log_integral_mean",
                  "sigma_disk_mass", "E_disk")


def normalized(m):
    """The grid measure rescaled to unit mass."""
    return DiskMeasure.from_grid(m.masses / m.total_mass, m.cell_size, m.origin)


def insid_ball_radius(f, eps):
    """Ball radius for the local-factor integral: ``min(eps, N / sqrt(r))``
    but never below three grid spacings."""
    return max(3 * f.grid.h, min(eps, f.N / math.sqrt(f.r)))


def report_row(n, f, approx, target, theta, w1_cap=400):
    sig = sigma_measure(f)
    sig_p = normalized(sig)
    E = total_energy(f)
    try:
        c_hat, _, r2 = decay_fit(f)
    except LabError:
        c_hat, r2 = float("nan"), float("nan")
    try:
        balls = float(component_radius_check(f).max())
    except LabError:
        balls = float("nan")
    rb = insid_ball_radius(f, approx.epsilon)
    logs = [abs(local_factor_h(f, j, rb)[1]) for j in range(len(f.zeros))]
    X, Y = f.grid.mesh()
    dens = energy_density(f)
    return {
        "n": n, "r_n": f.r, "N_n": f.N, "E_n": E, "E_ratio": E / (2 * math.pi * f.N),
        "W1_to_target": w1_distance(sig_p, target, w1_cap),
        "W1_to_diracs": w1_distance(sig_p, approx.as_measure(), w1_cap),
        "E_rtheta": E * f.r ** (-theta), "decay_slope": c_hat, "decay_r2": r2,
        "balls_ratio": balls, "h_log_integral_mean": float(np.sum(logs) / f.N),
        "sigma_disk_mass": sig.total_mass,
        "E_disk": float(dens[np.hypot(X, Y) <= 1.0].sum()),
    }


def convergence_report(target, schedule, fields, approxes, w1_cap=400):
    """One row per level; see ``REPORT_COLUMNS``.

    ``W1_to_target`` and ``W1_to_diracs`` use the concentration measure
    renormalized to unit mass. ``E_disk`` is the energy inside the unit disk.
    """
    if not (len(schedule.entries) == len(fields) == len(approxes)):
        raise LabError("sequence-mismatch", "schedule, fields and approximations differ in length")
    return [report_row(e.n, f, a, target, schedule.theta, w1_cap)
            for e, f, a in zip(schedule.entries, fields, approxes)]


def report_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in rows:
        w.writerow([row[k] if k in ("n", "N_n") else repr(float(row[k])) for k in REPORT_COLUMNS])
    return buf.getvalue()


def read_report_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: (int(v) if k in ("n", "N_n") else float(v)) for k, v in row.items()} for row in rows]
