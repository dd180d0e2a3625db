"""Probability measures on the closed unit disk.

Three representations are supported, all wrapped by :class:`DiskMeasure`:

* ``atoms``: finitely many weighted points;
* ``grid``: a row-major array of cell masses on a uniform square grid
  (a cell belongs to a ball when its *center* does);
* ``generator``: a named analytic family (``uniform-disk``,
  ``uniform-segment``, ``product-Cantor``, ``single-atom``) whose ball masses
  are evaluated in closed form.

The module also provides the Frostman exponent estimator, the weighted Dirac
approximation on a triangular lattice of disjoint balls, the separation
``epsilon`` of a point configuration and an exact Wasserstein-1 distance.

Error codes raised (as :class:`~vortexlab.errors.LabError`):
``outside-disk``, ``unnormalized``, ``insufficient-scale-range``,
``denominator-too-small``, ``boundary-support``, ``empty-capture``,
``duplicate-point``, ``unknown-generator``.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.signal import fftconvolve
from scipy.sparse import coo_matrix, vstack
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import LabError

GENERATORS = ("uniform-disk", "uniform-segment", "product-Cantor", "single-atom")

_DISK_TOL = 1e-12
_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiskMeasure:
    """A finite measure on the closed unit disk.

    Use the classmethod constructors rather than the raw dataclass fields.
    Atom and generator measures are probability measures; grid measures may
    carry total mass below one (restrictions of concentration measures).
    """

    kind: str
    points: np.ndarray | None = None
    weights: np.ndarray | None = None
    masses: np.ndarray | None = None
    cell_size: float | None = None
    origin: tuple | None = None
    generator: str | None = None
    params: dict = field(default_factory=dict)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_atoms(cls, points, weights, normalize=True):
        pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, 2)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise ValueError("points and weights differ in length")
        if np.any(w < 0):
            raise LabError("unnormalized", "negative atom weight")
        if np.any(np.hypot(pts[:, 0], pts[:, 1]) > 1 + _DISK_TOL):
            raise LabError("outside-disk", "atom outside the closed unit disk")
        if normalize:
            total = w.sum()
            if total <= 0:
                raise LabError("unnormalized", "zero total mass")
            w = w / total
        return cls("atoms", points=pts, weights=w)

    @classmethod
    def from_grid(cls, masses, cell_size, origin, normalize=False):
        """Grid measure; ``masses[i, j]`` sits at the center of cell (i, j),
        i.e. at ``origin + ((j + 1/2) h, (i + 1/2) h)``."""
        arr = np.array(masses, dtype=float)
        if arr.ndim != 2:
            raise ValueError("grid masses must be a 2D array")
        if np.any(arr < 0):
            raise LabError("unnormalized", "negative cell mass")
        m = cls("grid", masses=arr, cell_size=float(cell_size),
                origin=(float(origin[0]), float(origin[1])))
        xy = m.cell_centers()
        outside = np.hypot(xy[..., 0], xy[..., 1]) > 1 + _DISK_TOL
        if np.any(arr[outside] > 0):
            raise LabError("outside-disk", "positive mass on a cell outside the disk")
        if normalize:
            total = arr.sum()
            if total <= 0:
                raise LabError("unnormalized", "zero total mass")
            m = cls("grid", masses=arr / total, cell_size=m.cell_size, origin=m.origin)
        return m

    @classmethod
    def uniform_disk(cls):
        return cls("generator", generator="uniform-disk")

    @classmethod
    def uniform_segment(cls, start, end):
        p, q = _check_segment(start, end)
        return cls("generator", generator="uniform-segment", params={"start": p, "end": q})

    @classmethod
    def product_cantor(cls, ratio=1 / 3, depth=6, start=(-1.0, 0.0), end=(1.0, 0.0)):
        """Middle-gap Cantor measure of the given depth laid on a segment
        (its product with a point mass in the transverse direction)."""
        if not 0 < ratio < 0.5:
            raise ValueError("Cantor ratio must lie in (0, 1/2)")
        if int(depth) < 0:
            raise ValueError("depth must be >= 0")
        p, q = _check_segment(start, end)
        return cls("generator", generator="product-Cantor",
                   params={"ratio": float(ratio), "depth": int(depth), "start": p, "end": q})

    @classmethod
    def single_atom(cls, point=(0.0, 0.0)):
        pt = (float(point[0]), float(point[1]))
        if math.hypot(*pt) > 1 + _DISK_TOL:
            raise LabError("outside-disk", "atom outside the closed unit disk")
        return cls("generator", generator="single-atom", params={"point": pt})

    @classmethod
    def from_generator(cls, name, **params):
        if name == "uniform-disk":
            return cls.uniform_disk()
        if name == "uniform-segment":
            return cls.uniform_segment(params["start"], params["end"])
        if name == "product-Cantor":
            return cls.product_cantor(**params)
        if name == "single-atom":
            return cls.single_atom(params.get("point", (0.0, 0.0)))
        raise LabError("unknown-generator", name)

    # -- basic queries ----------------------------------------------------
    @property
    def total_mass(self):
        if self.kind == "atoms":
            return float(self.weights.sum())
        if self.kind == "grid":
            return float(self.masses.sum())
        return 1.0

    def cell_centers(self):
        ny, nx = self.masses.shape
        h = self.cell_size
        xs = self.origin[0] + (np.arange(nx) + 0.5) * h
        ys = self.origin[1] + (np.arange(ny) + 0.5) * h
        X, Y = np.meshgrid(xs, ys)
        return np.stack([X, Y], axis=-1)

    def atomize(self, resolution=60):
        """Return ``(points, weights)`` of an atomic measure representing self.

        Atom and grid measures are returned exactly (cells with zero mass are
        dropped); generator measures are discretized with cells of exact mass
        whose count grows with ``resolution``.
        """
        if self.kind == "atoms":
            keep = self.weights > 0
            return self.points[keep], self.weights[keep]
        if self.kind == "grid":
            xy = self.cell_centers().reshape(-1, 2)
            w = self.masses.reshape(-1)
            keep = w > 0
            return xy[keep], w[keep]
        name = self.generator
        if name == "single-atom":
            return np.array([self.params["point"]]), np.array([1.0])
        if name == "uniform-disk":
            return _polar_equal_area(resolution)
        p, q = np.asarray(self.params["start"]), np.asarray(self.params["end"])
        if name == "uniform-segment":
            k = 40 * resolution
            t = (np.arange(k) + 0.5) / k
            return p + t[:, None] * (q - p), np.full(k, 1.0 / k)
        lo, length = _cantor_intervals(self.params["ratio"], self.params["depth"])
        per = max(1, int(math.ceil(40 * resolution / len(lo))))
        t = (lo[:, None] + length * (np.arange(per) + 0.5)[None, :] / per).reshape(-1)
        return p + t[:, None] * (q - p), np.full(t.size, 1.0 / t.size)

    def support_samples(self, pitch):
        """Points of the support spaced at most ``pitch`` apart (probe seeds)."""
        if self.kind != "generator" or self.generator == "single-atom":
            return self.atomize()[0]
        if self.generator == "uniform-disk":
            g = np.arange(-1.0, 1.0 + pitch, pitch)
            X, Y = np.meshgrid(g, g)
            pts = np.stack([X.ravel(), Y.ravel()], axis=1)
            return pts[np.hypot(pts[:, 0], pts[:, 1]) <= 1.0]
        p, q = np.asarray(self.params["start"]), np.asarray(self.params["end"])
        seg_len = float(np.hypot(*(q - p)))
        if self.generator == "uniform-segment":
            k = max(2, int(math.ceil(seg_len / pitch)) + 1)
            t = np.linspace(0.0, 1.0, k)
        else:
            lo, length = _cantor_intervals(self.params["ratio"], self.params["depth"])
            k = max(2, int(math.ceil(length * seg_len / pitch)) + 1)
            t = (lo[:, None] + length * np.linspace(0.0, 1.0, k)[None, :]).reshape(-1)
        return p + t[:, None] * (q - p)

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        if self.kind == "atoms":
            return {"kind": "atoms",
                    "atoms": [[float(x), float(y), float(w)]
                              for (x, y), w in zip(self.points, self.weights)]}
        if self.kind == "grid":
            return {"kind": "grid", "cell_size": self.cell_size, "origin": list(self.origin),
                    "shape": list(self.masses.shape),
                    "masses": [float(v) for v in self.masses.ravel()]}
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"kind": "generator", "name": self.generator, "params": params}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, spec):
        kind = spec.get("kind")
        if kind == "atoms":
            arr = np.asarray(spec["atoms"], dtype=float).reshape(-1, 3)
            return cls.from_atoms(arr[:, :2], arr[:, 2])
        if kind == "grid":
            shape = tuple(spec["shape"])
            masses = np.asarray(spec["masses"], dtype=float).reshape(shape)
            return cls.from_grid(masses, spec["cell_size"], spec["origin"],
                                 normalize=spec.get("normalize", True))
        if kind == "generator":
            return cls.from_generator(spec["name"], **spec.get("params", {}))
        raise ValueError(f"unknown measure kind {kind!r}")

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_segment(start, end):
    p = (float(start[0]), float(start[1]))
    q = (float(end[0]), float(end[1]))
    if max(math.hypot(*p), math.hypot(*q)) > 1 + _DISK_TOL:
        raise LabError("outside-disk", "segment endpoint outside the closed unit disk")
    if p == q:
        raise ValueError("degenerate segment")
    return p, q


def _polar_equal_area(rings):
    pts, ws = [], []
    for i in range(rings):
        n_theta = 1 if i == 0 else int(round(4 * math.pi * (i + 0.5)))
        rho = math.sqrt((i + 0.5) / rings) if i else 0.0
        th = 2 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
        pts.append(np.stack([rho * np.cos(th), rho * np.sin(th)], axis=1))
        ws.append(np.full(n_theta, 1.0 / (rings * n_theta)))
    return np.concatenate(pts), np.concatenate(ws)


def _cantor_intervals(ratio, depth):
    """Left endpoints (in [0, 1]) and common length of the depth-level intervals."""
    lo = np.zeros(1)
    length = 1.0
    for _ in range(depth):
        lo = np.concatenate([lo, lo + length * (1 - ratio)])
        length *= ratio
    return np.sort(lo), length


def _lens_area(d, rho):
    """Area of the unit disk intersected with a disk of radius rho at distance d."""
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    inside = d + rho <= 1.0
    covers = d + 1.0 <= rho
    out[inside] = math.pi * rho * rho
    out[covers] = math.pi
    part = ~inside & ~covers & (d < 1.0 + rho)
    if np.any(part):
        dd = d[part]
        a1 = np.clip((dd * dd + rho * rho - 1.0) / (2 * dd * rho), -1.0, 1.0)
        a2 = np.clip((dd * dd + 1.0 - rho * rho) / (2 * dd), -1.0, 1.0)
        k = (-dd + rho + 1) * (dd + rho - 1) * (dd - rho + 1) * (dd + rho + 1)
        out[part] = rho * rho * np.arccos(a1) + np.arccos(a2) - 0.5 * np.sqrt(np.maximum(k, 0.0))
    return out


def _chord_params(p, q, centers, radius):
    """Parameter interval [t0, t1] of the segment p->q inside each ball."""
    v = q - p
    L2 = float(v @ v)
    pc = p[None, :] - centers
    b = pc @ v
    c = np.einsum("ij,ij->i", pc, pc) - radius * radius
    disc = b * b - L2 * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = np.where(ok, (-b - sq) / L2, 1.0)
    t1 = np.where(ok, (-b + sq) / L2, 0.0)
    return t0, t1


def ball_masses(m, centers, radius):
    """Masses of the closed balls ``B(c, radius)`` for every row ``c`` of centers."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float)).reshape(-1, 2)
    if m.kind == "generator":
        name = m.generator
        if name == "uniform-disk":
            return _lens_area(np.hypot(centers[:, 0], centers[:, 1]), radius) / math.pi
        if name == "single-atom":
            pt = np.asarray(m.params["point"])
            return (np.hypot(*(centers - pt).T) <= radius).astype(float)
        p, q = np.asarray(m.params["start"]), np.asarray(m.params["end"])
        t0, t1 = _chord_params(p, q, centers, radius)
        if name == "uniform-segment":
            return np.clip(np.minimum(t1, 1.0) - np.maximum(t0, 0.0), 0.0, None)
        lo, length = _cantor_intervals(m.params["ratio"], m.params["depth"])
        overlap = (np.minimum(t1[:, None], lo[None, :] + length)
                   - np.maximum(t0[:, None], lo[None, :]))
        return np.clip(overlap, 0.0, None).sum(axis=1) / (length * len(lo))
    pts, w = m.atomize()
    if len(pts) == 0:
        return np.zeros(len(centers))
    pairs = cKDTree(centers).sparse_distance_matrix(
        cKDTree(pts), radius, output_type="ndarray")
    out = np.zeros(len(centers))
    np.add.at(out, pairs["i"], w[pairs["j"]])
    return out


def ball_mass(m, center, radius):
    """Mass ``m(B(center, radius))`` of a closed ball."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return float(ball_masses(m, np.asarray(center, dtype=float)[None, :], radius)[0])


def _grid_sup_ball_mass(m, radius):
    h = m.cell_size
    k = int(math.floor(radius / h))
    off = np.arange(-k, k + 1)
    DI, DJ = np.meshgrid(off, off, indexing="ij")
    kernel = ((DI * DI + DJ * DJ) * h * h <= radius * radius * (1 + 1e-12)).astype(float)
    conv = fftconvolve(m.masses, kernel, mode="same")
    return float(conv.max())


def default_probes(m, radius):
    """Probe centers for a sup over balls of the given radius: the support
    samples plus a grid of pitch ``radius/2`` near the support."""
    pitch = radius / 2
    support = m.support_samples(pitch)
    lo = support.min(axis=0) - radius
    hi = support.max(axis=0) + radius
    gx = np.arange(lo[0], hi[0] + pitch, pitch)
    gy = np.arange(lo[1], hi[1] + pitch, pitch)
    X, Y = np.meshgrid(gx, gy)
    grid = np.stack([X.ravel(), Y.ravel()], axis=1)
    dist, _ = cKDTree(support).query(grid, distance_upper_bound=radius)
    return np.concatenate([support, grid[np.isfinite(dist)]])


def sup_ball_mass(m, radius, probe_points=None):
    """``max_x m(B(x, radius))`` over the probe points (defaults per
    :func:`default_probes`; grid measures use a disk-kernel convolution
    evaluated at every cell center)."""
    if probe_points is None:
        if m.kind == "grid":
            return _grid_sup_ball_mass(m, radius)
        probe_points = default_probes(m, radius)
    return float(ball_masses(m, probe_points, radius).max())


def estimate_frostman(m, radii, probe_points=None):
    """Fit ``sup_x m(B(x, eps)) ~ C eps**d`` over the given radii.

    Parameters
    ----------
    m : DiskMeasure
    radii : sequence of float
        Strictly decreasing radii in (0, 1).
    probe_points : array (k, 2), optional
        Ball centers used for the sup at every radius. When omitted the
        probes are regenerated at each scale by :func:`default_probes`.

    Returns
    -------
    d_hat, C_hat : float
        Least-squares slope (clamped to [0, 2]) and ``exp(intercept)``.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2:
        raise ValueError("need at least two radii")
    if np.any(np.diff(radii) >= 0) or radii[0] >= 1 or radii[-1] <= 0:
        raise ValueError("radii must be strictly decreasing inside (0, 1)")
    sups = np.array([sup_ball_mass(m, eps, probe_points) for eps in radii])
    total = m.total_mass
    if np.all(sups <= 0):
        raise LabError("insufficient-scale-range", "no probe ball carries mass")
    if np.all(sups >= total * (1 - 1e-12)) and not _is_point_mass(m):
        raise LabError("insufficient-scale-range", "every ball captures the whole measure")
    if np.any(sups <= 0):
        raise LabError("insufficient-scale-range", "probe balls miss the support at some scale")
    slope, intercept = np.polyfit(np.log(radii), np.log(sups), 1)
    return float(np.clip(slope, 0.0, 2.0)), float(np.exp(intercept))


def _is_point_mass(m):
    if m.kind == "generator":
        return m.generator == "single-atom"
    pts, _ = m.atomize()
    return len(pts) > 0 and np.ptp(pts, axis=0).max() == 0.0


# -- Dirac approximation --------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiracApproximation:
    """Weighted point configuration ``(1/N) sum_j m_j delta_{z_j}``."""

    points: np.ndarray
    multiplicities: np.ndarray
    N: int
    epsilon: float
    captured_mass: float
    ball_masses: np.ndarray
    cell_radius: float

    def as_measure(self):
        return DiskMeasure.from_atoms(self.points, self.multiplicities / self.N)

    def to_dict(self):
        return {
            "points": self.points.tolist(),
            "multiplicities": [int(v) for v in self.multiplicities],
            "N": int(self.N),
            "epsilon": float(self.epsilon),
            "captured_mass": float(self.captured_mass),
            "ball_masses": [float(v) for v in self.ball_masses],
            "cell_radius": float(self.cell_radius),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["points"], dtype=float).reshape(-1, 2),
                   np.asarray(d["multiplicities"], dtype=int), int(d["N"]),
                   float(d["epsilon"]), float(d["captured_mass"]),
                   np.asarray(d["ball_masses"], dtype=float), float(d["cell_radius"]))


def triangular_lattice(cell_radius, reach=1.0):
    """Centers of disjoint balls of radius ``cell_radius`` on a triangular
    lattice through the origin, covering the square ``[-reach, reach]^2``."""
    e = float(cell_radius)
    dy = math.sqrt(3.0) * e
    J = int(math.ceil((reach + e) / dy)) + 1
    I = int(math.ceil((reach + e) / (2 * e))) + 2
    j = np.arange(-J, J + 1)
    i = np.arange(-I, I + 1)
    II, JJ = np.meshgrid(i, j)
    x = 2 * e * II + e * (JJ % 2)
    y = dy * JJ
    return np.stack([x.ravel(), y.ravel()], axis=1)


def largest_remainder(weights, N):
    """Integers summing to N, each within one of ``N * weights``."""
    w = np.asarray(weights, dtype=float)
    target = w * N
    base = np.floor(target).astype(int)
    short = N - int(base.sum())
    if short > 0:
        # stable sort keeps the lowest index first among equal remainders
        order = np.argsort(-(target - base), kind="stable")
        base[order[:short]] += 1
    elif short < 0:
        order = np.argsort(target - base, kind="stable")
        base[order[:-short]] -= 1
    return base


def dirac_approximate(m, cell_radius, denominator_cap):
    """Approximate ``m`` by rational weights on a lattice of disjoint balls.

    Balls of radius ``cell_radius`` centered on a triangular lattice are kept
    when they lie strictly inside the disk and carry positive mass. The
    normalized ball masses are rationalized to ``m_j / N`` by the
    largest-remainder method with the smallest ``N <= denominator_cap`` giving
    every kept ball a positive multiplicity.
    """
    if not 0 < cell_radius < 1:
        raise ValueError("cell_radius must lie in (0, 1)")
    if denominator_cap < 1:
        raise ValueError("denominator_cap must be >= 1")
    lattice = triangular_lattice(cell_radius)
    inside = np.hypot(lattice[:, 0], lattice[:, 1]) + cell_radius < 1.0
    if m.kind == "generator" and m.generator != "single-atom":
        # continuous generators give tangency points zero mass
        masses = np.zeros(len(lattice))
        masses[inside] = ball_masses(m, lattice[inside], cell_radius)
    else:
        # each atom/cell is assigned to at most one ball (ties at tangency points)
        pts, w = m.atomize()
        dist, idx = cKDTree(lattice).query(pts)
        hit = dist <= cell_radius * (1 + 1e-12)
        masses = np.bincount(idx[hit], weights=w[hit], minlength=len(lattice))
    total = m.total_mass
    keep = inside & (masses > _MASS_TOL * total)
    captured = float(masses[keep].sum())
    if not np.any(keep):
        pts = m.support_samples(cell_radius / 4)
        near_edge = np.any(np.hypot(pts[:, 0], pts[:, 1]) > 1 - 2 * cell_radius)
        code = "boundary-support" if near_edge else "empty-capture"
        raise LabError(code, "no lattice ball strictly inside the disk carries mass")
    centers = lattice[keep]
    bm = masses[keep]
    w = bm / bm.sum()
    k = len(w)
    for N in range(k, int(denominator_cap) + 1):
        mult = largest_remainder(w, N)
        if np.all(mult >= 1):
            break
    else:
        raise LabError("denominator-too-small",
                       f"{k} balls need a denominator above {denominator_cap}")
    return DiracApproximation(centers, mult, int(N), separation(centers),
                              captured / total, bm, float(cell_radius))


def separation(points):
    """Half the minimum of all pairwise distances and all boundary distances."""
    pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty point set")
    boundary = 1.0 - np.hypot(pts[:, 0], pts[:, 1])
    if np.any(boundary <= 0):
        raise LabError("outside-disk", "points must lie strictly inside the unit disk")
    best = float(boundary.min())
    if len(pts) > 1:
        d, _ = cKDTree(pts).query(pts, k=2)
        nearest = float(d[:, 1].min())
        if nearest == 0.0:
            raise LabError("duplicate-point", "repeated point in configuration")
        best = min(best, nearest)
    return 0.5 * best


# -- Wasserstein-1 --------------------------------------------------------

def pool_atoms(points, weights, cap):
    """Aggregate an atomic measure to at most ``cap`` atoms.

    Cells are split four ways about the midpoint of their bounding box, always
    refining the cell with the largest ``mass * diameter``; each final cell is
    replaced by one atom at its center of mass.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(points) <= cap:
        return points, weights
    counter = 0
    heap = []

    def push(idx):
        nonlocal counter
        p = points[idx]
        lo, hi = p.min(axis=0), p.max(axis=0)
        prio = float(weights[idx].sum() * np.hypot(*(hi - lo)))
        heapq.heappush(heap, (-prio, counter, idx, lo, hi))
        counter += 1

    push(np.arange(len(points)))
    while heap:
        negp, _, idx, lo, hi = heap[0]
        if negp == 0.0:
            break
        mid = 0.5 * (lo + hi)
        p = points[idx]
        right = p[:, 0] > mid[0]
        top = p[:, 1] > mid[1]
        children = [idx[~right & ~top], idx[right & ~top], idx[~right & top], idx[right & top]]
        children = [c for c in children if len(c)]
        if len(heap) - 1 + len(children) > cap:
            break
        heapq.heappop(heap)
        for c in children:
            push(c)
    leaves = sorted(heap, key=lambda item: item[1])
    out_p = np.empty((len(leaves), 2))
    out_w = np.empty(len(leaves))
    for k, (_, _, idx, _, _) in enumerate(leaves):
        w = weights[idx]
        out_w[k] = w.sum()
        out_p[k] = (w[:, None] * points[idx]).sum(axis=0) / out_w[k] if out_w[k] > 0 \
            else points[idx].mean(axis=0)
    return out_p, out_w


def transport_cost(x, a, y, b):
    """Exact optimal transport cost with Euclidean ground cost (simplex LP)."""
    x, y = np.asarray(x, float).reshape(-1, 2), np.asarray(y, float).reshape(-1, 2)
    a, b = np.asarray(a, float), np.asarray(b, float)
    C = cdist(x, y)
    if len(a) == 1:
        return float(C[0] @ b)
    if len(b) == 1:
        return float(C[:, 0] @ a)
    n, k = C.shape
    rows = np.repeat(np.arange(n), k)
    cols = np.tile(np.arange(k), n)
    A = vstack([coo_matrix((np.ones(n * k), (rows, np.arange(n * k))), shape=(n, n * k)),
                coo_matrix((np.ones(n * k), (cols, np.arange(n * k))), shape=(k, n * k))]).tocsr()
    # one marginal constraint is redundant; dropping it keeps the LP full rank
    rhs = np.concatenate([a, b * (a.sum() / b.sum())])
    res = linprog(C.ravel(), A_eq=A[:-1], b_eq=rhs[:-1], bounds=(0, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0)


def w1_distance(a, b, support_cap=400):
    """Wasserstein-1 distance between two probability measures on the disk,
    computed exactly after pooling each to at most ``support_cap`` atoms."""
    if support_cap < 2:
        raise ValueError("support_cap must be >= 2")
    for m in (a, b):
        if abs(m.total_mass - 1.0) > 1e-9:
            raise LabError("unnormalized", f"total mass {m.total_mass!r}")
    xa, wa = pool_atoms(*a.atomize(), support_cap)
    xb, wb = pool_atoms(*b.atomize(), support_cap)
    return transport_cost(xa, wa, xb, wb)
