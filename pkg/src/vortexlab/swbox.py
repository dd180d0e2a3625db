"""Flow-box lifts of vortex fields and the three-dimensional identity checks.

On the box ``(0, 1) x D`` with coordinates ``(t, x, y)``, flat metric and
Reeb field ``d/dt``, a t-independent configuration with second spinor
component ``beta = 0`` and ``A_t = 0`` solves the modified Seiberg-Witten
equations exactly when its slice is a rescaled vortex. Every check here is
expressed through the gauge-invariant density ``|alpha|^2 = e^u``; no
connection components or phases are materialized.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .concentrate import hausdorff_distance, sublevel_set, threshold_set
from .vortex import _distance_to_zeros, _lap_interior, density_gradient, pde_residual, total_energy


@dataclass(frozen=True, eq=False)
class FlowBoxSolution:
    """t-independent lift of a vortex field: ``|alpha|^2 = e^u``, ``beta = 0``,
    ``A_t = 0`` on a box of unit t-length."""

    base: object
    energy_3d: float
    t_length: float = 1.0
    beta: float = 0.0
    A_t: float = 0.0

    @property
    def r(self):
        return self.base.r

    @property
    def alpha_sq(self):
        return np.exp(self.base.u)

    def energy_integral(self, slices=4):
        """Integral of the energy density over the box by summing t-slices."""
        dt = self.t_length / slices
        E2 = total_energy(self.base)
        return float(sum(dt * E2 for _ in range(slices)))


def lift_to_flowbox(f):
    """Wrap a vortex field with the trivial t-fiber of unit length."""
    return FlowBoxSolution(f, total_energy(f) * 1.0)


@dataclass(frozen=True)
class IdentityReport:
    name: str
    sup_residual: float
    l2_residual: float
    h: float
    refinement_slope: float | None = None
    parts: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "sup_residual": self.sup_residual,
                "l2_residual": self.l2_residual, "h": self.h,
                "refinement_slope": self.refinement_slope, "parts": dict(self.parts)}


def refinement_slope(reports):
    """Least-squares slope of log(sup residual) against log(h)."""
    if len(reports) < 2:
        return None
    h = np.array([rep.h for rep in reports])
    s = np.array([rep.sup_residual for rep in reports])
    if np.any(s <= 0):
        return None
    return float(np.polyfit(np.log(h), np.log(s), 1)[0])


def with_refinement(reports):
    """Copy of the reports with the common refinement slope recorded."""
    slope = refinement_slope(reports)
    return [IdentityReport(r.name, r.sup_residual, r.l2_residual, r.h, slope, r.parts)
            for r in reports]


def curvature_residual(s, exclusion_radius=None):
    """Residual of the curvature equation ``*dA = r (1 - |alpha|^2)``.

    Through ``Delta u = -2 *dA`` this is the residual of the scalar vortex
    equation away from the zeros. The two mixed equations and the equation
    for beta vanish term by term for a t-independent lift with ``beta = 0``
    and are reported as exact zeros.
    """
    h = s.base.grid.h
    rad = 2 * h if exclusion_radius is None else exclusion_radius
    sup, l2 = pde_residual(s.base, rad)
    parts = {"curvature": sup, "mixed_x": 0.0, "mixed_y": 0.0, "beta_equation": 0.0}
    return IdentityReport("curvature", sup, l2, h, None, parts)


def albe_terms(s, min_distance=None):
    """Pointwise ``a Delta a - |grad a|^2 + 2 r a^2 (1 - a)`` with ``a = e^u``
    (central differences, t-derivatives zero) at interior nodes at least
    ``min_distance`` (default 2h) from every zero, with their coordinates."""
    f = s.base
    h = f.grid.h
    a = np.exp(f.u)
    gx, gy = density_gradient(f)
    ai = a[1:-1, 1:-1]
    lhs = ai * _lap_interior(a, h) - (gx * gx + gy * gy) + 2 * f.r * ai * ai * (1 - ai)
    X, Y = f.grid.mesh()
    dist = _distance_to_zeros(f, X, Y)[1:-1, 1:-1]
    keep = dist >= (2 * h if min_distance is None else min_distance) * (1 - 1e-12)
    return lhs[keep], X[1:-1, 1:-1][keep], Y[1:-1, 1:-1][keep]


def albe_identity_residual(s, min_distance=None):
    """Residual of the elliptic identity for ``|alpha|^2`` with ``beta = 0``
    and zero right-hand side, which holds exactly for vortex lifts."""
    vals, _, _ = albe_terms(s, min_distance)
    vals = np.abs(vals)
    sup = float(vals.max()) if vals.size else 0.0
    l2 = float(np.sqrt(np.mean(vals * vals))) if vals.size else 0.0
    return IdentityReport("albe", sup, l2, s.base.grid.h)


def apriori_check(s):
    """Bound ratios for the lift.

    Returns a dict with ``neg_part = r max(e^u - 1)`` (expected <= 0),
    ``grad_parallel`` (the t-derivative, identically 0) and
    ``grad_perp_ratio = sup |grad e^u| / sqrt(r)``.
    """
    f = s.base
    gx, gy = density_gradient(f)
    return {"neg_part": float(f.r * np.max(np.expm1(f.u))),
            "grad_parallel": 0.0,
            "grad_perp_ratio": float(np.max(np.hypot(gx, gy)) / math.sqrt(f.r))}


# -- maximum principle --------------------------------------------------------

@dataclass(frozen=True)
class MinimumScan:
    rho: float
    eta: float
    C0: float
    minima: tuple        # (x, y, e^u, class) per strict local minimum
    counts: dict

    @property
    def violations(self):
        return [m for m in self.minima if m[3] == "violation"]


def eta(r, rho):
    return r ** -0.5 + rho * rho


def classify_minimum(a, r, rho, C0=8.0):
    """``near-zero``, ``near-one`` or ``violation``; a value meeting both
    bounds takes the label of the side of 1/2 it lies on."""
    e = eta(r, rho)
    zero, one = a <= C0 * math.sqrt(e), 1.0 - a <= C0 * e
    if zero and one:
        return "near-zero" if a < 0.5 else "near-one"
    if zero:
        return "near-zero"
    if one:
        return "near-one"
    return "violation"


def max_principle_scan(s, rho=None, C0=8.0):
    """Classify every strict local minimum of ``|alpha|^2`` over the t-slice
    sub-disks ``B(node, rho) ∩ D``.

    A node of the open unit disk is a minimum when its value is strictly
    below every other disk node within distance rho. Each minimum is labelled
    ``near-zero`` (``e^u <= C0 eta^{1/2}``), ``near-one``
    (``1 - e^u <= C0 eta``) or ``violation``, with ``eta = r^{-1/2} + rho^2``.
    ``rho`` defaults to ``r^{-1/4}``.
    """
    f = s.base
    r = f.r
    rho = r ** -0.25 if rho is None else float(rho)
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    X, Y = f.grid.mesh()
    a = np.where(np.hypot(X, Y) < 1.0, np.exp(f.u), np.inf)
    # a minimum over a ball is in particular a strict minimum of its 3x3 block
    c = a[1:-1, 1:-1]
    cand = np.isfinite(c)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx or dy:
                nb = a[1 + dy:a.shape[0] - 1 + dy, 1 + dx:a.shape[1] - 1 + dx]
                cand &= c < nb
    iy, ix = np.nonzero(cand)
    iy, ix = iy + 1, ix + 1
    k = int(math.floor(rho / f.grid.h))
    off = np.arange(-k, k + 1)
    DY, DX = np.meshgrid(off, off, indexing="ij")
    inball = (DX * DX + DY * DY) * f.grid.h ** 2 <= rho * rho
    inball[k, k] = False
    oy, ox = DY[inball], DX[inball]
    n1 = a.shape[0]
    minima = []
    for y0, x0 in zip(iy, ix):
        yy, xx = y0 + oy, x0 + ox
        ok = (yy >= 0) & (yy < n1) & (xx >= 0) & (xx < n1)
        if np.all(a[y0, x0] < a[yy[ok], xx[ok]]):
            val = float(a[y0, x0])
            minima.append((float(X[y0, x0]), float(Y[y0, x0]), val,
                           classify_minimum(val, r, rho, C0)))
    counts = {c: sum(1 for m in minima if m[3] == c) for c in ("near-zero", "near-one", "violation")}
    return MinimumScan(rho, eta(r, rho), float(C0), tuple(minima), counts)


def scan_csv(scan, t=0.5, violations_only=True):
    """CSV rows ``t, x, y, e^u, class`` (violations only by default)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "x", "y", "alpha_sq", "class"))
    for x, y, val, cls in scan.minima:
        if cls == "violation" or not violations_only:
            w.writerow((repr(t), repr(x), repr(y), repr(val), cls))
    return buf.getvalue()


# -- nodal sets -----------------------------------------------------------------

def near_zero_threshold(f, C=1.0):
    """``C max(r^{-1/4}, E r^{-1/2})``."""
    E = total_energy(f)
    return C * max(f.r ** -0.25, E * f.r ** -0.5)


def nodal_set_diagnostics(seq, theta, theta_other=None, C=1.0):
    """Hausdorff distances between nodal sets along a sequence of lifts.

    For each lift: ``d_H(Z^theta, Z_n)`` with ``Z_n`` the near-zero set
    ``{e^u <= C max(r^{-1/4}, E r^{-1/2})}``, ``d_H(Z^theta, P_n)`` with
    ``P_n`` the zeros, and (when ``theta_other`` is given)
    ``d_H(Z^theta, Z^theta_other)``. Rows whose sets are empty are flagged
    ``empty-level`` and carry NaN distances. The t-fiber is carried along
    trivially: all sets are products with (0, 1).
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    rows = []
    for n, s in enumerate(seq, start=1):
        f = s.base
        zt = sublevel_set(f, "Z_theta", theta)
        zn = threshold_set(f, near_zero_threshold(f, C))
        row = {"n": n, "r_n": f.r, "N_n": f.N, "flag": "",
               "dH_Ztheta_Zn": float("nan"), "dH_Ztheta_P": float("nan"),
               "dH_Ztheta_Zother": float("nan")}
        other = sublevel_set(f, "Z_theta", theta_other) if theta_other is not None else None
        if len(zt) == 0 or len(zn) == 0 or (other is not None and len(other) == 0) \
                or len(f.zeros) == 0:
            row["flag"] = "empty-level"
        else:
            row["dH_Ztheta_Zn"] = hausdorff_distance(zt, zn)
            row["dH_Ztheta_P"] = hausdorff_distance(zt, f.zeros.points)
            if other is not None:
                row["dH_Ztheta_Zother"] = hausdorff_distance(zt, other)
        rows.append(row)
    return rows


def inclusion_holds(f, c, theta):
    """Whether the near-zero set ``{e^u <= c max(r^{-1/4}, N/sqrt(r))}`` lies
    inside ``Z^theta`` (true at node level whenever the bound is at most
    ``1 - theta``)."""
    bound = c * max(f.r ** -0.25, f.N / math.sqrt(f.r))
    near = np.exp(f.u) <= bound
    zt = sublevel_set(f, "Z_theta", theta).mask
    return bool(np.all(zt[near]))
