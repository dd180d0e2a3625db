"""Rescaled vortex solutions through the scalar equation for u = log|phi|^2.

Away from the zeros ``z_j`` (multiplicity ``m_j``) the function u solves

    Delta u + 2 r (1 - e^u) = 0,   u ~ 2 m_j log|z - z_j| near z_j.

The singular part ``s = sum_j 2 m_j log|z - z_j|`` is harmonic and carried
analytically; the solver works with the smooth remainder ``w = u - s`` on a
uniform square grid with ``u = 0`` on the outer boundary. A rotationally
symmetric collocation solver provides an independent reference profile.

Error codes: ``singular-point``, ``solver-diverged``, ``under-resolved``,
``radial-diverged``, ``ball-overlap``, ``outside-disk``, ``duplicate-point``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_bvp
from scipy.sparse.linalg import spsolve

from .errors import LabError

DIRECT_SOLVE_LIMIT = 40_000


# -- grid and zeros -------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform node grid on ``[-R, R]^2`` shifted by ``offset``.

    Nodes are ``x_i = -R + offset[0] + i h`` (likewise in y) for
    ``i = 0..n``; the outer ring of nodes carries the boundary condition.
    """

    R: float
    n: int
    offset: tuple = (0.0, 0.0)
    kappa: float = 0.25
    h_max: float = 0.02

    @property
    def h(self):
        return 2.0 * self.R / self.n

    @classmethod
    def for_r(cls, r, kappa=0.25, h_max=0.02, R=None, offset=(0.0, 0.0)):
        """Compliant grid for strength r; n is odd so the origin is not a node."""
        if R is None:
            R = default_outer_radius(r)
        h_target = min(h_max, kappa / math.sqrt(r))
        n = int(math.ceil(2 * R / h_target - 1e-9))
        if n % 2 == 0:
            n += 1
        return cls(float(R), n, tuple(map(float, offset)), float(kappa), float(h_max))

    def refine(self, k=2):
        return replace(self, n=self.n * k)

    def axes(self):
        i = np.arange(self.n + 1)
        return -self.R + self.offset[0] + i * self.h, -self.R + self.offset[1] + i * self.h

    def mesh(self):
        xs, ys = self.axes()
        return np.meshgrid(xs, ys)

    def violations(self, r):
        out = []
        if self.h * math.sqrt(r) > self.kappa * (1 + 1e-9) or self.h > self.h_max * (1 + 1e-9):
            out.append(f"h={self.h:.6g} exceeds min({self.h_max}, {self.kappa}/sqrt(r))")
        if self.R < default_outer_radius(r) - 1e-12:
            out.append(f"R={self.R:.6g} below {default_outer_radius(r):.6g}")
        return out


def default_outer_radius(r):
    return 1.0 + max(0.5, 10.0 / math.sqrt(r))


@dataclass(frozen=True, eq=False)
class ZeroConfig:
    """Distinct zeros in the open unit disk with positive integer multiplicities."""

    points: np.ndarray
    multiplicities: np.ndarray

    def __init__(self, points=(), multiplicities=None):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if multiplicities is None:
            mult = np.ones(len(pts), dtype=int)
        else:
            mult = np.asarray(multiplicities).reshape(-1)
            if mult.size and (np.any(mult != np.round(mult)) or np.any(mult < 1)):
                raise ValueError("multiplicities must be positive integers")
            mult = mult.astype(int)
        if len(mult) != len(pts):
            raise ValueError("points and multiplicities differ in length")
        if len(pts) and np.any(np.hypot(pts[:, 0], pts[:, 1]) >= 1.0):
            raise LabError("outside-disk", "zeros must lie in the open unit disk")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise LabError("duplicate-point", "zeros must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def N(self):
        return int(self.multiplicities.sum())

    def __len__(self):
        return len(self.points)

    def snapped(self, grid):
        """Push zeros closer than h/3 to a node out to distance h/3."""
        if not len(self):
            return self
        h = grid.h
        xs, ys = grid.axes()
        pts = self.points.copy()
        for k, (x, y) in enumerate(pts):
            nx = xs[0] + np.round((x - xs[0]) / h) * h
            ny = ys[0] + np.round((y - ys[0]) / h) * h
            dx, dy = x - nx, y - ny
            dist = math.hypot(dx, dy)
            if dist < h / 3 * (1 - 1e-9):
                ux, uy = (dx / dist, dy / dist) if dist > 0 else (math.sqrt(0.5), math.sqrt(0.5))
                pts[k] = (nx + ux * h / 3, ny + uy * h / 3)
        if np.array_equal(pts, self.points):
            return self
        return ZeroConfig(pts, self.multiplicities)

    def to_dict(self):
        return {"points": self.points.tolist(),
                "multiplicities": [int(m) for m in self.multiplicities]}

    @classmethod
    def from_dict(cls, d):
        if "atoms" in d:
            arr = np.asarray(d["atoms"], dtype=float).reshape(-1, 3)
            return cls(arr[:, :2], arr[:, 2])
        return cls(d.get("points", []), d.get("multiplicities"))


# -- singular part ----------------------------------------------------------

def singular_part(zeros, z):
    """``sum_j 2 m_j log|z - z_j|`` at a point (or an array of points)."""
    z = np.asarray(z, dtype=float)
    pts = z.reshape(-1, 2)
    out = np.zeros(len(pts))
    for (x0, y0), m in zip(zeros.points, zeros.multiplicities):
        d = np.hypot(pts[:, 0] - x0, pts[:, 1] - y0)
        if np.any(d == 0):
            raise LabError("singular-point", "evaluation at a zero")
        out += 2 * m * np.log(d)
    return float(out[0]) if z.ndim == 1 else out.reshape(z.shape[:-1])


def _singular_grid(zeros, X, Y, skip=None):
    s = np.zeros_like(X)
    for k, ((x0, y0), m) in enumerate(zip(zeros.points, zeros.multiplicities)):
        if k == skip:
            continue
        d = np.hypot(X - x0, Y - y0)
        if np.any(d == 0):
            raise LabError("singular-point", "zero sits on a grid node")
        s += 2 * m * np.log(d)
    return s


def core_radius(r):
    """Radius of the disk around each zero where the logarithm is treated as
    exactly harmonic."""
    return 2.0 / math.sqrt(r)


def _log_source(zeros, r, X, Y, h):
    """Interior-node source ``sum_j Delta_h(2 m_j log rho_j)`` taken only at
    nodes outside the core disk of zero j.

    Inside the core the logarithm enters as an exact harmonic function (its
    discrete Laplacian is the truncation error of the scheme); outside, the
    source makes the discrete equation for u itself exact, so far-field
    values carry no truncation error from the singular part.
    """
    # nodes within rounding of the core circle count as outside, so exact
    # geometric ties resolve identically under translations of the zeros
    a = core_radius(r) * (1 - 1e-9)
    src = np.zeros((X.shape[0] - 2, X.shape[1] - 2))
    for (x0, y0), m in zip(zeros.points, zeros.multiplicities):
        rho = np.hypot(X - x0, Y - y0)
        lap = _lap_interior(2 * m * np.log(rho), h)
        src += np.where(rho[1:-1, 1:-1] >= a, lap, 0.0)
    return src


def _profile_guess(zeros, r, X, Y):
    """``u0 - s`` for ``u0 = sum_j m_j log(r rho_j^2 / (1 + r rho_j^2))``."""
    w = np.zeros_like(X)
    for (x0, y0), m in zip(zeros.points, zeros.multiplicities):
        rho2 = (X - x0) ** 2 + (Y - y0) ** 2
        w += m * (math.log(r) - np.log1p(r * rho2))
    return w


# -- field ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VortexField:
    """Converged grid solution; ``u`` and ``w`` are full ``(n+1, n+1)`` arrays
    indexed ``[iy, ix]``."""

    r: float
    zeros: ZeroConfig
    grid: GridSpec
    u: np.ndarray
    w: np.ndarray
    iterations: int
    residual: float
    history: tuple = field(default=())

    @property
    def N(self):
        return self.zeros.N

    def density(self):
        """``e^u = |phi|^2`` on the grid."""
        return np.exp(self.u)


def _lap_interior(A, h):
    return (A[2:, 1:-1] + A[:-2, 1:-1] + A[1:-1, 2:] + A[1:-1, :-2] - 4.0 * A[1:-1, 1:-1]) / (h * h)


@lru_cache(maxsize=8)
def _neg_laplacian(m, h):
    """Negative 5-point Laplacian on an m x m block of interior nodes."""
    e = np.ones(m)
    T = sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1])
    I = sp.identity(m)
    return ((sp.kron(I, T) + sp.kron(T, I)) / (h * h)).tocsr()


def _linear_solve(A, b, rtol):
    if A.shape[0] <= DIRECT_SOLVE_LIMIT:
        return spsolve(A.tocsc(), b)
    import pyamg

    # setup estimates spectral radii from random vectors; pin them for reproducibility
    state = np.random.get_state()
    np.random.seed(0)
    try:
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="hermitian")
    finally:
        np.random.set_state(state)
    x = ml.solve(b, tol=rtol, accel="cg", maxiter=500)
    bn = np.linalg.norm(b)
    if np.linalg.norm(b - A @ x) > max(rtol, 1e-13) * bn * 10:
        raise LabError("solver-diverged", "inner linear solve did not converge")
    return x


def solve_vortex(zeros, r, grid=None, tol=1e-8, max_iter=80, enforce=True, initial="profile",
                 callback=None):
    """Solve the scalar vortex equation by damped Newton on the smooth part.

    Within ``core_radius(r)`` of each zero its logarithm is treated as exactly
    harmonic, so there the unknown ``w = u - s`` solves the regular equation
    ``Delta_h w = 2 r (e^{s+w} - 1)``; elsewhere the discrete equation for u
    holds exactly.

    Parameters
    ----------
    zeros : ZeroConfig
    r : float
        Strength, ``r >= 1``.
    grid : GridSpec, optional
        Defaults to :meth:`GridSpec.for_r`.
    tol : float
        Max-norm target for the discrete Newton residual at interior nodes.
    enforce : bool
        Reject grids violating the resolution rule (``under-resolved``).
    initial : {"profile", "zero"}
        Initial guess for w: superposed algebraic vortex profiles, or ``w = 0``.
    callback : callable, optional
        Called with ``(iteration, residual_max_norm, step_length)`` after each
        accepted step.

    Returns
    -------
    VortexField
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = GridSpec.for_r(r) if grid is None else grid
    if enforce:
        bad = grid.violations(r)
        if bad:
            raise LabError("under-resolved", "; ".join(bad))
    zeros = zeros.snapped(grid)
    X, Y = grid.mesh()
    h = grid.h
    if len(zeros) and np.any(np.abs(zeros.points) >= grid.R - h):
        raise LabError("under-resolved", "zero outside the computational square")
    s = _singular_grid(zeros, X, Y)
    src = _log_source(zeros, r, X, Y, h)
    if initial == "profile":
        W = _profile_guess(zeros, r, X, Y)
    elif initial == "zero":
        W = np.zeros_like(X)
    else:
        raise ValueError(f"unknown initial guess {initial!r}")
    W[0, :], W[-1, :], W[:, 0], W[:, -1] = -s[0, :], -s[-1, :], -s[:, 0], -s[:, -1]
    sin = s[1:-1, 1:-1]

    def residual(Wfull):
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(sin + Wfull[1:-1, 1:-1])
            return _lap_interior(Wfull, h) + src - 2 * r * (e - 1.0), e

    F, e = residual(W)
    nrm = float(np.max(np.abs(F)))
    history = [nrm]
    it = 0
    negL = _neg_laplacian(grid.n - 1, h)
    rtol = max(tol / 10, 1e-12)
    while nrm > tol:
        if it >= max_iter:
            raise LabError("solver-diverged", f"{it} Newton steps, residual {nrm:.3e}")
        A = negL + sp.diags(2 * r * e.ravel())
        delta = _linear_solve(A.tocsr(), F.ravel(), rtol).reshape(F.shape)
        lam = 1.0
        while True:
            trial = W.copy()
            trial[1:-1, 1:-1] += lam * delta
            Ft, et = residual(trial)
            nt = float(np.max(np.abs(Ft)))
            if np.isfinite(nt) and nt <= (1 - 1e-4 * lam) * nrm:
                break
            lam *= 0.5
            if lam < 1e-8:
                raise LabError("solver-diverged", f"line search stalled at residual {nrm:.3e}")
        W, F, e, nrm = trial, Ft, et, nt
        it += 1
        history.append(nrm)
        if callback is not None:
            callback(it, nrm, lam)
    U = s + W
    U[0, :] = U[-1, :] = 0.0
    U[:, 0] = U[:, -1] = 0.0
    return VortexField(float(r), zeros, grid, U, W, it, nrm, tuple(history))


# -- radial reference -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Rotationally symmetric solution with one zero of multiplicity m at 0."""

    m: int
    r: float
    rho: np.ndarray
    u: np.ndarray
    energy: float
    _sol: object = field(repr=False, default=None)

    def __call__(self, rho):
        """Evaluate u at radii rho (0 < rho <= rho_max)."""
        x = math.sqrt(self.r) * np.asarray(rho, dtype=float)
        w = self._sol.sol(x)[0]
        with np.errstate(divide="ignore"):
            return w + 2 * self.m * np.log(x / (1 + x))

    def density(self, rho):
        """``e^u`` at radii rho, finite (zero) at the origin."""
        x = math.sqrt(self.r) * np.asarray(rho, dtype=float)
        return np.exp(self._sol.sol(x)[0]) * (x / (1 + x)) ** (2 * self.m)


def solve_radial(m, r, rho_max, tol=1e-8):
    """Collocation solution of ``u'' + u'/rho = 2 r (e^u - 1)`` on (0, rho_max].

    Works in the scaled variable ``x = sqrt(r) rho`` with the regularized
    unknown ``w = u - 2 m log(x / (1 + x))``, ``x w'(0) = 0`` and
    ``u(rho_max) = 0``. The energy ``2 pi int (1 - e^u) x dx`` is integrated
    alongside as a third component.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be >= 1")
    xmax = math.sqrt(r) * rho_max
    if xmax < 20 * (1 - 1e-12):
        raise ValueError("need rho_max * sqrt(r) >= 20")
    w_end = -2 * m * math.log(xmax / (1 + xmax))

    def rhs(x, y):
        w, z, _ = y
        a = np.exp(w) * (x / (1 + x)) ** (2 * m)
        return np.vstack([np.zeros_like(x), 2 * x * (a - 1) + 2 * m / (1 + x) ** 2,
                          x * (1 - a)])

    def bc(ya, yb):
        return np.array([ya[1], ya[2], yb[0] - w_end])

    S = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    x = np.concatenate([[0.0], np.geomspace(1e-3, xmax, 400)])
    y0 = np.zeros((3, x.size))
    sol = solve_bvp(rhs, bc, x, y0, S=S, tol=tol, max_nodes=200_000)
    if sol.status != 0:
        raise LabError("radial-diverged", sol.message)
    xs = sol.x
    with np.errstate(divide="ignore"):
        u = sol.y[0] + 2 * m * np.log(xs / (1 + xs))
    prof = RadialProfile(m, float(r), xs / math.sqrt(r), u, float(2 * math.pi * sol.y[2, -1]), sol)
    # monotone and negative up to the collocation tolerance
    slack = 10 * tol
    if np.any(np.diff(u[1:]) < -slack) or np.any(u[1:-1] > slack):
        raise LabError("radial-diverged", "profile is not increasing and negative")
    return prof


def radial_profile_error(f, profile, rho_max=None):
    """Sup-relative error of ``1 - e^u`` against a radial profile along the
    node row closest to the zero's horizontal line, on ``rho <= rho_max``
    (default: the profile's whole range)."""
    if len(f.zeros) != 1:
        raise ValueError("needs a single-zero field")
    z = f.zeros.points[0]
    xs, ys = f.grid.axes()
    i = int(np.argmin(np.abs(ys - z[1])))
    rho = np.hypot(xs - z[0], ys[i] - z[1])
    rho_max = profile.rho[-1] if rho_max is None else rho_max
    sel = (xs > z[0]) & (rho <= rho_max)
    got = -np.expm1(f.u[i, sel])
    want = 1.0 - profile.density(rho[sel])
    return float(np.max(np.abs(got - want)) / np.max(np.abs(want)))


# -- diagnostics ------------------------------------------------------------

def total_energy(f):
    """``r sum (1 - e^u) h^2`` over all grid nodes."""
    return float(f.r * np.sum(-np.expm1(f.u)) * f.grid.h ** 2)


def _distance_to_zeros(f, X, Y):
    d = np.full(X.shape, np.inf)
    for x0, y0 in f.zeros.points:
        d = np.minimum(d, np.hypot(X - x0, Y - y0))
    return d


def pde_residual(f, exclusion_radius):
    """Max and RMS of ``|Delta_h u + 2 r (1 - e^u)|`` at interior nodes
    farther than ``exclusion_radius`` from every zero."""
    h = f.grid.h
    if exclusion_radius < 2 * h * (1 - 1e-12):
        raise ValueError("exclusion_radius must be at least 2h")
    X, Y = f.grid.mesh()
    keep = _distance_to_zeros(f, X, Y)[1:-1, 1:-1] > exclusion_radius
    res = np.abs(_lap_interior(f.u, h) - 2 * f.r * np.expm1(f.u[1:-1, 1:-1]))[keep]
    if res.size == 0:
        return 0.0, 0.0
    return float(res.max()), float(np.sqrt(np.mean(res * res)))


def density_gradient(f):
    """Central-difference gradient of ``e^u`` at interior nodes."""
    a = np.exp(f.u)
    h = f.grid.h
    gx = (a[1:-1, 2:] - a[1:-1, :-2]) / (2 * h)
    gy = (a[2:, 1:-1] - a[:-2, 1:-1]) / (2 * h)
    return gx, gy


def sup_gradient_ratio(f):
    """``max |grad e^u| / sqrt(r)`` over interior nodes."""
    gx, gy = density_gradient(f)
    return float(np.max(np.hypot(gx, gy)) / math.sqrt(f.r))


def local_factor_h(f, j, ball_radius):
    """Smooth factor ``h_j = e^u / (r^{m_j} |z - z_j|^{2 m_j})`` near zero j.

    ``log h_j`` is evaluated as ``w + sum_{k != j} 2 m_k log|z - z_k| -
    m_j log r``, which is regular at ``z_j``, so no singular cell needs
    special treatment.

    Returns
    -------
    h_values : ndarray
        Samples at the nodes inside ``B(z_j, ball_radius)``.
    log_integral : float
        Cell-sum quadrature of ``log h_j`` over the ball.
    """
    pts, mult = f.zeros.points, f.zeros.multiplicities
    if ball_radius < 3 * f.grid.h * (1 - 1e-12):
        raise ValueError("ball_radius must be at least 3h")
    zj = pts[j]
    others = np.delete(pts, j, axis=0)
    if len(others) and np.min(np.hypot(*(others - zj).T)) <= ball_radius:
        raise LabError("ball-overlap", "ball around the zero contains another zero")
    X, Y = f.grid.mesh()
    inside = np.hypot(X - zj[0], Y - zj[1]) <= ball_radius
    logh = f.w + _singular_grid(f.zeros, X, Y, skip=j) - mult[j] * math.log(f.r)
    vals = logh[inside]
    return np.exp(vals), float(vals.sum() * f.grid.h ** 2)


# -- field dump -------------------------------------------------------------

_DUMP_MAGIC = "# vortexlab field"


def dump_field(f):
    """Portable text dump: ``key,value`` header lines then row-major u rows
    with 17 significant digits (round-trips every double exactly)."""
    g = f.grid
    lines = [_DUMP_MAGIC,
             f"r,{f.r!r}", f"R,{g.R!r}", f"n,{g.n}", f"h,{g.h!r}",
             f"offset,{g.offset[0]!r},{g.offset[1]!r}",
             f"kappa,{g.kappa!r}", f"h_max,{g.h_max!r}",
             f"iterations,{f.iterations}", f"residual,{f.residual!r}"]
    for (x, y), m in zip(f.zeros.points, f.zeros.multiplicities):
        lines.append(f"zero,{float(x)!r},{float(y)!r},{int(m)}")
    lines.append("u")
    buf = io.StringIO()
    np.savetxt(buf, f.u, fmt="%.17g", delimiter=",")
    return "\n".join(lines) + "\n" + buf.getvalue()


def read_field(text):
    """Inverse of :func:`dump_field`; ``w`` is recomputed as ``u - s``."""
    lines = text.splitlines()
    if not lines or lines[0] != _DUMP_MAGIC:
        raise ValueError("not a field dump")
    meta, zeros, k = {}, [], 1
    while lines[k] != "u":
        key, *vals = lines[k].split(",")
        if key == "zero":
            zeros.append((float(vals[0]), float(vals[1]), int(vals[2])))
        else:
            meta[key] = vals
        k += 1
    grid = GridSpec(float(meta["R"][0]), int(meta["n"][0]),
                    (float(meta["offset"][0]), float(meta["offset"][1])),
                    float(meta["kappa"][0]), float(meta["h_max"][0]))
    u = np.loadtxt(io.StringIO("\n".join(lines[k + 1:])), delimiter=",", ndmin=2)
    zc = ZeroConfig([z[:2] for z in zeros], [z[2] for z in zeros]) if zeros else ZeroConfig()
    X, Y = grid.mesh()
    w = u - _singular_grid(zc, X, Y)
    return VortexField(float(meta["r"][0]), zc, grid, u, w,
                       int(meta["iterations"][0]), float(meta["residual"][0]))
