"""Penalized homothetic Laplace problems on 1D, radial 3D and 2D grids.

The scalar homothetic operator is ``L u = Lap u + 2w grad(lambda).grad(u) + V u``
with ``V = w lap(lambda) + w^2 |grad(lambda)|^2``. A penalized problem keeps
only part of it, applied to ``u = phi - phi_d``::

    Lap phi + [drift term] (phi - phi_d) + [potential term] (phi - phi_d) = 0

where ``mode`` selects both terms (``"cauchy"``), the potential only
(``"dirichlet"``), the drift only (``"neumann"``) or neither (``"plain"``).

Discretization
--------------
``Lap`` is the standard second-difference stencil (``phi'' + 2 phi'/r`` in
radial mode). With ``F = exp(w lambda)`` the exact discrete conjugation
``F^{-1} Lap_h F`` splits into ``Lap_h`` plus

* a *conservative drift* with off-diagonal entries ``Lap_ij (F_j/F_i - 1)``
  and zero row sums, and
* a *consistent potential* ``P_i = (Lap_h F)_i / F_i``.

The conservative drift is the default because centered differences lose
monotonicity once the cell Peclet number ``h |grad lambda|`` exceeds 1, which
happens at the clamp node for any ``a > 1/2``. The potential is either the
analytic coefficient sampled at nodes (default for Dirichlet mode) or the
consistent one (default for Cauchy mode, where drift plus potential then
equal ``F^{-1} Lap_h F`` exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, NumericalError
from .grid import IntervalGrid, RadialGrid, SquareGrid
from .scale import (
    CircleSurface,
    CutoffProfile,
    PointSurface,
    ScaleField,
    SphereSurface,
    Surface,
    distance_field,
    scale_field,
)

Grid = Union[IntervalGrid, RadialGrid, SquareGrid]
Value = Union[float, Callable, None]

MODES = ("cauchy", "dirichlet", "neumann", "plain")
DRIFT_SCHEMES = ("conservative", "centered")
POTENTIAL_SCHEMES = ("analytic", "consistent")

#: Required ratio ``eta*eps / h``; the inner zone must hold at least this many cells.
MIN_INNER_CELLS = 4


def _pair(v) -> tuple:
    if isinstance(v, (tuple, list)):
        if len(v) != 2:
            raise ConfigurationError("side-dependent data must be an (interior, exterior) pair")
        return tuple(v)
    return (v, v)


@dataclass(frozen=True)
class PenalizedProblem:
    """A penalized interface problem.

    Attributes:
        grid: Interval, radial or square grid.
        surface: Interface matching the grid dimension.
        mode: ``"cauchy"``, ``"dirichlet"``, ``"neumann"`` or ``"plain"``.
        profile: Cutoff profile; ``None`` is allowed only in plain mode.
        g: Value on ``S``; a pair gives ``(interior, exterior)`` values.
        h: Normal flux on ``S`` (``nu`` points interior to exterior); may be a pair.
        far_field: Outer boundary values. 1D: ``(left, right)``; radial:
            ``(inner, outer)``; 2D: one value or callable ``f(x, y)``. ``None``
            at an end of a 1D or radial grid means zero flux there (the
            origin symmetry condition on a staggered radial grid).
        w: Weight multiplying ``lambda``.
        center: Optional explicit center field ``phi_d`` as a callable of the
            node coordinates; by default the local harmonic extension of
            ``(g, h)`` is used.
        drift_scheme: ``"conservative"`` or ``"centered"``.
        potential_scheme: ``"analytic"`` or ``"consistent"``; ``None`` picks
            consistent for Cauchy mode and analytic otherwise.
        gauge: Value pinned at the innermost interior node for Neumann
            problems whose interior side has no boundary data.
        xi_floor: Distance clamp; defaults to ``h/2``.
        check_resolution: Enforce ``h <= eta*eps/4``.
    """

    grid: Grid
    surface: Surface
    mode: str = "plain"
    profile: CutoffProfile | None = None
    g: float | tuple = 0.0
    h: float | tuple = 0.0
    far_field: Value | tuple = None
    w: float = 1.0
    center: Callable | None = None
    drift_scheme: str = "conservative"
    potential_scheme: str | None = None
    gauge: float | None = None
    xi_floor: float | None = None
    check_resolution: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.drift_scheme not in DRIFT_SCHEMES:
            raise ConfigurationError(f"unknown drift scheme {self.drift_scheme!r}")
        if self.potential_scheme not in (None,) + POTENTIAL_SCHEMES:
            raise ConfigurationError(f"unknown potential scheme {self.potential_scheme!r}")
        if self.mode != "plain" and self.profile is None:
            raise ConfigurationError(f"mode {self.mode!r} needs a cutoff profile")
        for v in _pair(self.g) + _pair(self.h):
            if not np.isfinite(v):
                raise ConfigurationError("interface data g, h must be finite")

    @property
    def penalized(self) -> bool:
        return self.mode != "plain" and self.profile is not None

    @property
    def potential(self) -> str:
        if self.potential_scheme is not None:
            return self.potential_scheme
        return "consistent" if self.mode == "cauchy" else "analytic"

    @property
    def tube(self) -> float:
        """Half-width of the layer excluded from trace extraction."""
        return self.profile.eps if self.profile is not None else 0.0

    def with_(self, **changes) -> "PenalizedProblem":
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveResult:
    """Solution samples with interface traces and jumps.

    Jumps are exterior minus interior; normal derivatives are taken along
    ``nu`` (increasing ``x`` in 1D, increasing ``r`` for spheres, outward
    normal for circles). In 2D the trace fields are arrays over ray angles.
    """

    problem: PenalizedProblem
    phi: np.ndarray
    residual: float
    stats: dict
    trace_interior: float | np.ndarray
    trace_exterior: float | np.ndarray
    flux_interior: float | np.ndarray
    flux_exterior: float | np.ndarray
    angles: np.ndarray | None = None

    @property
    def jump_value(self):
        return self.trace_exterior - self.trace_interior

    @property
    def jump_flux(self):
        return self.flux_exterior - self.flux_interior

    def summary(self) -> dict:
        """Scalar JSON-friendly view (2D arrays reduced to their means)."""
        def red(v):
            return float(np.mean(v))

        return {
            "trace_interior": red(self.trace_interior),
            "trace_exterior": red(self.trace_exterior),
            "flux_interior": red(self.flux_interior),
            "flux_exterior": red(self.flux_exterior),
            "jump_value": red(self.jump_value),
            "jump_flux": red(self.jump_flux),
            "residual": self.residual,
            **self.stats,
        }


# --- geometry helpers -------------------------------------------------------


def _coords(grid: Grid) -> tuple[np.ndarray, ...]:
    if isinstance(grid, SquareGrid):
        return grid.coords
    return (grid.nodes,)


def _eval(v, coords) -> np.ndarray:
    if callable(v):
        return np.asarray(v(*coords), dtype=float)
    return np.full(coords[0].shape, float(v))


def _surface_measure(surface: Surface) -> float:
    if isinstance(surface, PointSurface):
        return 1.0
    if isinstance(surface, SphereSurface):
        return 4.0 * np.pi * surface.R**2
    return 2.0 * np.pi * surface.R


def harmonic_extension(surface: Surface, g, h, grid: Grid, tube: float | None = None) -> np.ndarray:
    """Center field ``phi_d`` with value ``g`` and normal derivative ``h`` on ``S``.

    Near ``S`` each side uses the exact local harmonic with the given Cauchy
    data: ``g + h (x - x0)`` in 1D, ``g + hR - hR^2/r`` for spheres and
    ``g + hR ln(rho/R)`` for circles. ``g`` and ``h`` may be
    ``(interior, exterior)`` pairs. If ``tube`` is given the field is held
    constant beyond distance ``tube + 2h_grid`` on each side.
    """
    (gi, go), (hi, ho) = _pair(g), _pair(h)
    for v in (gi, go, hi, ho):
        if not np.isfinite(v):
            raise ConfigurationError("g and h must be finite")
    dist = distance_field(surface, grid)
    cap = None if tube is None else tube + 2.0 * grid.h

    def local(s, gg, hh):
        # s is the signed normal coordinate (distance times side)
        if isinstance(surface, PointSurface):
            return gg + hh * s
        R = surface.R
        rho = R + s
        if isinstance(surface, SphereSurface):
            return gg + hh * R - hh * R * R / rho
        return gg + hh * R * np.log(rho / R)

    s = dist.xi * np.where(dist.side == 0, 1.0, dist.side)
    if cap is not None:
        s = np.clip(s, -cap, cap)
        if not isinstance(surface, PointSurface):
            s = np.maximum(s, -0.999 * surface.R)
    out = np.where(dist.side < 0, local(s, gi, hi), local(s, go, ho))
    return np.asarray(out, dtype=float)


def _center_field(problem: PenalizedProblem) -> np.ndarray:
    if problem.center is not None:
        return _eval(problem.center, _coords(problem.grid))
    return harmonic_extension(problem.surface, problem.g, problem.h, problem.grid)


# --- operator assembly ------------------------------------------------------


@dataclass
class _Stencil:
    lap: sp.csr_matrix           # Laplacian rows (zero on fixed rows)
    fixed: np.ndarray            # boolean mask of Dirichlet rows
    values: np.ndarray           # prescribed values on fixed rows
    pairs: list = field(default_factory=list)  # (axis, forward, backward) for centered drift


def _stencil_1d(grid: IntervalGrid, far) -> _Stencil:
    n, h = grid.n, grid.h
    left, right = _pair(far)
    if left is None and right is None:
        raise ConfigurationError("far-field condition missing: give at least one end value")
    i = np.arange(n)
    lo = np.full(n, 1.0 / h**2)
    up = np.full(n, 1.0 / h**2)
    di = np.full(n, -2.0 / h**2)
    fwd, bwd = np.minimum(i + 1, n - 1), np.maximum(i - 1, 0)
    # Zero-flux ends use a mirrored ghost node.
    up[0] += lo[0]
    lo[0] = 0.0
    lo[-1] += up[-1]
    up[-1] = 0.0
    fwd[-1], bwd[0] = n - 2, 1
    fixed = np.zeros(n, bool)
    values = np.zeros(n)
    for idx, v in ((0, left), (n - 1, right)):
        if v is not None:
            fixed[idx] = True
            values[idx] = float(v(grid.nodes[idx]) if callable(v) else v)
    L = sp.diags([lo[1:], di, up[:-1]], [-1, 0, 1], format="csr")
    return _Stencil(L, fixed, values, [(0, fwd, bwd)])


def _stencil_radial(grid: RadialGrid, far) -> _Stencil:
    n, h, r = grid.n, grid.h, grid.nodes
    inner, outer = _pair(far)
    if outer is None:
        raise ConfigurationError("far-field condition missing at r_max")
    lo = 1.0 / h**2 - 1.0 / (r * h)
    up = 1.0 / h**2 + 1.0 / (r * h)
    di = np.full(n, -2.0 / h**2)
    i = np.arange(n)
    fwd, bwd = np.minimum(i + 1, n - 1), np.maximum(i - 1, 0)
    if grid.staggered_origin:
        # phi'(0) = 0 between the ghost at -r_0 and the node at r_0
        di[0] += lo[0]
        bwd[0] = 0
    else:
        up[0] += lo[0]
        bwd[0] = 1
    lo[0] = 0.0
    fixed = np.zeros(n, bool)
    values = np.zeros(n)
    for idx, v in ((0, inner), (n - 1, outer)):
        if v is not None:
            fixed[idx] = True
            values[idx] = float(v(r[idx]) if callable(v) else (0.0 if v == "decay" else v))
    L = sp.diags([lo[1:], di, up[:-1]], [-1, 0, 1], format="csr")
    return _Stencil(L, fixed, values, [(0, fwd, bwd)])


def _stencil_2d(grid: SquareGrid, far) -> _Stencil:
    if far is None:
        raise ConfigurationError("far-field condition missing on the square boundary")
    n, h = grid.n, grid.h
    N = grid.size
    k = np.arange(N)
    i, j = k % n, k // n
    inner = ~grid.boundary
    rows, cols, vals = [], [], []
    pairs = []
    for axis, (step, idx) in enumerate(((1, i), (n, j))):
        fwd = np.where(idx < n - 1, k + step, k)
        bwd = np.where(idx > 0, k - step, k)
        for nb in (fwd, bwd):
            rows.append(k[inner])
            cols.append(nb[inner])
            vals.append(np.full(inner.sum(), 1.0 / h**2))
        pairs.append((axis, fwd, bwd))
    rows.append(k[inner])
    cols.append(k[inner])
    vals.append(np.full(inner.sum(), -4.0 / h**2))
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    values = np.zeros(N)
    values[grid.boundary] = _eval(far, tuple(c[grid.boundary] for c in grid.coords))
    return _Stencil(L, grid.boundary.copy(), values, pairs)


def _stencil(grid: Grid, far) -> _Stencil:
    if isinstance(grid, IntervalGrid):
        return _stencil_1d(grid, far)
    if isinstance(grid, RadialGrid):
        return _stencil_radial(grid, far)
    if isinstance(grid, SquareGrid):
        return _stencil_2d(grid, far)
    raise ConfigurationError(f"unsupported grid type {type(grid).__name__}")


def _offdiag(L: sp.csr_matrix) -> sp.coo_matrix:
    C = sp.coo_matrix(L)
    keep = C.row != C.col
    return sp.coo_matrix((C.data[keep], (C.row[keep], C.col[keep])), shape=L.shape)


def dressing_split(lap: sp.csr_matrix, lam: np.ndarray, w: float,
                   rows: np.ndarray | None = None) -> tuple[sp.csr_matrix, np.ndarray]:
    """Split ``F^{-1} Lap F - Lap`` into a zero-row-sum drift and a potential.

    Args:
        lap: Discrete Laplacian whose rows annihilate constants.
        lam: Node samples of ``lambda``.
        w: Weight; ``F = exp(w lambda)``.
        rows: Optional boolean mask of rows to keep.

    Returns:
        ``(drift, potential)`` with ``drift_ij = Lap_ij (F_j/F_i - 1)`` for
        ``j != i`` and ``potential_i = sum_j drift_ij = (Lap F)_i / F_i``.
    """
    C = _offdiag(lap)
    v = C.data * np.expm1(w * (lam[C.col] - lam[C.row]))
    if rows is not None:
        v = np.where(rows[C.row], v, 0.0)
    off = sp.csr_matrix((v, (C.row, C.col)), shape=lap.shape)
    pot = np.asarray(off.sum(axis=1)).ravel()
    drift = (off - sp.diags(pot)).tocsr()
    return drift, pot


def _centered_drift(stencil: _Stencil, sf: ScaleField, h: float, rows: np.ndarray) -> sp.csr_matrix:
    n = rows.size
    drift = sf.drift if sf.drift.ndim == 2 else sf.drift[:, None]
    mats = []
    k = np.arange(n)
    for axis, fwd, bwd in stencil.pairs:
        c = np.where(rows, drift[:, axis], 0.0) / (2.0 * h)
        mats.append(sp.csr_matrix((c, (k, fwd)), shape=(n, n)))
        mats.append(sp.csr_matrix((-c, (k, bwd)), shape=(n, n)))
    return sum(mats).tocsr()


@dataclass(frozen=True)
class AssembledSystem:
    """Linear system ``A phi = b`` of a penalized problem."""

    A: sp.csr_matrix
    b: np.ndarray
    phi_d: np.ndarray
    scale: ScaleField | None
    fixed: np.ndarray


def _check_problem(problem: PenalizedProblem) -> None:
    grid = problem.grid
    dist = distance_field(problem.surface, grid)
    if np.any(dist.xi < 1e-12 * grid.h):
        raise ConfigurationError("a grid node lies on the interface; shift the grid")
    if problem.penalized and problem.check_resolution:
        p = problem.profile
        if grid.h > p.eta * p.eps / MIN_INNER_CELLS * (1 + 1e-9):
            raise ConfigurationError(
                f"unresolved layer: h = {grid.h:.4g} exceeds eta*eps/{MIN_INNER_CELLS} "
                f"= {p.eta * p.eps / MIN_INNER_CELLS:.4g}"
            )


def _interior_closed(problem: PenalizedProblem) -> bool:
    """Whether the interior side carries no boundary data of its own."""
    if isinstance(problem.grid, SquareGrid):
        return True
    first = _pair(problem.far_field)[0]
    return first is None


def _gauge_node(problem: PenalizedProblem) -> int:
    grid = problem.grid
    if isinstance(grid, SquareGrid):
        x, y = grid.coords
        cx, cy = problem.surface.center
        return int(np.argmin(np.hypot(x - cx, y - cy)))
    return 0


def assemble_operator(problem: PenalizedProblem) -> AssembledSystem:
    """Assemble the sparse system of ``problem``.

    Raises:
        ConfigurationError: for a node on ``S``, an unresolved layer, missing
            far-field data, an incompatible interior Neumann flux, or a
            missing Neumann gauge.
    """
    _check_problem(problem)
    grid = problem.grid
    st = _stencil(grid, problem.far_field)
    fixed, values = st.fixed.copy(), st.values.copy()

    if problem.mode == "neumann" and _interior_closed(problem):
        hi = _pair(problem.h)[0]
        if abs(_surface_measure(problem.surface) * hi) > 1e-12:
            raise ConfigurationError(
                "interior Neumann data violate the compatibility condition: integral of h over S is not 0"
            )
        if problem.gauge is None:
            raise ConfigurationError("interior Neumann problem is singular without a gauge value")
        k = _gauge_node(problem)
        fixed[k] = True
        values[k] = float(problem.gauge)

    rows = ~fixed
    L = st.lap.multiply(rows[:, None]).tocsr()
    n = L.shape[0]
    phi_d = _center_field(problem)
    T = sp.csr_matrix((n, n))
    sf = None
    if problem.penalized:
        sf = scale_field(problem.profile, problem.w, problem.surface, grid, problem.xi_floor)
        drift_c, pot_c = dressing_split(L, sf.lam, problem.w, rows)
        if problem.mode in ("cauchy", "neumann"):
            if problem.drift_scheme == "conservative":
                T = T + drift_c
            else:
                T = T + _centered_drift(st, sf, grid.h, rows)
        if problem.mode in ("cauchy", "dirichlet"):
            pot = pot_c if problem.potential == "consistent" else np.where(rows, sf.potential, 0.0)
            T = T + sp.diags(pot)
    A = (L + T + sp.diags(fixed.astype(float))).tocsr()
    A.eliminate_zeros()
    b = np.where(fixed, values, T @ phi_d)
    return AssembledSystem(A, b, phi_d, sf, fixed)


def classical_system(grid: Grid, far_field) -> tuple[sp.csr_matrix, np.ndarray]:
    """The unpenalized Laplace system on ``grid`` with the given far field."""
    st = _stencil(grid, far_field)
    rows = ~st.fixed
    A = (st.lap.multiply(rows[:, None]) + sp.diags(st.fixed.astype(float))).tocsr()
    A.eliminate_zeros()
    return A, np.where(st.fixed, st.values, 0.0)


def homothetic_operator(grid: IntervalGrid, sf: ScaleField, drift_scheme: str = "conservative",
                        potential_scheme: str = "analytic") -> sp.csr_matrix:
    """Full homothetic operator ``L`` on the interior rows of a 1D grid.

    Boundary rows are the identity, so ``L u = b`` with ``b`` zero inside
    and boundary values at the ends is the Dirichlet problem for ``L u = 0``.
    """
    st = _stencil_1d(grid, (0.0, 0.0))
    rows = ~st.fixed
    L = st.lap.multiply(rows[:, None]).tocsr()
    drift_c, pot_c = dressing_split(L, sf.lam, sf.w, rows)
    drift = drift_c if drift_scheme == "conservative" else _centered_drift(st, sf, grid.h, rows)
    pot = pot_c if potential_scheme == "consistent" else np.where(rows, sf.potential, 0.0)
    return (L + drift + sp.diags(pot) + sp.diags(st.fixed.astype(float))).tocsr()


# --- traces -----------------------------------------------------------------


def _quad_trace(s: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Value and slope at ``s = 0`` of the parabola through three points."""
    c = np.polyfit(s, v, 2)
    return float(c[2]), float(c[1])


def _traces_axis(coord: np.ndarray, phi: np.ndarray, s0: float, tube: float):
    out = []
    for side in (-1, 1):
        s = coord - s0
        cand = np.flatnonzero((side * s > tube) & (side * s > 0))
        if cand.size < 3:
            raise ConfigurationError("fewer than three nodes outside the layer on one side of S")
        pick = cand[np.argsort(side * s[cand])[:3]]
        out.append(_quad_trace(s[pick], phi[pick]))
    (vi, di), (vo, do) = out
    return vi, vo, di, do


def _traces_2d(grid: SquareGrid, surface: CircleSurface, phi: np.ndarray, tube: float, n_rays: int):
    interp = RegularGridInterpolator((grid.axis, grid.axis), phi.reshape(grid.n, grid.n), method="cubic")
    th = 2 * np.pi * (np.arange(n_rays) + 0.5) / n_rays
    cx, cy = surface.center
    offs = tube + grid.h * np.array([1.0, 2.0, 3.0])
    res = np.zeros((4, n_rays))
    for k, t in enumerate(th):
        for m, side in enumerate((-1, 1)):
            s = side * offs
            rho = surface.R + s
            pts = np.column_stack([cy + rho * np.sin(t), cx + rho * np.cos(t)])
            v, d = _quad_trace(s, interp(pts))
            res[m, k], res[m + 2, k] = v, d
    return res[0], res[1], res[2], res[3], th


def measure_traces(problem: PenalizedProblem, phi: np.ndarray, n_rays: int = 16):
    """One-sided traces and normal derivatives on ``S``.

    Each side is extrapolated quadratically from the three nearest nodes
    (sample points along rays in 2D) lying strictly outside the layer.
    """
    grid, surface = problem.grid, problem.surface
    tube = problem.tube if problem.penalized else 0.0
    if isinstance(grid, IntervalGrid):
        return _traces_axis(grid.nodes, phi, surface.x0, tube) + (None,)
    if isinstance(grid, RadialGrid):
        return _traces_axis(grid.nodes, phi, surface.R, tube) + (None,)
    return _traces_2d(grid, surface, phi, tube, n_rays)


def backward_error(A: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    """Normwise relative residual ``||Ax - b|| / (||A|| ||x|| + ||b||)`` (infinity norms)."""
    anorm = float(abs(A).sum(axis=1).max())
    denom = anorm * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(A @ x - b, np.inf) / denom)


def solve(problem: PenalizedProblem, rtol: float = 1e-10) -> SolveResult:
    """Assemble, factorize and solve ``problem``; measure traces and jumps.

    Raises:
        NumericalError: if the direct solve breaks down or the backward
            error exceeds ``rtol`` after one refinement step.
    """
    sysm = assemble_operator(problem)
    A, b = sysm.A, sysm.b
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise NumericalError(f"sparse factorization failed: {exc}") from exc
    phi = lu.solve(b)
    res = backward_error(A, phi, b)
    if res > rtol:
        phi = phi + lu.solve(b - A @ phi)
        res = backward_error(A, phi, b)
    if not np.all(np.isfinite(phi)) or res > rtol:
        raise NumericalError(f"linear solve failed: relative residual {res:.3e}")
    ti, to, di, do, angles = measure_traces(problem, phi)
    stats = {"n": int(A.shape[0]), "nnz": int(A.nnz), "h": float(problem.grid.h),
             "eps": float(problem.tube)}
    return SolveResult(problem, phi, float(res), stats, ti, to, di, do, angles)


# --- jump diagnostics -------------------------------------------------------


@dataclass(frozen=True)
class JumpReport:
    jump_value: float
    jump_flux: float
    classification: str


def classify_layer(jump_value: float, jump_flux: float, tol: float = 1e-2) -> str:
    """Name the layer source implied by the two jumps."""
    v, f = abs(jump_value) >= tol, abs(jump_flux) >= tol
    if not v and not f:
        return "removable"
    if f and not v:
        return "single-layer"
    if v and not f:
        return "double-layer"
    return "combined"


def jump_diagnostics(result: SolveResult, tol: float = 1e-2) -> JumpReport:
    """Jumps across ``S`` and the resulting layer classification.

    In 2D the largest jump magnitude over the sampled rays is used.
    """
    jv = np.atleast_1d(result.jump_value)
    jf = np.atleast_1d(result.jump_flux)
    v = float(jv[np.argmax(np.abs(jv))])
    f = float(jf[np.argmax(np.abs(jf))])
    return JumpReport(v, f, classify_layer(v, f, tol))


@dataclass(frozen=True)
class GluedField:
    """Piecewise field on a 1D grid with known jumps across ``x0``."""

    grid: IntervalGrid
    x0: float
    phi: np.ndarray
    jump_value: float
    jump_flux: float

    @classmethod
    def from_functions(cls, grid: IntervalGrid, x0: float, phi_i, phi_o, dphi_i, dphi_o) -> "GluedField":
        """Sample ``phi_i`` left of ``x0`` and ``phi_o`` right of it."""
        x = grid.nodes
        phi = np.where(x < x0, phi_i(x), phi_o(x))
        return cls(grid, x0, phi, float(phi_o(x0) - phi_i(x0)), float(dphi_o(x0) - dphi_i(x0)))


def glued_field(result: SolveResult) -> GluedField:
    """Replace the layer of a 1D solution by the one-sided bulk extrapolants."""
    prob = result.problem
    if not isinstance(prob.grid, IntervalGrid):
        raise ConfigurationError("glued fields are implemented for 1D grids")
    x, x0 = prob.grid.nodes, prob.surface.x0
    tube = prob.tube if prob.penalized else 0.0
    phi = result.phi.copy()
    for side, v, d in ((-1, result.trace_interior, result.flux_interior),
                       (1, result.trace_exterior, result.flux_exterior)):
        s = x - x0
        cand = np.flatnonzero((side * s > tube) & (side * s > 0))
        pick = cand[np.argsort(side * s[cand])[:3]]
        c = np.polyfit(s[pick], result.phi[pick], 2)
        layer = (side * s > 0) & (side * s <= tube)
        phi[layer] = np.polyval(c, s[layer])
    return GluedField(prob.grid, x0, phi, float(result.jump_value), float(result.jump_flux))


def distributional_identity_check(field_or_result, psi: Callable, dpsi: Callable) -> float:
    """``|<Lap phi, psi> - ([d_nu phi] psi(x0) - [phi] psi'(x0))|`` in 1D.

    The left side is the sum ``h * sum_i (Lap_h phi)_i psi(x_i)`` over interior
    nodes; ``psi`` should vanish near both ends of the grid.
    """
    fld = glued_field(field_or_result) if isinstance(field_or_result, SolveResult) else field_or_result
    grid, phi = fld.grid, fld.phi
    x, h = grid.nodes, grid.h
    lap = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
    lhs = h * float(np.sum(lap * psi(x[1:-1])))
    rhs = fld.jump_flux * float(psi(fld.x0)) - fld.jump_value * float(dpsi(fld.x0))
    return abs(lhs - rhs)
