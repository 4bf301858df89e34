"""Scripted studies: penalization convergence, point source, branch exponents, energies."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from scipy import stats

from .errors import ConfigurationError
from .grid import IntervalGrid, RadialGrid, build_interval_grid, build_radial_grid
from .scale import CutoffProfile, PointSurface, SphereSurface, epsilon_sequence, indicial_roots
from .solver import PenalizedProblem, SolveResult, solve


# --- fitting ----------------------------------------------------------------


@dataclass(frozen=True)
class OrderFit:
    """Least-squares slope of ``log y`` against ``log x`` with a 95% interval."""

    order: float
    lower: float
    upper: float

    def as_dict(self) -> dict:
        return {"order": self.order, "ci95": [self.lower, self.upper]}


def fit_order(x, y) -> OrderFit:
    """Fit ``y ~ x^order``; the interval is NaN-wide for fewer than three points."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        raise ConfigurationError("need at least two points to fit an order")
    if np.any(y <= 0) or np.any(x <= 0):
        return OrderFit(float("nan"), float("nan"), float("nan"))
    lr = stats.linregress(np.log(x), np.log(y))
    if x.size < 3:
        return OrderFit(float(lr.slope), float("nan"), float("nan"))
    half = stats.t.ppf(0.975, x.size - 2) * lr.stderr
    return OrderFit(float(lr.slope), float(lr.slope - half), float(lr.slope + half))


# --- convergence studies ----------------------------------------------------


@dataclass
class ConvergenceTable:
    """Rows of one penalization study, ordered by decreasing ``eps``."""

    family: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    orders: dict[str, OrderFit] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def fit(self, name: str) -> OrderFit:
        fit = fit_order(self.column("eps"), np.abs(self.column(name)))
        self.orders[name] = fit
        return fit


def _symmetric_interval(h_target: float, half_width: float = 1.0) -> IntervalGrid:
    # Even node count keeps x = 0 half a cell away from the nearest nodes.
    n = int(np.ceil(2 * half_width / h_target)) // 2 * 2 + 2
    return build_interval_grid(-half_width, half_width, n)


@dataclass(frozen=True)
class Family:
    """A one-parameter family of penalized problems indexed by ``eps``."""

    name: str
    build: Callable[[float], PenalizedProblem]
    record: Callable[[SolveResult], dict]
    fitted: tuple[str, ...]


def dirichlet_family(a: float = 0.75, eta: float = 0.5, g: float = 0.7, far=(0.0, 1.0),
                     cells: int = 8, blend: str = "smooth") -> Family:
    """1D Dirichlet penalization at ``S = {0}`` with value ``g``."""
    def build(eps):
        grid = _symmetric_interval(eta * eps / cells)
        return PenalizedProblem(grid, PointSurface(0.0), "dirichlet", CutoffProfile(a, eps, eta, blend),
                                g=g, h=0.0, far_field=far)

    def record(r):
        return {"trace_error": max(abs(r.trace_interior - g), abs(r.trace_exterior - g))}

    return Family("dirichlet-1d", build, record, ("trace_error",))


def neumann_family(a: float = 1.5, eta: float = 0.5, h: float = 1.0, far=(0.0, 0.0),
                   cells: int = 8, blend: str = "smooth") -> Family:
    """1D Neumann penalization at ``S = {0}`` with flux ``h``."""
    def build(eps):
        grid = _symmetric_interval(eta * eps / cells)
        return PenalizedProblem(grid, PointSurface(0.0), "neumann", CutoffProfile(a, eps, eta, blend),
                                g=0.0, h=h, far_field=far)

    def record(r):
        return {"flux_error": max(abs(r.flux_interior - h), abs(r.flux_exterior - h))}

    return Family("neumann-1d", build, record, ("flux_error",))


def cauchy_family(a: float = 1.0, eta: float = 0.5, cells: int = 8, C: float = 1.0, R: float = 1.0,
                  r_in: float = 0.25, r_out: float = 2.0, blend: str = "smooth") -> Family:
    """Consistent Cauchy data ``(C/R, -C/R^2)`` on a sphere in a radial annulus.

    The center field is the global harmonic ``C/r`` and the annulus ends carry
    its exact values, so the limit is the removable-interface field ``C/r``.
    """
    def build(eps):
        h_target = eta * eps / cells
        n = int(np.ceil((r_out - r_in) / h_target)) + 1
        if (n - 1) % 2 == 0:
            n += 1  # keep R off the grid
        grid = build_radial_grid(r_out, n, r_min=r_in)
        return PenalizedProblem(grid, SphereSurface(R), "cauchy", CutoffProfile(a, eps, eta, blend),
                                g=C / R, h=-C / R**2, far_field=(C / r_in, C / r_out),
                                center=lambda r: C / r)

    def record(r):
        return {"trace_error": max(abs(r.trace_interior - C / R), abs(r.trace_exterior - C / R))}

    return Family("cauchy-radial", build, record, ("jump_value", "jump_flux", "trace_error"))


def cauchy_linear_family(a: float = 1.0, eta: float = 0.5, cells: int = 8, slope: float = 2.0,
                         offset: float = 1.0) -> Family:
    """1D Cauchy data taken from one global linear function (reproduced exactly)."""
    def build(eps):
        grid = _symmetric_interval(eta * eps / cells)
        return PenalizedProblem(grid, PointSurface(0.0), "cauchy", CutoffProfile(a, eps, eta),
                                g=offset, h=slope, far_field=(offset - slope, offset + slope))

    def record(r):
        return {"trace_error": max(abs(r.trace_interior - offset), abs(r.trace_exterior - offset))}

    return Family("cauchy-1d", build, record, ("jump_value", "jump_flux"))


FAMILIES: dict[str, Callable[..., Family]] = {
    "dirichlet-1d": dirichlet_family,
    "neumann-1d": neumann_family,
    "cauchy-radial": cauchy_family,
    "cauchy-1d": cauchy_linear_family,
}


def penalization_convergence(family: Family | str, eps0: float = 0.1, n_levels: int = 5,
                             **kwargs) -> ConvergenceTable:
    """Solve a family on ``eps_n = eps0 2^-n`` and fit orders in ``eps``."""
    if isinstance(family, str):
        if family not in FAMILIES:
            raise ConfigurationError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
        family = FAMILIES[family](**kwargs)
    base = ["eps", "h", "n", "trace_interior", "trace_exterior", "flux_interior", "flux_exterior",
            "jump_value", "jump_flux", "residual"]
    table = ConvergenceTable(family.name, base)
    for eps in epsilon_sequence(eps0, n_levels):
        res = solve(family.build(float(eps)))
        row = {
            "eps": float(eps), "h": float(res.problem.grid.h), "n": int(res.problem.grid.n),
            "trace_interior": float(res.trace_interior), "trace_exterior": float(res.trace_exterior),
            "flux_interior": float(res.flux_interior), "flux_exterior": float(res.flux_exterior),
            "jump_value": float(res.jump_value), "jump_flux": float(res.jump_flux),
            "residual": float(res.residual),
        }
        extra = family.record(res)
        for k in extra:
            if k not in table.columns:
                table.columns.append(k)
        row.update({k: float(v) for k, v in extra.items()})
        table.rows.append(row)
    if n_levels >= 2:
        for name in family.fitted:
            table.fit(name)
    return table


# --- energies ---------------------------------------------------------------


def field_energy(phi: np.ndarray, grid: IntervalGrid | RadialGrid, grad: np.ndarray | None = None,
                 exclude: np.ndarray | None = None) -> float:
    """Trapezoid-rule energy ``1/2 int |grad phi|^2 dV``.

    Radial grids include the ``4 pi r^2`` Jacobian. Intervals between nodes
    ``i`` and ``i+1`` are skipped when ``exclude`` is true at either node.
    """
    x = grid.nodes
    g = np.gradient(phi, grid.h) if grad is None else np.asarray(grad, float)
    dens = 0.5 * g**2
    if isinstance(grid, RadialGrid):
        dens = dens * 4.0 * np.pi * x**2
    seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(x)
    if exclude is not None:
        ex = np.asarray(exclude, bool)
        seg = np.where(ex[1:] | ex[:-1], 0.0, seg)
    return float(np.sum(seg))


def unregularized_energy(C: float, h: float, r_max: float = 1.0) -> float:
    """Energy of the bare point charge ``C/r`` sampled on ``[h, r_max]``."""
    n = int(round((r_max - h) / h)) + 1
    grid = build_radial_grid(r_max, n, r_min=h)
    r = grid.nodes
    return field_energy(C / r, grid, grad=-C / r**2)


# --- point source -----------------------------------------------------------


@dataclass(frozen=True)
class PointSourceSpec:
    """Hollow-sphere source: ``phi = C/R`` enforced on the sphere ``|x| = R``."""

    C: float = 1.0
    R: float = 0.5
    r_max: float = 50.0
    n: int = 20000
    a: float = 0.75
    eps: float = 0.025
    eta: float = 0.5
    variant: str = "harmonic"
    blend: str = "smooth"
    max_tail_fraction: float = 0.05

    def __post_init__(self):
        if not (0 < self.R < self.r_max):
            raise ConfigurationError("need 0 < R < r_max")
        if not np.isfinite(self.C):
            raise ConfigurationError("C must be finite")
        if self.variant not in ("harmonic", "constant"):
            raise ConfigurationError("variant must be 'harmonic' or 'constant'")
        if self.eps >= self.R:
            raise ConfigurationError("layer width must be smaller than R")


@dataclass(frozen=True)
class PointSourceResult:
    r: np.ndarray
    phi: np.ndarray
    exact: np.ndarray
    sup_error: float
    energy_bulk: float
    energy_layer: float
    energy_tail: float
    energy: float
    energy_exact: float
    interior_flatness: float
    far_field_error: float
    solve: SolveResult

    @property
    def energy_rel_error(self) -> float:
        if self.energy_exact == 0:
            return abs(self.energy)
        return abs(self.energy - self.energy_exact) / self.energy_exact

    def summary(self) -> dict:
        return {
            "sup_error": self.sup_error, "energy_bulk": self.energy_bulk,
            "energy_layer": self.energy_layer, "energy_tail": self.energy_tail,
            "energy": self.energy, "energy_exact": self.energy_exact,
            "energy_rel_error": self.energy_rel_error,
            "interior_flatness": self.interior_flatness, "far_field_error": self.far_field_error,
            "trace_interior": float(self.solve.trace_interior),
            "trace_exterior": float(self.solve.trace_exterior),
        }


def point_source_run(spec: PointSourceSpec) -> PointSourceResult:
    """Solve the penalized Dirichlet point-source problem on a staggered radial grid.

    ``variant="harmonic"`` uses ``phi_d = C/r`` on the exterior side of the
    layer and ``C/R`` inside; ``variant="constant"`` uses ``C/R`` throughout.
    The reported ``energy`` includes the layer and the analytic tail
    ``2 pi C^2 / r_max`` beyond the truncation radius.

    Raises:
        ConfigurationError: for an unresolved layer or a truncation radius
            whose tail exceeds ``max_tail_fraction`` of the total energy.
    """
    C, R = spec.C, spec.R
    if R / spec.r_max > spec.max_tail_fraction:
        raise ConfigurationError(
            f"truncation radius too small: tail is {R / spec.r_max:.2%} of the energy"
        )
    grid = build_radial_grid(spec.r_max, spec.n)
    hext = -C / R**2 if spec.variant == "harmonic" else 0.0
    prob = PenalizedProblem(
        grid, SphereSurface(R), "dirichlet", CutoffProfile(spec.a, spec.eps, spec.eta, spec.blend),
        g=C / R, h=(0.0, hext), far_field=(None, C / spec.r_max),
    )
    res = solve(prob)
    r, phi = grid.nodes, res.phi
    exact = np.where(r > R, C / r, C / R)
    layer = np.abs(r - R) <= spec.eps
    sup = float(np.max(np.abs(phi - exact)[~layer]))
    e_all = field_energy(phi, grid)
    e_bulk = field_energy(phi, grid, exclude=layer)
    tail = 2.0 * np.pi * C**2 / spec.r_max
    inside = r < R - spec.eps
    flat = float(np.max(np.abs(phi[inside] - C / R))) if inside.any() else 0.0
    far = (r >= 2 * R) & (r <= spec.r_max / 2)
    far_err = float(np.max(np.abs(phi[far] - C / r[far]) * r[far])) if far.any() else 0.0
    return PointSourceResult(
        r, phi, exact, sup, e_bulk, e_all - e_bulk, tail, e_all + tail,
        2.0 * np.pi * C**2 / R, flat, far_err, res,
    )


# --- indicial branches ------------------------------------------------------


@dataclass(frozen=True)
class BranchFit:
    """Fitted local exponent of ``u ~ xi^m`` in the inner zone."""

    a: float
    exponent: float
    half_window_exponent: float
    roots: tuple[float, float]
    branch: int
    rel_error: float
    parity: str

    def as_dict(self) -> dict:
        d = asdict(self)
        d["roots"] = list(self.roots)
        return d


def branch_exponent_measure(a: float, n: int = 4000, eps: float = 0.1, eta: float = 0.5,
                            parity: str = "symmetric", w: float = 1.0) -> BranchFit:
    """Solve ``L u = 0`` on ``[-1, 1]`` and fit ``log|u|`` against ``log xi`` near ``S = {0}``.

    The full homothetic operator (Cauchy mode with zero center field) is used.
    Symmetric far data ``u(-1) = u(1) = 1`` excite the even branch and
    antisymmetric data ``u(-1) = -1, u(1) = 1`` the odd one. The fit uses
    ``xi in [2h, eta*eps/2]`` on the right of ``S``; the half window is
    reported to show robustness.
    """
    if parity not in ("symmetric", "antisymmetric"):
        raise ConfigurationError("parity must be 'symmetric' or 'antisymmetric'")
    if n % 2:
        n += 1
    grid = build_interval_grid(-1.0, 1.0, n)
    left = 1.0 if parity == "symmetric" else -1.0
    prob = PenalizedProblem(grid, PointSurface(0.0), "cauchy", CutoffProfile(a, eps, eta),
                            g=0.0, h=0.0, far_field=(left, 1.0), w=w)
    u = solve(prob).phi
    x, h = grid.nodes, grid.h

    def slope(hi):
        m = (x > 2 * h) & (x < hi)
        if m.sum() < 3:
            raise ConfigurationError("fit window holds fewer than three nodes")
        return float(np.polyfit(np.log(x[m]), np.log(np.abs(u[m])), 1)[0])

    s = slope(eta * eps / 2)
    s2 = slope(eta * eps / 4)
    roots = indicial_roots(a * w)
    k = int(np.argmin([abs(s - m) for m in roots]))
    denom = abs(roots[k]) if roots[k] != 0 else 1.0
    return BranchFit(float(a), s, s2, roots, k + 1, abs(s - roots[k]) / denom, parity)
