"""Fixed scale field ``lambda = a ln f(xi)`` around an interface and its coefficients.

The cutoff profile ``f`` equals the distance ``xi`` close to the interface,
equals 1 outside a tube of width ``eps``, and blends smoothly in between.
The homothetic operator only sees ``lambda`` through

* the drift ``2 w grad(lambda)``, and
* the potential ``w lap(lambda) + w^2 |grad(lambda)|^2``,

both of which vanish identically where ``f = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError
from .grid import IntervalGrid, RadialGrid, SquareGrid

Grid = Union[IntervalGrid, RadialGrid, SquareGrid]

BLENDS = ("smooth", "quintic")


def _smooth_step(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C-infinity step ``e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`` and two derivatives.

    Written as the logistic function of ``z = 1/(1-t) - 1/t`` so that nothing
    overflows near the ends of ``(0, 1)``.
    """
    z = 1.0 / (1.0 - t) - 1.0 / t
    s = expit(z)
    q = s * expit(-z)
    zp = 1.0 / (1.0 - t) ** 2 + 1.0 / t**2
    zpp = 2.0 / (1.0 - t) ** 3 - 2.0 / t**3
    return s, q * zp, q * (1.0 - 2.0 * s) * zp**2 + q * zpp


def _quintic_step(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C2 step ``10t^3 - 15t^4 + 6t^5`` and two derivatives."""
    return (
        t**3 * (10.0 - 15.0 * t + 6.0 * t**2),
        30.0 * t**2 * (1.0 - t) ** 2,
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    )


_STEPS: dict[str, Callable] = {"smooth": _smooth_step, "quintic": _quintic_step}


@dataclass(frozen=True)
class CutoffProfile:
    """Cutoff ``f`` with inner zone ``xi <= eta*eps`` and outer zone ``xi >= eps``.

    Attributes:
        a: Exponent in ``lambda = a ln f``; sets the penalty strength.
        eps: Tube width.
        eta: Fraction of the tube where ``f(xi) = xi``.
        blend: ``"smooth"`` (C-infinity) or ``"quintic"`` (C2).
    """

    a: float
    eps: float
    eta: float = 0.5
    blend: str = "smooth"

    def __post_init__(self):
        if not np.isfinite(self.a):
            raise ConfigurationError(f"a must be finite, got {self.a}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ConfigurationError(f"eps must be positive, got {self.eps}")
        if self.eps > 1:
            # The blend interpolates xi -> 1, which is monotone only for eps <= 1.
            raise ConfigurationError(f"eps must not exceed 1, got {self.eps}")
        if not 0 < self.eta < 1:
            raise ConfigurationError(f"eta must lie in (0, 1), got {self.eta}")
        if self.blend not in BLENDS:
            raise ConfigurationError(f"unknown blend {self.blend!r}; choose from {BLENDS}")

    def with_eps(self, eps: float) -> "CutoffProfile":
        return CutoffProfile(self.a, eps, self.eta, self.blend)


def epsilon_sequence(eps0: float, n_levels: int) -> np.ndarray:
    """Geometric layer widths ``eps0 * 2**-k`` for ``k = 0..n_levels-1``."""
    if n_levels < 1:
        raise ConfigurationError("n_levels must be at least 1")
    return eps0 * 0.5 ** np.arange(n_levels)


def profile_eval(p: CutoffProfile, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate ``f``, ``f'`` and ``f''`` at distances ``xi >= 0``.

    In the blend zone ``f = xi + s(t) (1 - xi)`` with ``t`` the position
    inside ``[eta*eps, eps]`` and ``s`` the chosen step, so all three
    quantities are continuous at both seams.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise ConfigurationError("distance xi must be finite and non-negative")
    inner = p.eta * p.eps
    f = np.where(xi <= inner, xi, 1.0)
    fp = np.where(xi <= inner, 1.0, 0.0)
    fpp = np.zeros_like(xi)
    mid = (xi > inner) & (xi < p.eps)
    if np.any(mid):
        L = p.eps - inner
        x = xi[mid]
        s, sp_, spp = _STEPS[p.blend]((x - inner) / L)
        f[mid] = x + s * (1.0 - x)
        fp[mid] = 1.0 - s + sp_ / L * (1.0 - x)
        fpp[mid] = -2.0 * sp_ / L + spp / L**2 * (1.0 - x)
    if f.ndim == 0:
        return float(f), float(fp), float(fpp)
    return f, fp, fpp


def lambda_coefficients(p: CutoffProfile, w: float, xi, lap_xi=0.0):
    """Return ``(lambda, drift_scalar, potential)`` at distances ``xi``.

    ``drift_scalar = 2 w a f'/f`` multiplies ``grad(xi)``; the potential is
    ``w a f''/f + (w^2 a^2 - w a) (f'/f)^2 + w a (f'/f) lap(xi)``, the exact
    chain-rule expansion of ``w lap(lambda) + w^2 |grad(lambda)|^2`` when
    ``|grad(xi)| = 1``. Points with ``xi >= eps`` give exact zeros.
    """
    f, fp, fpp = profile_eval(p, xi)
    f, fp, fpp = np.asarray(f), np.asarray(fp), np.asarray(fpp)
    if np.any(f <= 0):
        raise ConfigurationError("cutoff profile is not positive; clamp xi away from 0")
    wa = w * p.a
    r = fp / f
    lam = p.a * np.log(f)
    drift = 2.0 * wa * r
    pot = wa * fpp / f + (wa * wa - wa) * r * r + wa * r * np.asarray(lap_xi, dtype=float)
    out = (lam + 0.0, drift + 0.0, pot + 0.0)  # turn -0.0 into 0.0
    if np.ndim(xi) == 0:
        return tuple(float(v) for v in out)
    return out


# --- surfaces ---------------------------------------------------------------


@dataclass(frozen=True)
class PointSurface:
    """The point ``{x0}`` in 1D; interior is the left side by convention."""

    x0: float = 0.0


@dataclass(frozen=True)
class SphereSurface:
    """Sphere of radius ``R`` about the origin, for radial 3D grids."""

    R: float


@dataclass(frozen=True)
class CircleSurface:
    """Circle of radius ``R`` centred at ``center`` in 2D."""

    R: float
    center: tuple[float, float] = (0.0, 0.0)


Surface = Union[PointSurface, SphereSurface, CircleSurface]


@dataclass(frozen=True)
class DistanceField:
    """Per-node distance to ``S`` with side labels.

    Attributes:
        xi: Unsigned distance.
        side: -1 interior, +1 exterior, 0 exactly on ``S``.
        lap_xi: Laplacian of ``xi`` (curvature term), zero in 1D.
        normal: Unit ``grad(xi)`` in 2D, shape ``(n, 2)``; ``None`` otherwise.
    """

    xi: np.ndarray
    side: np.ndarray
    lap_xi: np.ndarray
    normal: np.ndarray | None = None


def _side(d: np.ndarray, h: float) -> np.ndarray:
    # nodes within roundoff of S are labelled as lying on it
    return np.where(np.abs(d) <= 1e-12 * h, 0.0, np.sign(d))


def distance_field(surface: Surface, grid: Grid) -> DistanceField:
    """Distance from every grid node to ``surface`` plus interior/exterior labels.

    Raises:
        ConfigurationError: if the surface does not match the grid dimension or
            does not lie strictly inside the domain.
    """
    if isinstance(grid, IntervalGrid):
        if not isinstance(surface, PointSurface):
            raise ConfigurationError("1D grids need a PointSurface")
        if not grid.x_min < surface.x0 < grid.x_max:
            raise ConfigurationError("surface point lies outside the interval")
        d = grid.nodes - surface.x0
        return DistanceField(np.abs(d), _side(d, grid.h), np.zeros_like(d))
    if isinstance(grid, RadialGrid):
        if not isinstance(surface, SphereSurface):
            raise ConfigurationError("radial grids need a SphereSurface")
        if not grid.r_min < surface.R < grid.r_max:
            raise ConfigurationError("sphere radius lies outside the radial grid")
        r = grid.nodes
        side = _side(r - surface.R, grid.h)
        return DistanceField(np.abs(r - surface.R), side, side * 2.0 / r)
    if isinstance(grid, SquareGrid):
        if not isinstance(surface, CircleSurface):
            raise ConfigurationError("2D grids need a CircleSurface")
        cx, cy = surface.center
        if not (grid.lo < cx - surface.R and cx + surface.R < grid.hi
                and grid.lo < cy - surface.R and cy + surface.R < grid.hi):
            raise ConfigurationError("circle does not fit inside the square")
        x, y = grid.coords
        dx, dy = x - cx, y - cy
        rho = np.hypot(dx, dy)
        side = _side(rho - surface.R, grid.h)
        with np.errstate(divide="ignore", invalid="ignore"):
            lap = np.where(rho > 0, side / rho, 0.0)
            nrm = np.where(rho[:, None] > 0, np.column_stack([dx, dy]) / rho[:, None], 0.0)
        return DistanceField(np.abs(rho - surface.R), side, lap, side[:, None] * nrm)
    raise ConfigurationError(f"unsupported grid type {type(grid).__name__}")


# --- sampled scale fields ---------------------------------------------------


@dataclass(frozen=True)
class ScaleField:
    """Node samples of ``lambda``, the drift ``2w grad(lambda)`` and the potential.

    ``drift`` is a scalar per node along the coordinate axis for 1D and
    radial grids, and an ``(n, 2)`` array in 2D.
    """

    lam: np.ndarray
    drift: np.ndarray
    potential: np.ndarray
    w: float
    xi_floor: float
    xi: np.ndarray | None = None
    side: np.ndarray | None = None


def scale_field(
    profile: CutoffProfile,
    w: float,
    surface: Surface,
    grid: Grid,
    xi_floor: float | None = None,
) -> ScaleField:
    """Sample the scale field of ``profile`` around ``surface`` on ``grid``.

    Distances are clamped below at ``xi_floor`` (default ``h/2``) before the
    coefficients are evaluated, so no coefficient is infinite.
    """
    dist = distance_field(surface, grid)
    floor = 0.5 * grid.h if xi_floor is None else float(xi_floor)
    if floor <= 0:
        raise ConfigurationError("xi_floor must be positive")
    xi = np.maximum(dist.xi, floor)
    lam, drift_s, pot = lambda_coefficients(profile, w, xi, dist.lap_xi)
    if isinstance(grid, SquareGrid):
        drift = drift_s[:, None] * dist.normal
    else:
        drift = drift_s * dist.side
    return ScaleField(lam, drift, pot, float(w), floor, xi, dist.side)


def scale_field_from_function(
    grid: IntervalGrid,
    lam: Callable,
    dlam: Callable,
    d2lam: Callable,
    w: float = 1.0,
) -> ScaleField:
    """Sample a smooth 1D ``lambda`` given with its first two derivatives."""
    x = grid.nodes
    l, dl, d2l = lam(x), dlam(x), d2lam(x)
    return ScaleField(
        np.asarray(l, float), 2.0 * w * np.asarray(dl, float),
        w * np.asarray(d2l, float) + w * w * np.asarray(dl, float) ** 2, float(w), 0.0,
    )


# --- indicial analysis ------------------------------------------------------


def indicial_roots(a: float) -> tuple[float, float]:
    """Roots of ``m(m-1) + 2am + (a^2 - a) = 0``, namely ``(-a, 1 - a)``."""
    return -a + 0.0, 1.0 - a


def indicial_residual(a: float, m: float) -> float:
    return m * (m - 1.0) + 2.0 * a * m + (a * a - a)


def _vanishing_order(m: float) -> int:
    # Snap values within roundoff of an integer before taking the ceiling.
    r = round(m)
    if abs(m - r) < 1e-12:
        m = float(r)
    return max(math.ceil(m) - 1, -1)


def branch_vanishing_orders(a: float) -> tuple[int, int]:
    """Number of derivatives of ``x^m1`` and ``x^m2`` that vanish at 0.

    ``-1`` marks a branch that is not even bounded (``m < 0``) or whose value
    does not vanish (``m = 0``).
    """
    m1, m2 = indicial_roots(a)
    return _vanishing_order(m1), _vanishing_order(m2)
