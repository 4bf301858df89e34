"""Uniform grids and the periodic cubical complex used by the solvers.

Three families live here:

* ``IntervalGrid`` for 1D problems,
* ``RadialGrid`` for spherically symmetric 3D problems (origin excluded),
* ``SquareGrid`` for 2D problems on a box with an embedded curve,

plus ``TorusMesh``, the flat 2-torus as a cubical cell complex, with its
signed incidence matrices and diagonal Hodge-star (mass) matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError


def _check_bounds(lo: float, hi: float, name: str) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ConfigurationError(f"{name}: bounds must be finite, got ({lo}, {hi})")
    if not lo < hi:
        raise ConfigurationError(f"{name}: need lower < upper, got ({lo}, {hi})")


@dataclass(frozen=True)
class IntervalGrid:
    """Uniform grid on ``[x_min, x_max]`` with ``n`` nodes."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        _check_bounds(self.x_min, self.x_max, "IntervalGrid")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"IntervalGrid needs n >= 3 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.h

    @property
    def dim(self) -> int:
        return 1


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid in the radius of a spherically symmetric 3D problem.

    Nodes sit at ``r_min + i*h`` for ``i = 0..n-1`` with ``r_min > 0``. When
    ``r_min == h/2`` the grid is staggered about the origin and the solver
    closes it with the symmetry condition ``phi'(0) = 0``.
    """

    r_min: float
    r_max: float
    n: int

    def __post_init__(self):
        _check_bounds(self.r_min, self.r_max, "RadialGrid")
        if self.r_min <= 0:
            raise ConfigurationError(f"RadialGrid excludes the origin, got r_min={self.r_min}")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"RadialGrid needs n >= 3 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return (self.r_max - self.r_min) / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.r_min + np.arange(self.n) * self.h

    @property
    def dim(self) -> int:
        return 3

    @property
    def staggered_origin(self) -> bool:
        """True when the first node is half a cell from the origin."""
        return bool(np.isclose(self.r_min, 0.5 * self.h, rtol=1e-12, atol=0.0))


@dataclass(frozen=True)
class SquareGrid:
    """Tensor grid on ``[lo, hi]^2`` with ``n`` nodes per direction.

    Nodes are stored in row-major order, ``index = j*n + i`` for ``(x_i, y_j)``.
    """

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        _check_bounds(self.lo, self.hi, "SquareGrid")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"SquareGrid needs n >= 3 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @cached_property
    def axis(self) -> np.ndarray:
        return self.lo + np.arange(self.n) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened node coordinates ``(x, y)``."""
        X, Y = np.meshgrid(self.axis, self.axis, indexing="xy")
        return X.ravel(), Y.ravel()

    @property
    def dim(self) -> int:
        return 2

    @property
    def size(self) -> int:
        return self.n * self.n

    @cached_property
    def boundary(self) -> np.ndarray:
        """Boolean mask of nodes on the outer boundary of the square."""
        i = np.arange(self.size) % self.n
        j = np.arange(self.size) // self.n
        return (i == 0) | (j == 0) | (i == self.n - 1) | (j == self.n - 1)


def build_interval_grid(x_min: float, x_max: float, n: int) -> IntervalGrid:
    """Uniform 1D grid; node ``i`` sits at ``x_min + i*h``.

    Raises:
        ConfigurationError: on non-finite or reversed bounds, or ``n < 3``.
    """
    return IntervalGrid(float(x_min), float(x_max), int(n))


def build_radial_grid(r_max: float, n: int, r_min: float | None = None) -> RadialGrid:
    """Radial grid ending at ``r_max``.

    With ``r_min`` omitted the grid is staggered about the origin,
    ``r_i = (i + 1/2) h``, so that no node sits at ``r = 0``.
    """
    if r_min is None:
        if not (np.isfinite(r_max) and r_max > 0):
            raise ConfigurationError(f"r_max must be positive, got {r_max}")
        h = float(r_max) / (int(n) - 0.5)
        return RadialGrid(0.5 * h, float(r_max), int(n))
    return RadialGrid(float(r_min), float(r_max), int(n))


def build_square_grid(lo: float, hi: float, n: int) -> SquareGrid:
    return SquareGrid(float(lo), float(hi), int(n))


@dataclass(frozen=True)
class TorusMesh:
    """Periodic ``nx`` by ``ny`` cubical mesh of the flat torus.

    Cell numbering: vertex ``(i, j)`` is ``j*nx + i``; the x-edge leaving that
    vertex in +x is ``j*nx + i`` and the y-edge leaving it in +y is
    ``nx*ny + j*nx + i``; face ``(i, j)`` has lower-left vertex ``(i, j)``.
    """

    nx: int
    ny: int
    hx: float = 1.0
    hy: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ConfigurationError("torus cell counts must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ConfigurationError(
                f"torus must be at least 2x2 (got {self.nx}x{self.ny}); "
                "smaller meshes have self-loop edges"
            )
        if not (self.hx > 0 and self.hy > 0 and np.isfinite(self.hx) and np.isfinite(self.hy)):
            raise ConfigurationError("torus spacings must be positive and finite")

    @property
    def n_vertices(self) -> int:
        return self.nx * self.ny

    @property
    def n_edges(self) -> int:
        return 2 * self.nx * self.ny

    @property
    def n_faces(self) -> int:
        return self.nx * self.ny

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def counts(self) -> tuple[int, int, int]:
        return self.n_vertices, self.n_edges, self.n_faces

    def _v(self, i, j):
        return (j % self.ny) * self.nx + (i % self.nx)

    @cached_property
    def barycenters(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical barycenters of vertices, edges and faces, each of shape ``(k, 2)``."""
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="xy")
        i, j = i.ravel().astype(float), j.ravel().astype(float)
        verts = np.column_stack([i * self.hx, j * self.hy])
        xe = np.column_stack([(i + 0.5) * self.hx, j * self.hy])
        ye = np.column_stack([i * self.hx, (j + 0.5) * self.hy])
        faces = np.column_stack([(i + 0.5) * self.hx, (j + 0.5) * self.hy])
        return verts, np.vstack([xe, ye]), faces

    @property
    def lengths(self) -> tuple[float, float]:
        """Side lengths of the torus."""
        return self.nx * self.hx, self.ny * self.hy


def build_torus_mesh(nx: int, ny: int, hx: float = 1.0, hy: float = 1.0) -> TorusMesh:
    return TorusMesh(int(nx), int(ny), float(hx), float(hy))


def incidence_matrices(mesh: TorusMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Signed incidence matrices ``D0`` (edges x vertices) and ``D1`` (faces x edges).

    Edges point in +x or +y; faces are oriented counterclockwise. Entries are
    small integers, so ``D1 @ D0`` vanishes exactly.
    """
    nx, ny = mesh.nx, mesh.ny
    nv, ne = mesh.n_vertices, mesh.n_edges
    j, i = np.divmod(np.arange(nv), nx)
    v0 = mesh._v(i, j)
    vx = mesh._v(i + 1, j)
    vy = mesh._v(i, j + 1)

    rows = np.concatenate([np.arange(nv), np.arange(nv), nv + np.arange(nv), nv + np.arange(nv)])
    cols = np.concatenate([v0, vx, v0, vy])
    vals = np.concatenate([-np.ones(nv), np.ones(nv), -np.ones(nv), np.ones(nv)])
    D0 = sp.csr_matrix((vals.astype(np.int64), (rows, cols)), shape=(ne, nv))

    # Counterclockwise boundary of face (i,j): bottom x-edge +, right y-edge +,
    # top x-edge -, left y-edge -.
    f = np.arange(nv)
    bottom = mesh._v(i, j)
    right = nv + mesh._v(i + 1, j)
    top = mesh._v(i, j + 1)
    left = nv + mesh._v(i, j)
    rows = np.concatenate([f, f, f, f])
    cols = np.concatenate([bottom, right, top, left])
    vals = np.concatenate([np.ones(nv), np.ones(nv), -np.ones(nv), -np.ones(nv)])
    D1 = sp.csr_matrix((vals.astype(np.int64), (rows, cols)), shape=(mesh.n_faces, ne))
    return D0, D1


def mass_matrices(mesh: TorusMesh) -> tuple[sp.dia_matrix, sp.dia_matrix, sp.dia_matrix]:
    """Diagonal Hodge stars ``M0, M1, M2`` of the uniform cubical mesh.

    Convention: ``M0 = hx*hy`` (dual-cell area over a unit vertex),
    ``M1 = hy/hx`` on x-edges and ``hx/hy`` on y-edges (dual over primal
    length), ``M2 = 1/(hx*hy)``.
    """
    nv = mesh.n_vertices
    m0 = np.full(nv, mesh.hx * mesh.hy)
    m1 = np.concatenate([np.full(nv, mesh.hy / mesh.hx), np.full(nv, mesh.hx / mesh.hy)])
    m2 = np.full(mesh.n_faces, 1.0 / (mesh.hx * mesh.hy))
    return sp.diags(m0), sp.diags(m1), sp.diags(m2)
