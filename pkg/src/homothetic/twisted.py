"""Twisted (Witten-deformed) discrete exterior calculus on the flat torus.

Given a scale field ``lambda`` sampled at cell barycenters, the dressing
``S_p = diag(exp(w lambda_p))`` conjugates the cubical complex::

    d~_p = S_{p+1}^{-1} D_p S_p,
    delta~_p = G_p^{-1} d~_p^T G_{p+1},   G_p = S_p M_p S_p,
    Lap~_p = d~ delta~ + delta~ d~ = S_p^{-1} Lap_p S_p.

Matrix entries are formed as ``exp(w (lambda_j - lambda_i))`` directly rather
than as products of the two diagonal factors, which keeps the algebraic
identities at roundoff level even when ``S`` spans several decades.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NumericalError
from .grid import TorusMesh, incidence_matrices, mass_matrices

#: Largest admissible ``|w lambda|``; beyond this the dressing is too ill-conditioned.
MAX_WEIGHTED_LAMBDA = 30.0
#: Meshes with at most this many cells per side use dense eigensolves.
DENSE_LIMIT = 16


@dataclass(frozen=True)
class Cochain:
    """Coefficients of a ``degree``-cochain, one per cell of that degree."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ConfigurationError(f"cochain degree must be 0, 1 or 2, got {self.degree}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __add__(self, other: "Cochain") -> "Cochain":
        if other.degree != self.degree:
            raise ConfigurationError("cannot add cochains of different degree")
        return Cochain(self.degree, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        if other.degree != self.degree:
            raise ConfigurationError("cannot subtract cochains of different degree")
        return Cochain(self.degree, self.values - other.values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def _scaled(D: sp.spmatrix, lam_rows: np.ndarray, lam_cols: np.ndarray, w: float,
            row_w=None, col_w=None) -> sp.csr_matrix:
    """Entries ``D_ij exp(w (lam_cols[j] - lam_rows[i])) row_w[i] / col_w[j]``."""
    C = sp.coo_matrix(D)
    vals = C.data.astype(float) * np.exp(w * (lam_cols[C.col] - lam_rows[C.row]))
    if row_w is not None:
        vals = vals * row_w[C.row]
    if col_w is not None:
        vals = vals / col_w[C.col]
    return sp.csr_matrix((vals, (C.row, C.col)), shape=D.shape)


@dataclass(frozen=True, eq=False)
class DressedComplex:
    """Torus complex dressed by ``S_p = diag(exp(w lambda_p))``.

    Build instances with :func:`dress_complex`. All arrays are treated as
    read-only after construction.
    """

    mesh: TorusMesh
    w: float
    lam: tuple[np.ndarray, np.ndarray, np.ndarray]
    D: tuple[sp.csr_matrix, sp.csr_matrix]
    masses: tuple[np.ndarray, np.ndarray, np.ndarray]
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def S(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Diagonals of the dressing matrices."""
        return tuple(np.exp(self.w * l) for l in self.lam)

    @property
    def gram(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Diagonals of ``G_p = S_p M_p S_p``."""
        return tuple(np.exp(2.0 * self.w * l) * m for l, m in zip(self.lam, self.masses))

    def size(self, p: int) -> int:
        return self.mesh.counts()[p]

    def pairing(self, a: Cochain, b: Cochain) -> float:
        """Weighted pairing ``a^T G_p b``."""
        if a.degree != b.degree:
            raise ConfigurationError("pairing needs cochains of equal degree")
        return float(a.values @ (self.gram[a.degree] * b.values))

    def d_matrix(self, p: int) -> sp.csr_matrix:
        """Sparse ``d~_p``."""
        _check_d_degree(p)
        key = ("d", p)
        if key not in self._ops:
            self._ops[key] = _scaled(self.D[p], self.lam[p + 1], self.lam[p], self.w)
        return self._ops[key]

    def delta_matrix(self, p: int) -> sp.csr_matrix:
        """Sparse ``delta~_p`` mapping degree ``p+1`` to degree ``p``."""
        _check_d_degree(p)
        key = ("delta", p)
        if key not in self._ops:
            # (G_p^{-1} d~^T G_{p+1})_{ik} = D_ki exp(w(lam_k - lam_i)) m_k / m_i
            DT = self.D[p].T.tocsr()
            self._ops[key] = _scaled(
                DT, self.lam[p], self.lam[p + 1], self.w,
                row_w=1.0 / self.masses[p], col_w=1.0 / self.masses[p + 1],
            )
        return self._ops[key]

    def laplacian_matrix(self, p: int) -> sp.csr_matrix:
        """Sparse ``Lap~_p = d~_{p-1} delta~_{p-1} + delta~_p d~_p``."""
        if p not in (0, 1, 2):
            raise ConfigurationError(f"degree must be 0, 1 or 2, got {p}")
        key = ("lap", p)
        if key not in self._ops:
            n = self.size(p)
            L = sp.csr_matrix((n, n))
            if p >= 1:
                L = L + self.d_matrix(p - 1) @ self.delta_matrix(p - 1)
            if p <= 1:
                L = L + self.delta_matrix(p) @ self.d_matrix(p)
            self._ops[key] = L.tocsr()
        return self._ops[key]


def _check_d_degree(p: int) -> None:
    if p not in (0, 1):
        raise ConfigurationError(f"d~ is defined for degrees 0 and 1, got {p}")


LambdaSpec = Callable[[np.ndarray, np.ndarray], np.ndarray] | Sequence[np.ndarray] | None


def dress_complex(mesh: TorusMesh, lam: LambdaSpec = None, w: float = 1.0) -> DressedComplex:
    """Assemble the dressed complex for a scale field ``lam``.

    Args:
        mesh: The torus mesh.
        lam: ``None`` for the untwisted complex, a callable ``lam(x, y)``
            sampled at vertex, edge-midpoint and face-centre barycenters, or a
            sequence of three per-degree sample arrays.
        w: Weight multiplying ``lam``.

    Raises:
        ConfigurationError: if any ``|w lam|`` exceeds ``MAX_WEIGHTED_LAMBDA``
            or the sample arrays have the wrong lengths.
    """
    counts = mesh.counts()
    if lam is None:
        samples = tuple(np.zeros(n) for n in counts)
    elif callable(lam):
        samples = tuple(np.asarray(lam(b[:, 0], b[:, 1]), dtype=float) for b in mesh.barycenters)
    else:
        samples = tuple(np.asarray(l, dtype=float) for l in lam)
    if len(samples) != 3 or any(s.shape != (n,) for s, n in zip(samples, counts)):
        raise ConfigurationError(f"lambda samples must have lengths {counts}")
    if not all(np.all(np.isfinite(s)) for s in samples):
        raise ConfigurationError("lambda samples must be finite")
    peak = max(float(np.max(np.abs(w * s))) for s in samples)
    if peak > MAX_WEIGHTED_LAMBDA:
        raise ConfigurationError(
            f"|w*lambda| reaches {peak:.3g} > {MAX_WEIGHTED_LAMBDA}; dressing too ill-conditioned"
        )
    D0, D1 = incidence_matrices(mesh)
    M = tuple(m.diagonal().copy() for m in mass_matrices(mesh))
    return DressedComplex(mesh, float(w), samples, (D0, D1), M)


def random_smooth_lambda(rng: np.random.Generator, mesh: TorusMesh, amplitude: float = 5.0,
                         modes: int | None = None) -> Callable:
    """Random periodic trigonometric scale field with ``max |lambda| <= amplitude``.

    Wavenumbers go up to ``modes`` in each direction; the default keeps at
    least eight cells per wavelength so the field is resolved by the mesh.
    """
    if modes is None:
        modes = max(1, min(mesh.nx, mesh.ny) // 8)
    Lx, Ly = mesh.lengths
    k = rng.integers(-modes, modes + 1, size=(2 * modes, 2))
    c = rng.normal(size=2 * modes)
    ph = rng.uniform(0, 2 * np.pi, size=2 * modes)
    scale = amplitude / np.sum(np.abs(c))

    def lam(x, y):
        arg = 2 * np.pi * (np.outer(x, k[:, 0]) / Lx + np.outer(y, k[:, 1]) / Ly) + ph
        return scale * np.cos(arg) @ c

    return lam


# --- operators on cochains --------------------------------------------------


def twisted_d(c: DressedComplex, eta: Cochain) -> Cochain:
    """Apply ``d~`` to a 0- or 1-cochain."""
    _check_d_degree(eta.degree)
    return Cochain(eta.degree + 1, c.d_matrix(eta.degree) @ eta.values)


def twisted_codifferential(c: DressedComplex, xi: Cochain) -> Cochain:
    """Apply ``delta~``, the weighted adjoint of ``d~``, to a 1- or 2-cochain."""
    if xi.degree not in (1, 2):
        raise ConfigurationError(f"delta~ acts on degrees 1 and 2, got {xi.degree}")
    return Cochain(xi.degree - 1, c.delta_matrix(xi.degree - 1) @ xi.values)


def twisted_laplacian(c: DressedComplex, p: int) -> sp.csr_matrix:
    """Matrix of ``Lap~_p``; self-adjoint for the weighted pairing."""
    return c.laplacian_matrix(p)


def classical_laplacian(mesh: TorusMesh, p: int) -> sp.csr_matrix:
    """Untwisted DEC Hodge Laplacian of degree ``p`` (positive semidefinite)."""
    return dress_complex(mesh).laplacian_matrix(p)


def conjugation_residual(c: DressedComplex, p: int) -> float:
    """Relative Frobenius distance between ``Lap~_p`` and ``S^{-1} Lap_p S``."""
    L = classical_laplacian(c.mesh, p).toarray()
    s = c.S[p]
    conj = L * (s[None, :] / s[:, None])
    return float(np.linalg.norm(c.laplacian_matrix(p).toarray() - conj) / np.linalg.norm(L))


def chain_map_check(c: DressedComplex, eta: Cochain) -> float:
    """Return ``||S_{p+1} d~ eta - D_p S_p eta||``."""
    p = eta.degree
    _check_d_degree(p)
    S = c.S
    lhs = S[p + 1] * (c.d_matrix(p) @ eta.values)
    rhs = c.D[p] @ (S[p] * eta.values)
    return float(np.linalg.norm(lhs - rhs))


# --- harmonic forms ---------------------------------------------------------


def _symmetrized(c: DressedComplex, p: int) -> sp.csr_matrix:
    """``G^{1/2} Lap~ G^{-1/2}``, symmetric because ``Lap~`` is G-self-adjoint."""
    g = np.sqrt(c.gram[p])
    B = sp.diags(g) @ c.laplacian_matrix(p) @ sp.diags(1.0 / g)
    return ((B + B.T) * 0.5).tocsr()


def harmonic_space(c: DressedComplex, p: int, gap: float = 1e-6, dense: bool | None = None) -> np.ndarray:
    """G-orthonormal basis of ``ker Lap~_p`` as columns.

    Eigenvalues below ``gap`` times the largest one count as zero. Meshes up
    to ``DENSE_LIMIT`` cells per side use a dense symmetric eigensolver;
    larger ones use shift-invert Lanczos near zero.

    Raises:
        NumericalError: if the eigensolver fails or no clear kernel is found.
    """
    B = _symmetrized(c, p)
    n = B.shape[0]
    if dense is None:
        dense = max(c.mesh.nx, c.mesh.ny) <= DENSE_LIMIT
    try:
        if dense:
            vals, vecs = np.linalg.eigh(B.toarray())
            top = vals[-1]
        else:
            k = min(8, n - 2)
            top = float(np.max(np.abs(B).sum(axis=1)))  # Gershgorin bound
            vals, vecs = spla.eigsh(B.tocsc(), k=k, sigma=-1e-3 * top, which="LM")
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
    except (np.linalg.LinAlgError, spla.ArpackError) as exc:
        raise NumericalError(f"eigensolver failed for degree {p}: {exc}") from exc
    kernel = vals < gap * top
    if not dense and np.all(kernel):
        raise NumericalError("kernel dimension exceeds the number of computed eigenpairs")
    basis = vecs[:, kernel] / np.sqrt(c.gram[p])[:, None]
    return basis


def harmonic_residual(c: DressedComplex, p: int, basis: np.ndarray) -> float:
    """Largest ``||Lap~ h|| / ||h||`` over the basis columns."""
    if basis.shape[1] == 0:
        return 0.0
    L = c.laplacian_matrix(p)
    return float(max(np.linalg.norm(L @ h) / np.linalg.norm(h) for h in basis.T))


def principal_angles(c: DressedComplex, p: int, basis: np.ndarray | None = None) -> np.ndarray:
    """Principal angles between ``ker Lap~_p`` and ``S^{-1} ker Lap_p``.

    Both subspaces are mapped to Euclidean coordinates with ``G^{1/2}`` so
    that the angles are measured in the weighted pairing.
    """
    if basis is None:
        basis = harmonic_space(c, p)
    classical = harmonic_space(dress_complex(c.mesh), p)
    transported = classical / c.S[p][:, None]
    g = np.sqrt(c.gram[p])[:, None]
    if basis.shape[1] != transported.shape[1]:
        return np.array([np.pi / 2])
    return sla.subspace_angles(g * basis, g * transported)


# --- cohomology -------------------------------------------------------------


def cohomology_dims(c: DressedComplex) -> tuple[int, int, int]:
    """``h_p = dim ker d~_p - rank d~_{p-1}`` by SVD rank."""
    d0 = c.d_matrix(0).toarray()
    d1 = c.d_matrix(1).toarray()
    r0 = int(np.linalg.matrix_rank(d0))
    r1 = int(np.linalg.matrix_rank(d1))
    nv, ne, nf = c.mesh.counts()
    return nv - r0, (ne - r1) - r0, nf - r1


# --- Hodge decomposition ----------------------------------------------------


@dataclass(frozen=True)
class HodgeSplit:
    """Exact, coexact and harmonic parts of a cochain with their diagnostics."""

    degree: int
    exact: np.ndarray
    coexact: np.ndarray
    harmonic: np.ndarray
    reassembly: float
    orthogonality: float
    iterations: tuple[int, int]

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.exact, self.coexact, self.harmonic


def _cg(A: sp.spmatrix, b: np.ndarray, rtol: float, what: str) -> tuple[np.ndarray, int]:
    if not np.any(b):
        return np.zeros_like(b), 0
    diag = A.diagonal()
    diag = np.where(diag > 0, diag, 1.0)
    M = spla.LinearOperator(A.shape, matvec=lambda v: v / diag)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, rtol=rtol, atol=0.0, M=M, maxiter=20 * A.shape[0], callback=cb)
    if info != 0:
        res = np.linalg.norm(A @ x - b) / np.linalg.norm(b)
        raise NumericalError(f"CG for the {what} potential did not converge (residual {res:.2e})")
    return x, count[0]


def hodge_decompose(c: DressedComplex, eta: Cochain, rtol: float = 1e-12,
                    basis: np.ndarray | None = None) -> HodgeSplit:
    """Weighted Hodge decomposition ``eta = d~ alpha + delta~ beta + h``.

    The harmonic part is the G-orthogonal projection onto
    :func:`harmonic_space`. The potentials solve the G-normal equations

    * ``d~^T G_p d~ alpha = d~^T G_p r`` (exact part ``d~ alpha``),
    * ``d~ G_p^{-1} d~^T gamma = d~ r`` (coexact part ``G_p^{-1} d~^T gamma``),

    where ``r`` is ``eta`` minus its harmonic part, by Jacobi-preconditioned
    conjugate gradients.

    Raises:
        NumericalError: when a CG solve does not reach ``rtol``.
    """
    p = eta.degree
    x = eta.values
    G = c.gram[p]
    H = harmonic_space(c, p) if basis is None else basis
    harm = H @ (H.T @ (G * x))
    r = x - harm
    exact = np.zeros_like(x)
    coexact = np.zeros_like(x)
    its = [0, 0]
    if p >= 1:
        d = c.d_matrix(p - 1)
        A = (d.T @ sp.diags(G) @ d).tocsr()
        alpha, its[0] = _cg(A, d.T @ (G * r), rtol, "exact")
        exact = d @ alpha
    if p <= 1:
        d = c.d_matrix(p)
        A = (d @ sp.diags(1.0 / G) @ d.T).tocsr()
        gamma, its[1] = _cg(A, d @ r, rtol, "coexact")
        coexact = (d.T @ gamma) / G
    nrm2 = float(x @ (G * x))
    scale = np.sqrt(nrm2) if nrm2 > 0 else 1.0
    reassembly = float(np.sqrt(np.sum(G * (exact + coexact + harm - x) ** 2)) / scale)
    pairs = [(exact, coexact), (exact, harm), (coexact, harm)]
    ortho = max(abs(float(a @ (G * b))) for a, b in pairs) / (scale * scale)
    return HodgeSplit(p, exact, coexact, harm, reassembly, ortho, tuple(its))


def hodge_projection_oracle(c: DressedComplex, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense G-orthogonal projectors onto ``im d~``, ``im delta~`` and the rest.

    Each projector is built from an SVD of the operator in ``G^{1/2}``
    coordinates, truncated at the integer rank of the untwisted incidence
    matrix, so no tolerance guesswork enters.
    """
    n = c.size(p)
    g = np.sqrt(c.gram[p])
    projs = []
    for B, D in (
        (c.d_matrix(p - 1) if p >= 1 else None, c.D[p - 1] if p >= 1 else None),
        (c.delta_matrix(p) if p <= 1 else None, c.D[p] if p <= 1 else None),
    ):
        if B is None:
            projs.append(np.zeros((n, n)))
            continue
        rank = int(np.linalg.matrix_rank(D.toarray().astype(float)))
        U, _, _ = np.linalg.svd(g[:, None] * B.toarray(), full_matrices=False)
        Q = U[:, :rank]
        projs.append((Q @ Q.T) * (g[None, :] / g[:, None]))
    P_exact, P_coexact = projs
    return P_exact, P_coexact, np.eye(n) - P_exact - P_coexact
