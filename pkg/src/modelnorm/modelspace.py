"""Orthonormal bases of model spaces H(Theta) = H^2_m (-) Theta H^2_m.

Two constructions are provided:

* :func:`build_basis` for Blaschke-Potapov products, from the partial-product
  candidates ``f_k = U theta_1 ... theta_{k-1} v_k / rho_{alpha_k}``;
* :func:`build_basis_from_kernels` for any rational inner function, from
  kernel sections ``K_omega e_a`` at generic points.

Either way the candidates are orthonormalized against the quadrature Gram
matrix (Cholesky, one reorthogonalization pass if needed).  A basis is a
coefficient matrix over the candidates; basis elements are rational functions
and can be evaluated anywhere, independently of the grid used to build them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from modelnorm.domains import (
    BoundaryGrid,
    DomainKind,
    boundary_grid,
    converge,
    rho,
    rho_factor,
    require_in_domain,
)
from modelnorm.errors import (
    DimensionError,
    NotInSpaceError,
    PoleOnBoundaryError,
    RankDeficiencyError,
)
from modelnorm.inner import BlaschkePotapov, n_alpha, theta_at
from modelnorm.instances import generic_points
from modelnorm.rational import MatRational, backward_shift_rational, check_nodes, lincomb

GRAM_TOL = 1e-10
REORTH_TOL = 1e-12
TOL_RANK = 1e-9
N0 = 32


def _safe_grid(grid: BoundaryGrid, funcs: Sequence[MatRational]) -> BoundaryGrid:
    if all(check_nodes(f, grid.nodes) for f in funcs):
        return grid
    rot = grid.rotated()
    if all(check_nodes(f, rot.nodes) for f in funcs):
        return rot
    raise PoleOnBoundaryError("candidate function has a pole on the quadrature nodes")


def stacked_values(funcs: Sequence[MatRational], nodes: np.ndarray) -> np.ndarray:
    """Values of column functions, shape ``(N, m, len(funcs))``."""
    return np.stack([f.eval_many(nodes)[:, :, 0] for f in funcs], axis=-1)


def quadrature_gram(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``G[i, j] = <f_j, f_i>`` from stacked values."""
    return np.einsum("k,kmi,kmj->ij", weights, np.conj(values), values)


def orthonormalize(gram: np.ndarray) -> np.ndarray:
    """Coefficients ``C`` with ``C^H G C = I`` (``G = L L^H``, ``C = L^-H``)."""
    evals = np.linalg.eigvalsh(gram)
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        raise RankDeficiencyError(
            f"candidate Gram matrix is numerically singular (eigenvalue ratio {evals[0] / evals[-1]:.2e})"
        )
    L = np.linalg.cholesky(gram)
    return sla.solve_triangular(L.conj().T, np.eye(gram.shape[0]), lower=False)


@dataclass(frozen=True, eq=False)
class ModelSpaceBasis:
    """Orthonormal basis ``e = candidates @ coeffs`` of H(Theta)."""

    kind: DomainKind
    theta: MatRational
    m: int
    dim: int
    candidates: tuple[MatRational, ...]
    coeffs: np.ndarray
    grid: BoundaryGrid
    gram_residual: float
    bp: BlaschkePotapov | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def theta_ref(self) -> str:
        if self.bp is not None:
            return self.bp.fingerprint
        return f"rational:{id(self.theta):x}"

    def theta_value(self, lam) -> np.ndarray:
        if self.bp is not None:
            return self.bp(lam)
        return self.theta.eval_many(lam)

    def values(self, lams) -> np.ndarray:
        """Basis values, shape ``(N, m, dim)`` (or ``(m, dim)`` for a scalar point)."""
        lam = np.asarray(lams, dtype=complex)
        vals = stacked_values(self.candidates, lam.reshape(-1)) @ self.coeffs
        return vals.reshape(lam.shape + (self.m, self.dim))

    def grid_values(self, grid: BoundaryGrid) -> np.ndarray:
        key = (grid.size, grid.shift)
        if key not in self._cache:
            self._cache[key] = self.values(grid.nodes)
        return self._cache[key]

    @cached_property
    def basis(self) -> list[MatRational]:
        return [lincomb(self.candidates, self.coeffs[:, k]) for k in range(self.dim)]

    def combine(self, c) -> MatRational:
        """The element ``sum_k c_k e_k`` as a rational function."""
        c = np.asarray(c, dtype=complex).reshape(self.dim)
        return lincomb(self.candidates, self.coeffs @ c)

    def evaluation_matrix(self, alpha: complex) -> np.ndarray:
        """``E[:, k] = e_k(alpha)``; note ``<f, K_alpha u> = u^* E c``."""
        return self.values(np.asarray(complex(alpha)))


def _finish(
    kind: DomainKind,
    theta: MatRational,
    m: int,
    candidates: list[MatRational],
    coeffs0: np.ndarray | None,
    grid: BoundaryGrid | None,
    bp: BlaschkePotapov | None,
) -> ModelSpaceBasis:
    """Quadrature Gram, Cholesky orthonormalization and residual bookkeeping."""

    def gram(g: BoundaryGrid) -> np.ndarray:
        g = _safe_grid(g, candidates)
        vals = stacked_values(candidates, g.nodes)
        if coeffs0 is not None:
            vals = vals @ coeffs0
        return quadrature_gram(vals, g.weights)

    if grid is None:
        # kernel-section coefficients amplify round-off; the re-orthonormalization
        # below fixes the Gram on the chosen grid, so a 1e-11 floor is enough
        G, grid = converge(kind, gram, n0=N0, atol=0.0 if coeffs0 is None else 1e-11)
    else:
        G = gram(grid)
    C = orthonormalize(G)
    resid = float(np.max(np.abs(C.conj().T @ G @ C - np.eye(C.shape[0]))))
    if resid > REORTH_TOL:
        C = C @ orthonormalize(C.conj().T @ G @ C)
        resid = float(np.max(np.abs(C.conj().T @ G @ C - np.eye(C.shape[0]))))
    if resid > GRAM_TOL:
        raise RankDeficiencyError(f"Gram residual {resid:.2e} exceeds {GRAM_TOL}")
    full = C if coeffs0 is None else coeffs0 @ C
    return ModelSpaceBasis(
        kind=kind,
        theta=theta,
        m=m,
        dim=full.shape[1],
        candidates=tuple(candidates),
        coeffs=full,
        grid=_safe_grid(grid, candidates),
        gram_residual=resid,
        bp=bp,
    )


def partial_product_candidates(bp: BlaschkePotapov) -> list[MatRational]:
    cands = []
    for k, fac in enumerate(bp.factors):
        scale, root = rho_factor(bp.kind, fac.alpha)
        head = bp.partial_rational(k) @ fac.v.reshape(-1, 1)
        cands.append(head.divide_linear(scale, root))
    return cands


def build_basis(theta: BlaschkePotapov, grid: BoundaryGrid | None = None) -> ModelSpaceBasis:
    """Orthonormal basis of H(Theta) for a Blaschke-Potapov product.

    With ``grid=None`` the quadrature size is chosen by doubling until the
    candidate Gram matrix is stable to 1e-12.
    """
    if theta.degree == 0:
        raise RankDeficiencyError("H(Theta) = {0} for a constant inner function")
    cands = partial_product_candidates(theta)
    return _finish(theta.kind, theta.rational, theta.m, cands, None, grid, theta)


def kernel_matrix(kind: DomainKind, theta: MatRational, omega: complex) -> MatRational:
    """``K_omega(lam) = (I - Theta(lam) Theta(omega)^*) / rho_omega(lam)``."""
    t_w = theta.eval(omega)
    num = MatRational.identity(theta.rows) - theta @ t_w.conj().T
    scale, root = rho_factor(kind, omega)
    return num.divide_linear(scale, root)


def inner_degree(kind: DomainKind, theta, n0: int = 256) -> int:
    """Degree of a rational inner function: winding number of det Theta on the boundary."""
    N = n0
    sign = -1 if kind is DomainKind.RIGHT else 1
    prev = None
    while N <= 2**16:
        grid = boundary_grid(kind, N)
        det = np.linalg.det(np.asarray(theta(grid.nodes)))
        steps = np.angle(np.roll(det, -1) / det)
        wind = sign * float(np.sum(steps)) / (2 * np.pi)
        if np.max(np.abs(steps)) < np.pi / 4 and abs(wind - round(wind)) < 1e-6:
            if prev is not None and prev == round(wind):
                return int(round(wind))
            prev = int(round(wind))
        N *= 2
    raise RankDeficiencyError("could not determine the degree of Theta from its boundary winding")


def build_basis_from_kernels(
    kind: DomainKind,
    theta: MatRational,
    dim: int | None = None,
    points: Sequence[complex] | None = None,
    grid: BoundaryGrid | None = None,
    kernel=None,
) -> ModelSpaceBasis:
    """Orthonormal basis from kernel sections at generic points.

    ``kernel(omega)`` defaults to the H(Theta) kernel; the de Branges layer
    passes its own.  ``dim`` defaults to the boundary winding number of
    ``det Theta``.  The span is taken from the exact kernel Gram matrix
    ``<K_w e_b, K_z e_a> = e_a^* K_w(z) e_b`` (rank must equal ``dim``) and
    then re-orthonormalized under quadrature.
    """
    kind = DomainKind.parse(kind)
    m = theta.rows
    if dim is None:
        dim = inner_degree(kind, theta.eval_many)
    if dim == 0:
        raise RankDeficiencyError("H(Theta) = {0} for a constant inner function")
    if kernel is None:
        kernel = lambda w: kernel_matrix(kind, theta, w)  # noqa: E731
    # oversample: 2 dim + 4 points keep the dim-th Gram eigenvalue well above round-off
    pts = generic_points(kind, 2 * dim + 4) if points is None else np.asarray(points, dtype=complex)
    sections = [kernel(w) for w in pts]
    cands = [K.column(a) for K in sections for a in range(m)]
    size = len(cands)
    G = np.zeros((size, size), dtype=complex)
    for j, K in enumerate(sections):
        for i, z in enumerate(pts):
            G[i * m : (i + 1) * m, j * m : (j + 1) * m] = K.eval(z)
    G = 0.5 * (G + G.conj().T)
    evals, evecs = np.linalg.eigh(G)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    if dim > size or evals[dim - 1] <= 1e-11 * evals[0]:
        raise RankDeficiencyError(f"kernel sections span fewer than {dim} dimensions")
    if dim < size and evals[dim] > 1e-8 * evals[0]:
        raise RankDeficiencyError(
            f"kernel sections span more than {dim} dimensions (eigenvalue ratio {evals[dim] / evals[0]:.2e})"
        )
    C0 = evecs[:, :dim] / np.sqrt(evals[:dim])
    return _finish(kind, theta, m, cands, C0, grid, None)


@dataclass(frozen=True, eq=False)
class KernelSection:
    omega: complex
    matrix: MatRational

    def __call__(self, lam) -> np.ndarray:
        return self.matrix.eval_many(lam)

    def column(self, u) -> MatRational:
        return self.matrix @ np.asarray(u, dtype=complex).reshape(-1, 1)


def kernel_section(basis: ModelSpaceBasis, omega: complex) -> KernelSection:
    omega = require_in_domain(basis.kind, omega, "omega")
    return KernelSection(omega, kernel_matrix(basis.kind, basis.theta, omega))


def _check_shape(basis: ModelSpaceBasis, f: MatRational) -> None:
    if f.shape != (basis.m, 1):
        raise DimensionError(f"expected an {basis.m}x1 function, got {f.shape}")


def project(basis: ModelSpaceBasis, f: MatRational, grid: BoundaryGrid | None = None) -> np.ndarray:
    """Coefficients ``c_k = <f, e_k>`` of the orthogonal projection onto H(Theta)."""
    _check_shape(basis, f)

    def coeffs(g: BoundaryGrid) -> np.ndarray:
        g = _safe_grid(g, (f,) + basis.candidates)
        E = basis.grid_values(g)
        F = f.eval_many(g.nodes)[:, :, 0]
        return np.einsum("k,kmj,km->j", g.weights, np.conj(E), F)

    if grid is not None:
        return coeffs(grid)
    # absolute floor: f orthogonal to H(Theta) has exactly zero coefficients
    c, _ = converge(basis.kind, coeffs, n0=basis.grid.size, shift=basis.grid.shift, atol=1e-14)
    return c


def norm(kind: DomainKind, f: MatRational, grid: BoundaryGrid | None = None) -> float:
    """Quadrature norm of a vector rational function."""

    def sq(g: BoundaryGrid) -> float:
        g = _safe_grid(g, (f,))
        F = f.eval_many(g.nodes)[:, :, 0]
        return float(np.sum(g.weights * np.sum(np.abs(F) ** 2, axis=1)))

    if grid is not None:
        return float(np.sqrt(sq(grid)))
    val, _ = converge(kind, sq, n0=N0)
    return float(np.sqrt(val))


def projection_residual(basis: ModelSpaceBasis, f: MatRational) -> float:
    """``||f - Pi_Theta f||`` by quadrature on the difference."""
    c = project(basis, f)

    def sq(g: BoundaryGrid) -> float:
        g = _safe_grid(g, (f,) + basis.candidates)
        diff = f.eval_many(g.nodes)[:, :, 0] - basis.grid_values(g) @ c
        return float(np.sum(g.weights * np.sum(np.abs(diff) ** 2, axis=1)))

    # only the magnitude matters; the floor resolves residuals down to 1e-11
    val, _ = converge(basis.kind, sq, n0=basis.grid.size, shift=basis.grid.shift, rtol=0.1, atol=1e-22)
    return float(np.sqrt(max(val, 0.0)))


def backward_shift(basis: ModelSpaceBasis, alpha: complex, f: MatRational, tol: float = 1e-9) -> MatRational:
    """``R_alpha f = (f - f(alpha)) / (lam - alpha)`` for ``f`` in H(Theta)."""
    alpha = require_in_domain(basis.kind, alpha)
    _check_shape(basis, f)
    resid = projection_residual(basis, f)
    if resid > tol * (1.0 + norm(basis.kind, f)):
        raise NotInSpaceError(f"input is not in H(Theta): projection residual {resid:.2e}")
    return backward_shift_rational(f, alpha)


@dataclass(frozen=True)
class SubspaceDims:
    dim_H: int
    dim_M: int
    dim_H_alpha: int

    def as_dict(self) -> dict:
        return {"dim_H": self.dim_H, "dim_M": self.dim_M, "dim_H_alpha": self.dim_H_alpha}


def numerical_rank(mat: np.ndarray, tol: float = TOL_RANK) -> int:
    """Rank of a Hermitian PSD matrix, eigenvalues relative to the largest."""
    evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    top = float(np.max(evals)) if evals.size else 0.0
    if top <= 1e-14:
        return 0
    return int(np.sum(evals > tol * top))


def kernel_at_alpha(basis: ModelSpaceBasis, alpha: complex) -> np.ndarray:
    """``K_alpha(alpha) = N_alpha(alpha) / rho_alpha(alpha)``."""
    N = n_alpha(basis.theta_value, alpha)
    return N / np.real(rho(basis.kind, alpha, alpha))


def subspace_dims(basis: ModelSpaceBasis, alpha: complex, tol_rank: float = TOL_RANK) -> SubspaceDims:
    """Dimensions in ``H(Theta) = H(Theta)_alpha (+) M_alpha``."""
    alpha = require_in_domain(basis.kind, alpha)
    dim_m = numerical_rank(kernel_at_alpha(basis, alpha), tol_rank)
    return SubspaceDims(basis.dim, dim_m, basis.dim - dim_m)


def decomposition_projectors(basis: ModelSpaceBasis, alpha: complex) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient-space projectors onto M_alpha and H(Theta)_alpha.

    ``K_alpha u`` has coefficients ``E^H u`` with ``E`` the evaluation
    matrix, so ``M_alpha = range(E^H)`` and ``H(Theta)_alpha = null(E)``.
    """
    E = basis.evaluation_matrix(alpha)
    r = subspace_dims(basis, alpha).dim_M
    _, _, Vh = np.linalg.svd(E)
    Q = Vh.conj().T
    P_m = Q[:, :r] @ Q[:, :r].conj().T
    P_h = Q[:, r:] @ Q[:, r:].conj().T
    return P_m, P_h


def h2_test_functions(kind: DomainKind, count: int) -> list[MatRational]:
    """Scalar H^2 test functions: ``lam^k`` (disc), ``(lam + i)^-(k+1)`` and ``(lam + 1)^-(k+1)``."""
    if kind is DomainKind.DISC:
        return [MatRational.polynomial([0.0] * k + [1.0]) for k in range(count)]
    root = -1j if kind is DomainKind.UPPER else -1.0 + 0j
    return [MatRational(np.ones((1, 1, 1)), np.full(k + 1, root)) for k in range(count)]


def membership_residual(basis: ModelSpaceBasis, degree: int | None = None) -> float:
    """``max |<e_i, Theta h e_j>|`` over test functions ``h`` of degree ``<= dim``.

    Zero for elements of ``H^2_m (-) Theta H^2_m``.
    """
    degree = basis.dim if degree is None else degree
    tests = []
    for h in h2_test_functions(basis.kind, degree + 1):
        for j in range(basis.m):
            tests.append((basis.theta @ np.eye(basis.m)[:, j : j + 1]) * h)

    def inner(g: BoundaryGrid) -> np.ndarray:
        g = _safe_grid(g, tuple(tests) + basis.candidates)
        T = stacked_values(tests, g.nodes)
        return np.einsum("k,kmi,kmj->ij", g.weights, np.conj(T), basis.grid_values(g))

    # the exact value is zero, so only the absolute floor can be met
    M, _ = converge(basis.kind, inner, n0=basis.grid.size, shift=basis.grid.shift, atol=1e-13)
    return float(np.max(np.abs(M)))
