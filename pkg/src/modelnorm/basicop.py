"""The basic operator ``A_alpha = Pi_Theta b_alpha |_H(Theta)`` as a matrix.

Three independent routes to the same matrix are implemented:

* :func:`assemble` -- quadrature of ``<b_alpha e_k, e_j>``;
* :func:`assemble_adjoint` -- ``A_alpha^*`` from the backward-shift formula
  (``-conj(a) f + (1-|a|^2) R_a f`` on the disc, ``f + (a - conj a) R_a f`` and
  ``f + (a + conj a) R_a f`` on the half-planes);
* :func:`assemble_explicit` -- ``A_alpha`` from the closed expression involving
  ``Theta (Theta^# f)`` evaluated at the reflected point.

:func:`closed_form_norm` gives the norm from the singular values of
``Theta(alpha)`` and :func:`verify_norm` compares it with the numerical norm.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from modelnorm.domains import (
    BoundaryGrid,
    DomainKind,
    blaschke,
    blaschke_rational,
    converge,
    rho,
    rho_factor,
    require_in_domain,
    sharp,
)
from modelnorm.errors import AllUnitSingularValuesError, PoleError
from modelnorm.inner import TOL_SV, BlaschkePotapov, PointSVD, n_alpha, point_svd
from modelnorm.modelspace import (
    TOL_RANK,
    ModelSpaceBasis,
    SubspaceDims,
    _check_shape,
    build_basis,
    project,
    subspace_dims,
)
from modelnorm.rational import MatRational, backward_shift_rational

NORM_TOL = 1e-8
# A_alpha is a contraction, so an absolute floor is safe for vanishing entries.
MATRIX_ATOL = 1e-14


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """``mat`` represents the operator in the orthonormal basis of a space.

    ``witness_coeffs`` is a top right singular vector (``||A w|| = ||A||``);
    ``adjoint_witness`` a top left singular vector, i.e. a norm-attaining
    vector for the adjoint.
    """

    mat: np.ndarray
    alpha: complex
    theta_ref: str
    norm: float
    witness_coeffs: np.ndarray
    adjoint_witness: np.ndarray
    singular_values: np.ndarray = field(repr=False)
    left_vectors: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, mat: np.ndarray, alpha: complex, theta_ref: str) -> OperatorMatrix:
        W, s, Xh = np.linalg.svd(mat)
        return cls(
            mat=mat,
            alpha=complex(alpha),
            theta_ref=theta_ref,
            norm=float(s[0]),
            witness_coeffs=Xh[0].conj(),
            adjoint_witness=W[:, 0],
            singular_values=s,
            left_vectors=W,
        )

    def ratio(self, c) -> float:
        c = np.asarray(c, dtype=complex)
        return float(np.linalg.norm(self.mat @ c) / np.linalg.norm(c))

    def top_left_space(self, gap: float = NORM_TOL) -> np.ndarray:
        """Left singular vectors whose singular value is within ``gap`` of the norm."""
        keep = self.singular_values >= self.norm - gap
        return self.left_vectors[:, keep]


def _reflected_point(kind: DomainKind, alpha: complex) -> complex:
    if kind is DomainKind.DISC:
        return 1.0 / np.conj(alpha)
    if kind is DomainKind.UPPER:
        return np.conj(alpha)
    return -np.conj(alpha)


def _shift_coefficient(kind: DomainKind, alpha: complex) -> complex:
    """The constant ``c`` in ``(I - Pi)(f / b_alpha) = c f(alpha) / (lam - alpha)``."""
    if kind is DomainKind.DISC:
        return 1.0 - abs(alpha) ** 2
    if kind is DomainKind.UPPER:
        return alpha - np.conj(alpha)
    return alpha + np.conj(alpha)


def assemble(basis: ModelSpaceBasis, alpha: complex, grid: BoundaryGrid | None = None) -> OperatorMatrix:
    """``mat[j, k] = <b_alpha e_k, e_j>`` by boundary quadrature."""
    alpha = require_in_domain(basis.kind, alpha)

    def mat(g: BoundaryGrid) -> np.ndarray:
        E = basis.grid_values(g)
        b = blaschke(basis.kind, alpha, g.nodes)
        return np.einsum("k,kmj,kmi->ji", g.weights * b, np.conj(E), E)

    if grid is None:
        M, _ = converge(basis.kind, mat, n0=basis.grid.size, shift=basis.grid.shift, atol=MATRIX_ATOL)
    else:
        M = mat(grid)
    return OperatorMatrix.from_matrix(M, alpha, basis.theta_ref)


def apply_adjoint_explicit(basis: ModelSpaceBasis, alpha: complex, f: MatRational) -> MatRational:
    """``A_alpha^* f`` through the backward shift ``R_alpha``."""
    alpha = require_in_domain(basis.kind, alpha)
    _check_shape(basis, f)
    rf = backward_shift_rational(f, alpha)
    c = _shift_coefficient(basis.kind, alpha)
    if basis.kind is DomainKind.DISC:
        return f * (-np.conj(alpha)) + rf * c
    return f + rf * c


def assemble_adjoint(basis: ModelSpaceBasis, alpha: complex) -> OperatorMatrix:
    """Matrix of ``A_alpha^*`` from the backward-shift formula, column by column."""
    alpha = require_in_domain(basis.kind, alpha)
    cols = [project(basis, apply_adjoint_explicit(basis, alpha, e)) for e in basis.basis]
    return OperatorMatrix.from_matrix(np.stack(cols, axis=1), alpha, basis.theta_ref)


def _theta_sharp(basis: ModelSpaceBasis) -> MatRational:
    key = "theta_sharp"
    if key not in basis._cache:
        basis._cache[key] = sharp(basis.kind, basis.theta)
    return basis._cache[key]


def disc_limit_vector(basis: ModelSpaceBasis, f: MatRational) -> np.ndarray:
    """``u = lim_{beta -> 0} (Theta^# f)(1/conj(beta)) / conj(beta)``.

    With ``t = 1/conj(beta)`` this is the value at infinity of
    ``t (Theta^# f)(t)``, read off the coefficients.
    """
    h = _theta_sharp(basis) @ f
    lam = MatRational.polynomial([0.0, 1.0])
    return (h * lam).value_at_infinity()


def apply_basic_explicit(basis: ModelSpaceBasis, alpha: complex, f: MatRational) -> MatRational:
    """``A_alpha f`` without projection, via ``Theta (Theta^# f)`` at the reflected point."""
    kind = basis.kind
    alpha = require_in_domain(kind, alpha)
    _check_shape(basis, f)
    theta = basis.theta
    b = blaschke_rational(kind, alpha)
    if kind is DomainKind.DISC and alpha == 0:
        u = disc_limit_vector(basis, f)
        return f * b - theta @ u.reshape(-1, 1)
    h = _theta_sharp(basis) @ f
    try:
        val = h.eval_removable(_reflected_point(kind, alpha))
    except PoleError as exc:
        raise PoleError(f"Theta^# f has a genuine pole at the reflection of alpha={alpha}") from exc
    rho_aa = float(np.real(rho(kind, alpha, alpha)))
    scale, root = rho_factor(kind, alpha)
    corr = (theta @ val.reshape(-1, 1)).divide_linear(scale, root)
    if kind is DomainKind.DISC:
        return f * b - corr * (rho_aa / np.conj(alpha))
    return f * b + corr * rho_aa


def assemble_explicit(basis: ModelSpaceBasis, alpha: complex) -> OperatorMatrix:
    """Matrix of ``A_alpha`` from :func:`apply_basic_explicit`."""
    alpha = require_in_domain(basis.kind, alpha)
    cols = [project(basis, apply_basic_explicit(basis, alpha, e)) for e in basis.basis]
    return OperatorMatrix.from_matrix(np.stack(cols, axis=1), alpha, basis.theta_ref)


def adjoint_norm_identity(basis: ModelSpaceBasis, alpha: complex, f: MatRational, adjoint: OperatorMatrix | None = None) -> dict:
    """Both sides of ``||A^* f||^2 = ||f||^2 - rho_alpha(alpha) f(alpha)^* f(alpha)``.

    The identity concerns ``f`` in ``H(Theta)``; a general ``f`` is first
    replaced by its orthogonal projection.
    """
    alpha = require_in_domain(basis.kind, alpha)
    if adjoint is None:
        adjoint = assemble_adjoint(basis, alpha)
    c = project(basis, f)
    lhs = float(np.linalg.norm(adjoint.mat @ c) ** 2)
    fnorm2 = float(np.vdot(c, c).real)
    fa = basis.evaluation_matrix(alpha) @ c
    rhs = fnorm2 - float(np.real(rho(basis.kind, alpha, alpha))) * float(np.vdot(fa, fa).real)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / (1.0 + fnorm2)}


class Branch(str, Enum):
    UNIT_NORM = "UnitNorm"
    STRICT_CONTRACTION = "StrictContraction"


@dataclass(frozen=True, eq=False)
class ClosedFormNorm:
    value: float
    branch: Branch
    svd: PointSVD
    dims: SubspaceDims
    witness_ratio_residual: float = 0.0


def lemma_ratio(theta_alpha: np.ndarray, u: np.ndarray) -> float:
    """``w^* T T^* w / w^* w`` with ``w = (I - T T^*)^{1/2} u`` and ``T = Theta(alpha)``."""
    N = np.eye(theta_alpha.shape[0]) - theta_alpha @ theta_alpha.conj().T
    w = sla.sqrtm(0.5 * (N + N.conj().T)) @ u
    return float(np.real(np.vdot(w, theta_alpha @ theta_alpha.conj().T @ w)) / np.real(np.vdot(w, w)))


def closed_form_from_parts(
    svd: PointSVD, dims: SubspaceDims, theta_alpha: np.ndarray, tol_sv: float = TOL_SV
) -> ClosedFormNorm:
    if dims.dim_H_alpha > 0:
        return ClosedFormNorm(1.0, Branch.UNIT_NORM, svd, dims)
    below = svd.s[svd.s < 1.0 - tol_sv]
    if below.size == 0:
        raise AllUnitSingularValuesError(
            "H(Theta)_alpha = {0} but every singular value of Theta(alpha) equals 1"
        )
    value = float(below[0])
    j = int(np.argmax(svd.s < 1.0 - tol_sv))
    ratio = lemma_ratio(theta_alpha, svd.V[:, j])
    return ClosedFormNorm(value, Branch.STRICT_CONTRACTION, svd, dims, abs(ratio - value**2))


def closed_form_norm(
    theta, basis: ModelSpaceBasis, alpha: complex, tol_sv: float = TOL_SV, tol_rank: float = TOL_RANK
) -> ClosedFormNorm:
    """Norm of ``A_alpha`` from ``Theta(alpha)`` alone.

    One if ``dim H(Theta) > rank K_alpha(alpha)``; otherwise the largest
    singular value of ``Theta(alpha)`` strictly below one.
    """
    alpha = require_in_domain(basis.kind, alpha)
    svd = point_svd(theta, alpha, tol_sv, kind=basis.kind)
    dims = subspace_dims(basis, alpha, tol_rank)
    return closed_form_from_parts(svd, dims, svd.reconstruct(), tol_sv)


@dataclass(frozen=True, eq=False)
class NormReport:
    oracle_norm: float
    closed_norm: float
    abs_diff: float
    branch: Branch
    singular_values: list
    k: int
    dims: SubspaceDims
    witness_ratio: float
    na_check: float
    witness_zero_residual: float | None
    lemma_ratio_residual: float
    identity_residual: float
    adjoint_consistency: float
    grid_n: int

    def as_dict(self) -> dict:
        return {
            "oracle_norm": self.oracle_norm,
            "closed_norm": self.closed_norm,
            "abs_diff": self.abs_diff,
            "branch": self.branch.value,
            "singular_values": [float(s) for s in self.singular_values],
            "k": self.k,
            "dims": self.dims.as_dict(),
            "witness_ratio": self.witness_ratio,
            "na_check": self.na_check,
            "witness_zero_residual": self.witness_zero_residual,
            "lemma_ratio_residual": self.lemma_ratio_residual,
            "identity_residual": self.identity_residual,
            "adjoint_consistency": self.adjoint_consistency,
            "grid_n": self.grid_n,
        }


def zero_witness(op: OperatorMatrix, basis: ModelSpaceBasis, alpha: complex) -> tuple[np.ndarray, float]:
    """Norm-attaining vector for ``A^*`` that vanishes at ``alpha``.

    Inside the top left singular space the vector minimizing ``||f(alpha)||``
    is selected; returns its coefficients and ``||f(alpha)|| / ||f||``.
    """
    Q = op.top_left_space()
    E = basis.evaluation_matrix(alpha) @ Q
    _, _, Vh = np.linalg.svd(E)
    c = Q @ Vh[-1].conj()
    return c, float(np.linalg.norm(basis.evaluation_matrix(alpha) @ c) / np.linalg.norm(c))


def verify_norm(
    theta: BlaschkePotapov,
    alpha: complex,
    grid: BoundaryGrid | None = None,
    basis: ModelSpaceBasis | None = None,
    tol_sv: float = TOL_SV,
    tol_rank: float = TOL_RANK,
) -> NormReport:
    """Numerical norm of ``A_alpha`` against the closed form, with side checks."""
    alpha = require_in_domain(theta.kind, alpha)
    if basis is None:
        basis = build_basis(theta, grid)
    op = assemble(basis, alpha, grid)
    cf = closed_form_norm(theta, basis, alpha, tol_sv, tol_rank)
    ratio = op.ratio(op.witness_coeffs)
    zero_res = None
    if cf.branch is Branch.UNIT_NORM:
        _, zero_res = zero_witness(op, basis, alpha)
    adj = assemble_adjoint(basis, alpha)
    ident = 0.0
    for k in range(basis.dim):
        e = np.zeros(basis.dim, dtype=complex)
        e[k] = 1.0
        lhs = float(np.linalg.norm(adj.mat @ e) ** 2)
        ek_a = basis.evaluation_matrix(alpha)[:, k]
        rhs = 1.0 - float(np.real(rho(basis.kind, alpha, alpha))) * float(np.vdot(ek_a, ek_a).real)
        ident = max(ident, abs(lhs - rhs) / 2.0)
    return NormReport(
        oracle_norm=op.norm,
        closed_norm=cf.value,
        abs_diff=abs(op.norm - cf.value),
        branch=cf.branch,
        singular_values=list(cf.svd.s),
        k=cf.svd.k,
        dims=cf.dims,
        witness_ratio=ratio,
        na_check=abs(ratio - op.norm),
        witness_zero_residual=zero_res,
        lemma_ratio_residual=cf.witness_ratio_residual,
        identity_residual=ident,
        adjoint_consistency=float(np.linalg.norm(adj.mat - op.mat.conj().T)),
        grid_n=basis.grid.size,
    )
