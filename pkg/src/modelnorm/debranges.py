"""Rational de Branges spaces ``B(E)`` for ``E = [E_- E_+]``.

``B(E) = E_+ H(Theta)`` with ``Theta = E_+^{-1} E_-`` inner, normed by

    <f, g>_E = <E_+^{-1} f, E_+^{-1} g>   (standard boundary inner product).

Multiplication by ``E_+`` is therefore unitary from ``H(Theta)`` onto ``B(E)``;
the operator ``B_alpha`` is computed directly in the weighted inner product
and compared with the closed form built from the singular values of
``Theta(alpha) = E_+(alpha)^{-1} E_-(alpha)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from modelnorm.basicop import (
    ClosedFormNorm,
    OperatorMatrix,
    _shift_coefficient,
    closed_form_from_parts,
)
from modelnorm.domains import (
    BoundaryGrid,
    DomainKind,
    blaschke,
    converge,
    rho,
    rho_factor,
    require_in_domain,
)
from modelnorm.errors import (
    DimensionError,
    DomainError,
    NotInnerError,
    PoleOnBoundaryError,
    SchemaError,
    SingularEPlusError,
    SingularWeightError,
)
from modelnorm.inner import TOL_SV, BlaschkePotapov, _interior_samples, check_inner, point_svd
from modelnorm.modelspace import (
    TOL_RANK,
    ModelSpaceBasis,
    SubspaceDims,
    build_basis,
    build_basis_from_kernels,
    numerical_rank,
)
from modelnorm.rational import MatRational, _poly_from_roots, check_nodes

DET_TOL = 1e-12
COND_TOL = 1e12
# Boundary zeros of det E_+ make the weight singular; keep them this far away.
ZERO_MARGIN = 1e-8


def _adjugate(A: np.ndarray) -> np.ndarray:
    """Adjugate of a small square matrix by cofactors (valid when singular)."""
    m = A.shape[-1]
    if m == 1:
        return np.ones_like(A)
    out = np.empty_like(A)
    for i, j in product(range(m), range(m)):
        minor = np.delete(np.delete(A, i, axis=-2), j, axis=-1)
        out[..., j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def _interpolate(values_fn, degree: int) -> np.ndarray:
    """Ascending coefficients of a matrix polynomial of degree <= ``degree`` from roots-of-unity samples."""
    size = degree + 1
    z = np.exp(2j * np.pi * np.arange(size) / size)
    vals = values_fn(z)
    coeffs = np.fft.fft(vals, axis=0) / size
    scale = np.max(np.abs(coeffs)) or 1.0
    coeffs[np.abs(coeffs) < 1e-14 * scale] = 0.0
    return coeffs


def _numerator(f: MatRational):
    """``f = P / q`` -> (P as MatRational polynomial, q coefficients)."""
    return MatRational(f.num, np.zeros(0)), _poly_from_roots(f.den_roots)


def det_numerator_roots(e_plus: MatRational) -> np.ndarray:
    """Zeros of ``det P`` where ``E_+ = P / q``."""
    P, _ = _numerator(e_plus)
    m = e_plus.rows
    deg = m * (P.num.shape[0] - 1)
    coeffs = _interpolate(lambda z: np.linalg.det(P.eval_many(z)), deg)
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        raise SingularEPlusError("det E_+ vanishes identically")
    return np.roots(coeffs[: nz[-1] + 1][::-1])


def _closed_domain_violation(kind: DomainKind, z: complex) -> bool:
    if kind is DomainKind.DISC:
        return abs(z) < 1.0 + ZERO_MARGIN
    if kind is DomainKind.UPPER:
        return z.imag > -ZERO_MARGIN
    return z.real > -ZERO_MARGIN


def theta_from_pair(e_minus: MatRational, e_plus: MatRational, normalize_tol: float = 1e-8) -> MatRational:
    """``E_+^{-1} E_-`` as a rational function, ``adj(P_+) P_- q_+ / (det P_+ q_-)``."""
    Pp, qp = _numerator(e_plus)
    Pm, _ = _numerator(e_minus)
    deg = (e_plus.rows - 1) * (Pp.num.shape[0] - 1) + (Pm.num.shape[0] - 1) + (qp.size - 1)

    def values(z):
        return _adjugate(Pp.eval_many(z)) @ Pm.eval_many(z) * np.polyval(qp[::-1], z)[:, None, None]

    num = _interpolate(values, deg)
    det_roots = det_numerator_roots(e_plus)
    # det P_+ = lead * prod(lam - r); lead read off the interpolant
    det_coeffs = _interpolate(lambda z: np.linalg.det(Pp.eval_many(z)), e_plus.rows * (Pp.num.shape[0] - 1))
    det_lead = det_coeffs[np.nonzero(det_coeffs)[0][-1]]
    roots = np.concatenate([det_roots, e_minus.den_roots])
    return MatRational(num / det_lead, roots).normalize(normalize_tol)


@dataclass(frozen=True, eq=False)
class DeBrangesMatrix:
    """Validated rational de Branges matrix; ``theta = E_+^{-1} E_-``.

    ``bp`` is kept when the matrix was built from a Blaschke-Potapov product.
    """

    kind: DomainKind
    m: int
    e_minus: MatRational
    e_plus: MatRational
    theta: MatRational
    bp: BlaschkePotapov | None = None
    inner_defects: tuple[float, float] = (0.0, 0.0)

    def e_plus_at(self, lam) -> np.ndarray:
        return self.e_plus.eval_many(np.atleast_1d(lam))

    def theta_direct(self, lam) -> np.ndarray:
        """``solve(E_+, E_-)`` pointwise (independent of the rational ``theta``)."""
        lam = np.asarray(lam, dtype=complex)
        flat = lam.reshape(-1)
        out = np.linalg.solve(self.e_plus.eval_many(flat), self.e_minus.eval_many(flat))
        return out.reshape(lam.shape + (self.m, self.m))

    def to_json(self) -> dict:
        return {
            "domain": self.kind.value,
            "m": self.m,
            "e_minus": self.e_minus.to_json(),
            "e_plus": self.e_plus.to_json(),
        }


def make_matrix(kind, e_minus: MatRational, e_plus: MatRational, bp: BlaschkePotapov | None = None) -> DeBrangesMatrix:
    """Validate ``E_+`` (no zeros of ``det E_+`` in the closed ``Omega_+``) and innerness of ``Theta``."""
    kind = DomainKind.parse(kind)
    m = e_plus.rows
    if e_plus.shape != (m, m) or e_minus.shape != (m, m):
        raise DimensionError(f"E_- and E_+ must be square of equal size, got {e_minus.shape}, {e_plus.shape}")
    # poles of E_+ on the boundary would make E_+ f undefined there
    if e_plus.den_roots.size and any(_closed_domain_violation(kind, p) for p in e_plus.den_roots):
        raise DomainError("E_+ has a pole in the closure of Omega_+")
    samples = _interior_samples(kind, 20, seed=1)
    dets = np.abs(np.linalg.det(e_plus.eval_many(samples)))
    if np.min(dets) < DET_TOL:
        raise SingularEPlusError("det E_+ vanishes at an interior sample point")
    bad = [z for z in det_numerator_roots(e_plus) if _closed_domain_violation(kind, complex(z))]
    if bad:
        raise SingularEPlusError(
            f"det E_+ has a zero at {complex(bad[0]):.6g} in the closure of Omega_+; "
            "only E_+ with det E_+ zero-free on the closed domain are accepted"
        )
    theta = bp.rational if bp is not None else theta_from_pair(e_minus, e_plus)
    mat = DeBrangesMatrix(kind, m, e_minus, e_plus, theta, bp)
    try:
        defects = check_inner(kind, mat.theta_direct, m)
    except NotInnerError as exc:
        raise NotInnerError(f"E_+^-1 E_- is not inner: {exc}") from exc
    pts = np.concatenate([samples, _interior_samples(kind, 10, seed=2)])
    drift = float(np.max(np.abs(theta.eval_many(pts) - mat.theta_direct(pts))))
    if drift > 1e-8:
        raise NotInnerError(f"rational form of E_+^-1 E_- is inaccurate (drift {drift:.2e})")
    return DeBrangesMatrix(kind, m, e_minus, e_plus, theta, bp, defects)


def from_inner(bp: BlaschkePotapov, e_plus: MatRational | None = None) -> DeBrangesMatrix:
    """``E_- = E_+ Theta``; ``E_+ = I`` by default."""
    if e_plus is None:
        e_plus = MatRational.identity(bp.m)
    return make_matrix(bp.kind, e_plus @ bp.rational, e_plus, bp)


def from_json(obj: dict | str) -> DeBrangesMatrix:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        kind = DomainKind.parse(obj["domain"])
        m = int(obj["m"])
        e_minus = MatRational.from_json(obj["e_minus"])
        e_plus = MatRational.from_json(obj["e_plus"])
    except KeyError as exc:
        raise SchemaError(f"de Branges spec missing key {exc}") from exc
    if e_plus.shape != (m, m):
        raise SchemaError(f"e_plus must be {m}x{m}, got {e_plus.shape}")
    return make_matrix(kind, e_minus, e_plus)


@dataclass(frozen=True, eq=False)
class DeBrangesSpace:
    """``basis[k] = E_+ e_k`` for an orthonormal basis ``e_k`` of ``H(Theta)``."""

    matrix: DeBrangesMatrix
    model: ModelSpaceBasis
    basis: tuple[MatRational, ...]
    dim: int
    grid: BoundaryGrid
    gram_residual: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def kind(self) -> DomainKind:
        return self.matrix.kind

    @property
    def m(self) -> int:
        return self.matrix.m

    def weighted_values(self, f: MatRational, nodes: np.ndarray) -> np.ndarray:
        """``E_+^{-1} f`` at the nodes, shape ``(N, m, cols)``."""
        return _solve_weight(self.matrix.e_plus, f, nodes)

    def basis_weighted_values(self, grid: BoundaryGrid) -> np.ndarray:
        key = (grid.size, grid.shift)
        if key not in self._cache:
            vals = [self.weighted_values(b, grid.nodes)[:, :, 0] for b in self.basis]
            self._cache[key] = np.stack(vals, axis=2)
        return self._cache[key]

    def evaluation_matrix(self, alpha: complex) -> np.ndarray:
        return np.stack([b.eval(alpha)[:, 0] for b in self.basis], axis=1)


def _solve_weight(e_plus: MatRational, f: MatRational, nodes: np.ndarray) -> np.ndarray:
    if not (check_nodes(f, nodes) and check_nodes(e_plus, nodes)):
        raise PoleOnBoundaryError("pole on the quadrature nodes")
    E = e_plus.eval_many(nodes)
    det = np.abs(np.linalg.det(E))
    if np.min(det) < DET_TOL:
        raise SingularWeightError(f"|det E_+| = {np.min(det):.2e} at a quadrature node")
    return np.linalg.solve(E, f.eval_many(nodes))


def weighted_inner(space: DeBrangesSpace, f: MatRational, g: MatRational, grid: BoundaryGrid | None = None) -> complex:
    """``<E_+^{-1} f, E_+^{-1} g>`` by boundary quadrature."""
    if f.shape != g.shape or f.cols != 1:
        raise DimensionError(f"weighted inner product needs equal column shapes, got {f.shape} and {g.shape}")

    def compute(gr: BoundaryGrid) -> complex:
        try:
            fv = space.weighted_values(f, gr.nodes)[:, :, 0]
            gv = space.weighted_values(g, gr.nodes)[:, :, 0]
        except PoleOnBoundaryError:
            gr = gr.rotated()
            fv = space.weighted_values(f, gr.nodes)[:, :, 0]
            gv = space.weighted_values(g, gr.nodes)[:, :, 0]
        return complex(np.sum(gr.weights * np.sum(np.conj(gv) * fv, axis=1)))

    if grid is not None:
        return compute(grid)
    return converge(space.kind, compute, n0=space.grid.size, shift=space.grid.shift, atol=1e-15)[0]


def build_space(matrix: DeBrangesMatrix, grid: BoundaryGrid | None = None) -> DeBrangesSpace:
    """Basis ``E_+ e_k``; orthonormality is re-checked in the weighted inner product."""
    if matrix.bp is not None:
        model = build_basis(matrix.bp, grid)
    else:
        model = build_basis_from_kernels(matrix.kind, matrix.theta, grid=grid)
    basis = tuple(matrix.e_plus @ e for e in model.basis)
    space = DeBrangesSpace(matrix, model, basis, model.dim, model.grid, 0.0)

    def gram(g: BoundaryGrid) -> np.ndarray:
        V = space.basis_weighted_values(g)
        return np.einsum("k,kmi,kmj->ij", g.weights, np.conj(V), V)

    G, g = converge(matrix.kind, gram, n0=model.grid.size, shift=model.grid.shift, atol=1e-15)
    resid = float(np.max(np.abs(G - np.eye(space.dim))))
    return DeBrangesSpace(matrix, model, basis, model.dim, g, resid, space._cache)


def weighted_project(space: DeBrangesSpace, f: MatRational) -> np.ndarray:
    """Coordinates ``<f, E_+ e_k>_E`` of the weighted orthogonal projection."""

    def compute(g: BoundaryGrid) -> np.ndarray:
        fv = space.weighted_values(f, g.nodes)[:, :, 0]
        V = space.basis_weighted_values(g)
        return np.einsum("k,kmi,km->i", g.weights, np.conj(V), fv)

    return converge(space.kind, compute, n0=space.grid.size, shift=space.grid.shift, atol=1e-15)[0]


def weighted_norm(space: DeBrangesSpace, f: MatRational) -> float:
    return float(np.sqrt(max(weighted_inner(space, f, f).real, 0.0)))


def kernel_db(matrix: DeBrangesMatrix, omega: complex) -> MatRational:
    """``K^E_omega(lam) = (E_+(lam) E_+(omega)^* - E_-(lam) E_-(omega)^*) / rho_omega(lam)``."""
    omega = require_in_domain(matrix.kind, omega, "omega")
    Ep = matrix.e_plus.eval(omega)
    Em = matrix.e_minus.eval(omega)
    num = matrix.e_plus @ Ep.conj().T - matrix.e_minus @ Em.conj().T
    scale, root = rho_factor(matrix.kind, omega)
    return num.divide_linear(scale, root)


def _require_e_plus_invertible(matrix: DeBrangesMatrix, alpha: complex) -> np.ndarray:
    Ea = matrix.e_plus.eval(alpha)
    if np.linalg.cond(Ea) > COND_TOL:
        raise SingularEPlusError(f"E_+(alpha) is singular at alpha={alpha}")
    return Ea


def theta_at_alpha(matrix: DeBrangesMatrix, alpha: complex) -> np.ndarray:
    Ea = _require_e_plus_invertible(matrix, alpha)
    return np.linalg.solve(Ea, matrix.e_minus.eval(alpha))


def basic_operator_B(space: DeBrangesSpace, alpha: complex) -> OperatorMatrix:
    """``mat[j, k] = <b_alpha f_k, f_j>_E`` in the weighted orthonormal basis ``f_k = E_+ e_k``."""
    alpha = require_in_domain(space.kind, alpha)
    _require_e_plus_invertible(space.matrix, alpha)

    def compute(g: BoundaryGrid) -> np.ndarray:
        V = space.basis_weighted_values(g)
        b = blaschke(space.kind, alpha, g.nodes)
        return np.einsum("k,kmj,kmi->ji", g.weights * b, np.conj(V), V)

    M, _ = converge(space.kind, compute, n0=space.grid.size, shift=space.grid.shift, atol=1e-14)
    return OperatorMatrix.from_matrix(M, alpha, f"debranges:{id(space.matrix):x}")


def debranges_dims(space: DeBrangesSpace, alpha: complex, tol_rank: float = TOL_RANK) -> SubspaceDims:
    """``dim B(E)``, ``rank K^E_alpha(alpha)`` and their difference."""
    K = kernel_db(space.matrix, alpha).eval(alpha)
    r = numerical_rank(K, tol_rank)
    return SubspaceDims(space.dim, r, space.dim - r)


def closed_form_norm_B(
    space: DeBrangesSpace, alpha: complex, tol_sv: float = TOL_SV, tol_rank: float = TOL_RANK
) -> ClosedFormNorm:
    """One if ``dim B(E) > rank K^E_alpha(alpha)``, else the largest ``s_j(Theta(alpha)) < 1``."""
    alpha = require_in_domain(space.kind, alpha)
    T = theta_at_alpha(space.matrix, alpha)
    svd = point_svd(lambda lam: T, alpha, tol_sv)
    return closed_form_from_parts(svd, debranges_dims(space, alpha, tol_rank), T, tol_sv)


def debranges_identity(space: DeBrangesSpace, alpha: complex, f: MatRational) -> dict:
    """Both sides of ``||Pi_E (1/b_alpha) f||^2 = ||f||^2 - rho_alpha(alpha) |(E_+^{-1} f)(alpha)|^2``.

    ``f`` is replaced by its weighted projection onto ``B(E)``.  The
    complementary part ``(I - Pi_E)(f / b_alpha)`` is compared with
    ``c_alpha E_+ (E_+^{-1} f)(alpha) / (lam - alpha)``.
    """
    kind = space.kind
    alpha = require_in_domain(kind, alpha)
    Ea = _require_e_plus_invertible(space.matrix, alpha)
    c = weighted_project(space, f)
    fnorm2 = float(np.vdot(c, c).real)
    g_alpha = np.linalg.solve(Ea, space.evaluation_matrix(alpha) @ c)
    rhs = fnorm2 - float(np.real(rho(kind, alpha, alpha))) * float(np.vdot(g_alpha, g_alpha).real)
    ca = _shift_coefficient(kind, alpha)

    def compute(g: BoundaryGrid) -> np.ndarray:
        V = space.basis_weighted_values(g)
        b = blaschke(kind, alpha, g.nodes)
        gv = V @ c  # E_+^{-1} f on the nodes
        shifted = gv / b[:, None]
        coords = np.einsum("k,kmi,km->i", g.weights, np.conj(V), shifted)
        rest = shifted - V @ coords
        # E_+^{-1} of the predicted complementary term
        pred = ca * g_alpha[None, :] / (g.nodes - alpha)[:, None]
        err = rest - pred
        return np.concatenate([coords, [np.sqrt(np.sum(g.weights * np.sum(np.abs(err) ** 2, axis=1)))]])

    out, _ = converge(kind, compute, n0=space.grid.size, shift=space.grid.shift, rtol=1e-10, atol=1e-14)
    coords, comp = out[:-1], float(np.real(out[-1]))
    lhs = float(np.vdot(coords, coords).real)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs) / (1.0 + fnorm2),
        "complement_residual": comp / np.sqrt(1.0 + fnorm2),
    }


@dataclass(frozen=True, eq=False)
class DeBrangesReport:
    oracle_norm: float
    closed_norm: float
    abs_diff: float
    branch: str
    singular_values: list
    dims: SubspaceDims
    witness_ratio: float
    na_check: float
    identity_residual: float
    gram_residual: float
    grid_n: int

    def as_dict(self) -> dict:
        return {
            "oracle_norm": self.oracle_norm,
            "closed_norm": self.closed_norm,
            "abs_diff": self.abs_diff,
            "branch": self.branch,
            "singular_values": [float(s) for s in self.singular_values],
            "dims": self.dims.as_dict(),
            "witness_ratio": self.witness_ratio,
            "na_check": self.na_check,
            "identity_residual": self.identity_residual,
            "gram_residual": self.gram_residual,
            "grid_n": self.grid_n,
        }


def verify_debranges(matrix: DeBrangesMatrix, alpha: complex, space: DeBrangesSpace | None = None) -> DeBrangesReport:
    """Weighted oracle norm of ``B_alpha`` against the closed form, plus the identity on the basis."""
    if space is None:
        space = build_space(matrix)
    op = basic_operator_B(space, alpha)
    cf = closed_form_norm_B(space, alpha)
    ident = max(debranges_identity(space, alpha, b)["residual"] for b in space.basis)
    ratio = op.ratio(op.witness_coeffs)
    return DeBrangesReport(
        oracle_norm=op.norm,
        closed_norm=cf.value,
        abs_diff=abs(op.norm - cf.value),
        branch=cf.branch.value,
        singular_values=list(cf.svd.s),
        dims=cf.dims,
        witness_ratio=ratio,
        na_check=abs(ratio - op.norm),
        identity_residual=ident,
        gram_residual=space.gram_residual,
        grid_n=space.grid.size,
    )
