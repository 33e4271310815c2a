import numpy as np
import pytest

from conftest import bp, poly
from modelnorm.basicop import Branch, adjoint_norm_identity, assemble, lemma_ratio
from modelnorm.debranges import (
    basic_operator_B,
    build_space,
    closed_form_norm_B,
    debranges_dims,
    debranges_identity,
    from_inner,
    from_json,
    kernel_db,
    make_matrix,
    theta_at_alpha,
    verify_debranges,
    weighted_inner,
    weighted_norm,
    weighted_project,
)
from modelnorm.domains import DomainKind, rho
from modelnorm.errors import NotInnerError, SingularEPlusError
from modelnorm.instances import (
    random_bp,
    random_h2_function,
    random_point,
    random_points,
    random_polynomial_eplus,
    random_unit_vector,
)
from modelnorm.modelspace import build_basis, kernel_section
from modelnorm.rational import MatRational

D = DomainKind.DISC


def scalar_space(e_minus_coeffs):
    return build_space(make_matrix(D, poly(*e_minus_coeffs), poly(2, -1)))


def weighted_instance(rng, kind, m=2, n=3):
    theta = random_bp(rng, kind, m, n)
    return from_inner(theta, random_polynomial_eplus(rng, kind, m, 1))


def test_weighted_inner_identity_weight(kind, rng):
    theta = random_bp(rng, kind, 2, 3)
    space = build_space(from_inner(theta))
    b = build_basis(theta)
    f, g = b.basis[0], b.basis[1]
    assert weighted_inner(space, f, f) == pytest.approx(1, abs=1e-12)
    assert abs(weighted_inner(space, f, g)) < 1e-12


def test_weighted_inner_scalar_example():
    space = scalar_space([0, 2, -1])
    f = poly(2, -1)
    assert weighted_inner(space, f, f) == pytest.approx(1, abs=1e-13)


def test_weighted_inner_sesquilinear(kind, rng):
    space = build_space(weighted_instance(rng, kind))
    f, g, h = (random_h2_function(rng, kind, 2) for _ in range(3))
    a, c = 0.3 - 1.2j, -0.7 + 0.4j
    lhs = weighted_inner(space, f * a + g * c, h)
    rhs = a * weighted_inner(space, f, h) + c * weighted_inner(space, g, h)
    assert abs(lhs - rhs) < 1e-13 * (1 + abs(lhs))
    assert abs(weighted_inner(space, f, h) - np.conj(weighted_inner(space, h, f))) < 1e-14 * (1 + abs(lhs))


def test_build_space_identity_reduction(kind, rng):
    theta = random_bp(rng, kind, 2, 3)
    space = build_space(from_inner(theta))
    b = build_basis(theta)
    z = random_points(rng, kind, 4)
    for e, f in zip(b.basis, space.basis):
        assert np.allclose(e.eval_many(z), f.eval_many(z), atol=1e-14)


def test_build_space_examples():
    space = scalar_space([0, 2, -1])
    assert space.dim == 1 and space.gram_residual < 1e-10
    z = np.array([0.2, -0.4j])
    vals = space.basis[0].eval_many(z)[:, 0, 0]
    assert np.allclose(np.abs(vals), np.abs(2 - z))
    e_plus = MatRational.polynomial([np.diag([2.0, 1.0]), np.diag([-1.0, 0.0])])
    e_minus = e_plus @ MatRational.polynomial([np.diag([0.0, 1.0]), np.diag([1.0, 0.0])])
    space = build_space(make_matrix(D, e_minus, e_plus))
    assert space.dim == 1 and space.gram_residual < 1e-10


def test_build_space_random(kind, rng):
    matrix = weighted_instance(rng, kind)
    space = build_space(matrix)
    assert space.dim == 3 and space.gram_residual < 1e-10
    # the JSON path rebuilds the same space from the rational Theta
    space2 = build_space(from_json(matrix.to_json()))
    assert space2.dim == 3 and space2.gram_residual < 1e-10


def test_kernel_reproducing(kind, rng):
    space = build_space(weighted_instance(rng, kind))
    w = random_point(rng, kind)
    u = random_unit_vector(rng, 2)
    K = kernel_db(space.matrix, w) @ MatRational.constant(u[:, None])
    for f in space.basis:
        assert abs(weighted_inner(space, f, K) - np.vdot(u, f.eval(w)[:, 0])) < 1e-9


def test_kernel_positive(kind, rng):
    matrix = weighted_instance(rng, kind)
    pts = random_points(rng, kind, 3)
    G = np.block([[kernel_db(matrix, w).eval(z) for w in pts] for z in pts])
    assert np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min() > -1e-10


def test_basic_operator_reduction(kind, rng):
    theta = random_bp(rng, kind, 2, 4)
    a = random_point(rng, kind)
    B = basic_operator_B(build_space(from_inner(theta)), a)
    A = assemble(build_basis(theta), a)
    assert np.max(np.abs(B.mat - A.mat)) < 1e-10


def test_basic_operator_examples():
    space = scalar_space([0, 2, -1])
    B = basic_operator_B(space, 0.5)
    assert B.norm == pytest.approx(0.5, abs=1e-12)
    cf = closed_form_norm_B(space, 0.5)
    assert cf.value == pytest.approx(0.5) and cf.branch is Branch.STRICT_CONTRACTION
    space = scalar_space([0, 0, 2, -1])
    assert basic_operator_B(space, 0).norm == pytest.approx(1, abs=1e-12)
    cf = closed_form_norm_B(space, 0)
    assert cf.value == 1 and (cf.dims.dim_H, cf.dims.dim_M) == (2, 1)


def test_closed_form_random(kind, rng):
    for _ in range(3):
        matrix = weighted_instance(rng, kind, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        a = random_point(rng, kind)
        r = verify_debranges(matrix, a)
        assert r.abs_diff < 1e-8
        assert r.identity_residual < 1e-10
        assert (r.dims.dim_H_alpha > 0) == (abs(r.oracle_norm - 1) < 1e-8)


def test_theta_at_alpha_matches_theta(kind, rng):
    matrix = weighted_instance(rng, kind)
    a = random_point(rng, kind)
    assert np.allclose(theta_at_alpha(matrix, a), matrix.bp(a), atol=1e-12)


def test_identity_examples(kind, rng):
    space = build_space(weighted_instance(rng, kind))
    a = random_point(rng, kind)
    # f with (E_+^{-1} f)(alpha) = 0
    Ea = space.matrix.e_plus.eval(a)
    _, _, Vh = np.linalg.svd(np.linalg.solve(Ea, space.evaluation_matrix(a)))
    f = sum((space.basis[k] * Vh[-1, k].conj() for k in range(1, space.dim)), space.basis[0] * Vh[-1, 0].conj())
    r = debranges_identity(space, a, f)
    assert r["residual"] < 1e-12
    assert r["lhs"] == pytest.approx(1, abs=1e-12) and r["rhs"] == pytest.approx(1, abs=1e-12)
    # f = K^E_alpha u
    u = random_unit_vector(rng, 2)
    f = kernel_db(space.matrix, a) @ MatRational.constant(u[:, None])
    r = debranges_identity(space, a, f)
    assert r["residual"] < 1e-10 and r["complement_residual"] < 1e-9


def test_identity_reduction(kind, rng):
    theta = random_bp(rng, kind, 2, 3)
    b = build_basis(theta)
    space = build_space(from_inner(theta))
    a = random_point(rng, kind)
    f = b.combine(rng.normal(size=3) + 1j * rng.normal(size=3))
    r0, r1 = adjoint_norm_identity(b, a, f), debranges_identity(space, a, f)
    assert r0["rhs"] == pytest.approx(r1["rhs"], abs=1e-10)
    assert r0["lhs"] == pytest.approx(r1["lhs"], abs=1e-10)


def test_kernel_ratio_weighted(kind, rng):
    space = build_space(weighted_instance(rng, kind))
    a = random_point(rng, kind)
    u = random_unit_vector(rng, 2)
    f = kernel_db(space.matrix, a) @ MatRational.constant(u[:, None])
    r = debranges_identity(space, a, f)
    ratio = r["lhs"] / weighted_norm(space, f) ** 2
    # K^E_alpha u = E_+ K^Theta_alpha E_+(alpha)^* u
    v = space.matrix.e_plus.eval(a).conj().T @ u
    assert ratio == pytest.approx(lemma_ratio(theta_at_alpha(space.matrix, a), v), abs=1e-10)


def test_weighted_project_norm(kind, rng):
    space = build_space(weighted_instance(rng, kind))
    c = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    f = sum((space.basis[k] * c[k] for k in range(1, space.dim)), space.basis[0] * c[0])
    assert np.allclose(weighted_project(space, f), c, atol=1e-12)
    assert weighted_norm(space, f) == pytest.approx(np.linalg.norm(c), rel=1e-12)


def test_rejects_det_zero_in_domain():
    # E_+ = 1/2 - lam vanishes at 1/2 in the disc
    with pytest.raises(SingularEPlusError, match="zero-free on the closed domain"):
        make_matrix(D, poly(0, 0.5, -1), poly(0.5, -1))
    # boundary zero: E_+ = 1 - lam
    with pytest.raises(SingularEPlusError):
        make_matrix(D, poly(0, 1, -1), poly(1, -1))


def test_rejects_non_inner():
    with pytest.raises(NotInnerError):
        make_matrix(D, poly(0, 1), poly(3, -1))


def test_upper_scalar_example():
    # E_+ = lam + 2i vanishes at -2i in the lower half-plane; Theta = b_{2i}
    space = build_space(make_matrix(DomainKind.UPPER, poly(-2j, 1), poly(2j, 1)))
    assert space.dim == 1
    assert basic_operator_B(space, 1j).norm == pytest.approx(1 / 3, abs=1e-12)
