import numpy as np
import pytest

from conftest import KINDS, bp, poly
from oracles import inner_quad, lstsq_projection
from modelnorm.domains import DomainKind, boundary_grid
from modelnorm.errors import NotInSpaceError, RankDeficiencyError
from modelnorm.inner import point_svd
from modelnorm.instances import random_bp, random_h2_function, random_point, random_points, random_unit_vector
from modelnorm.modelspace import (
    backward_shift,
    build_basis,
    build_basis_from_kernels,
    decomposition_projectors,
    inner_degree,
    kernel_section,
    membership_residual,
    norm,
    project,
    projection_residual,
    subspace_dims,
)
from modelnorm.rational import MatRational

D = DomainKind.DISC


def test_basis_examples():
    b = build_basis(bp(D, 1, [(0, [1])]))
    assert b.dim == 1 and abs(abs(b.basis[0].eval(0.3)[0, 0]) - 1) < 1e-14
    b = build_basis(bp(D, 1, [(0, [1]), (0, [1])]))
    assert b.dim == 2
    # span{1, lam}: projecting lam^2 gives zero, 1 and lam are reproduced
    assert np.linalg.norm(project(b, poly(0, 0, 1))) < 1e-14
    assert projection_residual(b, poly(0, 1)) < 1e-12
    b = build_basis(bp(D, 2, [(0, [1, 0])]))
    assert b.dim == 1
    assert np.allclose(np.abs(b.basis[0].eval(0.7)[:, 0]), [1, 0])


def test_basis_invariants(kind, rng):
    for m, n in [(1, 1), (2, 3), (3, 6)]:
        theta = random_bp(rng, kind, m, n)
        b = build_basis(theta)
        assert b.gram_residual < 1e-10
        assert b.dim == n
        assert membership_residual(b) < 1e-10
        for _ in range(10):
            w, u = random_point(rng, kind), random_unit_vector(rng, m)
            assert projection_residual(b, kernel_section(b, w).column(u)) < 1e-9


def test_gram_matches_adaptive_quadrature(kind, rng):
    b = build_basis(random_bp(rng, kind, 2, 2))
    G = np.array([[inner_quad(kind, ej, ei) for ej in b.basis] for ei in b.basis])
    assert np.max(np.abs(G - np.eye(2))) < 1e-9


def test_dim_equals_degree_by_kernel_span(kind, rng):
    for _ in range(5):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 7))
        theta = random_bp(rng, kind, m, n)
        assert inner_degree(kind, theta) == n
        kb = build_basis_from_kernels(kind, theta.rational)
        assert kb.dim == n
        pb = build_basis(theta)
        # the two bases span the same space
        for e in kb.basis:
            assert projection_residual(pb, e) < 1e-9


def test_kernel_section_examples():
    b = build_basis(bp(D, 1, [(0, [1])]))
    assert np.allclose(kernel_section(b, 0).matrix.eval_many(np.array([0.2, -0.5j])), 1.0)
    b = build_basis(bp(D, 1, [(0, [1]), (0, [1])]))
    K0 = kernel_section(b, 0).column([1.0])
    assert np.allclose(K0.eval(0.4), 1.0)
    assert abs(inner_quad(D, poly(0, 1), K0)) < 1e-12


def test_kernel_invariants(kind, rng):
    theta = random_bp(rng, kind, 2, 3)
    b = build_basis(theta)
    a, c = random_point(rng, kind), random_point(rng, kind)
    Ka, Kc = kernel_section(b, a), kernel_section(b, c)
    assert np.allclose(Ka.matrix.eval(c), Kc.matrix.eval(a).conj().T, atol=1e-12)
    lam = random_point(rng, kind)
    ref = (np.eye(2) - theta(lam) @ theta(a).conj().T) / (1 - lam * np.conj(a)) if kind is D else None
    if ref is not None:
        assert np.allclose(Ka(lam), ref, atol=1e-12)
    assert np.linalg.eigvalsh(Ka.matrix.eval(a)).min() > -1e-12


def test_reproducing_property(kind, rng):
    theta = random_bp(rng, kind, 3, 4)
    b = build_basis(theta)
    for _ in range(5):
        c = rng.normal(size=b.dim) + 1j * rng.normal(size=b.dim)
        f = b.combine(c)
        w, u = random_point(rng, kind), random_unit_vector(rng, 3)
        lhs = np.vdot(project(b, kernel_section(b, w).column(u)), c)  # <f, K_w u>
        rhs = np.vdot(u, f.eval(w)[:, 0])
        assert abs(lhs - rhs) < 1e-10 * (1 + np.linalg.norm(c))


def test_kernel_block_gram_positive(kind, rng):
    theta = random_bp(rng, kind, 2, 4)
    b = build_basis(theta)
    pts = random_points(rng, kind, 3)
    sections = [kernel_section(b, w) for w in pts]
    G = np.block([[K.matrix.eval(z) for K in sections] for z in pts])
    assert np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min() > -1e-10


def test_project_examples(rng):
    b = build_basis(bp(D, 1, [(0, [1])]))
    assert project(b, MatRational.constant([[1.0]])) == pytest.approx(b.basis[0].eval(0)[0, 0].conjugate())
    theta = random_bp(rng, D, 2, 3)
    b = build_basis(theta)
    g = MatRational.polynomial([[[1.0], [2j]], [[0.5], [-1.0]]])
    assert np.linalg.norm(project(b, theta.rational @ g)) < 1e-10


def test_project_l2_element_against_lstsq(rng):
    """f = 1/lam lives in L^2 (-) H^2; for Theta = lam * Theta~ compare with a dense least-squares fit."""
    theta = bp(D, 1, [(0, [1]), (0.4 - 0.3j, [1]), (-0.5, [1])])
    b = build_basis(theta)
    f = MatRational(np.ones((1, 1, 1)), [0.0])
    c = project(b, f)
    assert np.linalg.norm(c) < 1e-12
    h = f + b.basis[1] * 2.0
    grid = boundary_grid(D, 256)
    ref = lstsq_projection(b.values(grid.nodes), h.eval_many(grid.nodes)[:, :, 0], grid.weights)
    assert np.allclose(project(b, h), ref, atol=1e-10)


def test_project_idempotent(kind, rng):
    b = build_basis(random_bp(rng, kind, 2, 3))
    f = random_h2_function(rng, kind, 2)
    c = project(b, f)
    assert np.allclose(project(b, b.combine(c)), c, atol=1e-12)


def test_backward_shift_examples():
    b = build_basis(bp(D, 1, [(0, [1]), (0, [1])]))
    assert np.allclose(backward_shift(b, 0.3, poly(1)).eval(0.2), 0)
    assert np.allclose(backward_shift(b, 0, poly(0, 1)).eval(0.9), 1)


def test_backward_shift_invariance(kind, rng):
    b = build_basis(random_bp(rng, kind, 2, 3))
    for _ in range(5):
        f = b.combine(rng.normal(size=3) + 1j * rng.normal(size=3))
        r = backward_shift(b, random_point(rng, kind), f)
        assert projection_residual(b, r) < 1e-9


def test_backward_shift_rejects_outside(rng):
    theta = random_bp(rng, D, 1, 2)
    b = build_basis(theta)
    with pytest.raises(NotInSpaceError):
        backward_shift(b, 0.1, theta.rational @ MatRational.constant([[1.0]]))


@pytest.mark.parametrize(
    "factors, m, alpha, dims",
    [
        ([(0, [1]), (0, [1])], 1, 0, (2, 1, 1)),
        ([(0, [1])], 1, 0.5, (1, 1, 0)),
        ([(0, [1, 0])], 2, 0.5, (1, 1, 0)),
    ],
)
def test_subspace_dims_examples(factors, m, alpha, dims):
    b = build_basis(bp(D, m, factors))
    d = subspace_dims(b, alpha)
    assert (d.dim_H, d.dim_M, d.dim_H_alpha) == dims


def test_rank_consistent_with_svd(kind, rng):
    for _ in range(10):
        m = int(rng.integers(1, 4))
        theta = random_bp(rng, kind, m, int(rng.integers(1, 6)))
        b = build_basis(theta)
        a = random_point(rng, kind)
        assert subspace_dims(b, a).dim_M == m - point_svd(theta, a).k


def test_decomposition_projectors(kind, rng):
    b = build_basis(random_bp(rng, kind, 2, 5))
    a = random_point(rng, kind)
    P_m, P_h = decomposition_projectors(b, a)
    assert np.allclose(P_m + P_h, np.eye(5), atol=1e-10)
    assert np.allclose(P_m @ P_h, 0, atol=1e-10)
    # H(Theta)_alpha = functions vanishing at alpha
    assert np.allclose(b.evaluation_matrix(a) @ P_h, 0, atol=1e-10)


def test_repeated_zero_supported():
    theta = bp(D, 2, [(0.3, [1, 0]), (0.3, [1, 0]), (0.3, [0, 1])])
    b = build_basis(theta)
    assert b.dim == 3 and b.gram_residual < 1e-10


def test_constant_inner_function_rejected():
    with pytest.raises(RankDeficiencyError):
        build_basis(bp(D, 2, []))


def test_norm_helper():
    assert norm(D, MatRational.linear_inverse(-0.5, 2.0)) == pytest.approx(np.sqrt(4 / 3), rel=1e-13)
