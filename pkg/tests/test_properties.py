"""Property tests over randomly drawn instances."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from modelnorm.basicop import adjoint_norm_identity, assemble, assemble_adjoint, verify_norm
from modelnorm.debranges import build_space, from_inner, kernel_db, verify_debranges, weighted_inner
from modelnorm.domains import DomainKind, blaschke, boundary_grid, cayley_from_disc, cayley_to_disc, in_domain
from modelnorm.inner import check_inner, point_svd
from modelnorm.instances import random_bp, random_h2_function, random_point, random_points, random_polynomial_eplus
from modelnorm.modelspace import build_basis, kernel_section, membership_residual
from modelnorm.rational import MatRational
from modelnorm.transfer import cayley, recenter, unitarity_residual

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

kinds = st.sampled_from(list(DomainKind))
seeds = st.integers(min_value=0, max_value=2**32 - 1)
ms = st.integers(min_value=1, max_value=3)
ns = st.integers(min_value=1, max_value=5)
coord = st.floats(min_value=-0.95, max_value=0.95, allow_nan=False)


@st.composite
def interior_points(draw, kind):
    x, y = draw(coord), draw(coord)
    z = complex(x, y)
    if kind is DomainKind.DISC:
        return z * 0.99 if abs(z) < 1 else z / (abs(z) + 0.05)
    # map the square into the half-plane
    return complex(cayley_from_disc(kind, z / (abs(z) + 0.05) if abs(z) >= 1 else z))


@SETTINGS
@given(kinds, st.data())
def test_blaschke_factor_bounds(kind, data):
    a = data.draw(interior_points(kind))
    z = data.draw(interior_points(kind))
    assert in_domain(kind, a) and in_domain(kind, z)
    assert abs(blaschke(kind, a, z)) < 1 + 1e-14
    nodes = boundary_grid(kind, 32).nodes
    assert np.allclose(np.abs(blaschke(kind, a, nodes)), 1, atol=1e-12)


@SETTINGS
@given(st.sampled_from([DomainKind.UPPER, DomainKind.RIGHT]), st.data())
def test_cayley_roundtrip(kind, data):
    z = data.draw(interior_points(DomainKind.DISC))
    w = cayley_from_disc(kind, z)
    assert in_domain(kind, complex(w))
    assert abs(cayley_to_disc(kind, w) - z) < 1e-10


@SETTINGS
@given(seeds)
def test_rational_arithmetic(seed):
    rng = np.random.default_rng(seed)
    f = random_h2_function(rng, DomainKind.DISC, 2)
    g = random_h2_function(rng, DomainKind.DISC, 2)
    z = random_points(rng, DomainKind.DISC, 5)
    fz, gz = f.eval_many(z), g.eval_many(z)
    assert np.allclose((f + g).eval_many(z), fz + gz, rtol=1e-12, atol=1e-12)
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = MatRational.constant(M) @ f
    assert np.allclose(h.eval_many(z), M[None] @ fz, rtol=1e-12, atol=1e-12)
    k = random_h2_function(rng, DomainKind.DISC, 1)
    prod = f * MatRational.constant([[0.5 - 1j]])
    assert np.allclose(prod.eval_many(z), (0.5 - 1j) * fz, rtol=1e-12, atol=1e-12)
    scaled = k @ MatRational.constant([[1.0, 2j]])
    assert np.allclose(scaled.eval_many(z), k.eval_many(z) @ np.array([[1.0, 2j]]), rtol=1e-12, atol=1e-12)


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_bp_is_inner(kind, m, n, seed):
    theta = random_bp(np.random.default_rng(seed), kind, m, n)
    excess, defect = check_inner(kind, theta, m)
    assert excess < 1e-10 and defect < 1e-10


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_model_space_dimension_and_membership(kind, m, n, seed):
    b = build_basis(random_bp(np.random.default_rng(seed), kind, m, n))
    assert b.dim == n
    assert membership_residual(b) < 1e-9


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_operator_contraction_and_adjoint(kind, m, n, seed):
    rng = np.random.default_rng(seed)
    b = build_basis(random_bp(rng, kind, m, n))
    a = random_point(rng, kind)
    A, As = assemble(b, a), assemble_adjoint(b, a)
    assert A.norm <= 1 + 1e-10
    assert np.linalg.norm(As.mat - A.mat.conj().T) < 1e-9


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_norm_identity(kind, m, n, seed):
    rng = np.random.default_rng(seed)
    b = build_basis(random_bp(rng, kind, m, n))
    a = random_point(rng, kind)
    f = b.combine(rng.normal(size=n) + 1j * rng.normal(size=n))
    assert adjoint_norm_identity(b, a, f)["residual"] < 1e-10


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_closed_form_matches_oracle(kind, m, n, seed):
    rng = np.random.default_rng(seed)
    r = verify_norm(random_bp(rng, kind, m, n), random_point(rng, kind))
    assert r.abs_diff < 1e-8
    assert (r.dims.dim_H_alpha > 0) == (abs(r.oracle_norm - 1) < 1e-8)


@SETTINGS
@given(kinds, ms, seeds)
def test_singular_values_in_unit_interval(kind, m, seed):
    rng = np.random.default_rng(seed)
    theta = random_bp(rng, kind, m, 3)
    svd = point_svd(theta, random_point(rng, kind))
    assert np.all(svd.s >= -1e-15) and np.all(svd.s <= 1 + 1e-12)
    assert np.all(np.diff(svd.s) <= 1e-15)


@SETTINGS
@given(kinds, ms, seeds)
def test_kernel_positivity(kind, m, seed):
    rng = np.random.default_rng(seed)
    b = build_basis(random_bp(rng, kind, m, 3))
    pts = random_points(rng, kind, 3)
    G = np.block([[kernel_section(b, w).matrix.eval(z) for w in pts] for z in pts])
    assert np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min() > -1e-10


@SETTINGS
@given(kinds, seeds)
def test_recenter_unitary(kind, seed):
    rng = np.random.default_rng(seed)
    tmap = recenter(kind, random_point(rng, kind))
    funcs = [random_h2_function(rng, kind, 2) for _ in range(5)]
    assert unitarity_residual(tmap, funcs) < 1e-10


@SETTINGS
@given(st.sampled_from([DomainKind.UPPER, DomainKind.RIGHT]), seeds)
def test_cayley_unitary(target, seed):
    rng = np.random.default_rng(seed)
    funcs = [random_h2_function(rng, DomainKind.DISC, 2) for _ in range(5)]
    assert unitarity_residual(cayley(target), funcs) < 1e-10


@SETTINGS
@given(kinds, ms, ns, seeds)
def test_debranges_closed_form(kind, m, n, seed):
    rng = np.random.default_rng(seed)
    theta = random_bp(rng, kind, m, n)
    matrix = from_inner(theta, random_polynomial_eplus(rng, kind, m, 1))
    r = verify_debranges(matrix, random_point(rng, kind))
    assert r.abs_diff < 1e-8 and r.identity_residual < 1e-10 and r.gram_residual < 1e-10


@SETTINGS
@given(kinds, seeds)
def test_debranges_hermitian_symmetry(kind, seed):
    rng = np.random.default_rng(seed)
    theta = random_bp(rng, kind, 2, 2)
    space = build_space(from_inner(theta, random_polynomial_eplus(rng, kind, 2, 1)))
    w = random_point(rng, kind)
    f = kernel_db(space.matrix, w) @ MatRational.constant(np.array([[1.0], [1j]]))
    g = random_h2_function(rng, kind, 2)
    assert abs(weighted_inner(space, f, g) - np.conj(weighted_inner(space, g, f))) < 1e-13 * (
        1 + abs(weighted_inner(space, f, g))
    )
