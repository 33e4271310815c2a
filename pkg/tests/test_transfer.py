import numpy as np
import pytest

from conftest import KINDS, bp, poly
from modelnorm.basicop import assemble
from modelnorm.domains import DomainKind, blaschke, reference_point
from modelnorm.errors import ConfigError, DomainError
from modelnorm.instances import random_bp, random_h2_function, random_point
from modelnorm.modelspace import build_basis, project
from modelnorm.rational import MatRational
from modelnorm.transfer import (
    cayley,
    check_theta_transform,
    limit_vector_check,
    recenter,
    target_basis,
    transfer_map,
    transfer_report,
    unitarity_residual,
)

D, U, R = DomainKind.DISC, DomainKind.UPPER, DomainKind.RIGHT
CAYLEY_TARGETS = [U, R]


def test_recenter_disc_zero_is_identity(rng):
    V = recenter(D, 0)
    f = random_h2_function(rng, D, 2)
    z = np.array([0.1 + 0.2j, -0.5j, 0.7])
    assert np.allclose(V(f).eval_many(z), f.eval_many(z), atol=1e-15)
    assert V.target_point == 0


def test_recenter_disc_half():
    theta = bp(D, 1, [(0, [1])])
    rep = transfer_report(recenter(D, 0.5), theta)
    assert rep.source_norm == pytest.approx(0.5, abs=1e-10)
    assert rep.target_norm == pytest.approx(0.5, abs=1e-10)
    # Theta o phi_{1/2} is the Blaschke factor at -1/2 (up to a unimodular constant)
    tt = recenter(D, 0.5).theta_transform(theta)
    z = np.array([0.3, 0.1j, -0.6 + 0.2j])
    ratio = tt.eval_many(z)[:, 0, 0] / blaschke(D, -0.5, z)
    assert np.allclose(np.abs(ratio), 1) and np.allclose(ratio, ratio[0])


def test_recenter_upper_isometry(rng):
    V = recenter(U, 2 + 3j)
    funcs = [random_h2_function(rng, U, 1) for _ in range(10)]
    assert unitarity_residual(V, funcs) < 1e-10


def test_recenter_errors():
    with pytest.raises(DomainError):
        recenter(U, -1j)
    with pytest.raises(DomainError):
        recenter(R, -0.5)


def test_recenter_report(kind, rng):
    for m, n in [(1, 3), (2, 4), (3, 2)]:
        theta = random_bp(rng, kind, m, n)
        rep = transfer_report(recenter(kind, random_point(rng, kind)), theta)
        assert rep.difference < 1e-9
        assert rep.intertwining_residual < 1e-9
        assert rep.image_residual < 1e-9
        assert rep.coordinate_unitarity < 1e-9
        assert rep.unitarity_residual < 1e-10
        assert rep.target_point == reference_point(kind)


@pytest.mark.parametrize("target", CAYLEY_TARGETS, ids=lambda k: k.value)
def test_cayley_examples(target):
    rep = transfer_report(cayley(target), bp(D, 1, [(0, [1])]))
    assert rep.source_norm < 1e-12 and rep.target_norm < 1e-12
    rep = transfer_report(cayley(target), bp(D, 1, [(0, [1]), (0, [1])]))
    assert rep.source_norm == pytest.approx(1, abs=1e-10)
    assert rep.target_norm == pytest.approx(1, abs=1e-10)
    assert rep.target_point == reference_point(target)


def test_cayley_theta_lambda_is_upper_blaschke():
    tt = cayley(U).theta_transform(bp(D, 1, [(0, [1])]))
    mu = np.array([1j, 2 + 0.5j, -1 + 3j])
    assert np.allclose(tt.eval_many(mu)[:, 0, 0], (mu - 1j) / (mu + 1j))


@pytest.mark.parametrize("target", CAYLEY_TARGETS, ids=lambda k: k.value)
def test_cayley_random_scalar(target, rng):
    for _ in range(3):
        rep = transfer_report(cayley(target), random_bp(rng, D, 1, 3))
        assert rep.difference < 1e-9
        assert rep.intertwining_residual < 1e-9


@pytest.mark.parametrize("target", CAYLEY_TARGETS, ids=lambda k: k.value)
def test_cayley_nonzero_alpha(target, rng):
    theta = random_bp(rng, D, 2, 3)
    alpha = random_point(rng, D)
    tmap = cayley(target, alpha)
    assert abs(abs(tmap.phase()) - 1) < 1e-12
    rep = transfer_report(tmap, theta)
    assert rep.max_residual < 1e-9


def test_cayley_errors():
    with pytest.raises(ConfigError):
        cayley(D)
    with pytest.raises(ConfigError):
        transfer_map(U, "upper", 1j)


@pytest.mark.parametrize("target", CAYLEY_TARGETS, ids=lambda k: k.value)
def test_limit_vector_examples(target):
    one = MatRational.constant([[1.0]])
    assert limit_vector_check(bp(D, 1, [(0, [1])]), one, target) < 1e-12
    assert limit_vector_check(bp(D, 1, [(0, [1]), (0, [1])]), one, target) < 1e-9
    f = MatRational.constant([[1.0], [0.0]])
    assert limit_vector_check(bp(D, 2, [(0, [1, 0])]), f, target) < 1e-9


@pytest.mark.parametrize("target", CAYLEY_TARGETS, ids=lambda k: k.value)
def test_limit_vector_random(target, rng):
    theta = random_bp(rng, D, 2, 4)
    b = build_basis(theta)
    f = b.combine(rng.normal(size=4) + 1j * rng.normal(size=4))
    assert limit_vector_check(theta, f, target) < 1e-9


def test_theta_transform_inner(kind, rng):
    theta = random_bp(rng, kind, 2, 3)
    maps = [recenter(kind, random_point(rng, kind))]
    if kind is D:
        maps += [cayley(U), cayley(R, random_point(rng, D))]
    for tmap in maps:
        excess, defect = check_theta_transform(tmap, theta)
        assert excess < 1e-10 and defect < 1e-10


def test_unitarity_every_map(rng):
    maps = [recenter(k, random_point(rng, k)) for k in KINDS] + [cayley(U), cayley(R)]
    for tmap in maps:
        funcs = [random_h2_function(rng, tmap.source_kind, 2) for _ in range(20)]
        assert unitarity_residual(tmap, funcs) < 1e-10


def test_target_basis_dimension(rng):
    theta = random_bp(rng, D, 2, 5)
    src = build_basis(theta)
    tgt = target_basis(cayley(U), src)
    assert tgt.dim == src.dim
    g = cayley(U)(src.basis[0])
    assert np.linalg.norm(project(tgt, g)) == pytest.approx(1, abs=1e-10)
