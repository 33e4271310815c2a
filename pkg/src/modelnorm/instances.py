"""Seeded random instances for sweeps and tests.

Points are drawn in the disc of radius ``radius`` and carried to the half-
planes by the Cayley map, which keeps every pole a fixed hyperbolic distance
from the boundary and therefore bounds the quadrature size.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc, unitary_group

from modelnorm.domains import DomainKind, cayley_from_disc
from modelnorm.inner import BlaschkePotapov, BPFactor, build
from modelnorm.rational import MatRational

DEFAULT_RADIUS = 0.8


def random_points(rng: np.random.Generator, kind: DomainKind, count: int, radius: float = DEFAULT_RADIUS) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=count))
    z = r * np.exp(2j * np.pi * rng.uniform(size=count))
    return np.asarray(cayley_from_disc(kind, z)).reshape(count)


def random_point(rng: np.random.Generator, kind: DomainKind, radius: float = DEFAULT_RADIUS) -> complex:
    return complex(random_points(rng, kind, 1, radius)[0])


def random_unit_vector(rng: np.random.Generator, m: int) -> np.ndarray:
    v = rng.normal(size=m) + 1j * rng.normal(size=m)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, m: int) -> np.ndarray:
    if m == 1:
        return np.array([[np.exp(2j * np.pi * rng.uniform())]])
    return unitary_group.rvs(m, random_state=rng)


def random_bp(
    rng: np.random.Generator, kind: DomainKind, m: int, n: int, radius: float = DEFAULT_RADIUS
) -> BlaschkePotapov:
    zeros = random_points(rng, kind, n, radius)
    factors = [BPFactor(a, random_unit_vector(rng, m)) for a in zeros]
    return build(kind, m, random_unitary(rng, m), factors)


def generic_points(kind: DomainKind, count: int, radius: float = 0.9, seed: int = 7) -> np.ndarray:
    """Scrambled Halton points in Omega_+ (reproducible, well spread).

    Kernel Gram matrices at clustered points are exponentially ill-conditioned;
    spreading the points out to radius 0.9 (in disc coordinates) keeps them usable.
    """
    sample = qmc.Halton(d=2, scramble=True, seed=seed).random(count)
    z = radius * np.sqrt(sample[:, 0]) * np.exp(2j * np.pi * sample[:, 1])
    return np.asarray(cayley_from_disc(kind, z)).reshape(count)


def random_h2_function(
    rng: np.random.Generator, kind: DomainKind, m: int, terms: int = 3, radius: float = DEFAULT_RADIUS
) -> MatRational:
    """Random vector function in H^2_m: a combination of Szego kernels."""
    from modelnorm.domains import rho_factor

    out = None
    for w in random_points(rng, kind, terms, radius):
        scale, root = rho_factor(kind, w)
        coef = rng.normal(size=(m, 1)) + 1j * rng.normal(size=(m, 1))
        term = MatRational.constant(coef).divide_linear(scale, root)
        out = term if out is None else out + term
    return out


def random_polynomial_eplus(
    rng: np.random.Generator, kind: DomainKind, m: int, degree: int = 1
) -> MatRational:
    """Matrix polynomial ``W1 diag(p_j) W2`` whose determinant has every zero in Omega_-."""
    diag_polys = []
    for _ in range(m):
        coeffs = np.array([1.0 + 0j])
        for _ in range(degree):
            z = complex(random_points(rng, kind, 1, 0.7)[0])
            if kind is DomainKind.DISC:
                zero = 1.0 / np.conj(z)
            elif kind is DomainKind.UPPER:
                zero = np.conj(z)
            else:
                zero = -np.conj(z)
            coeffs = np.convolve(coeffs, np.array([-zero, 1.0]))
        diag_polys.append(coeffs / np.max(np.abs(coeffs)))
    width = max(c.size for c in diag_polys)
    num = np.zeros((width, m, m), dtype=complex)
    for j, c in enumerate(diag_polys):
        num[: c.size, j, j] = c
    W1, W2 = random_unitary(rng, m), random_unitary(rng, m)
    return MatRational(W1[None] @ num @ W2[None], np.zeros(0))
