"""Unitary changes of variable between model spaces.

Every map here has the form ``(V f)(lam) = w(lam) f(phi(lam))`` with a
scalar rational weight ``w`` and a Mobius map ``phi``:

* recentering inside one domain, ``phi = phi_alpha`` sends the reference
  point (0, i or 1) to ``alpha``;
* Cayley transfers from the disc, ``phi(mu) = (mu - i)/(mu + i)`` to the upper
  half-plane and ``phi(mu) = (mu - 1)/(mu + 1)`` to the right half-plane.

``V`` carries ``H(Theta)`` onto ``H(Theta o phi)`` and intertwines the basic
operators, ``V A_alpha = c A_beta V`` with ``phi(beta) = alpha`` and a
unimodular constant ``c`` (equal to one for the standard choices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from modelnorm.basicop import assemble, disc_limit_vector
from modelnorm.domains import (
    DomainKind,
    blaschke,
    boundary_grid,
    cayley_from_disc,
    converge,
    phi_mobius,
    reference_point,
    require_in_domain,
    sharp,
)
from modelnorm.errors import ConfigError
from modelnorm.inner import BlaschkePotapov, check_inner
from modelnorm.instances import random_h2_function
from modelnorm.modelspace import (
    ModelSpaceBasis,
    build_basis,
    build_basis_from_kernels,
    project,
    projection_residual,
    quadrature_gram,
    stacked_values,
)
from modelnorm.rational import MatRational

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True, eq=False)
class TransferMap:
    """``f -> weight * (f o mobius)`` from ``source_kind`` to ``target_kind``.

    ``alpha`` is the source point whose basic operator is carried to the
    basic operator at ``target_point``.
    """

    source_kind: DomainKind
    target_kind: DomainKind
    alpha: complex
    target_point: complex
    weight: MatRational
    mobius: tuple[complex, complex, complex, complex]

    def forward(self, f: MatRational) -> MatRational:
        return self.weight * f.compose(*self.mobius)

    __call__ = forward

    def theta_transform(self, theta) -> MatRational:
        """``Theta o phi`` as a rational function (not refactored into Potapov form)."""
        if isinstance(theta, BlaschkePotapov):
            theta = theta.rational
        return theta.compose(*self.mobius)

    def mobius_at(self, lam):
        a, b, c, d = self.mobius
        lam = np.asarray(lam, dtype=complex)
        return (a * lam + b) / (c * lam + d)

    def phase(self) -> complex:
        """Unimodular ``c`` with ``b_alpha o phi = c b_beta`` (checked at a boundary point)."""
        mu = boundary_grid(self.target_kind, 8).nodes[3]
        lhs = blaschke(self.source_kind, self.alpha, self.mobius_at(mu))
        return complex(lhs / blaschke(self.target_kind, self.target_point, mu))


def recenter(kind, alpha: complex) -> TransferMap:
    """``V_alpha``: carries ``A_alpha`` on ``H(Theta)`` to ``A_ref`` on ``H(Theta o phi_alpha)``."""
    kind = DomainKind.parse(kind)
    alpha = require_in_domain(kind, alpha)
    mob = phi_mobius(kind, alpha)
    if kind is DomainKind.DISC:
        s = np.sqrt(1.0 - abs(alpha) ** 2)
        if alpha == 0:
            weight = MatRational.constant([[1.0]])
        else:
            # sqrt(1-|a|^2) / (1 + conj(a) lam)
            weight = MatRational.linear_inverse(np.conj(alpha) / s, -1.0 / np.conj(alpha))
    elif kind is DomainKind.UPPER:
        weight = MatRational.constant([[np.sqrt(alpha.imag)]])
    else:
        weight = MatRational.constant([[np.sqrt(alpha.real)]])
    return TransferMap(kind, kind, alpha, reference_point(kind), weight, mob)


def cayley(target, alpha: complex = 0.0) -> TransferMap:
    """Disc to ``target`` (upper or right half-plane).

    ``alpha`` is a disc point; the matching target point is its Cayley image
    (``i`` or ``1`` for ``alpha = 0``).
    """
    target = DomainKind.parse(target)
    alpha = require_in_domain(DomainKind.DISC, alpha)
    if target is DomainKind.UPPER:
        weight = MatRational.linear_inverse(SQRT_PI, -1j)
        mob = (1.0 + 0j, -1j, 1.0 + 0j, 1j)
    elif target is DomainKind.RIGHT:
        weight = MatRational.linear_inverse(SQRT_PI, -1.0)
        mob = (1.0 + 0j, -1.0 + 0j, 1.0 + 0j, 1.0 + 0j)
    else:
        raise ConfigError("Cayley target must be the upper or the right half-plane")
    beta = complex(cayley_from_disc(target, alpha))
    return TransferMap(DomainKind.DISC, target, alpha, beta, weight, mob)


def transfer_map(kind, target: str, alpha: complex) -> TransferMap:
    """CLI dispatch: ``target`` in {recenter, upper, right}."""
    kind = DomainKind.parse(kind)
    if target == "recenter":
        return recenter(kind, alpha)
    if kind is not DomainKind.DISC:
        raise ConfigError(f"Cayley transfer starts from the disc, got domain {kind.value}")
    return cayley(target, alpha)


def target_basis(tmap: TransferMap, source: ModelSpaceBasis) -> ModelSpaceBasis:
    """Basis of ``H(Theta o phi)`` from kernel sections at generic points."""
    theta_t = tmap.theta_transform(source.theta)
    return build_basis_from_kernels(tmap.target_kind, theta_t, dim=source.dim)


def check_theta_transform(tmap: TransferMap, theta) -> tuple[float, float]:
    """Innerness of ``Theta o phi`` (interior excess, boundary defect)."""
    theta_t = tmap.theta_transform(theta)
    return check_inner(tmap.target_kind, theta_t.eval_many, theta_t.rows)


def unitarity_residual(tmap: TransferMap, funcs: list[MatRational]) -> float:
    """``max |<V f_i, V f_j> - <f_i, f_j>|`` over the given functions."""
    images = [tmap.forward(f) for f in funcs]

    def gram(kind, fs):
        def compute(g):
            return quadrature_gram(stacked_values(fs, g.nodes), g.weights)

        return converge(kind, compute, atol=1e-15)[0]

    G0 = gram(tmap.source_kind, funcs)
    G1 = gram(tmap.target_kind, images)
    return float(np.max(np.abs(G0 - G1)))


@dataclass(frozen=True, eq=False)
class TransferReport:
    source_kind: DomainKind
    target_kind: DomainKind
    alpha: complex
    target_point: complex
    source_norm: float
    target_norm: float
    difference: float
    coordinate_unitarity: float
    image_residual: float
    intertwining_residual: float
    unitarity_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.difference, self.coordinate_unitarity, self.image_residual, self.intertwining_residual, self.unitarity_residual)

    def as_dict(self) -> dict:
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "source_domain": self.source_kind.value,
            "target_domain": self.target_kind.value,
            "alpha": pair(self.alpha),
            "target_point": pair(self.target_point),
            "source_norm": self.source_norm,
            "target_norm": self.target_norm,
            "difference": self.difference,
            "coordinate_unitarity": self.coordinate_unitarity,
            "image_residual": self.image_residual,
            "intertwining_residual": self.intertwining_residual,
            "unitarity_residual": self.unitarity_residual,
        }


def transfer_report(
    tmap: TransferMap,
    theta: BlaschkePotapov,
    source: ModelSpaceBasis | None = None,
    n_random: int = 20,
    seed: int = 0,
) -> TransferReport:
    """Norms on both sides, the coordinate matrix of ``V`` and the intertwining defect."""
    if theta.kind is not tmap.source_kind:
        raise ConfigError(f"map starts in {tmap.source_kind.value}, Theta lives in {theta.kind.value}")
    if source is None:
        source = build_basis(theta)
    tgt = target_basis(tmap, source)
    A0 = assemble(source, tmap.alpha)
    A1 = assemble(tgt, tmap.target_point)
    images = [tmap.forward(e) for e in source.basis]
    T = np.stack([project(tgt, g) for g in images], axis=1)
    image_res = max(projection_residual(tgt, g) for g in images)
    c = tmap.phase()
    inter = float(np.linalg.norm(T @ A0.mat - c * A1.mat @ T))
    rng = np.random.default_rng(seed)
    funcs = [random_h2_function(rng, tmap.source_kind, source.m) for _ in range(n_random)]
    unit = unitarity_residual(tmap, funcs) if funcs else 0.0
    return TransferReport(
        source_kind=tmap.source_kind,
        target_kind=tmap.target_kind,
        alpha=tmap.alpha,
        target_point=tmap.target_point,
        source_norm=A0.norm,
        target_norm=A1.norm,
        difference=abs(A0.norm - A1.norm),
        coordinate_unitarity=float(np.max(np.abs(T.conj().T @ T - np.eye(source.dim)))),
        image_residual=image_res,
        intertwining_residual=inter,
        unitarity_residual=unit,
    )


def limit_vector_check(theta: BlaschkePotapov, f: MatRational, target=DomainKind.UPPER) -> float:
    """Compare the disc limit vector ``u`` with its Cayley counterpart.

    Upper: ``2i (Theta_0^# V f)(-i) = -u / sqrt(pi)``.
    Right: ``2 (Theta_1^# V f)(-1) = -u / sqrt(pi)``.
    """
    if theta.kind is not DomainKind.DISC:
        raise ConfigError("limit_vector_check needs Theta on the disc")
    target = DomainKind.parse(target)
    basis = build_basis(theta)
    u = disc_limit_vector(basis, f).reshape(-1)
    tmap = cayley(target)
    h = sharp(target, tmap.theta_transform(theta)) @ tmap.forward(f)
    if target is DomainKind.UPPER:
        lhs = 2j * h.eval_removable(-1j)[:, 0]
    else:
        lhs = 2.0 * h.eval_removable(-1.0)[:, 0]
    return float(np.linalg.norm(lhs + u / SQRT_PI))
