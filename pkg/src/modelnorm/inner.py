"""Finite Blaschke-Potapov products and pointwise SVD of Theta(alpha).

Convention: ``Theta = U * theta_1 * ... * theta_n`` with rank-one factors

    theta_k(lam) = I + (b_{alpha_k}(lam) - 1) v_k v_k^*.

Factors never commute in general, so their order is preserved everywhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from modelnorm.domains import (
    DomainKind,
    blaschke,
    blaschke_rational,
    boundary_grid,
    cayley_from_disc,
    in_domain,
    require_in_domain,
)
from modelnorm.errors import (
    DomainError,
    NotInnerError,
    NotUnitaryError,
    PoleError,
    SchemaError,
    ZeroVectorError,
)
from modelnorm.rational import MatRational

TOL_SV = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BPFactor:
    alpha: complex
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex).reshape(-1)
        nv = np.linalg.norm(v)
        if nv < 1e-14:
            raise ZeroVectorError("Blaschke-Potapov direction vector is zero")
        object.__setattr__(self, "v", v / nv)
        object.__setattr__(self, "alpha", complex(self.alpha))

    def projector(self) -> np.ndarray:
        return np.outer(self.v, np.conj(self.v))

    def rational(self, kind: DomainKind) -> MatRational:
        m = self.v.size
        b = blaschke_rational(kind, self.alpha)
        return MatRational.identity(m) + (b - 1.0) * MatRational.constant(self.projector())

    def __call__(self, kind: DomainKind, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        b = np.asarray(blaschke(kind, self.alpha, lam))
        eye = np.eye(self.v.size, dtype=complex)
        return eye + (b - 1.0)[..., None, None] * self.projector()


@dataclass(frozen=True, eq=False)
class BlaschkePotapov:
    """Validated m x m rational inner function of degree ``len(factors)``."""

    kind: DomainKind
    m: int
    constant: np.ndarray
    factors: tuple[BPFactor, ...] = field(default_factory=tuple)

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __call__(self, lam) -> np.ndarray:
        """Factorwise evaluation; shape ``lam.shape + (m, m)``."""
        lam = np.asarray(lam, dtype=complex)
        out = np.broadcast_to(self.constant, lam.shape + (self.m, self.m)).copy()
        for fac in self.factors:
            out = out @ fac(self.kind, lam)
        return out

    def partial_rational(self, k: int) -> MatRational:
        """``U theta_1 ... theta_k`` as a rational function."""
        out = MatRational.constant(self.constant)
        for fac in self.factors[:k]:
            out = out @ fac.rational(self.kind)
        return out

    @cached_property
    def rational(self) -> MatRational:
        return self.partial_rational(self.degree)

    def as_rational(self) -> MatRational:
        return self.rational

    def poles(self) -> np.ndarray:
        return self.rational.den_roots

    def to_json(self) -> dict:
        return {
            "domain": self.kind.value,
            "m": self.m,
            "constant": [[[float(z.real), float(z.imag)] for z in row] for row in self.constant],
            "factors": [
                {"alpha": [fac.alpha.real, fac.alpha.imag], "v": [[float(z.real), float(z.imag)] for z in fac.v]}
                for fac in self.factors
            ],
        }

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]


def _pair(x, what: str) -> complex:
    try:
        re, im = x
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: expected [re, im], got {x!r}") from exc


def from_json(obj: dict | str) -> BlaschkePotapov:
    """Parse ``{"domain", "m", "constant", "factors": [{"alpha", "v"}]}``."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise SchemaError("inner-function spec must be a JSON object")
    try:
        kind = DomainKind.parse(obj["domain"])
        m = int(obj["m"])
    except KeyError as exc:
        raise SchemaError(f"inner-function spec missing key {exc}") from exc
    if m < 1:
        raise SchemaError(f"m must be positive, got {m}")
    if "constant" in obj and obj["constant"] is not None:
        const = np.array([[_pair(z, "constant") for z in row] for row in obj["constant"]], dtype=complex)
    else:
        const = np.eye(m, dtype=complex)
    factors = []
    for i, fac in enumerate(obj.get("factors", [])):
        try:
            alpha = _pair(fac["alpha"], f"factors[{i}].alpha")
            v = [_pair(z, f"factors[{i}].v") for z in fac["v"]]
        except KeyError as exc:
            raise SchemaError(f"factors[{i}] missing key {exc}") from exc
        factors.append(BPFactor(alpha, np.array(v)))
    return build(kind, m, const, factors)


def _interior_samples(kind: DomainKind, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = 0.95 * np.sqrt(rng.uniform(size=count))
    z = r * np.exp(2j * np.pi * rng.uniform(size=count))
    return np.asarray(cayley_from_disc(kind, z))


def check_inner(
    kind: DomainKind,
    theta,
    m: int,
    interior: int = 50,
    boundary: int = 64,
    tol_interior: float = 1e-12,
    tol_boundary: float = 1e-10,
) -> tuple[float, float]:
    """Contractive inside, unitary on the boundary.

    ``theta`` is any callable accepting an array of points.  Returns the
    worst interior excess ``max eig(Theta^* Theta) - 1`` and the worst
    boundary defect ``||Theta^* Theta - I||``; raises NotInnerError past the
    tolerances.
    """
    pts = _interior_samples(kind, interior)
    vals = np.asarray(theta(pts))
    excess = max(float(np.max(np.linalg.eigvalsh(v.conj().T @ v))) - 1.0 for v in vals)
    grid = boundary_grid(kind, boundary)
    bvals = np.asarray(theta(grid.nodes))
    eye = np.eye(m)
    defect = max(float(np.max(np.abs(v.conj().T @ v - eye))) for v in bvals)
    if excess > tol_interior:
        raise NotInnerError(f"Theta is not contractive in Omega_+ (max eigenvalue excess {excess:.3e})")
    if defect > tol_boundary:
        raise NotInnerError(f"Theta is not unitary on the boundary (defect {defect:.3e})")
    return excess, defect


def build(kind, m: int, constant, factors: Sequence[BPFactor | tuple]) -> BlaschkePotapov:
    """Validate and assemble a Blaschke-Potapov product."""
    kind = DomainKind.parse(kind)
    const = np.atleast_2d(np.asarray(constant, dtype=complex))
    if const.shape != (m, m):
        raise SchemaError(f"constant must be {m}x{m}, got {const.shape}")
    if np.max(np.abs(const.conj().T @ const - np.eye(m))) > 1e-13:
        raise NotUnitaryError("constant factor is not unitary to 1e-13")
    facs = []
    for fac in factors:
        if not isinstance(fac, BPFactor):
            fac = BPFactor(*fac)
        if fac.v.size != m:
            raise SchemaError(f"factor vector has length {fac.v.size}, expected {m}")
        if not in_domain(kind, fac.alpha):
            raise DomainError(f"factor zero alpha_k not in Omega_+ (alpha_k={fac.alpha}, domain={kind.value})")
        facs.append(fac)
    bp = BlaschkePotapov(kind, m, const, tuple(facs))
    check_inner(kind, bp, m)
    return bp


@dataclass(frozen=True, eq=False)
class PointSVD:
    """``Theta(alpha) = V diag(s) U^*`` with ``k`` singular values equal to one."""

    s: np.ndarray
    U: np.ndarray
    V: np.ndarray
    k: int

    def reconstruct(self) -> np.ndarray:
        return self.V @ np.diag(self.s) @ self.U.conj().T


def theta_at(theta, alpha: complex) -> np.ndarray:
    """``Theta(alpha)`` for a BlaschkePotapov, a MatRational or any callable."""
    val = theta(np.asarray(complex(alpha)))
    return np.atleast_2d(np.asarray(val, dtype=complex))


def _phase_normalize(V: np.ndarray, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    V, U = V.copy(), U.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.nonzero(np.abs(col) > 1e-14)[0]
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            V[:, j] /= ph
            U[:, j] /= ph
    return V, U


def _column_key(col: np.ndarray) -> tuple:
    return tuple(x for z in col for x in (round(z.real, 12), round(z.imag, 12)))


def point_svd(theta, alpha: complex, tol_sv: float = TOL_SV, kind: DomainKind | None = None) -> PointSVD:
    """Deterministic SVD of ``Theta(alpha)``.

    Columns are phase-normalized (first nonzero entry of each ``V`` column
    real positive) and, inside clusters of singular values equal to 1e-12,
    ordered lexicographically by the ``V`` columns.
    """
    kind = kind or getattr(theta, "kind", None)
    if kind is not None:
        require_in_domain(kind, alpha)
    try:
        A = theta_at(theta, alpha)
    except ZeroDivisionError as exc:
        raise PoleError(f"alpha={alpha} is a pole of Theta") from exc
    W, s, Xh = np.linalg.svd(A)
    V, U = _phase_normalize(W, Xh.conj().T)
    order = list(range(s.size))
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and abs(s[j + 1] - s[i]) <= TIE_TOL:
            j += 1
        if j > i:
            order[i : j + 1] = sorted(order[i : j + 1], key=lambda c: _column_key(V[:, c]))
        i = j + 1
    s, U, V = s[order], U[:, order], V[:, order]
    k = int(np.sum(s >= 1.0 - tol_sv))
    return PointSVD(s, U, V, k)


def n_alpha(theta, alpha: complex, kind: DomainKind | None = None) -> np.ndarray:
    """``N_alpha(alpha) = I - Theta(alpha) Theta(alpha)^*``."""
    kind = kind or getattr(theta, "kind", None)
    if kind is not None:
        require_in_domain(kind, alpha)
    A = theta_at(theta, alpha)
    return np.eye(A.shape[0]) - A @ A.conj().T
