"""The three domains Omega_+ (disc, upper and right half-planes).

Everything domain-dependent dispatches on :class:`DomainKind`: the kernel
denominator ``rho_omega``, Blaschke factors, the recentering maps
``phi_alpha``, the involution ``f -> f^#`` and the boundary quadrature.

Half-plane boundaries are integrated through the Cayley parametrization
``x = -cot(theta/2)`` so that the periodic trapezoid rule keeps its geometric
convergence for rational integrands:

    int_R h(x) dx = int_0^{2 pi} h(x(theta)) (1 + x(theta)^2) / 2 dtheta.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from modelnorm.errors import ConfigError, ConvergenceError, DomainError, PoleError, PoleOnBoundaryError
from modelnorm.rational import MatRational

T = TypeVar("T")

MAX_GRID_DEFAULT = 2**20
CONVERGENCE_RTOL = 1e-12


class DomainKind(enum.Enum):
    DISC = "disc"
    UPPER = "upper"
    RIGHT = "right"

    @classmethod
    def parse(cls, value) -> DomainKind:
        if isinstance(value, DomainKind):
            return value
        aliases = {
            "disc": cls.DISC,
            "d": cls.DISC,
            "upper": cls.UPPER,
            "upperhalfplane": cls.UPPER,
            "c+": cls.UPPER,
            "right": cls.RIGHT,
            "righthalfplane": cls.RIGHT,
            "cr": cls.RIGHT,
        }
        key = str(value).strip().lower().replace("_", "").replace(" ", "")
        if key not in aliases:
            raise DomainError(f"unknown domain {value!r}; expected disc, upper or right")
        return aliases[key]


def reference_point(kind: DomainKind) -> complex:
    """Base point of the recentering maps: 0, i or 1."""
    return {DomainKind.DISC: 0j, DomainKind.UPPER: 1j, DomainKind.RIGHT: 1 + 0j}[kind]


def rho(kind: DomainKind, omega: complex, lam):
    """Kernel denominator ``rho_omega(lam)``; vectorized over ``lam``."""
    lam = np.asarray(lam, dtype=complex)
    w = np.conj(complex(omega))
    if kind is DomainKind.DISC:
        out = 1.0 - lam * w
    elif kind is DomainKind.UPPER:
        out = -2j * np.pi * (lam - w)
    else:
        out = 2.0 * np.pi * (lam + w)
    return out[()] if out.ndim == 0 else out


def rho_factor(kind: DomainKind, omega: complex) -> tuple[complex, complex | None]:
    """``rho_omega(lam) = scale * (lam - root)``; root is None when rho is constant."""
    w = np.conj(complex(omega))
    if kind is DomainKind.DISC:
        if w == 0:
            return 1.0 + 0j, None
        return -w, 1.0 / w
    if kind is DomainKind.UPPER:
        return -2j * np.pi, w
    return 2.0 * np.pi + 0j, -w


def rho_rational(kind: DomainKind, omega: complex) -> MatRational:
    scale, root = rho_factor(kind, omega)
    if root is None:
        return MatRational.constant([[scale]])
    return MatRational.polynomial([-scale * root, scale])


def boundary_metric(kind: DomainKind, z) -> np.ndarray:
    """``rho_z(z)``: positive in Omega_+, zero on Omega_0, negative in Omega_-."""
    return _rho_diag(kind, np.asarray(z, dtype=complex))


def _rho_diag(kind: DomainKind, z: np.ndarray) -> np.ndarray:
    if kind is DomainKind.DISC:
        return 1.0 - np.abs(z) ** 2
    if kind is DomainKind.UPPER:
        return 4.0 * np.pi * z.imag
    return 4.0 * np.pi * z.real


def in_domain(kind: DomainKind, z: complex) -> bool:
    return bool(_rho_diag(kind, np.asarray(complex(z))) > 0)


def require_in_domain(kind: DomainKind, z: complex, name: str = "alpha") -> complex:
    z = complex(z)
    if not np.isfinite(z) or not in_domain(kind, z):
        raise DomainError(f"{name} not in Omega_+ ({name}={z}, domain={kind.value})")
    return z


def blaschke_pole(kind: DomainKind, alpha: complex) -> complex | None:
    """The excluded point of ``b_alpha``; None for the disc factor at 0."""
    a = complex(alpha)
    if kind is DomainKind.DISC:
        return None if a == 0 else 1.0 / np.conj(a)
    if kind is DomainKind.UPPER:
        return np.conj(a)
    return -np.conj(a)


def blaschke(kind: DomainKind, alpha: complex, lam):
    """Elementary Blaschke factor ``b_alpha(lam)``; vectorized over ``lam``."""
    alpha = require_in_domain(kind, alpha)
    lam = np.asarray(lam, dtype=complex)
    pole = blaschke_pole(kind, alpha)
    if pole is not None and np.any(np.abs(lam - pole) <= 1e-13 * (1 + abs(pole))):
        raise PoleError(f"b_alpha evaluated at its pole {pole}")
    if kind is DomainKind.DISC:
        out = (lam - alpha) / (1.0 - np.conj(alpha) * lam)
    elif kind is DomainKind.UPPER:
        out = (lam - alpha) / (lam - np.conj(alpha))
    else:
        out = (lam - alpha) / (lam + np.conj(alpha))
    return out[()] if out.ndim == 0 else out


def blaschke_rational(kind: DomainKind, alpha: complex) -> MatRational:
    """``b_alpha`` as a 1x1 rational function."""
    alpha = require_in_domain(kind, alpha)
    pole = blaschke_pole(kind, alpha)
    if pole is None:
        return MatRational.polynomial([0.0, 1.0])
    if kind is DomainKind.DISC:
        # (lam - a) / (1 - conj(a) lam) = (-1/conj(a)) (lam - a) / (lam - 1/conj(a))
        c = -1.0 / np.conj(alpha)
        return MatRational.polynomial([-alpha * c, c], [pole])
    return MatRational.polynomial([-alpha, 1.0], [pole])


def phi_mobius(kind: DomainKind, alpha: complex) -> tuple[complex, complex, complex, complex]:
    """Coefficients ``(a, b, c, d)`` of ``phi_alpha(lam) = (a lam + b) / (c lam + d)``."""
    alpha = require_in_domain(kind, alpha)
    if kind is DomainKind.DISC:
        return 1.0 + 0j, alpha, np.conj(alpha), 1.0 + 0j
    c, d = alpha.real, alpha.imag
    if kind is DomainKind.UPPER:
        return complex(d), complex(c), 0j, 1.0 + 0j
    return complex(c), 1j * d, 0j, 1.0 + 0j


def phi_alpha(kind: DomainKind, alpha: complex, lam):
    """Automorphism of Omega_+ taking the reference point to ``alpha``."""
    a, b, c, d = phi_mobius(kind, alpha)
    lam = np.asarray(lam, dtype=complex)
    den = c * lam + d
    if np.any(np.abs(den) <= 1e-13 * (abs(c) + abs(d))):
        raise PoleError("phi_alpha evaluated at its pole")
    out = (a * lam + b) / den
    return out[()] if out.ndim == 0 else out


def sharp(kind: DomainKind, f: MatRational) -> MatRational:
    """``f^#``: lam -> f(1/conj(lam))^* (disc), f(conj(lam))^* (upper), f(-conj(lam))^* (right).

    The disc formula is continued analytically through lam = 0.
    """
    cnum = f.conj_transpose_coeffs()
    roots = f.den_roots
    if kind is DomainKind.UPPER:
        return MatRational(cnum, np.conj(roots))
    if kind is DomainKind.RIGHT:
        signs = (-1.0) ** np.arange(cnum.shape[0])
        return MatRational(cnum * signs[:, None, None] * (-1.0) ** roots.size, -np.conj(roots))
    # disc: f = P / prod(lam - p_j) with deg P = d, D roots gives
    #   f^#(lam) = lam^(D-d) * Prev(lam) / prod(1 - conj(p_j) lam),  Prev = reversed P^*
    deg_p, n_roots = cnum.shape[0] - 1, roots.size
    big = max(deg_p, n_roots)
    num = np.zeros((big + 1,) + cnum.shape[1:], dtype=complex)
    num[big - deg_p :] = cnum[::-1]
    new_roots = [0j] * (big - n_roots)
    scale = 1.0 + 0j
    for p in roots:
        if p != 0:
            new_roots.append(1.0 / np.conj(p))
            scale *= -np.conj(p)
    return MatRational(num / scale, np.asarray(new_roots, dtype=complex))


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Quadrature nodes on Omega_0 with weights realizing the boundary inner product."""

    kind: DomainKind
    nodes: np.ndarray
    weights: np.ndarray
    size: int
    shift: float = 0.0

    def rotated(self) -> BoundaryGrid:
        """Same size, angles shifted to dodge a pole sitting on a node."""
        step = 0.5 if self.kind is DomainKind.DISC else 0.25
        return boundary_grid(self.kind, self.size, shift=(self.shift + step) % 1.0)

    def refined(self) -> BoundaryGrid:
        return boundary_grid(self.kind, 2 * self.size, shift=self.shift)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def max_grid() -> int:
    raw = os.environ.get("MODELSPACE_MAX_GRID")
    if raw is None:
        return MAX_GRID_DEFAULT
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MODELSPACE_MAX_GRID must be an integer, got {raw!r}") from exc
    _check_size(val)
    return val


def _check_size(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
        raise ConfigError(f"grid size must be a power of two >= 8, got {n!r}")


def boundary_grid(kind: DomainKind, N: int, shift: float | None = None) -> BoundaryGrid:
    """Trapezoid grid with ``N`` nodes on the boundary of Omega_+.

    ``shift`` is the angular offset in units of the step; the half-plane
    default of one half keeps the node at infinity out of the grid.
    """
    _check_size(N)
    kind = DomainKind.parse(kind)
    if shift is None:
        shift = 0.0 if kind is DomainKind.DISC else 0.5
    theta = 2.0 * np.pi * (np.arange(N) + shift) / N
    if kind is DomainKind.DISC:
        nodes = np.exp(1j * theta)
        weights = np.full(N, 1.0 / N)
    else:
        x = -1.0 / np.tan(theta / 2.0)
        weights = (np.pi / N) * (1.0 + x * x)
        nodes = x.astype(complex) if kind is DomainKind.UPPER else 1j * x
    return BoundaryGrid(kind, nodes, weights, N, float(shift))


def converge(
    kind: DomainKind,
    compute: Callable[[BoundaryGrid], T],
    n0: int = 32,
    rtol: float = CONVERGENCE_RTOL,
    shift: float | None = None,
    atol: float = 0.0,
) -> tuple[T, BoundaryGrid]:
    """Evaluate ``compute`` on grids N, 2N, ... until two successive values agree.

    Agreement is ``||v_2N - v_N|| <= rtol * ||v_2N|| + atol`` (Frobenius
    norm for arrays); ``atol`` matters only for quantities that vanish.  A pole on a node rotates the grid once.
    """
    cap = max_grid()
    grid = boundary_grid(kind, max(8, n0), shift)
    try:
        prev = compute(grid)
    except PoleOnBoundaryError:
        grid = grid.rotated()
        prev = compute(grid)
    while grid.size * 2 <= cap:
        grid = grid.refined()
        cur = compute(grid)
        diff = np.linalg.norm(np.asarray(cur) - np.asarray(prev))
        ref = np.linalg.norm(np.asarray(cur))
        if diff <= rtol * ref + atol or diff == 0:
            return cur, grid
        prev = cur
    raise ConvergenceError(f"quadrature not converged at the grid cap N={cap}")


def cayley_from_disc(kind: DomainKind, z):
    """Map disc points to Omega_+ (identity for the disc; 0 goes to the reference point)."""
    z = np.asarray(z, dtype=complex)
    if kind is DomainKind.DISC:
        out = z
    elif kind is DomainKind.UPPER:
        out = 1j * (1 + z) / (1 - z)
    else:
        out = (1 + z) / (1 - z)
    return out[()] if out.ndim == 0 else out


def cayley_to_disc(kind: DomainKind, lam):
    lam = np.asarray(lam, dtype=complex)
    if kind is DomainKind.DISC:
        out = lam
    elif kind is DomainKind.UPPER:
        out = (lam - 1j) / (lam + 1j)
    else:
        out = (lam - 1) / (lam + 1)
    return out[()] if out.ndim == 0 else out
