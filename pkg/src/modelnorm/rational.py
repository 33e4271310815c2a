"""Matrix-valued rational functions with a shared, factored scalar denominator.

A :class:`MatRational` stores

    F(lam) = P(lam) / prod_j (lam - p_j)

where ``P`` is a matrix of polynomials (monomial basis, ascending degree) and
the roots ``p_j`` are kept exactly as supplied.  Nothing cancels implicitly;
:meth:`MatRational.normalize` does it on request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from numbers import Number
from typing import Any, Sequence

import numpy as np

from modelnorm.errors import (
    ConfigError,
    DimensionError,
    LimitDivergedError,
    PoleError,
    PoleOnBoundaryError,
    SchemaError,
    SingularMobiusError,
)

DEGREE_CAP = 64
POLE_TOL = 1e-13
NODE_POLE_TOL = 1e-10


def _poly_from_roots(roots: np.ndarray) -> np.ndarray:
    """Ascending coefficients of the monic polynomial prod (lam - r)."""
    out = np.ones(1, dtype=complex)
    for r in roots:
        out = np.concatenate([[0.0], out]) - r * np.concatenate([out, [0.0]])
    return out


def _trim(num: np.ndarray) -> np.ndarray:
    """Drop exactly-zero leading coefficients (keeps at least degree 0)."""
    deg = num.shape[0] - 1
    while deg > 0 and not np.any(num[deg]):
        deg -= 1
    return num[: deg + 1]


def _deflate(num: np.ndarray, p: complex) -> np.ndarray:
    """Divide every entry by (lam - p), discarding the remainder."""
    d = num.shape[0] - 1
    if d == 0:
        return np.zeros_like(num)
    q = np.zeros((d,) + num.shape[1:], dtype=complex)
    acc = num[d].copy()
    for k in range(d - 1, -1, -1):
        q[k] = acc
        acc = num[k] + p * acc
    return q


def _match_roots(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``b`` into roots matched (as a multiset) in ``a`` and the rest."""
    used = np.zeros(len(a), dtype=bool)
    missing = []
    for r in b:
        hit = -1
        for i, s in enumerate(a):
            if not used[i] and abs(s - r) <= 1e-12 * (1.0 + abs(r)):
                hit = i
                break
        if hit < 0:
            missing.append(r)
        else:
            used[hit] = True
    return used, np.asarray(missing, dtype=complex)


@dataclass(frozen=True, eq=False)
class MatRational:
    """Matrix rational function ``num(lam) / prod(lam - den_roots)``.

    ``num`` has shape ``(deg + 1, rows, cols)``.
    """

    num: np.ndarray
    den_roots: np.ndarray

    __array_ufunc__ = None  # make ``ndarray @ MatRational`` defer to __rmatmul__

    def __post_init__(self):
        num = np.asarray(self.num, dtype=complex)
        if num.ndim != 3:
            raise DimensionError(f"numerator must have shape (deg+1, rows, cols), got {num.shape}")
        num = _trim(num)
        roots = np.asarray(self.den_roots, dtype=complex).reshape(-1)
        if num.shape[0] - 1 > DEGREE_CAP or roots.size > DEGREE_CAP:
            raise ConfigError(
                f"degree cap {DEGREE_CAP} exceeded (numerator {num.shape[0] - 1}, denominator {roots.size})"
            )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den_roots", roots)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, mat) -> MatRational:
        m = np.atleast_2d(np.asarray(mat, dtype=complex))
        return cls(m[None], np.zeros(0))

    @classmethod
    def identity(cls, m: int) -> MatRational:
        return cls.constant(np.eye(m))

    @classmethod
    def polynomial(cls, coeffs: Sequence[Any], roots: Sequence[complex] = ()) -> MatRational:
        """From ascending coefficients (scalars or equally-shaped matrices)."""
        cs = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coeffs]
        return cls(np.stack(cs), np.asarray(roots, dtype=complex))

    @classmethod
    def linear_inverse(cls, scale: complex, root: complex | None) -> MatRational:
        """Scalar ``1 / (scale * (lam - root))``, or ``1/scale`` when root is None."""
        if root is None:
            return cls.constant([[1.0 / scale]])
        return cls(np.array([[[1.0 / scale]]]), np.array([root]))

    # -- shape ------------------------------------------------------------
    @property
    def rows(self) -> int:
        return self.num.shape[1]

    @property
    def cols(self) -> int:
        return self.num.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.num.shape[1], self.num.shape[2]

    @property
    def num_degree(self) -> int:
        return self.num.shape[0] - 1

    @property
    def den_degree(self) -> int:
        return self.den_roots.size

    def __repr__(self) -> str:
        return (
            f"MatRational({self.rows}x{self.cols}, num_degree={self.num_degree}, "
            f"den_roots={np.array2string(self.den_roots, precision=4)})"
        )

    # -- evaluation -------------------------------------------------------
    def eval_many(self, lams, check: bool = True) -> np.ndarray:
        """Values at an array of points, shape ``lams.shape + (rows, cols)``."""
        lam = np.asarray(lams, dtype=complex)
        flat = lam.reshape(-1)
        if check and self.den_roots.size and flat.size:
            dist = np.abs(flat[:, None] - self.den_roots[None, :])
            tol = POLE_TOL * np.maximum(1.0, np.abs(self.den_roots))[None, :]
            if np.any(dist <= tol):
                bad = flat[np.nonzero(np.any(dist <= tol, axis=1))[0][0]]
                raise PoleError(f"evaluation at a denominator root (lambda={bad})")
        acc = np.broadcast_to(self.num[-1], (flat.size,) + self.shape).copy()
        for k in range(self.num.shape[0] - 2, -1, -1):
            acc = acc * flat[:, None, None] + self.num[k]
        if self.den_roots.size:
            den = np.prod(flat[:, None] - self.den_roots[None, :], axis=1)
            acc = acc / den[:, None, None]
        return acc.reshape(lam.shape + self.shape)

    def eval(self, lam: complex) -> np.ndarray:
        return self.eval_many(np.asarray(lam, dtype=complex))

    __call__ = eval

    def eval_removable(self, lam: complex, tol: float = 1e-8) -> np.ndarray:
        """Value at ``lam``, cancelling a removable singularity there if needed."""
        if self.den_roots.size and np.min(np.abs(self.den_roots - lam)) < tol * (1.0 + abs(lam)):
            return self.normalize().eval(lam)
        return self.eval(lam)

    def value_at_infinity(self, rtol: float = 1e-9) -> np.ndarray:
        """``lim_{lam -> inf} F(lam)``; raises if F grows at infinity."""
        d = self.den_degree
        scale = float(np.max(np.abs(self.num))) or 1.0
        extra = self.num[d + 1 :]
        if extra.size and np.max(np.abs(extra)) > rtol * scale:
            raise LimitDivergedError(
                f"numerator degree {self.num_degree} exceeds denominator degree {d}; limit at infinity diverges"
            )
        if self.num_degree >= d:
            return self.num[d].copy()
        return np.zeros(self.shape, dtype=complex)

    # -- arithmetic -------------------------------------------------------
    def _times_poly(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros((self.num.shape[0] + coeffs.size - 1,) + self.shape, dtype=complex)
        for k, c in enumerate(coeffs):
            out[k : k + self.num.shape[0]] += c * self.num
        return out

    def __add__(self, other):
        if isinstance(other, (Number, np.ndarray)):
            other = MatRational.constant(np.broadcast_to(np.asarray(other, dtype=complex), self.shape))
        if not isinstance(other, MatRational):
            return NotImplemented
        if other.shape != self.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        used, missing_in_self = _match_roots(self.den_roots, other.den_roots)
        # roots of self that other lacks
        used_o, missing_in_other = _match_roots(other.den_roots, self.den_roots)
        a = self._times_poly(_poly_from_roots(missing_in_self))
        b = other._times_poly(_poly_from_roots(missing_in_other))
        deg = max(a.shape[0], b.shape[0])
        num = np.zeros((deg,) + self.shape, dtype=complex)
        num[: a.shape[0]] += a
        num[: b.shape[0]] += b
        return MatRational(num, np.concatenate([self.den_roots, missing_in_self]))

    __radd__ = __add__

    def __neg__(self) -> MatRational:
        return MatRational(-self.num, self.den_roots)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Scalar multiplication, or entrywise scaling by a 1x1 rational."""
        if isinstance(other, Number):
            return MatRational(self.num * complex(other), self.den_roots)
        if isinstance(other, MatRational):
            if other.shape == (1, 1):
                return self._scalar_product(other)
            if self.shape == (1, 1):
                return other._scalar_product(self)
            raise DimensionError("'*' needs a scalar or a 1x1 factor; use '@' for matrix products")
        return NotImplemented

    __rmul__ = __mul__

    def _scalar_product(self, s: MatRational) -> MatRational:
        num = np.zeros((self.num.shape[0] + s.num.shape[0] - 1,) + self.shape, dtype=complex)
        for k in range(s.num.shape[0]):
            num[k : k + self.num.shape[0]] += s.num[k, 0, 0] * self.num
        return MatRational(num, np.concatenate([self.den_roots, s.den_roots]))

    def __truediv__(self, other):
        if isinstance(other, Number):
            return MatRational(self.num / complex(other), self.den_roots)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, np.ndarray):
            other = np.atleast_2d(other.astype(complex))
            if other.shape[0] != self.cols:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            return MatRational(self.num @ other, self.den_roots)
        if not isinstance(other, MatRational):
            return NotImplemented
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        da, db = self.num.shape[0], other.num.shape[0]
        num = np.zeros((da + db - 1, self.rows, other.cols), dtype=complex)
        for a in range(da):
            num[a : a + db] += self.num[a] @ other.num
        return MatRational(num, np.concatenate([self.den_roots, other.den_roots]))

    def __rmatmul__(self, other):
        if isinstance(other, np.ndarray):
            other = np.atleast_2d(other.astype(complex))
            if other.shape[1] != self.rows:
                raise DimensionError(f"cannot multiply {other.shape} by {self.shape}")
            return MatRational(other @ self.num, self.den_roots)
        return NotImplemented

    def divide_linear(self, scale: complex, root: complex | None) -> MatRational:
        """``F / (scale * (lam - root))`` (``F / scale`` when ``root`` is None)."""
        if root is None:
            return MatRational(self.num / scale, self.den_roots)
        return MatRational(self.num / scale, np.append(self.den_roots, root))

    def column(self, j: int) -> MatRational:
        return MatRational(self.num[:, :, j : j + 1], self.den_roots)

    # -- structural -------------------------------------------------------
    def compose(self, a: complex, b: complex, c: complex, d: complex) -> MatRational:
        """``mu -> F((a mu + b) / (c mu + d))`` at coefficient level."""
        if abs(a * d - b * c) == 0.0:
            raise SingularMobiusError(f"degenerate Mobius map (a,b,c,d)=({a},{b},{c},{d})")
        deg_p = self.num_degree
        big = max(deg_p, self.den_degree)
        lin_num = np.array([b, a], dtype=complex)
        lin_den = np.array([d, c], dtype=complex)
        num = np.zeros((big + 1,) + self.shape, dtype=complex)
        for k in range(deg_p + 1):
            poly = np.ones(1, dtype=complex)
            for _ in range(k):
                poly = np.convolve(poly, lin_num)
            for _ in range(big - k):
                poly = np.convolve(poly, lin_den)
            num[: poly.size] += poly[:, None, None] * self.num[k]
        roots = []
        scale = 1.0 + 0j
        # denominator: (c mu + d)^(big - D) * prod((a - p c) mu + (b - p d))
        factors = [(c, d)] * (big - self.den_degree) + [(a - p * c, b - p * d) for p in self.den_roots]
        for lead, const in factors:
            if abs(lead) > 1e-300 and abs(lead) > 1e-14 * abs(const):
                roots.append(-const / lead)
                scale *= lead
            else:
                scale *= const
        return MatRational(num / scale, np.asarray(roots, dtype=complex))

    def conj_transpose_coeffs(self) -> np.ndarray:
        """Numerator with conjugated, transposed coefficient matrices."""
        return np.conj(np.swapaxes(self.num, 1, 2))

    def normalize(self, tol: float = 1e-10) -> MatRational:
        """Cancel denominator roots at which every numerator entry vanishes."""
        num = self.num
        roots = list(self.den_roots)
        changed = True
        while changed and roots:
            changed = False
            for i, p in enumerate(roots):
                powers = np.abs(p) ** np.arange(num.shape[0])
                scale = float(np.sum(np.max(np.abs(num), axis=(1, 2)) * powers)) or 1.0
                val = MatRational(num, np.zeros(0)).eval(p)
                if np.max(np.abs(val)) <= tol * scale:
                    num = _deflate(num, p)
                    roots.pop(i)
                    changed = True
                    break
        return MatRational(num, np.asarray(roots, dtype=complex))

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "num": [
                [[[float(c.real), float(c.imag)] for c in self.num[:, i, j]] for j in range(self.cols)]
                for i in range(self.rows)
            ],
            "den_roots": [[float(r.real), float(r.imag)] for r in self.den_roots],
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> MatRational:
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            rows, cols = int(obj["rows"]), int(obj["cols"])
            entries = obj["num"]
            if len(entries) != rows or any(len(r) != cols for r in entries):
                raise SchemaError(f"'num' must be a {rows}x{cols} array of coefficient lists")
            deg = max(len(e) for r in entries for e in r) - 1
            num = np.zeros((max(deg, 0) + 1, rows, cols), dtype=complex)
            for i, r in enumerate(entries):
                for j, e in enumerate(r):
                    for k, (re, im) in enumerate(e):
                        num[k, i, j] = complex(re, im)
            roots = [complex(re, im) for re, im in obj.get("den_roots", [])]
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed MatRational JSON: {exc}") from exc
        return cls(num, np.asarray(roots, dtype=complex))


VecRational = MatRational


def shift_substitute(f: MatRational, mobius: tuple[complex, complex, complex, complex]) -> MatRational:
    """Compose ``f`` with the Mobius map ``(a, b, c, d)``."""
    return f.compose(*mobius)


def lincomb(funcs: Sequence[MatRational], coeffs) -> MatRational:
    """``sum_k coeffs[k] * funcs[k]`` with least-common-multiple denominators."""
    coeffs = np.asarray(coeffs, dtype=complex)
    out = None
    for f, c in zip(funcs, coeffs):
        term = f * complex(c)
        out = term if out is None else out + term
    return out


def check_nodes(f: MatRational, nodes: np.ndarray) -> bool:
    """True if no node lies within NODE_POLE_TOL of a pole of ``f``."""
    if not f.den_roots.size:
        return True
    dist = np.abs(nodes[:, None] - f.den_roots[None, :])
    return not np.any(dist < NODE_POLE_TOL)


def inner_product(f: MatRational, g: MatRational, grid) -> complex:
    """Quadrature value of ``<f, g>`` (linear in ``f``, antilinear in ``g``).

    Rotates the grid by its standard offset if a node hits a pole; raises
    PoleOnBoundaryError if that does not help.
    """
    if f.shape != g.shape or f.cols != 1:
        raise DimensionError(f"inner product needs equal column shapes, got {f.shape} and {g.shape}")
    if not (check_nodes(f, grid.nodes) and check_nodes(g, grid.nodes)):
        grid = grid.rotated()
        if not (check_nodes(f, grid.nodes) and check_nodes(g, grid.nodes)):
            raise PoleOnBoundaryError("function has a pole on the quadrature nodes")
    fv = f.eval_many(grid.nodes)[:, :, 0]
    gv = g.eval_many(grid.nodes)[:, :, 0]
    return complex(np.sum(grid.weights * np.sum(np.conj(gv) * fv, axis=1)))


def backward_shift_rational(f: MatRational, alpha: complex) -> MatRational:
    """``(f(lam) - f(alpha)) / (lam - alpha)`` computed on the coefficients.

    The numerator ``P - f(alpha) Q`` vanishes at ``alpha`` and is deflated
    exactly, so the result keeps the denominator of ``f``.
    """
    alpha = complex(alpha)
    fa = f.eval(alpha)
    q = _poly_from_roots(f.den_roots)
    size = max(f.num.shape[0], q.size)
    num = np.zeros((size,) + f.shape, dtype=complex)
    num[: f.num.shape[0]] += f.num
    num[: q.size] -= q[:, None, None] * fa[None]
    return MatRational(_deflate(num, alpha), f.den_roots)
