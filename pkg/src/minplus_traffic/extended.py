"""Extended reals R ∪ {+inf, -inf} with the minplus conventions.

Two conventions differ from IEEE arithmetic and are enforced everywhere:

* standard product: ``0 * (+-inf) = (+-inf) * 0 = 0``
* sum (standard ``+`` and minplus ``⊗``): ``(+inf) + (-inf) = +inf``

``+inf`` is the minplus zero ``ε`` and ``0`` is the minplus unit ``e``.

The scalar type :class:`ExtendedReal` carries an explicit tag.  The array
helpers below work on float64 arrays holding IEEE infinities but never
let a NaN through: every combination IEEE would turn into NaN is patched
with the table above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Union

import numpy as np

EPS = math.inf  # minplus zero
E = 0.0  # minplus unit

FINITE, POS_INF, NEG_INF = "finite", "+inf", "-inf"


class UndefinedOperation(ArithmeticError):
    """Raised for combinations the convention table leaves undefined."""


@dataclass(frozen=True)
class ExtendedReal:
    """A real number or one of the two symbolic infinities."""

    value: Real = 0.0
    tag: str = FINITE

    def __post_init__(self):
        if self.tag not in (FINITE, POS_INF, NEG_INF):
            raise ValueError(f"unknown tag {self.tag!r}")
        if self.tag == FINITE and isinstance(self.value, float) and not math.isfinite(self.value):
            raise ValueError("finite tag with non-finite value; use ExtendedReal.of()")

    @classmethod
    def of(cls, x: Union["ExtendedReal", Real]) -> "ExtendedReal":
        if isinstance(x, ExtendedReal):
            return x
        if isinstance(x, float) and math.isnan(x):
            raise ValueError("NaN is not an extended real")
        if isinstance(x, float) and math.isinf(x):
            return cls(0.0, POS_INF if x > 0 else NEG_INF)
        return cls(x, FINITE)

    @property
    def is_finite(self) -> bool:
        return self.tag == FINITE

    def __float__(self) -> float:
        if self.tag == POS_INF:
            return math.inf
        if self.tag == NEG_INF:
            return -math.inf
        return float(self.value)

    def _key(self):
        # total order: -inf < finite < +inf
        return {NEG_INF: (0, 0), FINITE: (1, self.value), POS_INF: (2, 0)}[self.tag]

    def __lt__(self, other):
        return self._key() < ExtendedReal.of(other)._key()

    def __le__(self, other):
        return self._key() <= ExtendedReal.of(other)._key()

    def __eq__(self, other):
        if not isinstance(other, (ExtendedReal, int, float, Fraction)):
            return NotImplemented
        return self._key() == ExtendedReal.of(other)._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.tag == FINITE:
            return f"ExtendedReal({self.value!r})"
        return f"ExtendedReal({self.tag})"


def _neg(x: ExtendedReal) -> ExtendedReal:
    if x.tag == POS_INF:
        return ExtendedReal(0.0, NEG_INF)
    if x.tag == NEG_INF:
        return ExtendedReal(0.0, POS_INF)
    return ExtendedReal(-x.value)


def oplus(x, y) -> ExtendedReal:
    """Minplus sum: the minimum."""
    x, y = ExtendedReal.of(x), ExtendedReal.of(y)
    return x if x <= y else y


def otimes(x, y) -> ExtendedReal:
    """Minplus product, i.e. the standard sum with ``+inf + -inf = +inf``."""
    x, y = ExtendedReal.of(x), ExtendedReal.of(y)
    if POS_INF in (x.tag, y.tag):
        return ExtendedReal(0.0, POS_INF)
    if NEG_INF in (x.tag, y.tag):
        return ExtendedReal(0.0, NEG_INF)
    return ExtendedReal(x.value + y.value)


# standard addition obeys the same table as the minplus product
plus = otimes


def times(x, y) -> ExtendedReal:
    """Standard product with ``0 * (+-inf) = 0``."""
    x, y = ExtendedReal.of(x), ExtendedReal.of(y)
    if (x.tag == FINITE and x.value == 0) or (y.tag == FINITE and y.value == 0):
        return ExtendedReal(0)
    if x.tag == FINITE and y.tag == FINITE:
        return ExtendedReal(x.value * y.value)
    sx = 1 if x.tag == POS_INF or (x.tag == FINITE and x.value > 0) else -1
    sy = 1 if y.tag == POS_INF or (y.tag == FINITE and y.value > 0) else -1
    return ExtendedReal(0.0, POS_INF if sx * sy > 0 else NEG_INF)


def mp_div(a, b) -> ExtendedReal:
    """Minplus division ``a / b = a - b``, the solution of ``b ⊗ x = a``.

    Both operands infinite of the same sign has no defined value and raises
    :class:`UndefinedOperation`.
    """
    a, b = ExtendedReal.of(a), ExtendedReal.of(b)
    if a.tag != FINITE and a.tag == b.tag:
        raise UndefinedOperation(f"{a!r} / {b!r} is undefined")
    return otimes(a, _neg(b))


# ---------------------------------------------------------------------------
# float64 array kernels


def xadd(a, b):
    """Elementwise sum with ``+inf + -inf = +inf``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a + b
    clash = np.isnan(out)
    if clash.any():
        out = np.where(clash, np.inf, out)
    return out


def xmul(a, b):
    """Elementwise standard product with ``0 * (+-inf) = 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        out = a * b
    zero = (a == 0) | (b == 0)
    if zero.any():
        out = np.where(zero, 0.0, out)
    return out


def xsum(a, axis=-1):
    """Standard sum along ``axis``; any ``+inf`` term wins over ``-inf``."""
    a = np.asarray(a, dtype=float)
    pos = np.any(a == np.inf, axis=axis)
    neg = np.any(a == -np.inf, axis=axis)
    finite = np.where(np.isinf(a), 0.0, a).sum(axis=axis)
    return np.where(pos, np.inf, np.where(neg, -np.inf, finite))


def std_matvec(M, x):
    """Standard ``M @ x`` under the extended conventions."""
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (np.isinf(M).any() or np.isinf(x).any()):
        return M @ x if x.ndim == 1 else x @ M.T
    return xsum(xmul(M, x[..., None, :]), axis=-1)


def minplus_matvec(M, x):
    """Minplus ``M ⊗ x``: ``min_j (M_ij + x_j)``."""
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    if M.shape[-1] == 0:
        return np.full(x.shape[:-1] + (M.shape[0],), np.inf)
    return xadd(M, x[..., None, :]).min(axis=-1)


def std_matmul(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if not (np.isinf(A).any() or np.isinf(B).any()):
        return A @ B
    return xsum(xmul(A[:, :, None], B[None, :, :]), axis=1)


def minplus_matmul(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] == 0:
        return np.full((A.shape[0], B.shape[1]), np.inf)
    return xadd(A[:, :, None], B[None, :, :]).min(axis=1)
