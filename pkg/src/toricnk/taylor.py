"""Truncated multivariate Taylor arithmetic in three variables, degree 3.

A ``Taylor3`` holds the coefficients of a polynomial in (h₁, h₂, h₃) with all
monomials of total degree > 3 dropped.  Seeding ``y_i + h_i`` and running an
ordinary Python expression on the result gives the exact third-order jet of
that expression at ``y``; there is no truncation error for polynomials.
"""

from __future__ import annotations

import math

import numpy as np

from ._bilinear import SparseBilinear

ORDER = 3
EXPONENTS = [
    (a, b, c)
    for total in range(ORDER + 1)
    for a in range(total, -1, -1)
    for b in range(total - a, -1, -1)
    for c in [total - a - b]
]
_POS = {e: i for i, e in enumerate(EXPONENTS)}
NCOEF = len(EXPONENTS)  # 20


def _build_product():
    t = np.zeros((NCOEF, NCOEF, NCOEF))
    for i, e in enumerate(EXPONENTS):
        for j, f in enumerate(EXPONENTS):
            g = (e[0] + f[0], e[1] + f[1], e[2] + f[2])
            if sum(g) <= ORDER:
                t[i, j, _POS[g]] = 1.0
    return t.reshape(NCOEF * NCOEF, NCOEF)


_PRODUCT = _build_product()
_SPARSE_PRODUCT = SparseBilinear(_PRODUCT, NCOEF, NCOEF)


def index(exponent):
    return _POS[tuple(exponent)]


class Taylor3:
    __slots__ = ("coef",)
    __array_priority__ = 1000

    def __init__(self, coef):
        self.coef = np.asarray(coef, dtype=float)

    @classmethod
    def constant(cls, value, shape=()):
        value = np.broadcast_to(np.asarray(value, dtype=float), shape)
        coef = np.zeros(value.shape + (NCOEF,))
        coef[..., 0] = value
        return cls(coef)

    @classmethod
    def variables(cls, y):
        """The three seeded coordinates y_i + h_i for points ``y`` (last axis 3)."""
        y = np.asarray(y, dtype=float)
        out = []
        for i in range(3):
            coef = np.zeros(y.shape[:-1] + (NCOEF,))
            coef[..., 0] = y[..., i]
            e = [0, 0, 0]
            e[i] = 1
            coef[..., _POS[tuple(e)]] = 1.0
            out.append(cls(coef))
        return tuple(out)

    @property
    def value(self):
        return self.coef[..., 0]

    def _lift(self, other):
        if isinstance(other, Taylor3):
            return other
        return Taylor3.constant(other, np.shape(other))

    def __add__(self, other):
        other = self._lift(other)
        return Taylor3(self.coef + other.coef)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Taylor3(self.coef - other.coef)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Taylor3(-self.coef)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Taylor3):
            c = np.asarray(other, dtype=float)
            return Taylor3(self.coef * c[..., None])
        return Taylor3(_SPARSE_PRODUCT(self.coef, other.coef))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor3):
            c = np.asarray(other, dtype=float)
            return Taylor3(self.coef / c[..., None])
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            out = Taylor3.constant(1.0, self.coef.shape[:-1])
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        n = float(n)
        a = self.value
        return self._compose(
            a**n,
            n * a ** (n - 1),
            n * (n - 1) * a ** (n - 2),
            n * (n - 1) * (n - 2) * a ** (n - 3),
        )

    def _compose(self, f0, f1, f2, f3):
        """f(self) from the derivatives f^(k) at the constant term."""
        h = Taylor3(self.coef.copy())
        h.coef[..., 0] = 0.0
        h2 = h * h
        h3 = h2 * h
        out = h * f1 + h2 * (np.asarray(f2) / 2.0) + h3 * (np.asarray(f3) / 6.0)
        out.coef[..., 0] = f0
        return out

    def reciprocal(self):
        a = self.value
        return self._compose(1 / a, -1 / a**2, 2 / a**3, -6 / a**4)

    def sqrt(self):
        return self**0.5

    def exp(self):
        e = np.exp(self.value)
        return self._compose(e, e, e, e)

    def log(self):
        a = self.value
        return self._compose(np.log(a), 1 / a, -1 / a**2, 2 / a**3)

    def sin(self):
        a = self.value
        return self._compose(np.sin(a), np.cos(a), -np.sin(a), -np.cos(a))

    def cos(self):
        a = self.value
        return self._compose(np.cos(a), -np.sin(a), -np.cos(a), np.sin(a))

    def derivative(self, *axes):
        """∂^|axes| f / ∂y_{axes} at the expansion point."""
        e = [0, 0, 0]
        for ax in axes:
            e[ax] += 1
        scale = math.prod(math.factorial(k) for k in e)
        return self.coef[..., _POS[tuple(e)]] * scale


def sqrt(x):
    return x.sqrt() if isinstance(x, Taylor3) else np.sqrt(x)


def exp(x):
    return x.exp() if isinstance(x, Taylor3) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Taylor3) else np.log(x)


def sin(x):
    return x.sin() if isinstance(x, Taylor3) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Taylor3) else np.cos(x)
