"""Third-order jets of potentials φ: ℝ³ → ℝ and the families that produce them."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, EvaluationError
from .taylor import Taylor3

EXACT = "exact-taylor"
FINITE_DIFFERENCE = "finite-difference"

_SORTED_TRIPLES = [(i, j, k) for i in range(3) for j in range(i, 3) for k in range(j, 3)]


def symmetrize_hess(h):
    h = np.asarray(h, dtype=float)
    return 0.5 * (h + np.swapaxes(h, -1, -2))


def symmetrize_third(t):
    """Average over index permutations, written back so every permutation is bit-identical."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    for tri in _SORTED_TRIPLES:
        perms = set(permutations(tri))
        val = sum(t[(...,) + p] for p in sorted(perms)) / len(perms)
        for p in perms:
            out[(...,) + p] = val
    return out


@dataclass(frozen=True)
class Jet3:
    """Value, gradient, Hessian and third derivatives of φ at one or more points.

    Array fields may carry leading batch axes: ``phi`` (...), ``grad`` (..., 3),
    ``hess`` (..., 3, 3), ``third`` (..., 3, 3, 3).
    """

    phi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=float))
        object.__setattr__(self, "hess", symmetrize_hess(self.hess))
        object.__setattr__(self, "third", symmetrize_third(self.third))

    @classmethod
    def from_taylor(cls, t: Taylor3) -> "Jet3":
        shape = t.coef.shape[:-1]
        grad = np.stack([t.derivative(i) for i in range(3)], axis=-1)
        hess = np.empty(shape + (3, 3))
        for i in range(3):
            for j in range(i, 3):
                hess[..., i, j] = hess[..., j, i] = t.derivative(i, j)
        third = np.empty(shape + (3, 3, 3))
        for tri in _SORTED_TRIPLES:
            val = t.derivative(*tri)
            for p in set(permutations(tri)):
                third[(...,) + p] = val
        return cls(t.value.copy(), grad, hess, third)

    @property
    def shape(self):
        return self.phi.shape

    def __getitem__(self, idx):
        return Jet3(self.phi[idx], self.grad[idx], self.hess[idx], self.third[idx])


@dataclass(frozen=True)
class PhiFamily:
    """A named source of jets.

    ``evaluator`` maps points (last axis 3) to a ``Jet3``.  ``field`` is the
    plain value map, used when the family is switched to finite differences.
    """

    name: str
    evaluator: Callable[[np.ndarray], Jet3]
    mode: str = EXACT
    fd_step: Optional[float] = None
    field: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __call__(self, y) -> Jet3:
        return self.evaluator(np.asarray(y, dtype=float))

    jet = __call__

    def with_mode(self, mode: str, fd_step: Optional[float] = None) -> "PhiFamily":
        if mode == EXACT:
            if self.mode != EXACT:
                raise ValueError(f"family {self.name!r} has no exact evaluator")
            return self
        if mode != FINITE_DIFFERENCE:
            raise ValueError(f"unknown differentiation mode {mode!r}")
        if self.field is None:
            raise ValueError(f"family {self.name!r} has no scalar field for finite differences")
        f = self.field

        def evaluator(y):
            return finite_difference_jet(f, y, fd_step)

        return PhiFamily(self.name, evaluator, FINITE_DIFFERENCE, fd_step, f)


def taylor_family(name: str, func: Callable) -> PhiFamily:
    """Family from ``func(y1, y2, y3)`` written with ordinary arithmetic.

    ``func`` must accept both floats/arrays and ``Taylor3`` arguments; use
    ``toricnk.taylor.sqrt`` and friends for elementary functions.
    """

    def evaluator(y):
        return Jet3.from_taylor(_as_taylor(func(*Taylor3.variables(y)), y))

    def scalar(y):
        y = np.asarray(y, dtype=float)
        return np.asarray(func(y[..., 0], y[..., 1], y[..., 2]), dtype=float)

    return PhiFamily(name, evaluator, EXACT, None, scalar)


def _as_taylor(val, y):
    if isinstance(val, Taylor3):
        return val
    return Taylor3.constant(val, np.shape(y)[:-1])


SQRT3 = np.sqrt(3.0)


def s3s3_polynomial(y1, y2, y3):
    return (y1 * y1 + y2 * y2 + y3 * y3) / 3.0 + y1 * y2 * y3 / SQRT3 + 1.0 / 9.0


def s3s3_phi() -> PhiFamily:
    """The potential of the homogeneous nearly-Kähler S³×S³, normalized by the constant 1/9."""
    return taylor_family("s3s3", s3s3_polynomial)


def polynomial_family(name: str, terms: dict) -> PhiFamily:
    """Polynomial Σ c·y₁^i y₂^j y₃^k from ``{(i, j, k): c}``."""
    terms = {tuple(int(e) for e in k): float(v) for k, v in terms.items()}

    def func(y1, y2, y3):
        total = 0.0
        for (i, j, k), c in terms.items():
            total = total + c * (y1**i) * (y2**j) * (y3**k)
        return total

    return taylor_family(name, func)


def load_polynomial(path) -> dict:
    """Read a coefficient file: one ``i j k coeff`` monomial per line; ``#`` starts a comment."""
    terms: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'i j k coeff', got {line!r}")
        key = tuple(int(p) for p in parts[:3])
        if min(key) < 0:
            raise ValueError(f"{path}:{lineno}: negative exponent")
        terms[key] = terms.get(key, 0.0) + float(parts[3])
    return terms


def radial_jet(y, x, x1, x2, x3) -> Jet3:
    """Jet of φ(y) = x(|y|²/2) given x and its first three derivatives at t = |y|²/2."""
    y = np.asarray(y, dtype=float)
    x1 = np.asarray(x1, dtype=float)[..., None]
    x2e = np.asarray(x2, dtype=float)[..., None, None]
    x3e = np.asarray(x3, dtype=float)[..., None, None, None]
    eye = np.eye(3)
    grad = x1 * y
    hess = x1[..., None] * eye + x2e * y[..., :, None] * y[..., None, :]
    yyy = y[..., :, None, None] * y[..., None, :, None] * y[..., None, None, :]
    ddy = (
        eye[:, :, None] * y[..., None, None, :]
        + eye[None, :, :] * y[..., :, None, None]
        + eye[:, None, :] * y[..., None, :, None]
    )
    third = x2e[..., None] * ddy + x3e * yyy
    return Jet3(np.asarray(x, dtype=float), grad, hess, third)


def radial_phi(x_solution, name: str = "radial") -> PhiFamily:
    """Family φ(y) = x(r²/2) built from a radial profile.

    ``x_solution`` must expose ``t_min``, ``t_max`` and ``derivatives(t)``
    returning (x, x′, x″, x‴).
    """

    def _t(y):
        y = np.asarray(y, dtype=float)
        t = 0.5 * np.sum(y * y, axis=-1)
        lo, hi = x_solution.t_min, x_solution.t_max
        slack = 1e-12 * np.maximum(1.0, np.abs(t))
        if np.any((t < lo - slack) | (t > hi + slack)):
            raise DomainError(f"r²/2 outside the solution domain [{lo}, {hi}]")
        return y, np.clip(t, lo, hi)

    def evaluator(y):
        y, t = _t(y)
        return radial_jet(y, *x_solution.derivatives(t))

    def scalar(y):
        _, t = _t(y)
        return x_solution.derivatives(t)[0]

    return PhiFamily(name, evaluator, EXACT, None, scalar)


def affine_shift(family: PhiFamily, a: float, b) -> PhiFamily:
    """φ + a + b·y; only φ and its gradient change."""
    b = np.asarray(b, dtype=float)

    def evaluator(y):
        j = family(y)
        return Jet3(j.phi + a + np.asarray(y) @ b, j.grad + b, j.hess, j.third)

    f = family.field
    scalar = None if f is None else (lambda y: f(y) + a + np.asarray(y) @ b)
    return PhiFamily(f"{family.name}+affine", evaluator, family.mode, family.fd_step, scalar)


def default_fd_step(y):
    return 1e-3 * np.maximum(1.0, np.linalg.norm(np.asarray(y, dtype=float), axis=-1))


def finite_difference_jet(f, y, h=None) -> Jet3:
    """Central-difference jet of a scalar field; every entry is O(h²) accurate.

    ``f`` takes points with last axis 3 (batched) and returns values.
    """
    y = np.asarray(y, dtype=float)
    h = default_fd_step(y) if h is None else np.broadcast_to(np.asarray(h, dtype=float), y.shape[:-1])
    if np.any(h <= 0):
        raise ValueError("finite-difference step must be positive")
    hv = np.asarray(h)[..., None]
    cache = {}

    def at(*offset):
        off = [0, 0, 0]
        for axis, step in offset:
            off[axis] += step
        key = tuple(off)
        if key not in cache:
            val = np.asarray(f(y + hv * np.array(key, dtype=float)), dtype=float)
            if not np.all(np.isfinite(val)):
                raise EvaluationError(f"non-finite field value at stencil offset {key}")
            cache[key] = val
        return cache[key]

    f0 = at()
    grad = np.empty(y.shape[:-1] + (3,))
    hess = np.empty(y.shape[:-1] + (3, 3))
    third = np.empty(y.shape[:-1] + (3, 3, 3))
    h1, h2, h3 = h, h * h, h * h * h
    for i in range(3):
        grad[..., i] = (at((i, 1)) - at((i, -1))) / (2 * h1)
        hess[..., i, i] = (at((i, 1)) - 2 * f0 + at((i, -1))) / h2
        third[..., i, i, i] = (at((i, 2)) - 2 * at((i, 1)) + 2 * at((i, -1)) - at((i, -2))) / (2 * h3)
        for j in range(3):
            if j == i:
                continue
            if j > i:
                hess[..., i, j] = hess[..., j, i] = (
                    at((i, 1), (j, 1)) - at((i, 1), (j, -1)) - at((i, -1), (j, 1)) + at((i, -1), (j, -1))
                ) / (4 * h2)
            iij = (
                at((i, 1), (j, 1)) - 2 * at((j, 1)) + at((i, -1), (j, 1))
                - at((i, 1), (j, -1)) + 2 * at((j, -1)) - at((i, -1), (j, -1))
            ) / (2 * h3)
            third[..., i, i, j] = third[..., i, j, i] = third[..., j, i, i] = iij
    mixed = 0.0
    for s1 in (1, -1):
        for s2 in (1, -1):
            for s3 in (1, -1):
                mixed = mixed + s1 * s2 * s3 * at((0, s1), (1, s2), (2, s3))
    mixed = mixed / (8 * h3)
    for p in permutations((0, 1, 2)):
        third[(...,) + p] = mixed
    return Jet3(f0, grad, hess, third)
