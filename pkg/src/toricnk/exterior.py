"""Grassmann algebra over the fixed coframe (θ¹, θ², θ³, γ¹, γ², γ³).

Forms are stored densely: a degree-k form carries a coefficient array whose
last axis has length C(6, k), indexed by the strictly increasing generator
tuples in lexicographic order.  Any leading axes are batch axes, so a single
``Form`` can hold the value of one form at many grid points at once.

Generator indices 0..5 stand for θ¹, θ², θ³, γ¹, γ², γ³ in that order.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from ._bilinear import SparseBilinear
from .errors import DegreeOverflowError

DIM = 6
THETA = (0, 1, 2)
GAMMA = (3, 4, 5)
_NAMES = ("θ", "θ", "θ", "γ", "γ", "γ")

BASIS = [list(combinations(range(DIM), k)) for k in range(DIM + 1)]
INDEX = [{mono: i for i, mono in enumerate(b)} for b in BASIS]
SIZES = [len(b) for b in BASIS]


def _sort_sign(seq):
    """Return (sign, sorted tuple) for a sequence of generator indices, sign 0 on repeats."""
    if len(set(seq)) != len(seq):
        return 0, None
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def _build_wedge_tables():
    tables = {}
    for p in range(DIM + 1):
        for q in range(DIM + 1 - p):
            t = np.zeros((SIZES[p], SIZES[q], SIZES[p + q]))
            for i, a in enumerate(BASIS[p]):
                for j, b in enumerate(BASIS[q]):
                    s, mono = _sort_sign(a + b)
                    if s:
                        t[i, j, INDEX[p + q][mono]] = s
            tables[p, q] = t.reshape(SIZES[p] * SIZES[q], SIZES[p + q])
    return tables


def _build_interior_tables():
    # tables[k][g] maps degree-k coefficients to degree-(k-1) coefficients of e_g ⌟ (.)
    tables = [None]
    for k in range(1, DIM + 1):
        t = np.zeros((DIM, SIZES[k], SIZES[k - 1]))
        for i, mono in enumerate(BASIS[k]):
            for pos, g in enumerate(mono):
                rest = mono[:pos] + mono[pos + 1:]
                t[g, i, INDEX[k - 1][rest]] = -1.0 if pos % 2 else 1.0
        tables.append(t)
    return tables


_WEDGE = _build_wedge_tables()
_INTERIOR = _build_interior_tables()


def _mono_str(mono):
    if not mono:
        return "1"
    parts = []
    for group in (THETA, GAMMA):
        idx = [g for g in mono if g in group]
        if idx:
            digits = "".join(str(g % 3 + 1) for g in idx)
            parts.append(f"{_NAMES[idx[0]]}^{{{digits}}}")
    return "∧".join(parts)


# The gather-based kernel beats the dense outer product once the pair count is large.
_SPARSE_WEDGE = {
    (p, q): SparseBilinear(t, SIZES[p], SIZES[q]) for (p, q), t in _WEDGE.items() if SIZES[p] * SIZES[q] >= 100
}


def _wedge_coef(p, q, a, b):
    sparse = _SPARSE_WEDGE.get((p, q))
    if sparse is not None:
        return sparse(a, b)
    outer = a[..., :, None] * b[..., None, :]
    return outer.reshape(outer.shape[:-2] + (SIZES[p] * SIZES[q],)) @ _WEDGE[p, q]


def _build_generator_tables():
    # e^g ∧ (.) on degree-q coefficients as (source, target, sign) triples
    tables = {}
    for g in range(DIM):
        for q in range(DIM):
            src, tgt, sgn = [], [], []
            for j, mono in enumerate(BASIS[q]):
                s, m = _sort_sign((g,) + mono)
                if s:
                    src.append(j)
                    tgt.append(INDEX[q + 1][m])
                    sgn.append(float(s))
            tables[g, q] = (np.array(src, dtype=int), np.array(tgt, dtype=int), np.array(sgn))
    return tables


_GENERATOR = _build_generator_tables()


def _generator_wedge_coef(g, q, b):
    src, tgt, sgn = _GENERATOR[g, q]
    out = np.zeros(b.shape[:-1] + (SIZES[q + 1],))
    out[..., tgt] = b[..., src] * sgn
    return out


class Form:
    """A homogeneous differential form of fixed degree, possibly batched."""

    __slots__ = ("degree", "coef")

    def __init__(self, degree, coef=None):
        if not 0 <= degree <= DIM:
            raise DegreeOverflowError(f"degree {degree} outside 0..{DIM}")
        self.degree = degree
        if coef is None:
            coef = np.zeros(SIZES[degree])
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-1:] != (SIZES[degree],):
            raise ValueError(f"degree-{degree} form needs last axis {SIZES[degree]}, got {coef.shape}")
        self.coef = coef

    @classmethod
    def zero(cls, degree, shape=()):
        return cls(degree, np.zeros(tuple(shape) + (SIZES[degree],)))

    @classmethod
    def scalar(cls, value):
        return cls(0, np.asarray(value, dtype=float)[..., None])

    @classmethod
    def generator(cls, g):
        return cls.monomial((g,))

    @classmethod
    def monomial(cls, indices, value=1.0):
        """Basis monomial for the given (unordered) generator indices, times ``value``."""
        indices = tuple(indices)
        k = len(indices)
        value = np.asarray(value, dtype=float)
        coef = np.zeros(value.shape + (SIZES[k],))
        s, mono = _sort_sign(indices)
        if s:
            coef[..., INDEX[k][mono]] = s * value
        return cls(k, coef)

    @classmethod
    def from_dict(cls, terms, degree=None):
        """Build from ``{index tuple: coefficient}``; tuples need not be sorted."""
        if degree is None:
            if not terms:
                raise ValueError("degree required for an empty term map")
            degree = len(next(iter(terms)))
        out = cls.zero(degree)
        for mono, value in terms.items():
            out = out + cls.monomial(mono, value)
        return out

    @property
    def shape(self):
        return self.coef.shape[:-1]

    def __getitem__(self, mono):
        s, key = _sort_sign(tuple(mono))
        if len(mono) != self.degree:
            raise KeyError(mono)
        return 0.0 if not s else s * self.coef[..., INDEX[self.degree][key]]

    def _check_same(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")
        return None

    def __add__(self, other):
        bad = self._check_same(other)
        if bad is NotImplemented:
            return bad
        return Form(self.degree, self.coef + other.coef)

    def __sub__(self, other):
        bad = self._check_same(other)
        if bad is NotImplemented:
            return bad
        return Form(self.degree, self.coef - other.coef)

    def __neg__(self):
        return Form(self.degree, -self.coef)

    def __mul__(self, s):
        s = np.asarray(s, dtype=float)
        return Form(self.degree, self.coef * s[..., None])

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / np.asarray(s, dtype=float))

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.degree == other.degree and bool(np.all(self.coef == other.coef))

    __hash__ = None

    def allclose(self, other, atol=1e-12, rtol=0.0):
        return self.degree == other.degree and bool(np.allclose(self.coef, other.coef, atol=atol, rtol=rtol))

    def to_dict(self, tol=0.0):
        """Nonzero terms of an unbatched form keyed by increasing index tuple."""
        if self.coef.ndim != 1:
            raise ValueError("to_dict needs an unbatched form")
        return {mono: float(c) for mono, c in zip(BASIS[self.degree], self.coef) if abs(c) > tol}

    def __repr__(self):
        if self.coef.ndim != 1:
            return f"Form(degree={self.degree}, batch={self.shape})"
        terms = self.to_dict()
        if not terms:
            return "0"
        return " + ".join(f"{c:.6g}·{_mono_str(m)}" for m, c in terms.items()).replace("+ -", "- ")


def wedge(a, b):
    """Exterior product a ∧ b."""
    if a.degree + b.degree > DIM:
        raise DegreeOverflowError(f"wedge of degrees {a.degree} + {b.degree} exceeds {DIM}")
    return Form(a.degree + b.degree, _wedge_coef(a.degree, b.degree, a.coef, b.coef))


def wedge_generator(g, a):
    """e^g ∧ a for a single coframe generator, without forming e^g."""
    if a.degree + 1 > DIM:
        raise DegreeOverflowError(f"wedge of degrees 1 + {a.degree} exceeds {DIM}")
    return Form(a.degree + 1, _generator_wedge_coef(g, a.degree, a.coef))


def interior(v, a):
    """Contraction v ⌟ a.

    ``v`` is either a generator index (meaning the dual frame vector, e.g. 0 for
    ζ₁ and 3 for Jζ₁) or an array of components against the dual frame with
    last axis 6.
    """
    if a.degree == 0:
        return Form.zero(0, a.shape)
    table = _INTERIOR[a.degree]
    if isinstance(v, (int, np.integer)):
        return Form(a.degree - 1, a.coef @ table[v])
    v = np.asarray(v, dtype=float)
    mat = np.einsum("...g,gij->...ij", v, table)
    return Form(a.degree - 1, np.einsum("...i,...ij->...j", a.coef, mat))


def norm_sup(a):
    """Largest absolute coefficient (per batch entry)."""
    return np.max(np.abs(a.coef), axis=-1)


def top_coefficient(a):
    """Coefficient of a 6-form against θ¹²³∧γ¹²³."""
    if a.degree != DIM:
        raise ValueError("top_coefficient needs a 6-form")
    return a.coef[..., 0]


# Λ⁵ → TM under X ↦ X ⌟ vol:  e_b ⌟ vol = (-1)^b · (monomial missing b)
# Scale applied on top of that contraction when reading K as an endomorphism.
# -1/2 is the unique constant for which tr K² = -(1/6)(ω³)², J = 6K/ω³ and
# ψ⁺∧ψ⁻ = (2/3)ω³ hold together; it makes J map ζ_i to Jζ_i in the toric coframe.
K_IDENTIFICATION = -0.5

_FIVE_SLOT = np.array([INDEX[5][tuple(g for g in range(DIM) if g != b)] for b in range(DIM)])
_FIVE_SIGN = np.array([(-1.0) ** b for b in range(DIM)])


def five_form_to_vector(beta):
    return beta.coef[..., _FIVE_SLOT] * _FIVE_SIGN


def k_tensor(psi_plus, identification=K_IDENTIFICATION):
    """Hitchin's endomorphism K(X) = (X ⌟ ψ⁺) ∧ ψ⁺ as a 6×6 matrix.

    Column ``a`` holds K(e_a), with Λ⁵ identified with TM through the
    reference volume θ¹²³∧γ¹²³ (scaled by ``identification``).
    """
    if psi_plus.degree != 3:
        raise ValueError("k_tensor needs a 3-form")
    cols = [five_form_to_vector(wedge(interior(a, psi_plus), psi_plus)) for a in range(DIM)]
    return identification * np.stack(cols, axis=-1)


def two_form_matrix(omega):
    """Antisymmetric matrix W with W[a, b] = ω(e_a, e_b)."""
    if omega.degree != 2:
        raise ValueError("two_form_matrix needs a 2-form")
    w = np.zeros(omega.shape + (DIM, DIM))
    for i, (a, b) in enumerate(BASIS[2]):
        w[..., a, b] = omega.coef[..., i]
        w[..., b, a] = -omega.coef[..., i]
    return w


def basis_size(k):
    return comb(DIM, k)


# --- first-order jets of forms --------------------------------------------
#
# A dual scalar is an array with last axis 4: (value, ∂/∂y₁, ∂/∂y₂, ∂/∂y₃).

def dual(value, grad):
    value = np.asarray(value, dtype=float)
    grad = np.asarray(grad, dtype=float)
    return np.concatenate([value[..., None], grad], axis=-1)


def dual_const(value):
    value = np.asarray(value, dtype=float)
    return dual(value, np.zeros(value.shape + (3,)))


def dual_mul(a, b):
    out = a[..., :1] * b
    out[..., 1:] += a[..., 1:] * b[..., :1]
    return out


def dual_inv(a):
    inv = 1.0 / a[..., 0]
    return dual(inv, -a[..., 1:] * (inv * inv)[..., None])


class FormJet:
    """A form together with the y-gradients of each of its coefficients.

    ``data`` has shape ``(..., 4, n)``: row 0 holds the coefficients, rows 1-3
    their partial derivatives in y₁, y₂, y₃.
    """

    __slots__ = ("degree", "data")

    def __init__(self, degree, data):
        data = np.asarray(data, dtype=float)
        if data.shape[-2:] != (4, SIZES[degree]):
            raise ValueError(f"bad FormJet data shape {data.shape} for degree {degree}")
        self.degree = degree
        self.data = data

    @classmethod
    def constant(cls, form):
        data = np.zeros(form.shape + (4, SIZES[form.degree]))
        data[..., 0, :] = form.coef
        return cls(form.degree, data)

    @classmethod
    def from_parts(cls, form, gradients):
        """``gradients`` has shape ``(..., n, 3)``: one 3-vector per monomial."""
        gradients = np.asarray(gradients, dtype=float)
        data = np.concatenate([form.coef[..., None, :], np.swapaxes(gradients, -1, -2)], axis=-2)
        return cls(form.degree, data)

    @property
    def form(self):
        return Form(self.degree, self.data[..., 0, :])

    @property
    def coefficient_gradients(self):
        return np.swapaxes(self.data[..., 1:, :], -1, -2)

    def gradient_form(self, j):
        return Form(self.degree, self.data[..., 1 + j, :])

    def __add__(self, other):
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return FormJet(self.degree, self.data + other.data)

    def __sub__(self, other):
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return FormJet(self.degree, self.data - other.data)

    def __neg__(self):
        return FormJet(self.degree, -self.data)

    def scale(self, s):
        """Multiply by a dual scalar (product rule on the gradients)."""
        s = np.asarray(s, dtype=float)
        out = self.data * s[..., :1, None]
        out[..., 1:, :] += s[..., 1:, None] * self.data[..., :1, :]
        return FormJet(self.degree, out)

    def __mul__(self, c):
        c = np.asarray(c, dtype=float)
        return FormJet(self.degree, self.data * c[..., None, None])

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge_jet(self, other)


def wedge_generator_jet(g, fj):
    """e^g ∧ fj; the generator is constant so the gradients pass straight through."""
    if fj.degree + 1 > DIM:
        raise DegreeOverflowError(f"wedge of degrees 1 + {fj.degree} exceeds {DIM}")
    return FormJet(fj.degree + 1, _generator_wedge_coef(g, fj.degree, fj.data))


def wedge_jet(a, b):
    p, q = a.degree, b.degree
    if p + q > DIM:
        raise DegreeOverflowError(f"wedge of degrees {p} + {q} exceeds {DIM}")
    a0 = a.data[..., :1, :]
    b0 = b.data[..., :1, :]
    out = _wedge_coef(p, q, a.data, np.broadcast_to(b0, b.data.shape))
    out[..., 1:, :] += _wedge_coef(p, q, np.broadcast_to(a0, a.data[..., 1:, :].shape), b.data[..., 1:, :])
    return FormJet(p + q, out)
