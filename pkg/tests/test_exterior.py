from math import comb
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from toricnk import exterior as ex
from toricnk.errors import DegreeOverflowError
from toricnk.exterior import Form, interior, wedge

from conftest import random_form

TH1, TH2, TH3, GA1, GA2, GA3 = range(6)
seeds = st.integers(0, 2**32 - 1)


def gen(g):
    return Form.generator(g)


class TestWedgeExamples:
    def test_odd_square_vanishes(self):
        assert ex.norm_sup(gen(TH1) ^ gen(TH1)) == 0.0

    def test_antisymmetry_of_generators(self):
        assert (gen(TH1) ^ gen(GA1))[(TH1, GA1)] == 1.0
        assert (gen(GA1) ^ gen(TH1))[(TH1, GA1)] == -1.0

    def test_c123_at_origin(self):
        c = [gen(GA1 + i) * (2.0 / 3.0) for i in range(3)]
        prod = c[0] ^ c[1] ^ c[2]
        assert prod.allclose(Form.monomial((GA1, GA2, GA3), 8.0 / 27.0), atol=1e-15)

    def test_degree_overflow(self):
        with pytest.raises(DegreeOverflowError):
            wedge(Form.monomial((0, 1, 2, 3)), Form.monomial((4, 5, 0)))

    def test_scalar_wedge_is_multiplication(self, rng):
        a = random_form(rng, 3)
        assert wedge(Form.scalar(2.5), a).allclose(a * 2.5)

    def test_generator_fast_path_matches(self, rng):
        for g in range(6):
            for q in range(6):
                b = random_form(rng, q, (4,))
                assert ex.wedge_generator(g, b).allclose(wedge(gen(g), b), atol=0)


class TestInteriorExamples:
    def test_first_slot(self):
        assert interior(TH1, gen(TH1) ^ gen(GA2)).allclose(gen(GA2))

    def test_second_slot_sign(self):
        assert interior(GA2, gen(TH1) ^ gen(GA2)).allclose(-gen(TH1))

    def test_double_contraction_of_psi_plus(self):
        eps = 0.7
        psi = (
            Form.monomial((GA1, GA2, GA3))
            - Form.monomial((TH1, TH2, GA3))
            - Form.monomial((TH3, TH1, GA2))
            - Form.monomial((TH2, TH3, GA1))
        ) * eps
        assert interior(TH2, interior(TH1, psi)).allclose(-gen(GA3) * eps, atol=1e-15)

    def test_vector_argument_is_linear(self, rng):
        a = random_form(rng, 3)
        v = rng.normal(size=6)
        expect = sum((interior(g, a) * v[g] for g in range(6)), Form.zero(2))
        assert interior(v, a).allclose(expect, atol=1e-13)


class TestNorm:
    def test_examples(self):
        assert ex.norm_sup(Form.scalar(5.0)) == 5.0
        x = gen(TH1) ^ gen(GA2)
        assert ex.norm_sup(x - x) == 0.0
        assert ex.norm_sup(Form.monomial((GA1, GA2, GA3), 3.0) + Form.monomial((TH1, TH2, TH3))) == 3.0


class TestCounts:
    @pytest.mark.parametrize("k", range(7))
    def test_dimension(self, k):
        assert ex.basis_size(k) == comb(6, k) == len(ex.BASIS[k])

    def test_basis_wedge_reproduces_permutation_parity(self):
        for perm in permutations(range(6)):
            prod = Form.scalar(1.0)
            for g in perm:
                prod = prod ^ gen(g)
            inversions = sum(perm[i] > perm[j] for i in range(6) for j in range(i + 1, 6))
            assert ex.top_coefficient(prod) == (-1.0) ** inversions


class TestRepr:
    def test_notation(self):
        assert repr(gen(TH1) ^ gen(TH2) ^ gen(GA3)) == "1·θ^{12}∧γ^{3}"
        assert repr(Form.zero(2)) == "0"

    def test_from_dict_roundtrip(self):
        f = Form.from_dict({(GA1, TH1): 2.0, (TH2, TH3): -1.0})
        assert f.to_dict() == {(TH1, GA1): -2.0, (TH2, TH3): -1.0}


def _rel(lhs, rhs, scale):
    return ex.norm_sup(lhs - rhs) / max(1.0, scale)


class TestLaws:
    @given(seeds, st.integers(0, 6), st.integers(0, 6))
    def test_graded_commutativity(self, seed, p, q):
        if p + q > 6:
            return
        rng = np.random.default_rng(seed)
        a, b = random_form(rng, p), random_form(rng, q)
        scale = ex.norm_sup(a) * ex.norm_sup(b)
        assert _rel(wedge(a, b), wedge(b, a) * (-1.0) ** (p * q), scale) <= 1e-13

    @given(seeds, st.integers(0, 6), st.integers(0, 6), st.integers(0, 6))
    def test_associativity(self, seed, p, q, r):
        if p + q + r > 6:
            return
        rng = np.random.default_rng(seed)
        a, b, c = random_form(rng, p), random_form(rng, q), random_form(rng, r)
        scale = ex.norm_sup(a) * ex.norm_sup(b) * ex.norm_sup(c)
        assert _rel((a ^ b) ^ c, a ^ (b ^ c), scale) <= 1e-13

    @given(seeds, st.integers(1, 5), st.integers(0, 5), st.integers(0, 5))
    def test_interior_antiderivation(self, seed, p, q, g):
        if p + q > 6:
            return
        rng = np.random.default_rng(seed)
        a, b = random_form(rng, p), random_form(rng, q)
        lhs = interior(g, a ^ b)
        rhs = (interior(g, a) ^ b) + ((a ^ interior(g, b)) * (-1.0) ** p if q > 0 else Form.zero(p + q - 1))
        assert _rel(lhs, rhs, ex.norm_sup(a) * ex.norm_sup(b)) <= 1e-13

    @given(seeds, st.integers(2, 6), st.integers(0, 5))
    def test_interior_squares_to_zero(self, seed, k, g):
        a = random_form(np.random.default_rng(seed), k)
        assert ex.norm_sup(interior(g, interior(g, a))) == 0.0


class TestKTensor:
    def test_zero_three_form(self):
        assert np.all(ex.k_tensor(Form.zero(3)) == 0.0)

    def test_requires_three_form(self):
        with pytest.raises(ValueError):
            ex.k_tensor(Form.zero(2))

    def test_trk_identity_on_random_forms(self, rng):
        psi = random_form(rng, 3, (1000,))
        K = ex.k_tensor(psi)
        K2 = K @ K
        tr = np.trace(K2, axis1=-2, axis2=-1)
        dev = np.max(np.abs(K2 - (tr / 6.0)[:, None, None] * np.eye(6)), axis=(-1, -2))
        scale = np.max(np.abs(K), axis=(-1, -2)) ** 2
        assert np.all(dev <= 1e-12 * scale)

    def test_quadratic_in_psi(self, rng):
        psi = random_form(rng, 3)
        np.testing.assert_allclose(ex.k_tensor(psi * 2.0), 4.0 * ex.k_tensor(psi), atol=1e-13)


class TestFormJet:
    def test_wedge_jet_product_rule(self, rng):
        # coefficients linear in y: the gradient of a ∧ b is the product rule
        a = ex.FormJet(2, rng.normal(size=(4, 15)))
        b = ex.FormJet(1, rng.normal(size=(4, 6)))
        out = ex.wedge_jet(a, b)
        assert out.form.allclose(wedge(a.form, b.form), atol=1e-13)
        for j in range(3):
            expect = wedge(a.gradient_form(j), b.form) + wedge(a.form, b.gradient_form(j))
            assert out.gradient_form(j).allclose(expect, atol=1e-13)

    def test_scale_by_dual(self, rng):
        a = ex.FormJet(1, rng.normal(size=(4, 6)))
        s = ex.dual(2.0, np.array([1.0, -1.0, 0.5]))
        out = a.scale(s)
        assert out.form.allclose(a.form * 2.0)
        assert out.gradient_form(0).allclose(a.gradient_form(0) * 2.0 + a.form * 1.0)

    def test_dual_inverse(self):
        a = ex.dual(4.0, np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(ex.dual_mul(a, ex.dual_inv(a)), [1.0, 0.0, 0.0, 0.0], atol=1e-15)
