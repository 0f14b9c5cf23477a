"""Hamiltonian coefficients, evaluation, gradients, and bracket identities.

Every frozen constant below was computed by an independent brute-force
enumeration (see the in-test oracles), not by the library paths under test.
"""

import math
from itertools import product

import numpy as np
import pytest

from kdvlab.hamiltonians import (F1, F2, H3, LAMBDA2, QUARTIC_RESONANT,
                                 eval_hamiltonian, f1_apply, f1_coeff, f2_apply,
                                 f2_coeff, fd_gradient, gradient, poisson_bracket,
                                 resonance_witness)
from kdvlab.spectral import ModeLattice, SpectralSequence, sequence_from_modes

LAT = ModeLattice(8, 25)


def random_real_sequence(lat, rng, scale=0.4):
    vals = np.zeros(lat.size, dtype=np.complex128)
    pos = scale * (rng.standard_normal(lat.n_max) + 1j * rng.standard_normal(lat.n_max))
    vals[lat.n_max + 1:] = pos
    vals[:lat.n_max] = pos[::-1].conj()
    return SpectralSequence(lat, vals, real_type=True)


def embed_double(q):
    """Copy q into a lattice with twice the mode range (bracket headroom)."""
    lat = q.lattice
    big = ModeLattice(2 * lat.n_max, 6 * lat.n_max + 1)
    vals = np.zeros(big.size, dtype=np.complex128)
    vals[big.n_max - lat.n_max: big.n_max + lat.n_max + 1] = q.values
    return SpectralSequence(big, vals, real_type=q.real_type)


class TestCoefficients:
    def test_f1_values(self):
        # sigma(1*2*(-3)) = -1 -> -1/(3 sqrt 6)
        assert f1_coeff(1, 2, -3) == pytest.approx(-1 / (3 * math.sqrt(6)), rel=1e-14)
        # odd under global sign flip
        assert f1_coeff(-1, -2, 3) == pytest.approx(1 / (3 * math.sqrt(6)), rel=1e-14)

    def test_f1_symmetric(self):
        vals = {f1_coeff(*p) for p in ((1, 2, -3), (2, 1, -3), (-3, 1, 2))}
        assert len(vals) == 1

    def test_f1_rejects_bad_tuples(self):
        with pytest.raises(ValueError):
            f1_coeff(1, 2, 3)  # not zero-sum
        with pytest.raises(ValueError):
            f1_coeff(0, 1, -1)  # zero index

    def test_f2_values(self):
        # cube sum 1+8+27-216 = -180; sqrt|1*2/(3*(-6))| = 1/3; sigma = -1
        assert f2_coeff(1, 2, 3, -6) == pytest.approx(-1 / 360, rel=1e-14)
        # cube sum 3 - 27 = -24; sqrt|1/(-3)| = 1/sqrt3; sigma(1*(-3)) = -1
        assert f2_coeff(1, 1, 1, -3) == pytest.approx(-1 / (16 * math.sqrt(3)), rel=1e-14)

    def test_f2_vanishes_on_resonant_set(self):
        assert f2_coeff(1, -1, 2, -2) == 0.0
        assert f2_coeff(3, -3, 5, -5) == 0.0

    def test_f2_rejects_bad_tuples(self):
        with pytest.raises(ValueError):
            f2_coeff(1, 2, 3, 4)


class TestResonance:
    def test_triple_factorization(self):
        w = resonance_witness((1, 2, -3))
        assert w.cube_sum == -18 == w.factored
        assert not w.resonant

    def test_no_resonant_triples_exhaustive(self):
        for a, b in product(range(-12, 13), repeat=2):
            c = -(a + b)
            if 0 in (a, b, c) or abs(c) > 12:
                continue
            w = resonance_witness((a, b, c))
            assert w.cube_sum == w.factored == 3 * a * b * c
            assert not w.resonant

    def test_quadruple_signed_identity_exhaustive(self):
        for a, b, c in product(range(-8, 9), repeat=3):
            d = -(a + b + c)
            if 0 in (a, b, c, d) or abs(d) > 8:
                continue
            w = resonance_witness((a, b, c, d))
            assert w.cube_sum == w.factored == 3 * (a + b) * (a + c) * (a + d)
            assert abs(w.cube_sum) == 3 * abs(a + b) * abs(a + c) * abs(b + c)
            assert w.resonant == (w.cube_sum == 0)

    def test_resonant_quadruple(self):
        assert resonance_witness((4, -4, 7, -7)).resonant

    def test_rejects_bad_lengths(self):
        with pytest.raises(ValueError):
            resonance_witness((1, -1))


class TestEvaluation:
    def test_lambda2_single_pair(self):
        q = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        assert eval_hamiltonian(LAMBDA2, q) == pytest.approx(1j, abs=1e-14)

    def test_lambda2_oracle(self):
        # i sum_{n>0} n^3 q(n) q(-n)
        q = sequence_from_modes(LAT, {2: 1 + 1j, -2: 1 - 1j, 3: 2j, -3: -2j})
        expect = 1j * (8 * (1 + 1j) * (1 - 1j) + 27 * (2j) * (-2j))
        assert eval_hamiltonian(LAMBDA2, q) == pytest.approx(expect, rel=1e-14)

    def test_h3_three_pairs_oracle(self):
        # brute force: i sum over ordered zero-sum triples of sqrt|n1 n2 n3|
        q = sequence_from_modes(LAT, {n: 1.0 for n in (-3, -2, -1, 1, 2, 3)})
        brute = 0.0
        for a, b in product((-3, -2, -1, 1, 2, 3), repeat=2):
            c = -(a + b)
            if c in (-3, -2, -1, 1, 2, 3):
                brute += math.sqrt(abs(a * b * c))
        assert brute == pytest.approx(12 * math.sqrt(6) + 6 * math.sqrt(2), rel=1e-13)
        assert eval_hamiltonian(H3, q) == pytest.approx(1j * brute, rel=1e-13)

    def test_quartic_single_pair(self):
        # (3/2) i sum |q(n)|^4 over n = +-1
        q = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        assert eval_hamiltonian(QUARTIC_RESONANT, q) == pytest.approx(3j, abs=1e-14)

    def test_quartic_closed_form(self):
        rng = np.random.default_rng(5)
        q = random_real_sequence(LAT, rng)
        expect = 1.5j * np.sum(np.abs(q.values) ** 4)
        assert eval_hamiltonian(QUARTIC_RESONANT, q) == pytest.approx(expect, rel=1e-12)

    def test_degree34_brute_force(self):
        # library sums agree with a direct loop over ordered zero-sum tuples
        rng = np.random.default_rng(6)
        lat = ModeLattice(4, 13)
        q = random_real_sequence(lat, rng)
        Q = q.value_at
        modes = [n for n in range(-4, 5) if n != 0]
        h3 = sum(1j * math.sqrt(abs(a * b * (-(a + b)))) * Q(a) * Q(b) * Q(-(a + b))
                 for a, b in product(modes, repeat=2) if -(a + b) in modes)
        assert eval_hamiltonian(H3, q) == pytest.approx(h3, rel=1e-12)
        f2v = sum(f2_coeff(a, b, c, -(a + b + c)) * Q(a) * Q(b) * Q(c) * Q(-(a + b + c))
                  for a, b, c in product(modes, repeat=3) if -(a + b + c) in modes)
        # f2_coeff is the literal kernel; the symmetrized sum agrees because the
        # monomial weight is permutation-invariant
        assert eval_hamiltonian(F2, q) == pytest.approx(f2v, rel=1e-10)

    def test_purely_imaginary_on_real_type(self):
        rng = np.random.default_rng(7)
        q = random_real_sequence(LAT, rng)
        for spec in (LAMBDA2, H3, F1, F2, QUARTIC_RESONANT):
            val = eval_hamiltonian(spec, q)
            assert abs(val.real) < 1e-12 * max(abs(val), 1.0)

    def test_zero_state(self):
        q = sequence_from_modes(LAT, {})
        for spec in (LAMBDA2, H3, F1, F2, QUARTIC_RESONANT):
            assert eval_hamiltonian(spec, q) == 0.0


class TestGradients:
    def test_lambda2_gradient_value(self):
        q = sequence_from_modes(LAT, {2: 5.0, -2: 5.0})
        g = gradient(LAMBDA2, q)
        # d/dq(-n) of Lambda2 = i |n|^3 q(n) read at slot n -> i*8*5 at n = -2
        assert g.value_at(-2) == pytest.approx(40j, abs=1e-13)
        assert g.value_at(2) == pytest.approx(40j, abs=1e-13)

    def test_f1_gradient_value(self):
        q = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        g = gradient(F1, q)
        # 3 F1-coeff(1,1,-2) = sigma(1*1*(-2))/sqrt(2) = -1/sqrt(2)
        assert g.value_at(2) == pytest.approx(-1 / math.sqrt(2), abs=1e-13)
        assert g.value_at(-2) == pytest.approx(1 / math.sqrt(2), abs=1e-13)

    def test_quartic_gradient_closed_form(self):
        rng = np.random.default_rng(8)
        q = random_real_sequence(LAT, rng)
        g = gradient(QUARTIC_RESONANT, q).values
        expect = 6j * q.values * q.values * q.values[::-1]
        assert np.max(np.abs(g - expect)) < 1e-13

    @pytest.mark.parametrize("spec", [LAMBDA2, H3, F1, F2, QUARTIC_RESONANT],
                             ids=lambda s: s.kind.value)
    def test_gradient_matches_fd(self, spec):
        rng = np.random.default_rng(9)
        for _ in range(3):
            q = random_real_sequence(LAT, rng)
            ga = gradient(spec, q).values
            gf = fd_gradient(lambda qq: eval_hamiltonian(spec, qq), q).values
            scale = max(float(np.max(np.abs(ga))), 1e-12)
            assert np.max(np.abs(ga - gf)) / scale < 1e-7


class TestPoissonBracket:
    def test_antisymmetry(self):
        rng = np.random.default_rng(10)
        q = random_real_sequence(LAT, rng)
        ab = poisson_bracket(H3, F1, q)
        ba = poisson_bracket(F1, H3, q)
        assert ab == pytest.approx(-ba, rel=1e-12)

    def test_black_box_argument(self):
        rng = np.random.default_rng(11)
        q = random_real_sequence(LAT, rng)
        direct = poisson_bracket(LAMBDA2, F1, q)
        boxed = poisson_bracket(lambda qq: eval_hamiltonian(LAMBDA2, qq), F1, q)
        assert boxed == pytest.approx(direct, rel=1e-6)

    def test_homological_identity_one(self):
        # {Lambda2, F1} + H3 = 0 (needs double-lattice headroom for the
        # gradient convolutions)
        rng = np.random.default_rng(12)
        for _ in range(5):
            q = embed_double(random_real_sequence(LAT, rng))
            lhs = poisson_bracket(LAMBDA2, F1, q) + eval_hamiltonian(H3, q)
            scale = max(abs(eval_hamiltonian(H3, q)), 1e-12)
            assert abs(lhs) / scale < 1e-12

    def test_homological_identity_two(self):
        # {Lambda2, F2} + (1/2){H3, F1} = -(3/2) i sum |q(n)|^4
        rng = np.random.default_rng(13)
        for _ in range(5):
            q = embed_double(random_real_sequence(LAT, rng))
            lhs = (poisson_bracket(LAMBDA2, F2, q)
                   + 0.5 * poisson_bracket(H3, F1, q))
            target = -1.5j * float(np.sum(np.abs(q.values) ** 4))
            assert abs(lhs - target) / max(abs(target), 1e-12) < 1e-11

    def test_bracket_with_conserved_pair(self):
        rng = np.random.default_rng(14)
        q = random_real_sequence(LAT, rng)
        assert abs(poisson_bracket(F1, F1, q)) < 1e-12


class TestLiteralMaps:
    def test_f1_apply_single_pair(self):
        q = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        a = f1_apply(q, q)
        assert a.value_at(2) == pytest.approx(1 / math.sqrt(2), abs=1e-13)
        assert a.value_at(-2) == pytest.approx(-1 / math.sqrt(2), abs=1e-13)

    def test_f1_reflection_of_gradient(self):
        # f1(q, q)(n) = gradient(F1, q)(-n)
        rng = np.random.default_rng(15)
        q = random_real_sequence(LAT, rng)
        g = gradient(F1, q).values
        assert np.max(np.abs(f1_apply(q, q).values - g[::-1])) < 1e-13

    def test_f2_apply_single_pair(self):
        q = sequence_from_modes(LAT, {1: 1.0, -1: 1.0})
        b = f2_apply(q, q, q)
        assert b.value_at(3) == pytest.approx(-1 / (4 * math.sqrt(3)), abs=1e-13)
        assert b.value_at(1) == 0.0  # resonant contributions drop out

    def test_f2_reflection_of_gradient(self):
        rng = np.random.default_rng(16)
        q = random_real_sequence(LAT, rng)
        g = gradient(F2, q).values
        diff = np.max(np.abs(f2_apply(q, q, q).values - g[::-1]))
        assert diff < 1e-12
