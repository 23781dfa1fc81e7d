import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkey import bell_family as bf
from bellkey.errors import DegenerateParametersError

from conftest import random_triples

PI = math.pi
angle = st.floats(-PI, PI, allow_nan=False)


class TestParameters:
    def test_normalized_to_half_open_interval(self):
        p = bf.BellParameters(3 * PI, -PI, 7.0)
        assert p.theta == pytest.approx(PI)
        assert p.phi == pytest.approx(PI)
        assert -PI < p.omega <= PI

    @given(angle, angle, angle)
    def test_coefficients_are_periodic(self, t, p, w):
        a = bf.family_coefficients(t, p, w)
        b = bf.family_coefficients(t + 2 * PI, p - 2 * PI, w + 4 * PI)
        assert np.allclose(a, b, atol=1e-12)


class TestBounds:
    @given(angle, angle, angle)
    def test_local_formula_matches_bruteforce(self, t, p, w):
        f = bf.make_functional((t, p, w))
        assert abs(bf.local_bound_formula((t, p, w)) - bf.local_bound_bruteforce(f)) <= 1e-12

    @given(angle, angle, angle)
    def test_target_correlators_reach_quantum_bound(self, t, p, w):
        """The value at (sin p, sin w, sin(t+p), sin(t+w)) is exactly eta_Q."""
        f = bf.make_functional((t, p, w))
        c = [math.sin(p), math.sin(w), math.sin(t + p), math.sin(t + w)]
        assert f.value(c) == pytest.approx(bf.quantum_bound((t, p, w)), abs=1e-12)

    @settings(max_examples=300)
    @given(angle, angle, angle)
    def test_violation_iff_condition(self, t, p, w):
        params = (t, p, w)
        gap = abs(bf.quantum_bound(params)) - bf.local_bound_formula(params)
        # stay away from the measure-zero boundary of the condition
        if abs(bf.condition_product(params)) < 1e-9:
            return
        assert (gap > 1e-12) == bf.selftest_condition(params)

    def test_functional_caches_bounds(self):
        f = bf.make_functional((1.0, 2.0, 2.5))
        assert f.quantum_bound == pytest.approx(bf.quantum_bound((1.0, 2.0, 2.5)))
        assert f.local_bound == pytest.approx(bf.local_bound_formula((1.0, 2.0, 2.5)))
        assert bf.BellFunctional([1, 0, 0, 0]).quantum_bound is None

    def test_functional_equality(self):
        assert bf.make_functional((1.0, 2.0, 2.5)) == bf.make_functional((1.0, 2.0, 2.5))
        assert bf.make_functional((1.0, 2.0, 2.5)) != bf.make_functional((1.0, 2.0, 2.6))


class TestKnownInequalities:
    def test_chsh(self):
        params, div = bf.known_inequality("CHSH")
        f = bf.make_functional(params)
        assert np.allclose(f.coefficients / div, [1, 1, 1, -1], atol=1e-12)
        assert bf.quantum_bound(params) / div == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert f.local_bound / div == pytest.approx(2, abs=1e-12)

    @pytest.mark.parametrize("delta", [0.1, 0.3, PI / 6])
    def test_i_delta(self, delta):
        """I_delta lands on a self-testing member with a positive scaled bound."""
        params, div = bf.known_inequality("I_delta", delta)
        assert params.phi == 0.0
        assert params.theta == pytest.approx(delta + PI / 2)
        assert bf.selftest_condition(params)
        f = bf.make_functional(params)
        assert bf.quantum_bound(params) / div > f.local_bound / abs(div)

    def test_i_delta_range(self):
        with pytest.raises(ValueError):
            bf.known_inequality("I_delta", 0.7)

    @pytest.mark.parametrize("phi", [0.2, PI / 4, 1.3])
    def test_tilted_matches_literature_form(self, phi):
        """Scaled quantum bound of the tilted member is -sin(2 phi) over the divisor."""
        params, div = bf.known_inequality("tilted", phi)
        coeffs = bf.make_functional(params).coefficients / div
        t, p, w = params
        assert np.allclose(coeffs, bf.family_coefficients(t, p, w) / div)
        assert bf.quantum_bound(params) / div == pytest.approx(
            math.sin(PI / 2) * math.sin(-2 * phi) * math.sin(PI / 2) / div
        )

    def test_j_gamma_and_symmetric_admissibility(self):
        params, div = bf.known_inequality("J_gamma", 0.1)
        assert bf.selftest_condition(params) and abs(div) > 0
        params, div = bf.known_inequality("symmetric", 0.4, 1.0)
        assert bf.selftest_condition(params)
        with pytest.raises(ValueError):
            bf.known_inequality("symmetric", 0.3, -0.6)

    def test_unknown_kind_and_arity(self):
        with pytest.raises(ValueError):
            bf.known_inequality("nope")
        with pytest.raises(ValueError):
            bf.known_inequality("CHSH", 1.0)
        with pytest.raises(ValueError):
            bf.known_inequality("tilted")


class TestLeParametrization:
    @settings(max_examples=200)
    @given(angle, angle, angle)
    def test_family_is_proportional_to_le_vector(self, a, b, g):
        try:
            fvec = bf.le_f_vector(a, b, g)
        except DegenerateParametersError:
            return
        if np.max(np.abs(fvec)) > 1e6:
            return
        coeffs = bf.make_functional(bf.from_le_parameters(a, b, g)).coefficients
        if np.linalg.norm(coeffs) < 1e-6:
            return
        cos = abs(np.dot(coeffs, fvec)) / (np.linalg.norm(coeffs) * np.linalg.norm(fvec))
        assert cos == pytest.approx(1.0, rel=1e-9)

    def test_le_delta_product(self):
        a, b, g = 0.3, 0.5, -1.1
        d = -(a + b + g)
        assert bf.le_delta(a, b, g) == pytest.approx(math.sin(a) * math.sin(b) * math.sin(g) * math.sin(d))

    def test_degenerate_le(self):
        with pytest.raises(DegenerateParametersError):
            bf.le_f_vector(0.0, 0.5, 0.5)


class TestSeededSamples:
    def test_ten_thousand_triples(self):
        """Oracle cross-check at acceptance scale, including the biconditional."""
        rng = np.random.default_rng(7)
        for t, p, w in rng.uniform(-PI, PI, (10_000, 3)):
            f = bf.make_functional((t, p, w))
            lb = bf.local_bound_formula((t, p, w))
            assert abs(lb - bf.local_bound_bruteforce(f)) <= 1e-12
            assert (abs(bf.quantum_bound((t, p, w))) > lb) == bf.selftest_condition((t, p, w))

    def test_conftest_helper(self):
        for p in random_triples(20, 3, selftest_only=True):
            assert bf.selftest_condition(p)


class TestWorkedValues:
    S3 = math.sqrt(3)

    @pytest.mark.parametrize(
        "params, coeffs",
        [
            ((-PI / 2, 3 * PI / 4, PI / 4), np.array([1, 1, 1, -1]) / (2 * math.sqrt(2))),
            ((PI / 3, PI / 3, PI), [-1 / 4, -1 / 8, -1 / 4, 1 / 4]),
            ((PI / 2, PI / 6, -PI / 6), [-S3 / 8, S3 / 8, -3 / 8, -3 / 8]),
        ],
    )
    def test_coefficients(self, params, coeffs):
        assert np.allclose(bf.family_coefficients(*params), coeffs, atol=1e-15)

    @pytest.mark.parametrize(
        "params, local, quantum",
        [
            ((-PI / 2, 3 * PI / 4, PI / 4), math.sqrt(2) / 2, 1.0),
            ((PI / 3, PI / 3, PI), 5 / 8, -3 * S3 / 8),
            ((PI / 2, PI / 6, -PI / 6), 3 / 4, -S3 / 2),
        ],
    )
    def test_bounds(self, params, local, quantum):
        assert bf.local_bound_formula(params) == pytest.approx(local, abs=1e-12)
        assert bf.local_bound_bruteforce(bf.make_functional(params)) == pytest.approx(local, abs=1e-12)
        assert bf.quantum_bound(params) == pytest.approx(quantum, abs=1e-12)

    def test_free_form_chsh_local_bound(self):
        assert bf.local_bound_bruteforce([1, 1, 1, -1]) == 2

    def test_condition_examples(self):
        assert bf.condition_product((-PI / 2, 3 * PI / 4, PI / 4)) == pytest.approx(-0.25)
        assert bf.condition_product((PI / 3, PI / 3, PI)) == pytest.approx(-0.125)
        assert not bf.selftest_condition((PI / 3, PI / 2, 5 * PI / 6))

    def test_tilted_quarter(self):
        params, div = bf.known_inequality("tilted", PI / 4)
        assert np.allclose(params.as_tuple(), (PI / 2, PI / 4, -PI / 4))
        assert div == pytest.approx(-0.5)
        assert bf.quantum_bound(params) / div == pytest.approx(2)
        # proportional to sin(phi) A0(B0 - B1) + cos(phi) A1(B0 + B1)
        coeffs = bf.make_functional(params).coefficients
        pattern = np.array([1, -1, 1, 1]) * math.sqrt(2) / 2
        assert abs(np.dot(coeffs, pattern)) / (np.linalg.norm(coeffs) * np.linalg.norm(pattern)) == pytest.approx(1)

    def test_i_delta_sixth(self):
        params, div = bf.known_inequality("I_delta", PI / 6)
        assert np.allclose(params.as_tuple(), (2 * PI / 3, 0, 2 * PI / 3))
        assert div == pytest.approx(-1 / 8)
