import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkey import bell_family as bf
from bellkey import reduction as rd
from bellkey.errors import ConvergenceError, NotCertifiedError

from conftest import random_triples

PI = math.pi
angle = st.floats(-PI, PI, allow_nan=False)
simplex = st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3)


class TestReducedModel:
    def test_table_entries(self):
        """Phi_0..Phi_3 correlators are cos(a-b), cos(a+b), -cos(a+b), -cos(a-b)."""
        a, b = 0.4, -1.3
        u = np.array([math.cos(a), math.sin(a)])
        v = np.array([math.cos(b), math.sin(b)])
        got = [u @ rd.BELL_TABLE[k] @ v for k in range(4)]
        assert np.allclose(got, [math.cos(a - b), math.cos(a + b), -math.cos(a + b), -math.cos(a - b)])

    @settings(max_examples=50)
    @given(simplex, angle, angle, angle)
    def test_batched_matches_matrices(self, lam, a1, b0, b1):
        lam = np.array(lam) / sum(lam)
        rs = rd.ReducedStrategy(lam, a1, b0, b1)
        params = (1.0, 2.0, 2.5)
        coeffs = bf.family_coefficients(*params)
        fast = rd.reduced_values(coeffs, lam[None], np.array([[a1, b0, b1]]))[0]
        assert fast == pytest.approx(rd.reduced_bell_value(params, rs), abs=1e-12)

    def test_simplex_validation(self):
        with pytest.raises(ValueError):
            rd.ReducedStrategy([0.5, 0.6, 0, 0], 0, 0, 0)
        with pytest.raises(ValueError):
            rd.ReducedStrategy([1.1, -0.1, 0, 0], 0, 0, 0)

    def test_search_config_validation(self):
        with pytest.raises(ValueError):
            rd.SearchConfig(resolution=1)
        with pytest.raises(ValueError):
            rd.SearchConfig(step_floor=0)


class TestMaximize:
    @pytest.mark.parametrize("params", [(PI / 3, PI / 3, PI), (PI / 2, PI / 6, -PI / 6), (1.0, 2.0, 2.5)])
    def test_reaches_but_never_exceeds_bound(self, params):
        eta = abs(bf.quantum_bound(params))
        target = max(eta, bf.local_bound_formula(params))
        val, rs = rd.maximize_reduced(params)
        assert abs(val) <= target + 1e-9
        assert abs(val) >= target - 1e-6
        assert rd.reduced_bell_value(params, rs) == pytest.approx(val, abs=1e-12)

    def test_budget_below_grid(self):
        with pytest.raises(ConvergenceError):
            rd.maximize_reduced((PI / 3, PI / 3, PI), rd.SearchConfig(resolution=8, max_evals=600))

    def test_deterministic(self):
        a = rd.maximize_reduced((PI / 3, PI / 3, PI))
        b = rd.maximize_reduced((PI / 3, PI / 3, PI))
        assert a[0] == b[0] and a[1].angles == b[1].angles

    def test_budget_exhaustion_keeps_best(self):
        with pytest.raises(ConvergenceError) as info:
            rd.maximize_reduced((PI / 3, PI / 3, PI), rd.SearchConfig(resolution=8, max_evals=2200))
        assert info.value.best_strategy is not None
        assert abs(info.value.best_value) <= abs(bf.quantum_bound((PI / 3, PI / 3, PI))) + 1e-9


class TestCanonicalFrame:
    @pytest.mark.parametrize("alpha", [0, 1, 2, 3])
    def test_maps_each_bell_state_to_phi0(self, alpha):
        """Value with Phi_alpha at angles equals value with Phi_0 at the mapped angles."""
        params = (0.9, 0.4, 2.6)
        coeffs = bf.family_coefficients(*params)
        angles = np.array([0.3, -0.8, 1.7])
        lam = np.eye(4)[alpha]
        v = rd.reduced_values(coeffs, lam[None], angles[None])[0]
        mapped = rd.to_canonical_frame(alpha, angles, 1.0, 1.0)
        assert rd.reduced_values(coeffs, np.eye(4)[:1], mapped[None])[0] == pytest.approx(v, abs=1e-12)
        flipped = rd.to_canonical_frame(alpha, angles, 1.0, -1.0)
        assert rd.reduced_values(coeffs, np.eye(4)[:1], flipped[None])[0] == pytest.approx(-v, abs=1e-12)


class TestUniquenessProbe:
    @pytest.mark.parametrize("params", [(PI / 3, PI / 3, PI), (PI / 2, PI / 6, -PI / 6)])
    def test_passes_on_landmarks(self, params):
        report = rd.uniqueness_probe(params)
        assert report.passed, report.violations
        assert report.n_converged >= 32

    def test_random_condition_points(self):
        for p in random_triples(5, 21, selftest_only=True):
            assert rd.uniqueness_probe(p).passed

    def test_requires_condition_and_starts(self):
        with pytest.raises(NotCertifiedError):
            rd.uniqueness_probe((0.3, 0.1, 0.2))
        with pytest.raises(ValueError):
            rd.uniqueness_probe((PI / 3, PI / 3, PI), starts=10)


class TestWorkedValues:
    def test_point_mass_at_target_angles(self):
        t, p, w = PI / 3, PI / 3, PI
        rs = rd.ReducedStrategy([1, 0, 0, 0], t, PI / 2 - p, PI / 2 - w)
        assert rd.reduced_bell_value((t, p, w), rs) == pytest.approx(-3 * math.sqrt(3) / 8, abs=1e-12)

    def test_uniform_mixture_is_zero(self):
        rs = rd.ReducedStrategy([0.25] * 4, 0.7, -1.2, 2.9)
        assert rd.reduced_bell_value((1.0, 2.0, 2.5), rs) == pytest.approx(0, abs=1e-15)

    def test_zero_angles_chsh(self):
        """All correlators are 1, so the value is the coefficient sum 2 * sqrt(2)/4."""
        rs = rd.ReducedStrategy([1, 0, 0, 0], 0, 0, 0)
        assert rd.reduced_bell_value((-PI / 2, 3 * PI / 4, PI / 4), rs) == pytest.approx(math.sqrt(2) / 2, abs=1e-15)

    def test_chsh_optimum(self):
        val, _ = rd.maximize_reduced((-PI / 2, 3 * PI / 4, PI / 4))
        assert abs(val) == pytest.approx(1, abs=1e-6)

    def test_trivial_expression_reaches_local_bound(self):
        params = (PI / 2, PI / 2, PI)
        val, _ = rd.maximize_reduced(params)
        assert abs(val) == pytest.approx(bf.local_bound_formula(params), abs=1e-6)

    def test_probe_guard(self):
        with pytest.raises(NotCertifiedError):
            rd.uniqueness_probe((PI / 2, PI / 2, PI))

    def test_modal_state(self):
        report = rd.uniqueness_probe((PI / 3, PI / 3, PI))
        assert report.modal_bell_state in (0, 1, 2, 3)
