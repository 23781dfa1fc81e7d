import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellkey import bell_family as bf
from bellkey import sos
from bellkey.errors import DegenerateParametersError, NotCertifiedError
from bellkey.strategy import reduced_frame_strategy, target_strategy

from conftest import random_triples

PI = math.pi
angle = st.floats(-PI, PI, allow_nan=False)


class TestWeights:
    def test_reference_point(self):
        """Frozen oracle values at (pi/3, pi/3, pi)."""
        c0, c1 = sos.sos_weights((PI / 3, PI / 3, PI))
        assert c0 == pytest.approx(-1 / (2 * math.sqrt(3)), abs=1e-12)
        assert c1 == pytest.approx(-1 / (4 * math.sqrt(3)), abs=1e-12)

    def test_same_sign_iff_condition(self):
        """c0 * c1 > 0 exactly when the self-test condition holds (1e4 samples)."""
        rng = np.random.default_rng(11)
        for t, p, w in rng.uniform(-PI, PI, (10_000, 3)):
            if abs(math.sin(t)) < 1e-6 or abs(bf.condition_product((t, p, w))) < 1e-9:
                continue
            c0, c1 = sos.sos_weights((t, p, w))
            assert (c0 * c1 > 0) == bf.selftest_condition((t, p, w))

    def test_degenerate_theta(self):
        with pytest.raises(DegenerateParametersError):
            sos.sos_weights((0.0, 0.3, 0.4))

    def test_not_certified(self):
        with pytest.raises(NotCertifiedError):
            sos.build_certificate((0.3, 0.1, 0.2))
        cert = sos.build_certificate((0.3, 0.1, 0.2), require_selftest=False)
        assert not cert.certifies_bound


class TestOperatorIdentity:
    @settings(max_examples=50)
    @given(angle, angle, angle)
    def test_identity_holds_for_any_sin_theta(self, t, p, w):
        if abs(math.sin(t)) < 1e-3:
            return
        cert = sos.build_certificate((t, p, w), require_selftest=False)
        assert sos.verify_operator_identity(cert, trials=5, plane="bloch") <= 1e-12

    @pytest.mark.parametrize("plane", ["XY", "ZX", "bloch"])
    def test_planes(self, plane):
        cert = sos.build_certificate((PI / 3, PI / 3, PI))
        assert sos.verify_operator_identity(cert, trials=50, plane=plane) <= 1e-12

    def test_deterministic_default_rng(self):
        cert = sos.build_certificate((PI / 3, PI / 3, PI))
        assert sos.verify_operator_identity(cert) == sos.verify_operator_identity(cert)


class TestStrategyResiduals:
    @pytest.mark.parametrize("builder", [target_strategy, reduced_frame_strategy])
    def test_vanish_on_target(self, builder):
        for p in random_triples(50, 5, selftest_only=True, min_sin_theta=1e-3):
            cert = sos.build_certificate(p)
            r0, r1 = sos.residuals_at_strategy(cert, builder(p))
            assert r0 <= 1e-10 and r1 <= 1e-10

    def test_shifted_operator_is_psd(self):
        """|eta_Q| I - sign(eta_Q) B has no negative eigenvalue for random observables."""
        rng = np.random.default_rng(3)
        for p in random_triples(100, 9, selftest_only=True, min_sin_theta=1e-3):
            obs = [sos._random_observable(rng, "bloch") for _ in range(4)]
            assert sos.shifted_min_eigenvalue(p, *obs) >= -1e-10

    def test_expectation_is_sos_value(self):
        """<psi|eta I - B|psi> equals c0 ||R0 psi||^2 + c1 ||R1 psi||^2 for any state."""
        rng = np.random.default_rng(4)
        cert = sos.build_certificate((PI / 3, PI / 3, PI))
        obs = [sos._random_observable(rng, "bloch") for _ in range(4)]
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        op = cert.eta_q * np.eye(4) - sos.bell_operator(bf.family_coefficients(*cert.params), *obs)
        lhs = np.real(np.vdot(psi, op @ psi))
        r0, r1 = cert.polynomials(*obs)
        rhs = cert.c0 * np.linalg.norm(r0 @ psi) ** 2 + cert.c1 * np.linalg.norm(r1 @ psi) ** 2
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestWorkedValues:
    def test_chsh_weights(self):
        assert sos.sos_weights((-PI / 2, 3 * PI / 4, PI / 4)) == pytest.approx((0.25, 0.25))

    def test_trivial_point_refused(self):
        with pytest.raises(NotCertifiedError):
            sos.build_certificate((PI / 2, PI / 2, PI))

    @pytest.mark.parametrize("params", [(-PI / 2, 3 * PI / 4, PI / 4), (PI / 3, PI / 3, PI), (1.0, 2.0, 2.5)])
    def test_identity_examples(self, params):
        cert = sos.build_certificate(params, require_selftest=False)
        assert sos.verify_operator_identity(cert, trials=100) <= 1e-12

    def test_mismatched_strategy_breaks_saturation(self):
        cert = sos.build_certificate((PI / 3, PI / 3, PI))
        assert max(sos.residuals_at_strategy(cert, target_strategy((PI / 3, PI / 3, 0.9 * PI)))) > 1e-3
