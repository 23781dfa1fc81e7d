"""Rank-two sum-of-squares certificates for the shifted Bell operator.

For the family member (theta, phi, omega)

    eta_Q * I - B = c0 R0^2 + c1 R1^2,
    R0 = sin t B0 + cos(t+p) A0 - cos p A1,
    R1 = sin t B1 + cos(t+w) A0 - cos w A1,

with c0 = -cos w cos(t+w) / (2 sin t) and c1 = cos p cos(t+p) / (2 sin t).
The identity only uses A_x^2 = B_y^2 = I, so it is checked on random
involutions rather than symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import qmat
from .bell_family import (
    BellParameters,
    SELFTEST_TOL,
    as_params,
    family_coefficients,
    quantum_bound,
    selftest_condition,
)
from .errors import DegenerateParametersError, NotCertifiedError
from .strategy import TargetStrategy

SIN_THETA_TOL = 1e-12


@dataclass(frozen=True)
class SosCertificate:
    """Weights and linear polynomials of the decomposition.

    ``r0_spec`` / ``r1_spec`` hold the coefficients of (B_y, A0, A1) in R0 / R1.
    """

    params: BellParameters
    c0: float
    c1: float
    r0_spec: tuple[float, float, float]
    r1_spec: tuple[float, float, float]

    @property
    def eta_q(self) -> float:
        return quantum_bound(self.params)

    @property
    def certifies_bound(self) -> bool:
        """Both weights share a sign, so one of +/-(eta_Q I - B) is PSD."""
        return self.c0 * self.c1 > 0

    def polynomials(self, a0, a1, b0, b1) -> tuple[NDArray, NDArray]:
        """R0, R1 as 4x4 operators for the given qubit observables."""
        eye = qmat.IDENTITY2
        ops_a = (qmat.tensor_product(a0, eye), qmat.tensor_product(a1, eye))
        ops_b = (qmat.tensor_product(eye, b0), qmat.tensor_product(eye, b1))
        out = []
        for spec, by in ((self.r0_spec, ops_b[0]), (self.r1_spec, ops_b[1])):
            kb, ka0, ka1 = spec
            out.append(kb * by + ka0 * ops_a[0] + ka1 * ops_a[1])
        return out[0], out[1]


def sos_weights(params) -> tuple[float, float]:
    t, p, w = as_params(params)
    s = math.sin(t)
    if abs(s) < SIN_THETA_TOL:
        raise DegenerateParametersError(f"sin(theta) = {s!r}: quantum bound is 0, no certificate")
    c0 = -math.cos(w) * math.cos(t + w) / (2 * s)
    c1 = math.cos(p) * math.cos(t + p) / (2 * s)
    return c0, c1


def build_certificate(params, require_selftest: bool = True) -> SosCertificate:
    """Build the certificate; by default refuse points violating the self-test condition.

    ``require_selftest=False`` still returns a (non-certifying) decomposition
    whenever sin(theta) != 0; the operator identity holds there as well.
    """
    p = as_params(params)
    c0, c1 = sos_weights(p)
    if require_selftest and not selftest_condition(p):
        raise NotCertifiedError(f"self-test condition fails at {p}: weights {c0:.3g}, {c1:.3g}")
    t, ph, w = p
    r0 = (math.sin(t), math.cos(t + ph), -math.cos(ph))
    r1 = (math.sin(t), math.cos(t + w), -math.cos(w))
    return SosCertificate(p, c0, c1, r0, r1)


def bell_operator(coefficients, a0, a1, b0, b1) -> NDArray[np.complex128]:
    ops_a = (a0, a1)
    ops_b = (b0, b1)
    out = np.zeros((4, 4), dtype=complex)
    for k, (x, y) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        out += coefficients[k] * qmat.tensor_product(ops_a[x], ops_b[y])
    return out


def _random_observable(rng: np.random.Generator, plane: str) -> NDArray[np.complex128]:
    if plane == "bloch":
        return qmat.bloch_observable(rng.normal(size=3))
    return qmat.planar_observable(plane, rng.uniform(-math.pi, math.pi))


def identity_residual(cert: SosCertificate, a0, a1, b0, b1) -> float:
    """Max entrywise |(eta_Q I - B) - (c0 R0^dag R0 + c1 R1^dag R1)|."""
    coeffs = family_coefficients(*cert.params)
    shifted = cert.eta_q * np.eye(4) - bell_operator(coeffs, a0, a1, b0, b1)
    r0, r1 = cert.polynomials(a0, a1, b0, b1)
    sos = cert.c0 * r0.conj().T @ r0 + cert.c1 * r1.conj().T @ r1
    return float(np.max(np.abs(shifted - sos)))


def verify_operator_identity(
    cert: SosCertificate,
    trials: int = 100,
    rng: np.random.Generator | None = None,
    plane: str = "XY",
) -> float:
    """Worst identity residual over ``trials`` random observable draws.

    ``plane`` is ``"XY"``, ``"ZX"`` or ``"bloch"`` (uniform Bloch directions).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(trials):
        obs = [_random_observable(rng, plane) for _ in range(4)]
        worst = max(worst, identity_residual(cert, *obs))
    return worst


def residuals_at_strategy(cert: SosCertificate, strat: TargetStrategy) -> tuple[float, float]:
    """Norms ||R0 psi||, ||R1 psi|| with the strategy's own observables."""
    r0, r1 = cert.polynomials(*strat.observables())
    psi = np.asarray(strat.state, dtype=complex)
    return float(np.linalg.norm(r0 @ psi)), float(np.linalg.norm(r1 @ psi))


def shifted_min_eigenvalue(params, a0, a1, b0, b1) -> float:
    """Smallest eigenvalue of |eta_Q| I - sign(eta_Q) B for given observables."""
    p = as_params(params)
    eta = quantum_bound(p)
    sign = 1.0 if eta >= 0 else -1.0
    coeffs = sign * family_coefficients(*p)
    shifted = abs(eta) * np.eye(4) - bell_operator(coeffs, a0, a1, b0, b1)
    return float(np.linalg.eigvalsh(shifted)[0])


__all__ = [
    "SosCertificate",
    "build_certificate",
    "sos_weights",
    "verify_operator_identity",
    "residuals_at_strategy",
    "identity_residual",
    "bell_operator",
    "shifted_min_eigenvalue",
    "SELFTEST_TOL",
]
