"""The three-parameter family of correlator Bell functionals.

A functional is a coefficient vector over the correlators
``(<A0B0>, <A0B1>, <A1B0>, <A1B1>)``. For parameters ``(theta, phi, omega)``
the coefficients are

    c00 =  cos(t+p) cos(t+w) cos w      c01 = -cos(t+p) cos(t+w) cos p
    c10 = -cos p cos w cos(t+w)         c11 =  cos p cos w cos(t+p)

with quantum bound ``sin t sin(w-p) sin(t+w+p)`` whenever
``cos(t+p) cos p cos(t+w) cos w < 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateParametersError

# Product threshold for the strict inequality cos(..)...cos(..) < 0. Keeps
# cos(pi/2) ~ 6e-17 from flipping the verdict.
SELFTEST_TOL = 1e-12

_TWO_PI = 2 * math.pi


def normalize_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    r = math.remainder(float(x), _TWO_PI)
    if r <= -math.pi:
        r += _TWO_PI
    return r


@dataclass(frozen=True)
class BellParameters:
    """Family coordinates in radians, normalized to (-pi, pi]."""

    theta: float
    phi: float
    omega: float

    def __post_init__(self):
        for name in ("theta", "phi", "omega"):
            object.__setattr__(self, name, normalize_angle(getattr(self, name)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta, self.phi, self.omega)

    def __iter__(self):
        return iter(self.as_tuple())


def as_params(params) -> BellParameters:
    if isinstance(params, BellParameters):
        return params
    theta, phi, omega = params
    return BellParameters(theta, phi, omega)


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """Coefficients over (<A0B0>, <A0B1>, <A1B0>, <A1B1>).

    ``params`` is set when the functional comes from the family; free-form
    functionals leave it ``None``.
    """

    coefficients: NDArray[np.float64]
    params: BellParameters | None = field(default=None)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(4)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @cached_property
    def local_bound(self) -> float:
        return local_bound_bruteforce(self)

    @cached_property
    def quantum_bound(self) -> float | None:
        """Signed quantum bound for family members; ``None`` for free-form."""
        if self.params is None:
            return None
        return quantum_bound(self.params)

    def value(self, correlators: ArrayLike) -> float:
        return float(np.dot(self.coefficients, np.asarray(correlators, dtype=float)))

    def scaled(self, factor: float) -> "BellFunctional":
        return BellFunctional(self.coefficients * factor, None)

    def __eq__(self, other):
        if not isinstance(other, BellFunctional):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients) and self.params == other.params

    def __hash__(self):
        return hash((tuple(self.coefficients), self.params))


def family_coefficients(theta: float, phi: float, omega: float) -> NDArray[np.float64]:
    ctp = math.cos(theta + phi)
    ctw = math.cos(theta + omega)
    cp = math.cos(phi)
    cw = math.cos(omega)
    return np.array([ctp * ctw * cw, -ctp * ctw * cp, -cp * cw * ctw, cp * cw * ctp])


def make_functional(params) -> BellFunctional:
    p = as_params(params)
    return BellFunctional(family_coefficients(*p), p)


def local_bound_formula(params) -> float:
    """Closed-form local bound: max over the two sign branches."""
    t, p, w = as_params(params)
    ctp, ctw, cp, cw = math.cos(t + p), math.cos(t + w), math.cos(p), math.cos(w)
    branches = (
        abs(ctw * cw * (ctp + s * cp)) + abs(ctp * cp * (ctw + s * cw)) for s in (1.0, -1.0)
    )
    return max(branches)


# Rows are (a0 b0, a0 b1, a1 b0, a1 b1) for every a0, a1, b0, b1 in {+1, -1}.
DETERMINISTIC_CORRELATORS = np.array(
    [
        (a0 * b0, a0 * b1, a1 * b0, a1 * b1)
        for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4)
    ],
    dtype=float,
)


def local_bound_bruteforce(functional) -> float:
    """Max of the functional over the 16 deterministic local strategies."""
    coeffs = functional.coefficients if isinstance(functional, BellFunctional) else functional
    coeffs = np.asarray(coeffs, dtype=float).reshape(4)
    return float(np.max(DETERMINISTIC_CORRELATORS @ coeffs))


def quantum_bound(params) -> float:
    """Signed quantum value sin(t) sin(w - p) sin(t + w + p)."""
    t, p, w = as_params(params)
    return math.sin(t) * math.sin(w - p) * math.sin(t + w + p)


def condition_product(params) -> float:
    t, p, w = as_params(params)
    return math.cos(t + p) * math.cos(p) * math.cos(t + w) * math.cos(w)


def selftest_condition(params) -> bool:
    """True iff cos(t+p) cos p cos(t+w) cos w is strictly negative."""
    return condition_product(params) < -SELFTEST_TOL


# --- literature special cases -------------------------------------------


def known_inequality(kind: str, *args: float) -> tuple[BellParameters, float]:
    """Map a named inequality onto family parameters and a divisor.

    Dividing the family coefficients (and bounds) by the returned divisor
    gives the literature normalization.

    ``kind`` is one of ``"CHSH"``, ``"I_delta"`` (delta), ``"J_gamma"``
    (gamma), ``"tilted"`` (phi) and ``"symmetric"`` (alpha, beta).
    """
    key = kind.lower()
    if key == "chsh":
        _expect_args(kind, args, 0)
        return BellParameters(-math.pi / 2, 3 * math.pi / 4, math.pi / 4), 1 / (2 * math.sqrt(2))

    if key in ("i_delta", "idelta", "delta"):
        (delta,) = _expect_args(kind, args, 1)
        if not 0 < delta <= math.pi / 6:
            raise ValueError(f"I_delta requires delta in (0, pi/6], got {delta}")
        params = BellParameters(delta + math.pi / 2, 0.0, delta + math.pi / 2)
        return params, -math.sin(delta) ** 2 * math.cos(2 * delta)

    if key in ("j_gamma", "jgamma", "gamma"):
        (gamma,) = _expect_args(kind, args, 1)
        phi = 3 * math.pi / 2 - 3 * math.asin(math.sin(math.pi / 6 + gamma))
        params = BellParameters(-2 * phi / 3, phi, phi / 3)
        divisor = math.cos(phi / 3) ** 3
        _require_selftest(kind, params, divisor)
        return params, divisor

    if key == "tilted":
        (phi,) = _expect_args(kind, args, 1)
        if not 0 < phi < math.pi / 2:
            raise ValueError(f"tilted CHSH requires phi in (0, pi/2), got {phi}")
        return BellParameters(math.pi / 2, phi, -phi), -math.sin(phi) * math.cos(phi)

    if key == "symmetric":
        alpha, beta = _expect_args(kind, args, 2)
        phi = -2 * beta
        omega = alpha - beta
        params = BellParameters(omega - phi, phi, omega)
        divisor = math.cos(alpha - beta)
        _require_selftest(kind, params, divisor)
        return params, divisor

    raise ValueError(f"unknown inequality kind {kind!r}")


def _expect_args(kind: str, args: tuple, n: int) -> tuple:
    if len(args) != n:
        raise ValueError(f"{kind} takes {n} parameter(s), got {len(args)}")
    return args


def _require_selftest(kind: str, params: BellParameters, divisor: float) -> None:
    # No explicit range is attached to these families; admit exactly the
    # values that land on a self-testing member with a usable divisor.
    if not selftest_condition(params) or abs(divisor) < SELFTEST_TOL:
        raise ValueError(f"{kind} parameters map outside the self-testing region: {params}")


# --- Le et al. parametrization --------------------------------------------


def _le_angles(alpha: float, beta: float, gamma: float) -> tuple[float, float, float, float]:
    return alpha, beta, gamma, -(alpha + beta + gamma)


def le_delta(alpha: float, beta: float, gamma: float) -> float:
    """Product sin(alpha) sin(beta) sin(gamma) sin(delta), delta = -(alpha+beta+gamma)."""
    return math.prod(math.sin(a) for a in _le_angles(alpha, beta, gamma))


def le_f_vector(alpha: float, beta: float, gamma: float) -> NDArray[np.float64]:
    """f = [1/sin a, 1/sin b, 1/sin g, 1/sin d] / K with K the sum of cotangents."""
    angles = _le_angles(alpha, beta, gamma)
    sines = np.array([math.sin(a) for a in angles])
    if np.any(np.abs(sines) < SELFTEST_TOL):
        raise DegenerateParametersError("a sine in the f-vector vanishes")
    k = float(np.sum(np.cos(angles) / sines))
    if not math.isfinite(k) or abs(k) < SELFTEST_TOL:
        raise DegenerateParametersError(f"normalization K = {k!r} is zero or undefined")
    return (1.0 / sines) / k


def from_le_parameters(alpha: float, beta: float, gamma: float) -> BellParameters:
    """(theta, phi, omega) = (-alpha - gamma, pi/2 + alpha, pi/2 - beta)."""
    le_f_vector(alpha, beta, gamma)  # raises on a degenerate K or sine
    return BellParameters(-alpha - gamma, math.pi / 2 + alpha, math.pi / 2 - beta)
