"""Target two-qubit strategies, their behaviours and CHSH-type scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import qmat
from .bell_family import BellFunctional, as_params

# Correlator vectors are ordered (x, y) = (0,0), (0,1), (1,0), (1,1).
PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class TargetStrategy:
    """Pure two-qubit state with planar observables for Alice and Bob."""

    state: NDArray[np.complex128]
    alice_angles: tuple[float, float]
    bob_angles: tuple[float, float]
    plane: str = "XY"

    def alice(self, x: int) -> NDArray[np.complex128]:
        return qmat.planar_observable(self.plane, self.alice_angles[x])

    def bob(self, y: int) -> NDArray[np.complex128]:
        return qmat.planar_observable(self.plane, self.bob_angles[y])

    def observables(self):
        return self.alice(0), self.alice(1), self.bob(0), self.bob(1)


def target_strategy(params) -> TargetStrategy:
    """State (|00> + i|11>)/sqrt 2 with A = (0, theta), B = (phi, omega) in the XY plane."""
    t, p, w = as_params(params)
    return TargetStrategy(qmat.TARGET_STATE, (0.0, t), (p, w), "XY")


def reduced_frame_strategy(params) -> TargetStrategy:
    """Equivalent strategy on Phi_0 with ZX-plane angles (0, theta) and (pi/2 - phi, pi/2 - omega)."""
    t, p, w = as_params(params)
    return TargetStrategy(qmat.BELL_BASIS[0], (0.0, t), (math.pi / 2 - p, math.pi / 2 - w), "ZX")


def correlators_born(strategy: TargetStrategy) -> NDArray[np.float64]:
    """Correlators computed from the 4x4 operators via the Born rule."""
    return np.array(
        [qmat.born_correlator(strategy.state, strategy.alice(x), strategy.bob(y)) for x, y in PAIRS]
    )


def correlators_closed_form(params) -> NDArray[np.float64]:
    """(sin phi, sin omega, sin(theta + phi), sin(theta + omega))."""
    t, p, w = as_params(params)
    return np.array([math.sin(p), math.sin(w), math.sin(t + p), math.sin(t + w)])


@dataclass(frozen=True, eq=False)
class Behaviour:
    """Conditional distribution ``p[x, y, a, b]``."""

    distributions: NDArray[np.float64]

    def __post_init__(self):
        p = np.array(self.distributions, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise ValueError(f"behaviour must have shape (2, 2, 2, 2), got {p.shape}")
        for x, y in PAIRS:
            qmat.validate_distribution(p[x, y])
        p.setflags(write=False)
        object.__setattr__(self, "distributions", p)

    def joint(self, x: int, y: int) -> NDArray[np.float64]:
        return self.distributions[x, y]

    @property
    def correlators(self) -> NDArray[np.float64]:
        signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
        return np.array([float(np.sum(signs * self.distributions[x, y])) for x, y in PAIRS])

    def alice_marginals(self) -> NDArray[np.float64]:
        """p(a | x, y), shape (2, 2, 2)."""
        return self.distributions.sum(axis=3)

    def bob_marginals(self) -> NDArray[np.float64]:
        return self.distributions.sum(axis=2)


def behaviour_from_correlators(c: ArrayLike) -> Behaviour:
    """Uniform-marginal behaviour p(ab|xy) = (1 + (-1)^(a+b) c_xy) / 4."""
    c = np.asarray(c, dtype=float).reshape(4)
    if np.any(np.abs(c) > 1 + qmat.EXACT_TOL):
        raise ValueError(f"correlators must lie in [-1, 1], got {c}")
    c = np.clip(c, -1.0, 1.0)
    p = np.empty((2, 2, 2, 2))
    for k, (x, y) in enumerate(PAIRS):
        same = (1 + c[k]) / 4
        diff = (1 - c[k]) / 4
        p[x, y] = [[same, diff], [diff, same]]
    return Behaviour(p)


def behaviour_from_strategy(strategy: TargetStrategy) -> Behaviour:
    """Full p(ab|xy) from the strategy's projectors (I +/- O)/2."""
    rho = qmat.projector(strategy.state)
    p = np.empty((2, 2, 2, 2))
    for x, y in PAIRS:
        for a in (0, 1):
            pa = (qmat.IDENTITY2 + (-1) ** a * strategy.alice(x)) / 2
            for b in (0, 1):
                pb = (qmat.IDENTITY2 + (-1) ** b * strategy.bob(y)) / 2
                p[x, y, a, b] = float(np.real(np.trace(np.kron(pa, pb) @ rho)))
    return Behaviour(p)


# The eight relabellings of <A0B0> + <A0B1> + <A1B0> - <A1B1>: every sign
# pattern with an odd number of minus signs. Listed explicitly on purpose.
CHSH_SIGNS = np.array(
    [
        (+1, +1, +1, -1),
        (+1, +1, -1, +1),
        (+1, -1, +1, +1),
        (-1, +1, +1, +1),
        (-1, -1, -1, +1),
        (-1, -1, +1, -1),
        (-1, +1, -1, -1),
        (+1, -1, -1, -1),
    ],
    dtype=float,
)


def chsh_scores(c: ArrayLike) -> tuple[NDArray[np.float64], float]:
    """All eight CHSH-type values and their maximum.

    ``c`` may carry leading batch dimensions; the maximum is then an array.
    """
    c = np.asarray(c, dtype=float)
    values = c @ CHSH_SIGNS.T
    best = values.max(axis=-1)
    return values, (float(best) if np.ndim(best) == 0 else best)


def chsh_max(c: ArrayLike):
    return chsh_scores(c)[1]


def evaluate(functional: BellFunctional | ArrayLike, c: ArrayLike) -> float:
    coeffs = functional.coefficients if isinstance(functional, BellFunctional) else functional
    return float(np.dot(np.asarray(coeffs, dtype=float), np.asarray(c, dtype=float)))
