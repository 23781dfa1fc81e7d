"""Small complex-matrix core for qubit and two-qubit operators.

Matrices are plain ``numpy`` arrays of shape (2, 2) or (4, 4); states are
complex vectors of length 2 or 4; a joint distribution of two bits is a
(2, 2) real array indexed ``[a, b]``. Entropies are in bits.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

# Exact algebraic identities vs. formula-against-formula comparisons.
EXACT_TOL = 1e-12
FORMULA_TOL = 1e-9

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_PLANES = {
    "XY": (SIGMA_X, SIGMA_Y),
    "ZX": (SIGMA_Z, SIGMA_X),
}

for _m in (IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def _ket(*amplitudes: complex) -> NDArray[np.complex128]:
    v = np.array(amplitudes, dtype=complex)
    v.setflags(write=False)
    return v


_S = 1 / math.sqrt(2)

# (|00> + i|11>)/sqrt(2)
TARGET_STATE = _ket(_S, 0, 0, 1j * _S)

# Bell basis, in the order Phi_0 .. Phi_3.
BELL_BASIS = (
    _ket(_S, 0, 0, _S),
    _ket(_S, 0, 0, -_S),
    _ket(0, _S, _S, 0),
    _ket(0, _S, -_S, 0),
)


def tensor_product(a: ArrayLike, b: ArrayLike) -> NDArray[np.complex128]:
    """Kronecker product of two single-qubit operators."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"expected two 2x2 operators, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def planar_observable(plane: str, angle: float) -> NDArray[np.complex128]:
    """Return ``cos(angle) P1 + sin(angle) P2`` for the plane's ordered Pauli pair.

    ``plane`` is ``"XY"`` (P1 = X, P2 = Y) or ``"ZX"`` (P1 = Z, P2 = X).
    """
    try:
        p1, p2 = _PLANES[plane.upper()]
    except KeyError:
        raise ValueError(f"unknown plane {plane!r}; expected 'XY' or 'ZX'") from None
    return math.cos(angle) * p1 + math.sin(angle) * p2


def bloch_observable(direction: ArrayLike) -> NDArray[np.complex128]:
    """Observable ``n . sigma`` for a unit Bloch vector ``n``."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def projector(state: ArrayLike) -> NDArray[np.complex128]:
    v = np.asarray(state, dtype=complex)
    return np.outer(v, v.conj())


def is_hermitian(m: ArrayLike, tol: float = EXACT_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_involution(m: ArrayLike, tol: float = EXACT_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m @ m - np.eye(m.shape[0]))) <= tol)


def expectation(state: ArrayLike, operator: ArrayLike) -> float:
    """Real part of <state|operator|state> for a Hermitian operator."""
    v = np.asarray(state, dtype=complex)
    return float(np.real(np.vdot(v, np.asarray(operator) @ v)))


def born_correlator(state: ArrayLike, obs_a: ArrayLike, obs_b: ArrayLike) -> float:
    """<state| obs_a (x) obs_b |state> for a two-qubit pure state."""
    v = np.asarray(state, dtype=complex)
    if v.shape != (4,):
        raise ValueError(f"expected a two-qubit state vector, got shape {v.shape}")
    for name, obs in (("obs_a", obs_a), ("obs_b", obs_b)):
        if not is_hermitian(obs):
            raise ValueError(f"{name} is not Hermitian")
    return expectation(v, tensor_product(obs_a, obs_b))


def binary_entropy(p):
    """Binary entropy in bits, with 0 log 0 = 0. Accepts scalars or arrays."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < -EXACT_TOL) | (arr > 1 + EXACT_TOL)) or np.any(np.isnan(arr)):
        raise ValueError(f"probability outside [0, 1]: {p!r}")
    arr = np.clip(arr, 0.0, 1.0)
    out = shannon_terms(arr) + shannon_terms(1.0 - arr)
    if out.ndim == 0:
        return float(out)
    return out


def shannon_terms(p: NDArray[np.float64]) -> NDArray[np.float64]:
    """Elementwise -p log2 p with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return np.where(p > 0, -p * np.log2(safe), 0.0)


def shannon_entropy(probs: ArrayLike) -> float:
    return float(np.sum(shannon_terms(np.asarray(probs, dtype=float))))


def validate_distribution(joint: ArrayLike, tol: float = EXACT_TOL) -> NDArray[np.float64]:
    """Check and return a (2, 2) joint distribution ``p[a, b]``."""
    p = np.asarray(joint, dtype=float)
    if p.shape == (4,):
        p = p.reshape(2, 2)
    if p.shape != (2, 2):
        raise ValueError(f"joint distribution must have shape (2, 2), got {p.shape}")
    if np.any(p < -tol):
        raise ValueError("joint distribution has negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"joint distribution sums to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def joint_entropy(joint: ArrayLike) -> float:
    return shannon_entropy(validate_distribution(joint))


def conditional_entropy(joint: ArrayLike) -> float:
    """H(A|B) = H(AB) - H(B) in bits for ``joint[a, b]``."""
    p = validate_distribution(joint)
    return shannon_entropy(p) - shannon_entropy(p.sum(axis=0))
