"""Membership, self-testing and tangent functionals for correlator points.

A correlator point is ``c = (c00, c01, c10, c11)`` with ``c_xy = <A_x B_y>``.
Membership in the set of quantum correlators with uniform marginals uses
the eight arcsine conditions

    S_ij = sum_{(x,y) != (i,j)} asin c_xy - asin c_ij,   -pi <= S_ij <= pi,

and a condition is *saturated* when S_ij = xi * pi with xi in {-1, +1}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bell_family import BellFunctional, BellParameters, make_functional, quantum_bound
from .errors import NotOnBoundaryError

SATURATION_TOL = 1e-10
PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))

# (i, j, xi) in lexicographic order with xi = -1 before +1.
CONDITIONS = tuple((i, j, xi) for i, j in PAIRS for xi in (-1, 1))
CANONICAL_CONDITION = (0, 1, 1)

INTERIOR, BOUNDARY, OUTSIDE = "interior", "boundary", "outside"


def check_point(c: ArrayLike) -> NDArray[np.float64]:
    """Validate a correlator 4-vector (or a batch of them)."""
    arr = np.asarray(c, dtype=float)
    if arr.shape[-1:] != (4,):
        raise ValueError(f"correlator points have 4 entries, got shape {arr.shape}")
    if np.any(np.isnan(arr)) or np.any(np.abs(arr) > 1 + 1e-12):
        raise ValueError(f"correlators must lie in [-1, 1], got {c}")
    return np.clip(arr, -1.0, 1.0)


def masanes_conditions(c: ArrayLike) -> NDArray[np.float64]:
    """The four sums S_ij in ``PAIRS`` order; accepts leading batch axes."""
    s = np.arcsin(check_point(c))
    return s.sum(axis=-1, keepdims=True) - 2 * s


def saturated_conditions(c: ArrayLike, tol: float = SATURATION_TOL) -> list[tuple[int, int, int]]:
    values = masanes_conditions(c)
    out = []
    for k, (i, j) in enumerate(PAIRS):
        for xi in (-1, 1):
            if abs(values[k] - xi * math.pi) <= tol:
                out.append((i, j, xi))
    return out


@dataclass(frozen=True)
class Membership:
    status: str
    saturated: tuple[tuple[int, int, int], ...]
    values: tuple[float, float, float, float]

    @property
    def on_boundary(self) -> bool:
        return self.status == BOUNDARY


def masanes_membership(c: ArrayLike, tol: float = SATURATION_TOL) -> Membership:
    values = masanes_conditions(c)
    if np.any(np.abs(values) > math.pi + tol):
        status = OUTSIDE
        saturated: list = []
    else:
        saturated = saturated_conditions(c, tol)
        status = BOUNDARY if saturated else INTERIOR
    return Membership(status, tuple(saturated), tuple(float(v) for v in values))


def extremal_count(c: ArrayLike, tol: float = SATURATION_TOL) -> int:
    """Number of correlators whose arccos lies in {0, pi}."""
    alpha = np.arccos(check_point(c))
    return int(np.sum((alpha <= tol) | (alpha >= math.pi - tol)))


def wang_selftest_check(c: ArrayLike, tol: float = SATURATION_TOL) -> bool:
    """Some arcsine condition is saturated and at most one |c_xy| equals 1."""
    m = masanes_membership(c, tol)
    return m.on_boundary and extremal_count(c, tol) <= 1


# --- relabelling symmetries ----------------------------------------------


def _signed_perm(perm: Iterable[int], signs: Iterable[float]) -> NDArray[np.float64]:
    """Matrix g with (g c)_k = signs[k] * c[perm[k]]."""
    g = np.zeros((4, 4))
    for k, (src, s) in enumerate(zip(perm, signs)):
        g[k, src] = s
    return g


# Generators acting on (c00, c01, c10, c11).
GENERATORS = {
    "swap_alice_inputs": _signed_perm((2, 3, 0, 1), (1, 1, 1, 1)),
    "swap_bob_inputs": _signed_perm((1, 0, 3, 2), (1, 1, 1, 1)),
    "flip_alice_output_x1": _signed_perm((0, 1, 2, 3), (1, 1, -1, -1)),
    "flip_bob_output_y1": _signed_perm((0, 1, 2, 3), (1, -1, 1, -1)),
    "flip_alice_output_x0": _signed_perm((0, 1, 2, 3), (-1, -1, 1, 1)),
    "swap_parties": _signed_perm((0, 2, 1, 3), (1, 1, 1, 1)),
}


def _enumerate_group() -> tuple[tuple[NDArray[np.float64], tuple[str, ...]], ...]:
    """Breadth-first closure of the generators, identity first.

    Each element carries the shortest generator word producing it (generators
    applied left to right in the order of ``GENERATORS``), which documents
    exactly which relabelling the tangent construction applied.
    """
    names = list(GENERATORS)
    found = [(np.eye(4), ())]
    keys = {np.eye(4).tobytes()}
    frontier = list(found)
    while frontier:
        nxt = []
        for g, word in frontier:
            for name in names:
                h = GENERATORS[name] @ g
                key = h.tobytes()
                if key not in keys:
                    keys.add(key)
                    item = (h, word + (name,))
                    found.append(item)
                    nxt.append(item)
        frontier = nxt
    return tuple(found)


RELABELLINGS = _enumerate_group()


def _condition_map(g: NDArray[np.float64]) -> dict[tuple[int, int, int], tuple[int, int, int]]:
    """Where each saturated condition of c goes when c is replaced by g c.

    Computed once from a generic point: S(g c) is a signed permutation of
    S(c), read off numerically.
    """
    c = np.array([0.31, -0.47, 0.12, 0.68])
    s = masanes_conditions(c)
    t = masanes_conditions(g @ c)
    out = {}
    for k, (i, j) in enumerate(PAIRS):
        matches = [(m, sg) for m in range(4) for sg in (1, -1) if abs(t[m] - sg * s[k]) < 1e-12]
        if len(matches) != 1:
            raise RuntimeError("relabelling does not permute the arcsine conditions")
        m, sg = matches[0]
        for xi in (-1, 1):
            out[(i, j, xi)] = (*PAIRS[m], sg * xi)
    return out


CONDITION_MAPS = tuple(_condition_map(g) for g, _ in RELABELLINGS)


@dataclass(frozen=True)
class TangentResult:
    """Tangent functional at a boundary point.

    ``params`` are family coordinates in the relabelled (canonical) frame;
    ``functional`` is mapped back to the caller's labelling, so
    ``functional.value(point) - quantum_bound == check``.
    """

    params: BellParameters
    functional: BellFunctional
    quantum_bound: float
    check: float
    condition: tuple[int, int, int]
    saturated: tuple[tuple[int, int, int], ...]
    relabelling: tuple[str, ...]
    matrix: NDArray[np.float64]
    degenerate: bool


def tangent_from_boundary(c: ArrayLike, tol: float = SATURATION_TOL) -> TangentResult:
    """Family member whose hyperplane touches the quantum set at ``c``.

    The lowest saturated condition (lexicographic, xi = -1 first) is moved
    to the orientation S_01 = +pi by the first relabelling (breadth-first
    order) that does so. There alpha00 + alpha10 = alpha01 - alpha11 =: vartheta
    and (vartheta, pi/2 - alpha00, pi/2 - alpha01) reproduces the point.
    ``degenerate`` flags several saturated conditions or a zero quantum bound.
    """
    point = check_point(c)
    m = masanes_membership(point, tol)
    if not m.on_boundary:
        raise NotOnBoundaryError(f"point {point} is {m.status}, not on the boundary")
    cond = m.saturated[0]
    for (g, word), cmap in zip(RELABELLINGS, CONDITION_MAPS):
        if cmap[cond] == CANONICAL_CONDITION:
            break
    else:  # pragma: no cover - the group is transitive on conditions
        raise RuntimeError(f"no relabelling maps {cond} to the canonical orientation")

    alpha = np.arccos(g @ point)
    vartheta = alpha[0] + alpha[2]
    params = BellParameters(vartheta, math.pi / 2 - alpha[0], math.pi / 2 - alpha[1])
    canon = make_functional(params)
    eta = quantum_bound(params)
    functional = BellFunctional(g.T @ canon.coefficients, None)
    check = functional.value(point) - eta
    degenerate = len(m.saturated) > 1 or abs(eta) <= tol
    return TangentResult(params, functional, eta, check, cond, m.saturated, word, g, degenerate)


# --- batch mode -------------------------------------------------------------

BATCH_FIELDS = ("c00", "c01", "c10", "c11", "status", "saturated", "wang")


def read_points(path) -> NDArray[np.float64]:
    """Correlator rows from CSV; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        for n, row in enumerate(csv.reader(fh)):
            if not row or all(not x.strip() for x in row):
                continue
            try:
                vals = [float(x) for x in row[:4]]
            except ValueError:
                if n == 0:
                    continue
                raise ValueError(f"row {n + 1}: cannot parse {row!r}") from None
            if len(vals) != 4:
                raise ValueError(f"row {n + 1}: expected 4 correlators, got {len(vals)}")
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, 4)


def classify_rows(points: ArrayLike, tol: float = SATURATION_TOL) -> list[dict]:
    out = []
    for c in np.asarray(points, dtype=float).reshape(-1, 4):
        m = masanes_membership(c, tol)
        sat = ";".join(f"{i}{j}{'+' if xi > 0 else '-'}" for i, j, xi in m.saturated)
        out.append(
            {
                "c00": repr(float(c[0])),
                "c01": repr(float(c[1])),
                "c10": repr(float(c[2])),
                "c11": repr(float(c[3])),
                "status": m.status,
                "saturated": sat,
                "wang": str(wang_selftest_check(c, tol)).lower(),
            }
        )
    return out


def write_classification(rows: list[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=BATCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
