"""Numerical oracle over reduced two-qubit strategies.

A reduced strategy is a Bell-diagonal state ``sum_a lambda_a |Phi_a><Phi_a|``
with ZX-plane observables; Alice's first angle is gauge-fixed to 0. The
oracle maximizes |<B>| over this space with a derivative-free search
(coarse grid, then a compass pattern search with a halving step), which keeps it
independent of the closed-form quantum bound it is used to check.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import qmat
from .bell_family import as_params, family_coefficients, quantum_bound, selftest_condition
from .errors import ConvergenceError, NotCertifiedError
from .sos import bell_operator

SIMPLEX_TOL = 1e-12
_TWO_PI = 2 * math.pi


def _bell_table() -> NDArray[np.float64]:
    """T[alpha, p, q] = <Phi_alpha| P (x) Q |Phi_alpha> for P, Q in (Z, X)."""
    paulis = (qmat.SIGMA_Z, qmat.SIGMA_X)
    table = np.empty((4, 2, 2))
    for alpha, phi in enumerate(qmat.BELL_BASIS):
        for i, p in enumerate(paulis):
            for j, q in enumerate(paulis):
                table[alpha, i, j] = qmat.expectation(phi, qmat.tensor_product(p, q))
    table.setflags(write=False)
    return table


BELL_TABLE = _bell_table()


@dataclass(frozen=True, eq=False)
class ReducedStrategy:
    """Bell-diagonal weights plus ZX angles (a0 = 0, a1, b0, b1)."""

    lambdas: NDArray[np.float64]
    a1: float
    b0: float
    b1: float

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float).reshape(4)
        if np.any(lam < -SIMPLEX_TOL) or abs(lam.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"lambdas must lie on the probability simplex, got {lam}")
        lam = np.clip(lam, 0.0, None)
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.a1, self.b0, self.b1)

    def state(self) -> NDArray[np.complex128]:
        return bell_diagonal_state(self.lambdas)

    def observables(self):
        plane = "ZX"
        return (
            qmat.planar_observable(plane, 0.0),
            qmat.planar_observable(plane, self.a1),
            qmat.planar_observable(plane, self.b0),
            qmat.planar_observable(plane, self.b1),
        )


def bell_diagonal_state(lambdas: ArrayLike) -> NDArray[np.complex128]:
    lam = np.asarray(lambdas, dtype=float).reshape(4)
    return sum(w * qmat.projector(phi) for w, phi in zip(lam, qmat.BELL_BASIS))


def reduced_bell_value(params, rs: ReducedStrategy) -> float:
    """Tr[rho B] from explicit 4x4 matrices."""
    coeffs = family_coefficients(*as_params(params))
    op = bell_operator(coeffs, *rs.observables())
    return float(np.real(np.trace(rs.state() @ op)))


def reduced_values(coeffs: ArrayLike, lambdas: ArrayLike, angles: ArrayLike) -> NDArray[np.float64]:
    """Batched Bell values.

    ``lambdas`` has shape (N, 4), ``angles`` shape (N, 3) holding (a1, b0, b1).
    """
    lam = np.atleast_2d(np.asarray(lambdas, dtype=float))
    ang = np.atleast_2d(np.asarray(angles, dtype=float))
    c = np.asarray(coeffs, dtype=float).reshape(2, 2)
    n = ang.shape[0]
    a = np.stack([np.zeros(n), ang[:, 0]], axis=1)
    b = ang[:, 1:3]
    u = np.stack([np.cos(a), np.sin(a)], axis=-1)  # (N, x, p)
    v = np.stack([np.cos(b), np.sin(b)], axis=-1)  # (N, y, q)
    m = lam @ BELL_TABLE.reshape(4, 4)
    m = m.reshape(-1, 2, 2)
    corr = np.einsum("nxp,npq,nyq->nxy", u, m, v)
    return np.einsum("xy,nxy->n", c, corr)


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for :func:`maximize_reduced` and :func:`uniqueness_probe`.

    ``max_evals`` bounds the total number of objective evaluations of one
    search; ``starts`` is only used by the uniqueness probe.
    """

    resolution: int = 32
    n_refine: int = 4
    step_floor: float = 1e-9
    max_evals: int = 2_000_000
    seed: int = 0
    jitter: bool = False
    starts: int = 64

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.n_refine < 1 or self.max_evals < 1 or self.starts < 1:
            raise ValueError("n_refine, max_evals and starts must be positive")
        if not self.step_floor > 0:
            raise ValueError("step_floor must be positive")


# Lambda transfer moves: (source, destination) for every ordered pair.
_TRANSFERS = [(i, j) for i in range(4) for j in range(4) if i != j]

# Angle moves: every nonzero direction in {-1, 0, 1}^3. Axis moves alone stall
# at saddles whose ascent directions are diagonal (deterministic points are
# stationary, and often exactly such saddles).
_ANGLE_MOVES = np.array(
    [d for d in itertools.product((-1, 0, 1), repeat=3) if any(d)], dtype=float
)


def _descend(coeffs, lam, ang, sign, step, floor, budget):
    """Pattern search maximizing sign * value. Returns (value, lam, ang, evals, converged)."""
    lam = lam.copy()
    ang = ang.copy()
    max_step = step
    current = sign * reduced_values(coeffs, lam[None], ang[None])[0]
    evals = 1
    n_ang = len(_ANGLE_MOVES)
    n_moves = n_ang + len(_TRANSFERS)
    while step >= floor:
        if evals + n_moves > budget:
            return sign * current, lam, ang, evals, False
        cand_ang = np.repeat(ang[None], n_moves, axis=0)
        cand_ang[:n_ang] += step * _ANGLE_MOVES
        cand_lam = np.repeat(lam[None], n_moves, axis=0)
        for r, (i, j) in enumerate(_TRANSFERS, start=n_ang):
            d = min(step, lam[i])
            cand_lam[r, i] -= d
            cand_lam[r, j] += d
        vals = sign * reduced_values(coeffs, cand_lam, cand_ang)
        evals += n_moves
        best = int(np.argmax(vals))
        if vals[best] > current:
            current = vals[best]
            ang = cand_ang[best]
            lam = np.clip(cand_lam[best], 0.0, None)
            lam /= lam.sum()
            # expand after a success so long flat valleys are crossed quickly
            step = min(2 * step, max_step)
        else:
            step /= 2
    return sign * current, lam, ang, evals, True


_FD_STEP = 1e-3
_MAX_ESCAPES = 20


def _escape_saddle(coeffs, lam, ang, sign, current, max_step):
    """Try to leave a stationary point along an ascent eigendirection.

    The compass moves cannot follow an ascent direction whose curvature is
    tiny compared with the descent directions around it; deterministic
    strategies near the local/quantum boundary are exactly such saddles.
    A finite-difference Hessian (function values only) exposes the
    direction. Returns (improved, ang, value, evals).
    """
    eye = np.eye(3) * _FD_STEP
    offsets = [np.zeros(3)]
    for i in range(3):
        for j in range(i, 3):
            for si in (1, -1):
                for sj in (1, -1):
                    offsets.append(si * eye[i] + sj * eye[j])
    pts = ang + np.array(offsets)
    vals = sign * reduced_values(coeffs, np.tile(lam, (len(pts), 1)), pts)
    hess = np.empty((3, 3))
    k = 1
    for i in range(3):
        for j in range(i, 3):
            pp, pm, mp, mm = vals[k : k + 4]
            hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * _FD_STEP**2)
            k += 4
    evals = len(pts)
    w, v = np.linalg.eigh(hess)
    if w[-1] <= 0:
        return False, ang, current, evals
    direction = v[:, -1]
    lengths = max_step * 2.0 ** -np.arange(12)
    trial = np.concatenate([lengths, -lengths])[:, None] * direction + ang
    tvals = sign * reduced_values(coeffs, np.tile(lam, (len(trial), 1)), trial)
    evals += len(trial)
    best = int(np.argmax(tvals))
    if tvals[best] > current:
        return True, trial[best], tvals[best], evals
    return False, ang, current, evals


def _refine(coeffs, lam, ang, sign, step, floor, budget):
    """Compass search, then saddle escapes followed by fresh searches."""
    val, lam, ang, evals, converged = _descend(coeffs, lam, ang, sign, step, floor, budget)
    for _ in range(_MAX_ESCAPES):
        if not converged:
            break
        moved, new_ang, _, used = _escape_saddle(coeffs, lam, ang, sign, sign * val, step)
        evals += used
        if not moved:
            break
        val, lam, ang, used, converged = _descend(
            coeffs, lam, new_ang, sign, step, floor, budget - evals
        )
        evals += used
    return val, lam, ang, evals, converged


def _select_starts(mags: NDArray[np.float64], k: int) -> list[int]:
    """Flat indices of up to ``k`` grid cells seeding the refinement.

    Only discrete local maxima of |value| (periodic axis neighbours) are
    kept, and cells with equal values (symmetric copies of one strategy) are
    collapsed, so the starts land in distinct basins. Without this, exact
    copies of a deterministic strategy can crowd out a slightly lower grid
    cell that sits in the basin of the true maximum.
    """
    is_peak = np.ones(mags.shape, dtype=bool)
    for axis in (1, 2, 3):
        for shift in (1, -1):
            is_peak &= mags >= np.roll(mags, shift, axis=axis)
    flat = mags.ravel()
    cells = np.flatnonzero(is_peak.ravel())
    cells = cells[np.argsort(-flat[cells], kind="stable")]
    chosen: list[int] = []
    seen: list[float] = []
    for cell in cells:
        v = flat[cell]
        if any(abs(v - u) <= 1e-12 for u in seen):
            continue
        seen.append(v)
        chosen.append(int(cell))
        if len(chosen) == k:
            break
    return chosen


def _wrap(x):
    return np.remainder(np.asarray(x) + math.pi, _TWO_PI) - math.pi


def maximize_reduced(params, search: SearchConfig | None = None) -> tuple[float, ReducedStrategy]:
    """Maximize |Tr[rho B]| over reduced strategies; returns (signed value, strategy).

    Raises :class:`ConvergenceError` when the evaluation budget runs out
    before the step floor is reached.
    """
    search = SearchConfig() if search is None else search
    p = as_params(params)
    coeffs = family_coefficients(*p)
    rng = np.random.default_rng(search.seed)
    res = search.resolution
    h = _TWO_PI / res

    offset = rng.uniform(0, h, size=3) if search.jitter else np.zeros(3)
    axis = -math.pi + h * (np.arange(res) + 0.5)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3) + offset
    n_grid = grid.shape[0]
    corners = np.eye(4)
    # values[alpha, g] for point masses on each Bell state
    values = np.stack([reduced_values(coeffs, np.tile(corners[k], (n_grid, 1)), grid) for k in range(4)])
    evals = values.size
    if evals > search.max_evals:
        raise ConvergenceError("budget smaller than the coarse grid", float("nan"), None, 0)

    top = _select_starts(np.abs(values).reshape(4, res, res, res), search.n_refine)

    best_val, best_lam, best_ang = 0.0, None, None
    for cell in top:
        alpha, g = divmod(int(cell), n_grid)
        lam = corners[alpha].copy()
        ang = grid[g].copy()
        if search.jitter:
            mix = rng.uniform(0.0, 0.75)
            lam = (1 - mix) * lam + mix / 4
            ang = ang + rng.uniform(-h / 2, h / 2, size=3)
        sign = 1.0 if values[alpha, g] >= 0 else -1.0
        val, lam, ang, used, converged = _refine(
            coeffs, lam, ang, sign, h, search.step_floor, search.max_evals - evals
        )
        evals += used
        if best_lam is None or abs(val) > abs(best_val):
            best_val, best_lam, best_ang = val, lam, ang
        if not converged:
            strat = ReducedStrategy(best_lam, *_wrap(best_ang))
            raise ConvergenceError(
                f"evaluation budget {search.max_evals} exhausted before step floor",
                best_val,
                strat,
                evals,
            )
    return float(best_val), ReducedStrategy(best_lam, *(float(x) for x in _wrap(best_ang)))


# --- uniqueness probe -----------------------------------------------------


def to_canonical_frame(alpha: int, angles, value_sign: float, eta_sign: float) -> NDArray[np.float64]:
    """Map (a1, b0, b1) optimal for Phi_alpha to the equivalent Phi_0 angles.

    On Phi_1..Phi_3 the correlator is cos(a+b), -cos(a+b), -cos(a-b), so Bob's
    angles are reflected or shifted by pi. A further pi shift of Bob's angles
    flips the overall sign, mapping the -eta extremum onto +eta.
    """
    a1, b0, b1 = (float(x) for x in angles)
    b = np.array([b0, b1])
    if alpha == 1:
        b = -b
    elif alpha == 2:
        b = math.pi - b
    elif alpha == 3:
        b = b + math.pi
    if value_sign != eta_sign:
        b = b + math.pi
    return _wrap(np.array([a1, b[0], b[1]]))


@dataclass(frozen=True)
class ProbeRun:
    start: int
    value: float
    lambdas: tuple[float, ...]
    angles: tuple[float, float, float]
    converged: bool
    bell_state: int | None = None
    reflection: int | None = None
    angle_error: float | None = None


@dataclass(frozen=True)
class UniquenessReport:
    params: tuple[float, float, float]
    eta_q: float
    tol: float
    angle_tol: float
    runs: tuple[ProbeRun, ...]
    clusters: dict = field(default_factory=dict)
    violations: tuple[str, ...] = ()

    @property
    def n_converged(self) -> int:
        return sum(1 for r in self.runs if r.converged)

    @property
    def passed(self) -> bool:
        return self.n_converged > 0 and not self.violations

    @property
    def modal_bell_state(self) -> int | None:
        if not self.clusters:
            return None
        counts = Counter()
        for (alpha, _t, _s), n in self.clusters.items():
            counts[alpha] += n
        return counts.most_common(1)[0][0]


PROBE_SEARCH = SearchConfig(resolution=12, n_refine=1, jitter=True, max_evals=400_000)


def uniqueness_probe(
    params,
    tol: float = 1e-5,
    starts: int = 64,
    seed: int = 0,
    search: SearchConfig | None = None,
    angle_tol: float | None = None,
) -> UniquenessReport:
    """Run independent jittered searches and classify those reaching |eta_Q|.

    A run within ``tol`` of |eta_Q| must put all but ``tol`` of its weight
    on one Bell state, and its angles (mapped to the Phi_0 frame) must equal
    +/-(theta, pi/2 - phi, pi/2 - omega) within ``angle_tol`` (default
    ``tol``). Runs that stop short of |eta_Q| are recorded but not judged.
    """
    p = as_params(params)
    if not selftest_condition(p):
        raise NotCertifiedError(f"self-test condition fails at {p}")
    if starts < 64:
        raise ValueError("the probe needs at least 64 starts")
    base = PROBE_SEARCH if search is None else search
    angle_tol = tol if angle_tol is None else angle_tol
    eta = quantum_bound(p)
    eta_sign = 1.0 if eta >= 0 else -1.0
    t, ph, w = p
    target = np.array([t, math.pi / 2 - ph, math.pi / 2 - w])

    runs, violations = [], []
    clusters: Counter = Counter()
    for i in range(starts):
        sub_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        cfg = replace(base, seed=sub_seed, jitter=True)
        try:
            val, rs = maximize_reduced(p, cfg)
        except ConvergenceError as exc:
            rs = exc.best_strategy
            runs.append(ProbeRun(i, exc.best_value, tuple(rs.lambdas), rs.angles, False))
            continue
        if abs(abs(val) - abs(eta)) > tol:
            runs.append(ProbeRun(i, val, tuple(rs.lambdas), rs.angles, False))
            continue
        alpha = int(np.argmax(rs.lambdas))
        vsign = 1.0 if val >= 0 else -1.0
        canon = to_canonical_frame(alpha, rs.angles, vsign, eta_sign)
        errs = [float(np.max(np.abs(_wrap(canon - s * target)))) for s in (1, -1)]
        refl = int(np.argmin(errs))
        run = ProbeRun(i, val, tuple(rs.lambdas), rs.angles, True, alpha, refl, errs[refl])
        runs.append(run)
        if 1.0 - rs.lambdas[alpha] > tol:
            violations.append(f"start {i}: weights {np.round(rs.lambdas, 6)} are not a point mass")
        if errs[refl] > angle_tol:
            violations.append(f"start {i}: angles off the target pattern by {errs[refl]:.3g}")
        clusters[(alpha, refl, int(vsign))] += 1

    return UniquenessReport(p.as_tuple(), eta, tol, angle_tol, tuple(runs), dict(clusters), tuple(violations))
