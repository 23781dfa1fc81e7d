"""Asymptotic key and randomness rates at self-tested points.

At a self-tested point the devices hold a maximally entangled pair that is
uncorrelated with Eve. Eve's uncertainty then equals the entropy of the
observed statistics: H(A|X=0,E) = 1, and H(AB|X=0,Y=1,E) is the Shannon
entropy of the (0, 1) distribution (2 bits when sin(omega) = 0). The key
rate follows the Devetak-Winter form ``1 - H(A|X=0,Y=0,B)``. Everything is
in bits per entangled pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from . import qmat
from .bell_family import BellParameters, as_params, selftest_condition
from .boundary import masanes_membership, wang_selftest_check
from .errors import NotCertifiedError, RangeError
from .strategy import behaviour_from_correlators, chsh_max, correlators_closed_form

BISECTION_TOL = 1e-10
RATE_TOL = 1e-12


def reconciliation_entropy(params) -> float:
    """H(A|X=0,Y=0,B) = H_bin((1 + sin phi)/2)."""
    p = as_params(params)
    return qmat.binary_entropy((1 + math.sin(p.phi)) / 2)


def _target_joint(params, x: int, y: int) -> np.ndarray:
    return behaviour_from_correlators(correlators_closed_form(params)).joint(x, y)


def _require_selftest(p: BellParameters) -> None:
    if not selftest_condition(p):
        raise NotCertifiedError(f"self-test condition fails at {p}; no entropy certificate")


def _require_wang(p: BellParameters) -> None:
    if not wang_selftest_check(correlators_closed_form(p)):
        raise NotCertifiedError(f"correlators at {p} fail the singlet self-test criterion")


def key_rate_at_selftest(params) -> float:
    p = as_params(params)
    _require_selftest(p)
    return 1.0 - reconciliation_entropy(p)


def key_rate_from_correlators(params) -> float:
    """Key rate when all four correlators are constrained (Wang-gated)."""
    p = as_params(params)
    _require_wang(p)
    return 1.0 - qmat.conditional_entropy(_target_joint(p, 0, 0))


def global_rate_at_selftest(params) -> float:
    """H(AB) of the (x, y) = (0, 1) distribution at a self-tested point."""
    p = as_params(params)
    _require_selftest(p)
    return qmat.joint_entropy(_target_joint(p, 0, 1))


def global_rate_from_correlators(params) -> float:
    p = as_params(params)
    _require_wang(p)
    return qmat.joint_entropy(_target_joint(p, 0, 1))


@dataclass(frozen=True)
class RateReport:
    """Rates at one parameter point; rates are ``None`` when not certified."""

    params: BellParameters
    key_rate: float | None
    global_rate: float | None
    chsh_max: float
    reconciliation: float
    selftested: bool

    @classmethod
    def at(cls, params) -> "RateReport":
        p = as_params(params)
        ok = selftest_condition(p)
        rec = reconciliation_entropy(p)
        key = 1.0 - rec if ok else None
        glob = qmat.joint_entropy(_target_joint(p, 0, 1)) if ok else None
        return cls(p, key, glob, chsh_max(correlators_closed_form(p)), rec, ok)


# --- CHSH lines ---------------------------------------------------------------

Mode = Literal["key_line", "keyrand_line"]

_LINES: dict[str, tuple[float, float, float]] = {
    # mode: (omega, theta ceiling, largest target)
    "key_line": (5 * math.pi / 6, math.pi / 3, 2.5),
    "keyrand_line": (math.pi, math.pi / 4, 1 + math.sqrt(2)),
}


def line_chsh(mode: Mode, theta: float, eps_prime: float) -> float:
    """CHSH value of the target strategy on a line (phi = pi/2 - eps_prime)."""
    omega = _line(mode)[0]
    c = correlators_closed_form((theta, math.pi / 2 - eps_prime, omega))
    return float(chsh_max(c))


def line_chsh_formula(mode: Mode, theta: float, eps_prime: float) -> float:
    """Closed forms of the same values, used to cross-check :func:`line_chsh`."""
    if mode == "key_line":
        w = 5 * math.pi / 6
        return math.cos(eps_prime) + math.sin(w) + math.cos(theta - eps_prime) - math.sin(theta + w)
    _line(mode)
    return math.cos(eps_prime) + math.cos(theta - eps_prime) + math.sin(theta)


def _line(mode: str) -> tuple[float, float, float]:
    try:
        return _LINES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(_LINES)}") from None


def achievable_interval(mode: Mode, eps_prime: float) -> tuple[float, float]:
    """(low, high) with low open: CHSH over theta in (eps_prime, ceiling]."""
    omega, ceiling, _ = _line(mode)
    if not 0 < eps_prime < ceiling:
        return (math.nan, math.nan)
    return line_chsh_formula(mode, eps_prime, eps_prime), line_chsh_formula(mode, ceiling, eps_prime)


def find_params_for_chsh(target_s: float, mode: Mode = "key_line", eps_prime: float = 1e-6) -> BellParameters:
    """Bisection for theta on the mode's line so that the CHSH value is ``target_s``.

    The line formula is checked to be increasing on a grid over the interval
    before bisecting. Returns (theta, pi/2 - eps_prime, omega_mode).
    """
    omega, ceiling, s_max = _line(mode)
    if not 0 < eps_prime < ceiling:
        raise RangeError(f"eps_prime must lie in (0, {ceiling:.6g})", math.nan, math.nan)
    f: Callable[[float], float] = lambda th: line_chsh_formula(mode, th, eps_prime)
    low, high = f(eps_prime), f(ceiling)
    grid = np.linspace(eps_prime, ceiling, 257)
    vals = np.array([f(t) for t in grid])
    if np.any(np.diff(vals) <= 0):
        raise RangeError(f"CHSH is not increasing on ({eps_prime}, {ceiling}]", low, high)
    # Targets are confined to the mode's claimed range (2, s_max] intersected
    # with what this eps_prime actually reaches.
    lo_target, hi_target = max(low, 2.0), min(high, s_max)
    if not lo_target < target_s <= hi_target + 1e-12:
        raise RangeError(
            f"target {target_s} outside the achievable interval ({lo_target:.12g}, {hi_target:.12g}]",
            lo_target,
            hi_target,
        )
    a, b = eps_prime, ceiling
    if target_s >= high:
        theta = ceiling
    else:
        while b - a > BISECTION_TOL:
            mid = (a + b) / 2
            if f(mid) < target_s:
                a = mid
            else:
                b = mid
        theta = (a + b) / 2
    return BellParameters(theta, math.pi / 2 - eps_prime, omega)


# --- proposition reports --------------------------------------------------------

REPORT_FIELDS = ("theta", "phi", "omega", "condition", "key_rate", "global_rate", "chsh_max", "pass")

CHSH_5_2 = 2.5
CHSH_TSIRELSON_TRIANGLE = 3 * math.sqrt(3) / 2
CHSH_1_SQRT2 = 1 + math.sqrt(2)
PROP3_EPS_MAX = 2 - 0.75 * math.log2(3)
PROP5_EPS_MAX = qmat.binary_entropy((2 + math.sqrt(2)) / 4)


@dataclass(frozen=True)
class ReportRow:
    params: BellParameters
    condition: bool
    key_rate: float | None
    global_rate: float | None
    chsh_max: float
    passed: bool
    note: str = ""

    def as_csv(self) -> dict:
        fmt = lambda v: "" if v is None else repr(float(v))
        t, p, w = self.params
        return {
            "theta": repr(t),
            "phi": repr(p),
            "omega": repr(w),
            "condition": str(self.condition).lower(),
            "key_rate": fmt(self.key_rate),
            "global_rate": fmt(self.global_rate),
            "chsh_max": repr(float(self.chsh_max)),
            "pass": str(self.passed).lower(),
        }


@dataclass(frozen=True)
class PropositionReport:
    prop: int
    rows: tuple[ReportRow, ...]
    summary: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and all(
            v for k, v in self.summary.items() if k.startswith("check_")
        )

    def write_csv(self, fh) -> None:
        write_report_csv(self.rows, fh)


def write_report_csv(rows, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv())


def _in_range(s: float, high: float) -> bool:
    return 2.0 < s <= high + 1e-12


def _open_grid(low: float, high: float, n: int) -> np.ndarray:
    """n points in (low, high]."""
    return low + (high - low) * np.arange(1, n + 1) / n


def _selftest_row(params, s_high: float, want_global: bool, want_key: float | None, note="") -> ReportRow:
    p = as_params(params)
    rep = RateReport.at(p)
    ok = rep.selftested and _in_range(rep.chsh_max, s_high)
    if want_global:
        ok = ok and rep.global_rate is not None and abs(rep.global_rate - 2.0) <= RATE_TOL
    if want_key is not None:
        ok = ok and rep.key_rate is not None and abs(rep.key_rate - want_key) <= RATE_TOL
    return ReportRow(p, rep.selftested, rep.key_rate, rep.global_rate if want_global else None, rep.chsh_max, ok, note)


def _prop2(grid: int) -> tuple[list[ReportRow], dict]:
    # Inside the omega = pi triangle: from next to the local corner
    # (theta, phi) = (0, pi/2) up to the CHSH maximum at (pi/3, pi/3).
    eps0 = 1e-4
    start = np.array([2 * eps0, math.pi / 2 - eps0])
    end = np.array([math.pi / 3, math.pi / 3])
    rows = []
    for u in np.linspace(0.0, 1.0, grid):
        t, p = start + u * (end - start)
        rows.append(_selftest_row((t, p, math.pi), CHSH_TSIRELSON_TRIANGLE, True, None))
    chsh = [r.chsh_max for r in rows]
    summary = {
        "chsh_min": min(chsh),
        "chsh_max": max(chsh),
        "check_reaches_max": abs(max(chsh) - CHSH_TSIRELSON_TRIANGLE) <= 1e-9,
        "check_approaches_2": min(chsh) - 2 < 1e-3,
    }
    return rows, summary


def _prop_eps_line(mode: Mode, grid: int, eps_max: float, closed_end: bool, want_global: bool):
    s_high = _line(mode)[2]
    eps_prime = 1e-4
    rows = []
    for s in np.linspace(2 + 1e-3, s_high, grid):
        p = find_params_for_chsh(float(s), mode, eps_prime)
        row = _selftest_row(p, s_high, want_global, 1 - reconciliation_entropy(p), note="s-sweep")
        ok = row.passed and abs(row.chsh_max - s) <= 1e-8
        rows.append(ReportRow(row.params, row.condition, row.key_rate, row.global_rate, row.chsh_max, ok, row.note))
    omega = _line(mode)[0]
    eps_ceiling = _line(mode)[1]
    eps_grid = _open_grid(0.0, eps_ceiling, grid) if closed_end else _open_grid(0.0, eps_ceiling, grid + 1)[:-1]
    for e in eps_grid:
        # theta midway through (eps', pi/2), the region where the condition holds
        theta = (e + math.pi / 2) / 2
        p = BellParameters(theta, math.pi / 2 - e, omega)
        row = _selftest_row(p, math.inf, want_global, None, note="eps-sweep")
        eps = reconciliation_entropy(p)
        ok = row.passed and 0 < eps <= eps_max + 1e-12 and row.key_rate is not None
        rows.append(ReportRow(row.params, row.condition, row.key_rate, row.global_rate, row.chsh_max, ok, row.note))
    endpoint = reconciliation_entropy((0.0, math.pi / 2 - eps_ceiling, omega))
    s_rows = rows[:grid]
    summary = {
        "s_low": min(r.chsh_max for r in s_rows),
        "s_high": max(r.chsh_max for r in s_rows),
        "eps_endpoint": endpoint,
        "check_eps_endpoint": abs(endpoint - eps_max) <= 1e-12,
        "check_reaches_top": abs(rows[grid - 1].chsh_max - s_high) <= 1e-8,
    }
    return rows, summary


def _prop_perfect(grid: int, omega: float, ceiling: float, s_high: float, want_global: bool):
    from .boundary import saturated_conditions

    rows = []
    sat_11 = True
    for t in _open_grid(0.0, ceiling, grid):
        p = BellParameters(float(t), math.pi / 2, omega)
        c = correlators_closed_form(p)
        wang = wang_selftest_check(c)
        key = key_rate_from_correlators(p) if wang else None
        glob = global_rate_from_correlators(p) if (wang and want_global) else None
        s = float(chsh_max(c))
        ok = wang and key is not None and abs(key - 1.0) <= RATE_TOL and _in_range(s, s_high)
        if want_global:
            ok = ok and glob is not None and abs(glob - 2.0) <= RATE_TOL
        sat_11 &= (1, 1, 1) in saturated_conditions(c)
        rows.append(ReportRow(p, wang, key, glob, s, ok, "wang"))
    summary = {
        "chsh_max": max(r.chsh_max for r in rows),
        "check_reaches_top": abs(max(r.chsh_max for r in rows) - s_high) <= 1e-9,
        "check_saturates_11": sat_11,
        "check_on_boundary": all(masanes_membership(correlators_closed_form(r.params)).on_boundary for r in rows),
    }
    return rows, summary


def proposition_report(prop: int, grid: int = 100) -> PropositionReport:
    """Sweep a proposition's construction and check every row against its claim.

    Props 3 and 5 run two sweeps: CHSH targets at eps' = 1e-4 (via
    :func:`find_params_for_chsh`) and eps' over its admissible range.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if prop == 2:
        rows, summary = _prop2(grid)
    elif prop == 3:
        rows, summary = _prop_eps_line("key_line", grid, PROP3_EPS_MAX, True, False)
    elif prop == 4:
        rows, summary = _prop_perfect(grid, 5 * math.pi / 6, math.pi / 3, CHSH_5_2, False)
    elif prop == 5:
        rows, summary = _prop_eps_line("keyrand_line", grid, PROP5_EPS_MAX, False, True)
    elif prop == 6:
        rows, summary = _prop_perfect(grid, math.pi, math.pi / 4, CHSH_1_SQRT2, True)
    else:
        raise ValueError(f"no report for proposition {prop}; expected 2..6")
    return PropositionReport(prop, tuple(rows), summary)
