"""Monte-Carlo simulation of a spot-checking DIQKD protocol.

Each round is a test round with probability ``q`` (uniform inputs, used to
estimate the Bell value) or a generation round (inputs fixed to 0, 0, giving
raw key). Devices are i.i.d. and described by a fixed :class:`Behaviour`.
Key accounting is the asymptotic rate times the number of generation rounds;
it is a projection, not a finite-size security claim.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .bell_family import BellFunctional, BellParameters, as_params, make_functional, quantum_bound, selftest_condition
from .errors import InsufficientStatisticsError
from .rates import key_rate_at_selftest
from .strategy import PAIRS, Behaviour, correlators_closed_form

ABORT_SIGMAS = 5.0
# Rounds are drawn in chunks so memory stays bounded for long runs; the
# chunk size is part of the random stream layout and therefore fixed.
_CHUNK = 1 << 20


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol knobs. ``abort_threshold`` of ``None`` means :func:`default_threshold`."""

    rounds: int
    q: float
    params: BellParameters
    abort_threshold: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "params", as_params(self.params))
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds}")
        if not 0 < self.q < 1:
            raise ValueError(f"test probability q must lie in (0, 1), got {self.q}")


def oriented_functional(params) -> BellFunctional:
    """Family functional scaled by sign(eta_Q) so its quantum bound is |eta_Q|."""
    p = as_params(params)
    eta = quantum_bound(p)
    f = make_functional(p)
    return f if eta >= 0 else BellFunctional(-f.coefficients, p)


def predicted_stderr(functional: BellFunctional, correlators: ArrayLike, tests_per_pair: float) -> float:
    c = np.asarray(correlators, dtype=float)
    var = np.sum(functional.coefficients**2 * (1 - c**2)) / tests_per_pair
    return float(math.sqrt(max(var, 0.0)))


def default_threshold(params, q: float, rounds: int) -> float:
    """|eta_Q| minus five predicted standard errors of the honest estimate."""
    p = as_params(params)
    f = oriented_functional(p)
    n = q * rounds / 4
    return abs(quantum_bound(p)) - ABORT_SIGMAS * predicted_stderr(f, correlators_closed_form(p), n)


def estimate_bell(tallies: ArrayLike, functional: BellFunctional) -> tuple[float, float]:
    """Plug-in estimate and binomial standard error from ``tallies[x, y, a, b]``."""
    t = np.asarray(tallies, dtype=float).reshape(2, 2, 2, 2)
    n = t.sum(axis=(2, 3))
    if np.any(n < 1):
        empty = [(x, y) for x, y in PAIRS if n[x, y] < 1]
        raise InsufficientStatisticsError(f"no test rounds recorded for input pairs {empty}")
    same = t[:, :, 0, 0] + t[:, :, 1, 1]
    corr = ((2 * same - n) / n).reshape(4)
    counts = n.reshape(4)
    coeffs = functional.coefficients
    estimate = float(np.dot(coeffs, corr))
    stderr = float(math.sqrt(np.sum(coeffs**2 * (1 - corr**2) / counts)))
    return estimate, stderr


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    test_counts: NDArray[np.int64]
    generation_counts: NDArray[np.int64]
    bell_estimate: float
    bell_stderr: float
    target: float
    threshold: float
    aborted: bool
    generation_rounds: int
    raw_key_agreement: float | None
    key_rate: float | None
    projected_key_bits: float
    config: ProtocolConfig = field(repr=False)

    @property
    def test_rounds(self) -> int:
        return int(self.test_counts.sum())

    def to_dict(self) -> dict:
        p = self.config.params
        return {
            "params": {"theta": p.theta, "phi": p.phi, "omega": p.omega},
            "rounds": int(self.config.rounds),
            "q": self.config.q,
            "seed": int(self.config.seed),
            "test_rounds": self.test_rounds,
            "generation_rounds": int(self.generation_rounds),
            "test_counts": self.test_counts.tolist(),
            "generation_counts": self.generation_counts.tolist(),
            "bell_estimate": self.bell_estimate,
            "bell_stderr": self.bell_stderr,
            "target": self.target,
            "abort_threshold": self.threshold,
            "aborted": bool(self.aborted),
            "raw_key_agreement": self.raw_key_agreement,
            "asymptotic_key_rate": self.key_rate,
            "projected_asymptotic_key_bits": self.projected_key_bits,
        }


def _draw_outcomes(rng: np.random.Generator, cdf_rows: NDArray[np.float64]) -> NDArray[np.int64]:
    """Outcome index ab = 2a + b for each row of cumulative probabilities."""
    u = rng.random(cdf_rows.shape[0])
    return np.minimum((u[:, None] >= cdf_rows[:, :3]).sum(axis=1), 3)


def simulate(behaviour: Behaviour, cfg: ProtocolConfig) -> ProtocolReport:
    rng = np.random.default_rng(cfg.seed)
    cdf = np.cumsum(behaviour.distributions.reshape(2, 2, 4), axis=-1)
    test_counts = np.zeros(16, dtype=np.int64)
    gen_counts = np.zeros(4, dtype=np.int64)
    remaining = int(cfg.rounds)
    while remaining > 0:
        m = min(remaining, _CHUNK)
        remaining -= m
        is_test = rng.random(m) < cfg.q
        n_test = int(is_test.sum())
        x = rng.integers(0, 2, n_test)
        y = rng.integers(0, 2, n_test)
        ab = _draw_outcomes(rng, cdf[x, y])
        test_counts += np.bincount(8 * x + 4 * y + ab, minlength=16)
        n_gen = m - n_test
        gen = _draw_outcomes(rng, np.broadcast_to(cdf[0, 0], (n_gen, 4)))
        gen_counts += np.bincount(gen, minlength=4)

    tallies = test_counts.reshape(2, 2, 2, 2)
    f = oriented_functional(cfg.params)
    estimate, stderr = estimate_bell(tallies, f)
    threshold = (
        default_threshold(cfg.params, cfg.q, cfg.rounds) if cfg.abort_threshold is None else cfg.abort_threshold
    )
    aborted = estimate < threshold
    n_gen = int(gen_counts.sum())
    agreement = float((gen_counts[0] + gen_counts[3]) / n_gen) if n_gen else None
    key_rate = key_rate_at_selftest(cfg.params) if selftest_condition(cfg.params) else None
    projected = 0.0 if (aborted or key_rate is None) else (1 - cfg.q) * cfg.rounds * key_rate
    return ProtocolReport(
        tallies,
        gen_counts.reshape(2, 2),
        estimate,
        stderr,
        abs(quantum_bound(cfg.params)),
        float(threshold),
        bool(aborted),
        n_gen,
        agreement,
        key_rate,
        float(projected),
        cfg,
    )


def raw_key_agreement(report: ProtocolReport) -> float:
    """Fraction of generation rounds with a = b."""
    g = report.generation_counts
    total = int(g.sum())
    if total == 0:
        raise InsufficientStatisticsError("no generation rounds")
    return float((g[0, 0] + g[1, 1]) / total)


def write_tallies_csv(report: ProtocolReport, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x", "y", "a", "b", "count"])
    t = report.test_counts
    for x, y in PAIRS:
        for a in (0, 1):
            for b in (0, 1):
                writer.writerow([x, y, a, b, int(t[x, y, a, b])])
