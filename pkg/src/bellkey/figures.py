"""Grid sweeps of the CHSH landscape for the two contour figures.

Figure 1 varies (theta, phi) at omega = pi; figure 2 varies (theta, omega)
at phi = pi/2. Both axes run over [0, 2 pi] inclusive, so a resolution of
241 puts every multiple of pi/120 (and so every landmark) on the grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import qmat
from .bell_family import SELFTEST_TOL
from .boundary import SATURATION_TOL, masanes_conditions
from .strategy import chsh_max

LANDMARK_TOL = 1e-3
SWEEP_FIELDS = ("axis1", "axis2", "chsh_max", "condition_flag", "rate")


@dataclass(frozen=True)
class SweepSpec:
    """Which figure to sweep and at what resolution (points per axis)."""

    figure: int
    resolution: int = 241

    def __post_init__(self):
        if self.figure not in (1, 2):
            raise ValueError(f"figure must be 1 or 2, got {self.figure}")
        if self.resolution < 2:
            raise ValueError(f"resolution must be at least 2, got {self.resolution}")

    @property
    def fixed(self) -> dict[str, float]:
        return {"omega": math.pi} if self.figure == 1 else {"phi": math.pi / 2}

    @property
    def axis_names(self) -> tuple[str, str]:
        return ("theta", "phi") if self.figure == 1 else ("theta", "omega")


@dataclass(frozen=True)
class Landmark:
    name: str
    expected: float
    location: tuple[float, float]
    found: float
    found_location: tuple[float, float]
    passed: bool


@dataclass(frozen=True, eq=False)
class SweepResult:
    spec: SweepSpec
    axis: NDArray[np.float64]
    chsh: NDArray[np.float64]  # [i, j] over (axis1[i], axis2[j])
    flag: NDArray[np.bool_]
    rate: NDArray[np.float64]  # NaN where the gate fails
    landmarks: tuple[Landmark, ...]

    @property
    def passed(self) -> bool:
        return all(lm.passed for lm in self.landmarks)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_FIELDS)
        n = self.axis.size
        for i in range(n):
            for j in range(n):
                r = self.rate[i, j]
                writer.writerow(
                    [
                        repr(float(self.axis[i])),
                        repr(float(self.axis[j])),
                        repr(float(self.chsh[i, j])),
                        int(self.flag[i, j]),
                        "" if np.isnan(r) else repr(float(r)),
                    ]
                )


def _correlators(theta, phi, omega) -> NDArray[np.float64]:
    return np.stack(
        np.broadcast_arrays(np.sin(phi), np.sin(omega), np.sin(theta + phi), np.sin(theta + omega)),
        axis=-1,
    )


def _wang_mask(c: NDArray[np.float64]) -> NDArray[np.bool_]:
    s = masanes_conditions(c)
    inside = np.all(np.abs(s) <= math.pi + SATURATION_TOL, axis=-1)
    saturated = np.any(np.abs(np.abs(s) - math.pi) <= SATURATION_TOL, axis=-1)
    alpha = np.arccos(np.clip(c, -1, 1))
    extremal = np.sum((alpha <= SATURATION_TOL) | (alpha >= math.pi - SATURATION_TOL), axis=-1)
    return inside & saturated & (extremal <= 1)


def sweep(spec: SweepSpec) -> SweepResult:
    axis = np.linspace(0.0, 2 * math.pi, spec.resolution)
    a1, a2 = np.meshgrid(axis, axis, indexing="ij")
    if spec.figure == 1:
        theta, phi, omega = a1, a2, math.pi
        c = _correlators(theta, phi, omega)
        prod = np.cos(theta + phi) * np.cos(phi) * np.cos(theta + omega) * np.cos(omega)
        flag = prod < -SELFTEST_TOL
        # global randomness from the (0, 1) distribution: 1 + H_bin((1 + c01)/2)
        rate = np.where(flag, 1 + qmat.binary_entropy((1 + np.clip(c[..., 1], -1, 1)) / 2), np.nan)
    else:
        theta, phi, omega = a1, math.pi / 2, a2
        c = _correlators(theta, phi, omega)
        flag = _wang_mask(c)
        # key from the (0, 0) distribution: 1 - H_bin((1 + c00)/2)
        rate = np.where(flag, 1 - qmat.binary_entropy((1 + np.clip(c[..., 0], -1, 1)) / 2), np.nan)
    chsh = chsh_max(c)
    return SweepResult(spec, axis, chsh, flag, rate, _landmarks(spec, axis, chsh))


def _nearest(axis: NDArray[np.float64], x: float) -> int:
    return int(np.argmin(np.abs(axis - x)))


def _landmarks(spec: SweepSpec, axis, chsh) -> tuple[Landmark, ...]:
    def global_max(name, expected, loc):
        i, j = np.unravel_index(int(np.argmax(chsh)), chsh.shape)
        at = chsh[_nearest(axis, loc[0]), _nearest(axis, loc[1])]
        found = float(chsh[i, j])
        ok = bool(abs(found - expected) <= LANDMARK_TOL and abs(at - found) <= LANDMARK_TOL)
        return Landmark(name, expected, loc, found, (float(axis[i]), float(axis[j])), ok)

    if spec.figure == 1:
        return (global_max("max", 3 * math.sqrt(3) / 2, (math.pi / 3, math.pi / 3)),)

    top = global_max("max", 2.5, (math.pi / 3, 5 * math.pi / 6))
    # along the omega = pi row the maximum is 1 + sqrt 2, reached at theta = pi/4
    row = chsh[:, _nearest(axis, math.pi)]
    i = int(np.argmax(row))
    expected = 1 + math.sqrt(2)
    at = row[_nearest(axis, math.pi / 4)]
    ok = bool(abs(row[i] - expected) <= LANDMARK_TOL and abs(at - row[i]) <= LANDMARK_TOL)
    ridge = Landmark("omega=pi row max", expected, (math.pi / 4, math.pi), float(row[i]), (float(axis[i]), math.pi), ok)
    return (top, ridge)
