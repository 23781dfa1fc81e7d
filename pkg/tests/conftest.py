import math

import numpy as np
import pytest

from bellkey.bell_family import selftest_condition

PI = math.pi


def random_triples(n, seed, selftest_only=False, min_sin_theta=0.0):
    """Seeded uniform triples in (-pi, pi]^3, optionally filtered."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = tuple(float(x) for x in rng.uniform(-PI, PI, 3))
        if selftest_only and not selftest_condition(p):
            continue
        if abs(math.sin(p[0])) <= min_sin_theta:
            continue
        out.append(p)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Verdict lines recorded by the acceptance suite, printed after the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
