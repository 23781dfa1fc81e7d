"""Self-testing Bell functionals and device-independent key rates.

The package covers a three-parameter family of correlator Bell functionals:
their local and quantum bounds, sum-of-squares certificates, a numerical
oracle over reduced two-qubit strategies, rates at self-tested points,
quantum-boundary geometry and a spot-checking protocol simulator.
"""

from .bell_family import (
    BellFunctional,
    BellParameters,
    known_inequality,
    local_bound_bruteforce,
    local_bound_formula,
    make_functional,
    quantum_bound,
    selftest_condition,
)
from .errors import (
    BellKeyError,
    ConvergenceError,
    DegenerateParametersError,
    InsufficientStatisticsError,
    NotCertifiedError,
    NotOnBoundaryError,
    RangeError,
)
from .strategy import Behaviour, TargetStrategy, chsh_scores, correlators_closed_form, target_strategy

__version__ = "0.1.0"

__all__ = [
    "BellFunctional",
    "BellParameters",
    "Behaviour",
    "TargetStrategy",
    "known_inequality",
    "local_bound_bruteforce",
    "local_bound_formula",
    "make_functional",
    "quantum_bound",
    "selftest_condition",
    "chsh_scores",
    "correlators_closed_form",
    "target_strategy",
    "BellKeyError",
    "ConvergenceError",
    "DegenerateParametersError",
    "InsufficientStatisticsError",
    "NotCertifiedError",
    "NotOnBoundaryError",
    "RangeError",
]
