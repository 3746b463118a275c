"""Device-independent randomness certified by Hardy-type paradoxes.

Modules: ``bell_core`` (behaviors, forms, deterministic vertices),
``lhv_oracle`` (classical optima), ``qubit_lab`` (two-qubit strategies),
``npa`` (moment-matrix relaxations), ``sdp_core`` (interior-point solver),
``protocols`` (certification and sweeps) and ``cli``.
"""

from .bell_core import Behavior, BehaviorForm, Constraint, DeterministicStrategy
from .lhv_oracle import Infeasible, LocalModel, lhv_optimize
from .protocols import (
    FAMILIES,
    CertificationResult,
    ProtocolInfeasible,
    ProtocolSolverFailure,
    build,
    certify,
    max_feasible,
    sweep,
)
from .qubit_lab import NoFeasiblePoint, QubitStrategy
from .sdp_core import SolverFailure, Status

__version__ = "0.1.0"

__all__ = [
    "Behavior",
    "BehaviorForm",
    "CertificationResult",
    "Constraint",
    "DeterministicStrategy",
    "FAMILIES",
    "Infeasible",
    "LocalModel",
    "NoFeasiblePoint",
    "ProtocolInfeasible",
    "ProtocolSolverFailure",
    "QubitStrategy",
    "SolverFailure",
    "Status",
    "build",
    "certify",
    "lhv_optimize",
    "max_feasible",
    "sweep",
]
