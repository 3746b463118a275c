"""Randomness certification for the Hardy, noisy-Hardy, Cabello, dimension-witness
Cabello and CHSH protocols.

Each protocol constrains the observed behavior; the adversary may pick any
behavior in the relaxation that satisfies those constraints.  The certified
guessing probability is the largest outcome probability (or conditional
probability) she can force on the (A_0, B_0) round.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

from . import lhv_oracle, qubit_lab
from .bell_core import (
    MINUS,
    PLUS,
    BehaviorForm,
    Constraint,
    chsh_form,
    marg_a,
    outcome_symbol,
    prob,
)
from .npa import assemble, behavior_form, build_structure, normalize_level
from .sdp_core import GAP_TOL, FEAS_TOL, Face, SdpSolution, Status, optimal_face, solve

log = logging.getLogger(__name__)

FAMILIES = ("hardy", "noisy-hardy", "cabello", "dw-cabello", "chsh")
PAIR, CONDITIONAL = "pair-guessing", "conditional-guessing"
OUTCOME_PAIRS = [(a, b) for a in (MINUS, PLUS) for b in (MINUS, PLUS)]
TSIRELSON = 2.0 * math.sqrt(2.0)

# nominal parameter ranges; values outside are legal and come back Infeasible
RANGES = {
    "hardy": (0.0, 0.0902),
    "noisy-hardy": (0.0, 1.0 / 3.0),
    "cabello": (0.0, 0.108),
    "dw-cabello": (0.0, 0.083),
    "chsh": (2.0, TSIRELSON),
}


class UnknownFamily(ValueError):
    pass


class ProtocolInfeasible(Exception):
    """The protocol parameter lies outside the relaxation's feasible range."""


class ProtocolSolverFailure(Exception):
    def __init__(self, msg: str, outcome: tuple[int, int] | None = None):
        super().__init__(msg)
        self.outcome = outcome


def _check_family(family: str) -> str:
    if family not in FAMILIES:
        raise UnknownFamily(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def _hardy_zeros() -> list[Constraint]:
    return [
        Constraint(prob(PLUS, PLUS, 0, 0), "==", 0.0),
        Constraint(prob(PLUS, MINUS, 1, 0), "==", 0.0),
        Constraint(prob(MINUS, PLUS, 0, 1), "==", 0.0),
    ]


def _cabello_zeros() -> list[Constraint]:
    return _hardy_zeros()[1:]


def _uniform_alice() -> list[Constraint]:
    return [Constraint(marg_a(a, x), "==", 0.5) for x in (0, 1) for a in (PLUS, MINUS)]


def cabello_form() -> BehaviorForm:
    return prob(PLUS, PLUS, 1, 1) - prob(PLUS, PLUS, 0, 0)


def figure_of_merit(family: str, parameter: float | None = None) -> tuple[BehaviorForm, list[Constraint]]:
    """The family's figure of merit and the constraints it is maximized under.

    ``parameter`` is only read by noisy-hardy, where it is the noise bound.
    """
    _check_family(family)
    if family == "hardy":
        return prob(PLUS, PLUS, 1, 1), _hardy_zeros()
    if family == "noisy-hardy":
        eps = 0.0 if parameter is None else float(parameter)
        return prob(PLUS, PLUS, 1, 1), [Constraint(c.form, "<=", eps) for c in _hardy_zeros()]
    if family == "cabello":
        return cabello_form(), _cabello_zeros()
    if family == "dw-cabello":
        return cabello_form(), _cabello_zeros() + _uniform_alice()
    return chsh_form(), []


@dataclass(frozen=True)
class ProtocolSpec:
    family: str
    parameter: float
    constraints: tuple[Constraint, ...]
    objective_kind: str
    npa_level: str = "1+AB"
    delta: float | None = None  # noisy-hardy: pinned p(+,+|A1,B1)

    @property
    def eqs(self) -> list[Constraint]:
        return [c for c in self.constraints if c.sense == "=="]

    @property
    def ineqs(self) -> list[Constraint]:
        return [c for c in self.constraints if c.sense != "=="]


def build(family: str, parameter: float, npa_level="1+AB") -> ProtocolSpec:
    _check_family(family)
    parameter = float(parameter)
    if not math.isfinite(parameter):
        raise ValueError("parameter must be finite")
    level = normalize_level(npa_level)
    merit, base = figure_of_merit(family, parameter)
    kind = CONDITIONAL if family == "dw-cabello" else PAIR
    delta = None
    if family == "noisy-hardy":
        delta = max_feasible(family, level, parameter)
        pin = Constraint(merit, "==", delta)
    else:
        pin = Constraint(merit, "==", parameter)
    return ProtocolSpec(family, parameter, tuple(base) + (pin,), kind, level, delta)


def _to_sdp(structure, objective: BehaviorForm, constraints: Sequence[Constraint], **kw):
    eqs, ineqs = [], []
    for c in constraints:
        if c.sense == "==":
            eqs.append((behavior_form(structure, c.form), c.value))
        else:
            ineqs += [(behavior_form(structure, f), v) for f, v in c.as_leq()]
    return assemble(structure, behavior_form(structure, objective), eqs, ineqs, **kw)


def solve_forms(
    objective: BehaviorForm,
    constraints: Sequence[Constraint],
    npa_level="1+AB",
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
) -> SdpSolution:
    structure = build_structure(normalize_level(npa_level))
    return solve(_to_sdp(structure, objective, constraints), gap_tol=gap_tol, feas_tol=feas_tol)


# parameters this close to the family maximum (relative to its size, either
# side) are certified on the optimal face; the pinned set is too thin for the
# interior-point iteration there
AT_MAX_TOL = 1e-7


@lru_cache(maxsize=256)
def _max_problem(family: str, level: str, parameter: float | None, gap_tol: float):
    merit, cons = figure_of_merit(family, parameter)
    structure = build_structure(level)
    problem = _to_sdp(structure, merit, cons)
    sol = solve(problem, gap_tol=gap_tol)
    if sol.status is Status.INFEASIBLE:
        raise ProtocolInfeasible(f"{family}: constraints infeasible")
    if sol.status is not Status.OPTIMAL:
        raise ProtocolSolverFailure(f"{family}: max_feasible solve failed ({sol.status.value})")
    return problem, sol


def _max_feasible(family: str, level: str, parameter: float | None, gap_tol: float) -> float:
    return _max_problem(family, level, parameter, gap_tol)[1].value


# the face is read off the maximizer, so that solve runs tighter than usual
FACE_GAP_FACTOR = 1e-2


@lru_cache(maxsize=256)
def _max_face(family: str, level: str, parameter: float | None, gap_tol: float = GAP_TOL) -> Face:
    try:
        return optimal_face(*_max_problem(family, level, parameter, gap_tol * FACE_GAP_FACTOR))
    except ProtocolSolverFailure:
        return optimal_face(*_max_problem(family, level, parameter, gap_tol))


def max_feasible(family: str, npa_level="1+AB", parameter: float | None = None, gap_tol: float = GAP_TOL) -> float:
    """Largest figure of merit compatible with the family's other constraints."""
    _check_family(family)
    if family == "chsh":
        return TSIRELSON
    if family != "noisy-hardy":
        parameter = None
    return _max_feasible(family, normalize_level(npa_level), parameter, gap_tol)


@dataclass
class CertificationResult:
    family: str
    parameter: float
    status: str
    per_outcome: dict = field(default_factory=dict)
    p_guess: float = math.nan
    h_min: float = math.nan
    npa_level: str = "1+AB"
    gap: float = math.nan
    lhv_baseline: float | None = None
    lhv_witness: str | None = None
    qubit_lower: float | None = None
    delta: float | None = None
    failed_outcome: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=256)
def qubit_lower_bound(family: str, parameter: float | None = None, restarts: int = 16, seed: int = 0) -> float | None:
    if family != "noisy-hardy":
        parameter = None
    try:
        return qubit_lab.optimize(family, restarts=restarts, seed=seed, parameter=parameter).value
    except qubit_lab.NoFeasiblePoint:
        return None


def lhv_baseline(family: str, parameter: float | None = None) -> float | None:
    merit, cons = figure_of_merit(family, parameter)
    try:
        return lhv_oracle.lhv_optimize(merit, cons).value
    except lhv_oracle.Infeasible:
        return None


def certify(
    spec: ProtocolSpec,
    npa_level=None,
    *,
    qubit: bool = False,
    qubit_restarts: int = 16,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
) -> CertificationResult:
    """Worst-case guessing probability on the (A_0, B_0) round.

    One SDP per outcome pair maximizes that pair's probability over every
    relaxation-feasible behavior obeying the spec; the largest of the four
    is the guessing probability.  For conditional guessing the pinned
    marginal p(a|A_0) = 1/2 turns p(b|a) into 2 p(a,b).
    """
    level = normalize_level(npa_level or spec.npa_level)
    if spec.family == "noisy-hardy" and level != spec.npa_level:
        spec = build(spec.family, spec.parameter, level)
    structure = build_structure(level)
    scale = 2.0 if spec.objective_kind == CONDITIONAL else 1.0
    result = CertificationResult(spec.family, spec.parameter, Status.OPTIMAL.value, npa_level=level, delta=spec.delta)

    # at the maximum the pinned set has no interior; optimize over the
    # optimal face of the maximization instead
    face = None
    if spec.family in FAMILIES:
        face_param = spec.parameter if spec.family == "noisy-hardy" else None
        try:
            top = max_feasible(spec.family, level, face_param, gap_tol=gap_tol)
            if spec.family == "noisy-hardy" or abs(spec.parameter - top) <= AT_MAX_TOL * max(1.0, abs(top)):
                face = _max_face(spec.family, level, face_param, gap_tol)
        except ProtocolInfeasible:
            pass
        except ProtocolSolverFailure:
            log.warning("%s: maximization failed, certifying without the face", spec.family)

    gaps = []
    for a, b in OUTCOME_PAIRS:
        label = outcome_symbol(a) + outcome_symbol(b)
        if face is not None:
            sol = face.solve(behavior_form(structure, prob(a, b, 0, 0)), gap_tol=gap_tol, feas_tol=feas_tol)
        else:
            problem = _to_sdp(structure, prob(a, b, 0, 0), spec.constraints)
            sol = solve(problem, gap_tol=gap_tol, feas_tol=feas_tol)
        if sol.status is Status.INFEASIBLE:
            result.status = Status.INFEASIBLE.value
            result.per_outcome = {}
            break
        if sol.status is not Status.OPTIMAL:
            result.status = Status.SOLVER_FAILURE.value
            result.failed_outcome = label
            break
        result.per_outcome[label] = scale * sol.value
        gaps.append(scale * sol.gap)

    if result.status == Status.OPTIMAL.value:
        result.p_guess = max(result.per_outcome.values())
        result.h_min = -math.log2(result.p_guess)
        result.gap = max(gaps)
    witnesses = lhv_oracle.feasible_vertices(spec.constraints)
    result.lhv_witness = str(witnesses[0]) if witnesses else None
    lhv_param = spec.parameter if spec.family == "noisy-hardy" else None
    result.lhv_baseline = lhv_baseline(spec.family, lhv_param)
    if qubit:
        result.qubit_lower = qubit_lower_bound(spec.family, lhv_param, restarts=qubit_restarts)
    return result


def _certify_point(args) -> CertificationResult:
    family, param, level, kw = args
    try:
        spec = build(family, param, level)
    except ProtocolInfeasible:
        return CertificationResult(family, param, Status.INFEASIBLE.value, npa_level=normalize_level(level))
    except ProtocolSolverFailure:
        return CertificationResult(family, param, Status.SOLVER_FAILURE.value, npa_level=normalize_level(level))
    return certify(spec, level, **kw)


def sweep(
    family: str,
    grid: Sequence[float],
    npa_level="1+AB",
    *,
    workers: int = 1,
    **kw,
) -> list[CertificationResult]:
    """Certify every grid point; failures are recorded, never raised.  Output
    order follows the grid regardless of completion order."""
    _check_family(family)
    jobs = [(family, float(p), npa_level, kw) for p in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_certify_point, jobs))
    return [_certify_point(j) for j in jobs]


def is_monotone(results: Sequence[CertificationResult], slack: float = 1e-6) -> bool:
    """H_min non-decreasing along the (feasible part of the) sweep."""
    vals = [r.h_min for r in results if r.status == Status.OPTIMAL.value]
    return all(b >= a - slack for a, b in zip(vals, vals[1:]))
