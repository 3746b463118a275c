"""Classical optima over the local polytope.

Every local behavior is a convex mixture of the 16 deterministic ones, so a
linear objective under linear constraints becomes a 16-variable LP over the
mixture weights.  The LP runs through the interior-point core; the answer is
then polished onto the active face for near-exact values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import sdp_core
from .bell_core import (
    Behavior,
    BehaviorForm,
    Constraint,
    DeterministicStrategy,
    behavior_of,
    enumerate_deterministic,
    validate,
)
from .sdp_core import LinearForm, SdpProblem, SolverFailure, Status

log = logging.getLogger(__name__)

VERTICES: tuple[DeterministicStrategy, ...] = tuple(enumerate_deterministic())
_VERTEX_TABLE = np.array([behavior_of(d).flat() for d in VERTICES])  # (16, 16)
LP_TOL = 1e-8


class Infeasible(Exception):
    """No local model satisfies the constraints."""


@dataclass(frozen=True, eq=False)
class LocalModel:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.shape != (16,):
            raise ValueError("a local model has 16 weights")
        if np.min(w) < -1e-10 or abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def behavior(self) -> Behavior:
        return Behavior.from_flat(self.weights @ _VERTEX_TABLE)

    def support(self, tol: float = 1e-9) -> list[tuple[DeterministicStrategy, float]]:
        return [(d, float(w)) for d, w in zip(VERTICES, self.weights) if w > tol]


@dataclass(frozen=True)
class LhvResult:
    value: float
    model: LocalModel


def vertex_values(form: BehaviorForm) -> np.ndarray:
    """The form evaluated at each deterministic vertex."""
    return form.constant + _VERTEX_TABLE @ form.coeffs.ravel()


def _as_constraints(constraints) -> list[Constraint]:
    out = []
    for c in constraints:
        out.append(c if isinstance(c, Constraint) else Constraint(*c))
    return out


def _polish(w, obj, A_eq, b_eq, G, h, tol=1e-6):
    """Exact solve on the support/active set found by the interior point."""
    support = w > tol
    active = (h - G @ w) < tol if len(h) else np.zeros(0, bool)
    rows = [np.ones(16)] + list(A_eq) + list(G[active])
    rhs = [1.0] + list(b_eq) + list(h[active])
    M = np.array(rows)[:, support]
    ws, *_ = np.linalg.lstsq(M, np.array(rhs), rcond=None)
    out = np.zeros(16)
    out[support] = ws
    ok = (
        np.min(out) >= -1e-12
        and abs(out.sum() - 1) <= 1e-12
        and (not len(b_eq) or np.max(np.abs(A_eq @ out - b_eq)) <= 1e-10)
        and (not len(h) or np.max(G @ out - h) <= 1e-10)
        and abs(obj @ out - obj @ w) <= 1e-6
    )
    if not ok:
        return None
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def lhv_optimize(
    objective: BehaviorForm, constraints: Iterable = (), maximize: bool = True
) -> LhvResult:
    """Optimize ``objective`` over local models satisfying ``constraints``.

    Raises ``Infeasible`` when no local model fits and
    ``sdp_core.SolverFailure`` when the LP does not converge.
    """
    cons = _as_constraints(constraints)
    sign = 1.0 if maximize else -1.0
    obj = vertex_values(objective)
    A_eq, b_eq, G, h = [], [], [], []
    for c in cons:
        vals = vertex_values(c.form) - c.form.constant
        rhs = c.value - c.form.constant
        if c.sense == "==":
            A_eq.append(vals)
            b_eq.append(rhs)
        elif c.sense == "<=":
            G.append(vals)
            h.append(rhs)
        else:
            G.append(-vals)
            h.append(-rhs)
    A_eq, b_eq = np.array(A_eq).reshape(-1, 16), np.array(b_eq, dtype=float)
    G, h = np.array(G).reshape(-1, 16), np.array(h, dtype=float)

    dense = lambda row: LinearForm(0.0, dict(enumerate(row)))  # noqa: E731
    eqs = [(dense(np.ones(16)), 1.0)] + [(dense(r), v) for r, v in zip(A_eq, b_eq)]
    ineqs = [(dense(-np.eye(16)[i]), 0.0) for i in range(16)]
    ineqs += [(dense(r), v) for r, v in zip(G, h)]
    prob = SdpProblem(16, dense(sign * (obj - objective.constant)), [], eqs, ineqs)
    sol = sdp_core.solve(prob, gap_tol=1e-9, feas_tol=LP_TOL)
    if sol.status is Status.INFEASIBLE:
        raise Infeasible(f"no local model satisfies the constraints (residual {sol.residual:.3g})")
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(f"LP did not converge (gap {sol.gap:.3g}, residual {sol.residual:.3g})")

    w = np.clip(sol.x, 0.0, None)
    w = w / w.sum()
    polished = _polish(w, obj, A_eq, b_eq, G, h)
    if polished is not None:
        w = polished
    else:
        log.debug("vertex polish rejected; keeping interior-point weights")
    model = LocalModel(w)
    check_model(model, cons)
    return LhvResult(float(obj @ w), model)


def check_model(model: LocalModel, constraints: Sequence[Constraint], tol: float = LP_TOL) -> None:
    """Re-validate a local model against its constraints, independently of the LP."""
    b = model.behavior()
    report = validate(b)
    if report:
        raise SolverFailure(f"local model behavior invalid: {report[0]}")
    worst = max((c.violation(b) for c in constraints), default=0.0)
    if worst > tol:
        raise SolverFailure(f"local model violates a constraint by {worst:.3g}")


def feasible_vertices(constraints: Iterable, tol: float = 1e-12) -> list[DeterministicStrategy]:
    """Deterministic strategies that satisfy every constraint exactly."""
    cons = _as_constraints(constraints)
    out = []
    for d in VERTICES:
        b = behavior_of(d)
        if all(c.violation(b) <= tol for c in cons):
            out.append(d)
    return out


def vertex_scan_max(objective: BehaviorForm, constraints: Iterable = ()) -> float:
    """Best objective over the feasible pure vertices (-inf if none)."""
    vals = [objective(behavior_of(d)) for d in feasible_vertices(constraints)]
    return max(vals, default=-math.inf)


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    value: float | None
    status: str


def lhv_sweep(family: str, grid: Sequence[float]) -> list[SweepRow]:
    """Classical optimum of a protocol family's figure of merit per grid point."""
    from .protocols import figure_of_merit

    rows = []
    for param in grid:
        objective, cons = figure_of_merit(family, param)
        try:
            res = lhv_optimize(objective, cons)
            rows.append(SweepRow(float(param), res.value, Status.OPTIMAL.value))
        except Infeasible:
            rows.append(SweepRow(float(param), None, Status.INFEASIBLE.value))
        except SolverFailure:
            rows.append(SweepRow(float(param), None, Status.SOLVER_FAILURE.value))
    return rows
