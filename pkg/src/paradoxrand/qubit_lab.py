"""Two-qubit strategies: pure state plus projective measurements.

These give achievable behaviors, hence lower bounds to compare against the
moment-matrix upper bounds.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .bell_core import Behavior, BehaviorForm, Constraint
from .npa import MomentStructure, canonicalize

log = logging.getLogger(__name__)

PENALTIES = (1e2, 1e4, 1e6)
FEASIBLE_RESIDUAL = 1e-6
DEFAULT_RESTARTS = 64


class NoFeasiblePoint(Exception):
    """No restart met the constraint residual."""


def _bloch_pair(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """('+' vector, '-' vector) for a Bloch direction."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([c, e * s]), np.array([s, -e * c])


@dataclass(frozen=True, eq=False)
class QubitStrategy:
    """``state`` in the basis |00>, |01>, |10>, |11> (Alice first);
    ``meas`` holds (theta, phi) for A0, A1, B0, B1."""

    state: np.ndarray
    meas: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.state, dtype=complex).reshape(4)
        meas = np.asarray(self.meas, dtype=float).reshape(4, 2)
        if not np.all(np.isfinite(psi)) or not np.all(np.isfinite(meas)):
            raise ValueError("non-finite strategy parameters")
        psi.setflags(write=False)
        meas.setflags(write=False)
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "meas", meas)

    def norm_error(self) -> float:
        return abs(float(np.vdot(self.state, self.state).real) - 1.0)

    def vectors(self) -> np.ndarray:
        """(party, setting, outcome, 2) measurement vectors, outcome 0 = '-'."""
        out = np.zeros((2, 2, 2, 2), dtype=complex)
        for k, (theta, phi) in enumerate(self.meas):
            plus, minus = _bloch_pair(theta, phi)
            out[k // 2, k % 2, 1] = plus
            out[k // 2, k % 2, 0] = minus
        return out

    def projector(self, generator: str) -> np.ndarray:
        """4x4 '+' projector for a0, a1, b0 or b1 acting on the pair."""
        party, setting = generator[0], int(generator[1])
        v = self.vectors()[0 if party == "a" else 1, setting, 1]
        p = np.outer(v, v.conj())
        return np.kron(p, np.eye(2)) if party == "a" else np.kron(np.eye(2), p)

    def to_json(self) -> dict:
        return {
            "state": [[float(z.real), float(z.imag)] for z in self.state],
            "meas": [[float(t), float(f)] for t, f in self.meas],
        }

    @classmethod
    def from_json(cls, obj: dict) -> QubitStrategy:
        state = [complex(re, im) for re, im in obj["state"]]
        return cls(np.array(state), np.array(obj["meas"], dtype=float))


def _table(psi: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    # amp[x, y, a, b] = <alpha_{a|x} beta_{b|y} | psi>
    Psi = psi.reshape(2, 2)
    amp = np.einsum("xai,ij,ybj->xyab", vecs[0].conj(), Psi, vecs[1].conj())
    return np.abs(amp) ** 2


def behavior_of(s: QubitStrategy, norm_tol: float = 1e-12) -> Behavior:
    """Born-rule table of the strategy."""
    if s.norm_error() > norm_tol:
        raise ValueError(f"state is not normalized (error {s.norm_error():.3g})")
    return Behavior(_table(s.state, s.vectors()))


def operator(s: QubitStrategy, word) -> np.ndarray:
    """Product of '+' projectors for a word (the empty word is the identity)."""
    out = np.eye(4, dtype=complex)
    for g in canonicalize(word).word:
        out = out @ s.projector(g)
    return out


def moment_matrix(s: QubitStrategy, structure: MomentStructure) -> np.ndarray:
    """Real part of Gamma_ij = <psi| E_i^dag E_j |psi> over the structure's basis."""
    cols = np.array([operator(s, m.word) @ s.state for m in structure.basis]).T
    return (cols.conj().T @ cols).real


def moments(s: QubitStrategy, structure: MomentStructure) -> np.ndarray:
    """The moment vector (indexed like the structure's variables)."""
    x = np.zeros(structure.n_vars)
    for key, idx in structure.varmap.items():
        x[idx] = float(np.vdot(s.state, operator(s, key) @ s.state).real)
    return x


# --------------------------------------------------------------------------
# parametrization: 6 state parameters (magnitudes on S^3, relative phases)
# followed by 8 measurement angles


N_PARAMS = 14


def _state_from(params: np.ndarray) -> np.ndarray:
    c1, c2, c3, f1, f2, f3 = params[:6]
    s1, s2 = math.sin(c1), math.sin(c2)
    mags = np.array(
        [math.cos(c1), s1 * math.cos(c2), s1 * s2 * math.cos(c3), s1 * s2 * math.sin(c3)]
    )
    phases = np.exp(1j * np.array([0.0, f1, f2, f3]))
    return mags * phases


def _vectors_from(angles: np.ndarray) -> np.ndarray:
    th = angles[0::2].reshape(2, 2)
    ph = angles[1::2].reshape(2, 2)
    c, s = np.cos(th / 2), np.sin(th / 2)
    e = np.exp(1j * ph)
    out = np.empty((2, 2, 2, 2), dtype=complex)
    out[:, :, 1, 0], out[:, :, 1, 1] = c, e * s
    out[:, :, 0, 0], out[:, :, 0, 1] = s, -e * c
    return out


def strategy_from_params(params: Sequence[float]) -> QubitStrategy:
    params = np.asarray(params, dtype=float)
    psi = _state_from(params)
    meas = np.column_stack([params[6::2], params[7::2]])
    # fold angles into theta in [0, pi], phi in [0, 2pi) without changing the projector
    theta = np.mod(meas[:, 0], 2 * np.pi)
    phi = meas[:, 1].copy()
    flip = theta > np.pi
    theta[flip] = 2 * np.pi - theta[flip]
    phi[flip] += np.pi
    meas = np.column_stack([theta, np.mod(phi, 2 * np.pi)])
    return QubitStrategy(psi / np.linalg.norm(psi), meas)


@dataclass(frozen=True)
class _Program:
    objective: np.ndarray  # 16 coefficients
    obj_const: float
    eq_rows: np.ndarray
    eq_rhs: np.ndarray
    le_rows: np.ndarray
    le_rhs: np.ndarray

    @classmethod
    def build(cls, objective: BehaviorForm, constraints: Sequence[Constraint]):
        eq, eqr, le, ler = [], [], [], []
        for c in constraints:
            row, rhs = c.form.coeffs.ravel(), c.value - c.form.constant
            if c.sense == "==":
                eq.append(row)
                eqr.append(rhs)
            elif c.sense == "<=":
                le.append(row)
                ler.append(rhs)
            else:
                le.append(-row)
                ler.append(-rhs)
        return cls(
            objective.coeffs.ravel(),
            objective.constant,
            np.array(eq).reshape(-1, 16),
            np.array(eqr, dtype=float),
            np.array(le).reshape(-1, 16),
            np.array(ler, dtype=float),
        )

    def evaluate(self, p16: np.ndarray) -> tuple[float, float]:
        """(objective, squared violation)."""
        v = 0.0
        if len(self.eq_rhs):
            v += float(np.sum((self.eq_rows @ p16 - self.eq_rhs) ** 2))
        if len(self.le_rhs):
            v += float(np.sum(np.maximum(self.le_rows @ p16 - self.le_rhs, 0.0) ** 2))
        return float(self.objective @ p16) + self.obj_const, v

    def residual(self, p16: np.ndarray) -> float:
        r = 0.0
        if len(self.eq_rhs):
            r = max(r, float(np.max(np.abs(self.eq_rows @ p16 - self.eq_rhs))))
        if len(self.le_rhs):
            r = max(r, float(np.max(self.le_rows @ p16 - self.le_rhs)))
        return r


def _params_table(params: np.ndarray) -> np.ndarray:
    psi = _state_from(params)
    psi = psi / np.linalg.norm(psi)
    return _table(psi, _vectors_from(params[6:])).ravel()


def _polish(program: _Program, x: np.ndarray) -> np.ndarray:
    """Constrained local refinement from the penalty optimum.  The penalty
    alone leaves violations of order 1/mu; SLSQP with finite-difference
    gradients pushes them to round-off."""
    memo: dict[bytes, np.ndarray] = {}

    def table(q):
        # objective and constraints are differenced at the same points
        key = q.tobytes()
        if key not in memo:
            if len(memo) > 256:
                memo.clear()
            memo[key] = _params_table(q)
        return memo[key]

    cons = []
    if len(program.eq_rhs):
        cons.append({"type": "eq", "fun": lambda q: program.eq_rows @ table(q) - program.eq_rhs})
    if len(program.le_rhs):
        cons.append({"type": "ineq", "fun": lambda q: program.le_rhs - program.le_rows @ table(q)})
    res = minimize(
        lambda q: -program.evaluate(table(q))[0],
        x,
        method="SLSQP",
        constraints=cons,
        options=dict(maxiter=200, ftol=1e-15),
    )
    return res.x


def _project(program: _Program, x: np.ndarray) -> np.ndarray:
    """Least-squares pull onto the constraint set.  Near a zero-probability
    constraint the figure of merit moves like the square root of the
    violation, so leftover 1e-9 residuals would visibly inflate the value."""
    if not len(program.eq_rhs) and not len(program.le_rhs):
        return x

    def resid(q):
        p16 = _params_table(q)
        return np.concatenate(
            [program.eq_rows @ p16 - program.eq_rhs, np.maximum(program.le_rows @ p16 - program.le_rhs, 0.0)]
        )

    if not np.any(resid(x)):
        return x
    # scaled so the solver's gradient test does not stop on already-small residuals
    fit = least_squares(lambda q: 1e8 * resid(q), x, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500)
    return fit.x


def _rank(program: _Program, x: np.ndarray) -> tuple[bool, float, float]:
    p16 = _params_table(x)
    val, _ = program.evaluate(p16)
    resid = program.residual(p16)
    return resid < FEASIBLE_RESIDUAL, val, resid


def _one_restart(program: _Program, seed_seq, penalties, maxfev):
    rng = np.random.default_rng(seed_seq)
    x = rng.uniform(0.0, 2 * np.pi, N_PARAMS)
    for mu in penalties:

        def f(q, mu=mu):
            val, viol = program.evaluate(_params_table(q))
            return -val + mu * viol

        res = minimize(
            f,
            x,
            method="Nelder-Mead",
            options=dict(maxfev=maxfev, xatol=1e-10, fatol=1e-14, adaptive=True),
        )
        x = res.x
    candidates = [_project(program, x)]
    polished = _polish(program, x)
    if np.all(np.isfinite(polished)):
        candidates.append(_project(program, polished))
    # feasible beats infeasible, then larger value, then smaller residual
    best = max(candidates, key=lambda q: (lambda r: (r[0], r[1] if r[0] else -r[2]))(_rank(program, q)))
    _, val, resid = _rank(program, best)
    return val, resid, best


@dataclass(frozen=True)
class QubitOptimum:
    value: float
    strategy: QubitStrategy
    residual: float
    restart: int

    def to_json(self) -> dict:
        return {"value": self.value, "residual": self.residual, "restart": self.restart, **self.strategy.to_json()}


def optimize_form(
    objective: BehaviorForm,
    constraints: Sequence[Constraint] = (),
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    *,
    penalties: Sequence[float] = PENALTIES,
    maxfev: int = 3000,
    workers: int = 1,
) -> QubitOptimum:
    """Multi-start Nelder-Mead on the penalized objective.

    Each restart warm-starts through the penalty schedule; the best restart
    whose constraint residual is below 1e-6 wins (lowest index on ties).
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    program = _Program.build(objective, list(constraints))
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    args = [(program, s, tuple(penalties), maxfev) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_restart, *zip(*args)))
    else:
        results = [_one_restart(*a) for a in args]

    best = None
    for i, (val, resid, x) in enumerate(results):
        if resid < FEASIBLE_RESIDUAL and (best is None or val > best[0]):
            best = (val, resid, x, i)
    if best is None:
        worst = min(r for _, r, _ in results)
        raise NoFeasiblePoint(f"no restart reached residual < {FEASIBLE_RESIDUAL} (best {worst:.3g})")
    val, _, x, i = best
    strategy = strategy_from_params(x)
    p16 = behavior_of(strategy, norm_tol=1e-10).flat()
    value, _ = program.evaluate(p16)
    return QubitOptimum(value, strategy, program.residual(p16), i)


def optimize(
    family: str,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    parameter: float | None = None,
    **kw,
) -> QubitOptimum:
    """Best qubit value of a protocol family's figure of merit."""
    from .protocols import figure_of_merit

    objective, constraints = figure_of_merit(family, parameter)
    return optimize_form(objective, constraints, restarts=restarts, seed=seed, **kw)


def dumps(opt: QubitOptimum) -> str:
    return json.dumps(opt.to_json(), sort_keys=True, indent=2)
