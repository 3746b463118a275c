"""Small dense semidefinite programs solved by a primal-dual interior-point method.

Problems are stated over a real variable vector ``x``::

    maximize    c0 + c @ x
    subject to  F0_k + sum_i x_i F_ik  >= 0     (PSD, one per block k)
                A @ x == b
                G @ x <= h

Equalities are eliminated up front (``x = x0 + N z``) so the interior-point
iteration only sees the conic constraints.  Linear inequalities live in a
nonnegative orthant, i.e. a diagonal block of 1x1 PSD cones.

The iteration is an infeasible-start Mehrotra predictor-corrector with
Nesterov-Todd scaling, run on the standard-form pair::

    (P)  min <C, X>   s.t.  <A_j, X> = b_j,  X >= 0
    (D)  max b @ y    s.t.  C - sum_j y_j A_j = S >= 0

where the user's problem is (D) with ``y = z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

GAP_TOL = 1e-7
FEAS_TOL = 1e-8
MAX_ITER = 200
SYM_TOL = 1e-14


class SdpError(Exception):
    """Raised for malformed problems."""


class SolverFailure(Exception):
    def __init__(self, msg: str, info: dict | None = None):
        super().__init__(msg)
        self.info = info or {}


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    SOLVER_FAILURE = "SolverFailure"


@dataclass(frozen=True)
class LinearForm:
    """``constant + sum_k coeffs[k] * x_k`` with sparse integer-keyed coefficients."""

    constant: float = 0.0
    coeffs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.constant) or not all(
            math.isfinite(v) for v in self.coeffs.values()
        ):
            raise SdpError("non-finite coefficient in linear form")
        object.__setattr__(
            self, "coeffs", {int(k): float(v) for k, v in self.coeffs.items() if v != 0.0}
        )

    def __add__(self, other: LinearForm | float) -> LinearForm:
        if not isinstance(other, LinearForm):
            return LinearForm(self.constant + float(other), self.coeffs)
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        return LinearForm(self.constant + other.constant, coeffs)

    __radd__ = __add__

    def __neg__(self) -> LinearForm:
        return self * -1.0

    def __sub__(self, other: LinearForm | float) -> LinearForm:
        return self + (-other)

    def __rsub__(self, other: float) -> LinearForm:
        return (-self) + other

    def __mul__(self, scalar: float) -> LinearForm:
        s = float(scalar)
        return LinearForm(self.constant * s, {k: v * s for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def dense(self, n_vars: int) -> np.ndarray:
        out = np.zeros(n_vars)
        for k, v in self.coeffs.items():
            if k >= n_vars:
                raise SdpError(f"variable index {k} out of range for {n_vars} variables")
            out[k] = v
        return out

    def evaluate(self, x: Sequence[float]) -> float:
        return self.constant + sum(v * x[k] for k, v in self.coeffs.items())

    def is_constant(self) -> bool:
        return not self.coeffs


@dataclass
class PsdBlock:
    """Affine symmetric-matrix map ``F0 + sum_i x_i F[i]``."""

    constant: np.ndarray
    coeffs: np.ndarray  # shape (n_vars, k, k)

    def __post_init__(self):
        self.constant = np.asarray(self.constant, dtype=float)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        k = self.constant.shape[0]
        if self.constant.shape != (k, k) or self.coeffs.shape[1:] != (k, k):
            raise SdpError("inconsistent block dimensions")

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def at(self, x: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(x, self.coeffs, axes=1)


@dataclass
class SdpProblem:
    n_vars: int
    objective: LinearForm
    psd_blocks: list[PsdBlock] = field(default_factory=list)
    eqs: list[tuple[LinearForm, float]] = field(default_factory=list)
    ineqs: list[tuple[LinearForm, float]] = field(default_factory=list)

    def check(self) -> None:
        for blk in self.psd_blocks:
            if blk.coeffs.shape[0] != self.n_vars:
                raise SdpError("block coefficient count does not match n_vars")
            mats = [blk.constant, *blk.coeffs]
            for m in mats:
                if not np.all(np.isfinite(m)):
                    raise SdpError("NaN/Inf in PSD block")
                if np.max(np.abs(m - m.T), initial=0.0) > SYM_TOL:
                    raise SdpError("PSD block coefficient is not symmetric")
        for form, bound in [*self.eqs, *self.ineqs]:
            if not math.isfinite(bound):
                raise SdpError("NaN/Inf bound")
            form.dense(self.n_vars)
        self.objective.dense(self.n_vars)

    def dense(self):
        """Return (c0, c, blocks, A, b, G, h) as numpy arrays."""
        n = self.n_vars
        c = self.objective.dense(n)
        A = np.array([f.dense(n) for f, _ in self.eqs]).reshape(len(self.eqs), n)
        b = np.array([v - f.constant for f, v in self.eqs], dtype=float)
        G = np.array([f.dense(n) for f, _ in self.ineqs]).reshape(len(self.ineqs), n)
        h = np.array([v - f.constant for f, v in self.ineqs], dtype=float)
        return self.objective.constant, c, self.psd_blocks, A, b, G, h

    def residual(self, x: np.ndarray) -> float:
        """Max constraint violation at ``x`` from an independent eigen-check."""
        _, _, blocks, A, b, G, h = self.dense()
        r = 0.0
        if len(b):
            r = max(r, float(np.max(np.abs(A @ x - b))))
        if len(h):
            r = max(r, float(np.max(G @ x - h)))
        for blk in blocks:
            r = max(r, -float(np.linalg.eigvalsh(blk.at(x))[0]))
        return max(r, 0.0)


@dataclass
class SdpSolution:
    status: Status
    value: float
    x: np.ndarray | None
    gap: float
    residual: float
    dual_value: float = math.nan
    iterations: int = 0
    # multipliers (PSD blocks, one per inequality row) when optimal
    dual: tuple | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class Feasibility:
    feasible: bool
    point: np.ndarray | None
    margin: float  # min eigenvalue margin when feasible, -residual otherwise

    @property
    def residual(self) -> float:
        return max(0.0, -self.margin)


# --------------------------------------------------------------------------
# conic iterate helpers: a state is (list of PSD blocks, orthant vector)


@dataclass
class _Cone:
    sizes: list[int]
    n_lp: int

    @property
    def degree(self) -> int:
        return sum(self.sizes) + self.n_lp

    def identity(self, scale: float):
        return [scale * np.eye(k) for k in self.sizes], scale * np.ones(self.n_lp)


def _inner(u, v) -> float:
    return sum(float(np.vdot(a, b)) for a, b in zip(u[0], v[0])) + float(u[1] @ v[1])


def _axpy(alpha, u, v):
    return [alpha * a + b for a, b in zip(u[0], v[0])], alpha * u[1] + v[1]


def _norm(u) -> float:
    return math.sqrt(_inner(u, u))


class _Reduced:
    """The equality-free problem in ``z``: max c @ z s.t. C - sum_j z_j A_j in cone."""

    def __init__(self, c, C_psd, A_psd, C_lp, A_lp):
        self.c = c
        self.m = len(c)
        self.C = (C_psd, C_lp)
        self.A_psd = A_psd  # per block (m, k, k)
        self.A_lp = A_lp  # (n_lp, m)
        self.cone = _Cone([C.shape[0] for C in C_psd], len(C_lp))

    def op(self, X) -> np.ndarray:
        """A(X)_j = <A_j, X>."""
        out = self.A_lp.T @ X[1] if self.cone.n_lp else np.zeros(self.m)
        for Ak, Xk in zip(self.A_psd, X[0]):
            out = out + np.tensordot(Ak, Xk, axes=([1, 2], [0, 1]))
        return out

    def adj(self, y):
        """A^T(y) = sum_j y_j A_j."""
        return [np.tensordot(y, Ak, axes=1) for Ak in self.A_psd], self.A_lp @ y

    def slack(self, y):
        return _axpy(-1.0, self.adj(y), self.C)


def _factor(M: np.ndarray) -> np.ndarray:
    """A square root L with L L^T = M; falls back to a clipped eigen-root when
    Cholesky breaks down on a nearly singular iterate."""
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        lam, Q = np.linalg.eigh(0.5 * (M + M.T))
        floor = max(float(lam[-1]), 1e-300) * 1e-15
        return Q * np.sqrt(np.maximum(lam, floor))


def _min_eig_step(L: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with L L^T + alpha dX PSD."""
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ dX @ Li.T)[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _step_length(chol, D) -> float:
    a = math.inf
    for L, dXk in zip(chol[0], D[0]):
        a = min(a, _min_eig_step(L, dXk))
    x, dx = chol[1], D[1]
    neg = dx < 0
    if np.any(neg):
        a = min(a, float(np.min(-x[neg] / dx[neg])))
    return a


STEP_FACTOR = 0.98
# centering floor: target complementarity never drops below the residuals
MU_FLOOR = 1.0
# iterations without halving the best score before giving up
PATIENCE = 60


def _ipm(prob: _Reduced, gap_tol: float, feas_tol: float, max_iter: int):
    """Run the predictor-corrector loop. Returns (converged, y, X, S, info)."""
    cone = prob.cone
    nu = max(cone.degree, 1)
    m = prob.m
    normC = _norm(prob.C)
    normb = float(np.linalg.norm(prob.c))
    b = prob.c
    a_norms = [
        math.sqrt(sum(float(np.sum(Ak[j] ** 2)) for Ak in prob.A_psd) + float(np.sum(prob.A_lp[:, j] ** 2)))
        for j in range(m)
    ]
    xi_x = max(10.0, math.sqrt(nu), nu * max([abs(b[j]) / (1 + a_norms[j]) for j in range(m)], default=0.0))
    xi_s = max(10.0, math.sqrt(nu), normC, max(a_norms, default=0.0))
    X = cone.identity(xi_x)
    S = cone.identity(xi_s)
    y = np.zeros(m)

    info = dict(iterations=0, pobj=math.nan, dobj=math.nan, pinf=math.inf, dinf=math.inf, mu=math.inf)
    best = None
    stalls = since_best = 0
    for it in range(1, max_iter + 1):
        rp = b - prob.op(X)
        Rd = _axpy(-1.0, _axpy(1.0, S, prob.adj(y)), prob.C)
        mu = _inner(X, S) / nu
        pobj = _inner(prob.C, X)
        dobj = float(b @ y)
        pinf = float(np.linalg.norm(rp)) / (1 + normb)
        dinf = _norm(Rd) / (1 + normC)
        gap = abs(pobj - dobj)
        info.update(iterations=it, pobj=pobj, dobj=dobj, pinf=pinf, dinf=dinf, mu=mu, gap=gap)
        score = max(gap / gap_tol, mu * nu / gap_tol, pinf / feas_tol, dinf / feas_tol)
        if best is None or score < best[0]:
            if best is None or score < 0.5 * best[0]:
                since_best = 0
            best = (score, y.copy(), X, S, dict(info))
        since_best += 1
        if best[0] <= 1.0 and since_best > 5 or since_best > PATIENCE:
            break
        if gap <= gap_tol * 1e-2 and mu * nu <= gap_tol * 1e-2 and pinf <= feas_tol * 1e-2 and dinf <= feas_tol * 1e-2:
            break
        if not all(math.isfinite(v) for v in (pobj, dobj, mu)) or mu * nu > 1e14:
            break

        # NT scaling per block: W = G G^T, G^{-1} X G^{-T} = G^T S G = diag(d)
        Gs, ds, chol_x = [], [], []
        chol_s = []
        try:
            for Xk, Sk in zip(X[0], S[0]):
                Lx, Ls = _factor(Xk), _factor(Sk)
                U, d, Vt = np.linalg.svd(Ls.T @ Lx)
                Gs.append(Lx @ Vt.T / np.sqrt(d))
                ds.append(d)
                chol_x.append(Lx)
                chol_s.append(Ls)
        except np.linalg.LinAlgError:
            break
        g_lp = (X[1] / S[1]) ** 0.25
        d_lp = np.sqrt(X[1] * S[1])
        Ws = [Gk @ Gk.T for Gk in Gs]
        w_lp = g_lp**4

        # Schur complement M_ij = <A_i, W A_j W>
        WAW = [np.einsum("ab,jbc,cd->jad", Wk, Ak, Wk) for Wk, Ak in zip(Ws, prob.A_psd)]
        M = (prob.A_lp.T * w_lp) @ prob.A_lp
        for Ak, WAWk in zip(prob.A_psd, WAW):
            M = M + np.tensordot(Ak, WAWk, axes=([1, 2], [1, 2]))
        try:
            cho = sla.cho_factor(M + 1e-14 * np.trace(M) / max(m, 1) * np.eye(m))
            solveM = lambda r: sla.cho_solve(cho, r)  # noqa: E731
        except (np.linalg.LinAlgError, ValueError):
            Mp = np.linalg.pinv(M, rcond=1e-14)
            solveM = lambda r: Mp @ r  # noqa: E731

        def direction(r_psd, r_lp):
            # U = scaled (dX~ + dS~); dX = G U G^T - W dS W
            GUG = [
                Gk @ (2.0 * rk / (dk[:, None] + dk[None, :])) @ Gk.T
                for Gk, rk, dk in zip(Gs, r_psd, ds)
            ]
            u_lp = g_lp**2 * (r_lp / d_lp)
            WRW = ([Wk @ Rk @ Wk for Wk, Rk in zip(Ws, Rd[0])], w_lp * Rd[1])
            rhs = rp - prob.op((GUG, u_lp)) + prob.op(WRW)
            dy = solveM(rhs)
            dS = _axpy(-1.0, prob.adj(dy), Rd)
            dS = ([0.5 * (a + a.T) for a in dS[0]], dS[1])
            dX = (
                [g - Wk @ s @ Wk for g, Wk, s in zip(GUG, Ws, dS[0])],
                u_lp - w_lp * dS[1],
            )
            dX = ([0.5 * (a + a.T) for a in dX[0]], dX[1])
            return dX, dy, dS

        # predictor
        r_aff = [-np.diag(dk**2) for dk in ds], -(d_lp**2)
        dXa, dya, dSa = direction(*r_aff)
        ap = min(1.0, _step_length((chol_x, X[1]), dXa))
        ad = min(1.0, _step_length((chol_s, S[1]), dSa))
        mu_aff = _inner(_axpy(ap, dXa, X), _axpy(ad, dSa, S)) / nu
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        infeas = max(pinf, dinf)
        if mu > 0 and infeas > 0.1 * feas_tol:
            # keep complementarity from outrunning the residuals
            sigma = min(1.0, max(sigma, MU_FLOOR * infeas / mu))

        # corrector, second-order term in scaled coordinates
        r_psd = []
        for Gk, dk, dXk, dSk in zip(Gs, ds, dXa[0], dSa[0]):
            Gi = np.linalg.inv(Gk)
            xs = Gi @ dXk @ Gi.T
            ss = Gk.T @ dSk @ Gk
            prod = xs @ ss
            r_psd.append(sigma * mu * np.eye(len(dk)) - np.diag(dk**2) - 0.5 * (prod + prod.T))
        r_lp = sigma * mu - d_lp**2 - (dXa[1] / g_lp**2) * (dSa[1] * g_lp**2)
        dX, dy, dS = direction(r_psd, r_lp)

        ap = min(1.0, STEP_FACTOR * _step_length((chol_x, X[1]), dX))
        ad = min(1.0, STEP_FACTOR * _step_length((chol_s, S[1]), dS))
        # one step length for both sides keeps the residuals shrinking with mu
        ap = ad = min(ap, ad)
        if ap < 1e-10 and ad < 1e-10:
            stalls += 1
            if stalls > 3:
                break
        X = _axpy(ap, dX, X)
        y = y + ad * dy
        S = _axpy(ad, dS, S)
        X = ([0.5 * (a + a.T) for a in X[0]], X[1])
        S = ([0.5 * (a + a.T) for a in S[0]], S[1])

    score, y, X, S, info = best
    converged = score <= 1.0
    return converged, y, X, S, info


# --------------------------------------------------------------------------


def _eliminate(A: np.ndarray, b: np.ndarray, n: int, tol: float = 1e-10):
    """Parametrize {x : A x = b} as x0 + N z. Returns (x0, N, residual)."""
    if A.shape[0] == 0:
        return np.zeros(n), np.eye(n), 0.0
    x0, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ x0 - b)))
    U, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 1.0)))
    N = Vt[rank:].T
    return x0, N, resid


def _reduce(problem: SdpProblem, extra_t: bool = False):
    """Eliminate equalities and build the conic form. ``extra_t`` appends the
    phase-1 variable t (maximize -t, every cone constraint relaxed by t)."""
    c0, c, blocks, A, b, G, h = problem.dense()
    n = problem.n_vars
    x0, N, eq_resid = _eliminate(A, b, n)
    m = N.shape[1]

    C_psd, A_psd = [], []
    for blk in blocks:
        F0 = blk.at(x0)
        Fz = np.tensordot(N.T, blk.coeffs, axes=1)  # (m, k, k)
        C_psd.append(0.5 * (F0 + F0.T))
        A_psd.append(-Fz)
    # inequality rows: h - G x >= 0, i.e. (h - G x0) - (G N) z >= 0
    C_lp = h - G @ x0 if len(h) else np.zeros(0)
    A_lp = G @ N if len(h) else np.zeros((0, m))
    const_rows = np.all(np.abs(A_lp) <= 1e-12, axis=1) if len(h) else np.zeros(0, bool)
    const_violation = float(np.max(-C_lp[const_rows], initial=0.0))
    C_lp, A_lp = C_lp[~const_rows], A_lp[~const_rows]

    cz = N.T @ c
    if extra_t:
        k_sizes = [Cb.shape[0] for Cb in C_psd]
        A_psd = [
            np.concatenate([Ak, -np.eye(k)[None]], axis=0) for Ak, k in zip(A_psd, k_sizes)
        ]
        A_lp = np.hstack([A_lp, -np.ones((len(C_lp), 1))])
        # t >= -1 keeps the auxiliary problem bounded
        A_lp = np.vstack([A_lp, np.r_[np.zeros(m), -1.0][None]])
        C_lp = np.r_[C_lp, 1.0]
        cz = np.r_[np.zeros(m), -1.0]
    red = _Reduced(cz, C_psd, A_psd, C_lp, A_lp.reshape(len(C_lp), len(cz)))
    red.lp_rows = np.flatnonzero(~const_rows)
    return red, x0, N, eq_resid, const_violation


@dataclass
class Face:
    """An optimal face written over new variables z, with x = x0 + N z.

    Every point of the face attains the optimum of the problem it came from,
    so optimizing a second objective over it is the same as pinning the first
    objective at its maximum, but with a strictly feasible interior.
    """

    parent: SdpProblem
    problem: SdpProblem
    x0: np.ndarray
    N: np.ndarray
    gap: float = 0.0  # duality gap of the solve that located the face

    def lift(self, z: np.ndarray) -> np.ndarray:
        return self.x0 + self.N @ z

    def pull(self, form: LinearForm) -> LinearForm:
        c = form.dense(self.parent.n_vars)
        return _dense_form(form.constant + float(c @ self.x0), self.N.T @ c)

    def solve(self, objective: LinearForm, **kw) -> SdpSolution:
        """Maximize ``objective`` (over the parent's variables) on the face."""
        sub = SdpProblem(self.problem.n_vars, self.pull(objective), self.problem.psd_blocks,
                         self.problem.eqs, self.problem.ineqs)
        sol = solve(sub, **kw)
        if sol.x is None:
            return sol
        x = self.lift(sol.x)
        resid = max(sol.residual, self.parent.residual(x))
        status = sol.status
        if status is Status.OPTIMAL and resid > kw.get("feas_tol", FEAS_TOL):
            status = Status.SOLVER_FAILURE
        return SdpSolution(status, sol.value, x, max(sol.gap, self.gap), resid, sol.dual_value, sol.iterations)


def _dense_form(constant: float, coeffs: np.ndarray) -> LinearForm:
    return LinearForm(float(constant), {j: float(v) for j, v in enumerate(coeffs) if v != 0.0})


def optimal_face(problem: SdpProblem, solution: SdpSolution, tol: float = 1e-6, rank_tol: float = 1e-7) -> Face:
    """Restrict ``problem`` to the face where its optimum is attained.

    Complementary slackness with the optimal multipliers does the work: each
    PSD block must annihilate the range of its multiplier, and inequalities
    with a positive multiplier hold with equality.  Multiplier eigenvalues
    below ``tol`` (relative to the largest) count as zero.
    """
    if solution.dual is None:
        raise SdpError("optimal_face needs an optimal solution with multipliers")
    X_psd, lp_dual = solution.dual
    scale = max(
        [1.0, float(np.max(lp_dual, initial=0.0))]
        + [float(np.linalg.eigvalsh(Xk)[-1]) for Xk in X_psd]
    )
    _, _, blocks, A, b, G, h = problem.dense()
    n = problem.n_vars

    # the optimizer stays the base point; the original equalities are
    # eliminated exactly and the face conditions restrict the directions
    x0 = np.asarray(solution.x, dtype=float).copy()
    _, Na, _ = _eliminate(A, b, n)
    rows, keep_blocks = [], []
    for blk, Xk in zip(blocks, X_psd):
        w, V = np.linalg.eigh(Xk)
        U = V[:, w > tol * scale]
        if U.shape[1]:
            # F(x) U = 0, entry by entry
            rows.append(np.einsum("vij,jr->irv", blk.coeffs, U).reshape(-1, n))
        keep_blocks.append((blk, V[:, w <= tol * scale]))
    active = lp_dual > tol * scale
    rows.append(G[active])
    R = np.vstack(rows) @ Na if rows else np.zeros((0, Na.shape[1]))
    if R.shape[0] and R.shape[1]:
        _, s, Vt = np.linalg.svd(R)
        # multiplier noise leaves near-dependent rows; truncate at rank_tol
        r = int(np.sum(s > rank_tol * max(1.0, s[0])))
        N = Na @ Vt[r:].T
    else:
        N = Na
    m = N.shape[1]

    new_blocks = []
    for blk, W in keep_blocks:
        if W.shape[1] == 0:
            continue
        F0 = W.T @ blk.at(x0) @ W
        Fz = np.einsum("iv,vjk->ijk", N.T, blk.coeffs) if m else np.zeros((0,) + blk.coeffs.shape[1:])
        Fz = np.einsum("aj,ijk,kb->iab", W.T, Fz, W)
        new_blocks.append(PsdBlock(0.5 * (F0 + F0.T), 0.5 * (Fz + Fz.transpose(0, 2, 1))))
    ineqs = [
        (_dense_form(0.0, G[i] @ N), float(h[i] - G[i] @ x0))
        for i in np.flatnonzero(~active)
    ]
    c0, c = problem.objective.constant, problem.objective.dense(n)
    sub = SdpProblem(m, _dense_form(c0 + float(c @ x0), N.T @ c), new_blocks, [], ineqs)
    return Face(problem, sub, x0, N, solution.gap)


def feasibility(
    problem: SdpProblem, feas_tol: float = FEAS_TOL, max_iter: int = MAX_ITER
) -> Feasibility:
    """Phase-1 solve: minimize the uniform relaxation t needed to make every
    cone constraint hold. Feasible iff t* <= feas_tol."""
    problem.check()
    red, x0, N, eq_resid, const_violation = _reduce(problem, extra_t=True)
    if eq_resid > feas_tol or const_violation > feas_tol:
        return Feasibility(False, None, -max(eq_resid, const_violation))
    if red.cone.degree == 0:
        return Feasibility(True, x0, math.inf)
    converged, y, X, S, info = _ipm(red, gap_tol=feas_tol, feas_tol=feas_tol, max_iter=max_iter)
    m = N.shape[1]
    z, t = y[:m], y[m]
    x = x0 + N @ z
    t_lower = -info["pobj"] if math.isfinite(info["pobj"]) else t  # dual bound on t*
    if not converged and not math.isfinite(t):
        raise SolverFailure("phase-1 solve did not converge", info)
    resid = problem.residual(x)
    if resid <= feas_tol:
        margin = _interior_margin(problem, x)
        return Feasibility(True, x, margin)
    # t_lower certifies infeasibility when the dual bound is reliable
    t_cert = t_lower if converged else max(t_lower, 0.0)
    return Feasibility(False, None, -max(t_cert, resid if converged else t_cert))


def _interior_margin(problem: SdpProblem, x: np.ndarray) -> float:
    _, _, blocks, A, b, G, h = problem.dense()
    margin = math.inf
    for blk in blocks:
        margin = min(margin, float(np.linalg.eigvalsh(blk.at(x))[0]))
    if len(h):
        margin = min(margin, float(np.min(h - G @ x)))
    return margin


def solve(
    problem: SdpProblem,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
    max_iter: int = MAX_ITER,
) -> SdpSolution:
    """Maximize the problem's objective.

    Infeasibility is decided by the phase-1 solve, run only when the main
    iteration fails to converge.  Never raises for numerical trouble: the
    status carries it.
    """
    problem.check()
    if not problem.psd_blocks and not problem.ineqs and problem.n_vars > 0:
        raise SdpError("need at least one PSD block or inequality")
    red, x0, N, eq_resid, const_violation = _reduce(problem)
    c0 = problem.objective.constant
    c = problem.objective.dense(problem.n_vars)
    if eq_resid > feas_tol or const_violation > feas_tol:
        return SdpSolution(Status.INFEASIBLE, math.nan, None, math.nan, max(eq_resid, const_violation))

    if red.m == 0 or red.cone.degree == 0:
        # nothing left to optimize over (or no cone): the equality point decides
        x = x0
        resid = problem.residual(x)
        if red.m > 0 and np.linalg.norm(red.c) > 0:
            return SdpSolution(Status.SOLVER_FAILURE, math.inf, None, math.inf, math.nan)
        status = Status.OPTIMAL if resid <= feas_tol else Status.INFEASIBLE
        val = c0 + float(c @ x)
        return SdpSolution(status, val, x if status is Status.OPTIMAL else None, 0.0, resid, val)

    converged, y, X, S, info = _ipm(red, gap_tol, feas_tol, max_iter)
    x = x0 + N @ y
    resid = problem.residual(x)
    value = c0 + float(c @ x)
    dual_value = c0 + float(c @ x0) + info["pobj"]
    gap = max(info.get("gap", math.inf), info["mu"] * red.cone.degree)
    if converged and resid <= feas_tol and gap <= gap_tol:
        lp_dual = np.zeros(len(problem.ineqs))
        lp_dual[red.lp_rows] = X[1]
        dual = ([0.5 * (Xk + Xk.T) for Xk in X[0]], lp_dual)
        return SdpSolution(Status.OPTIMAL, value, x, gap, resid, dual_value, info["iterations"], dual)

    try:
        feas = feasibility(problem, feas_tol=feas_tol, max_iter=max_iter)
    except SolverFailure:
        return SdpSolution(Status.SOLVER_FAILURE, value, x, gap, resid, dual_value, info["iterations"])
    if not feas.feasible:
        return SdpSolution(Status.INFEASIBLE, math.nan, None, math.nan, feas.residual, math.nan, info["iterations"])
    return SdpSolution(Status.SOLVER_FAILURE, value, x, gap, resid, dual_value, info["iterations"])


# --------------------------------------------------------------------------
# text dump format
#
#   n_vars <n>
#   objective <c0> <c_1> ... <c_n>
#   eq <b> <a_1> ... <a_n>            (one per equality:   a @ x == b - a0)
#   ineq <h> <g_1> ... <g_n>          (one per inequality: g @ x <= h - g0)
#   block <k>
#   F0 <k*k row-major entries>
#   F <i> <k*k row-major entries>     (one per variable, i = 1..n)
#
# Equality/inequality constants are folded into the bound.


def dump_problem(problem: SdpProblem, path: str | Path) -> None:
    c0, c, blocks, A, b, G, h = problem.dense()
    fmt = lambda vals: " ".join(repr(float(v)) for v in vals)  # noqa: E731
    lines = [f"n_vars {problem.n_vars}", f"objective {fmt([c0, *c])}"]
    lines += [f"eq {fmt([bi, *ai])}" for ai, bi in zip(A, b)]
    lines += [f"ineq {fmt([hi, *gi])}" for gi, hi in zip(G, h)]
    for blk in blocks:
        lines.append(f"block {blk.size}")
        lines.append(f"F0 {fmt(blk.constant.ravel())}")
        lines += [f"F {i + 1} {fmt(Fi.ravel())}" for i, Fi in enumerate(blk.coeffs)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_problem(path: str | Path) -> SdpProblem:
    n = 0
    objective = None
    eqs, ineqs, blocks = [], [], []
    cur = None
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        tag, vals = parts[0], parts[1:]
        if tag == "n_vars":
            n = int(vals[0])
        elif tag == "objective":
            nums = [float(v) for v in vals]
            objective = _dense_form(nums[0], nums[1:])
        elif tag in ("eq", "ineq"):
            nums = [float(v) for v in vals]
            (eqs if tag == "eq" else ineqs).append((_dense_form(0.0, nums[1:]), nums[0]))
        elif tag == "block":
            k = int(vals[0])
            cur = [k, None, np.zeros((n, k, k))]
            blocks.append(cur)
        elif tag == "F0":
            cur[1] = np.array([float(v) for v in vals]).reshape(cur[0], cur[0])
        elif tag == "F":
            i = int(vals[0]) - 1
            cur[2][i] = np.array([float(v) for v in vals[1:]]).reshape(cur[0], cur[0])
        else:
            raise SdpError(f"unknown dump tag {tag!r}")
    if objective is None:
        raise SdpError("dump has no objective line")
    return SdpProblem(n, objective, [PsdBlock(F0, F) for _, F0, F in blocks], eqs, ineqs)
