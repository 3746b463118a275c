"""Acceptance suite: one pass/fail line per criterion.

Shared by ``paradoxrand verify`` and the pytest acceptance gate, so both
measure the same thing at the same tolerances.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lhv_oracle, qubit_lab
from .bell_core import (
    BehaviorForm,
    Constraint,
    behavior_of,
    ch_value,
    enumerate_deterministic,
)
from .npa import GENERATORS, build_structure, canonicalize
from .protocols import (
    FAMILIES,
    TSIRELSON,
    build,
    certify,
    figure_of_merit,
    is_monotone,
    max_feasible,
    sweep,
)
from .sdp_core import GAP_TOL, Status

HARDY_MAX = (5 * math.sqrt(5) - 11) / 2


@dataclass
class Check:
    key: str
    title: str
    passed: bool
    measured: str
    expected: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.key:>3}  {self.title}: measured {self.measured}; expected {self.expected} ({self.seconds:.1f}s)"


@dataclass(frozen=True)
class Settings:
    gap_tol: float = GAP_TOL
    qubit_restarts: int = 16
    seed: int = 0
    level: str = "1+AB"  # "2" adds the hierarchy checks


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def _within(v, target, tol) -> bool:
    return v is not None and not math.isnan(v) and abs(v - target) <= tol


def _h(family, param, s: Settings, level="1+AB"):
    r = certify(build(family, param, level), level, gap_tol=s.gap_tol)
    return r


def _qubit(family, s: Settings, parameter=None) -> float | None:
    try:
        return qubit_lab.optimize(family, restarts=s.qubit_restarts, seed=s.seed, parameter=parameter).value
    except qubit_lab.NoFeasiblePoint:
        return None


# --------------------------------------------------------------------------
# criteria


def c1_hardy_max(s: Settings):
    top = max_feasible("hardy", "1+AB", gap_tol=s.gap_tol)
    q = _qubit("hardy", s)
    ok = 0.0897 <= top <= 0.0907 and q is not None and q >= 0.0900
    return ok, f"max={_fmt(top)} (exact {HARDY_MAX:.7f}), qubit={_fmt(q)}", "max in [0.0897, 0.0907], qubit >= 0.0900"


def c2_hardy_endpoint(s: Settings):
    r = _h("hardy", 0.090169, s)
    return _within(r.h_min, 1.35, 0.02), f"H_min={_fmt(r.h_min)} ({r.status})", "1.35 +/- 0.02"


def c3_noisy_lhv(s: Settings):
    worst, where = 0.0, None
    for eps in np.linspace(0.0, 1.0 / 3.0, 21):
        merit, cons = figure_of_merit("noisy-hardy", eps)
        err = abs(lhv_oracle.lhv_optimize(merit, cons).value - 3 * eps)
        if err >= worst:
            worst, where = err, eps
    return worst <= 1e-7, f"max |lhv - 3eps| = {worst:.2e} (at eps={where:.4f})", "<= 1e-7 on 21 points"


def c4_noisy_endpoint(s: Settings):
    delta = max_feasible("noisy-hardy", "1+AB", parameter=1.0 / 3.0, gap_tol=s.gap_tol)
    r = _h("noisy-hardy", 1.0 / 3.0, s)
    ok = _within(delta, 0.99995, 1e-4) and _within(r.h_min, 1.58, 0.02)
    return ok, f"delta={_fmt(delta)}, H_min={_fmt(r.h_min)}", "delta 0.99995 +/- 1e-4, H_min 1.58 +/- 0.02"


def c5_cabello_max(s: Settings):
    top = max_feasible("cabello", "1+AB", gap_tol=s.gap_tol)
    top2 = max_feasible("cabello", "2", gap_tol=s.gap_tol)
    q = _qubit("cabello", s)
    ok = _within(top, 0.10784, 5e-4) and abs(top2 - top) <= 1e-3 and q is not None and q >= 0.1070
    return (
        ok,
        f"max={_fmt(top)}, level-2={_fmt(top2)}, qubit={_fmt(q)}",
        "0.10784 +/- 5e-4, levels within 1e-3, qubit >= 0.1070",
    )


def c6_cabello_endpoint(s: Settings):
    r = _h("cabello", 0.10784, s)
    return _within(r.h_min, 1.56, 0.02), f"H_min={_fmt(r.h_min)} ({r.status})", "1.56 +/- 0.02"


def c7_dw_cabello(s: Settings):
    top = max_feasible("dw-cabello", "1+AB", gap_tol=s.gap_tol)
    r = _h("dw-cabello", 0.08279, s)
    ok = _within(top, 0.08279, 5e-4) and _within(r.h_min, 0.68, 0.02)
    return ok, f"max={_fmt(top)}, H_min={_fmt(r.h_min)} ({r.status})", "max 0.08279 +/- 5e-4, H_min 0.68 +/- 0.02"


def c8_chsh(s: Settings):
    top = _h("chsh", TSIRELSON, s)
    low = _h("chsh", 2.0, s)
    ok = _within(top.h_min, 1.23, 0.02) and low.h_min is not None and low.h_min <= 1e-4
    return ok, f"H(2sqrt2)={_fmt(top.h_min)}, H(2)={_fmt(low.h_min)}", "1.23 +/- 0.02 and <= 1e-4"


def c9_classical_collapse(s: Settings):
    parts, ok = [], True
    for fam in ("hardy", "cabello"):
        r = _h(fam, 0.0, s)
        good = r.h_min is not None and abs(r.h_min) <= 1e-6 and r.lhv_witness is not None
        ok &= good
        parts.append(f"{fam}: H={_fmt(r.h_min)} witness={r.lhv_witness}")
    return ok, "; ".join(parts), "H_min <= 1e-6 with a deterministic witness"


def _grid(family: str, s: Settings) -> np.ndarray:
    if family == "noisy-hardy":
        return np.linspace(0.0, 1.0 / 3.0, 25)
    lo = 2.0 if family == "chsh" else 0.0
    return np.linspace(lo, max_feasible(family, "1+AB", gap_tol=s.gap_tol), 25)


def c10a_monotone(s: Settings):
    bad = []
    for fam in FAMILIES:
        results = sweep(fam, _grid(fam, s), gap_tol=s.gap_tol)
        failed = [r for r in results if r.status != Status.OPTIMAL.value]
        if failed or not is_monotone(results):
            bad.append(fam + (f" ({len(failed)} not optimal)" if failed else ""))
    return not bad, "non-monotone: " + (", ".join(bad) if bad else "none"), "every family monotone (1e-6 slack)"


def c10b_sandwich(s: Settings):
    worst, parts = -math.inf, []
    for fam in FAMILIES:
        param = 0.1 if fam == "noisy-hardy" else None
        top = max_feasible(fam, "1+AB", parameter=param, gap_tol=s.gap_tol)
        q = _qubit(fam, s, parameter=param)
        if q is None:
            parts.append(f"{fam}: no qubit point")
            continue
        worst = max(worst, q - top)
        parts.append(f"{fam}: {q:.6g}<={top:.6g}")
    return worst <= 1e-5, "; ".join(parts), "qubit <= NPA + 1e-5"


def c10c_qubit_psd(s: Settings):
    rng = np.random.default_rng(s.seed)
    worst = math.inf
    structures = [build_structure("1+AB"), build_structure("2")]
    for _ in range(100):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        meas = np.column_stack([rng.uniform(0, np.pi, 4), rng.uniform(0, 2 * np.pi, 4)])
        strat = qubit_lab.QubitStrategy(psi / np.linalg.norm(psi), meas)
        for st in structures:
            worst = min(worst, float(np.linalg.eigvalsh(qubit_lab.moment_matrix(strat, st))[0]))
    return worst >= -1e-10, f"min eigenvalue {worst:.2e}", ">= -1e-10 over 100 strategies"


def c10d_canonicalize(s: Settings):
    count, bad = 0, 0
    for n in range(7):
        for word in itertools.product(GENERATORS, repeat=n):
            once = canonicalize(word)
            count += 1
            bad += canonicalize(once.word) != once
    return bad == 0, f"{bad} of {count} words not idempotent", "0 failures, word length <= 6"


def exhaustive_lp_max(obj: np.ndarray, A: np.ndarray, b: np.ndarray, G: np.ndarray, h: np.ndarray) -> float:
    """max obj @ w over {w >= 0, sum w = 1, A w = b, G w <= h} by enumerating
    every basic solution of the slack form.  Independent of the IPM."""
    n, k = len(obj), len(h)
    M = np.vstack([np.r_[np.ones(n), np.zeros(k)], np.hstack([A, np.zeros((len(b), k))]), np.hstack([G, np.eye(k)])])
    rhs = np.r_[1.0, b, h]
    c = np.r_[obj, np.zeros(k)]
    m = M.shape[0]
    best = -math.inf
    for cols in itertools.combinations(range(n + k), m):
        B = M[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, rhs)
        if np.min(xb) < -1e-10:
            continue
        best = max(best, float(c[list(cols)] @ xb))
    return best


def _random_lp(rng):
    vertices = np.array([behavior_of(d).flat() for d in lhv_oracle.VERTICES])
    obj = BehaviorForm(rng.normal(size=16))
    w0 = rng.dirichlet(np.ones(16))
    p0 = w0 @ vertices
    cons = []
    for _ in range(rng.integers(1, 3)):
        f = BehaviorForm(rng.integers(-1, 2, size=16).astype(float))
        cons.append(Constraint(f, "==", float(f.coeffs.ravel() @ p0)))
    f = BehaviorForm(rng.normal(size=16))
    cons.append(Constraint(f, "<=", float(f.coeffs.ravel() @ p0) + rng.uniform(0.0, 0.2)))
    return obj, cons, vertices


def c10e_lp_vs_scan(s: Settings):
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for _ in range(50):
        obj, cons, V = _random_lp(rng)
        val = lhv_oracle.lhv_optimize(obj, cons).value
        A = np.array([V @ c.form.coeffs.ravel() for c in cons if c.sense == "=="])
        b = np.array([c.value for c in cons if c.sense == "=="])
        G = np.array([V @ c.form.coeffs.ravel() for c in cons if c.sense == "<="])
        h = np.array([c.value for c in cons if c.sense == "<="])
        worst = max(worst, abs(val - exhaustive_lp_max(V @ obj.coeffs.ravel(), A, b, G, h)))
    return worst <= 1e-7, f"max |LP - scan| = {worst:.2e}", "<= 1e-7 on 50 LPs"


def c10f_ch_vertices(s: Settings):
    vals = [ch_value(behavior_of(d)) for d in enumerate_deterministic()]
    ok = min(vals) >= -1 - 1e-12 and max(vals) <= 1e-12 and -1.0 in vals and 0.0 in vals
    return ok, f"range [{min(vals):g}, {max(vals):g}], endpoints hit: {(-1.0 in vals) and (0.0 in vals)}", "[-1, 0], both attained"


def h1_hierarchy_max(s: Settings):
    worst, parts = -math.inf, []
    for fam in FAMILIES:
        param = 0.1 if fam == "noisy-hardy" else None
        if fam == "chsh":
            # the family maximum is a constant; compare the actual relaxations
            from .protocols import _max_feasible

            v1, v2 = (_max_feasible(fam, lvl, None, s.gap_tol) for lvl in ("1+AB", "2"))
        else:
            v1 = max_feasible(fam, "1+AB", parameter=param, gap_tol=s.gap_tol)
            v2 = max_feasible(fam, "2", parameter=param, gap_tol=s.gap_tol)
        worst = max(worst, v2 - v1)
        parts.append(f"{fam}: {v2:.7g}<={v1:.7g}")
    return worst <= 1e-7, "; ".join(parts), "level 2 <= level 1+AB + 1e-7"


HIERARCHY_POINTS = [
    ("hardy", 0.045), ("hardy", 0.090169), ("noisy-hardy", 1.0 / 6.0), ("noisy-hardy", 1.0 / 3.0),
    ("cabello", 0.05), ("cabello", 0.1078), ("dw-cabello", 0.04), ("dw-cabello", 0.079),
    ("chsh", 2.5), ("chsh", TSIRELSON),
]  # fmt: skip


def h2_hierarchy_certify(s: Settings):
    worst, where = -math.inf, None
    for fam, p in HIERARCHY_POINTS:
        r1, r2 = _h(fam, p, s, "1+AB"), _h(fam, p, s, "2")
        if r1.status != Status.OPTIMAL.value or r2.status != Status.OPTIMAL.value:
            return False, f"{fam} {p:.6g}: {r1.status}/{r2.status}", "both levels optimal"
        if r2.p_guess - r1.p_guess > worst:
            worst, where = r2.p_guess - r1.p_guess, f"{fam} {p:.6g}"
    return worst <= 1e-6, f"max p_guess(2) - p_guess(1+AB) = {worst:.2e} at {where}", "<= 1e-6"


CRITERIA: list[tuple[str, str, Callable]] = [
    ("1", "Hardy maximum", c1_hardy_max),
    ("2", "Hardy endpoint", c2_hardy_endpoint),
    ("3", "Noisy-Hardy LHV law", c3_noisy_lhv),
    ("4", "Noisy-Hardy endpoint", c4_noisy_endpoint),
    ("5", "Cabello maximum", c5_cabello_max),
    ("6", "Cabello endpoint", c6_cabello_endpoint),
    ("7", "DW-Cabello maximum and endpoint", c7_dw_cabello),
    ("8", "CHSH baseline", c8_chsh),
    ("9", "Classical-point collapse", c9_classical_collapse),
    ("10a", "Monotone H_min curves", c10a_monotone),
    ("10b", "Qubit/NPA sandwich", c10b_sandwich),
    ("10c", "Qubit moment matrices PSD", c10c_qubit_psd),
    ("10d", "Canonicalize idempotence", c10d_canonicalize),
    ("10e", "LP vs exhaustive vertex scan", c10e_lp_vs_scan),
    ("10f", "CH over deterministic vertices", c10f_ch_vertices),
]

HIERARCHY: list[tuple[str, str, Callable]] = [
    ("H1", "Hierarchy: maxima", h1_hierarchy_max),
    ("H2", "Hierarchy: guessing probabilities", h2_hierarchy_certify),
]


def run_one(key: str, title: str, fn: Callable, settings: Settings) -> Check:
    t0 = time.perf_counter()
    try:
        ok, measured, expected = fn(settings)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        ok, measured, expected = False, f"error: {type(exc).__name__}: {exc}", "no exception"
    return Check(key, title, bool(ok), measured, expected, time.perf_counter() - t0)


def selected(settings: Settings) -> list[tuple[str, str, Callable]]:
    return CRITERIA + (HIERARCHY if settings.level == "2" else [])


def run(settings: Settings = Settings(), echo: Callable[[str], None] | None = None) -> list[Check]:
    out = []
    for key, title, fn in selected(settings):
        check = run_one(key, title, fn, settings)
        if echo:
            echo(check.line())
        out.append(check)
    return out
