import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paradoxrand.bell_core import MINUS, PLUS, DeterministicStrategy, behavior_of, prob
from paradoxrand.protocols import (
    FAMILIES,
    RANGES,
    TSIRELSON,
    UnknownFamily,
    build,
    certify,
    is_monotone,
    max_feasible,
    qubit_lower_bound,
    solve_forms,
    sweep,
)
from paradoxrand.sdp_core import Status

HARDY_MAX = (5 * math.sqrt(5) - 11) / 2
PHI = (1 + math.sqrt(5)) / 2
OPTIMAL = Status.OPTIMAL.value


def h(family, p, level="1+AB"):
    return certify(build(family, p, level), level)


# ---------------------------------------------------------------- build


def test_build_hardy_zero_admits_all_minus():
    spec = build("hardy", 0.0)
    b = behavior_of(DeterministicStrategy(MINUS, MINUS, MINUS, MINUS))
    assert all(c.violation(b) == 0.0 for c in spec.constraints)


def test_build_cabello_range():
    assert h("cabello", 0.10784).status == OPTIMAL
    assert h("cabello", 0.110).status == Status.INFEASIBLE.value


def test_dw_adds_alice_marginals():
    dw, cab = build("dw-cabello", 0.05), build("cabello", 0.05)
    assert len(dw.constraints) == len(cab.constraints) + 4
    assert dw.objective_kind != cab.objective_kind


def test_unknown_family_and_bad_parameter():
    with pytest.raises(UnknownFamily):
        build("bell", 0.1)
    with pytest.raises(ValueError):
        build("hardy", math.nan)


# ---------------------------------------------------------------- max_feasible


def test_max_feasible_examples():
    assert max_feasible("hardy") == pytest.approx(0.09017, abs=5e-4)
    assert max_feasible("hardy") == pytest.approx(HARDY_MAX, abs=1e-7)
    assert max_feasible("noisy-hardy", parameter=0.0) == pytest.approx(max_feasible("hardy"), abs=1e-7)
    assert max_feasible("noisy-hardy", parameter=1 / 3) == pytest.approx(0.99995, abs=1e-4)
    assert max_feasible("dw-cabello") == pytest.approx(0.08279, abs=5e-4)
    assert max_feasible("chsh") == TSIRELSON


@pytest.mark.parametrize("family", FAMILIES)
def test_hierarchy_maxima(family):
    param = 0.1 if family == "noisy-hardy" else None
    if family == "chsh":
        from paradoxrand.protocols import figure_of_merit

        merit, cons = figure_of_merit("chsh")
        v1, v2 = (solve_forms(merit, cons, lvl).value for lvl in ("1+AB", "2"))
    else:
        v1 = max_feasible(family, "1+AB", parameter=param)
        v2 = max_feasible(family, "2", parameter=param)
    assert v2 <= v1 + 1e-7


# ---------------------------------------------------------------- certify


def test_certify_examples():
    assert h("hardy", 0.090169).h_min == pytest.approx(1.35, abs=0.02)


def test_certify_noisy_endpoint():
    assert h("noisy-hardy", 1 / 3).h_min == pytest.approx(1.58, abs=0.02)


def test_certify_cabello_endpoint():
    assert h("cabello", 0.10784).h_min == pytest.approx(1.56, abs=0.02)


def test_certify_dw_endpoint():
    assert h("dw-cabello", 0.08279).h_min == pytest.approx(0.68, abs=0.02)


def test_certify_chsh():
    top = h("chsh", TSIRELSON)
    assert top.h_min == pytest.approx(1.23, abs=0.02)
    # closed form: p_guess = (2 + sqrt2) / 8
    assert top.p_guess == pytest.approx((2 + math.sqrt(2)) / 8, abs=1e-6)
    assert h("chsh", 2.0).h_min <= 1e-4


def test_certify_hardy_zero():
    r = h("hardy", 0.0)
    assert r.h_min == pytest.approx(0.0, abs=1e-6) and r.lhv_witness == "(-,-,-,-)"


def test_hardy_max_closed_form():
    # at the maximum the optimal strategy is unique; p_guess = 1 / phi^2
    r = h("hardy", HARDY_MAX)
    assert r.p_guess == pytest.approx(1 / PHI**2, abs=1e-6)
    assert r.h_min == pytest.approx(2 * math.log2(PHI), abs=1e-5)


@pytest.mark.parametrize(
    "family, p", [("hardy", 0.045), ("cabello", 0.05), ("dw-cabello", 0.04), ("noisy-hardy", 0.1), ("chsh", 2.5)]
)
def test_result_invariants(family, p):
    r = h(family, p)
    assert r.status == OPTIMAL
    assert r.h_min == pytest.approx(-math.log2(r.p_guess), abs=1e-9)
    lo = 0.5 if family == "dw-cabello" else 0.25
    assert lo - 1e-9 <= r.p_guess <= 1 + 1e-9
    assert r.gap <= 1e-6


def test_dw_conditional_is_twice_the_joint():
    spec = build("dw-cabello", 0.06)
    r = certify(spec)
    joints = [solve_forms(prob(a, b, 0, 0), spec.constraints).value for a in (MINUS, PLUS) for b in (MINUS, PLUS)]
    assert r.p_guess == pytest.approx(2 * max(joints), abs=1e-9)


def test_lhv_baselines():
    for eps in np.linspace(0, 1 / 3, 5):
        assert h("noisy-hardy", eps).lhv_baseline == pytest.approx(3 * eps, abs=1e-7)
    for p in (0.0, 0.05, 0.1):
        assert h("cabello", p).lhv_baseline == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1, 0.2, 0.3, 1 / 3])
def test_noisy_positive_entropy_only_above_classical(eps):
    r = h("noisy-hardy", eps)
    if r.h_min > 1e-6:
        assert r.delta > 3 * eps


@settings(max_examples=12)
@given(st.floats(1e-4, 0.1078))
def test_cabello_entropy_positive(p):
    assert h("cabello", p).h_min > 0


@pytest.mark.parametrize("family", FAMILIES)
def test_deterministic_witness_forces_zero_entropy(family):
    lo, hi = RANGES[family]
    for p in np.linspace(lo, hi, 5):
        r = h(family, p)
        if r.lhv_witness is not None and r.status == OPTIMAL:
            assert r.p_guess == pytest.approx(1.0, abs=1e-6)
            assert r.h_min == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES)
def test_qubit_below_npa(family):
    param = 0.1 if family == "noisy-hardy" else None
    q = qubit_lower_bound(family, param, restarts=4, seed=3)
    assert q is not None
    assert q <= max_feasible(family, parameter=param) + 1e-5


HIERARCHY_POINTS = [
    ("hardy", 0.045), ("hardy", 0.090169), ("noisy-hardy", 1 / 6), ("noisy-hardy", 1 / 3),
    ("cabello", 0.05), ("cabello", 0.1078), ("dw-cabello", 0.04), ("dw-cabello", 0.079),
    ("chsh", 2.5), ("chsh", TSIRELSON),
]  # fmt: skip


@pytest.mark.parametrize("family, p", HIERARCHY_POINTS)
def test_hierarchy_guessing(family, p):
    r1, r2 = h(family, p, "1+AB"), h(family, p, "2")
    assert r1.status == r2.status == OPTIMAL
    assert r2.p_guess <= r1.p_guess + 1e-6


def test_level_two_cabello_agrees():
    assert max_feasible("cabello", "2") == pytest.approx(max_feasible("cabello"), abs=1e-3)


# ---------------------------------------------------------------- sweep


def test_hardy_sweep_example():
    rs = sweep("hardy", [0, 0.045, 0.09017])
    assert rs[0].h_min == pytest.approx(0.0, abs=1e-6)
    assert is_monotone(rs)
    assert rs[1].h_min == pytest.approx(h("hardy", 0.045, "2").h_min, abs=1e-3)
    assert rs[-1].h_min == pytest.approx(1.35, abs=0.02)


def test_noisy_sweep_example():
    rs = sweep("noisy-hardy", [0, 1 / 6, 1 / 3])
    assert rs[-1].h_min == pytest.approx(1.58, abs=0.02)
    assert is_monotone(rs)


def test_cabello_sweep_example():
    rs = sweep("cabello", [0, 0.05, 0.10784])
    assert rs[0].h_min == pytest.approx(0.0, abs=1e-6)
    assert rs[1].h_min == pytest.approx(h("cabello", 0.05, "2").h_min, abs=1e-3)
    assert rs[-1].h_min == pytest.approx(1.56, abs=0.02)


@pytest.mark.parametrize("family", ["hardy", "cabello", "dw-cabello", "chsh"])
def test_sweeps_monotone(family):
    lo = RANGES[family][0]
    grid = np.linspace(lo, max_feasible(family), 25)
    rs = sweep(family, grid)
    assert all(r.status == OPTIMAL for r in rs)
    assert is_monotone(rs)


def test_sweep_records_failures_and_keeps_order():
    rs = sweep("hardy", [0.05, 0.2, 0.01])
    assert [r.parameter for r in rs] == [0.05, 0.2, 0.01]
    assert [r.status for r in rs] == [OPTIMAL, Status.INFEASIBLE.value, OPTIMAL]


def test_sweep_workers_match_serial():
    grid = [0.0, 0.03, 0.06]
    a = [r.as_dict() for r in sweep("cabello", grid)]
    b = [r.as_dict() for r in sweep("cabello", grid, workers=2)]
    assert a == b
