import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from paradoxrand.acceptance import exhaustive_lp_max
from paradoxrand.bell_core import PLUS, BehaviorForm, Constraint, behavior_of, chsh_form, prob
from paradoxrand.lhv_oracle import (
    VERTICES,
    Infeasible,
    LocalModel,
    feasible_vertices,
    lhv_optimize,
    lhv_sweep,
    vertex_scan_max,
)
from paradoxrand.protocols import figure_of_merit

V = np.array([behavior_of(d).flat() for d in VERTICES])


def scan(objective, cons):
    A = np.array([V @ c.form.coeffs.ravel() for c in cons if c.sense == "=="]).reshape(-1, 16)
    b = np.array([c.value for c in cons if c.sense == "=="])
    G = np.array([V @ c.form.coeffs.ravel() for c in cons if c.sense == "<="]).reshape(-1, 16)
    h = np.array([c.value for c in cons if c.sense == "<="])
    return exhaustive_lp_max(V @ objective.coeffs.ravel(), A, b, G, h)


def test_chsh_local_bound():
    res = lhv_optimize(chsh_form())
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert chsh_form()(res.model.behavior()) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("family", ["hardy", "cabello", "dw-cabello"])
def test_paradox_families_have_no_classical_success(family):
    merit, cons = figure_of_merit(family)
    assert lhv_optimize(merit, cons).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("eps", np.linspace(0, 1 / 3, 7))
def test_noisy_hardy_three_eps(eps):
    merit, cons = figure_of_merit("noisy-hardy", eps)
    assert lhv_optimize(merit, cons).value == pytest.approx(3 * eps, abs=1e-7)


def test_sweep_rows():
    rows = lhv_sweep("noisy-hardy", [0.0, 1 / 6, 1 / 3])
    assert [round(r.value, 9) for r in rows] == [0.0, 0.5, 1.0]


def test_truncated_third():
    merit, cons = figure_of_merit("noisy-hardy", 0.3333)
    assert lhv_optimize(merit, cons).value == pytest.approx(0.9999, abs=1e-9)


def test_infeasible_constraints():
    with pytest.raises(Infeasible):
        lhv_optimize(prob(PLUS, PLUS, 0, 0), [Constraint(prob(PLUS, PLUS, 0, 0), ">=", 1.5)])


def test_minimize_flag():
    res = lhv_optimize(chsh_form(), maximize=False)
    assert res.value == pytest.approx(-2.0, abs=1e-12)


def test_local_model_validation():
    with pytest.raises(ValueError):
        LocalModel(np.ones(16))
    with pytest.raises(ValueError):
        LocalModel(np.ones(15) / 15)


def test_feasible_vertices_for_hardy_zeros():
    _, cons = figure_of_merit("hardy")
    vs = feasible_vertices(cons)
    assert vs and all(c.violation(behavior_of(d)) == 0 for d in vs for c in cons)
    assert vertex_scan_max(prob(PLUS, PLUS, 1, 1), cons) == 0.0


def _random_lp(seed):
    rng = np.random.default_rng(seed)
    obj = BehaviorForm(rng.normal(size=16))
    p0 = rng.dirichlet(np.ones(16)) @ V
    cons = []
    for _ in range(rng.integers(0, 3)):
        f = BehaviorForm(rng.integers(-1, 2, size=16).astype(float))
        cons.append(Constraint(f, "==", float(f.coeffs.ravel() @ p0)))
    for _ in range(rng.integers(0, 2)):
        f = BehaviorForm(rng.normal(size=16))
        cons.append(Constraint(f, "<=", float(f.coeffs.ravel() @ p0) + rng.uniform(0.0, 0.2)))
    return obj, cons


def test_fifty_random_lps_match_vertex_scan():
    for seed in range(50):
        obj, cons = _random_lp(seed)
        assert lhv_optimize(obj, cons).value == pytest.approx(scan(obj, cons), abs=1e-7)


@given(st.integers(0, 100_000))
def test_lp_optimum_is_a_feasible_local_model(seed):
    obj, cons = _random_lp(seed)
    res = lhv_optimize(obj, cons)
    b = res.model.behavior()
    assert max((c.violation(b) for c in cons), default=0.0) <= 1e-8
    assert obj(b) == pytest.approx(res.value, abs=1e-9)
    # no feasible pure vertex beats the mixture optimum
    assert vertex_scan_max(obj, cons) <= res.value + 1e-9
