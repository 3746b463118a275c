import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from paradoxrand.bell_core import (
    MINUS,
    PLUS,
    Behavior,
    BehaviorForm,
    Constraint,
    DeterministicStrategy,
    InvalidBehavior,
    behavior_of,
    ch_value,
    chsh_value,
    derived_entries,
    enumerate_deterministic,
    marg_a,
    parse_outcome,
    prob,
    require_valid,
    validate,
)

weights = st.lists(st.floats(0.0, 1.0), min_size=16, max_size=16).filter(lambda w: sum(w) > 1e-3)


def local_mixture(w) -> Behavior:
    w = np.asarray(w) / np.sum(w)
    return Behavior(sum(wi * behavior_of(d).p for wi, d in zip(w, enumerate_deterministic())))


def test_uniform_is_valid():
    assert validate(Behavior.uniform()) == []


def test_sixteen_distinct_vertices():
    ds = enumerate_deterministic()
    assert len(ds) == 16 and len(set(ds)) == 16
    for d in ds:
        assert validate(behavior_of(d)) == []


def test_normalization_violation_reported():
    p = Behavior.uniform().flat()
    p[0] += 0.1
    kinds = {v.kind for v in validate(Behavior.from_flat(p))}
    assert "normalization" in kinds
    with pytest.raises(InvalidBehavior):
        require_valid(Behavior.from_flat(p))


def test_negative_entry_reported():
    p = Behavior.uniform().flat()
    p[0], p[1] = -0.1, 0.35
    assert any(v.kind == "nonnegativity" for v in validate(Behavior.from_flat(p)))


def test_signaling_reported():
    # Alice's marginal for x=0 depends on y
    p = np.zeros((2, 2, 2, 2))
    p[:, :, PLUS, PLUS] = 1.0
    p[0, 1] = 0.0
    p[0, 1, MINUS, PLUS] = 1.0
    assert any(v.kind == "no-signaling" for v in validate(Behavior(p)))


def test_json_round_trip_and_layout():
    d = DeterministicStrategy(PLUS, MINUS, PLUS, PLUS)
    b = behavior_of(d)
    doc = json.loads(json.dumps(b.to_json()))
    assert len(doc["p"]) == 4 and all(len(r) == 4 for r in doc["p"])
    # row (x=0,y=0), entry (a,b)=(+,+) is the last of the four
    assert doc["p"][0] == [0.0, 0.0, 0.0, 1.0]
    assert Behavior.from_json(doc) == b


def test_parse_outcome():
    assert parse_outcome("+") == PLUS and parse_outcome("-") == MINUS
    with pytest.raises(ValueError):
        parse_outcome("x")


def test_ch_over_vertices_in_range_with_both_endpoints():
    vals = {ch_value(behavior_of(d)) for d in enumerate_deterministic()}
    assert min(vals) == -1.0 and max(vals) == 0.0
    assert vals <= {-1.0, 0.0}


def test_chsh_of_vertices_is_plus_minus_two():
    assert {abs(chsh_value(behavior_of(d))) for d in enumerate_deterministic()} == {2.0}


@given(weights)
def test_local_mixtures_respect_bell_bounds(w):
    b = local_mixture(w)
    assert validate(b) == []
    assert -1 - 1e-12 <= ch_value(b) <= 1e-12
    assert abs(chsh_value(b)) <= 2 + 1e-12


@given(weights)
def test_derived_entries_reconstruct(w):
    b = local_mixture(w)
    assert np.allclose(derived_entries(b).reconstruct().p, b.p, atol=1e-14)


@given(weights, st.floats(-3, 3), st.floats(-3, 3))
def test_forms_are_linear(w, s, t):
    b = local_mixture(w)
    f, g = prob(PLUS, PLUS, 1, 1), marg_a(MINUS, 0)
    assert (s * f + t * g)(b) == pytest.approx(s * f(b) + t * g(b), abs=1e-12)


def test_constraint_violation():
    b = Behavior.uniform()
    assert Constraint(prob(PLUS, PLUS, 0, 0), "==", 0.25).violation(b) == 0.0
    assert Constraint(prob(PLUS, PLUS, 0, 0), "<=", 0.2).violation(b) == pytest.approx(0.05)
    assert Constraint(prob(PLUS, PLUS, 0, 0), ">=", 0.2).violation(b) == 0.0
    with pytest.raises(ValueError):
        Constraint(BehaviorForm(), "<", 0.0)


def test_behavior_is_immutable():
    b = Behavior.uniform()
    with pytest.raises(ValueError):
        b.p[0, 0, 0, 0] = 1.0


def test_hardy_zero_pattern_forces_pp_zero_for_every_vertex():
    # the classical content of the paradox: the three zeros imply p(+,+|1,1) = 0
    zeros = [prob(PLUS, PLUS, 0, 0), prob(PLUS, MINUS, 1, 0), prob(MINUS, PLUS, 0, 1)]
    for d in enumerate_deterministic():
        b = behavior_of(d)
        if all(z(b) == 0 for z in zeros):
            assert b.prob(PLUS, PLUS, 1, 1) == 0


def test_overfull_block_reports_normalization():
    p = Behavior.uniform().p.copy()
    p[0, 0] = 0.0
    p[0, 0, PLUS, PLUS] = p[0, 0, MINUS, MINUS] = 0.6
    assert any(v.kind == "normalization" and v.where == "(x,y)=(0,0)" for v in validate(Behavior(p)))


def test_signaling_magnitude():
    # p(+|A0) = 0.7 under y=0 but 0.5 under y=1
    p = Behavior.uniform().p.copy()
    p[0, 0] = [[0.15, 0.15], [0.35, 0.35]]
    report = [v for v in validate(Behavior(p)) if v.kind == "no-signaling" and "A_0" in v.where]
    assert report and max(v.magnitude for v in report) == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize(
    "d, ones",
    [
        ((MINUS,) * 4, [(MINUS, MINUS, x, y) for x in (0, 1) for y in (0, 1)]),
        ((PLUS,) * 4, [(PLUS, PLUS, x, y) for x in (0, 1) for y in (0, 1)]),
        ((PLUS, MINUS, PLUS, MINUS), [(PLUS, PLUS, 0, 0), (MINUS, MINUS, 1, 1), (PLUS, MINUS, 0, 1), (MINUS, PLUS, 1, 0)]),
    ],
)
def test_behavior_of_examples(d, ones):
    b = behavior_of(DeterministicStrategy(*d))
    for a, bb, x, y in ones:
        assert b.prob(a, bb, x, y) == 1.0
    assert b.p.sum() == 4.0


def test_enumeration_order_starts_all_minus():
    assert enumerate_deterministic()[0] == DeterministicStrategy(MINUS, MINUS, MINUS, MINUS)
    behaviors = {behavior_of(d) for d in enumerate_deterministic()}
    assert len(behaviors) == 16


def test_ch_examples():
    assert ch_value(behavior_of(DeterministicStrategy(MINUS, MINUS, MINUS, MINUS))) == -1.0
    assert ch_value(Behavior.uniform()) == pytest.approx(-0.5)
    with pytest.raises(InvalidBehavior):
        ch_value(Behavior(np.zeros(16)))


def test_derived_entries_examples():
    u = derived_entries(Behavior.uniform())
    assert u.a_plus == (0.5, 0.5) and u.b_plus == (0.5, 0.5)
    assert all(q == 0.25 for row in u.pp for q in row)
    d = derived_entries(behavior_of(DeterministicStrategy(PLUS, PLUS, PLUS, PLUS)))
    assert d.a_plus == (1.0, 1.0) and all(q == 1.0 for row in d.pp for q in row)


@given(weights)
def test_pp_identity(w):
    b = local_mixture(w)
    lhs = b.prob(PLUS, PLUS, 0, 0)
    rhs = b.prob(MINUS, MINUS, 0, 0) - b.marginal_a(MINUS, 0) - b.marginal_b(MINUS, 0) + 1
    assert lhs == pytest.approx(rhs, abs=1e-12)
