from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualfreq_bci.coding import (
    FrequencyPlan,
    PlanError,
    assign_target_pairs,
    derive_adjacent_frequencies,
    validate_plan,
)


def adjacency_edges(base, derived):
    """Brute-force adjacency set: g_i touches f_i and f_(i+1)."""
    edges = set()
    for i, g in enumerate(derived):
        for j in (i, i + 1):
            if j < len(base):
                edges.add(frozenset((g, base[j])))
    return edges


def shared_adjacencies(p, q, edges):
    return sum(frozenset((x, y)) in edges for x in p for y in q)


def test_unit_spaced_base_frequencies():
    derived, m = derive_adjacent_frequencies([5, 6, 7, 8, 9])
    assert derived == (5.5, 6.5, 7.5, 8.5, 9.5)
    assert m == 0.5


@pytest.mark.parametrize("f,d", [(1.0, 0.5), (5.0, 2.0), (12.25, 0.125)])
def test_two_point_case(f, d):
    derived, m = derive_adjacent_frequencies([f, f + 2 * d])
    assert derived == pytest.approx((f + d, f + 3 * d), abs=1e-12)
    assert m == pytest.approx(d)


def test_irregular_spacing():
    base = [6, 8, 9, 11, 14]
    # independent scalar recomputation
    m = min((base[i + 1] - base[i]) / 2 for i in range(4))
    expected = [(base[i] + base[i + 1]) / 2 for i in range(4)] + [base[-1] + m]
    derived, got_m = derive_adjacent_frequencies(base)
    assert got_m == m == 0.5
    assert list(derived) == expected == [7, 8.5, 10, 12.5, 14.5]


@pytest.mark.parametrize(
    "base,idx",
    [([5, 5, 6], 1), ([5, 7, 6], 2), ([-1, 2, 3], 0), ([0, 2, 3], 0), ([1, float("nan"), 3], 1)],
)
def test_bad_base_names_index(base, idx):
    with pytest.raises(PlanError, match=rf"base\[{idx}\]"):
        derive_adjacent_frequencies(base)


def test_five_target_pairs():
    plan = assign_target_pairs([5, 6, 7, 8, 9])
    assert plan.pairs == ((5, 8.5), (7, 5.5), (8, 6.5), (9, 7.5), (6, 9.5))
    assert validate_plan(plan) == []


def test_irregular_pairs():
    plan = assign_target_pairs([6, 8, 9, 11, 14])
    assert plan.pairs == ((6, 12.5), (9, 7), (11, 8.5), (14, 10), (8, 14.5))


def test_fewer_than_five_refused():
    with pytest.raises(PlanError, match="N >= 5"):
        assign_target_pairs([5, 6, 7, 8])


def test_five_target_plan_exhaustive_adjacency():
    plan = assign_target_pairs([5, 6, 7, 8, 9])
    edges = adjacency_edges(plan.base, plan.derived)
    for i, j in combinations(range(5), 2):
        assert shared_adjacencies(plan.pairs[i], plan.pairs[j], edges) <= 1


def test_duplicate_b_reported():
    good = assign_target_pairs([5, 6, 7, 8, 9])
    bad = FrequencyPlan(good.base, good.derived, good.min_half_gap,
                        ((5, 5.5), (6, 5.5)) + good.pairs[2:], good.f_bounds)
    kinds = {v.kind for v in validate_plan(bad)}
    assert "duplicate" in kinds


def test_bounds_reported():
    plan = assign_target_pairs([5, 6, 7, 8, 41], f_bounds=(2, 40))
    found = [v for v in validate_plan(plan) if v.kind == "bounds"]
    assert found and any("41" in v.detail for v in found)


def test_adjacency_violation_reported():
    good = assign_target_pairs([5, 6, 7, 8, 9])
    # (5, 6.5) and (6, 5.5): 5~5.5, 6~5.5, 6~6.5 -> three shared adjacencies
    bad = FrequencyPlan(good.base, good.derived, good.min_half_gap,
                        ((5, 6.5), (6, 5.5), (7, 7.5), (8, 8.5), (9, 9.5)), good.f_bounds)
    adj = [v for v in validate_plan(bad) if v.kind == "adjacency"]
    assert any(v.targets == (0, 1) for v in adj)


def test_plan_round_trip(tmp_path):
    plan = assign_target_pairs([6, 8, 9, 11, 14])
    plan.save(tmp_path / "p.json")
    assert FrequencyPlan.load(tmp_path / "p.json") == plan


ascending = (
    st.lists(st.floats(min_value=0.05, max_value=3.0), min_size=4, max_size=11)
    .flatmap(lambda gaps: st.tuples(st.floats(min_value=2.0, max_value=10.0), st.just(gaps)))
    .map(lambda t: [round(t[0] + sum(t[1][:i]), 6) for i in range(len(t[1]) + 1)])
    .filter(lambda b: all(b[i + 1] - b[i] > 1e-3 for i in range(len(b) - 1)))
)


@settings(max_examples=200, deadline=None)
@given(ascending)
def test_property_assignment_always_valid(base):
    plan = assign_target_pairs(base, f_bounds=(0.0, 1e3))
    assert validate_plan(plan) == []
    assert sorted(a for a, _ in plan.pairs) == sorted(plan.base)
    assert sorted(b for _, b in plan.pairs) == sorted(plan.derived)
    edges = adjacency_edges(plan.base, plan.derived)
    for i, j in combinations(range(plan.n_targets), 2):
        assert shared_adjacencies(plan.pairs[i], plan.pairs[j], edges) <= 1


@given(st.floats(min_value=1.0, max_value=10.0), st.floats(min_value=0.1, max_value=2.0),
       st.integers(min_value=2, max_value=12))
def test_property_uniform_spacing(f0, d, n):
    base = [f0 + i * d for i in range(n)]
    derived, m = derive_adjacent_frequencies(base)
    assert m == pytest.approx(d / 2)
    assert derived == pytest.approx([b + d / 2 for b in base])
