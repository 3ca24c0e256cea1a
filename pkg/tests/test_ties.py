import itertools
import math
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tieruns import (LINE, DegenerateDataError, Observation, PermutationPlan, TierunsError,
                     ZeroResidualError, classical_runs_test, count_runs, draw_permutation,
                     extended_runs_test, group_by_time, make_observations, residual_sign_sequence)
from tieruns.ties import identity_plan


def obs_with_residuals(t, e):
    return make_observations(t, [0.0] * len(t), e)


def test_group_unique_abscissas():
    g = group_by_time(make_observations([1, 2, 3], [3, 5, 7]))
    assert g.sizes == (1, 1, 1)
    assert not g.has_ties


def test_group_repeats():
    data = make_observations([0.5, 0.75, 0.5], [1.0, 3.0, 2.0])
    g = group_by_time(data)
    assert [grp.t for grp in g.groups] == [0.5, 0.75]
    assert [o.y for o in g.groups[0].members] == [1.0, 2.0]
    assert g.total_count == 3


def test_group_tolerance():
    data = make_observations([1.0, 1.0 + 1e-9], [1, 2])
    assert group_by_time(data).sizes == (1, 1)
    assert group_by_time(data, tolerance=1e-8).sizes == (2,)


def test_group_errors():
    with pytest.raises(TierunsError):
        group_by_time([])
    with pytest.raises(TierunsError, match="observation 1"):
        make_observations([1.0, math.inf], [1.0, 2.0])
    with pytest.raises(TierunsError):
        group_by_time(make_observations([1], [1]), tolerance=-1)


@given(st.lists(st.tuples(st.integers(0, 6), st.floats(-5, 5)), min_size=1, max_size=40))
def test_grouping_partitions(points):
    data = make_observations([p[0] / 2 for p in points], [p[1] for p in points])
    g = group_by_time(data)
    keys = [grp.t for grp in g.groups]
    assert keys == sorted(set(keys))
    members = [o.index for grp in g.groups for o in grp.members]
    assert sorted(members) == list(range(len(data)))


def test_singleton_groups_identity():
    g = group_by_time(make_observations([1, 2, 3, 4], [0, 0, 0, 0]))
    assert draw_permutation(g, 12345, 7).orderings == ((0,), (0,), (0,), (0,))


@pytest.mark.parametrize("k, draws, tol", [(2, 10_000, 0.02), (3, 60_000, 0.01)])
def test_permutation_uniform(k, draws, tol):
    g = group_by_time(make_observations([1.0] * k, [0.0] * k))
    freq = Counter(draw_permutation(g, 99, rep).orderings[0] for rep in range(draws))
    assert len(freq) == math.factorial(k)
    for count in freq.values():
        assert abs(count / draws - 1 / math.factorial(k)) < tol


def test_plan_deterministic():
    g = group_by_time(make_observations([1, 1, 1, 2, 2], [0] * 5))
    assert draw_permutation(g, 5, 3) == draw_permutation(g, 5, 3)


def test_sign_sequence_identity():
    g = group_by_time(obs_with_residuals([1, 2, 3], [0.1, -0.2, 0.3]))
    assert str(residual_sign_sequence(g, identity_plan(g))) == "+-+"


def test_sign_sequence_follows_plan():
    g = group_by_time(obs_with_residuals([1, 1, 1], [0.1, -0.2, 0.3]))
    plan = PermutationPlan(((2, 1, 0),), 0, 0)
    assert str(residual_sign_sequence(g, plan)) == "+-+"
    plan = PermutationPlan(((1, 0, 2),), 0, 0)
    assert str(residual_sign_sequence(g, plan)) == "-++"


def test_zero_policy():
    g = group_by_time(obs_with_residuals([1, 2], [0.0, 1.0]))
    with pytest.raises(ZeroResidualError) as info:
        residual_sign_sequence(g, identity_plan(g))
    assert info.value.index == 0
    assert str(residual_sign_sequence(g, identity_plan(g), "drop")) == "+"
    g = group_by_time(obs_with_residuals([1, 2], [0.0, 0.0]))
    with pytest.raises(DegenerateDataError):
        residual_sign_sequence(g, identity_plan(g), "drop")


def test_missing_residual():
    g = group_by_time(make_observations([1, 2], [1, 2]))
    with pytest.raises(TierunsError, match="fit a model"):
        residual_sign_sequence(g, identity_plan(g))


def all_plans(g):
    choices = [list(itertools.permutations(range(n))) for n in g.sizes]
    for combo in itertools.product(*choices):
        yield PermutationPlan(tuple(combo), 0, 0)


def single_signed_dataset(rng, n_groups, max_size):
    t, e = [], []
    for j in range(n_groups):
        sign = rng.choice([-1, 1])
        for _ in range(rng.integers(1, max_size + 1)):
            t.append(float(j))
            e.append(sign * rng.uniform(0.1, 1.0))
    return obs_with_residuals(t, e)


def test_single_signed_groups_plan_invariant_exhaustive():
    rng = np.random.default_rng(1)
    for _ in range(20):
        data = single_signed_dataset(rng, 4, 4)
        g = group_by_time(data)
        runs = {count_runs(residual_sign_sequence(g, p)).r for p in all_plans(g)}
        assert len(runs) == 1


def test_mixed_group_can_change_runs():
    g = group_by_time(obs_with_residuals([1, 1, 1, 1], [1, 1, -1, -1]))
    runs = {count_runs(residual_sign_sequence(g, p)).r for p in all_plans(g)}
    assert runs == {2, 3, 4}


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 5), st.floats(-1, 1).filter(lambda x: x != 0)),
                min_size=2, max_size=20), st.integers(0, 2**64 - 1))
def test_plan_preserves_group_multisets(points, seed):
    g = group_by_time(obs_with_residuals([p[0] for p in points], [p[1] for p in points]))
    plan = draw_permutation(g, seed, 0)
    for grp, order in zip(g.groups, plan.orderings):
        assert sorted(order) == list(range(len(grp)))
    from tieruns.ties import ordered_residuals
    before = sorted(o.residual for o in ordered_residuals(g, identity_plan(g)))
    after = sorted(o.residual for o in ordered_residuals(g, plan))
    assert before == after


def line_data(t, seed):
    rng = np.random.default_rng(seed)
    t = np.asarray(t, dtype=float)
    return make_observations(t, 2 * t + 1 + rng.normal(0, 0.34, t.size))


def test_extended_equals_classical_without_ties():
    data = line_data(np.arange(1, 21), 3)
    rep = extended_runs_test(data, LINE, seed=77, replicates=5)
    classical = classical_runs_test(data, LINE)
    assert all(r == classical for r in rep.results)


def test_extended_deterministic():
    data = line_data(np.repeat(np.arange(1, 8), 3), 4)
    a = extended_runs_test(data, LINE, seed=2**63 + 5, replicates=5)
    b = extended_runs_test(data, LINE, seed=2**63 + 5, replicates=5)
    assert a.results == b.results and a.plans == b.plans


def test_extended_input_order_irrelevant():
    data = line_data(np.repeat(np.arange(1, 8), 3), 4)
    shuffled = [data[i] for i in np.random.default_rng(0).permutation(len(data))]
    # same groups in the same member order only if input order within timepoints is kept
    a = extended_runs_test(data, LINE, seed=1).headline.statistic
    b = extended_runs_test(shuffled, LINE, seed=1).headline.statistic
    assert (a.n1, a.n2) == (b.n1, b.n2)


def test_extended_report_summary():
    data = line_data(np.repeat(np.arange(1, 8), 4), 5)
    rep = extended_runs_test(data, LINE, seed=3, replicates=9)
    ps = [r.p_two_sided for r in rep.results]
    assert rep.p_summary() == {"min": min(ps), "median": sorted(ps)[4], "max": max(ps)}
    assert rep.headline is rep.results[0]


def test_extended_errors():
    with pytest.raises(TierunsError):
        extended_runs_test(line_data([1, 2, 3], 0), LINE, replicates=0)
    with pytest.raises(TierunsError, match="precomputed"):
        extended_runs_test(make_observations([1, 2, 3, 4], [3, 5, 7, 9.5]), None)
    with pytest.raises(DegenerateDataError, match="single sign class"):
        extended_runs_test(obs_with_residuals([1, 2, 3], [0.1, 0.2, 0.3]), None)
    exact = make_observations(np.arange(1, 17), 2 * np.arange(1, 17) + 1.0)
    with pytest.raises(DegenerateDataError):
        extended_runs_test([replace(o, residual=0.0) for o in exact], None)
