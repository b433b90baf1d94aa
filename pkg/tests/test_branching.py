import itertools

import numpy as np
import pytest

from mobb.branching import (
    BranchingError, BranchingRule, NoFractionalVariable, branch, choose_variable, dominated_counts,
    ratio_vectors, sum_of_ratios_order,
)
from mobb.lbs import LowerBoundSet
from mobb.model import Subproblem, from_gap, from_knapsack
from mobb.oracle import enumerate_feasible


def lbs_with(preimages):
    X = np.asarray(preimages, float)
    return LowerBoundSet(np.zeros((len(X), 2)), X, np.eye(2), np.zeros(2), np.zeros(2))


@pytest.fixture
def three_var():
    return from_knapsack([1, 1, 1], 2, [[1, 2, 3], [3, 2, 1]])


def test_mof_and_hf(three_var):
    lbs = lbs_with([(0.5, 1, 0), (0.5, 0.3, 1)])
    node = Subproblem.root(three_var)
    assert choose_variable(BranchingRule.create("mof", three_var), lbs, node) == 0
    assert choose_variable(BranchingRule.create("hf", three_var), lbs, node) == 0


def test_dynamic_rules_ignore_fixed_variables(three_var):
    lbs = lbs_with([(0.5, 0.4, 0), (0.5, 0.3, 1)])
    node = Subproblem.root(three_var)
    node.fixed_lower[0] = node.fixed_upper[0] = 0
    assert choose_variable(BranchingRule.create("mof", three_var), lbs, node) == 1


def test_no_fractional_variable(three_var):
    lbs = lbs_with([(0, 1, 0), (1, 0, 1)])
    with pytest.raises(NoFractionalVariable):
        choose_variable(BranchingRule.create("hf", three_var), lbs, Subproblem.root(three_var))


def test_sum_of_ratios_original_sense():
    inst = from_knapsack([2, 1], 5, [[6, 3], [2, 3]])
    sums = ratio_vectors(inst, "original").sum(axis=1)
    assert sums.tolist() == [4.0, 6.0]
    assert sum_of_ratios_order(inst, "original")[0] == 0
    rule = BranchingRule.create("sr", inst, ratio_sense="original")
    assert choose_variable(rule, lbs_with([(0.5, 0.5)]), Subproblem.root(inst)) == 0


def test_sum_of_ratios_minimization_sense():
    # in minimization form the knapsack ratios are negated, so item 1 (sum -6) comes first
    inst = from_knapsack([2, 1], 5, [[6, 3], [2, 3]])
    assert sum_of_ratios_order(inst)[0] == 1
    assert choose_variable(BranchingRule.create("sr", inst), lbs_with([(0.5, 0.5)]), Subproblem.root(inst)) == 1


def test_sum_of_ratios_gap_is_sense_free():
    rng = np.random.default_rng(0)
    inst = from_gap(rng.integers(1, 9, (2, 2, 3)), rng.integers(1, 9, (2, 3)), [10, 10])
    assert sum_of_ratios_order(inst).tolist() == sum_of_ratios_order(inst, "original").tolist()


def test_dominance_counts():
    # ratio vectors (3, 1), (3, 3), (2, 2) with unit weights; larger is better for knapsack
    inst = from_knapsack([1, 1, 1], 2, [[3, 3, 2], [1, 3, 2]])
    assert dominated_counts(inst).tolist() == [1, 0, 1]
    rule = BranchingRule.create("dom", inst)
    assert choose_variable(rule, lbs_with([(0.5, 0.5, 0.5)]), Subproblem.root(inst)) == 1


def test_static_rules_ignore_bound_set(three_var):
    node = Subproblem.root(three_var)
    node.fixed_lower[2] = node.fixed_upper[2] = 1
    for tag in ("sr", "dom"):
        rule = BranchingRule.create(tag, three_var)
        a = choose_variable(rule, lbs_with([(0.5, 0.1, 1)]), node)
        b = choose_variable(rule, lbs_with([(0, 0.9, 1)]), node)
        assert a == b and a != 2


def test_branch_children(three_var):
    node = Subproblem.root(three_var)
    node.depth = 3
    low, high = branch(node, 2, 0.4)
    assert (low.fixed_lower[2], low.fixed_upper[2]) == (0, 0)
    assert (high.fixed_lower[2], high.fixed_upper[2]) == (1, 1)
    assert low.depth == high.depth == 4
    assert low.node_id < high.node_id
    with pytest.raises(BranchingError):
        branch(low, 2, 0.0)


def test_branch_partitions_feasible_set():
    rng = np.random.default_rng(1)
    inst = from_knapsack(rng.integers(1, 9, 10), 20, rng.integers(1, 9, (2, 10)))
    X = np.vstack([X for X, _ in enumerate_feasible(inst)])
    node = Subproblem.root(inst)
    for k in range(inst.num_vars):
        low, high = branch(node, k, 0.5)
        a = {tuple(x) for x in X if low.contains(x)}
        b = {tuple(x) for x in X if high.contains(x)}
        assert not a & b
        assert a | b == {tuple(x) for x in X if node.contains(x)}


def test_general_integer_split():
    inst = from_knapsack([1], 1, [[1], [1]])
    node = Subproblem(inst, np.array([0]), np.array([5]))
    low, high = branch(node, 0, 2.7)
    assert low.fixed_upper[0] == 2 and high.fixed_lower[0] == 3


def test_unknown_rule(three_var):
    with pytest.raises(ValueError):
        BranchingRule.create("xyz", three_var)
