import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobb.branching import RULES
from mobb.engine import SELECTIONS, NodeQueue, SearchConfig, solve
from mobb.model import Subproblem, from_knapsack
from mobb.oracle import brute_force_front, hypervolume
from conftest import random_gap, random_knapsack


def nodes(tiny, scores):
    out = []
    for s in scores:
        node = Subproblem.root(tiny)
        node.score = s
        out.append(node)
    return out


def test_queue_orders(tiny_knapsack):
    a, b, c = nodes(tiny_knapsack, [5, 12, 5])
    for sel, expected in [("df", [c, b, a]), ("bf", [a, b, c]), ("hvb", [b, a, c])]:
        q = NodeQueue(sel)
        for node in (a, b, c):
            q.push(node)
        assert [q.pop() for _ in range(3)] == expected
        assert q.pop() is None


def test_tiny_knapsack(tiny_knapsack):
    res = solve(tiny_knapsack, SearchConfig("hvg", "hf"))
    assert res.status == "Complete"
    assert res.display_images() == [(2, 4), (4, 2)]
    for sp in res.nondominated_set:
        assert tiny_knapsack.is_feasible(sp.x)
        assert tiny_knapsack.image(sp.x) == sp.y


def test_single_item():
    inst = from_knapsack([1], 1, [[5], [7]])
    assert solve(inst).display_images() == [(5, 7)]


@pytest.mark.parametrize("sel,rule", list(itertools.product(SELECTIONS, RULES)))
def test_every_combo_is_exact(sel, rule):
    rng = np.random.default_rng(11)
    for inst in (random_knapsack(rng, 9, 3), random_gap(rng, 2, 4, 2), random_knapsack(rng, 8, 2)):
        res = solve(inst, SearchConfig(sel, rule))
        assert res.images() == set(brute_force_front(inst).points)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(SELECTIONS), st.sampled_from(RULES))
def test_exact_on_random_instances(seed, sel, rule):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 4))
    inst = random_knapsack(rng, 8, p) if seed % 2 else random_gap(rng, 2, 3, p)
    res = solve(inst, SearchConfig(sel, rule))
    assert res.status == "Complete"
    assert res.images() == set(brute_force_front(inst).points)
    assert res.nodes_created == res.nodes_processed + res.queue_remaining
    assert sum(res.fathomed.values()) == res.nodes_processed


def test_incumbent_hypervolume_never_drops():
    rng = np.random.default_rng(5)
    inst = random_knapsack(rng, 12, 3)
    ref = inst.reference_point()
    seen = []

    def watch(event):
        if event.node.node_id % 5 == 0 and len(event.incumbents):
            seen.append(hypervolume(event.incumbents.images().tolist(), ref))

    solve(inst, SearchConfig("df", "mof"), observer=watch)
    assert len(seen) > 3
    assert all(b >= a for a, b in zip(seen, seen[1:]))


def test_deterministic_counters():
    inst = random_knapsack(np.random.default_rng(2), 10, 3)
    a = solve(inst, SearchConfig("woe", "hf"))
    b = solve(inst, SearchConfig("woe", "hf"))
    assert (a.nodes_created, a.nodes_processed, a.fathomed) == (b.nodes_created, b.nodes_processed, b.fathomed)
    assert a.images() == b.images()


def test_node_limit():
    inst = random_knapsack(np.random.default_rng(2), 10, 3)
    res = solve(inst, SearchConfig("bf", "sr", node_limit=3))
    assert res.status == "NodeLimit"
    assert res.nodes_processed == 3


def test_rescore_on_pop_is_exact():
    inst = random_knapsack(np.random.default_rng(4), 10, 3)
    res = solve(inst, SearchConfig("hvg", "hf", rescore_on_pop=True))
    assert res.images() == set(brute_force_front(inst).points)


def test_exact_without_dominance_fathoming(monkeypatch):
    import mobb.engine as engine
    from mobb.dominance import FathomStatus, fathom_check

    def no_dominance(*args, **kwargs):
        status = fathom_check(*args, **kwargs)
        return FathomStatus.OPEN if status is FathomStatus.DOMINATED else status

    monkeypatch.setattr(engine, "fathom_check", no_dominance)
    inst = random_knapsack(np.random.default_rng(8), 8, 3)
    res = solve(inst, SearchConfig("df", "hf"))
    assert "dominated" not in res.fathomed
    assert res.images() == set(brute_force_front(inst).points)


def test_bad_config():
    with pytest.raises(ValueError):
        SearchConfig("xyz", "hf")
    with pytest.raises(ValueError):
        SearchConfig("df", "hf", time_limit_seconds=0)
    assert SearchConfig("hvg", "hf").label == "HVG-HF"
