"""Acceptance criteria. Each test records one PASS/FAIL line, printed at the end of the run."""
import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from mobb.branching import RULES
from mobb.cli import main
from mobb.dominance import IncumbentList, LocalUpperBoundSet
from mobb.engine import SELECTIONS, SearchConfig, solve
from mobb.gap import hausdorff, local_gap_terms, score_hd, score_hvb, score_hvg, score_woe
from mobb.instances import GeneratorSpec, generate
from mobb.lbs import dichotomic_search, outer_approximation
from mobb.model import SolutionPoint, Subproblem
from mobb.oracle import brute_force_front, enumerate_feasible
from mobb.simplex import LpProblem, LpStatus, solve_lp
from oracles import grid_search_region, lp_by_vertex_enumeration

SEEDS = range(1, 11)
COMBOS = [(s, r) for s in SELECTIONS for r in RULES]
PLANS = Path(__file__).resolve().parents[1] / "plans"


def record(report, name, ok, detail):
    report.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def suite_instances():
    for s in SEEDS:
        yield "knapsack", s, generate(GeneratorSpec("knapsack", 3, s, n=12))
    for s in SEEDS:
        yield "gap", s, generate(GeneratorSpec("gap", 3, s, machines=3, jobs=4))


def same_points(A, B, tol=1e-6):
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    if A.shape != B.shape:
        return False
    D = np.abs(A[:, None, :] - B[None, :, :]).max(axis=2)
    return bool(np.all(D.min(axis=1) <= tol) and np.all(D.min(axis=0) <= tol))


@pytest.fixture(scope="module")
def suite():
    """Solve every instance with every combo, watching each node."""
    stats = {
        "runs": 0, "mismatches": [], "fronts": {}, "variants": {},
        "lb_nodes": 0, "lb_violations": 0,
        "gap_nodes": 0, "gap_terms": 0, "hvg_gt_hvb": 0, "negative": 0, "hd_iff": 0,
        "start": time.perf_counter(),
    }
    for family, seed, inst in suite_instances():
        truth = set(brute_force_front(inst).points)
        stats["fronts"][(family, seed)] = truth
        blocks = list(enumerate_feasible(inst))
        X = np.vstack([b[0] for b in blocks]) if blocks else np.zeros((0, inst.num_vars), dtype=int)
        Y = np.vstack([b[1] for b in blocks]) if blocks else np.zeros((0, 3), dtype=int)

        def watch(event, family=family, X=X, Y=Y):
            if family == "knapsack":
                node = event.node
                inside = np.all(X >= node.fixed_lower, axis=1) & np.all(X <= node.fixed_upper, axis=1)
                stats["lb_nodes"] += 1
                if event.lbs.is_empty:
                    stats["lb_violations"] += int(inside.any())
                elif inside.any():
                    stats["lb_violations"] += int(np.sum(event.lbs.slack(Y[inside]) < -1e-6))
            if event.child_score is None:
                return
            stats["gap_nodes"] += 1
            _, simplex, box = local_gap_terms(event.lbs, event.lubs)
            stats["gap_terms"] += simplex.size
            stats["hvg_gt_hvb"] += int(np.sum(simplex > box + 1e-9))
            scores = [
                score_hvg(event.lbs, event.lubs).value, score_hvb(event.lbs, event.lubs).value,
                score_woe(event.lbs, event.lubs).value, score_hd(event.lbs, event.incumbents).value,
            ]
            stats["negative"] += sum(s < 0 for s in scores)
            if len(event.incumbents):
                hd = hausdorff(event.lbs.points, event.incumbents.images())
                equal = same_points(np.unique(event.lbs.points, axis=0), event.incumbents.images().astype(float), 0.0)
                stats["hd_iff"] += int((hd == 0.0) != equal)

        for sel, rule in COMBOS:
            res = solve(inst, SearchConfig(sel, rule), observer=watch)
            stats["runs"] += 1
            images = frozenset(res.images())
            stats["variants"].setdefault((family, seed), set()).add(images)
            if res.status != "Complete" or images != truth:
                stats["mismatches"].append((family, seed, sel, rule))
    stats["elapsed"] = time.perf_counter() - stats["start"]
    return stats


def test_exactness_suite(suite, acceptance_report):
    ok = not suite["mismatches"] and suite["runs"] == 24 * 20
    record(acceptance_report, "exactness (24 combos x 20 instances vs brute force)", ok,
           f"{suite['runs']} runs, {len(suite['mismatches'])} mismatches, {suite['elapsed']:.0f} s")
    assert ok, suite["mismatches"][:5]


def test_strategy_invariance(suite, acceptance_report):
    split = [key for key, fronts in suite["variants"].items() if len(fronts) != 1]
    record(acceptance_report, "strategy invariance (identical sets across 24 combos)", not split,
           f"{len(suite['variants'])} instances, {len(split)} with differing sets")
    assert not split


def test_lower_bound_validity(suite, acceptance_report):
    ok = suite["lb_violations"] == 0 and suite["lb_nodes"] > 0
    record(acceptance_report, "lower-bound validity (n=12 knapsack, every node, tol 1e-6)", ok,
           f"{suite['lb_nodes']} nodes, {suite['lb_violations']} violations")
    assert ok


def test_gap_measure_sanity(suite, acceptance_report):
    # direct checks of HD = 0 iff equal sets and of +inf without incumbents
    lbs = dichotomic_search(*_covering_root())
    no_inc = LocalUpperBoundSet((10.0, 10.0))
    infinite = all(math.isinf(f(lbs, no_inc).value) for f in (score_hvg, score_hvb, score_woe))
    infinite &= math.isinf(score_hd(lbs, IncumbentList()).value)
    same = IncumbentList([SolutionPoint((1, 0), (1, 0), (1, 0)), SolutionPoint((0, 1), (0, 1), (0, 1))])
    hd_direct = score_hd(lbs, same).value == 0.0
    hd_direct &= hausdorff([[0, 0]], [[0, 1]]) > 0
    ok = (suite["hvg_gt_hvb"] == 0 and suite["negative"] == 0 and suite["hd_iff"] == 0
          and infinite and hd_direct and suite["gap_terms"] > 0)
    record(acceptance_report, "gap-measure sanity (HVG <= HVB per bound, HD = 0 iff equal, >= 0, +inf)", ok,
           f"{suite['gap_nodes']} scored nodes, {suite['gap_terms']} local bounds, "
           f"{suite['hvg_gt_hvb']} HVG > HVB, {suite['negative']} negative, {suite['hd_iff']} HD mismatches")
    assert ok


def _covering_root():
    from mobb.model import LE, MoilpInstance

    inst = MoilpInstance(np.eye(2, dtype=int), ((-1, -1),), (-1,), (LE,), np.zeros(2), np.ones(2))
    return inst, Subproblem.root(inst)


def test_local_upper_bound_grid_oracle(acceptance_report):
    rng = np.random.default_rng(2024)
    size = 13
    mismatches = 0
    for trial in range(200):
        p = 2 + trial % 2
        lubs = LocalUpperBoundSet((size,) * p)
        inc = IncumbentList()
        for z in rng.integers(0, size, size=(rng.integers(1, 16), p)):
            z = tuple(int(v) for v in z)
            if inc.try_insert(SolutionPoint((0,), z, z)).accepted:
                lubs.insert(z)
        G, free = grid_search_region(inc.images().tolist(), p, size)
        via = np.any(np.all(G[:, None, :] < lubs.bounds[None, :, :], axis=2), axis=1)
        mismatches += int(np.sum(via != free))
    record(acceptance_report, "local upper bounds vs grid oracle (200 sequences)", mismatches == 0,
           f"{mismatches} mismatches")
    assert mismatches == 0


def test_dichotomic_vs_outer_approximation(acceptance_report):
    rng = np.random.default_rng(77)
    disagreements = 0
    for trial in range(100):
        if trial % 2:
            inst = generate(GeneratorSpec("knapsack", 2, int(rng.integers(1 << 30)), n=int(rng.integers(4, 13))))
        else:
            inst = generate(GeneratorSpec("gap", 2, int(rng.integers(1 << 30)), machines=int(rng.integers(2, 4)),
                                          jobs=int(rng.integers(2, 6))))
        node = Subproblem.root(inst)
        for k in rng.choice(inst.num_vars, size=int(rng.integers(0, inst.num_vars // 2 + 1)), replace=False):
            node.fixed_lower[k] = node.fixed_upper[k] = int(rng.integers(0, 2))
        a, b = dichotomic_search(inst, node), outer_approximation(inst, node)
        if a.is_empty != b.is_empty or (not a.is_empty and not same_points(a.points, b.points)):
            disagreements += 1
    record(acceptance_report, "p=2 dichotomic search = outer approximation (100 subproblems, tol 1e-6)",
           disagreements == 0, f"{disagreements} disagreements")
    assert disagreements == 0


def test_lp_oracle(acceptance_report):
    rng = np.random.default_rng(500)
    bad = 0
    for _ in range(500):
        n, m = int(rng.integers(1, 9)), int(rng.integers(1, 6))
        c = rng.integers(-9, 10, n)
        A = rng.integers(-5, 6, (m, n))
        upper = rng.integers(1, 5, n).astype(float)
        x0 = rng.uniform(0, upper)
        # right-hand sides around a random box point keep most draws feasible
        b = np.floor(A @ x0) + rng.integers(-1, 3, m)
        eq = np.zeros(m, dtype=bool)
        if rng.random() < 0.3:
            eq[0] = True
            b[0] = A[0] @ np.round(x0)
        res = solve_lp(LpProblem(c, A, b, eq, 0.0, upper))
        ref = lp_by_vertex_enumeration(c, A, b, eq, np.zeros(n), upper)
        if ref is None:
            bad += res.status is not LpStatus.INFEASIBLE
        else:
            bad += not (res.optimal and abs(res.objective_value - ref) <= 1e-6)
    record(acceptance_report, "LP oracle (500 random LPs, n <= 8, m <= 5, tol 1e-6)", bad == 0, f"{bad} mismatches")
    assert bad == 0


def test_trend_hvg_hf_vs_bf_sr(acceptance_report):
    start = time.perf_counter()
    hvg, bf = [], []
    for seed in SEEDS:
        inst = generate(GeneratorSpec("knapsack", 3, seed, n=20))
        a = solve(inst, SearchConfig("hvg", "hf"))
        b = solve(inst, SearchConfig("bf", "sr"))
        assert a.status == b.status == "Complete"
        assert a.images() == b.images()
        hvg.append(a.nodes_created)
        bf.append(b.nodes_created)
    wins = sum(x < y for x, y in zip(hvg, bf))
    ok = np.mean(hvg) < np.mean(bf) and wins >= 7
    record(acceptance_report, "trend: HVG-HF creates fewer nodes than BF-SR (p=3, n=20)", ok,
           f"means {np.mean(hvg):.1f} vs {np.mean(bf):.1f}, fewer on {wins}/10, "
           f"{time.perf_counter() - start:.0f} s")
    assert ok


def test_bench_determinism(tmp_path, acceptance_report):
    def bench(out):
        assert main(["bench", "--plan", str(PLANS / "smoke.json"), "--out", str(out)]) == 0
        with open(out / "results.csv", newline="") as fh:
            return [{k: v for k, v in row.items() if k != "time_s"} for row in csv.DictReader(fh)]

    first, second = bench(tmp_path / "a"), bench(tmp_path / "b")
    ok = first == second and len(first) > 0
    record(acceptance_report, "bench determinism (CSV equal except time column)", ok, f"{len(first)} rows each")
    assert ok
