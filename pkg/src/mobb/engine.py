"""Multi-objective branch and bound main loop."""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .branching import RATIO_SENSES, BranchingRule, NoFractionalVariable, branch, choose_variable, split_value
from .dominance import FathomStatus, IncumbentList, LocalUpperBoundSet, fathom_check
from .gap import SCORERS
from .lbs import LowerBoundSet, compute_lower_bound_set, integer_feasible_extremes
from .model import MoilpInstance, SolutionPoint, Subproblem

log = logging.getLogger(__name__)

SELECTIONS = ("df", "bf", "hvg", "hvb", "hd", "woe")


@dataclass
class SearchConfig:
    selection: str = "hvg"
    rule: str = "hf"
    time_limit_seconds: float = 3600.0
    node_limit: int | None = None
    dominance_test: str = "exact"
    rng_seed: int = 0  # kept for reproducible configs; the search itself makes no random choices
    rescore_on_pop: bool = False
    ratio_sense: str = "minimize"

    def __post_init__(self) -> None:
        self.selection = self.selection.lower()
        self.rule = self.rule.lower()
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown node selection {self.selection!r}; choose from {SELECTIONS}")
        if not self.time_limit_seconds > 0:
            raise ValueError("time limit must be positive")
        if self.dominance_test not in ("exact", "extreme_points_only"):
            raise ValueError(f"unknown dominance test {self.dominance_test!r}")
        if self.ratio_sense not in RATIO_SENSES:
            raise ValueError(f"unknown ratio sense {self.ratio_sense!r}")

    @property
    def label(self) -> str:
        return f"{self.selection.upper()}-{self.rule.upper()}"


@dataclass
class SearchResult:
    nondominated_set: list[SolutionPoint]
    status: str
    nodes_created: int
    nodes_processed: int
    wall_time_seconds: float
    fathomed: dict[str, int] = field(default_factory=dict)
    queue_remaining: int = 0

    def images(self) -> set[tuple[int, ...]]:
        return {sp.y for sp in self.nondominated_set}

    def display_images(self) -> list[tuple[int, ...]]:
        return sorted(sp.display_y for sp in self.nondominated_set)


@dataclass
class NodeEvent:
    """What happened at one processed node; handed to an optional observer."""

    node: Subproblem
    lbs: LowerBoundSet
    status: FathomStatus
    incumbents: IncumbentList
    lubs: LocalUpperBoundSet
    branched_on: int | None = None
    child_score: float | None = None


class NodeQueue:
    """LIFO for ``df``, FIFO for ``bf``, otherwise max-score with FIFO ties."""

    def __init__(self, selection: str):
        self.selection = selection
        self._counter = itertools.count()
        if selection in ("df", "bf"):
            self._items: deque | list = deque()
        else:
            self._items = []

    def __len__(self) -> int:
        return len(self._items)

    def push(self, node: Subproblem) -> None:
        if self.selection in ("df", "bf"):
            self._items.append(node)
        else:
            heapq.heappush(self._items, (-node.score, next(self._counter), node))

    def pop(self) -> Subproblem | None:
        if not self._items:
            return None
        if self.selection == "df":
            return self._items.pop()
        if self.selection == "bf":
            return self._items.popleft()
        return heapq.heappop(self._items)[2]

    def peek_score(self) -> float:
        if self.selection in ("df", "bf") or not self._items:
            return -math.inf
        return -self._items[0][0]


def queue_push(queue: NodeQueue, node: Subproblem) -> None:
    queue.push(node)


def queue_pop(queue: NodeQueue) -> Subproblem | None:
    return queue.pop()


def solve(
    instance: MoilpInstance,
    config: SearchConfig | None = None,
    observer: Callable[[NodeEvent], None] | None = None,
    bound_set: Callable[[MoilpInstance, Subproblem], LowerBoundSet] = compute_lower_bound_set,
) -> SearchResult:
    """Compute a minimal complete set by branch and bound.

    Each popped node gets its bound set recomputed from scratch; integral
    extreme points go to the incumbent list; then the node is fathomed or
    split. Children are scored with the parent's bound set.
    """
    config = config or SearchConfig()
    start = time.perf_counter()
    rule = BranchingRule.create(config.rule, instance, config.ratio_sense)
    fallback = BranchingRule.create("sr", instance, config.ratio_sense)
    scorer = SCORERS.get(config.selection)

    incumbents = IncumbentList()
    lubs = LocalUpperBoundSet(instance.reference_point())
    queue = NodeQueue(config.selection)
    ids = itertools.count(1)
    root = Subproblem.root(instance)
    queue.push(root)
    created, processed = 1, 0
    fathomed: Counter[str] = Counter()
    status = "Complete"

    while len(queue):
        if time.perf_counter() - start > config.time_limit_seconds:
            status = "TimeLimit"
            break
        if config.node_limit is not None and processed >= config.node_limit:
            status = "NodeLimit"
            break
        node = queue.pop()
        if config.rescore_on_pop and scorer is not None and node.inherited_lbs is not None:
            if not getattr(node, "_rescored", False):
                node.score = scorer(node.inherited_lbs, incumbents, lubs).value
                node._rescored = True  # type: ignore[attr-defined]
                if node.score < queue.peek_score():
                    queue.push(node)
                    continue
        processed += 1
        lbs = bound_set(instance, node)
        for sp in integer_feasible_extremes(lbs, instance):
            if incumbents.try_insert(sp).accepted:
                lubs.insert(sp.y)
        verdict = fathom_check(lbs, incumbents, lubs, config.dominance_test)
        if verdict is FathomStatus.OPEN and not node.free_mask.any():
            # a fully fixed node is a single point and was offered to the incumbents above
            verdict = FathomStatus.OPTIMAL
        if verdict is not FathomStatus.OPEN:
            fathomed[verdict.value] += 1
            if observer:
                observer(NodeEvent(node, lbs, verdict, incumbents, lubs))
            continue

        try:
            k = choose_variable(rule, lbs, node)
        except NoFractionalVariable:
            k = choose_variable(fallback, lbs, node)
        low, high = branch(node, k, split_value(lbs, k), ids)
        score = math.inf
        if scorer is not None:
            score = scorer(lbs, incumbents, lubs).value
        for child in (low, high):
            child.score = score
            child.inherited_lbs = lbs if config.rescore_on_pop else None
            queue.push(child)
        created += 2
        fathomed["branched"] += 1
        if observer:
            observer(NodeEvent(node, lbs, verdict, incumbents, lubs, branched_on=k, child_score=score))

    elapsed = time.perf_counter() - start
    front = sorted(incumbents.entries, key=lambda sp: sp.y)
    log.debug("%s: %s after %d nodes, %d points", config.label, status, processed, len(front))
    return SearchResult(
        nondominated_set=front,
        status=status,
        nodes_created=created,
        nodes_processed=processed,
        wall_time_seconds=elapsed,
        fathomed=dict(fathomed),
        queue_remaining=len(queue),
    )
