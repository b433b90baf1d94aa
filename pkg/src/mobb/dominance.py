"""Incumbent list, local upper bounds and the fathoming tests."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .lbs import LowerBoundSet
from .model import SolutionPoint
from .simplex import INT_TOL

DOMINANCE_EPS = 1e-6


def weakly_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return weakly_dominates(a, b) and any(x < y for x, y in zip(a, b))


@dataclass
class InsertResult:
    accepted: bool
    removed: list[SolutionPoint] = field(default_factory=list)


class IncumbentList:
    """Mutually nondominated integer solutions found so far (the upper bound set)."""

    def __init__(self, entries: Iterable[SolutionPoint] = ()):
        self.entries: list[SolutionPoint] = []
        for sp in entries:
            self.try_insert(sp)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def images(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([sp.y for sp in self.entries], dtype=float)

    def try_insert(self, candidate: SolutionPoint) -> InsertResult:
        """Add ``candidate`` unless an entry weakly dominates it.

        Equal images count as weak dominance, so each nondominated point keeps
        exactly one preimage. Entries dominated by an accepted candidate are
        removed and returned.
        """
        y = candidate.y
        if any(weakly_dominates(e.y, y) for e in self.entries):
            return InsertResult(accepted=False)
        removed = [e for e in self.entries if weakly_dominates(y, e.y)]
        if removed:
            self.entries = [e for e in self.entries if not weakly_dominates(y, e.y)]
        self.entries.append(candidate)
        return InsertResult(accepted=True, removed=removed)


def try_insert(incumbents: IncumbentList, candidate: SolutionPoint) -> InsertResult:
    return incumbents.try_insert(candidate)


class LocalUpperBoundSet:
    """Corners ``u`` of the search region ``{y : y < u for some u}``.

    The search region is the set of points not weakly dominated by any
    incumbent; it starts as the open box below ``reference``.
    """

    def __init__(self, reference: Sequence[float], bounds: np.ndarray | None = None):
        self.reference = np.asarray(reference, dtype=float)
        if bounds is None:
            bounds = self.reference[None, :].copy()
        self.bounds = np.asarray(bounds, dtype=float).reshape(-1, self.reference.size)

    def __len__(self) -> int:
        return self.bounds.shape[0]

    def copy(self) -> "LocalUpperBoundSet":
        return LocalUpperBoundSet(self.reference, self.bounds.copy())

    @property
    def is_initial(self) -> bool:
        return len(self) == 1 and bool(np.all(self.bounds[0] == self.reference))

    def in_search_region(self, y: Sequence[float]) -> bool:
        return bool(np.any(np.all(np.asarray(y, dtype=float) < self.bounds, axis=1)))

    def insert(self, point: Sequence[float]) -> None:
        """Remove the dominance cone of ``point`` from the search region (in place)."""
        z = np.asarray(point, dtype=float)
        B = self.bounds
        hit = np.all(z < B, axis=1)
        if not hit.any():
            return
        p = z.size
        parents = B[hit]
        children = np.repeat(parents, p, axis=0)
        idx = np.tile(np.arange(p), parents.shape[0])
        children[np.arange(children.shape[0]), idx] = z[idx]
        rest = B[~hit]
        # only children can be redundant: they lie below their parent
        pool = np.vstack([rest, children])
        keep = []
        for c_i, c in enumerate(children):
            ge = np.all(pool >= c, axis=1)
            ge[rest.shape[0] + c_i] = False
            eq = np.all(pool == c, axis=1)
            # an equal earlier child wins, so duplicates survive once
            later_equal = eq & (np.arange(pool.shape[0]) > rest.shape[0] + c_i)
            if np.any(ge & ~later_equal):
                continue
            keep.append(c)
        self.bounds = np.vstack([rest, np.array(keep).reshape(-1, p)])


def update_local_upper_bounds(lubs: LocalUpperBoundSet, new_point: Sequence[float]) -> LocalUpperBoundSet:
    """Functional form of :meth:`LocalUpperBoundSet.insert`."""
    z = np.asarray(new_point, dtype=float)
    if not np.all(z < lubs.reference):
        raise ValueError("point must lie strictly below the reference point")
    out = lubs.copy()
    out.insert(z)
    return out


class FathomStatus(enum.Enum):
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    DOMINATED = "dominated"
    OPEN = "open"


def relevant_upper_bounds(
    lbs: LowerBoundSet, lubs: LocalUpperBoundSet, eps: float = DOMINANCE_EPS
) -> np.ndarray:
    """Mask of local upper bounds ``u`` whose box ``{y <= u - eps}`` meets the bound set.

    The feasibility LP ``lam_j . y >= d_j for all j, y <= u - eps`` has only
    nonnegative normals, so it is feasible iff ``y = u - eps`` itself satisfies
    every inequality; no solver call is needed.
    """
    if lbs.is_empty:
        return np.zeros(len(lubs), dtype=bool)
    Y = lubs.bounds - eps
    slack = Y @ lbs.normals.T - lbs.offsets
    tol = 1e-9 * (1.0 + np.abs(lbs.offsets))
    return np.all(slack >= -tol, axis=1)


def _single_point_optimal(lbs: LowerBoundSet, incumbents: IncumbentList) -> bool:
    if lbs.num_points != 1:
        return False
    x = lbs.preimages[0]
    if np.any(np.abs(x - np.rint(x)) > INT_TOL):
        return False
    y = lbs.points[0]
    return any(np.all(np.abs(np.asarray(e.y) - y) <= 1e-6) for e in incumbents)


def fathom_check(
    lbs: LowerBoundSet,
    incumbents: IncumbentList,
    lubs: LocalUpperBoundSet,
    mode: str = "exact",
    eps: float = DOMINANCE_EPS,
) -> FathomStatus:
    """Decide whether a node can be discarded.

    ``mode="exact"`` fathoms by dominance iff no local upper bound's box
    reaches the bound set. ``mode="extreme_points_only"`` only asks that every
    extreme point be weakly dominated by an incumbent; that condition is
    necessary but not sufficient, so it may discard nondominated points and is
    kept for comparison runs only.
    """
    if lbs.is_empty:
        return FathomStatus.INFEASIBLE
    if _single_point_optimal(lbs, incumbents):
        return FathomStatus.OPTIMAL
    if mode == "exact":
        if not relevant_upper_bounds(lbs, lubs, eps).any():
            return FathomStatus.DOMINATED
    elif mode == "extreme_points_only":
        Z = incumbents.images()
        if len(incumbents) and all(
            np.any(np.all(Z <= l + 1e-6, axis=1)) for l in lbs.points
        ):
            return FathomStatus.DOMINATED
    else:
        raise ValueError(f"unknown dominance test {mode!r}")
    return FathomStatus.OPEN
