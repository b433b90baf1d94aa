"""Branching variable selection and binary branching.

Two rules look at the current bound set (most often fractional, how
fractional); two are static and only look at the instance data (sum of
ratios, dominance of ratios).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .lbs import LowerBoundSet
from .model import MoilpInstance, Subproblem
from .simplex import INT_TOL

RULES = ("mof", "hf", "sr", "dom")
RATIO_SENSES = ("minimize", "original")


class NoFractionalVariable(Exception):
    """No unfixed variable is fractional in any extreme preimage."""


class BranchingError(ValueError):
    pass


def ratio_vectors(instance: MoilpInstance, sense: str = "original") -> np.ndarray:
    """``c_k,i / w_i`` per variable (rows) and objective (columns).

    ``sense="original"`` uses the instance's own coefficients (knapsack
    profits); ``"minimize"`` uses the minimization-form objective matrix, so
    knapsack ratios come out negated.
    """
    if sense not in RATIO_SENSES:
        raise ValueError(f"unknown ratio sense {sense!r}")
    if sense == "original" and instance.branch_costs is not None:
        costs = instance.branch_costs
    else:
        costs = instance.objectives.astype(float)
    weights = instance.branch_weights if instance.branch_weights is not None else np.ones(instance.num_vars)
    return (costs / weights).T


def sum_of_ratios_order(instance: MoilpInstance, sense: str = "minimize") -> np.ndarray:
    """Variables sorted by increasing ratio sum, ties by index.

    In the default minimization form a knapsack's most profitable items per
    unit weight come first.
    """
    sums = ratio_vectors(instance, sense).sum(axis=1)
    return np.lexsort((np.arange(sums.size), sums))


def dominated_counts(instance: MoilpInstance) -> np.ndarray:
    """How many other ratio vectors dominate each variable's ratio vector.

    Dominance follows the instance's original sense: larger profit ratios are
    better for knapsack, smaller cost ratios for minimization instances.
    """
    R = ratio_vectors(instance)
    if instance.maximize:
        R = -R
    # R[j] dominates R[i] (minimization form) iff R[j] <= R[i] and R[j] != R[i]
    le = np.all(R[None, :, :] <= R[:, None, :], axis=2)
    ne = np.any(R[None, :, :] != R[:, None, :], axis=2)
    return (le & ne).sum(axis=1)


def dominance_order(instance: MoilpInstance) -> np.ndarray:
    counts = dominated_counts(instance)
    return np.lexsort((np.arange(counts.size), counts))


@dataclass(frozen=True)
class BranchingRule:
    tag: str
    static_order: tuple[int, ...] | None = None

    @classmethod
    def create(cls, tag: str, instance: MoilpInstance, ratio_sense: str = "minimize") -> "BranchingRule":
        tag = tag.lower()
        if tag not in RULES:
            raise ValueError(f"unknown branching rule {tag!r}; choose from {RULES}")
        if tag == "sr":
            order = sum_of_ratios_order(instance, ratio_sense)
        elif tag == "dom":
            order = dominance_order(instance)
        else:
            order = None
        return cls(tag, None if order is None else tuple(int(i) for i in order))


def _fractionality(lbs: LowerBoundSet, free: np.ndarray) -> np.ndarray:
    X = lbs.preimages[:, free]
    frac = X - np.floor(X)
    return np.minimum(frac, 1.0 - frac)


def choose_variable(rule: BranchingRule, lbs: LowerBoundSet, subproblem: Subproblem) -> int:
    """Index of the branching variable; ties go to the lowest index.

    Raises:
        NoFractionalVariable: for ``mof``/``hf`` when every extreme preimage is
            integral on the unfixed variables.
        BranchingError: when no variable is left to branch on.
    """
    free = np.flatnonzero(subproblem.free_mask)
    if free.size == 0:
        raise BranchingError("all variables are fixed")
    if rule.static_order is not None:
        is_free = subproblem.free_mask
        for k in rule.static_order:
            if is_free[k]:
                return int(k)
    if lbs.is_empty or lbs.num_points == 0:
        raise NoFractionalVariable("empty bound set")
    dist = _fractionality(lbs, free)
    if rule.tag == "mof":
        score = (dist > INT_TOL).sum(axis=0).astype(float)
    elif rule.tag == "hf":
        score = np.where(dist > INT_TOL, dist, 0.0).sum(axis=0)
    else:
        raise BranchingError(f"rule {rule.tag!r} has no static order")
    if score.max() <= 0:
        raise NoFractionalVariable("all extreme preimages are integral on unfixed variables")
    return int(free[int(np.argmax(score))])


def split_value(lbs: LowerBoundSet, k: int) -> float:
    """Value of ``x_k`` in the extreme preimage where it is most fractional."""
    if lbs.is_empty or lbs.num_points == 0:
        return math.nan
    col = lbs.preimages[:, k]
    frac = col - np.floor(col)
    dist = np.minimum(frac, 1.0 - frac)
    return float(col[int(np.argmax(dist))])


def branch(
    subproblem: Subproblem, k: int, split: float, ids: Iterator[int] | None = None
) -> tuple[Subproblem, Subproblem]:
    """Split on ``x_k <= floor(split)`` and ``x_k >= floor(split) + 1``.

    For binary variables this is ``x_k = 0`` / ``x_k = 1`` whatever ``split`` is.
    """
    lo, hi = int(subproblem.fixed_lower[k]), int(subproblem.fixed_upper[k])
    if lo >= hi:
        raise BranchingError(f"variable {k} is already fixed")
    cut = math.floor(split) if math.isfinite(split) else lo
    cut = min(max(cut, lo), hi - 1)
    ids = ids if ids is not None else itertools.count(subproblem.node_id + 1)
    low_upper = subproblem.fixed_upper.copy()
    low_upper[k] = cut
    high_lower = subproblem.fixed_lower.copy()
    high_lower[k] = cut + 1
    common = dict(depth=subproblem.depth + 1, inherited_lbs=None, score=subproblem.score)
    low = replace(
        subproblem, fixed_upper=low_upper, fixed_lower=subproblem.fixed_lower.copy(),
        node_id=next(ids), split=(k, cut), **common,
    )
    high = replace(
        subproblem, fixed_lower=high_lower, fixed_upper=subproblem.fixed_upper.copy(),
        node_id=next(ids), split=(k, cut + 1), **common,
    )
    return low, high
