"""Gap measures between a node's lower bound set and the incumbents.

Each measure scores a node; best-first selection pops the largest score.
All measures are taken over the *relevant* local upper bounds only, those
whose box still reaches the bound set. With no incumbents every score is
``+inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dominance import IncumbentList, LocalUpperBoundSet, relevant_upper_bounds
from .lbs import LowerBoundSet


@dataclass(frozen=True)
class GapScore:
    value: float
    strategy: str


def _ray_lengths(lbs: LowerBoundSet, U: np.ndarray) -> np.ndarray:
    """Distance from each ``u`` along ``-e_i`` to the boundary of the bound set.

    Rays that never meet a facet are clamped at the ideal point.
    """
    slack = U @ lbs.normals.T - lbs.offsets  # (k, F)
    slack = np.maximum(slack, 0.0)
    p = U.shape[1]
    t = np.empty_like(U)
    for i in range(p):
        lam = lbs.normals[:, i]
        hits = lam > 1e-12
        if hits.any():
            t[:, i] = np.min(slack[:, hits] / lam[hits], axis=1)
        else:
            t[:, i] = np.inf
    return np.minimum(t, np.maximum(U - lbs.ideal_point, 0.0))


def local_gap_terms(lbs: LowerBoundSet, lubs: LocalUpperBoundSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per relevant local upper bound: (bounds, simplex volumes, box volumes)."""
    U = lubs.bounds[relevant_upper_bounds(lbs, lubs)]
    if U.shape[0] == 0:
        return U, np.zeros(0), np.zeros(0)
    p = U.shape[1]
    simplex = np.prod(_ray_lengths(lbs, U), axis=1) / math.factorial(p)
    box = np.prod(np.maximum(U - lbs.ideal_point, 0.0), axis=1)
    return U, simplex, box


def score_hvg(lbs: LowerBoundSet, lubs: LocalUpperBoundSet) -> GapScore:
    """Largest simplex cut from a local upper bound's cone by the bound set."""
    if lubs.is_initial:
        return GapScore(math.inf, "hvg")
    _, simplex, _ = local_gap_terms(lbs, lubs)
    return GapScore(float(simplex.max()) if simplex.size else 0.0, "hvg")


def score_hvb(lbs: LowerBoundSet, lubs: LocalUpperBoundSet) -> GapScore:
    """Largest box between a local upper bound and the bound set's ideal point."""
    if lubs.is_initial:
        return GapScore(math.inf, "hvb")
    U = lubs.bounds[relevant_upper_bounds(lbs, lubs)]
    if U.shape[0] == 0:
        return GapScore(0.0, "hvb")
    box = np.prod(np.maximum(U - lbs.ideal_point, 0.0), axis=1)
    return GapScore(float(box.max()), "hvb")


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Euclidean Hausdorff distance between two finite point sets."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def score_hd(lbs: LowerBoundSet, incumbents: IncumbentList) -> GapScore:
    """Hausdorff distance between extreme points and incumbent images."""
    if len(incumbents) == 0:
        return GapScore(math.inf, "hd")
    return GapScore(hausdorff(lbs.points, incumbents.images()), "hd")


def score_woe(lbs: LowerBoundSet, lubs: LocalUpperBoundSet) -> GapScore:
    """Width of enclosure: largest shift ``s`` with ``u - s*1`` still in the bound set.

    ``max s s.t. y <= u - s*1, lam . y >= d`` is solved in closed form:
    normals are nonnegative and sum to one, so ``y = u - s*1`` is optimal and
    ``s = min_j (lam_j . u - d_j)``.
    """
    if lubs.is_initial:
        return GapScore(math.inf, "woe")
    U = lubs.bounds[relevant_upper_bounds(lbs, lubs)]
    if U.shape[0] == 0:
        return GapScore(0.0, "woe")
    s = np.min(U @ lbs.normals.T - lbs.offsets, axis=1)
    return GapScore(float(np.maximum(s, 0.0).max()), "woe")


SCORERS = {
    "hvg": lambda lbs, inc, lubs: score_hvg(lbs, lubs),
    "hvb": lambda lbs, inc, lubs: score_hvb(lbs, lubs),
    "hd": lambda lbs, inc, lubs: score_hd(lbs, inc),
    "woe": lambda lbs, inc, lubs: score_woe(lbs, lubs),
}
