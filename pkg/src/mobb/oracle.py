"""Ground truth for tests: brute-force Pareto fronts and exact hypervolume."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import MoilpInstance, to_display_sense

MAX_ENUMERATION = 2**25


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ParetoFront:
    """Sorted, mutually nondominated integer images (minimization sense)."""

    points: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def display(self, instance: MoilpInstance) -> list[tuple[int, ...]]:
        return sorted(to_display_sense(y, instance) for y in self.points)


def nondominated(points: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """Unique points not weakly dominated by a different point, sorted."""
    pts = sorted({tuple(int(v) for v in y) for y in points})
    if not pts:
        return []
    Y = np.array(pts)
    keep = []
    for i, y in enumerate(Y):
        le = np.all(Y <= y, axis=1)
        le[i] = False
        if not le.any():
            keep.append(pts[i])
    return keep


def enumerate_feasible(instance: MoilpInstance, chunk: int = 1 << 16):
    """Yield (X, Y) blocks of every feasible integer point and its image."""
    lo, hi = instance.var_lower, instance.var_upper
    sizes = (hi - lo + 1).astype(object)
    total = 1
    for s in sizes:
        total *= int(s)
    if total > MAX_ENUMERATION:
        raise BudgetExceeded(f"{total} points exceed the enumeration budget {MAX_ENUMERATION}")
    ranges = [range(int(a), int(b) + 1) for a, b in zip(lo, hi)]
    it = itertools.product(*ranges)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        X = np.array(block, dtype=np.int64)
        X = X[instance.feasible_mask(X)]
        if X.size:
            yield X, X @ instance.objectives.T


def brute_force_front(instance: MoilpInstance) -> ParetoFront:
    """Exact nondominated set by enumerating every integer point in the bounds."""
    images: list[np.ndarray] = []
    for _, Y in enumerate_feasible(instance):
        images.append(np.unique(Y, axis=0))
    if not images:
        return ParetoFront(())
    return ParetoFront(tuple(nondominated(np.unique(np.vstack(images), axis=0))))


def _hv2(points: np.ndarray, ref: np.ndarray) -> float:
    pts = points[np.lexsort((points[:, 1], points[:, 0]))]
    area = 0.0
    best = ref[1]
    for y1, y2 in pts:
        if y2 < best:
            area += (ref[0] - y1) * (best - y2)
            best = y2
    return float(area)


def hypervolume(points: Iterable[Sequence[float]], reference: Sequence[float]) -> float:
    """Volume of the union of boxes ``[y, reference]`` (minimization), ``p`` in {2, 3}."""
    ref = np.asarray(reference, dtype=float)
    P = np.array([list(y) for y in points], dtype=float).reshape(-1, ref.size)
    if ref.size not in (2, 3):
        raise ValueError("hypervolume is implemented for two or three objectives")
    if P.shape[0] == 0:
        return 0.0
    if np.any(P > ref):
        raise ValueError("every point must be componentwise <= the reference point")
    if ref.size == 2:
        return _hv2(P, ref)
    # slice along the third objective; each slab is a 2-d problem
    levels = np.unique(P[:, 2])
    bounds = np.append(levels, ref[2])
    vol = 0.0
    for z, z_next in zip(bounds[:-1], bounds[1:]):
        active = P[P[:, 2] <= z][:, :2]
        vol += _hv2(active, ref[:2]) * (z_next - z)
    return float(vol)
