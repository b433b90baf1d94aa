"""Lower bound sets from the LP relaxation of a node.

The bound set of a node is the upper image ``U = C X_LP + R^p_+`` of its LP
relaxation, stored twice: as the list of its nondominated extreme points (with
a basic preimage each) and as a list of valid inequalities ``lam . y >= d``
with ``lam >= 0``, ``sum(lam) = 1``. The inequality list is a complete
description of ``U``, which makes dominance tests exact.

Two algorithms compute it: dichotomic search (two objectives) and an outer
approximation that cuts down a polyhedron containing ``U`` until every vertex
lies on ``U`` (two or three objectives).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import MoilpInstance, SolutionPoint, Subproblem
from .simplex import INT_TOL, LpStatus, Relaxation

DEDUP_TOL = 1e-6
ON_IMAGE_TOL = 1e-6


class IterationLimit(RuntimeError):
    """Outer approximation exceeded its cut budget."""


@dataclass
class LowerBoundSet:
    points: np.ndarray
    preimages: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    ideal_point: np.ndarray
    is_empty: bool = False

    @classmethod
    def empty(cls, p: int, n: int) -> "LowerBoundSet":
        return cls(
            points=np.zeros((0, p)),
            preimages=np.zeros((0, n)),
            normals=np.zeros((0, p)),
            offsets=np.zeros(0),
            ideal_point=np.full(p, np.inf),
            is_empty=True,
        )

    @classmethod
    def single(cls, y: np.ndarray, x: np.ndarray) -> "LowerBoundSet":
        y = np.asarray(y, dtype=float)
        p = y.size
        return cls(
            points=y[None, :].copy(),
            preimages=np.asarray(x, dtype=float)[None, :].copy(),
            normals=np.eye(p),
            offsets=y.copy(),
            ideal_point=y.copy(),
        )

    @property
    def extreme_points(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.points, self.preimages))

    @property
    def facets(self) -> list[tuple[np.ndarray, float]]:
        return [(lam, float(d)) for lam, d in zip(self.normals, self.offsets)]

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    def slack(self, Y: np.ndarray) -> np.ndarray:
        """``lam_j . y - d_j`` for every row ``y`` of ``Y`` and facet ``j``."""
        return np.atleast_2d(Y) @ self.normals.T - self.offsets


def _fixed_point(rel: Relaxation, p: int, n: int) -> LowerBoundSet:
    if rel.infeasible:
        return LowerBoundSet.empty(p, n)
    return LowerBoundSet.single(rel.y0, rel.base)


def _lower_hull_2d(points: list[tuple[np.ndarray, np.ndarray]]):
    """Keep the strictly convex nondominated chain, sorted by the first objective."""
    pts = sorted(points, key=lambda t: (t[0][0], t[0][1]))
    chain: list[tuple[np.ndarray, np.ndarray]] = []
    for y, x in pts:
        if chain and np.all(np.abs(chain[-1][0] - y) <= DEDUP_TOL):
            continue
        if chain and y[1] >= chain[-1][0][1] - DEDUP_TOL:
            continue  # weakly dominated by its left neighbour
        while len(chain) >= 2:
            a, b = chain[-2][0], chain[-1][0]
            cross = (b[0] - a[0]) * (y[1] - a[1]) - (b[1] - a[1]) * (y[0] - a[0])
            scale = 1.0 + np.abs(a).max() + np.abs(y).max()
            if cross <= 1e-9 * scale * scale:
                chain.pop()  # b is not a strict vertex
            else:
                break
        chain.append((y, x))
    return chain


def dichotomic_search(
    instance: MoilpInstance, subproblem: Subproblem, relaxation: Relaxation | None = None
) -> LowerBoundSet:
    """Bound set of a bi-objective node by recursive weighted-sum scalarization."""
    p, n = instance.num_objectives, instance.num_vars
    if p != 2:
        raise ValueError("dichotomic search needs exactly two objectives")
    rel = relaxation or Relaxation(instance, subproblem)
    if rel.infeasible or rel.num_free == 0:
        return _fixed_point(rel, p, n)

    status, ya, xa = rel.lexmin((0, 1))
    if status is LpStatus.INFEASIBLE:
        return LowerBoundSet.empty(p, n)
    _, yb, xb = rel.lexmin((1, 0))
    found = [(ya, xa), (yb, xb)]
    if np.all(np.abs(ya - yb) <= DEDUP_TOL):
        found = [(ya, xa)]
    else:
        stack = [(ya, yb)]
        while stack:
            a, b = stack.pop()
            lam = np.array([a[1] - b[1], b[0] - a[0]])
            lam /= lam.sum()
            target = float(lam @ a)
            _, value, y, x = rel.weighted_sum(lam)
            if value < target - 1e-9 * (1.0 + abs(target)):
                found.append((y, x))
                stack.append((a, y))
                stack.append((y, b))

    chain = _lower_hull_2d(found)
    pts = np.array([y for y, _ in chain])
    normals = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    offsets = [pts[0, 0], pts[-1, 1]]
    for (a, _), (b, _) in zip(chain, chain[1:]):
        lam = np.array([a[1] - b[1], b[0] - a[0]])
        lam /= lam.sum()
        normals.append(lam)
        offsets.append(float(lam @ a))
    return LowerBoundSet(
        points=pts,
        preimages=np.array([x for _, x in chain]),
        normals=np.array(normals),
        offsets=np.array(offsets),
        ideal_point=pts.min(axis=0),
    )


@njit(cache=True)
def _spans(N: np.ndarray, rows: np.ndarray, p: int) -> bool:
    # rows active along a common segment or ray are orthogonal to its
    # direction, so their rank is at most p - 1; test for exactly p - 1
    idx = np.flatnonzero(rows)
    if idx.size < p - 1:
        return False
    if p == 2:
        return True
    for a in range(idx.size):
        u = N[idx[a]]
        for b in range(a + 1, idx.size):
            v = N[idx[b]]
            c0 = u[1] * v[2] - u[2] * v[1]
            c1 = u[2] * v[0] - u[0] * v[2]
            c2 = u[0] * v[1] - u[1] * v[0]
            if abs(c0) > 1e-9 or abs(c1) > 1e-9 or abs(c2) > 1e-9:
                return True
    return False


@njit(cache=True)
def _cut_kernel(V, act, N, lam, s, tol):
    """Vertices of the polyhedron after adding ``lam . y >= d`` (``s = V lam - d``).

    Returns the new vertex array and a mask of which rows are carried over.
    """
    k, p = V.shape
    F = N.shape[0]
    out = np.empty((k + k * k + k * p, p))
    carried = np.zeros(k + k * k + k * p, dtype=np.bool_)
    m = 0
    for i in range(k):
        if s[i] >= -tol:
            out[m] = V[i]
            carried[m] = True
            m += 1
    kept = m
    common = np.empty(F, dtype=np.bool_)
    for b in range(k):
        if s[b] >= -tol:
            continue
        for a in range(k):
            if s[a] <= tol:
                continue
            for f in range(F):
                common[f] = act[a, f] and act[b, f]
            if _spans(N, common, p):
                t = s[a] / (s[a] - s[b])
                out[m] = V[a] + t * (V[b] - V[a])
                m += 1
        for j in range(p):
            if lam[j] <= 1e-12:
                continue
            for f in range(F):
                common[f] = act[b, f] and abs(N[f, j]) <= 1e-12
            if _spans(N, common, p):
                out[m] = V[b]
                out[m, j] += -s[b] / lam[j]
                m += 1
    # drop new points that duplicate an earlier row
    keep = np.ones(m, dtype=np.bool_)
    for i in range(kept, m):
        for q in range(i):
            if not keep[q]:
                continue
            scale = 0.0
            for j in range(p):
                scale = max(scale, abs(out[q, j]))
            same = True
            for j in range(p):
                if abs(out[i, j] - out[q, j]) > 1e-9 * (1.0 + scale):
                    same = False
                    break
            if same:
                keep[i] = False
                break
    return out[:m][keep], carried[:m][keep]


class _OuterPolyhedron:
    """``{y : N y >= d}`` with recession cone ``R^p_+``, tracked by its vertices.

    Cuts are added one at a time; the vertex list is updated by intersecting
    the new hyperplane with every edge (bounded or unbounded) that crosses it.
    """

    def __init__(self, ideal: np.ndarray):
        p = ideal.size
        self.p = p
        self.normals = np.eye(p)
        self.offsets = ideal.astype(float).copy()
        self.vertices = ideal[None, :].astype(float).copy()
        self.verified = [False]

    def active(self, V: np.ndarray) -> np.ndarray:
        s = V @ self.normals.T - self.offsets
        return np.abs(s) <= 1e-9 * (1.0 + np.abs(self.offsets))

    def add_cut(self, lam: np.ndarray, d: float) -> None:
        V = self.vertices
        s = V @ lam - d
        tol = 1e-9 * (1.0 + abs(d))
        verts, carried = _cut_kernel(V, self.active(V), self.normals, lam, s, tol)
        old = [self.verified[i] for i in np.flatnonzero(s >= -tol)]
        self.verified = old + [False] * int((~carried).sum())
        self.vertices = verts
        self.normals = np.vstack([self.normals, lam])
        self.offsets = np.append(self.offsets, d)

    def next_unverified(self) -> int | None:
        for i, ok in enumerate(self.verified):
            if not ok:
                return i
        return None


def outer_approximation(
    instance: MoilpInstance, subproblem: Subproblem, relaxation: Relaxation | None = None
) -> LowerBoundSet:
    """Bound set by outer approximation of the upper image (``p`` in {2, 3}).

    Starts from ``{y >= ideal}``. Each unverified vertex ``v`` is tested with
    ``min t s.t. Cx <= v + t*1``; if ``t > 0`` the multipliers of that LP give
    a normal ``w``, and the weighted-sum value ``min w.Cx`` gives a valid cut
    that removes ``v``.

    Raises:
        IterationLimit: more than ``10 * 2**p * n`` cuts were needed.
    """
    p, n = instance.num_objectives, instance.num_vars
    if p not in (2, 3):
        raise ValueError("outer approximation supports two or three objectives")
    rel = relaxation or Relaxation(instance, subproblem)
    if rel.infeasible or rel.num_free == 0:
        return _fixed_point(rel, p, n)

    seen: list[tuple[np.ndarray, np.ndarray]] = []
    ideal = np.empty(p)
    for k in range(p):
        status, value, y, x = rel.weighted_sum(np.eye(p)[k])
        if status is LpStatus.INFEASIBLE:
            return LowerBoundSet.empty(p, n)
        ideal[k] = value
        seen.append((y, x))

    poly = _OuterPolyhedron(ideal)
    budget = 10 * 2**p * n
    cuts = 0
    while (i := poly.next_unverified()) is not None:
        v = poly.vertices[i]
        t, w = rel.pascoletti_serafini(v, ideal)
        if t <= ON_IMAGE_TOL:
            poly.verified[i] = True
            continue
        w = np.where(w < 1e-9, 0.0, w)
        w /= w.sum()
        _, d, y, x = rel.weighted_sum(w)
        seen.append((y, x))
        if w @ v >= d - 1e-9 * (1.0 + abs(d)):
            # numerically on the image already; keeping it only loosens the bound
            poly.verified[i] = True
            continue
        cuts += 1
        if cuts > budget:
            raise IterationLimit(f"outer approximation needed more than {budget} cuts")
        poly.add_cut(w, d)

    V = poly.vertices
    act = poly.active(V)
    used = act.any(axis=0)
    normals, offsets = poly.normals[used], poly.offsets[used]
    act = act[:, used]

    order = np.lexsort(V.T[::-1])
    pts: list[np.ndarray] = []
    pre: list[np.ndarray] = []
    seen_y = np.array([y for y, _ in seen])
    for i in order:
        v = V[i]
        if any(np.all(np.abs(v - q) <= DEDUP_TOL) for q in pts):
            continue
        hit = np.flatnonzero(np.all(np.abs(seen_y - v) <= DEDUP_TOL, axis=1))
        if hit.size:
            x = seen[hit[0]][1]
        else:
            # a weight inside the vertex's normal cone has v as unique minimizer
            lam = normals[act[i]].sum(axis=0)
            lam /= lam.sum()
            _, _, y, x = rel.weighted_sum(lam)
        pts.append(v)
        pre.append(x)
    P = np.array(pts)
    return LowerBoundSet(
        points=P,
        preimages=np.array(pre),
        normals=normals,
        offsets=offsets,
        ideal_point=P.min(axis=0),
    )


def compute_lower_bound_set(instance: MoilpInstance, subproblem: Subproblem) -> LowerBoundSet:
    """Dichotomic search for two objectives, outer approximation otherwise."""
    rel = Relaxation(instance, subproblem)
    if instance.num_objectives == 2:
        return dichotomic_search(instance, subproblem, rel)
    return outer_approximation(instance, subproblem, rel)


def integer_feasible_extremes(lbs: LowerBoundSet, instance: MoilpInstance) -> list[SolutionPoint]:
    """Extreme points whose preimage is integral and exactly feasible."""
    if lbs.is_empty or lbs.num_points == 0:
        return []
    X = lbs.preimages
    R = np.rint(X)
    integral = np.all(np.abs(X - R) <= INT_TOL, axis=1)
    if not integral.any():
        return []
    cand = R[integral].astype(np.int64)
    ok = instance.feasible_mask(cand)
    out: list[SolutionPoint] = []
    seen: set[tuple[int, ...]] = set()
    for x in cand[ok]:
        key = tuple(int(v) for v in x)
        if key in seen:
            continue
        seen.add(key)
        out.append(SolutionPoint.from_x(instance, key))
    return out
