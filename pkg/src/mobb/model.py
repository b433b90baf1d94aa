"""Problem representation for multi-objective integer linear programs.

Every instance is stored in one canonical form: all objectives are minimized,
constraints are rows ``A x <= b`` or ``A x = b`` and every variable is integral
with finite bounds. Knapsack profits are negated on the way in; the original
sense is kept so results can be reported the way the user wrote them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

LE = "<="
EQ = "="


class InstanceError(ValueError):
    """Raised when instance data is inconsistent."""


def _as_fraction(value: Any) -> Fraction:
    # floats convert exactly to their binary value
    return Fraction(value)


def _integer_rows(rows, rhs, n):
    scaled = []
    for row, r in zip(rows, rhs):
        den = math.lcm(*(v.denominator for v in row), r.denominator)
        scaled.append([int(v * den) for v in row] + [int(r * den)])
    big = max((abs(v) for row in scaled for v in row), default=0)
    dtype = np.int64 if big < 2**31 else object
    M = np.array(scaled, dtype=dtype).reshape(len(rows), n + 1)
    return M[:, :n], M[:, n]


@dataclass(frozen=True, eq=False)
class MoilpInstance:
    """A minimization MOILP ``min Cx s.t. Ax (<=|=) b, lower <= x <= upper, x integral``.

    ``A`` and ``b`` are given as rationals (ints, Fractions or floats that are
    converted exactly). ``objectives`` must be integral so that images can be
    compared exactly.

    ``branch_weights`` and ``branch_costs`` carry the item weights and the
    original-sense objective coefficients used by the static branching rules.
    """

    objectives: np.ndarray
    constraint_rows: tuple[tuple[Fraction, ...], ...]
    rhs: tuple[Fraction, ...]
    senses: tuple[str, ...]
    var_lower: np.ndarray
    var_upper: np.ndarray
    kind: str = "generic"
    maximize: bool = False
    branch_weights: np.ndarray | None = None
    branch_costs: np.ndarray | None = None
    source: dict | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        C = np.asarray(self.objectives)
        if C.ndim != 2:
            raise InstanceError("objective matrix must be 2-dimensional")
        p, n = C.shape
        if n < 1:
            raise InstanceError("instance needs at least one variable")
        if p < 2:
            raise InstanceError("instance needs at least two objectives")
        if not np.all(np.equal(np.mod(C, 1), 0)):
            raise InstanceError("objective coefficients must be integers")
        C = C.astype(np.int64)
        rows = tuple(tuple(_as_fraction(v) for v in row) for row in self.constraint_rows)
        rhs = tuple(_as_fraction(v) for v in self.rhs)
        if any(len(row) != n for row in rows):
            raise InstanceError(f"every constraint row must have {n} entries")
        if len(rhs) != len(rows) or len(self.senses) != len(rows):
            raise InstanceError("rhs and senses must match the number of constraint rows")
        if any(s not in (LE, EQ) for s in self.senses):
            raise InstanceError(f"constraint senses must be {LE!r} or {EQ!r}")
        lo = np.asarray(self.var_lower, dtype=np.int64)
        hi = np.asarray(self.var_upper, dtype=np.int64)
        if lo.shape != (n,) or hi.shape != (n,):
            raise InstanceError(f"variable bounds must have length {n}")
        if np.any(lo > hi):
            raise InstanceError("var_lower must not exceed var_upper")
        if self.branch_weights is not None:
            w = np.asarray(self.branch_weights, dtype=float)
            if w.shape != (n,) or np.any(w <= 0):
                raise InstanceError("branch weights must be positive, one per variable")
            object.__setattr__(self, "branch_weights", w)
        if self.branch_costs is not None:
            bc = np.asarray(self.branch_costs, dtype=float)
            if bc.shape != (p, n):
                raise InstanceError("branch costs must be p x n")
            object.__setattr__(self, "branch_costs", bc)

        C.setflags(write=False)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "objectives", C)
        object.__setattr__(self, "constraint_rows", rows)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "var_lower", lo)
        object.__setattr__(self, "var_upper", hi)
        A = np.array([[float(v) for v in row] for row in rows], dtype=float).reshape(len(rows), n)
        b = np.array([float(v) for v in rhs], dtype=float)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_b", b)
        A_int, b_int = _integer_rows(rows, rhs, n)
        object.__setattr__(self, "_A_int", A_int)
        object.__setattr__(self, "_b_int", b_int)

    @property
    def num_vars(self) -> int:
        return self.objectives.shape[1]

    @property
    def num_objectives(self) -> int:
        return self.objectives.shape[0]

    @property
    def num_rows(self) -> int:
        return len(self.constraint_rows)

    @property
    def A(self) -> np.ndarray:
        """Constraint matrix as floats (for the LP solver)."""
        return self._A  # type: ignore[attr-defined]

    @property
    def b(self) -> np.ndarray:
        return self._b  # type: ignore[attr-defined]

    @property
    def equality_mask(self) -> np.ndarray:
        return np.array([s == EQ for s in self.senses], dtype=bool)

    def image(self, x: Sequence[int]) -> tuple[int, ...]:
        """Exact objective vector ``Cx`` in minimization sense."""
        xs = np.asarray(x, dtype=np.int64)
        return tuple(int(v) for v in self.objectives @ xs)

    @property
    def integer_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Constraint rows scaled by the lcm of their denominators.

        Row ``i`` of ``A x (<=|=) b`` holds iff it holds for the scaled integer
        row, so feasibility can be decided without rounding.
        """
        return self._A_int, self._b_int  # type: ignore[attr-defined]

    def feasible_mask(self, X: np.ndarray) -> np.ndarray:
        """Exact feasibility of each row of the integer matrix ``X``."""
        X = np.atleast_2d(np.asarray(X))
        ok = np.all((X >= self.var_lower) & (X <= self.var_upper), axis=1)
        if self.num_rows:
            A_int, b_int = self.integer_rows
            lhs = X.astype(A_int.dtype) @ A_int.T
            eq = self.equality_mask
            ok &= np.all(np.where(eq, lhs == b_int, lhs <= b_int), axis=1)
        return ok

    def is_feasible(self, x: Sequence[int]) -> bool:
        """Exact feasibility test (no tolerances)."""
        xs = np.asarray([int(v) for v in x])
        if xs.size != self.num_vars:
            return False
        return bool(self.feasible_mask(xs[None, :])[0])

    def reference_point(self) -> np.ndarray:
        """Integer point strictly above every attainable image (the box corner M)."""
        C = self.objectives
        at_lo = C * self.var_lower[None, :]
        at_hi = C * self.var_upper[None, :]
        return np.maximum(at_lo, at_hi).sum(axis=1) + 1

    def to_display_sense(self, y: Sequence[float]) -> tuple:
        return to_display_sense(y, self)


@dataclass
class Subproblem:
    """A branch-and-bound node: tightened variable bounds plus bookkeeping."""

    instance: MoilpInstance
    fixed_lower: np.ndarray
    fixed_upper: np.ndarray
    depth: int = 0
    node_id: int = 0
    score: float = float("inf")
    inherited_lbs: Any = None
    split: tuple[int, int] | None = None

    @classmethod
    def root(cls, instance: MoilpInstance) -> "Subproblem":
        return cls(
            instance=instance,
            fixed_lower=instance.var_lower.copy(),
            fixed_upper=instance.var_upper.copy(),
        )

    @property
    def is_trivially_infeasible(self) -> bool:
        return bool(np.any(self.fixed_lower > self.fixed_upper))

    @property
    def free_mask(self) -> np.ndarray:
        return self.fixed_lower < self.fixed_upper

    def contains(self, x: Sequence[int]) -> bool:
        xs = np.asarray(x)
        return bool(np.all(xs >= self.fixed_lower) and np.all(xs <= self.fixed_upper))


@dataclass(frozen=True)
class SolutionPoint:
    """An integer feasible solution ``x`` with its exact image ``y = Cx``."""

    x: tuple[int, ...]
    y: tuple[int, ...]
    display_y: tuple[int, ...]

    @classmethod
    def from_x(cls, instance: MoilpInstance, x: Sequence[int]) -> "SolutionPoint":
        xs = tuple(int(v) for v in x)
        y = instance.image(xs)
        return cls(x=xs, y=y, display_y=to_display_sense(y, instance))


def to_display_sense(y: Sequence, instance: MoilpInstance) -> tuple:
    """Map a minimization-sense image back to the instance's original sense."""
    if instance.maximize:
        return tuple(-v + 0 for v in y)
    return tuple(y)


def from_knapsack(
    weights: Sequence[int], capacity: int, profits: Sequence[Sequence[int]]
) -> MoilpInstance:
    """Binary multi-objective knapsack ``max profits x s.t. weights x <= capacity``."""
    w = np.asarray(weights)
    P = np.asarray(profits)
    if w.ndim != 1 or w.size < 1:
        raise InstanceError("weights must be a non-empty vector")
    if P.ndim != 2 or P.shape[1] != w.size:
        raise InstanceError(
            f"profits must be p x {w.size}, got shape {P.shape}"
        )
    if P.shape[0] not in (2, 3):
        raise InstanceError("knapsack instances need 2 or 3 objectives")
    if np.any(w <= 0) or np.any(P <= 0):
        raise InstanceError("weights and profits must be positive")
    if capacity <= 0:
        raise InstanceError("capacity must be positive")
    n = w.size
    source = {
        "type": "knapsack",
        "p": int(P.shape[0]),
        "n": int(n),
        "capacity": int(capacity),
        "weights": [int(v) for v in w],
        "profits": [[int(v) for v in row] for row in P],
    }
    return MoilpInstance(
        objectives=-P,
        constraint_rows=(tuple(int(v) for v in w),),
        rhs=(int(capacity),),
        senses=(LE,),
        var_lower=np.zeros(n, dtype=np.int64),
        var_upper=np.ones(n, dtype=np.int64),
        kind="knapsack",
        maximize=True,
        branch_weights=w.astype(float),
        branch_costs=P.astype(float),
        source=source,
    )


def from_gap(
    costs: Sequence[Sequence[Sequence[int]]],
    resources: Sequence[Sequence[int]],
    capacities: Sequence[int],
) -> MoilpInstance:
    """Multi-objective generalized assignment problem (minimization).

    Variable ``x[i*jobs + j]`` assigns job ``j`` to machine ``i``.
    """
    K = np.asarray(costs)
    R = np.asarray(resources)
    cap = np.asarray(capacities)
    if K.ndim != 3:
        raise InstanceError("costs must be a p x machines x jobs tensor")
    p, m, jobs = K.shape
    if p not in (2, 3):
        raise InstanceError("GAP instances need 2 or 3 objectives")
    if m < 2 or jobs < 2:
        raise InstanceError("GAP instances need at least 2 machines and 2 jobs")
    if R.shape != (m, jobs):
        raise InstanceError(f"resources must be {m} x {jobs}, got shape {R.shape}")
    if cap.shape != (m,):
        raise InstanceError(f"capacities must have length {m}")
    if np.any(cap <= 0):
        raise InstanceError("capacities must be positive")
    if np.any(R <= 0) or np.any(K <= 0):
        raise InstanceError("costs and resources must be positive")
    n = m * jobs
    rows: list[tuple[int, ...]] = []
    rhs: list[int] = []
    senses: list[str] = []
    for j in range(jobs):
        row = [0] * n
        for i in range(m):
            row[i * jobs + j] = 1
        rows.append(tuple(row))
        rhs.append(1)
        senses.append(EQ)
    for i in range(m):
        row = [0] * n
        for j in range(jobs):
            row[i * jobs + j] = int(R[i, j])
        rows.append(tuple(row))
        rhs.append(int(cap[i]))
        senses.append(LE)
    source = {
        "type": "gap",
        "p": int(p),
        "machines": int(m),
        "jobs": int(jobs),
        "capacities": [int(v) for v in cap],
        "resources": [[int(v) for v in row] for row in R],
        "costs": [[[int(v) for v in row] for row in mat] for mat in K],
    }
    C = K.reshape(p, n)
    return MoilpInstance(
        objectives=C,
        constraint_rows=tuple(rows),
        rhs=tuple(rhs),
        senses=tuple(senses),
        var_lower=np.zeros(n, dtype=np.int64),
        var_upper=np.ones(n, dtype=np.int64),
        kind="gap",
        maximize=False,
        branch_weights=R.reshape(n).astype(float),
        branch_costs=C.astype(float),
        source=source,
    )
