"""Dense bounded-variable primal simplex.

Solves ``min c^T x  s.t.  A x (<=|=) b,  lower <= x <= upper``. Infinite upper
bounds are allowed; infinite lower bounds are handled by substitution before
the kernel runs. Optimal results are basic feasible solutions, which the
branching rules rely on.

The pivoting kernel is compiled with numba. Problems here are small and
dense, so a full tableau is kept.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-10
_COST_TOL = 1e-9

# kernel status codes
_OPTIMAL, _INFEASIBLE, _UNBOUNDED, _ITERLIMIT = 0, 1, 2, 3


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class NumericalError(RuntimeError):
    """The simplex could not reach a trustworthy answer."""


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    equality: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.equality = np.asarray(self.equality, dtype=bool).reshape(m)
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(self.lower > self.upper):
            raise ValueError("lower bounds must not exceed upper bounds")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    objective_value: float = float("nan")
    duals: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@njit(cache=True)
def _pivot(T, r, q):
    m, N = T.shape
    piv = T[r, q]
    for j in range(N):
        T[r, j] /= piv
    for i in range(m):
        if i != r:
            f = T[i, q]
            if f != 0.0:
                for j in range(N):
                    T[i, j] -= f * T[r, j]


@njit(cache=True)
def _run_phase(T, beta, basis, at_upper, cost, upper, max_iter, stall_limit, iters):
    """Primal simplex iterations on a tableau. Returns (status, iterations)."""
    m, N = T.shape
    is_basic = np.zeros(N, dtype=np.bool_)
    for i in range(m):
        is_basic[basis[i]] = True
    d = np.empty(N)
    stall = 0
    best_obj = np.inf
    while True:
        if iters >= max_iter:
            return _ITERLIMIT, iters
        # reduced costs
        for j in range(N):
            d[j] = cost[j]
        for i in range(m):
            cb = cost[basis[i]]
            if cb != 0.0:
                for j in range(N):
                    d[j] -= cb * T[i, j]
        # objective for stall detection
        obj = 0.0
        for i in range(m):
            obj += cost[basis[i]] * beta[i]
        for j in range(N):
            if not is_basic[j] and at_upper[j]:
                obj += cost[j] * upper[j]
        if obj < best_obj - 1e-12 * (1.0 + abs(obj)):
            best_obj = obj
            stall = 0
        else:
            stall += 1
        bland = stall > stall_limit

        q = -1
        best = 0.0
        for j in range(N):
            if is_basic[j]:
                continue
            if upper[j] <= 0.0:
                continue
            score = d[j] if at_upper[j] else -d[j]
            if score > _COST_TOL:
                if bland:
                    q = j
                    break
                if score > best:
                    best = score
                    q = j
        if q == -1:
            return _OPTIMAL, iters
        direction = -1.0 if at_upper[q] else 1.0

        theta = upper[q]  # bound flip distance (may be inf)
        r = -1
        r_to_upper = False
        best_piv = 0.0
        for i in range(m):
            delta = -direction * T[i, q]
            bi = basis[i]
            if delta < -PIVOT_TOL:
                ratio = beta[i] / (-delta)
                to_up = False
            elif delta > PIVOT_TOL and upper[bi] < np.inf:
                ratio = (upper[bi] - beta[i]) / delta
                to_up = True
            else:
                continue
            if ratio < 0.0:
                ratio = 0.0
            take = False
            if ratio < theta - 1e-12:
                take = True
            elif ratio <= theta + 1e-12 and r >= 0:
                # tie: Bland picks the smallest index, otherwise the largest pivot
                if bland:
                    take = bi < basis[r]
                else:
                    take = abs(delta) > best_piv
            if take:
                theta = ratio
                r = i
                r_to_upper = to_up
                best_piv = abs(delta)
        if theta == np.inf:
            return _UNBOUNDED, iters
        for i in range(m):
            beta[i] -= direction * theta * T[i, q]
        if r == -1:
            at_upper[q] = not at_upper[q]
        else:
            leaving = basis[r]
            start = upper[q] if at_upper[q] else 0.0
            _pivot(T, r, q)
            beta[r] = start + direction * theta
            basis[r] = q
            is_basic[leaving] = False
            is_basic[q] = True
            at_upper[leaving] = r_to_upper
            at_upper[q] = False
        iters += 1


@njit(cache=True)
def _solve_kernel(A, b, eq, c, upper, max_iter):
    """Two-phase bounded simplex on ``A x (<=|=) b, 0 <= x <= upper``.

    Returns (status, x, duals, iterations).
    """
    m, n = A.shape
    n_slack = 0
    for i in range(m):
        if not eq[i]:
            n_slack += 1
    sign = np.ones(m)
    need_art = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        if b[i] < 0.0:
            sign[i] = -1.0
        if eq[i] or b[i] < 0.0:
            need_art[i] = True
    n_art = 0
    for i in range(m):
        if need_art[i]:
            n_art += 1
    N = n + n_slack + n_art
    T = np.zeros((m, N))
    ub = np.empty(N)
    for j in range(n):
        ub[j] = upper[j]
    for j in range(n, N):
        ub[j] = np.inf
    basis = np.empty(m, dtype=np.int64)
    init_cols = np.empty(m, dtype=np.int64)
    s = n
    a = n + n_slack
    for i in range(m):
        for j in range(n):
            T[i, j] = sign[i] * A[i, j]
        if not eq[i]:
            T[i, s] = sign[i]
            if not need_art[i]:
                basis[i] = s
                init_cols[i] = s
            s += 1
        if need_art[i]:
            T[i, a] = 1.0
            basis[i] = a
            init_cols[i] = a
            a += 1
    beta = sign * b
    at_upper = np.zeros(N, dtype=np.bool_)
    stall_limit = 2 * (n + m)
    iters = 0

    if n_art > 0:
        cost1 = np.zeros(N)
        for j in range(n + n_slack, N):
            cost1[j] = 1.0
        status, iters = _run_phase(T, beta, basis, at_upper, cost1, ub, max_iter, stall_limit, iters)
        if status != _OPTIMAL:
            return _ITERLIMIT, np.zeros(n), np.zeros(m), iters
        infeas = 0.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                infeas += beta[i]
        scale = 1.0
        for i in range(m):
            scale = max(scale, abs(b[i]))
        if infeas > FEAS_TOL * scale:
            return _INFEASIBLE, np.zeros(n), np.zeros(m), iters
        for j in range(n + n_slack, N):
            ub[j] = 0.0
            at_upper[j] = False

    cost2 = np.zeros(N)
    for j in range(n):
        cost2[j] = c[j]
    status, iters = _run_phase(T, beta, basis, at_upper, cost2, ub, max_iter, stall_limit, iters)
    if status != _OPTIMAL:
        return status, np.zeros(n), np.zeros(m), iters

    # recompute basic values from B^-1 to shed accumulated drift
    xfull = np.zeros(N)
    for j in range(N):
        if at_upper[j]:
            xfull[j] = ub[j]
    for i in range(m):
        xfull[basis[i]] = 0.0
    # only structurals can sit at a nonzero upper bound
    rhs = np.empty(m)
    for i in range(m):
        acc = sign[i] * b[i]
        for j in range(n):
            if xfull[j] != 0.0:
                acc -= sign[i] * A[i, j] * xfull[j]
        rhs[i] = acc
    for i in range(m):
        v = 0.0
        for k in range(m):
            v += T[i, init_cols[k]] * rhs[k]
        xfull[basis[i]] = v
    duals = np.zeros(m)
    for k in range(m):
        v = 0.0
        for i in range(m):
            v += cost2[basis[i]] * T[i, init_cols[k]]
        duals[k] = sign[k] * v
    return _OPTIMAL, xfull[:n].copy(), duals, iters


def solve_standard(
    A: np.ndarray, b: np.ndarray, equality: np.ndarray, c: np.ndarray, upper: np.ndarray
) -> tuple[LpStatus, np.ndarray | None, np.ndarray | None]:
    """Lean entry for ``min cx, Ax (<=|=) b, 0 <= x <= upper`` with contiguous float arrays.

    Used in hot loops where the general wrapper's substitutions are not needed.
    Returns (status, x, duals).
    """
    m, n = A.shape
    if m == 0:
        x = np.where(c < 0, upper, 0.0)
        if np.any(np.isinf(x)):
            return LpStatus.UNBOUNDED, None, None
        return LpStatus.OPTIMAL, x, np.zeros(0)
    max_iter = 50 * (n + m) + 100
    status, x, duals, _ = _solve_kernel(A, b, equality, c, upper, max_iter)
    if status == _OPTIMAL:
        return LpStatus.OPTIMAL, np.minimum(np.maximum(x, 0.0), upper), duals
    if status == _INFEASIBLE:
        return LpStatus.INFEASIBLE, None, None
    if status == _UNBOUNDED:
        return LpStatus.UNBOUNDED, None, None
    raise NumericalError(f"simplex hit the iteration limit ({max_iter})")


def solve_lp(problem: LpProblem, max_iter: int | None = None) -> LpResult:
    """Solve an LP to a basic optimal solution.

    Raises:
        NumericalError: if the iteration budget runs out or the reported
            optimum fails the feasibility check.
    """
    c, A, b = problem.c, problem.A, problem.b
    lo, hi = problem.lower, problem.upper
    n = c.size
    # substitutions so every kernel variable lives in [0, ub]
    flip = np.isneginf(lo) & np.isfinite(hi)
    free = np.isneginf(lo) & ~np.isfinite(hi)
    shift = np.where(flip, hi, np.where(free, 0.0, lo))
    col_sign = np.where(flip, -1.0, 1.0)
    ub = np.where(flip | free, np.inf, hi - lo)
    Ak = A * col_sign
    ck = c * col_sign
    if free.any():
        Ak = np.hstack([Ak, -A[:, free]])
        ck = np.concatenate([ck, -c[free]])
        ub = np.concatenate([ub, np.full(int(free.sum()), np.inf)])
    bk = b - A @ shift if A.size else b.copy()
    m = A.shape[0]
    if max_iter is None:
        max_iter = 50 * (Ak.shape[1] + m) + 100

    if m == 0:
        # separable: each variable sits at the cheaper bound
        xk = np.where(ck < 0, ub, 0.0)
        if np.any(np.isinf(xk)):
            return LpResult(LpStatus.UNBOUNDED)
        status, duals, iters = _OPTIMAL, np.zeros(0), 0
    else:
        status, xk, duals, iters = _solve_kernel(
            np.ascontiguousarray(Ak), np.ascontiguousarray(bk),
            problem.equality, np.ascontiguousarray(ck), np.ascontiguousarray(ub), max_iter,
        )
    if status == _INFEASIBLE:
        return LpResult(LpStatus.INFEASIBLE, iterations=iters)
    if status == _UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, iterations=iters)
    if status == _ITERLIMIT:
        raise NumericalError(f"simplex hit the iteration limit ({max_iter})")

    x = shift + col_sign * xk[:n]
    if free.any():
        x[free] -= xk[n:]
    x = np.clip(x, lo, hi)
    if m:
        act = A @ x
        scale = 1.0 + np.abs(b)
        viol = np.where(problem.equality, np.abs(act - b), act - b) / scale
        if np.any(viol > 1e3 * FEAS_TOL):
            raise NumericalError(f"simplex returned an infeasible point (violation {viol.max():.3g})")
    return LpResult(LpStatus.OPTIMAL, x=x, objective_value=float(c @ x), duals=duals, iterations=iters)


class Relaxation:
    """LP relaxation of a subproblem, with fixed variables substituted out.

    Free variables are shifted to ``[0, upper - lower]``. Rows that no longer
    touch a free variable are decided exactly on construction; if one fails,
    ``infeasible`` is set and no LP is ever solved.
    """

    def __init__(self, instance, subproblem):
        lo = np.asarray(subproblem.fixed_lower, dtype=np.int64)
        hi = np.asarray(subproblem.fixed_upper, dtype=np.int64)
        self.instance = instance
        self.p = instance.num_objectives
        self.infeasible = bool(np.any(lo > hi))
        free = lo < hi
        self.free = np.flatnonzero(free)
        self.base = lo.astype(float)
        C = instance.objectives.astype(float)
        self.y0 = C @ self.base
        self.C_f = np.ascontiguousarray(C[:, free])
        self.ub = np.ascontiguousarray((hi - lo)[free].astype(float))
        m = instance.num_rows
        if m and not self.infeasible:
            A_f = instance.A[:, free]
            touched = np.any(A_f != 0, axis=1)
            if not touched.all():
                A_int, b_int = instance.integer_rows
                lhs = A_int[~touched] @ lo.astype(A_int.dtype)
                eq = instance.equality_mask[~touched]
                rhs = b_int[~touched]
                if not np.all(np.where(eq, lhs == rhs, lhs <= rhs)):
                    self.infeasible = True
            self.A = np.ascontiguousarray(A_f[touched])
            self.b = np.ascontiguousarray((instance.b - instance.A @ self.base)[touched])
            self.eq = np.ascontiguousarray(instance.equality_mask[touched])
        else:
            self.A = np.zeros((0, self.free.size))
            self.b = np.zeros(0)
            self.eq = np.zeros(0, dtype=bool)
        self._p2 = None

    @property
    def num_free(self) -> int:
        return int(self.free.size)

    def full_x(self, x_free: np.ndarray) -> np.ndarray:
        x = self.base.copy()
        x[self.free] += x_free
        return x

    def weighted_sum(self, weights: np.ndarray):
        """Minimize ``weights . Cx``. Returns (status, value, y, x_full)."""
        w = np.asarray(weights, dtype=float)
        if self.infeasible:
            return LpStatus.INFEASIBLE, np.inf, None, None
        c = np.ascontiguousarray(w @ self.C_f)
        status, xf, _ = solve_standard(self.A, self.b, self.eq, c, self.ub)
        if status is not LpStatus.OPTIMAL:
            return status, np.inf, None, None
        y = self.y0 + self.C_f @ xf
        return status, float(w @ y), y, self.full_x(xf)

    def lexmin(self, order: tuple[int, ...]):
        """Lexicographic minimum of the objectives in ``order``. Returns (status, y, x_full)."""
        A, b, eq = self.A, self.b, self.eq
        xf = None
        for k in order:
            status, xf, _ = solve_standard(A, b, eq, np.ascontiguousarray(self.C_f[k]), self.ub)
            if status is not LpStatus.OPTIMAL:
                return status, None, None
            val = float(self.C_f[k] @ xf)
            A = np.ascontiguousarray(np.vstack([A, self.C_f[k]]))
            b = np.append(b, val)
            eq = np.append(eq, False)
        y = self.y0 + self.C_f @ xf
        return LpStatus.OPTIMAL, y, self.full_x(xf)

    def pascoletti_serafini(self, v: np.ndarray, ideal: np.ndarray):
        """Solve ``min t s.t. x feasible, Cx <= v + t*1``.

        Returns (t, weights) where ``weights`` are the nonnegative multipliers
        of the objective rows, normalized to sum 1: the normal of a supporting
        hyperplane of the upper image at ``v + t*1``.
        """
        if self._p2 is None:
            m, nf, p = self.A.shape[0], self.free.size, self.p
            A2 = np.zeros((m + p, nf + 1))
            A2[:m, :nf] = self.A
            A2[m:, :nf] = self.C_f
            A2[m:, nf] = -1.0
            c2 = np.zeros(nf + 1)
            c2[nf] = 1.0
            ub2 = np.append(self.ub, np.inf)
            eq2 = np.append(self.eq, np.zeros(p, dtype=bool))
            self._p2 = (A2, c2, ub2, eq2)
        A2, c2, ub2, eq2 = self._p2
        # t = t_lb + t'; t_lb sits strictly below every feasible t
        t_lb = float(np.max(ideal - v)) - 1.0
        b2 = np.concatenate([self.b, v - self.y0 + t_lb])
        status, sol, duals = solve_standard(A2, b2, eq2, c2, ub2)
        if status is not LpStatus.OPTIMAL:
            raise NumericalError(f"cut LP returned {status.value} on a feasible relaxation")
        t = t_lb + float(sol[-1])
        w = np.maximum(-duals[-self.p:], 0.0)
        total = w.sum()
        if total <= 0:
            raise NumericalError("cut LP produced a zero weight vector")
        return t, w / total


def relaxation_problem(instance, subproblem, objective: np.ndarray) -> LpProblem:
    """Full-size LP ``min objective.x`` over the subproblem's relaxation."""
    return LpProblem(
        c=objective,
        A=instance.A,
        b=instance.b,
        equality=instance.equality_mask,
        lower=subproblem.fixed_lower.astype(float),
        upper=subproblem.fixed_upper.astype(float),
    )


def solve_weighted_sum(instance, subproblem, weights) -> LpResult:
    """Minimize ``weights . Cx`` over the subproblem's LP relaxation."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (instance.num_objectives,) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per objective")
    if np.any(subproblem.fixed_lower > subproblem.fixed_upper):
        return LpResult(LpStatus.INFEASIBLE)
    return solve_lp(relaxation_problem(instance, subproblem, w @ instance.objectives))
