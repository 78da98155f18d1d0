"""Optimization kernels: linear programs, smooth convex programs, bisection.

Three solvers with explicit tolerance contracts sit behind small container
types so the block subproblems never talk to a backend directly:

* :func:`solve_lp` solves a :class:`LinearProgram` (the scheduling block and
  any fully linearized subproblem).  It is backed by the HiGHS solver that
  ships with scipy; an independent vertex-enumeration oracle in the test
  suite cross-checks it on small instances.
* :func:`solve_convex` solves a smooth inequality-constrained
  :class:`ConvexProgram` (the power and trajectory blocks) with a log-barrier
  Newton method written here: damped Newton centering steps on
  ``t*f0(x) - sum(log(-f_i(x)))`` along an increasing ``t`` schedule, plus a
  phase-I pass that turns a merely feasible start into a strictly interior
  one (iterates of successive convexification legitimately sit on constraint
  boundaries).
* :func:`bisect` is a guarded scalar bisection used for closed-form power
  thresholds and hover-point roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.linalg import splu

__all__ = [
    "LinearProgram",
    "ConvexProgram",
    "SolveResult",
    "AffineBlock",
    "SmoothBlock",
    "LinearObjective",
    "solve_lp",
    "solve_convex",
    "bisect",
]


@dataclass
class LinearProgram:
    """``max c @ x`` (or min) subject to ``a_ub @ x <= b_ub``,
    ``a_eq @ x == b_eq`` and per-variable box bounds.

    ``bounds`` is a list of ``(lo, hi)`` pairs with ``None`` for unbounded
    ends; ``bounds=None`` leaves every variable free.
    """

    c: np.ndarray
    a_ub: object | None = None
    b_ub: np.ndarray | None = None
    a_eq: object | None = None
    b_eq: np.ndarray | None = None
    bounds: list | None = None
    maximize: bool = True

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective coefficients must be finite")
        n = self.c.size
        for name in ("a_ub", "a_eq"):
            mat = getattr(self, name)
            if mat is None:
                continue
            if not sp.issparse(mat):
                mat = np.asarray(mat, dtype=float)
                if not np.all(np.isfinite(mat)):
                    raise ValueError(f"{name} contains non-finite entries")
                setattr(self, name, mat)
            else:
                if not np.all(np.isfinite(mat.data)):
                    raise ValueError(f"{name} contains non-finite entries")
            rhs_name = "b_ub" if name == "a_ub" else "b_eq"
            rhs = np.asarray(getattr(self, rhs_name), dtype=float)
            setattr(self, rhs_name, rhs)
            if mat.shape != (rhs.size, n):
                raise ValueError(
                    f"{name} shape {mat.shape} inconsistent with {rhs.size} rows x {n} vars"
                )
            if not np.all(np.isfinite(rhs)):
                raise ValueError(f"{rhs_name} contains non-finite entries")
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError(f"bounds has {len(self.bounds)} entries for {n} variables")


@dataclass
class SolveResult:
    """Outcome of one solver call.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded`` or
    ``iteration-limit``.  On ``optimal`` the max constraint residual is at
    most the feasibility tolerance.  ``objective`` is reported in the
    problem's own sense (maximized value for a maximize LP).
    """

    status: str
    x: np.ndarray | None
    objective: float | None
    max_residual: float
    iterations: int
    message: str = ""
    path_objectives: list = field(default_factory=list)


def _lp_residual(lp: LinearProgram, x: np.ndarray) -> float:
    res = 0.0
    if lp.a_ub is not None:
        res = max(res, float(np.max(lp.a_ub @ x - lp.b_ub, initial=0.0)))
    if lp.a_eq is not None:
        res = max(res, float(np.max(np.abs(lp.a_eq @ x - lp.b_eq), initial=0.0)))
    if lp.bounds is not None:
        for xi, (lo, hi) in zip(x, lp.bounds):
            if lo is not None:
                res = max(res, lo - xi)
            if hi is not None:
                res = max(res, xi - hi)
    return res


_HIGHS_STATUS = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}


def solve_lp(lp: LinearProgram, feas_tol: float = 1e-8, opt_tol: float = 1e-6) -> SolveResult:
    """Solve a linear program to the given feasibility/optimality tolerances.

    Deterministic for a fixed input.  ``infeasible`` and ``unbounded`` are
    reported as explicit statuses, never as exceptions.
    """
    c = -lp.c if lp.maximize else lp.c
    bounds = lp.bounds if lp.bounds is not None else [(None, None)] * lp.c.size
    res = linprog(
        c,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        A_eq=lp.a_eq,
        b_eq=lp.b_eq,
        bounds=bounds,
        method="highs",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": max(feas_tol, 1e-10),
            "dual_feasibility_tolerance": max(opt_tol * 1e-2, 1e-10),
        },
    )
    status = _HIGHS_STATUS.get(res.status, "iteration-limit")
    if status != "optimal":
        return SolveResult(
            status=status, x=None, objective=None,
            max_residual=math.inf, iterations=int(getattr(res, "nit", 0) or 0),
            message=str(res.message),
        )
    x = np.asarray(res.x, dtype=float)
    obj = float(lp.c @ x)
    return SolveResult(
        status="optimal", x=x, objective=obj,
        max_residual=_lp_residual(lp, x), iterations=int(getattr(res, "nit", 0) or 0),
        message=str(res.message),
    )


# --- smooth convex programs -------------------------------------------------


class LinearObjective:
    """Minimize ``c @ x``; zero curvature."""

    def __init__(self, c: np.ndarray):
        self.c = np.asarray(c, dtype=float)

    def __call__(self, x: np.ndarray):
        return float(self.c @ x), self.c

    def hessian(self, x: np.ndarray):
        n = self.c.size
        return sp.csr_matrix((n, n))


class AffineBlock:
    """Constraint rows ``A @ x - b <= 0``."""

    def __init__(self, a, b):
        self.a = sp.csr_matrix(a)
        self.b = np.asarray(b, dtype=float)
        self.count = self.a.shape[0]

    def values(self, x: np.ndarray) -> np.ndarray:
        return self.a @ x - self.b

    def jacobian(self, x: np.ndarray):
        return self.a

    def hessian_weighted(self, x: np.ndarray, w: np.ndarray):
        n = self.a.shape[1]
        return sp.csr_matrix((n, n))


class SmoothBlock:
    """Constraint rows defined by closures.

    ``values_fn(x) -> (m,)``, ``jacobian_fn(x) -> (m, dim) sparse`` and
    optionally ``hessian_fn(x, w) -> (dim, dim) sparse`` computing the
    w-weighted sum of row Hessians.  Omitting ``hessian_fn`` drops the
    curvature term from Newton's model (the barrier's outer-product term
    still carries the solve; convergence just slows).
    """

    def __init__(self, count: int, values_fn, jacobian_fn, hessian_fn=None):
        self.count = count
        self._values = values_fn
        self._jacobian = jacobian_fn
        self._hessian = hessian_fn

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._values(x), dtype=float))

    def jacobian(self, x: np.ndarray):
        return sp.csr_matrix(self._jacobian(x))

    def hessian_weighted(self, x: np.ndarray, w: np.ndarray):
        if self._hessian is None:
            n = x.size
            return sp.csr_matrix((n, n))
        return sp.csr_matrix(self._hessian(x, w))


class _CallableRow:
    """Adapter for a plain ``f(x) -> (value, gradient)`` constraint."""

    def __init__(self, fn: Callable):
        self.fn = fn
        self.count = 1

    def values(self, x: np.ndarray) -> np.ndarray:
        v, _ = self.fn(x)
        return np.array([v], dtype=float)

    def jacobian(self, x: np.ndarray):
        _, g = self.fn(x)
        return sp.csr_matrix(np.asarray(g, dtype=float)[None, :])

    def hessian_weighted(self, x: np.ndarray, w: np.ndarray):
        n = x.size
        return sp.csr_matrix((n, n))


@dataclass
class ConvexProgram:
    """Minimize a smooth convex objective over smooth convex inequalities.

    ``objective`` is a callable returning ``(value, gradient)`` (an optional
    ``hessian(x)`` attribute sharpens Newton's model; without it a
    finite-difference Hessian of the gradient is used).  ``constraints`` is a
    sequence of plain callables with the same signature or of constraint
    blocks (:class:`AffineBlock`, :class:`SmoothBlock`).  ``x0`` must be
    feasible; strict interiority is recovered internally when it sits on a
    boundary.
    """

    dimension: int
    objective: Callable
    constraints: Sequence
    x0: np.ndarray

    def __post_init__(self) -> None:
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.shape != (self.dimension,):
            raise ValueError(f"x0 shape {self.x0.shape} != ({self.dimension},)")


def _wrap_blocks(constraints) -> list:
    blocks = []
    for c in constraints:
        if hasattr(c, "values") and hasattr(c, "jacobian"):
            blocks.append(c)
        elif callable(c):
            blocks.append(_CallableRow(c))
        else:
            raise TypeError(f"constraint {c!r} is neither a callable nor a block")
    return blocks


def _all_values(blocks, x) -> np.ndarray:
    if not blocks:
        return np.empty(0)
    return np.concatenate([b.values(x) for b in blocks])


def _objective_hessian(objective, x):
    hess = getattr(objective, "hessian", None)
    if hess is not None:
        return sp.csr_matrix(hess(x))
    # Finite-difference the gradient; only exercised for small toy objectives.
    n = x.size
    cols = []
    step = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    _, g0 = objective(x)
    for j in range(n):
        xp = x.copy()
        xp[j] += step
        _, gj = objective(xp)
        cols.append((np.asarray(gj) - np.asarray(g0)) / step)
    h = np.column_stack(cols)
    return sp.csr_matrix(0.5 * (h + h.T))


def _solve_spd(h, g):
    """Newton direction ``h @ dx = -g`` with a jitter fallback."""
    n = g.size
    reg = 0.0
    for _ in range(6):
        try:
            mat = sp.csc_matrix(h + sp.eye(n) * reg if reg else h)
            if n <= 300:
                dense = mat.toarray()
                return np.linalg.solve(dense, -g)
            return splu(mat).solve(-g)
        except (np.linalg.LinAlgError, RuntimeError):
            reg = max(reg * 100.0, 1e-10)
    raise np.linalg.LinAlgError("Newton system is numerically singular")


def _center(objective, blocks, x, t, feas_tol, max_newton=60):
    """Damped Newton minimization of ``t*f0 + barrier`` from a strictly
    feasible ``x``; returns the new point and Newton step count."""
    steps = 0
    for _ in range(max_newton):
        f0, g0 = objective(x)
        vals = _all_values(blocks, x)
        if vals.size and np.max(vals) >= 0:
            raise FloatingPointError("barrier centering left the interior")
        inv = -1.0 / vals if vals.size else vals
        grad = t * np.asarray(g0, dtype=float)
        hess = sp.csr_matrix(t * _objective_hessian(objective, x))
        if vals.size:
            jacs = sp.vstack([b.jacobian(x) for b in blocks], format="csr")
            grad = grad + jacs.T @ inv
            d = inv**2
            hess = hess + (jacs.T @ sp.diags(d) @ jacs)
            offset = 0
            for b in blocks:
                w = inv[offset : offset + b.count]
                hess = hess + b.hessian_weighted(x, w)
                offset += b.count
        hess = hess + sp.eye(x.size) * 1e-12
        dx = _solve_spd(hess, grad)
        lam2 = float(-grad @ dx)
        steps += 1
        if lam2 / 2.0 <= 1e-9:
            break
        # Backtrack: stay strictly feasible, then Armijo on the merit.
        merit0 = t * f0 - float(np.sum(np.log(-vals))) if vals.size else t * f0
        step = 1.0
        accepted = False
        for _ in range(60):
            xn = x + step * dx
            vn = _all_values(blocks, xn)
            if vn.size and (not np.all(np.isfinite(vn)) or np.max(vn) >= 0):
                step *= 0.5
                continue
            f0n, _ = objective(xn)
            meritn = t * f0n - float(np.sum(np.log(-vn))) if vn.size else t * f0n
            if meritn <= merit0 - 0.25 * step * lam2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x = xn
    return x, steps


def _newton_unconstrained(objective, x, opt_tol):
    steps = 0
    for _ in range(200):
        f0, g0 = objective(x)
        g = np.asarray(g0, dtype=float)
        if np.linalg.norm(g) <= opt_tol:
            break
        hess = _objective_hessian(objective, x) + sp.eye(x.size) * 1e-12
        dx = _solve_spd(hess, g)
        step = 1.0
        for _ in range(60):
            f0n, _ = objective(x + step * dx)
            if f0n <= f0 + 1e-4 * step * float(g @ dx):
                break
            step *= 0.5
        x = x + step * dx
        steps += 1
    return x, steps


def _phase_one(blocks, x0, feas_tol):
    """Find a strictly interior point near-feasible ``x0``, or report stall.

    Minimizes the worst constraint value ``s`` over ``(x, s)`` with the same
    barrier machinery, exiting early once comfortably interior.
    """
    n = x0.size
    m = sum(b.count for b in blocks)
    vals0 = _all_values(blocks, x0)
    s0 = float(np.max(vals0)) + 1.0

    class _Shifted:
        def __init__(self, block):
            self.block = block
            self.count = block.count

        def values(self, y):
            return self.block.values(y[:n]) - y[n]

        def jacobian(self, y):
            j = self.block.jacobian(y[:n])
            rows = np.arange(self.count)
            ones = sp.csr_matrix((-np.ones(self.count), (rows, np.zeros(self.count, dtype=int))),
                                 shape=(self.count, 1))
            return sp.hstack([j, ones], format="csr")

        def hessian_weighted(self, y, w):
            h = self.block.hessian_weighted(y[:n], w)
            out = sp.lil_matrix((n + 1, n + 1))
            out[:n, :n] = h
            return sp.csr_matrix(out)

    shifted = [_Shifted(b) for b in blocks]
    obj = LinearObjective(np.concatenate([np.zeros(n), [1.0]]))
    y = np.concatenate([x0, [s0]])
    t = 1.0
    total = 0
    for _ in range(40):
        y, steps = _center(obj, shifted, y, t, feas_tol)
        total += steps
        cur = _all_values(blocks, y[:n])
        if cur.size and np.max(cur) <= -1e-6:
            return y[:n], total, True
        if m / t <= 1e-10:
            break
        t *= 30.0
    cur = _all_values(blocks, y[:n])
    if cur.size and np.max(cur) < -1e-12:
        return y[:n], total, True
    return x0, total, False


def solve_convex(p: ConvexProgram, feas_tol: float = 1e-8, opt_tol: float = 1e-6) -> SolveResult:
    """Log-barrier Newton solve of a smooth convex program.

    The start must satisfy every constraint within ``feas_tol`` (an explicit
    error asks the caller for a feasible point otherwise).  A start on the
    boundary triggers a phase-I interior search; if no strict interior
    exists the start is returned unchanged with ``iteration-limit`` status.
    On ``optimal`` the returned point is feasible and its barrier duality
    gap is at most ``opt_tol``.  ``path_objectives`` records the objective
    at consecutive centering stages (non-increasing along the central path).
    """
    blocks = _wrap_blocks(p.constraints)
    m = sum(b.count for b in blocks)
    x = np.array(p.x0, dtype=float)
    objective = p.objective

    if m == 0:
        x, steps = _newton_unconstrained(objective, x, opt_tol)
        f0, _ = objective(x)
        return SolveResult("optimal", x, float(f0), 0.0, steps)

    vals = _all_values(blocks, x)
    if float(np.max(vals)) > feas_tol:
        raise ValueError(
            f"solve_convex needs a feasible start: max constraint value "
            f"{float(np.max(vals)):.3e} exceeds feas_tol={feas_tol:.1e}; "
            "supply a feasible x0 (the previous iterate of a successive "
            "convexification loop is one)"
        )

    total_steps = 0
    if float(np.max(vals)) > -1e-12:
        x, steps, ok = _phase_one(blocks, x, feas_tol)
        total_steps += steps
        if not ok:
            f0, _ = objective(p.x0)
            return SolveResult(
                "iteration-limit", np.array(p.x0), float(f0),
                max(float(np.max(vals)), 0.0), total_steps,
                message="no strictly interior point found; start returned unchanged",
            )

    t = 1.0
    path = []
    for _ in range(64):
        x, steps = _center(objective, blocks, x, t, feas_tol)
        total_steps += steps
        f0, _ = objective(x)
        path.append(float(f0))
        if m / t <= opt_tol:
            resid = max(float(np.max(_all_values(blocks, x))), 0.0)
            return SolveResult("optimal", x, float(f0), resid, total_steps,
                               path_objectives=path)
        t *= 30.0
    resid = max(float(np.max(_all_values(blocks, x))), 0.0)
    f0, _ = objective(x)
    return SolveResult("iteration-limit", x, float(f0), resid, total_steps,
                       path_objectives=path)


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9,
           max_iter: int = 200) -> float:
    """Guarded bisection for a root of ``f`` on ``[lo, hi]``.

    Requires a sign change (``f(lo) * f(hi) <= 0``); returns a point with
    ``|f| <= tol`` or once the bracket width is at most ``tol``.
    Deterministic, independent of ``max_iter`` once the tolerance is met.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol or (hi - lo) <= tol:
            return mid
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
