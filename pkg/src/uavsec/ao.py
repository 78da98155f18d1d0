"""Alternating optimization over schedule, power split, and trajectory.

The driver cycles the three block solvers, each with the other two
variable groups held fixed, and keeps a per-iteration record of the true
objective.  Every block step is guarded: a candidate that breaks
feasibility or lowers the evaluated objective beyond solver tolerance is
reverted, so the reported objective sequence is non-decreasing by
construction and the returned solution is always feasible.

An orthogonal mode swaps in the dedicated-slot scheduling variant and
pins the power split to the slot encoding (full power to whichever
stream owns the slot), leaving only scheduling and trajectory to
alternate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .model import Scenario, Solution, check_feasible, evaluate, gains_at, slot_rates
from .planner import allocate_power_slot, closed_form_power, plan
from .subproblems import (
    PenaltyConfig,
    solve_power,
    solve_scheduling,
    solve_scheduling_oma,
    solve_trajectory,
)

__all__ = ["ConvergenceTrace", "default_init", "optimize"]

_NOMA_BLOCKS = ("scheduling", "power", "trajectory")
_OMA_BLOCKS = ("scheduling", "trajectory")


@dataclass
class ConvergenceTrace:
    """Bookkeeping for one alternating-optimization run.

    ``objectives`` holds the evaluated objective after each full cycle
    (non-decreasing within solver tolerance).  ``block_deltas`` and
    ``block_seconds`` hold, per cycle, each block's contribution to the
    objective and its wall time.  ``kappa`` holds one sublist per cycle:
    the scheduling anneal's distance-to-binary after each of its outer
    rounds.  ``notes`` records every reverted or degraded block step.
    """

    objectives: list = field(default_factory=list)
    block_deltas: list = field(default_factory=list)
    block_seconds: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    notes: list = field(default_factory=list)


def default_init(scenario: Scenario) -> Solution:
    """Feasible starting solution from the closed-form planner."""
    return plan(scenario)


def _oma_power_encoding(solution: Solution) -> Solution:
    """Pin the power split to the dedicated-slot rule: full confidential
    power on security slots, none anywhere else."""
    out = solution.copy()
    out.alpha1 = np.clip(out.a.sum(axis=0), 0.0, 1.0)
    return out


def optimize(
    scenario: Scenario,
    init: Solution | None = None,
    omega: float = 1e-3,
    max_iters: int = 20,
    blocks: tuple = _NOMA_BLOCKS,
    mode: str = "noma",
):
    """Alternate the block solvers until the objective stalls.

    Runs ``blocks`` in the given order each cycle (scheduling with the
    split and path fixed, power with the schedule and path fixed,
    trajectory with the schedule and split fixed), then applies the
    relative-improvement stop against the running objective, which
    starts at the conventional 1e-7 floor.  A cycle in which no block
    moves the solution terminates immediately as a fixed point.

    Returns the best solution found and a ConvergenceTrace.  The init
    must be feasible; pass ``mode="oma"`` for the orthogonal benchmark
    (the power block is skipped there, the slot encoding fixes it).
    """
    if mode not in ("noma", "oma"):
        raise ValueError(f"unknown mode {mode!r}; expected 'noma' or 'oma'")
    if omega <= 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    unknown = [blk for blk in blocks if blk not in _NOMA_BLOCKS]
    if unknown:
        raise ValueError(f"unknown blocks {unknown}; valid names {_NOMA_BLOCKS}")
    if mode == "oma":
        if blocks == _NOMA_BLOCKS:
            blocks = _OMA_BLOCKS
        elif "power" in blocks:
            raise ValueError("the orthogonal mode fixes the power split; drop 'power'")

    work = default_init(scenario) if init is None else init.copy()
    if mode == "oma":
        work = _oma_power_encoding(work)
    violations = check_feasible(scenario, work)
    if violations:
        raise ValueError(f"initial solution infeasible: {violations}")

    trace = ConvergenceTrace()
    cur = evaluate(scenario, work).objective
    r_old = 1e-7

    for _ in range(max_iters):
        deltas: dict = {}
        seconds: dict = {}
        moved = False
        for block in blocks:
            t0 = time.perf_counter()
            candidate, block_notes = _run_block(scenario, work, block, mode, omega)
            for note in block_notes:
                trace.notes.append(f"iteration {trace.iterations + 1} {block}: {note}")
            if block == "scheduling" and candidate is not None:
                trace.kappa.append(list(candidate[1]))
                candidate = candidate[0]
            delta = 0.0
            if candidate is not None:
                rep = evaluate(scenario, candidate)
                if rep.violations:
                    trace.notes.append(
                        f"iteration {trace.iterations + 1} {block}: candidate "
                        f"violated {sorted({v.kind for v in rep.violations})}; reverted"
                    )
                elif rep.objective < cur - 1e-6:
                    trace.notes.append(
                        f"iteration {trace.iterations + 1} {block}: objective "
                        f"dropped {cur:.6f} -> {rep.objective:.6f}; reverted"
                    )
                else:
                    delta = rep.objective - cur
                    if not np.allclose(candidate.a, work.a) or not np.allclose(
                        candidate.b, work.b
                    ) or not np.allclose(candidate.alpha1, work.alpha1) or not np.allclose(
                        candidate.q, work.q
                    ):
                        moved = True
                    work = candidate
                    cur = rep.objective
            deltas[block] = delta
            seconds[block] = time.perf_counter() - t0
        trace.objectives.append(cur)
        trace.block_deltas.append(deltas)
        trace.block_seconds.append(seconds)
        trace.iterations += 1
        if not moved:
            trace.converged = True
            trace.notes.append("no block moved the solution; fixed point reached")
            break
        if (cur - r_old) / max(r_old, 1e-12) <= omega:
            trace.converged = True
            break
        r_old = cur

    return work, trace


def _coverage_schedules(scenario: Scenario, q: np.ndarray, a_keep: np.ndarray):
    """Concentrated-coverage schedule family for the quality side.

    Rate targets only need a handful of well-heard slots at full quality
    power, and every slot left without a quality owner keeps all quality
    users interference-limited, which is where the slot secrecy is
    largest.  Build the schedule that covers each target with the fewest
    best-heard slots (most-short user claims first), plus a variant with
    one spare slot per user, and leave the rest of the horizon unowned.
    The security side is kept as passed in.
    """
    cap = np.log2(1.0 + scenario.rho * gains_at(scenario, q, scenario.qu_positions))
    targets = scenario.qos_targets
    m_count, n_count = cap.shape
    family = []
    for extra in (0, 1):
        b = np.zeros((m_count, n_count))
        have = np.zeros(m_count)
        covered = True
        while True:
            short = np.where(have < targets - 1e-9)[0]
            if short.size == 0:
                break
            m = int(short[np.argmax(targets[short] - have[short])])
            free = np.nonzero(b.sum(axis=0) < 0.5)[0]
            if free.size == 0:
                covered = False
                break
            n = int(free[np.argmax(cap[m, free])])
            b[m, n] = 1.0
            have[m] += cap[m, n]
        if not covered:
            continue
        if extra:
            for m in range(m_count):
                if targets[m] <= 0.0:
                    continue
                free = np.nonzero(b.sum(axis=0) < 0.5)[0]
                if free.size == 0:
                    break
                n = int(free[np.argmax(cap[m, free])])
                b[m, n] = 1.0
        label = "minimal quality coverage" if not extra else "quality coverage with spare"
        if not any(np.array_equal(b, prev_b) for _, prev_b, _ in family):
            family.append((a_keep.copy(), b, label))
    return family


def _claim_losses(scenario: Scenario, q: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Secrecy sacrificed when quality user m takes over slot n.

    Compares each slot's secrecy with no quality owner (every quality
    user stays interference-limited) against its secrecy once user m
    owns it at the closed-form split, both under the slot's security
    owner.  Low loss marks slots that are cheap to give away, typically
    where the platform hears the quality user worst.
    """
    qu_g = gains_at(scenario, q, scenario.qu_positions)
    m_count, n_count = qu_g.shape
    loss = np.zeros((m_count, n_count))
    for n in range(n_count):
        if a[:, n].max() < 0.5:
            continue
        k = int(np.argmax(a[:, n]))
        h = gains_at(scenario, q[n], scenario.su_positions)[k, 0]
        g_all = float(np.max(qu_g[:, n]))
        alpha_free = allocate_power_slot(h, 0.0, g_all, scenario.rho)
        shield = slot_rates(scenario, q[n], k, None, alpha_free).secrecy_rate
        for m in range(m_count):
            others = [qu_g[mm, n] for mm in range(m_count) if mm != m]
            g_tilde = max(others, default=None)
            alpha_own = allocate_power_slot(h, qu_g[m, n], g_tilde, scenario.rho)
            owned = slot_rates(scenario, q[n], k, m, alpha_own).secrecy_rate
            loss[m, n] = shield - owned
    return loss


def _exchange_polish(scenario: Scenario, q: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Local search on the quality-side slot assignment.

    The greedy coverage builder picks slots by hearing quality, but the
    slot worth giving away is the one whose takeover sacrifices the least
    secrecy, so single-slot moves are tried against the true re-fit
    objective: swap an owned slot for a free one, drop a redundant slot,
    or claim one more.  Candidate free slots are ranked by the takeover
    loss table and only the best few are tried per move, which keeps the
    search budget linear in the horizon.  Returns the improved schedule
    with its re-fit solution, or the input pair when no move helps.
    """
    try:
        cur_sol = closed_form_power(scenario, a, b, q)
    except ValueError:
        return None, b
    cur_val = evaluate(scenario, cur_sol).objective
    cur_b = b.copy()
    loss = _claim_losses(scenario, q, a)
    targets = scenario.qos_targets
    m_count, n_count = cur_b.shape
    max_moves = max(8, n_count // 8)

    def score(b_try):
        try:
            sol = closed_form_power(scenario, a, b_try, q)
        except ValueError:
            return None, -np.inf
        rep = evaluate(scenario, sol)
        if rep.violations:
            return None, -np.inf
        return sol, rep.objective

    for _ in range(max_moves):
        best_gain = 1e-10
        best = None
        free = np.nonzero(cur_b.sum(axis=0) < 0.5)[0]
        for m in range(m_count):
            owned = np.nonzero(cur_b[m] > 0.5)[0]
            ranked = free[np.argsort(loss[m, free], kind="stable")][:3]
            trials = []
            for n_out in owned:
                for n_in in ranked:
                    swap = cur_b.copy()
                    swap[m, n_out] = 0.0
                    swap[m, n_in] = 1.0
                    trials.append(swap)
                drop = cur_b.copy()
                drop[m, n_out] = 0.0
                trials.append(drop)
            for n_in in ranked:
                add = cur_b.copy()
                add[m, n_in] = 1.0
                trials.append(add)
            for b_try in trials:
                sol, val = score(b_try)
                if sol is not None and val - cur_val > best_gain:
                    best_gain = val - cur_val
                    best = (b_try, sol, val)
        if best is None:
            break
        cur_b, cur_sol, cur_val = best
    return cur_sol, cur_b


def _run_block(scenario: Scenario, work: Solution, block: str, mode: str, omega: float):
    """One guarded block solve.  Returns (candidate or None, notes); for
    the scheduling block the candidate is (solution, kappa history)."""
    notes: list = []
    if block == "scheduling":
        cfg = PenaltyConfig(threshold=omega)
        try:
            if mode == "oma":
                a_new, b_new, btrace = solve_scheduling_oma(
                    scenario, work.q, work.a, work.b, cfg
                )
            else:
                a_new, b_new, btrace = solve_scheduling(
                    scenario, work.alpha1, work.q, work.a, work.b, cfg
                )
        except ValueError as exc:
            notes.append(f"failed ({exc}); keeping previous schedule")
            return None, notes
        notes.extend(btrace.notes)
        if mode == "oma":
            if btrace.status == "rounding-infeasible":
                notes.append("rounded schedule infeasible; keeping previous schedule")
                return None, notes
            candidate = work.copy()
            candidate.a = a_new
            candidate.b = b_new
            candidate = _oma_power_encoding(candidate)
            return (candidate, list(btrace.kappa)), notes
        # A schedule changes who leaks on each slot, so judging it only at
        # the power split tuned for the previous schedule undervalues any
        # structural move; every candidate is also scored with the
        # closed-form split re-fit to it, and concentrated-coverage
        # schedules join the pool.  The best feasible candidate goes to
        # the acceptance guard; first listed wins ties, so the plain
        # annealed schedule is preferred when re-fitting adds nothing.
        pool = []
        if btrace.status != "rounding-infeasible":
            cand = work.copy()
            cand.a = a_new
            cand.b = b_new
            pool.append((cand, "annealed schedule"))
        else:
            notes.append("rounded schedule infeasible at the current split")
        refits = [(a_new, b_new, "annealed schedule with re-fit split")]
        refits.extend(_coverage_schedules(scenario, work.q, work.a))
        for a_try, b_try, label in refits:
            try:
                pool.append((closed_form_power(scenario, a_try, b_try, work.q), label))
            except ValueError:
                continue
        best = None
        best_label = ""
        best_val = -np.inf
        for cand, label in pool:
            rep = evaluate(scenario, cand)
            if rep.violations:
                continue
            if rep.objective > best_val:
                best, best_label, best_val = cand, label, rep.objective
        if best is None:
            notes.append("no feasible schedule candidate; keeping previous schedule")
            return None, notes
        if best_label != "annealed schedule":
            notes.append(f"took the {best_label} candidate at {best_val:.6f}")
        return (best, list(btrace.kappa)), notes

    if block == "power":
        alpha_new, btrace = solve_power(
            scenario, work.a, work.b, work.q, work.alpha1, omega=omega
        )
        notes.extend(btrace.notes)
        if btrace.status == "infeasible-qos":
            notes.append("rate targets unreachable at this schedule; split unchanged")
            return None, notes
        candidate = work.copy()
        candidate.alpha1 = alpha_new
        return candidate, notes

    try:
        q_new, btrace = solve_trajectory(
            scenario, work.a, work.b, work.alpha1, work.q, omega=omega
        )
    except ValueError as exc:
        notes.append(f"failed ({exc}); keeping previous path")
        return None, notes
    notes.extend(btrace.notes)
    if btrace.status == "infeasible-qos":
        notes.append("rate targets unreachable along this path; path unchanged")
        return None, notes
    candidate = work.copy()
    candidate.q = q_new
    return candidate, notes
