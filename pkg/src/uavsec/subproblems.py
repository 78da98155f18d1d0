"""The three alternating-optimization block subproblems.

Each block holds two of (schedule, power split, trajectory) fixed and
improves the third:

* :func:`solve_scheduling` relaxes the binary slot indicators, augments the
  objective with a penalty that vanishes exactly at binary points, and
  alternates closed-form relaxed-copy updates with linear-program solves,
  growing the penalty weight until the indicators are binary.
* :func:`solve_power` runs successive convexification on the per-slot
  confidential power fraction: concave rate terms are replaced by tangents,
  convex ones kept exact, so each surrogate is a small convex program whose
  solutions are feasible for the true problem.
* :func:`solve_trajectory` does the same over the flight path, introducing
  per-(user, slot) lower bounds on squared ground range so every intercept
  and quality-rate term becomes convex in the variables.

All three return the improved decision plus a :class:`BlockTrace`; none of
them degrades the true objective (a worsening surrogate step is rejected
and the previous iterate kept).  :func:`solve_scheduling_oma` is the same
penalty machinery for the orthogonal benchmark in which each slot carries a
single user at full power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .convex import (
    AffineBlock,
    ConvexProgram,
    LinearObjective,
    LinearProgram,
    SmoothBlock,
    solve_convex,
    solve_lp,
)
from .model import Scenario, Solution, evaluate, gains_at
from .planner import qos_repair

__all__ = [
    "PenaltyConfig",
    "RelaxedSchedule",
    "SlackState",
    "BlockTrace",
    "SchedulingLayout",
    "scheduling_layout",
    "relaxed_update",
    "scheduling_rate_constants",
    "initial_scheduling_slacks",
    "build_scheduling_lp",
    "solve_scheduling",
    "build_scheduling_lp_oma",
    "solve_scheduling_oma",
    "solve_power",
    "solve_trajectory",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PenaltyConfig:
    """Knobs of the penalty loop that drives indicators to binary values."""

    penalty_init: float = 1.0
    growth: float = 2.0
    max_iters: int = 20
    threshold: float = 1e-3

    def __post_init__(self) -> None:
        if not self.penalty_init > 0:
            raise ValueError(f"penalty_init must be positive, got {self.penalty_init}")
        if not self.growth > 1:
            raise ValueError(f"growth must exceed 1, got {self.growth}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")


@dataclass(frozen=True)
class RelaxedSchedule:
    """Continuous relaxed copies of the two binary slot-indicator matrices."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        for name, arr in (("a", self.a), ("b", self.b)):
            if np.min(arr) < -1e-12 or np.max(arr) > 1.0 + 1e-12:
                raise ValueError(f"relaxed {name} entries must lie in [0, 1]")


@dataclass
class SlackState:
    """Auxiliary variables of the block programs.

    The scheduling block uses ``min_rate`` (the max-min objective slack),
    ``slot_value`` (indicator-weighted per-slot secrecy), ``secrecy_bound``
    (per-slot secrecy before weighting) and ``eavesdrop_bound`` (per-slot
    wiretap rate).  The power and trajectory blocks use ``leak_bound`` (the
    per-slot intercept rate) and the trajectory block additionally
    ``range_sq_bound`` (per-(user, slot) lower bounds on squared range).
    """

    min_rate: float = 0.0
    slot_value: np.ndarray | None = None
    secrecy_bound: np.ndarray | None = None
    eavesdrop_bound: np.ndarray | None = None
    leak_bound: np.ndarray | None = None
    range_sq_bound: dict | None = None


@dataclass
class BlockTrace:
    """What one block solve did: objective path, status, diagnostics.

    ``objectives`` holds the true max-min secrecy objective after each
    accepted iterate, except in the scheduling block where it records the
    penalized objective (max-min slack minus the weighted penalty) of each
    inner solve, the quantity whose stall ends an inner round.  ``kappa``
    is the scheduling block's per-round distance to binary.
    """

    objectives: list = field(default_factory=list)
    status: str = "converged"
    iterations: int = 0
    kappa: list = field(default_factory=list)
    notes: list = field(default_factory=list)


# --- shared helpers ---------------------------------------------------------


def scheduling_rate_constants(scenario: Scenario, alpha1: np.ndarray, q: np.ndarray):
    """Per-(user, slot) rate constants at a fixed power split and path.

    Returns ``(su_rate, sched_leak, unsched_leak, qu_rate)``: a security
    user's rate if scheduled, a quality user's intercept rate if it is the
    scheduled one (it cancels the quality stream before intercepting), its
    intercept rate if not (the quality stream remains as interference), and
    its own quality rate if scheduled.
    """
    alpha1 = np.asarray(alpha1, dtype=float)
    q = np.asarray(q, dtype=float)
    if alpha1.shape != (scenario.num_slots,):
        raise ValueError(f"alpha1 shape {alpha1.shape} != ({scenario.num_slots},)")
    if q.shape != (scenario.num_slots, 2):
        raise ValueError(f"trajectory shape {q.shape} != ({scenario.num_slots}, 2)")
    rho = scenario.rho
    h = gains_at(scenario, q, scenario.su_positions)
    g = gains_at(scenario, q, scenario.qu_positions)
    a1 = alpha1[None, :]
    a2 = 1.0 - a1
    su_rate = np.log2(1.0 + rho * h * a1)
    sched_leak = np.log2(1.0 + rho * g * a1)
    unsched_leak = np.log2(1.0 + rho * g * a1 / (rho * g * a2 + 1.0))
    qu_rate = np.log2(1.0 + rho * g * a2 / (rho * g * a1 + 1.0))
    return su_rate, sched_leak, unsched_leak, qu_rate


def relaxed_update(a_prev: np.ndarray, b_prev: np.ndarray) -> RelaxedSchedule:
    """Closed-form optimal relaxed copies for the penalty terms.

    Minimizing ``(x - t)**2 + x**2 * (1 - t)**2`` over the copy ``t`` gives
    ``t = x * (1 + x) / (1 + x**2)``, with fixed points exactly at 0 and 1.
    """
    for name, arr in (("a", a_prev), ("b", b_prev)):
        if np.min(arr) < -1e-12 or np.max(arr) > 1.0 + 1e-12:
            raise ValueError(f"{name} entries must lie in [0, 1] before relaxing")
    a = np.clip(a_prev, 0.0, 1.0)
    b = np.clip(b_prev, 0.0, 1.0)
    return RelaxedSchedule(
        a=a * (1.0 + a) / (1.0 + a * a),
        b=b * (1.0 + b) / (1.0 + b * b),
    )


def _penalty_terms(x: np.ndarray, x_relaxed: np.ndarray) -> np.ndarray:
    return (x - x_relaxed) ** 2 + x**2 * (1.0 - x_relaxed) ** 2


def _penalty_gradient(x: np.ndarray, x_relaxed: np.ndarray) -> np.ndarray:
    return 2.0 * (x - x_relaxed) + 2.0 * x * (1.0 - x_relaxed) ** 2


def _penalty_secant_slope(x_relaxed: np.ndarray) -> np.ndarray:
    """Per-entry slope of the linear-plus-constant penalty majorant.

    With the relaxed copy fixed the penalty is a quadratic in the
    indicator; on the unit interval it sits below its secant (x**2 <= x),
    giving the majorant x * (1 + (1 - t)**2 - 2 t) + t**2.  The majorant
    equals the penalty exactly at binary points and bounds it above
    elsewhere, so subtracting it from the program objective keeps a valid
    lower bound on the penalized objective while staying linear, and its
    slope at binary copies never vanishes, which is what lets a growing
    weight actually pin indicators to 0 or 1.  A tangent expansion instead
    has zero slope at every binary point, so the next program would jump
    straight back to the fractional optimum and oscillate.
    """
    return 1.0 + (1.0 - x_relaxed) ** 2 - 2.0 * x_relaxed


def _penalty_value(a, b, relaxed: RelaxedSchedule, weight: float) -> float:
    """True penalized-objective deduction at a given schedule and copies."""
    return weight * float(
        np.sum(_penalty_terms(a, relaxed.a)) + np.sum(_penalty_terms(b, relaxed.b))
    )


def _binary_distance(*matrices: np.ndarray) -> float:
    """Largest elementwise distance of any entry to the set {0, 1}."""
    worst = 0.0
    for mat in matrices:
        clipped = np.clip(mat, 0.0, 1.0)
        worst = max(worst, float(np.max(np.minimum(clipped, 1.0 - clipped), initial=0.0)))
    return worst


def _schedule_views(scenario: Scenario, a: np.ndarray, b: np.ndarray):
    """Slots with a scheduled SU, which SU owns each of them, and which QU
    (``-1`` for none) is scheduled in every slot."""
    su_slots = [n for n in range(scenario.num_slots) if a[:, n].sum() > 0.5]
    su_of = {n: int(np.argmax(a[:, n])) for n in su_slots}
    qu_of = {
        n: (int(np.argmax(b[:, n])) if b[:, n].sum() > 0.5 else -1)
        for n in range(scenario.num_slots)
    }
    return su_slots, su_of, qu_of


# --- scheduling block -------------------------------------------------------


@dataclass(frozen=True)
class SchedulingLayout:
    """Variable indexing of the scheduling linear program.

    Order: SU indicators, QU indicators, slot values, secrecy bounds,
    eavesdrop bounds, then the single max-min slack.
    """

    num_su: int
    num_qu: int
    num_slots: int

    @property
    def a_offset(self) -> int:
        return 0

    @property
    def b_offset(self) -> int:
        return self.num_su * self.num_slots

    @property
    def value_offset(self) -> int:
        return self.b_offset + self.num_qu * self.num_slots

    @property
    def secrecy_offset(self) -> int:
        return self.value_offset + self.num_su * self.num_slots

    @property
    def eavesdrop_offset(self) -> int:
        return self.secrecy_offset + self.num_su * self.num_slots

    @property
    def min_rate_index(self) -> int:
        return self.eavesdrop_offset + self.num_su * self.num_slots

    @property
    def size(self) -> int:
        return self.min_rate_index + 1

    def a_index(self, k: int, n: int) -> int:
        return self.a_offset + k * self.num_slots + n

    def b_index(self, m: int, n: int) -> int:
        return self.b_offset + m * self.num_slots + n


def scheduling_layout(num_su: int, num_qu: int, num_slots: int) -> SchedulingLayout:
    return SchedulingLayout(num_su=num_su, num_qu=num_qu, num_slots=num_slots)


def initial_scheduling_slacks(su_rate, sched_leak, unsched_leak, a, b) -> SlackState:
    """Slack values consistent with a given schedule, used as the first
    linearization point."""
    per_qu = np.maximum(b * sched_leak, (1.0 - b) * unsched_leak)
    worst = np.max(per_qu, axis=0)
    k_count = su_rate.shape[0]
    eavesdrop = np.tile(worst, (k_count, 1))
    secrecy = su_rate - eavesdrop
    value = a * secrecy
    return SlackState(
        min_rate=float(np.min(np.mean(value, axis=1))),
        slot_value=value,
        secrecy_bound=secrecy,
        eavesdrop_bound=eavesdrop,
    )


def build_scheduling_lp(
    scenario: Scenario,
    alpha1: np.ndarray,
    q: np.ndarray,
    schedule_prev,
    relaxed: RelaxedSchedule,
    slacks_prev: SlackState,
    penalty_weight: float,
) -> LinearProgram:
    """Linearized scheduling program around the previous iterate.

    Variables follow :class:`SchedulingLayout`.  The bilinear product of
    indicator and secrecy bound is replaced by its first-order expansion
    around the previous iterate, and the binary-enforcing penalty enters
    the objective through its linear unit-interval majorant (see
    :func:`_penalty_secant_slope`); the majorant's constant is dropped
    here and accounted for by the caller when reporting.
    """
    a_prev, b_prev = schedule_prev
    k_count, m_count, n_count = scenario.num_su, scenario.num_qu, scenario.num_slots
    if a_prev.shape != (k_count, n_count) or b_prev.shape != (m_count, n_count):
        raise ValueError(
            f"schedule shapes {a_prev.shape}/{b_prev.shape} do not match "
            f"({k_count},{n_count})/({m_count},{n_count})"
        )
    if relaxed.a.shape != a_prev.shape or relaxed.b.shape != b_prev.shape:
        raise ValueError("relaxed copies must match the schedule shapes")
    theta_prev = slacks_prev.secrecy_bound
    if theta_prev is None or theta_prev.shape != (k_count, n_count):
        raise ValueError("slacks_prev.secrecy_bound must be a (K, N) array")

    su_rate, sched_leak, unsched_leak, qu_rate = scheduling_rate_constants(scenario, alpha1, q)
    lay = scheduling_layout(k_count, m_count, n_count)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    row = 0
    inv_n = 1.0 / n_count
    # Max-min linkage: the objective slack never exceeds any SU's average
    # slot value.
    for k in range(k_count):
        put(row, lay.min_rate_index, 1.0)
        for n in range(n_count):
            put(row, lay.value_offset + k * n_count + n, -inv_n)
        rhs.append(0.0)
        row += 1
    # First-order expansion of (slot value) = (indicator) * (secrecy bound).
    for k in range(k_count):
        for n in range(n_count):
            put(row, lay.value_offset + k * n_count + n, 1.0)
            put(row, lay.a_index(k, n), -theta_prev[k, n])
            put(row, lay.secrecy_offset + k * n_count + n, -a_prev[k, n])
            rhs.append(-a_prev[k, n] * theta_prev[k, n])
            row += 1
    # Secrecy bound plus eavesdrop bound cannot exceed the SU rate.
    for k in range(k_count):
        for n in range(n_count):
            put(row, lay.secrecy_offset + k * n_count + n, 1.0)
            put(row, lay.eavesdrop_offset + k * n_count + n, 1.0)
            rhs.append(su_rate[k, n])
            row += 1
    # The eavesdrop bound dominates every QU's intercept rate.  The
    # cancellation form scales with that QU's indicator and the
    # interference-limited form with its complement.
    for k in range(k_count):
        for n in range(n_count):
            sig = lay.eavesdrop_offset + k * n_count + n
            for m in range(m_count):
                if sched_leak[m, n] != 0.0:
                    put(row, lay.b_index(m, n), sched_leak[m, n])
                put(row, sig, -1.0)
                rhs.append(0.0)
                row += 1
                if unsched_leak[m, n] != 0.0:
                    put(row, lay.b_index(m, n), -unsched_leak[m, n])
                put(row, sig, -1.0)
                rhs.append(-unsched_leak[m, n])
                row += 1
    # Accumulated quality-rate targets.
    for m in range(m_count):
        gamma = scenario.qos_targets[m]
        if gamma <= 0.0:
            continue
        for n in range(n_count):
            if qu_rate[m, n] != 0.0:
                put(row, lay.b_index(m, n), -qu_rate[m, n])
        rhs.append(-gamma)
        row += 1
    # At most one user of each kind per slot.
    for n in range(n_count):
        for k in range(k_count):
            put(row, lay.a_index(k, n), 1.0)
        rhs.append(1.0)
        row += 1
    for n in range(n_count):
        for m in range(m_count):
            put(row, lay.b_index(m, n), 1.0)
        rhs.append(1.0)
        row += 1

    a_ub = sp.csr_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(row, lay.size)
    )

    c = np.zeros(lay.size)
    c[lay.min_rate_index] = 1.0
    c[lay.a_offset : lay.b_offset] = -penalty_weight * _penalty_secant_slope(relaxed.a).ravel()
    c[lay.b_offset : lay.value_offset] = -penalty_weight * _penalty_secant_slope(
        relaxed.b
    ).ravel()
    # Scheduling a quality user only ever helps through the rate-target
    # rows, so ties among relaxed optima break toward fewer scheduled
    # quality slots; the margin sits far below any real rate tradeoff.
    c[lay.b_offset : lay.value_offset] -= 1e-6

    bounds: list = [(0.0, 1.0)] * ((k_count + m_count) * n_count)
    bounds += [(None, None)] * (3 * k_count * n_count + 1)
    return LinearProgram(c=c, a_ub=a_ub, b_ub=np.array(rhs), bounds=bounds, maximize=True)


def _qos_row_offset(lay: SchedulingLayout) -> int:
    """Row index of the first quality-rate row inside the built program."""
    kn = lay.num_su * lay.num_slots
    return lay.num_su + 2 * kn + 2 * kn * lay.num_qu


def _diagnose_scheduling_infeasible(lp: LinearProgram, lay: SchedulingLayout, scenario) -> None:
    """Re-solve with elastic quality-rate rows to name the shortfalls."""
    targeted = [m for m in range(scenario.num_qu) if scenario.qos_targets[m] > 0.0]
    if not targeted:
        raise ValueError("scheduling program infeasible with no rate targets set")
    start = _qos_row_offset(lay)
    n_slack = len(targeted)
    slack_cols = sp.csr_matrix(
        (
            -np.ones(n_slack),
            (np.arange(start, start + n_slack), np.arange(n_slack)),
        ),
        shape=(lp.a_ub.shape[0], n_slack),
    )
    c = np.concatenate([np.zeros(lp.c.size), -np.ones(n_slack)])
    elastic = LinearProgram(
        c=c,
        a_ub=sp.hstack([lp.a_ub, slack_cols], format="csr"),
        b_ub=lp.b_ub,
        bounds=list(lp.bounds) + [(0.0, None)] * n_slack,
        maximize=True,
    )
    res = solve_lp(elastic)
    if res.status != "optimal":
        raise ValueError("scheduling program infeasible; elastic diagnosis also failed")
    shortfalls = {
        int(m): float(s) for m, s in zip(targeted, res.x[lp.c.size :]) if s > 1e-9
    }
    raise ValueError(
        "scheduling program infeasible at this power split and path: "
        f"quality-rate shortfalls by user {shortfalls}"
    )


def _round_matrix_columns(mat: np.ndarray, omega: float):
    """Snap near-binary entries; resolve leftover fractional columns by
    putting the whole column's weight on its largest entry (ties go to the
    lowest index), or emptying the column when even that entry is tiny."""
    out = np.where(mat <= omega, 0.0, np.where(mat >= 1.0 - omega, 1.0, mat))
    forced = False
    fractional = (out > 0.0) & (out < 1.0)
    for n in np.nonzero(np.any(fractional, axis=0))[0]:
        col = mat[:, n]
        out[:, n] = 0.0
        j = int(np.argmax(col))
        if col[j] > omega:
            out[j, n] = 1.0
        forced = True
    return out, forced


def _repair_binary_schedule(
    a_bin: np.ndarray,
    b_bin: np.ndarray,
    su_rate: np.ndarray,
    sched_leak: np.ndarray,
    unsched_leak: np.ndarray,
    qu_rate: np.ndarray,
    targets: np.ndarray,
):
    """Cleanup pass on a rounded binary schedule.

    The penalty alternation can terminate at a fractional fixed point when
    a rate-target row is tight: the copies chase a sliver indicator that
    the largest-entry rounding then inflates to a full slot.  Four greedy
    moves restore sense.  Quality users short of their target claim idle
    slots, strongest slot first (the one move that can cost secrecy, and
    it is mandatory); if still short they take slots from owners whose own
    target survives the hand-off, best-heard slot first.  Then any quality
    slot whose removal keeps the target met is released, largest leak
    reduction first; a scheduled quality user always leaks at least as
    much as an unscheduled one, so releasing never hurts the secrecy
    objective.  Finally idle slots with positive secrecy value go to the
    security user with the lowest running average, which can only raise
    the minimum.  Returns the new matrices, the unrepairable per-user
    shortfalls, and human-readable notes.
    """
    a = a_bin.copy()
    b = b_bin.copy()
    m_count, n_count = b.shape
    targets = np.asarray(targets, dtype=float)
    notes: list[str] = []
    shortfalls: dict[int, float] = {}

    added = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            continue
        have = float(np.sum(b[m] * qu_rate[m]))
        if have >= targets[m] - 1e-9:
            continue
        free = np.nonzero(b.sum(axis=0) < 0.5)[0]
        for n in free[np.argsort(-qu_rate[m, free], kind="stable")]:
            b[m, n] = 1.0
            added += 1
            have += qu_rate[m, n]
            if have >= targets[m] - 1e-9:
                break
    if added:
        notes.append(f"claimed {added} idle slots to meet quality-rate targets")

    moved = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            continue
        have = float(np.sum(b[m] * qu_rate[m]))
        while have < targets[m] - 1e-9:
            owners = np.argmax(b, axis=0)
            owned = b.sum(axis=0) > 0.5
            best_n, best_rate = -1, 0.0
            for n in np.nonzero(owned)[0]:
                donor = int(owners[n])
                if donor == m or qu_rate[m, n] <= best_rate:
                    continue
                keep = float(np.sum(b[donor] * qu_rate[donor])) - qu_rate[donor, n]
                if keep >= targets[donor] - 1e-9:
                    best_n, best_rate = int(n), float(qu_rate[m, n])
            if best_n < 0:
                break
            donor = int(owners[best_n])
            b[donor, best_n] = 0.0
            b[m, best_n] = 1.0
            have += best_rate
            moved += 1
        if have < targets[m] - 1e-9:
            shortfalls[int(m)] = float(targets[m] - have)
    if moved:
        notes.append(f"reassigned {moved} quality slots between users")

    released = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            if np.any(b[m] > 0.5):
                released += int(np.sum(b[m] > 0.5))
                b[m] = 0.0
            continue
        while True:
            slack = float(np.sum(b[m] * qu_rate[m])) - targets[m]
            sched = np.nonzero(b[m] > 0.5)[0]
            drop = [n for n in sched if qu_rate[m, n] <= slack - 1e-9]
            if not drop:
                break
            umax = np.max(unsched_leak[:, drop], axis=0)
            gain = np.maximum(sched_leak[m, drop] - umax, 0.0)
            b[m, drop[int(np.argmax(gain))]] = 0.0
            released += 1
    if released:
        notes.append(f"released {released} redundant quality slots")

    eve = np.max(np.where(b > 0.5, sched_leak, unsched_leak), axis=0)
    value = np.clip(su_rate - eve[None, :], 0.0, None)
    means = (a * value).sum(axis=1) / n_count
    filled = 0
    for n in np.nonzero(a.sum(axis=0) < 0.5)[0]:
        worthwhile = np.nonzero(value[:, n] > 1e-12)[0]
        if worthwhile.size == 0:
            continue
        k = worthwhile[int(np.argmin(means[worthwhile]))]
        a[k, n] = 1.0
        means[k] += value[k, n] / n_count
        filled += 1
    if filled:
        notes.append(f"assigned {filled} idle slots to security users")

    return a, b, shortfalls, notes


def solve_scheduling(
    scenario: Scenario,
    alpha1: np.ndarray,
    q: np.ndarray,
    a_init: np.ndarray,
    b_init: np.ndarray,
    cfg: PenaltyConfig = PenaltyConfig(),
):
    """Penalty-driven scheduling solve at a fixed power split and path.

    Alternates relaxed-copy updates with linear-program solves until the
    surrogate objective stalls, then grows the penalty weight until every
    indicator sits within the threshold of binary.  The inner state starts
    at the neutral midpoint rather than the caller's schedule: near the
    midpoint copy the penalty tilt almost vanishes, so the first rounds
    track the true relaxation and the growing weight then anneals it to a
    binary point.  Anchoring at a binary start would instead freeze it,
    because a single slot flip moves the averaged objective by only a
    per-slot rate over the horizon while paying the full penalty weight.
    Returns exactly binary matrices plus a trace; a forced rounding that
    breaks a rate target is flagged through the trace status so the caller
    can discard the step.
    """
    k_count, m_count, n_count = scenario.num_su, scenario.num_qu, scenario.num_slots
    a_start = np.clip(np.asarray(a_init, dtype=float), 0.0, 1.0)
    b_start = np.clip(np.asarray(b_init, dtype=float), 0.0, 1.0)
    if a_start.shape != (k_count, n_count) or b_start.shape != (m_count, n_count):
        raise ValueError("initial schedule shapes do not match the scenario")
    if np.max(a_start.sum(axis=0)) > 1.0 + 1e-9 or np.max(b_start.sum(axis=0)) > 1.0 + 1e-9:
        raise ValueError("initial schedule exceeds the one-user-per-slot limit")
    a_cur = np.full((k_count, n_count), 0.5)
    b_cur = np.full((m_count, n_count), 0.5)

    su_rate, sched_leak, unsched_leak, qu_rate = scheduling_rate_constants(scenario, alpha1, q)
    slacks = initial_scheduling_slacks(su_rate, sched_leak, unsched_leak, a_cur, b_cur)
    lay = scheduling_layout(k_count, m_count, n_count)
    # A degenerate LP face can park an unused secrecy-bound variable at a
    # huge value; clamping keeps the next linearization well scaled.
    theta_floor = -float(np.max(np.maximum(sched_leak, unsched_leak))) - 1.0

    trace = BlockTrace()
    eta = cfg.penalty_init
    converged = False
    for _ in range(cfg.max_iters):
        r_old = 1e-7
        for _ in range(cfg.max_iters):
            relaxed = relaxed_update(a_cur, b_cur)
            lp = build_scheduling_lp(
                scenario, alpha1, q, (a_cur, b_cur), relaxed, slacks, eta
            )
            res = solve_lp(lp)
            if res.status == "infeasible":
                _diagnose_scheduling_infeasible(lp, lay, scenario)
            if res.status != "optimal":
                trace.notes.append(f"scheduling LP returned {res.status}; stopping")
                break
            x = res.x
            a_cur = np.clip(x[lay.a_offset : lay.b_offset].reshape(k_count, n_count), 0.0, 1.0)
            b_cur = np.clip(
                x[lay.b_offset : lay.value_offset].reshape(m_count, n_count), 0.0, 1.0
            )
            full_obj = float(x[lay.min_rate_index]) - _penalty_value(
                a_cur, b_cur, relaxed, eta
            )
            theta_new = x[lay.secrecy_offset : lay.eavesdrop_offset].reshape(k_count, n_count)
            slacks = SlackState(
                min_rate=float(x[lay.min_rate_index]),
                slot_value=x[lay.value_offset : lay.secrecy_offset].reshape(k_count, n_count),
                secrecy_bound=np.clip(theta_new, theta_floor, su_rate),
                eavesdrop_bound=x[lay.eavesdrop_offset : lay.min_rate_index].reshape(
                    k_count, n_count
                ),
            )
            trace.objectives.append(full_obj)
            trace.iterations += 1
            if abs(full_obj - r_old) / max(abs(r_old), 1e-12) <= cfg.threshold:
                break
            r_old = full_obj
        kappa = _binary_distance(a_cur, b_cur)
        trace.kappa.append(kappa)
        if kappa <= cfg.threshold:
            converged = True
            break
        eta *= cfg.growth

    a_bin, forced_a = _round_matrix_columns(a_cur, cfg.threshold)
    b_bin, forced_b = _round_matrix_columns(b_cur, cfg.threshold)
    if forced_a or forced_b:
        trace.notes.append("fractional columns remained; rounded to the largest entry")
    a_bin, b_bin, short, repair_notes = _repair_binary_schedule(
        a_bin, b_bin, su_rate, sched_leak, unsched_leak, qu_rate, scenario.qos_targets
    )
    trace.notes.extend(repair_notes)
    if short:
        trace.status = "rounding-infeasible"
        trace.notes.append(f"rounded schedule misses rate targets: {short}")
    elif converged:
        trace.status = "converged"
    else:
        trace.status = "iteration-limit"
    return a_bin, b_bin, trace


def _repair_binary_schedule_oma(
    a_bin: np.ndarray,
    b_bin: np.ndarray,
    margin: np.ndarray,
    full_rate: np.ndarray,
    targets: np.ndarray,
):
    """Orthogonal-benchmark version of the rounded-schedule cleanup.

    Same moves as the main repair, with the differences the slot structure
    forces: quality top-ups may only claim columns with no user at all
    (slots are exclusive), a user still short may then take a column from
    another quality user whose target survives the hand-off or, as a last
    resort, displace a security slot, a released quality slot's gain is
    the best security margin it frees up, and idle columns are granted to
    the security user with the lowest running average when its margin
    there is positive.
    """
    a = a_bin.copy()
    b = b_bin.copy()
    m_count, n_count = b.shape
    targets = np.asarray(targets, dtype=float)
    notes: list[str] = []
    shortfalls: dict[int, float] = {}

    added = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            continue
        have = float(np.sum(b[m] * full_rate[m]))
        if have >= targets[m] - 1e-9:
            continue
        free = np.nonzero(a.sum(axis=0) + b.sum(axis=0) < 0.5)[0]
        for n in free[np.argsort(-full_rate[m, free], kind="stable")]:
            b[m, n] = 1.0
            added += 1
            have += full_rate[m, n]
            if have >= targets[m] - 1e-9:
                break
    if added:
        notes.append(f"claimed {added} idle slots to meet quality-rate targets")

    moved = 0
    taken = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            continue
        have = float(np.sum(b[m] * full_rate[m]))
        while have < targets[m] - 1e-9:
            owners = np.argmax(b, axis=0)
            owned = b.sum(axis=0) > 0.5
            best_n, best_rate = -1, 0.0
            for n in np.nonzero(owned)[0]:
                donor = int(owners[n])
                if donor == m or full_rate[m, n] <= best_rate:
                    continue
                keep = float(np.sum(b[donor] * full_rate[donor])) - full_rate[donor, n]
                if keep >= targets[donor] - 1e-9:
                    best_n, best_rate = int(n), float(full_rate[m, n])
            if best_n >= 0:
                donor = int(owners[best_n])
                b[donor, best_n] = 0.0
                b[m, best_n] = 1.0
                have += best_rate
                moved += 1
                continue
            secure = np.nonzero(a.sum(axis=0) > 0.5)[0]
            if secure.size == 0:
                break
            n_star = int(secure[np.argmax(full_rate[m, secure])])
            if full_rate[m, n_star] <= 0.0:
                break
            a[:, n_star] = 0.0
            b[m, n_star] = 1.0
            have += full_rate[m, n_star]
            taken += 1
        if have < targets[m] - 1e-9:
            shortfalls[int(m)] = float(targets[m] - have)
    if moved:
        notes.append(f"reassigned {moved} quality slots between users")
    if taken:
        notes.append(f"converted {taken} security slots to quality duty")

    released = 0
    for m in range(m_count):
        if targets[m] <= 0.0:
            if np.any(b[m] > 0.5):
                released += int(np.sum(b[m] > 0.5))
                b[m] = 0.0
            continue
        while True:
            slack = float(np.sum(b[m] * full_rate[m])) - targets[m]
            sched = np.nonzero(b[m] > 0.5)[0]
            drop = [n for n in sched if full_rate[m, n] <= slack - 1e-9]
            if not drop:
                break
            gain = np.max(np.clip(margin[:, drop], 0.0, None), axis=0)
            b[m, drop[int(np.argmax(gain))]] = 0.0
            released += 1
    if released:
        notes.append(f"released {released} redundant quality slots")

    value = np.clip(margin, 0.0, None)
    means = (a * value).sum(axis=1) / n_count
    filled = 0
    for n in np.nonzero(a.sum(axis=0) + b.sum(axis=0) < 0.5)[0]:
        worthwhile = np.nonzero(value[:, n] > 1e-12)[0]
        if worthwhile.size == 0:
            continue
        k = worthwhile[int(np.argmin(means[worthwhile]))]
        a[k, n] = 1.0
        means[k] += value[k, n] / n_count
        filled += 1
    if filled:
        notes.append(f"assigned {filled} idle slots to security users")

    return a, b, shortfalls, notes


# --- OMA scheduling variant -------------------------------------------------


def build_scheduling_lp_oma(
    scenario: Scenario,
    q: np.ndarray,
    schedule_prev,
    relaxed: RelaxedSchedule,
    penalty_weight: float,
) -> LinearProgram:
    """Scheduling program for the orthogonal benchmark.

    One user per slot at full power: a slot granted to a security user is
    worth its full-power rate minus the strongest quality user's full-power
    intercept rate (a constant, so no bilinear expansion is needed), and a
    slot granted to a quality user delivers that user's full-power rate.
    Variables are the two indicator matrices plus the max-min slack.
    """
    a_prev, b_prev = schedule_prev
    k_count, m_count, n_count = scenario.num_su, scenario.num_qu, scenario.num_slots
    rho = scenario.rho
    h = gains_at(scenario, q, scenario.su_positions)
    g = gains_at(scenario, q, scenario.qu_positions)
    margin = np.log2(1.0 + rho * h) - np.log2(1.0 + rho * np.max(g, axis=0))[None, :]
    full_rate = np.log2(1.0 + rho * g)

    size = (k_count + m_count) * n_count + 1
    tau = size - 1
    b0 = k_count * n_count
    rows, cols, vals, rhs = [], [], [], []
    row = 0
    inv_n = 1.0 / n_count
    for k in range(k_count):
        rows.append(row), cols.append(tau), vals.append(1.0)
        for n in range(n_count):
            rows.append(row), cols.append(k * n_count + n), vals.append(-inv_n * margin[k, n])
        rhs.append(0.0)
        row += 1
    for m in range(m_count):
        gamma = scenario.qos_targets[m]
        if gamma <= 0.0:
            continue
        for n in range(n_count):
            rows.append(row), cols.append(b0 + m * n_count + n), vals.append(-full_rate[m, n])
        rhs.append(-gamma)
        row += 1
    for n in range(n_count):
        for k in range(k_count):
            rows.append(row), cols.append(k * n_count + n), vals.append(1.0)
        for m in range(m_count):
            rows.append(row), cols.append(b0 + m * n_count + n), vals.append(1.0)
        rhs.append(1.0)
        row += 1

    a_ub = sp.csr_matrix((np.array(vals), (np.array(rows), np.array(cols))), shape=(row, size))
    c = np.zeros(size)
    c[tau] = 1.0
    c[:b0] = -penalty_weight * _penalty_secant_slope(relaxed.a).ravel()
    c[b0:tau] = -penalty_weight * _penalty_secant_slope(relaxed.b).ravel()
    bounds = [(0.0, 1.0)] * (size - 1) + [(None, None)]
    return LinearProgram(c=c, a_ub=a_ub, b_ub=np.array(rhs), bounds=bounds, maximize=True)


def solve_scheduling_oma(
    scenario: Scenario,
    q: np.ndarray,
    a_init: np.ndarray,
    b_init: np.ndarray,
    cfg: PenaltyConfig = PenaltyConfig(),
):
    """Penalty loop for the orthogonal benchmark's joint slot assignment.

    Uses the same neutral-midpoint inner start as the main scheduling
    solve: the first rounds track the relaxation, the growing weight then
    anneals the indicators binary, so the result does not depend on the
    caller's schedule beyond precondition checks.
    """
    k_count, m_count, n_count = scenario.num_su, scenario.num_qu, scenario.num_slots
    a_start = np.clip(np.asarray(a_init, dtype=float), 0.0, 1.0)
    b_start = np.clip(np.asarray(b_init, dtype=float), 0.0, 1.0)
    if np.max(a_start.sum(axis=0) + b_start.sum(axis=0)) > 1.0 + 1e-9:
        raise ValueError("initial schedule exceeds one user per slot")
    a_cur = np.full((k_count, n_count), 0.5)
    b_cur = np.full((m_count, n_count), 0.5)
    full_rate = np.log2(1.0 + scenario.rho * gains_at(scenario, q, scenario.qu_positions))

    trace = BlockTrace()
    eta = cfg.penalty_init
    converged = False
    b0 = k_count * n_count
    for _ in range(cfg.max_iters):
        r_old = 1e-7
        for _ in range(cfg.max_iters):
            relaxed = relaxed_update(a_cur, b_cur)
            lp = build_scheduling_lp_oma(scenario, q, (a_cur, b_cur), relaxed, eta)
            res = solve_lp(lp)
            if res.status == "infeasible":
                raise ValueError(
                    "orthogonal scheduling infeasible: rate targets exceed what "
                    "dedicated full-power slots can deliver"
                )
            if res.status != "optimal":
                trace.notes.append(f"scheduling LP returned {res.status}; stopping")
                break
            x = res.x
            a_cur = np.clip(x[:b0].reshape(k_count, n_count), 0.0, 1.0)
            b_cur = np.clip(x[b0 : b0 + m_count * n_count].reshape(m_count, n_count), 0.0, 1.0)
            full_obj = float(x[b0 + m_count * n_count]) - _penalty_value(
                a_cur, b_cur, relaxed, eta
            )
            trace.objectives.append(full_obj)
            trace.iterations += 1
            if abs(full_obj - r_old) / max(abs(r_old), 1e-12) <= cfg.threshold:
                break
            r_old = full_obj
        kappa = _binary_distance(a_cur, b_cur)
        trace.kappa.append(kappa)
        if kappa <= cfg.threshold:
            converged = True
            break
        eta *= cfg.growth

    stacked, forced = _round_matrix_columns(np.vstack([a_cur, b_cur]), cfg.threshold)
    a_bin, b_bin = stacked[:k_count], stacked[k_count:]
    if forced:
        trace.notes.append("fractional columns remained; rounded to the largest entry")
    h = gains_at(scenario, q, scenario.su_positions)
    g = gains_at(scenario, q, scenario.qu_positions)
    margin = np.log2(1.0 + scenario.rho * h) - np.log2(
        1.0 + scenario.rho * np.max(g, axis=0)
    )[None, :]
    a_bin, b_bin, short, repair_notes = _repair_binary_schedule_oma(
        a_bin, b_bin, margin, full_rate, scenario.qos_targets
    )
    trace.notes.extend(repair_notes)
    if short:
        trace.status = "rounding-infeasible"
        trace.notes.append(f"rounded schedule misses rate targets: {short}")
    elif converged:
        trace.status = "converged"
    else:
        trace.status = "iteration-limit"
    return a_bin, b_bin, trace


# --- power block ------------------------------------------------------------


def solve_power(
    scenario: Scenario,
    a: np.ndarray,
    b: np.ndarray,
    q: np.ndarray,
    alpha_init: np.ndarray,
    omega: float = 1e-3,
    max_iters: int = 20,
):
    """Successive convexification of the per-slot confidential power split.

    Slots without a scheduled security user carry no confidential stream,
    so their split is pinned to zero (which only helps every remaining
    constraint).  Each surrogate keeps the convex terms exact (the security
    rate and the interference-limited intercept) and replaces the concave
    ones (the cancellation intercept and the quality rates) by tangents at
    the previous iterate, so every surrogate solution is feasible for the
    true problem and the true objective never decreases.

    A rate target unreachable even at a zero split everywhere comes back as
    status ``infeasible-qos`` with per-user shortfalls in the notes; a
    starting split that merely violates a reachable target is repaired
    before the loop starts.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    alpha_init = np.asarray(alpha_init, dtype=float)
    if np.min(alpha_init) < -1e-9 or np.max(alpha_init) > 1.0 + 1e-9:
        raise ValueError("alpha_init entries must lie in [0, 1]")
    n_count = scenario.num_slots
    rho = scenario.rho
    h = gains_at(scenario, q, scenario.su_positions)
    g = gains_at(scenario, q, scenario.qu_positions)

    su_slots, su_of, qu_of = _schedule_views(scenario, a, b)
    ns = len(su_slots)
    trace = BlockTrace()

    # Reachability: the best case for every quality target is a zero
    # confidential share in all of its slots.
    full_rate = np.log2(1.0 + rho * g)
    best_qos = np.sum(np.where(b > 0.5, full_rate, 0.0), axis=1)
    short = {
        int(m): float(scenario.qos_targets[m] - best_qos[m])
        for m in np.nonzero(best_qos < scenario.qos_targets - 1e-12)[0]
    }
    if short:
        trace.status = "infeasible-qos"
        trace.notes.append(f"rate targets unreachable at any power split: {short}")
        return alpha_init.copy(), trace

    alpha_work = np.zeros(n_count)
    if ns:
        alpha_work[su_slots] = np.clip(alpha_init[su_slots], 0.0, 1.0)
    report = evaluate(scenario, Solution(a=a, b=b, alpha1=alpha_work, q=q))
    if any(v.kind == "qos" for v in report.violations):
        repaired = qos_repair(scenario, Solution(a=a, b=b, alpha1=alpha_work, q=q))
        alpha_work = repaired.alpha1
        report = evaluate(scenario, Solution(a=a, b=b, alpha1=alpha_work, q=q))
        trace.notes.append("starting split missed a rate target; repaired before the loop")

    prev_obj = report.objective
    if ns == 0:
        trace.objectives.append(prev_obj)
        return alpha_work, trace

    # Static per-slot data in SU-slot order.
    slots_arr = np.array(su_slots, dtype=int)
    slot_h = rho * h[[su_of[n] for n in su_slots], slots_arr]
    slot_gstar = np.array(
        [rho * g[qu_of[n], n] if qu_of[n] >= 0 else 0.0 for n in su_slots]
    )
    active_su = sorted({su_of[n] for n in su_slots})
    row_of_su = {k: i for i, k in enumerate(active_su)}
    row_of_slot = np.array([row_of_su[su_of[n]] for n in su_slots], dtype=int)
    t1_extra = 1 if len(active_su) < scenario.num_su else 0
    t1_count = len(active_su) + t1_extra
    un_i, un_cf = [], []
    for i, n in enumerate(su_slots):
        for m in range(scenario.num_qu):
            if m != qu_of[n]:
                un_i.append(i)
                un_cf.append(rho * g[m, n])
    un_i = np.array(un_i, dtype=int)
    un_cf = np.array(un_cf)
    qos_rows = []
    for m in range(scenario.num_qu):
        if scenario.qos_targets[m] <= 0.0:
            continue
        members = np.array([i for i, n in enumerate(su_slots) if b[m, n] > 0.5], dtype=int)
        qos_rows.append((m, members, best_qos[m] - scenario.qos_targets[m]))

    dim = 2 * ns + 1
    tau = dim - 1
    inv_n = 1.0 / n_count
    status = None

    def unclipped_value(alpha_slots: np.ndarray) -> float:
        """The loop's own objective: min over SUs of the average secrecy
        margin without the per-slot positive clip.  The clipped model
        objective is blind to progress while a margin is still negative,
        which would stall the descent toward a zero split on dominated
        slots."""
        eve = np.zeros(ns)
        sched_mask = slot_gstar > 0.0
        eve[sched_mask] = np.log2(1.0 + slot_gstar[sched_mask] * alpha_slots[sched_mask])
        if un_i.size:
            leak = np.log2(1.0 + un_cf) - np.log2(
                1.0 + un_cf * (1.0 - alpha_slots[un_i])
            )
            np.maximum.at(eve, un_i, leak)
        per_slot = np.log2(1.0 + slot_h * alpha_slots) - eve
        sums = np.bincount(row_of_slot, weights=per_slot, minlength=len(active_su))
        worst = float(np.min(sums)) * inv_n
        if t1_extra:
            worst = min(worst, 0.0)
        return worst

    cur_val = unclipped_value(alpha_work[slots_arr])
    trace.objectives.append(cur_val)

    for _ in range(max_iters):
        ref = np.clip(alpha_work[slots_arr], 1e-9, 1.0 - 1e-9)
        blocks = []

        # Security-rate rows, exact: the max-min slack plus each SU's
        # average of (intercept bound minus its own rate); an extra plain
        # slack row caps the objective at zero when some SU never gets a
        # slot.
        def t1_values(x):
            per_slot = x[ns : 2 * ns] - np.log2(np.maximum(1.0 + slot_h * x[:ns], 1e-12))
            sums = np.bincount(row_of_slot, weights=per_slot, minlength=len(active_su))
            vals = x[tau] + inv_n * sums
            if t1_extra:
                vals = np.append(vals, x[tau])
            return vals

        def t1_jacobian(x):
            denom = 1.0 + slot_h * x[:ns]
            r = np.concatenate([row_of_slot, row_of_slot, np.arange(t1_count)])
            c = np.concatenate([np.arange(ns), ns + np.arange(ns), np.full(t1_count, tau)])
            v = np.concatenate(
                [-inv_n * slot_h / (LOG2 * denom), np.full(ns, inv_n), np.ones(t1_count)]
            )
            return sp.csr_matrix((v, (r, c)), shape=(t1_count, dim))

        def t1_hessian(x, w):
            denom = 1.0 + slot_h * x[:ns]
            diag = np.zeros(dim)
            diag[:ns] = w[row_of_slot] * inv_n * slot_h**2 / (LOG2 * denom**2)
            return sp.diags(diag)

        blocks.append(SmoothBlock(t1_count, t1_values, t1_jacobian, t1_hessian))

        # Cancellation intercept of the scheduled QU: concave, linearized.
        r2, c2, v2, rhs2 = [], [], [], []
        for i in range(ns):
            cf = slot_gstar[i]
            if cf <= 0.0:
                r2.append(len(rhs2)), c2.append(ns + i), v2.append(-1.0)
                rhs2.append(0.0)
                continue
            slope = cf / (LOG2 * (1.0 + cf * ref[i]))
            r2.append(len(rhs2)), c2.append(i), v2.append(slope)
            r2.append(len(rhs2)), c2.append(ns + i), v2.append(-1.0)
            rhs2.append(slope * ref[i] - math.log2(1.0 + cf * ref[i]))
        blocks.append(
            AffineBlock(sp.csr_matrix((v2, (r2, c2)), shape=(len(rhs2), dim)), np.array(rhs2))
        )

        # Interference-limited intercept of unscheduled QUs: convex, exact.
        if un_i.size:

            def t3_values(x):
                al = x[un_i]
                # Clamp the log argument: the line search may probe points
                # beyond the unit box, which must read as infeasible, not NaN.
                arg = np.maximum(1.0 + un_cf * (1.0 - al), 1e-12)
                return np.log2(1.0 + un_cf) - np.log2(arg) - x[ns + un_i]

            def t3_jacobian(x):
                al = x[un_i]
                slope = un_cf / (LOG2 * (1.0 + un_cf * (1.0 - al)))
                nr = un_i.size
                r = np.concatenate([np.arange(nr), np.arange(nr)])
                c = np.concatenate([un_i, ns + un_i])
                v = np.concatenate([slope, -np.ones(nr)])
                return sp.csr_matrix((v, (r, c)), shape=(nr, dim))

            def t3_hessian(x, w):
                al = x[un_i]
                diag = np.zeros(dim)
                np.add.at(diag, un_i, w * un_cf**2 / (LOG2 * (1.0 + un_cf * (1.0 - al)) ** 2))
                return sp.diags(diag)

            blocks.append(SmoothBlock(un_i.size, t3_values, t3_jacobian, t3_hessian))

        # Quality-rate rows: the confidential share eats into them
        # concavely, linearized conservatively.
        r4, c4, v4, rhs4 = [], [], [], []
        for m, members, bound in qos_rows:
            rhs_val = bound
            for i in members:
                cf = rho * g[m, su_slots[i]]
                slope = cf / (LOG2 * (1.0 + cf * ref[i]))
                r4.append(len(rhs4)), c4.append(int(i)), v4.append(slope)
                rhs_val += slope * ref[i] - math.log2(1.0 + cf * ref[i])
            rhs4.append(rhs_val)
        if rhs4:
            blocks.append(
                AffineBlock(
                    sp.csr_matrix((v4, (r4, c4)), shape=(len(rhs4), dim)), np.array(rhs4)
                )
            )

        # Unit box on the confidential share.
        eye = sp.eye(ns, dim, format="csr")
        blocks.append(
            AffineBlock(
                sp.vstack([eye, -eye], format="csr"),
                np.concatenate([np.ones(ns), np.zeros(ns)]),
            )
        )

        # Strictly feasible start: pad the intercept bound above every
        # intercept row and the slack below every security row.
        mu0 = np.zeros(ns)
        sched_mask = slot_gstar > 0.0
        mu0[sched_mask] = np.log2(1.0 + slot_gstar[sched_mask] * ref[sched_mask])
        if un_i.size:
            un_leak = np.log2(1.0 + un_cf) - np.log2(1.0 + un_cf * (1.0 - ref[un_i]))
            np.maximum.at(mu0, un_i, un_leak)
        mu0 += 1e-7
        per_slot0 = mu0 - np.log2(1.0 + slot_h * ref)
        sums0 = np.bincount(row_of_slot, weights=per_slot0, minlength=len(active_su))
        tau0 = -inv_n * np.max(sums0)
        if t1_extra:
            tau0 = min(tau0, 0.0)
        x0 = np.concatenate([ref, mu0, [tau0 - 1e-7]])

        c_obj = np.zeros(dim)
        c_obj[tau] = -1.0
        program = ConvexProgram(
            dimension=dim, objective=LinearObjective(c_obj), constraints=blocks, x0=x0
        )
        try:
            res = solve_convex(program)
        except ValueError as exc:
            trace.notes.append(f"surrogate start rejected: {exc}")
            status = "stalled"
            break
        if res.status != "optimal" or res.x is None:
            trace.notes.append(f"surrogate solve ended with {res.status}; keeping previous split")
            status = "stalled"
            break

        alpha_new = np.zeros(n_count)
        alpha_new[slots_arr] = np.clip(res.x[:ns], 0.0, 1.0)
        report = evaluate(scenario, Solution(a=a, b=b, alpha1=alpha_new, q=q))
        if any(v.kind == "qos" for v in report.violations):
            trace.notes.append("surrogate step broke a rate target; keeping previous split")
            status = "converged"
            break
        if report.objective < prev_obj - 1e-6:
            trace.notes.append(
                "surrogate step decreased the true objective; keeping previous split"
            )
            status = "converged"
            break
        new_val = unclipped_value(alpha_new[slots_arr])
        alpha_work = alpha_new
        prev_obj = report.objective
        trace.objectives.append(new_val)
        trace.iterations += 1
        if abs(new_val - cur_val) / max(abs(cur_val), 1e-12) <= omega:
            status = "converged"
            break
        cur_val = new_val

    trace.status = status or "iteration-limit"
    return alpha_work, trace


# --- trajectory block -------------------------------------------------------


def _range_rate(s, coeff, h2):
    """Rate against squared ground range: ``log2(1 + coeff / (s + h2))``.

    Convex and decreasing in ``s`` for any non-negative SNR coefficient.
    The denominator is clamped so that probe points beyond the domain read
    as huge rates (infeasible for upper-bound rows) instead of NaN.
    """
    return np.log2(1.0 + coeff / np.maximum(s + h2, 1e-9))


def _range_rate_slope(s, coeff, h2):
    d = s + h2
    return -coeff / (LOG2 * d * (d + coeff))


def _range_rate_curvature(s, coeff, h2):
    d = s + h2
    return coeff * (2.0 * d + coeff) / (LOG2 * d**2 * (d + coeff) ** 2)


def _straight_chain(scenario: Scenario) -> np.ndarray:
    """Evenly spaced slot positions along the start-to-finish segment."""
    t = (np.arange(1, scenario.num_slots + 1) / (scenario.num_slots + 1))[:, None]
    return scenario.q_initial[None, :] + t * (scenario.q_final - scenario.q_initial)[None, :]


def _strictify_path(scenario: Scenario, q: np.ndarray) -> np.ndarray:
    """Pull a path that touches the mobility boundary slightly toward the
    (feasible) straight chain, and off any ground position it sits on."""
    out = q.copy()
    chain = np.vstack([scenario.q_initial[None, :], out, scenario.q_final[None, :]])
    steps = np.linalg.norm(np.diff(chain, axis=0), axis=1)
    if np.max(steps) > scenario.d_max - 1e-9:
        straight = _straight_chain(scenario)
        out = straight + (1.0 - 1e-6) * (out - straight)
    users = np.vstack([scenario.su_positions, scenario.qu_positions])
    for shift in ((1e-4, 0.0), (0.0, 3e-4)):
        d2 = np.min(np.sum((users[:, None, :] - out[None, :, :]) ** 2, axis=2), axis=0)
        close = d2 < 1e-8
        if not np.any(close):
            break
        out[close] += np.array(shift)
    return out


def solve_trajectory(
    scenario: Scenario,
    a: np.ndarray,
    b: np.ndarray,
    alpha1: np.ndarray,
    q_init: np.ndarray,
    omega: float = 1e-3,
    max_iters: int = 20,
):
    """Successive convexification of the flight path at a fixed schedule and
    power split.

    Every rate is a convex decreasing function of the squared ground range
    to one user.  Lower-bound slacks on eavesdropper ranges make intercept
    terms convex; security-rate and quality-rate terms get tangents in the
    squared range with the range itself kept exact, so each surrogate
    solution is feasible for the true problem; mobility stays an exact
    convex constraint.  A surrogate step that fails to improve the true
    objective is rejected and the previous path kept, so the returned path
    is never worse than the starting one.

    A starting path that violates mobility limits is an error; one that
    misses a reachable rate target comes back unchanged with status
    ``infeasible-qos`` (the power or scheduling block has to fix that).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    alpha1 = np.asarray(alpha1, dtype=float)
    q_start = np.asarray(q_init, dtype=float).copy()
    n_count = scenario.num_slots
    if q_start.shape != (n_count, 2):
        raise ValueError(f"trajectory shape {q_start.shape} != ({n_count}, 2)")
    trace = BlockTrace()

    report = evaluate(scenario, Solution(a=a, b=b, alpha1=alpha1, q=q_start))
    mobility = [v for v in report.violations if v.kind == "mobility"]
    if mobility:
        raise ValueError(f"starting path violates mobility limits: {mobility}")
    qos_short = {v.index[0]: v.magnitude for v in report.violations if v.kind == "qos"}
    if qos_short:
        trace.status = "infeasible-qos"
        trace.notes.append(f"rate targets missed at the starting path: {qos_short}")
        return q_start, trace

    su_slots, su_of, qu_of = _schedule_views(scenario, a, b)
    ns = len(su_slots)
    if ns == 0:
        # No security slot: the objective is identically zero and the
        # starting path already meets every rate target, so keep it.
        trace.objectives.append(report.objective)
        trace.notes.append("no security slots; path kept")
        return q_start, trace
    rho_beta = scenario.rho * scenario.ref_gain
    h2 = scenario.height**2
    b1 = rho_beta * np.clip(alpha1, 0.0, 1.0)  # confidential-stream coefficient
    b2 = rho_beta - b1  # quality-stream coefficient
    users = scenario.qu_positions
    d_max2 = scenario.d_max**2
    inv_n = 1.0 / n_count

    # Variable layout: path coordinates, range bounds, intercept bounds,
    # then the max-min slack.  A range bound exists for every QU on every
    # SU slot, and for a scheduled QU on any other slot whose confidential
    # coefficient is positive (its quality rate then depends on the bound).
    pi_pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for n in su_slots:
        for m in range(scenario.num_qu):
            pi_pairs.append((m, n))
            seen.add((m, n))
    for m in range(scenario.num_qu):
        if scenario.qos_targets[m] <= 0.0:
            continue
        for n in range(n_count):
            if b[m, n] > 0.5 and b1[n] > 0.0 and (m, n) not in seen:
                pi_pairs.append((m, n))
                seen.add((m, n))
    npi = len(pi_pairs)
    pi_col = {pair: 2 * n_count + j for j, pair in enumerate(pi_pairs)}
    mu_col = {n: 2 * n_count + npi + i for i, n in enumerate(su_slots)}
    dim = 2 * n_count + npi + ns + 1
    tau = dim - 1

    slots_arr = np.array(su_slots, dtype=int)
    su_of_slot = np.array([su_of[n] for n in su_slots], dtype=int)
    active_su = sorted(set(su_of_slot.tolist()))
    row_of_su = {k: i for i, k in enumerate(active_su)}
    row_of_slot = np.array([row_of_su[k] for k in su_of_slot], dtype=int)
    t1_extra = 1 if len(active_su) < scenario.num_su else 0
    t1_count = len(active_su) + t1_extra
    su_pos_of_slot = scenario.su_positions[su_of_slot]
    b1_s = b1[slots_arr]
    mu_cols = np.array([mu_col[n] for n in su_slots], dtype=int)

    pi_m = np.array([m for m, _ in pi_pairs], dtype=int)
    pi_n = np.array([n for _, n in pi_pairs], dtype=int)
    pi_cols = 2 * n_count + np.arange(npi)

    sl_rows = [
        (pi_col[(qu_of[n], n)], mu_col[n], b1[n])
        for n in su_slots
        if qu_of[n] >= 0 and b1[n] > 0.0
    ]
    zero_mu = [mu_col[n] for n in su_slots if qu_of[n] >= 0 and b1[n] <= 0.0]
    ul_rows = [
        (pi_col[(m, n)], mu_col[n], m, n)
        for n in su_slots
        for m in range(scenario.num_qu)
        if m != qu_of[n]
    ]
    if sl_rows:
        sl_pi = np.array([t[0] for t in sl_rows], dtype=int)
        sl_mu = np.array([t[1] for t in sl_rows], dtype=int)
        sl_cf = np.array([t[2] for t in sl_rows])
    if ul_rows:
        ul_pi = np.array([t[0] for t in ul_rows], dtype=int)
        ul_mu = np.array([t[1] for t in ul_rows], dtype=int)
        ul_m = np.array([t[2] for t in ul_rows], dtype=int)
        ul_n = np.array([t[3] for t in ul_rows], dtype=int)

    qos_groups = []
    for m in range(scenario.num_qu):
        if scenario.qos_targets[m] <= 0.0:
            continue
        members = np.array([n for n in range(n_count) if b[m, n] > 0.5], dtype=int)
        pis = np.array([pi_col[(m, n)] if b1[n] > 0.0 else -1 for n in members], dtype=int)
        qos_groups.append((m, members, pis))
    nqos = len(qos_groups)
    if nqos:
        qg_row = np.concatenate(
            [np.full(len(members), i) for i, (_, members, _) in enumerate(qos_groups)]
        )
        qg_m = np.concatenate([np.full(len(members), m) for m, members, _ in qos_groups])
        qg_n = np.concatenate([members for _, members, _ in qos_groups])
        qg_pi = np.concatenate([pis for _, _, pis in qos_groups])
        qg_mask = qg_pi >= 0
        qg_gamma = np.array([scenario.qos_targets[m] for m, _, _ in qos_groups])

    # Mobility jacobian sparsity is static: row i covers the step into
    # slot i (source q[i-1] when i >= 1, target q[i] when i <= N-1).
    mob_rows, mob_cols, mob_sign = [], [], []
    for i in range(n_count + 1):
        if i >= 1:
            mob_rows += [i, i]
            mob_cols += [2 * (i - 1), 2 * (i - 1) + 1]
            mob_sign += [-1.0, -1.0]
        if i <= n_count - 1:
            mob_rows += [i, i]
            mob_cols += [2 * i, 2 * i + 1]
            mob_sign += [1.0, 1.0]
    mob_rows = np.array(mob_rows, dtype=int)
    mob_cols = np.array(mob_cols, dtype=int)
    mob_sign = np.array(mob_sign)

    prev_obj = report.objective
    trace.objectives.append(prev_obj)
    q_work = q_start
    status = None

    for _ in range(max_iters):
        q_ref = _strictify_path(scenario, q_work)
        d2_qu = np.sum((users[:, None, :] - q_ref[None, :, :]) ** 2, axis=2)
        d2_su_ref = np.sum((su_pos_of_slot - q_ref[slots_arr]) ** 2, axis=1)

        blocks = []

        # Security-rate rows: tangent in the squared range with the squared
        # range itself exact, so each row lower-bounds the true rate while
        # staying convex in the path.
        t1_c0 = _range_rate(d2_su_ref, b1_s, h2)
        t1_e0 = _range_rate_slope(d2_su_ref, b1_s, h2)

        def t1_values(x):
            qq = x[: 2 * n_count].reshape(n_count, 2)
            d2 = np.sum((qq[slots_arr] - su_pos_of_slot) ** 2, axis=1)
            lb = t1_c0 + t1_e0 * (d2 - d2_su_ref)
            sums = np.bincount(row_of_slot, weights=x[mu_cols] - lb, minlength=len(active_su))
            vals = x[tau] + inv_n * sums
            if t1_extra:
                vals = np.append(vals, x[tau])
            return vals

        def t1_jacobian(x):
            qq = x[: 2 * n_count].reshape(n_count, 2)
            diff = qq[slots_arr] - su_pos_of_slot
            gx = -inv_n * t1_e0 * 2.0 * diff[:, 0]
            gy = -inv_n * t1_e0 * 2.0 * diff[:, 1]
            r = np.concatenate([row_of_slot] * 3 + [np.arange(t1_count)])
            c = np.concatenate([2 * slots_arr, 2 * slots_arr + 1, mu_cols, np.full(t1_count, tau)])
            v = np.concatenate([gx, gy, np.full(ns, inv_n), np.ones(t1_count)])
            return sp.csr_matrix((v, (r, c)), shape=(t1_count, dim))

        def t1_hessian(x, w):
            diag = np.zeros(dim)
            add = -2.0 * inv_n * t1_e0 * w[row_of_slot]
            np.add.at(diag, 2 * slots_arr, add)
            np.add.at(diag, 2 * slots_arr + 1, add)
            return sp.diags(diag)

        blocks.append(SmoothBlock(t1_count, t1_values, t1_jacobian, t1_hessian))

        # Range-bound linkage: each bound stays under the tangent of its
        # squared range, hence under the squared range itself; bounds are
        # non-negative.
        if npi:
            grad = 2.0 * (q_ref[pi_n] - users[pi_m])
            rows = np.concatenate([np.arange(npi)] * 3)
            cols = np.concatenate([pi_cols, 2 * pi_n, 2 * pi_n + 1])
            vals = np.concatenate([np.ones(npi), -grad[:, 0], -grad[:, 1]])
            rhs = d2_qu[pi_m, pi_n] - np.sum(grad * q_ref[pi_n], axis=1)
            blocks.append(
                AffineBlock(sp.csr_matrix((vals, (rows, cols)), shape=(npi, dim)), rhs)
            )
            blocks.append(
                AffineBlock(
                    sp.csr_matrix((-np.ones(npi), (np.arange(npi), pi_cols)), shape=(npi, dim)),
                    np.zeros(npi),
                )
            )

        # Cancellation intercept of the scheduled QU: exact convex in its
        # range bound; with no confidential power the intercept is zero and
        # the bound only needs to stay non-negative.
        if zero_mu:
            blocks.append(
                AffineBlock(
                    sp.csr_matrix(
                        (-np.ones(len(zero_mu)), (np.arange(len(zero_mu)), np.array(zero_mu))),
                        shape=(len(zero_mu), dim),
                    ),
                    np.zeros(len(zero_mu)),
                )
            )
        if sl_rows:

            def t3_values(x):
                return _range_rate(x[sl_pi], sl_cf, h2) - x[sl_mu]

            def t3_jacobian(x):
                nr = sl_pi.size
                r = np.concatenate([np.arange(nr), np.arange(nr)])
                c = np.concatenate([sl_pi, sl_mu])
                v = np.concatenate([_range_rate_slope(x[sl_pi], sl_cf, h2), -np.ones(nr)])
                return sp.csr_matrix((v, (r, c)), shape=(nr, dim))

            def t3_hessian(x, w):
                diag = np.zeros(dim)
                np.add.at(diag, sl_pi, w * _range_rate_curvature(x[sl_pi], sl_cf, h2))
                return sp.diags(diag)

            blocks.append(SmoothBlock(sl_pi.size, t3_values, t3_jacobian, t3_hessian))

        # Interference-limited intercept of unscheduled QUs: the full-power
        # term exact in the range bound, the interference term a tangent in
        # the squared range (kept exact); together an upper bound on the
        # true intercept.
        if ul_rows:
            ul_u0 = d2_qu[ul_m, ul_n]
            ul_c2 = _range_rate(ul_u0, b2[ul_n], h2)
            ul_d2 = -_range_rate_slope(ul_u0, b2[ul_n], h2)

            def t4_values(x):
                qq = x[: 2 * n_count].reshape(n_count, 2)
                dd = np.sum((qq[ul_n] - users[ul_m]) ** 2, axis=1)
                return (
                    _range_rate(x[ul_pi], rho_beta, h2)
                    + ul_d2 * (dd - ul_u0)
                    - ul_c2
                    - x[ul_mu]
                )

            def t4_jacobian(x):
                qq = x[: 2 * n_count].reshape(n_count, 2)
                diff = qq[ul_n] - users[ul_m]
                nr = ul_pi.size
                r = np.concatenate([np.arange(nr)] * 4)
                c = np.concatenate([ul_pi, ul_mu, 2 * ul_n, 2 * ul_n + 1])
                v = np.concatenate(
                    [
                        _range_rate_slope(x[ul_pi], rho_beta, h2),
                        -np.ones(nr),
                        2.0 * ul_d2 * diff[:, 0],
                        2.0 * ul_d2 * diff[:, 1],
                    ]
                )
                return sp.csr_matrix((v, (r, c)), shape=(nr, dim))

            def t4_hessian(x, w):
                diag = np.zeros(dim)
                np.add.at(diag, ul_pi, w * _range_rate_curvature(x[ul_pi], rho_beta, h2))
                np.add.at(diag, 2 * ul_n, 2.0 * w * ul_d2)
                np.add.at(diag, 2 * ul_n + 1, 2.0 * w * ul_d2)
                return sp.diags(diag)

            blocks.append(SmoothBlock(ul_pi.size, t4_values, t4_jacobian, t4_hessian))

        # Quality-rate rows: full-power term tangent in the squared range,
        # confidential-interference term exact in the range bound.
        if nqos:
            qg_u0 = d2_qu[qg_m, qg_n]
            qg_c3 = _range_rate(qg_u0, rho_beta, h2)
            qg_e3 = _range_rate_slope(qg_u0, rho_beta, h2)

            def t5_values(x):
                qq = x[: 2 * n_count].reshape(n_count, 2)
                dd = np.sum((qq[qg_n] - users[qg_m]) ** 2, axis=1)
                contrib = qg_c3 + qg_e3 * (dd - qg_u0)
                totals = np.bincount(qg_row, weights=contrib, minlength=nqos)
                if np.any(qg_mask):
                    back = _range_rate(x[qg_pi[qg_mask]], b1[qg_n[qg_mask]], h2)
                    totals -= np.bincount(qg_row[qg_mask], weights=back, minlength=nqos)
                return qg_gamma - totals

            def t5_jacobian(x):
                qq = x[: 2 * n_count].reshape(n_count, 2)
                diff = qq[qg_n] - users[qg_m]
                gx = -qg_e3 * 2.0 * diff[:, 0]
                gy = -qg_e3 * 2.0 * diff[:, 1]
                r = np.concatenate([qg_row, qg_row, qg_row[qg_mask]])
                c = np.concatenate([2 * qg_n, 2 * qg_n + 1, qg_pi[qg_mask]])
                v = np.concatenate(
                    [gx, gy, _range_rate_slope(x[qg_pi[qg_mask]], b1[qg_n[qg_mask]], h2)]
                )
                return sp.csr_matrix((v, (r, c)), shape=(nqos, dim))

            def t5_hessian(x, w):
                diag = np.zeros(dim)
                add = -2.0 * qg_e3 * w[qg_row]
                np.add.at(diag, 2 * qg_n, add)
                np.add.at(diag, 2 * qg_n + 1, add)
                if np.any(qg_mask):
                    np.add.at(
                        diag,
                        qg_pi[qg_mask],
                        w[qg_row[qg_mask]]
                        * _range_rate_curvature(x[qg_pi[qg_mask]], b1[qg_n[qg_mask]], h2),
                    )
                return sp.diags(diag)

            blocks.append(SmoothBlock(nqos, t5_values, t5_jacobian, t5_hessian))

        # Mobility: exact convex squared-step limits over the whole chain.
        def _chain(qq):
            return np.vstack([scenario.q_initial[None, :], qq, scenario.q_final[None, :]])

        def t6_values(x):
            qq = x[: 2 * n_count].reshape(n_count, 2)
            return np.sum(np.diff(_chain(qq), axis=0) ** 2, axis=1) - d_max2

        def t6_jacobian(x):
            qq = x[: 2 * n_count].reshape(n_count, 2)
            delta = np.diff(_chain(qq), axis=0)
            flat = delta[mob_rows, mob_cols % 2]
            return sp.csr_matrix(
                (2.0 * mob_sign * flat, (mob_rows, mob_cols)), shape=(n_count + 1, dim)
            )

        def t6_hessian(x, w):
            rows = [mob_cols]
            cols = [mob_cols]
            vals = [2.0 * w[mob_rows]]
            inner = np.arange(1, n_count)  # steps with both endpoints free
            if inner.size:
                for ax in (0, 1):
                    rows.append(2 * inner + ax)
                    cols.append(2 * (inner - 1) + ax)
                    vals.append(-2.0 * w[inner])
                    rows.append(2 * (inner - 1) + ax)
                    cols.append(2 * inner + ax)
                    vals.append(-2.0 * w[inner])
            return sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(dim, dim),
            )

        blocks.append(SmoothBlock(n_count + 1, t6_values, t6_jacobian, t6_hessian))

        # Strictly feasible start.
        x0 = np.zeros(dim)
        x0[: 2 * n_count] = q_ref.ravel()
        u0_all = d2_qu[pi_m, pi_n]
        pi0 = u0_all * (1.0 - 1e-9) - np.minimum(1e-9, 0.4 * u0_all)
        x0[pi_cols] = pi0
        mu0 = np.zeros(ns)
        mu_base = 2 * n_count + npi
        if sl_rows:
            np.maximum.at(
                mu0, sl_mu - mu_base, _range_rate(pi0[sl_pi - 2 * n_count], sl_cf, h2)
            )
        if ul_rows:
            leak0 = _range_rate(pi0[ul_pi - 2 * n_count], rho_beta, h2) - ul_c2
            np.maximum.at(mu0, ul_mu - mu_base, leak0)
        mu0 += 1e-7
        x0[mu_base : mu_base + ns] = mu0
        lb0 = _range_rate(d2_su_ref, b1_s, h2)
        sums0 = np.bincount(row_of_slot, weights=mu0 - lb0, minlength=len(active_su))
        tau0 = -inv_n * np.max(sums0)
        if t1_extra:
            tau0 = min(tau0, 0.0)
        x0[tau] = tau0 - 1e-7

        c_obj = np.zeros(dim)
        c_obj[tau] = -1.0
        program = ConvexProgram(
            dimension=dim, objective=LinearObjective(c_obj), constraints=blocks, x0=x0
        )
        try:
            res = solve_convex(program)
        except ValueError as exc:
            trace.notes.append(f"surrogate start rejected: {exc}")
            status = "stalled"
            break
        if res.status != "optimal" or res.x is None:
            trace.notes.append(f"surrogate solve ended with {res.status}; keeping previous path")
            status = "stalled"
            break

        q_new = res.x[: 2 * n_count].reshape(n_count, 2)
        report = evaluate(scenario, Solution(a=a, b=b, alpha1=alpha1, q=q_new))
        bad = [v for v in report.violations if v.kind in ("mobility", "qos")]
        if bad:
            trace.notes.append(
                f"surrogate step left the feasible set ({bad}); keeping previous path"
            )
            status = "converged"
            break
        if report.objective < prev_obj - 1e-6:
            trace.notes.append("surrogate step decreased the true objective; keeping previous path")
            status = "converged"
            break
        q_work = q_new
        trace.objectives.append(report.objective)
        trace.iterations += 1
        if abs(report.objective - prev_obj) / max(abs(prev_obj), 1e-12) <= omega:
            status = "converged"
            break
        prev_obj = report.objective

    trace.status = status or "iteration-limit"
    return q_work, trace
