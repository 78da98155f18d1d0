"""Scenario generation, baseline transmission schemes, parameter sweeps, and
small-instance exhaustive oracles.

The schemes mirror the benchmark families used in the experiments: the
closed-form planner and the full iterative optimizer in non-orthogonal and
orthogonal modes, plus degraded variants that pin one design component
(equal power split, nearest-user pairing, a fixed square patrol path) and
optionally re-optimize the remaining blocks.  Sweeps share user draws
across swept values (common random numbers) so curves differ only through
the swept parameter.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ao import optimize
from .model import (
    Scenario,
    Solution,
    check_feasible,
    evaluate,
    gains_at,
    slot_rates,
)
from .planner import (
    closed_form_power,
    pair_users,
    plan,
    qos_repair,
    schedule_slots,
    synthesize_trajectory,
)

__all__ = [
    "SCHEMES",
    "ExperimentSpec",
    "ResultTable",
    "TrialRow",
    "gen_scenario",
    "oracle_exhaustive",
    "run_scheme",
    "sweep",
]

SCHEMES = (
    "planner-noma",
    "iterative-noma",
    "iterative-oma",
    "equal-power",
    "equal-power-iterated",
    "near-near",
    "near-near-iterated",
    "simplified-trajectory",
    "simplified-trajectory-iterated",
)

_ALIASES = {"iterative-equal-power": "equal-power-iterated"}

_SWEPT_KEYS = {"power": "total_power_dbm", "qos": "qos_target", "period": "flight_period"}

_SQUARE_CORNERS = np.array([[50.0, 50.0], [50.0, -50.0], [-50.0, -50.0], [-50.0, 50.0]])


def gen_scenario(seed: int, params: dict | None = None) -> Scenario:
    """Random scenario at the experiment defaults.

    Users fall uniformly over the 100 m square centred at the origin
    (security users drawn first), the platform starts and ends at the
    origin, and every other number takes its default unless overridden in
    ``params``.  Overrides never touch the position draw, so two scenarios
    with the same seed and user counts share user locations no matter what
    else differs; that is what makes parameter sweeps comparable
    trial-by-trial.
    """
    p = dict(params or {})
    num_su = int(p.pop("num_su", 3))
    num_qu = int(p.pop("num_qu", 3))
    side = float(p.pop("side", 100.0))
    rng = np.random.default_rng(seed)
    half = side / 2.0
    su = rng.uniform(-half, half, size=(num_su, 2))
    qu = rng.uniform(-half, half, size=(num_qu, 2))

    flight_period = float(p.pop("flight_period", 100.0))
    slot_length = float(p.pop("slot_length", 1.0))
    num_slots = int(p.pop("num_slots", round(flight_period / slot_length)))
    qos_target = p.pop("qos_target", 10.0)
    qos_targets = p.pop("qos_targets", None)
    if qos_targets is None:
        qos_targets = np.full(num_qu, float(qos_target))
    scenario = Scenario(
        su_positions=su,
        qu_positions=qu,
        height=float(p.pop("height", 100.0)),
        flight_period=flight_period,
        slot_length=slot_length,
        num_slots=num_slots,
        max_speed=float(p.pop("max_speed", 20.0)),
        q_initial=np.asarray(p.pop("q_initial", (0.0, 0.0)), dtype=float),
        q_final=np.asarray(p.pop("q_final", (0.0, 0.0)), dtype=float),
        total_power_dbm=float(p.pop("total_power_dbm", 20.0)),
        noise_power_dbm=float(p.pop("noise_power_dbm", -100.0)),
        ref_gain_db=float(p.pop("ref_gain_db", -70.0)),
        qos_targets=np.asarray(qos_targets, dtype=float),
    )
    if p:
        raise ValueError(f"unknown scenario parameters {sorted(p)}")
    return scenario


# ---------------------------------------------------------------------------
# Baseline construction helpers.


def _equal_power_start(scenario: Scenario) -> Solution:
    """Planner output with the power split forced to one half per slot,
    repaired only when a rate target breaks."""
    sol = plan(scenario)
    sol.alpha1 = np.full(scenario.num_slots, 0.5)
    if any(v.kind == "qos" for v in check_feasible(scenario, sol)):
        sol = qos_repair(scenario, sol)
    return sol


def _near_near_start(scenario: Scenario) -> Solution:
    """Planner trajectory with the pairing rule replaced by proximity:
    each slot serves the security user and the quality user currently
    nearest the platform."""
    q = plan(scenario).q
    su_d = np.linalg.norm(q[None, :, :] - scenario.su_positions[:, None, :], axis=2)
    qu_d = np.linalg.norm(q[None, :, :] - scenario.qu_positions[:, None, :], axis=2)
    n = scenario.num_slots
    a = np.zeros((scenario.num_su, n))
    b = np.zeros((scenario.num_qu, n))
    a[np.argmin(su_d, axis=0), np.arange(n)] = 1.0
    b[np.argmin(qu_d, axis=0), np.arange(n)] = 1.0
    return closed_form_power(scenario, a, b, q)


def _perimeter_path(scenario: Scenario) -> np.ndarray:
    """Square patrol path: head for the nearest corner of the covered
    square, lap the perimeter at full speed, and peel off just in time to
    make the terminal position.

    The peel-off rule keeps the remaining distance to the terminal point
    within what the remaining slots (plus the final hop) can cover, so the
    returned path always satisfies the mobility chain.
    """
    n = scenario.num_slots
    d_max = scenario.d_max
    final = scenario.q_final.astype(float)
    pos = scenario.q_initial.astype(float).copy()
    if np.linalg.norm(pos - final) > (n + 1) * d_max + 1e-9:
        raise ValueError(
            f"terminal position unreachable: {np.linalg.norm(pos - final):.1f} m "
            f"with {n + 1} hops of {d_max:.1f} m"
        )
    corner = int(np.argmin(np.linalg.norm(_SQUARE_CORNERS - pos, axis=1)))
    target = _SQUARE_CORNERS[corner]
    q = np.zeros((n, 2))
    for i in range(n):
        # Advance one full-speed step along the patrol polyline, turning
        # corners mid-step when the leg runs out.
        cand = pos.copy()
        budget = d_max
        tgt = target
        nxt = corner
        while budget > 1e-12:
            leg = float(np.linalg.norm(tgt - cand))
            if leg > budget:
                cand = cand + (tgt - cand) * (budget / leg)
                budget = 0.0
            else:
                cand = tgt.copy()
                budget -= leg
                nxt = (nxt + 1) % len(_SQUARE_CORNERS)
                tgt = _SQUARE_CORNERS[nxt]
        if np.linalg.norm(cand - final) <= (n - i) * d_max - 1e-9:
            pos, corner, target = cand, nxt, tgt
        else:
            gap = float(np.linalg.norm(final - pos))
            pos = final.copy() if gap <= d_max else pos + (final - pos) * (d_max / gap)
        q[i] = pos
    return q


def _simplified_trajectory_start(scenario: Scenario) -> Solution:
    q = _perimeter_path(scenario)
    a, b = schedule_slots(scenario, q, pair_users(scenario))
    return closed_form_power(scenario, a, b, q)


def _oma_start(scenario: Scenario) -> Solution:
    """Orthogonal starting point: hover over every user, quality users
    budgeted enough full-power slots to meet their targets, nearest-user
    schedule, then targeted slot flips until every target is met.

    Quality hover budgets come from the overhead rate (the best any slot
    can deliver at full power), so they are lower bounds; the flip pass
    closes whatever the actual path leaves short.
    """
    n = scenario.num_slots
    rho = scenario.rho
    overhead = math.log2(1.0 + rho * scenario.ref_gain / scenario.height**2)
    budgets = [
        math.ceil(t / overhead) if t > 0 else 0 for t in scenario.qos_targets
    ]
    points = [p.copy() for p in scenario.su_positions]
    su_share = max(1.0, (n - sum(budgets)) / max(scenario.num_su, 1))
    weights = [su_share] * scenario.num_su
    for m, budget in enumerate(budgets):
        if budget > 0:
            points.append(scenario.qu_positions[m].copy())
            weights.append(float(budget))
    q, _ = synthesize_trajectory(scenario, points, weights)

    su_d = np.linalg.norm(q[None, :, :] - scenario.su_positions[:, None, :], axis=2)
    qu_d = np.linalg.norm(q[None, :, :] - scenario.qu_positions[:, None, :], axis=2)
    owner = np.argmin(np.vstack([su_d, qu_d]), axis=0)
    a = np.zeros((scenario.num_su, n))
    b = np.zeros((scenario.num_qu, n))
    for slot in range(n):
        if owner[slot] < scenario.num_su:
            a[owner[slot], slot] = 1.0
        else:
            b[owner[slot] - scenario.num_su, slot] = 1.0

    # Full-power quality rates per slot, used to close rate shortfalls by
    # flipping slots: first from security users, then from quality users
    # that hold slack beyond their own target.
    full = np.log2(1.0 + rho * gains_at(scenario, q, scenario.qu_positions))
    delivered = np.sum(np.where(b > 0.5, full, 0.0), axis=1)
    for m in np.argsort(-(scenario.qos_targets - delivered)):
        while delivered[m] < scenario.qos_targets[m] - 1e-9:
            su_slots = np.nonzero(a.sum(axis=0) > 0.5)[0]
            flip = None
            if su_slots.size:
                flip = int(su_slots[np.argmax(full[m, su_slots])])
                a[:, flip] = 0.0
            else:
                best_gain = 0.0
                for j in range(scenario.num_qu):
                    if j == m:
                        continue
                    for slot in np.nonzero(b[j] > 0.5)[0]:
                        slack_after = delivered[j] - full[j, slot] - scenario.qos_targets[j]
                        if slack_after >= -1e-9 and full[m, slot] > best_gain:
                            best_gain, flip = full[m, slot], int(slot)
                if flip is None:
                    break  # nothing left to flip; the feasibility check reports it
                j = int(np.argmax(b[:, flip]))
                b[j, flip] = 0.0
                delivered[j] -= full[j, flip]
            b[m, flip] = 1.0
            delivered[m] += full[m, flip]

    sol = Solution(a=a, b=b, alpha1=np.clip(a.sum(axis=0), 0.0, 1.0), q=q)
    violations = check_feasible(scenario, sol)
    if violations:
        raise ValueError(f"orthogonal starting point infeasible: {violations}")
    return sol


_STARTS = {
    "iterative-noma": plan,
    "iterative-oma": _oma_start,
    "equal-power-iterated": _equal_power_start,
    "near-near-iterated": _near_near_start,
    "simplified-trajectory-iterated": _simplified_trajectory_start,
}

_PINNED_BLOCKS = {
    "equal-power-iterated": ("scheduling", "trajectory"),
    "near-near-iterated": ("power", "trajectory"),
    "simplified-trajectory-iterated": ("scheduling", "power"),
}

_ONE_SHOT = {
    "planner-noma": plan,
    "equal-power": _equal_power_start,
    "near-near": _near_near_start,
    "simplified-trajectory": _simplified_trajectory_start,
}


def _run_scheme(scheme: str, scenario: Scenario, omega: float, max_iters: int):
    """Build one scheme.  Returns ``(solution, report, trace, start)``
    where ``trace`` is None for one-shot schemes and ``start`` is the
    objective before any iteration."""
    name = _ALIASES.get(str(scheme).lower(), str(scheme).lower())
    if name not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; valid names {sorted(SCHEMES)}")
    if name in _ONE_SHOT:
        sol = _ONE_SHOT[name](scenario)
        report = evaluate(scenario, sol)
        return sol, report, None, report.objective
    init = _STARTS[name](scenario)
    start = evaluate(scenario, init).objective
    kwargs = {"omega": omega, "max_iters": max_iters}
    if name == "iterative-oma":
        kwargs["mode"] = "oma"
    elif name in _PINNED_BLOCKS:
        kwargs["blocks"] = _PINNED_BLOCKS[name]
    sol, trace = optimize(scenario, init, **kwargs)
    return sol, evaluate(scenario, sol), trace, start


def run_scheme(scheme: str, scenario: Scenario, omega: float = 1e-3, max_iters: int = 20):
    """Build and score one transmission scheme on one scenario.

    Iterated schemes start from their degraded baseline and re-optimize
    only the blocks the scheme does not pin.  Infeasibility (a rate target
    out of reach for the scheme's fixed components) surfaces as a
    ``ValueError``.
    """
    sol, report, _, _ = _run_scheme(scheme, scenario, omega, max_iters)
    return sol, report


# ---------------------------------------------------------------------------
# Sweeps.


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a parameter name, its values, and what to run at each.

    ``parameter`` is one of ``power`` (transmit power, dBm), ``qos``
    (per-user rate target, bits/Hz), or ``period`` (flight period, s).
    Trials re-draw user locations from ``seed + trial``.
    """

    parameter: str
    values: tuple
    trials: int
    seed: int
    schemes: tuple

    def __post_init__(self):
        if self.parameter not in _SWEPT_KEYS:
            raise ValueError(
                f"unknown sweep parameter {self.parameter!r}; "
                f"one of {sorted(_SWEPT_KEYS)}"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("need at least one swept value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"swept values must increase strictly: {self.values}")
        if self.trials < 1:
            raise ValueError(f"need at least one trial, got {self.trials}")
        canon = tuple(
            _ALIASES.get(str(s).lower(), str(s).lower()) for s in self.schemes
        )
        unknown = [s for s in canon if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; valid names {sorted(SCHEMES)}")
        object.__setattr__(self, "schemes", canon)


@dataclass(frozen=True)
class TrialRow:
    """One scheme on one drawn scenario at one swept value."""

    scheme: str
    value: float
    trial: int
    seed: int
    objective: float  # nan when the trial was infeasible for this scheme
    iterations: int
    feasible: bool
    error: str = ""


@dataclass
class ResultTable:
    """Per-trial rows plus aggregation over feasible trials."""

    parameter: str
    schemes: tuple
    values: tuple
    trials: int
    rows: list = field(default_factory=list)

    def __post_init__(self):
        expected = len(self.schemes) * len(self.values) * self.trials
        if len(self.rows) != expected:
            raise ValueError(
                f"row count {len(self.rows)} != schemes x values x trials {expected}"
            )

    def _select(self, scheme, value):
        return [
            r for r in self.rows
            if r.scheme == scheme and r.value == float(value) and r.feasible
        ]

    def mean(self, scheme, value) -> float:
        rows = self._select(scheme, value)
        return float(np.mean([r.objective for r in rows])) if rows else math.nan

    def std(self, scheme, value) -> float:
        rows = self._select(scheme, value)
        return float(np.std([r.objective for r in rows])) if rows else math.nan

    def infeasible_count(self, scheme, value) -> int:
        return self.trials - len(self._select(scheme, value))

    def mean_iterations(self, scheme, value) -> float:
        rows = self._select(scheme, value)
        return float(np.mean([r.iterations for r in rows])) if rows else math.nan

    def summary(self) -> list:
        """One dict per (scheme, value) with mean, spread, and counts."""
        out = []
        for scheme in self.schemes:
            for value in self.values:
                out.append({
                    "scheme": scheme,
                    "value": value,
                    "mean_objective": self.mean(scheme, value),
                    "std_objective": self.std(scheme, value),
                    "feasible_trials": self.trials - self.infeasible_count(scheme, value),
                    "infeasible_trials": self.infeasible_count(scheme, value),
                    "mean_iterations": self.mean_iterations(scheme, value),
                })
        return out


def sweep(spec: ExperimentSpec, omega: float = 1e-3, max_iters: int = 20) -> ResultTable:
    """Run every scheme over every swept value and trial.

    Trial ``t`` always draws its users from ``spec.seed + t``, for every
    swept value and scheme, so comparisons are paired.  A trial a scheme
    cannot serve (a rate target out of reach) keeps its row with the error
    message and stays out of the aggregates.
    """
    rows = []
    for value in spec.values:
        for trial in range(spec.trials):
            seed = spec.seed + trial
            scenario = gen_scenario(seed, {_SWEPT_KEYS[spec.parameter]: value})
            for scheme in spec.schemes:
                try:
                    _, report, trace, _ = _run_scheme(scheme, scenario, omega, max_iters)
                    iterations = trace.iterations if trace is not None else 0
                except ValueError as exc:
                    rows.append(TrialRow(
                        scheme=scheme, value=value, trial=trial, seed=seed,
                        objective=math.nan, iterations=0, feasible=False,
                        error=str(exc),
                    ))
                else:
                    rows.append(TrialRow(
                        scheme=scheme, value=value, trial=trial, seed=seed,
                        objective=report.objective, iterations=iterations,
                        feasible=report.feasible,
                        error="" if report.feasible else f"violations: {report.violations}",
                    ))
    rows.sort(key=lambda r: (r.scheme, r.value, r.trial))
    return ResultTable(
        parameter=spec.parameter, schemes=spec.schemes, values=spec.values,
        trials=spec.trials, rows=rows,
    )


# ---------------------------------------------------------------------------
# Exhaustive oracle for tiny instances.


def _pareto_prune(qos: np.ndarray, sec: np.ndarray):
    """Keep the points maximal in (qos, sec): ascending qos, strictly
    descending sec."""
    order = np.lexsort((-sec, -qos))
    keep = []
    best = -math.inf
    for idx in order:
        if sec[idx] > best:
            keep.append(idx)
            best = sec[idx]
    keep = keep[::-1]
    return qos[keep], sec[keep]


def _merge_frontiers(f1, f2):
    q = np.add.outer(f1[0], f2[0]).ravel()
    s = np.add.outer(f1[1], f2[1]).ravel()
    return _pareto_prune(q, s)


def _frontier_best(frontier, need: float):
    """Largest secrecy sum subject to a quality sum of at least ``need``;
    None when the frontier cannot reach it."""
    qos, sec = frontier
    idx = int(np.searchsorted(qos, need, side="left"))
    if idx == len(qos):
        return None
    return float(sec[idx])


def _slot_menus(scenario: Scenario, q: np.ndarray, alphas: np.ndarray):
    """Per-slot (secrecy, quality) menus for every schedule choice.

    ``pair_menu[(k, m)][n]`` is the pruned frontier of one slot serving SU
    ``k`` with QU ``m`` scheduled; ``free_sec[(k)][n]`` the best secrecy with
    no QU scheduled; ``qu_only[m][n]`` the quality rate with nobody on the
    confidential stream.
    """
    n_count = scenario.num_slots
    pair_menu = {}
    free_sec = {}
    qu_only = {}
    for k in range(scenario.num_su):
        for m in range(scenario.num_qu):
            per_slot = []
            for n in range(n_count):
                sec = np.empty(len(alphas))
                qos = np.empty(len(alphas))
                for i, alpha in enumerate(alphas):
                    r = slot_rates(scenario, q[n], k, m, float(alpha))
                    sec[i], qos[i] = r.secrecy_rate, r.qos_rate
                per_slot.append(_pareto_prune(qos, sec))
            pair_menu[(k, m)] = per_slot
        free_sec[k] = np.array([
            max(slot_rates(scenario, q[n], k, None, float(alpha)).secrecy_rate
                for alpha in alphas)
            for n in range(n_count)
        ])
    for m in range(scenario.num_qu):
        qu_only[m] = np.array([
            slot_rates(scenario, q[n], None, m, 0.0).qos_rate for n in range(n_count)
        ])
    return pair_menu, free_sec, qu_only


def _oracle_single_su(scenario: Scenario, q: np.ndarray, alphas: np.ndarray) -> float:
    """Exact search with one security user.

    Scheduling the security user costs nothing (a slot's clipped secrecy
    never subtracts, and the zero power split reproduces every rate the
    unscheduled slot could offer), so only the quality-user assignment is
    enumerated.  Slots serving the same quality user form an independent
    group; each group's reachable (quality sum, secrecy sum) pairs collapse
    to a Pareto frontier, merged slot by slot.
    """
    n = scenario.num_slots
    m_count = scenario.num_qu
    pair_menu, free_sec, _ = _slot_menus(scenario, q, alphas)
    targets = scenario.qos_targets
    empty = (np.zeros(1), np.zeros(1))

    memo: dict = {}

    def group_frontier(m, slots):
        key = (m, slots)
        if key not in memo:
            f = empty
            for slot in slots:
                f = _merge_frontiers(f, pair_menu[(0, m)][slot])
            memo[key] = f
        return memo[key]

    best = -math.inf
    for assignment in itertools.product(range(-1, m_count), repeat=n):
        total = sum(free_sec[0][n_] for n_ in range(n) if assignment[n_] == -1)
        ok = True
        for m in range(m_count):
            slots = tuple(n_ for n_ in range(n) if assignment[n_] == m)
            value = _frontier_best(group_frontier(m, slots), targets[m] - 1e-9)
            if value is None:
                ok = False
                break
            total += value
        if ok and total / n > best:
            best = total / n
    return best


def _oracle_two_su(scenario: Scenario, q: np.ndarray, alphas: np.ndarray) -> float:
    """Exact search with two security users: depth-first over per-slot
    (schedule, power) choices with dominance-pruned menus and sum bounds.

    Each slot's options collapse to 4-vectors (secrecy to SU 1, secrecy to
    SU 2, quality to QU 1, quality to QU 2); branches die when even the
    per-dimension suffix maxima cannot beat the incumbent or reach a
    target.  Exact, but meant for tiny fixtures; the worst case at the
    size limits takes a while.
    """
    n = scenario.num_slots
    m_count = scenario.num_qu
    pair_menu, free_sec, qu_only = _slot_menus(scenario, q, alphas)
    targets = np.array([scenario.qos_targets[m] for m in range(m_count)])

    options = []
    for slot in range(n):
        rows = []
        for k in range(scenario.num_su):
            vec = np.zeros(4)
            vec[k] = free_sec[k][slot]
            rows.append(vec)
            for m in range(m_count):
                qos, sec = pair_menu[(k, m)][slot]
                for qv, sv in zip(qos, sec):
                    vec = np.zeros(4)
                    vec[k] = sv
                    vec[2 + m] = qv
                    rows.append(vec)
        for m in range(m_count):
            vec = np.zeros(4)
            vec[2 + m] = qu_only[m][slot]
            rows.append(vec)
        pts = np.array(rows)
        keep = []
        for i in range(len(pts)):
            dominated = False
            for j in range(len(pts)):
                if j != i and np.all(pts[j] >= pts[i]) and (
                    np.any(pts[j] > pts[i]) or j < i
                ):
                    dominated = True
                    break
            if not dominated:
                keep.append(i)
        pts = pts[keep]
        pts = pts[np.argsort(-(pts[:, 0] + pts[:, 1]))]
        options.append(pts)

    suffix = np.zeros((n + 1, 4))
    for slot in range(n - 1, -1, -1):
        suffix[slot] = suffix[slot + 1] + options[slot].max(axis=0)

    best = -math.inf

    def dfs(slot, acc):
        nonlocal best
        if slot == n:
            if np.all(acc[2:] >= targets - 1e-9):
                best = max(best, min(acc[0], acc[1]) / n)
            return
        bound = acc + suffix[slot]
        if np.any(bound[2:] < targets - 1e-9):
            return
        if min(bound[0], bound[1]) / n <= best:
            return
        for vec in options[slot]:
            dfs(slot + 1, acc + vec)

    dfs(0, np.zeros(4))
    return best


def oracle_exhaustive(small_scenario: Scenario, trajectory, alpha_grid_size: int) -> float:
    """Best max-min secrecy over all binary schedules and a per-slot power
    grid, on a fixed flight path.

    Enumerates every feasible schedule, sweeps each slot's confidential
    power share over ``alpha_grid_size`` even grid points, filters by the
    quality-rate targets, and returns the largest objective; ``-inf`` when
    no schedule meets the targets.  A trusted reference for bounding the
    iterative solver's gap on tiny instances.
    """
    scenario = small_scenario
    k, m, n = scenario.num_su, scenario.num_qu, scenario.num_slots
    if k > 2 or m > 2 or n > 6 or alpha_grid_size > 101:
        raise ValueError(
            f"instance too large for exhaustive search: K={k}, M={m}, N={n}, "
            f"grid={alpha_grid_size} (limits K<=2, M<=2, N<=6, grid<=101)"
        )
    if alpha_grid_size < 2:
        raise ValueError(f"need at least 2 grid points, got {alpha_grid_size}")
    q = np.asarray(trajectory, dtype=float)
    if q.shape != (n, 2):
        raise ValueError(f"trajectory shape {q.shape} != ({n}, 2)")
    alphas = np.linspace(0.0, 1.0, alpha_grid_size)
    if k == 1:
        return _oracle_single_su(scenario, q, alphas)
    return _oracle_two_su(scenario, q, alphas)
