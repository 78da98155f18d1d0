"""Closed-form flight and transmission planner.

Builds a complete transmission plan without iterative optimization: pair
each quality user with a security user, hover near each pairing at the
point that maximizes the gain gap between the two, fly the hover points in
a short open tour, schedule slots round-robin inside each pairing, and set
the per-slot power split by a closed-form rule.  A final repair pass
raises the quality-user splits if rate targets are missed.

The output `Solution` is feasible by construction (mobility, schedule and
power boxes) whenever the horizon is long enough to reach at least one
hover point, and serves both as a fast baseline and as the starting point
of the iterative optimizer.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .convex import bisect
from .model import Scenario, Solution, evaluate

__all__ = [
    "PairingPlan",
    "HoverGeometry",
    "pair_users",
    "hover_metric",
    "hover_derivative",
    "optimal_hover_point",
    "visit_order",
    "synthesize_trajectory",
    "schedule_slots",
    "allocate_power_slot",
    "closed_form_power",
    "qos_repair",
    "plan",
]


@dataclass(frozen=True)
class PairingPlan:
    """Pairing of quality users to security users.

    ``qu_of_su[k]`` lists the quality-user indices served alongside security
    user ``k``; every quality user appears exactly once across the lists.
    """

    qu_of_su: tuple

    def partner_count(self, k: int) -> int:
        return len(self.qu_of_su[k])


@dataclass(frozen=True)
class HoverGeometry:
    """Geometry of one security-user / quality-user pair as seen from the
    hover line through both ground positions.

    ``distance`` is the ground separation of the pair, ``height`` the
    flight altitude, ``offset`` the hover displacement from the security
    user measured away from the quality user (positive values overshoot the
    security user).
    """

    distance: float
    height: float
    offset: float


def pair_users(scenario: Scenario) -> PairingPlan:
    """Greedy distance-balanced pairing of quality users to security users.

    Walks quality users from farthest to nearest pair separation: each
    quality user goes to the currently least-loaded security user that is
    nearest to it, with a per-security-user cap of ``ceil(M / K)`` so no
    one user absorbs the whole set.  Deterministic: ties break on the lower
    index.
    """
    su = scenario.su_positions
    qu = scenario.qu_positions
    k_count, m_count = scenario.num_su, scenario.num_qu
    cap = math.ceil(m_count / k_count)
    dist = np.linalg.norm(qu[:, None, :] - su[None, :, :], axis=2)  # (M, K)
    # Farthest-first: committing stretched pairs early keeps the hover
    # points from being dragged by a late forced assignment.
    order = sorted(range(m_count), key=lambda m: (-float(np.min(dist[m])), m))
    loads = [0] * k_count
    assigned: list[list[int]] = [[] for _ in range(k_count)]
    for m in order:
        candidates = [k for k in range(k_count) if loads[k] < cap]
        k_best = min(candidates, key=lambda k: (dist[m, k], k))
        assigned[k_best].append(m)
        loads[k_best] += 1
    return PairingPlan(qu_of_su=tuple(tuple(sorted(ms)) for ms in assigned))


def hover_metric(x: float, distance: float, height: float) -> float:
    """Gain-gap surrogate for a hover offset ``x`` behind the security user.

    With the pair ``distance`` apart on the ground and the platform at
    ``height``, an offset ``x`` puts the platform at squared ground range
    ``x**2`` from the security user and ``(x + distance)**2`` from the
    quality user.  The metric is the difference of the two path-loss
    factors; larger is better for secrecy.
    """
    h2 = height * height
    return 1.0 / (h2 + x * x) - 1.0 / (h2 + (x + distance) ** 2)


def hover_derivative(x: float, distance: float, height: float) -> float:
    """Exact derivative of :func:`hover_metric` in the offset.

    Written over the common denominator; the numerator is the quartic
    ``-6 d x^4 - 12 d^2 x^3 - (4 h^2 d + 8 d^3) x^2
    - (4 h^2 d^2 + 2 d^4) x + 2 h^4 d``,
    positive at ``x = 0`` and eventually negative, so the metric has a
    single interior maximum at the quartic's positive root.
    """
    d, h2 = distance, height * height
    den = ((h2 + x * x) * (h2 + (x + d) ** 2)) ** 2
    return _hover_numerator(x, d, h2) / den


def _hover_numerator(x, d, h2):
    """Numerator of the metric derivative; shares its sign and root."""
    return (
        -6.0 * d * x**4
        - 12.0 * d**2 * x**3
        - (4.0 * h2 * d + 8.0 * d**3) * x**2
        - (4.0 * h2 * d**2 + 2.0 * d**4) * x
        + 2.0 * h2 * h2 * d
    )


def optimal_hover_point(su_xy, qu_xy, height: float) -> tuple:
    """Best hover position for one pair and its line geometry.

    The optimum lies on the ray from the quality user through the security
    user, displaced past the security user by the positive root of the
    metric derivative.  A colocated pair degenerates to hovering straight
    over the shared position.  Returns ``(position, HoverGeometry)``.
    """
    su_xy = np.asarray(su_xy, dtype=float)
    qu_xy = np.asarray(qu_xy, dtype=float)
    d = float(np.linalg.norm(su_xy - qu_xy))
    if d == 0.0:
        return su_xy.copy(), HoverGeometry(distance=0.0, height=height, offset=0.0)
    h2 = height * height
    # Bisect the derivative's numerator scaled to be 1 at zero offset; the
    # raw derivative is of order 1/height**6 and would trip the value
    # tolerance far from the root.
    scale = 2.0 * h2 * h2 * d

    def slope(x: float) -> float:
        return _hover_numerator(x, d, h2) / scale

    hi = height
    while slope(hi) > 0.0:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError(
                f"hover bracket failed for distance={d}, height={height}"
            )
    x_star = bisect(slope, 0.0, hi, tol=1e-9)
    direction = (su_xy - qu_xy) / d
    return su_xy + x_star * direction, HoverGeometry(distance=d, height=height, offset=x_star)


def _merge_close_points(points, weights, merge_radius: float):
    """Weighted merge of hover points closer than ``merge_radius``.

    Points that would cost more slots to travel between than to serve from
    one spot are collapsed to their weight-averaged centroid.  Merging is
    greedy in index order and idempotent for well-separated inputs.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    wts = [float(w) for w in weights]
    groups = [[i] for i in range(len(pts))]
    merged = True
    while merged:
        merged = False
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.linalg.norm(pts[i] - pts[j]) <= merge_radius:
                    w = wts[i] + wts[j]
                    pts[i] = (wts[i] * pts[i] + wts[j] * pts[j]) / w
                    wts[i] = w
                    groups[i].extend(groups[j])
                    del pts[j], wts[j], groups[j]
                    merged = True
                    break
            if merged:
                break
    return pts, wts, groups


def visit_order(points, start_xy) -> list:
    """Short open path through ``points`` starting at ``start_xy``.

    Exact for up to seven points (exhaustive, ties to the lexicographically
    first order); beyond that, nearest-neighbour construction refined by
    segment reversals and single-point relocations until no move shortens
    the path.  Returns indices into ``points``.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    n = len(pts)
    if n == 0:
        return []
    start = np.asarray(start_xy, dtype=float)

    def path_length(seq):
        total = float(np.linalg.norm(pts[seq[0]] - start))
        for a, b in zip(seq, seq[1:]):
            total += float(np.linalg.norm(pts[b] - pts[a]))
        return total

    if n <= 7:
        return list(min(itertools.permutations(range(n)),
                        key=lambda seq: (path_length(seq), seq)))

    remaining = list(range(n))
    order = []
    cur = start
    while remaining:
        nxt = min(remaining, key=lambda i: (float(np.linalg.norm(pts[i] - cur)), i))
        order.append(nxt)
        remaining.remove(nxt)
        cur = pts[nxt]

    best_len = path_length(order)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                candidate = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                cand_len = path_length(candidate)
                if cand_len < best_len - 1e-12:
                    order, best_len = candidate, cand_len
                    improved = True
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                rest = order[:i] + order[i + 1 :]
                candidate = rest[:j] + [order[i]] + rest[j:]
                cand_len = path_length(candidate)
                if cand_len < best_len - 1e-12:
                    order, best_len = candidate, cand_len
                    improved = True
    return order


def synthesize_trajectory(scenario: Scenario, hover_points, hover_weights):
    """Time-slotted flight path visiting the hover points.

    Travel legs run at full speed, hover time is split across points in
    proportion to their weights (pair counts), and the path returns to the
    required terminal position in time.  When the horizon is too short for
    the full tour the plan degrades to the nearest reachable point, or to
    holding at the start, with a warning.

    Returns ``(q, hover_slots)`` where ``q`` has shape ``(N, 2)`` holding
    the position flown in each slot and ``hover_slots[i]`` is the list of
    slot indices spent at merged point ``i`` (in visit order).
    """
    n_slots = scenario.num_slots
    d_max = scenario.d_max
    start = scenario.q_initial
    final = scenario.q_final

    pts, wts, _ = _merge_close_points(hover_points, hover_weights, 2.0 * d_max)
    order = visit_order(pts, start)
    pts = [pts[i] for i in order]
    wts = [wts[i] for i in order]

    def slots_to_reach(a, b):
        return math.ceil(float(np.linalg.norm(b - a)) / d_max - 1e-12)

    # Drop tail points until the tour (out along the chain, back from the
    # last point) fits the horizon.
    while pts:
        travel_out = slots_to_reach(start, pts[0]) + sum(
            slots_to_reach(a, b) for a, b in zip(pts, pts[1:])
        )
        # The hop back to the terminal position happens after slot N, so a
        # return needing r slots costs r - 1 in-horizon slots (the last hop
        # is the virtual step out of the horizon), floored at zero.
        travel_back = max(slots_to_reach(pts[-1], final) - 1, 0)
        if travel_out + travel_back <= n_slots - len(pts):
            break
        pts.pop()
        wts.pop()

    if not pts:
        candidates = [np.asarray(p, dtype=float) for p in hover_points]
        reachable = [
            p for p in candidates
            if slots_to_reach(start, p) + max(slots_to_reach(p, final) - 1, 0)
            <= n_slots - 1
        ]
        if reachable:
            target = min(reachable, key=lambda p: float(np.linalg.norm(p - start)))
            warnings.warn(
                "horizon too short for the hover tour; flying to the nearest "
                "reachable point only",
                stacklevel=2,
            )
            pts = [target]
            wts = [1.0]
        else:
            warnings.warn(
                "horizon too short to reach any hover point; holding near the "
                "start position",
                stacklevel=2,
            )
            # Hold at the start as long as the timely return allows, then
            # head straight for the terminal position at full speed.
            back = max(slots_to_reach(start, final) - 1, 0)
            if back > n_slots:
                raise ValueError(
                    f"terminal position unreachable: needs {back + 1} slots, "
                    f"horizon has {n_slots}"
                )
            q = np.tile(start, (n_slots, 1))
            cur = start.astype(float)
            gap = final - cur
            dist = float(np.linalg.norm(gap))
            if back:
                step = gap / dist * d_max
                for i in range(back):
                    cur = cur + step
                    q[n_slots - back + i] = cur
            return q, [list(range(n_slots - back))]

    travel_out_legs = [slots_to_reach(start, pts[0])] + [
        slots_to_reach(a, b) for a, b in zip(pts, pts[1:])
    ]
    travel_back = max(slots_to_reach(pts[-1], final) - 1, 0)
    hover_budget = n_slots - sum(travel_out_legs) - travel_back

    # Weight-proportional split with one-slot floors; leftovers go to the
    # last point so the return leg stays tight.
    total_w = sum(wts)
    raw = [hover_budget * w / total_w for w in wts]
    alloc = [max(1, int(math.floor(r))) for r in raw]
    while sum(alloc) > hover_budget:
        i = max(range(len(alloc)), key=lambda i: (alloc[i], i))
        alloc[i] -= 1
    alloc[-1] += hover_budget - sum(alloc)

    q = np.empty((n_slots, 2))
    hover_slots: list[list[int]] = [[] for _ in pts]
    slot = 0
    cur = start
    for i, p in enumerate(pts):
        legs = travel_out_legs[i]
        if legs:
            gap = p - cur
            dist = float(np.linalg.norm(gap))
            step = gap / dist * d_max
            for j in range(legs - 1):
                cur = cur + step
                q[slot] = cur
                slot += 1
            cur = p
            q[slot] = cur
            slot += 1
        for _ in range(alloc[i]):
            q[slot] = p
            hover_slots[i].append(slot)
            slot += 1
        cur = p
    if travel_back:
        gap = final - cur
        dist = float(np.linalg.norm(gap))
        step = gap / dist * d_max
        for _ in range(travel_back):
            cur = cur + step
            q[slot] = cur
            slot += 1
    assert slot == n_slots, f"filled {slot} of {n_slots} slots"
    return q, hover_slots


def schedule_slots(scenario: Scenario, q: np.ndarray, pairing: PairingPlan):
    """Binary slot assignment from positions and the pairing.

    Each slot goes to the security user nearest the platform (ties to the
    lower index).  The paired quality user rotates round-robin through that
    user's partners in index order, advancing one step per slot served.  A
    security user with no partners is matched with its farthest quality
    user so eavesdropping is judged against a consistent worst schedule.
    """
    n_slots = scenario.num_slots
    k_count, m_count = scenario.num_su, scenario.num_qu
    a = np.zeros((k_count, n_slots))
    b = np.zeros((m_count, n_slots))
    su_d = np.linalg.norm(q[None, :, :] - scenario.su_positions[:, None, :], axis=2)
    rotation = [0] * k_count
    partners: list[tuple] = []
    for k in range(k_count):
        ms = pairing.qu_of_su[k]
        if not ms:
            d = np.linalg.norm(scenario.qu_positions - scenario.su_positions[k], axis=1)
            ms = (int(np.argmax(d)),)
        partners.append(ms)
    for n in range(n_slots):
        k = int(np.argmin(su_d[:, n]))
        a[k, n] = 1.0
        ms = partners[k]
        m = ms[rotation[k] % len(ms)]
        rotation[k] += 1
        b[m, n] = 1.0
    return a, b


def allocate_power_slot(h: float, g_star: float, g_tilde, rho: float) -> float:
    """Closed-form secrecy-optimal confidential power fraction for one slot.

    ``h`` is the scheduled security user's gain, ``g_star`` the scheduled
    quality user's gain, ``g_tilde`` the strongest unscheduled quality-user
    gain (``None`` when every quality user is scheduled), ``rho`` the
    transmit SNR scale.  Returns the fraction of power on the confidential
    stream.

    The slot secrecy rate as a function of the fraction has two regimes
    split at the point where the scheduled user's intercept rate overtakes
    the unscheduled residual rate; on the unscheduled-limited segment the
    rate is concave with an interior stationary point, on the other it is
    monotone.  Collapsing the case analysis gives the rule below: serve
    nothing when the scheduled quality user is the stronger receiver,
    everything when no unscheduled user can listen in, and otherwise clip
    the stationary point to the regime boundary and the unit box.
    """
    if h <= 0.0 or rho <= 0.0:
        raise ValueError(f"need positive gain and SNR scale, got h={h}, rho={rho}")
    if g_star >= h:
        return 0.0
    if g_tilde is None or g_tilde <= 0.0 or g_tilde <= g_star:
        return 1.0
    threshold = 1.0 - (g_tilde - g_star) / (rho * g_tilde * g_star) if g_star > 0.0 else -math.inf
    stationary = (rho * h * (1.0 + rho * g_tilde) - rho * g_tilde) / (2.0 * rho**2 * h * g_tilde)
    return min(1.0, max(stationary, threshold, 0.0))


def qos_repair(scenario: Scenario, solution: Solution, tol: float = 1e-6) -> Solution:
    """Raise quality-stream power until every rate target is met.

    For each quality user short of target, scale its scheduled slots'
    quality share toward full power by a common factor found with
    bisection, landing on the feasible side (target met, overshoot at most
    ``tol`` in the factor).  Fails with the shortfall if even full power
    cannot meet the target.
    """
    out = solution.copy()
    gains = _qu_gains(scenario, out.q)
    rho = scenario.rho
    for m in range(scenario.num_qu):
        target = scenario.qos_targets[m]
        if target <= 0.0:
            continue
        slots = np.where(out.b[m] > 0.5)[0]

        def qu_rate(s: float) -> float:
            total = 0.0
            for n in slots:
                a2 = 1.0 - out.alpha1[n]
                a2 = a2 + s * (1.0 - a2)
                g = gains[m, n]
                total += math.log2(1.0 + rho * g * a2 / (rho * g * (1.0 - a2) + 1.0))
            return total

        if qu_rate(0.0) >= target:
            continue
        full = qu_rate(1.0)
        if full < target:
            raise ValueError(
                f"rate target for quality user {m} unreachable: best "
                f"{full:.6f} < target {target:.6f} (short by {target - full:.6f})"
            )
        # Feasible-side bisection: keep the upper end meeting the target so
        # the returned factor never undershoots.
        lo, hi = 0.0, 1.0
        for _ in range(60):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if qu_rate(mid) >= target:
                hi = mid
            else:
                lo = mid
        for n in slots:
            a2 = 1.0 - out.alpha1[n]
            out.alpha1[n] = 1.0 - (a2 + hi * (1.0 - a2))
    return out


def _claim_quality_slots(scenario: Scenario, q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Reassign quality-side slots until every rate target is coverable.

    The nearest-owner rotation in ``schedule_slots`` can starve a quality
    user whose partner security user never wins a slot.  Full quality power
    on a slot delivers log2(1 + rho g), so coverability only depends on the
    slot sets.  A user short at full power takes the slot it hears best
    from any owner that keeps its own target covered after the hand-off;
    the hand-off repeats until every target is coverable or no owner can
    give a slot away, which means the target genuinely exceeds what the
    path supports.
    """
    gains = _qu_gains(scenario, q)
    cap_rate = np.log2(1.0 + scenario.rho * gains)
    targets = scenario.qos_targets
    out = b.copy()
    capacity = (out * cap_rate).sum(axis=1)
    while True:
        short = np.where(capacity < targets - 1e-9)[0]
        if short.size == 0:
            return out
        m = int(short[np.argmax(targets[short] - capacity[short])])
        owners = np.argmax(out, axis=0)
        owned = out.sum(axis=0) > 0.5
        idle = np.nonzero(~owned)[0]
        if idle.size:
            n_star = int(idle[np.argmax(cap_rate[m, idle])])
            out[m, n_star] = 1.0
            capacity[m] += cap_rate[m, n_star]
            continue
        eligible = [
            n
            for n in np.nonzero(owned)[0]
            if int(owners[n]) != m
            and capacity[int(owners[n])] - cap_rate[int(owners[n]), n]
            >= targets[int(owners[n])] - 1e-9
        ]
        if not eligible:
            raise ValueError(
                f"rate target for quality user {m} unreachable: best "
                f"{capacity[m]:.6f} < target {targets[m]:.6f} "
                f"(short by {targets[m] - capacity[m]:.6f})"
            )
        picks = np.asarray(eligible)
        n_star = int(picks[np.argmax(cap_rate[m, picks])])
        donor = int(owners[n_star])
        out[donor, n_star] = 0.0
        out[m, n_star] = 1.0
        capacity[donor] -= cap_rate[donor, n_star]
        capacity[m] += cap_rate[m, n_star]


def _qu_gains(scenario: Scenario, q: np.ndarray) -> np.ndarray:
    diff = scenario.qu_positions[:, None, :] - q[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    return scenario.ref_gain / (d2 + scenario.height**2)


def _su_gains(scenario: Scenario, q: np.ndarray) -> np.ndarray:
    diff = scenario.su_positions[:, None, :] - q[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    return scenario.ref_gain / (d2 + scenario.height**2)


def closed_form_power(scenario: Scenario, a, b, q) -> Solution:
    """Per-slot closed-form power split for a given schedule and path,
    followed by the rate-target repair.

    Slots without a scheduled quality user treat every quality user as an
    unscheduled listener, so the shared stream acts as pure interference
    cover there; slots without a security user keep the split at zero.
    Raises when a rate target is unreachable even at full quality power.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    su_g = _su_gains(scenario, q)
    qu_g = _qu_gains(scenario, q)
    rho = scenario.rho
    alpha1 = np.zeros(scenario.num_slots)
    for n in range(scenario.num_slots):
        if a[:, n].max() < 0.5:
            continue
        k = int(np.argmax(a[:, n]))
        if b[:, n].max() > 0.5:
            m = int(np.argmax(b[:, n]))
            g_star = qu_g[m, n]
            others = [mm for mm in range(scenario.num_qu) if mm != m]
        else:
            g_star = 0.0
            others = list(range(scenario.num_qu))
        g_tilde = max((qu_g[mm, n] for mm in others), default=None)
        alpha1[n] = allocate_power_slot(su_g[k, n], g_star, g_tilde, rho)
    return qos_repair(scenario, Solution(a=a, b=b, alpha1=alpha1, q=q))


def plan(scenario: Scenario) -> Solution:
    """Full closed-form plan: pair, hover, tour, schedule, power, repair."""
    pairing = pair_users(scenario)
    points = []
    weights = []
    for k in range(scenario.num_su):
        ms = pairing.qu_of_su[k]
        if ms:
            # One hover point per pair, then same-user points merge through
            # the synthesis radius rule.
            for m in ms:
                p, _ = optimal_hover_point(
                    scenario.su_positions[k], scenario.qu_positions[m], scenario.height
                )
                points.append(p)
                weights.append(1.0)
        else:
            points.append(scenario.su_positions[k].copy())
            weights.append(1.0)
    q, _ = synthesize_trajectory(scenario, points, weights)
    a, b = schedule_slots(scenario, q, pairing)
    b = _claim_quality_slots(scenario, q, b)
    su_g = _su_gains(scenario, q)
    qu_g = _qu_gains(scenario, q)
    rho = scenario.rho
    alpha1 = np.zeros(scenario.num_slots)
    for n in range(scenario.num_slots):
        k = int(np.argmax(a[:, n]))
        m = int(np.argmax(b[:, n]))
        others = [mm for mm in range(scenario.num_qu) if mm != m]
        g_tilde = max((qu_g[mm, n] for mm in others), default=None)
        alpha1[n] = allocate_power_slot(su_g[k, n], qu_g[m, n], g_tilde, rho)
    solution = Solution(a=a, b=b, alpha1=alpha1, q=q)
    return qos_repair(scenario, solution)
