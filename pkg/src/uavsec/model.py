"""Physical system model for a secure UAV base-station NOMA downlink.

A rotary-wing UAV flies a time-slotted 2D trajectory at fixed height and
serves two ground user classes in each slot: at most one security user (SU)
whose data must stay confidential, and at most one QoS user (QU) that has a
cumulative rate target.  Both signals share one slot by power-domain
superposition: the SU gets a fraction ``alpha1`` of the transmit power and
the QU gets ``alpha2 = 1 - alpha1``.  The scheduled QU removes the SU's
signal by successive interference cancellation before decoding its own, and
every QU is also a potential internal eavesdropper on the SU's signal.

All channels are deterministic line-of-sight: the power gain from the UAV to
a ground user is ``ref_gain / (horizontal_distance^2 + height^2)``.

This module holds the immutable problem instance (:class:`Scenario`), the
decision variables (:class:`Solution`), the per-slot rate bundle
(:class:`SlotRates`), the objective evaluator and the feasibility checker.
Everything is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Scenario",
    "Solution",
    "SlotRates",
    "EvalReport",
    "Violation",
    "channel_gain",
    "slot_rates",
    "evaluate",
    "check_feasible",
]

LOG2 = math.log(2.0)


def _as_points(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must be an array of 2D points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance: geometry, radio constants, QoS targets.

    Positions are meters in the horizontal plane.  Radio quantities are given
    in dB/dBm as usually quoted and converted to linear scale once, at
    construction; all internal math is linear.
    """

    su_positions: np.ndarray
    qu_positions: np.ndarray
    height: float
    flight_period: float
    slot_length: float
    num_slots: int
    max_speed: float
    q_initial: np.ndarray
    q_final: np.ndarray
    total_power_dbm: float
    noise_power_dbm: float
    ref_gain_db: float
    qos_targets: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "su_positions", _as_points(self.su_positions, "su_positions"))
        object.__setattr__(self, "qu_positions", _as_points(self.qu_positions, "qu_positions"))
        q0 = np.asarray(self.q_initial, dtype=float).reshape(2)
        qf = np.asarray(self.q_final, dtype=float).reshape(2)
        object.__setattr__(self, "q_initial", q0)
        object.__setattr__(self, "q_final", qf)
        gam = np.atleast_1d(np.asarray(self.qos_targets, dtype=float))
        object.__setattr__(self, "qos_targets", gam)

        k, m = len(self.su_positions), len(self.qu_positions)
        if k < 1 or m < 1:
            raise ValueError("need at least one SU and one QU")
        if k > m:
            raise ValueError(f"more SUs ({k}) than QUs ({m}) is not supported")
        if self.height <= 0:
            raise ValueError("height must be positive")
        if self.max_speed <= 0:
            raise ValueError("max_speed must be positive")
        if self.slot_length <= 0:
            raise ValueError("slot_length must be positive")
        n_expect = int(round(self.flight_period / self.slot_length))
        if self.num_slots != n_expect or self.num_slots < 1:
            raise ValueError(
                f"num_slots={self.num_slots} inconsistent with "
                f"flight_period/slot_length={n_expect}"
            )
        if len(gam) != m:
            raise ValueError(f"qos_targets has length {len(gam)}, expected {m}")
        if np.any(gam < 0) or not np.all(np.isfinite(gam)):
            raise ValueError("qos_targets must be finite and non-negative")
        for nm in ("q_initial", "q_final"):
            if not np.all(np.isfinite(getattr(self, nm))):
                raise ValueError(f"{nm} must be finite")
        for arr in (self.su_positions, self.qu_positions, self.q_initial, self.q_final, gam):
            arr.setflags(write=False)

    # Derived quantities, linear scale.

    @property
    def num_su(self) -> int:
        return len(self.su_positions)

    @property
    def num_qu(self) -> int:
        return len(self.qu_positions)

    @property
    def rho(self) -> float:
        """Transmit SNR ``P_total / noise_power`` in linear units."""
        return 10.0 ** ((self.total_power_dbm - self.noise_power_dbm) / 10.0)

    @property
    def ref_gain(self) -> float:
        """Reference-distance channel power gain, linear."""
        return 10.0 ** (self.ref_gain_db / 10.0)

    @property
    def d_max(self) -> float:
        """Maximum horizontal displacement per slot, ``max_speed * slot_length``."""
        return self.max_speed * self.slot_length


@dataclass
class Solution:
    """Decision variables for one flight: scheduling, power split, trajectory.

    ``a[k, n] = 1`` schedules SU ``k`` in slot ``n`` and ``b[m, n] = 1``
    schedules QU ``m``; each slot takes at most one of each.  ``alpha1[n]``
    is the SU power share of slot ``n`` and ``q[n]`` the UAV position at the
    start of slot ``n`` (the scenario's endpoints sit just before the first
    and just after the last slot).
    """

    a: np.ndarray
    b: np.ndarray
    alpha1: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        self.a = np.array(self.a, dtype=float)
        self.b = np.array(self.b, dtype=float)
        self.alpha1 = np.array(self.alpha1, dtype=float)
        self.q = np.array(self.q, dtype=float)

    def copy(self) -> "Solution":
        return Solution(self.a.copy(), self.b.copy(), self.alpha1.copy(), self.q.copy())


@dataclass(frozen=True)
class SlotRates:
    """Every per-slot radio quantity derived from one (position, schedule, power) triple.

    Gains are linear; rates are bits/s/Hz.  Quantities tied to an absent role
    (no scheduled SU, or no scheduled QU) are 0.
    """

    h: np.ndarray
    g: np.ndarray
    sic_sinr: float
    su_snr: float
    qu_sinr: float
    eav_snr_scheduled: float
    eav_sinr_unscheduled: np.ndarray
    r_eve: float
    secrecy_rate: float
    qos_rate: float


@dataclass(frozen=True)
class Violation:
    """One violated constraint: ``kind`` names the constraint family,
    ``index`` locates it, ``magnitude`` is the (positive) excess."""

    kind: str
    index: tuple
    magnitude: float


@dataclass(frozen=True)
class EvalReport:
    """Objective breakdown for one solution.

    ``objective`` is the minimum over SUs of the time-averaged scheduled
    secrecy rate; ``per_qu_qos`` accumulates each QU's scheduled rate over
    the whole flight.
    """

    per_su_secrecy: np.ndarray
    objective: float
    per_qu_qos: np.ndarray
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


def channel_gain(uav_xy, user_xy, height: float, ref_gain: float) -> float:
    """Line-of-sight channel power gain between the UAV and one ground user.

    ``ref_gain / (||uav_xy - user_xy||^2 + height^2)``; strictly positive and
    non-increasing in the horizontal distance.
    """
    u = np.asarray(uav_xy, dtype=float).reshape(2)
    v = np.asarray(user_xy, dtype=float).reshape(2)
    if height <= 0 or ref_gain <= 0:
        raise ValueError("height and ref_gain must be positive")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and math.isfinite(height)):
        raise ValueError("channel_gain inputs must be finite")
    d2 = float(np.sum((u - v) ** 2))
    return ref_gain / (d2 + height * height)


def gains_at(scenario: Scenario, q: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Vectorized channel gains: rows index users, columns index trajectory points."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    d2 = np.sum((positions[:, None, :] - q[None, :, :]) ** 2, axis=2)
    return scenario.ref_gain / (d2 + scenario.height**2)


def slot_rates(
    scenario: Scenario,
    q_n,
    scheduled_su: int | None,
    scheduled_qu: int | None,
    alpha1: float,
) -> SlotRates:
    """All rate quantities of one slot for a given UAV position and schedule.

    With SU power share ``alpha1`` (QU share ``alpha2 = 1 - alpha1``):

    * the scheduled QU first decodes the SU signal at SINR
      ``g*alpha2*rho / (g*alpha1*rho + 1)``, cancels it, then decodes its own
      signal; the SU decodes its signal at SNR ``h*alpha1*rho``;
    * after cancellation the scheduled QU can eavesdrop the SU signal at SNR
      ``g*alpha1*rho``; an unscheduled QU eavesdrops without cancellation at
      SINR ``g*alpha1*rho / (g*alpha2*rho + 1)``;
    * the slot's wiretap rate ``r_eve`` is the largest of all QUs'
      eavesdropping rates, and the secrecy rate is the SU rate minus
      ``r_eve``, clipped at zero.
    """
    if not 0.0 <= alpha1 <= 1.0 + 1e-12:
        raise ValueError(f"alpha1={alpha1} outside [0, 1]")
    alpha1 = min(max(alpha1, 0.0), 1.0)
    alpha2 = 1.0 - alpha1
    rho = scenario.rho
    q_n = np.asarray(q_n, dtype=float).reshape(2)
    h = gains_at(scenario, q_n, scenario.su_positions)[:, 0]
    g = gains_at(scenario, q_n, scenario.qu_positions)[:, 0]
    m_count = scenario.num_qu

    qu_sinr = 0.0
    qos_rate = 0.0
    if scheduled_qu is not None:
        gm = g[scheduled_qu]
        qu_sinr = gm * alpha2 * rho / (gm * alpha1 * rho + 1.0)
        qos_rate = math.log2(1.0 + qu_sinr)

    if scheduled_su is None:
        return SlotRates(
            h=h, g=g, sic_sinr=0.0, su_snr=0.0, qu_sinr=qu_sinr,
            eav_snr_scheduled=0.0, eav_sinr_unscheduled=np.zeros(m_count),
            r_eve=0.0, secrecy_rate=0.0, qos_rate=qos_rate,
        )

    hk = h[scheduled_su]
    su_snr = hk * alpha1 * rho
    sic_sinr = hk * alpha2 * rho / (hk * alpha1 * rho + 1.0) if scheduled_qu is not None else 0.0
    eav_unsched = g * alpha1 * rho / (g * alpha2 * rho + 1.0)
    eav_sched = 0.0
    eve_terms = np.log2(1.0 + eav_unsched)
    if scheduled_qu is not None:
        eav_sched = g[scheduled_qu] * alpha1 * rho
        eve_terms = eve_terms.copy()
        eve_terms[scheduled_qu] = math.log2(1.0 + eav_sched)
    r_eve = float(np.max(eve_terms))
    secrecy = max(0.0, math.log2(1.0 + su_snr) - r_eve)
    return SlotRates(
        h=h, g=g, sic_sinr=float(sic_sinr), su_snr=float(su_snr), qu_sinr=float(qu_sinr),
        eav_snr_scheduled=float(eav_sched), eav_sinr_unscheduled=eav_unsched,
        r_eve=r_eve, secrecy_rate=float(secrecy), qos_rate=float(qos_rate),
    )


def _rate_tables(scenario: Scenario, solution: Solution):
    """Per-slot rate constants for every (user, slot) pair, vectorized.

    Returns ``(main, eve_terms, qos)`` where ``main[k, n]`` is the SU rate if
    SU ``k`` were scheduled in slot ``n``, ``eve_terms[m, n]`` the slot's
    eavesdropping rate of QU ``m`` weighted by its scheduling indicator
    (cancellation form when scheduled, interference-limited form otherwise),
    and ``qos[m, n]`` the rate QU ``m`` would get if scheduled.
    """
    rho = scenario.rho
    a1 = np.clip(solution.alpha1, 0.0, 1.0)
    a2 = 1.0 - a1
    h = gains_at(scenario, solution.q, scenario.su_positions)
    g = gains_at(scenario, solution.q, scenario.qu_positions)
    main = np.log2(1.0 + h * a1[None, :] * rho)
    eav_sched = np.log2(1.0 + g * a1[None, :] * rho)
    eav_unsched = np.log2(1.0 + g * a1[None, :] * rho / (g * a2[None, :] * rho + 1.0))
    b = solution.b
    eve_terms = np.maximum(b * eav_sched, (1.0 - b) * eav_unsched)
    qos = np.log2(1.0 + g * a2[None, :] * rho / (g * a1[None, :] * rho + 1.0))
    return main, eve_terms, qos


def evaluate(scenario: Scenario, solution: Solution, tol: float = 1e-6) -> EvalReport:
    """Score a solution: min over SUs of the average scheduled secrecy rate.

    Each slot contributes ``a[k, n] * max(0, main_rate - r_eve)`` to SU
    ``k``'s average (the clip is per slot, before averaging) and
    ``b[m, n] * qos_rate`` to QU ``m``'s QoS accumulation.  The wiretap rate
    of a slot is the maximum over all QUs of their scheduling-weighted
    eavesdropping rates, so fractional scheduling indicators evaluate
    consistently with the relaxed subproblems.
    """
    k_count, m_count, n = scenario.num_su, scenario.num_qu, scenario.num_slots
    if solution.a.shape != (k_count, n) or solution.b.shape != (m_count, n):
        raise ValueError(
            f"schedule shapes {solution.a.shape}/{solution.b.shape} do not match "
            f"scenario ({k_count}x{n} and {m_count}x{n})"
        )
    if solution.alpha1.shape != (n,) or solution.q.shape != (n, 2):
        raise ValueError("alpha1 or trajectory shape does not match the scenario")
    main, eve_terms, qos = _rate_tables(scenario, solution)
    r_eve = np.max(eve_terms, axis=0)
    secrecy = np.maximum(0.0, main - r_eve[None, :])
    per_su = np.sum(solution.a * secrecy, axis=1) / n
    per_qu = np.sum(solution.b * qos, axis=1)
    violations = check_feasible(scenario, solution, tol)
    return EvalReport(
        per_su_secrecy=per_su,
        objective=float(np.min(per_su)),
        per_qu_qos=per_qu,
        violations=violations,
    )


def check_feasible(scenario: Scenario, solution: Solution, tol: float = 1e-6) -> list[Violation]:
    """All constraint violations beyond ``tol``, empty when feasible.

    Checks, in order: per-step mobility (including the fixed endpoints just
    outside the slot range), per-slot scheduling sums, binary-ness of the
    scheduling indicators, the power simplex ``alpha1 in [0, 1]``, and each
    QU's accumulated QoS target.
    """
    out: list[Violation] = []
    d_max = scenario.d_max
    chain = np.vstack([scenario.q_initial, solution.q, scenario.q_final])
    steps = np.linalg.norm(np.diff(chain, axis=0), axis=1)
    for n_step, dist in enumerate(steps):
        if dist > d_max + tol:
            out.append(Violation("mobility", (n_step,), float(dist - d_max)))
    for name, mat in (("a", solution.a), ("b", solution.b)):
        sums = mat.sum(axis=0)
        for n_slot in np.nonzero(sums > 1.0 + tol)[0]:
            out.append(Violation("schedule_sum", (name, int(n_slot)), float(sums[n_slot] - 1.0)))
        off = np.minimum(np.abs(mat), np.abs(mat - 1.0))
        for idx in zip(*np.nonzero(off > tol)):
            out.append(Violation("binary", (name,) + tuple(int(i) for i in idx), float(off[idx])))
    low = np.minimum(solution.alpha1, 0.0)
    high = np.maximum(solution.alpha1 - 1.0, 0.0)
    for n_slot in np.nonzero((-low > tol) | (high > tol))[0]:
        out.append(
            Violation("power_simplex", (int(n_slot),), float(max(-low[n_slot], high[n_slot])))
        )
    _, _, qos = _rate_tables(scenario, solution)
    per_qu = np.sum(solution.b * qos, axis=1)
    for m in np.nonzero(per_qu < scenario.qos_targets - tol)[0]:
        out.append(Violation("qos", (int(m),), float(scenario.qos_targets[m] - per_qu[m])))
    return out
