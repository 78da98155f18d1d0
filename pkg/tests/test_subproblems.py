"""Checks for the three block solvers.

The penalty pieces are checked against their closed forms and finite
differences, the scheduling solve against exhaustive enumeration on tiny
instances, the power solve against the per-slot closed form and a fine
grid, and the trajectory solve against a dense positional scan.  Each
successive-convexification block must never degrade the true objective.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavsec.model import Scenario, Solution, check_feasible, evaluate
from uavsec.planner import allocate_power_slot, plan
from uavsec.subproblems import (
    BlockTrace,
    PenaltyConfig,
    RelaxedSchedule,
    _binary_distance,
    _penalty_gradient,
    _penalty_terms,
    _range_rate,
    _range_rate_curvature,
    _range_rate_slope,
    build_scheduling_lp,
    initial_scheduling_slacks,
    relaxed_update,
    scheduling_layout,
    scheduling_rate_constants,
    solve_power,
    solve_scheduling,
    solve_scheduling_oma,
    solve_trajectory,
)
from uavsec.convex import solve_lp


def make_scenario(su, qu, *, height=100.0, period=10.0, slot=1.0, vmax=20.0,
                  q_init=(0.0, 0.0), q_final=(0.0, 0.0), qos=None):
    su = np.asarray(su, dtype=float)
    qu = np.asarray(qu, dtype=float)
    if qos is None:
        qos = np.zeros(len(qu))
    return Scenario(
        su_positions=su, qu_positions=qu, height=height,
        flight_period=period, slot_length=slot, num_slots=int(round(period / slot)),
        max_speed=vmax, q_initial=np.asarray(q_init, dtype=float),
        q_final=np.asarray(q_final, dtype=float),
        total_power_dbm=20.0, noise_power_dbm=-100.0, ref_gain_db=-70.0,
        qos_targets=np.asarray(qos, dtype=float),
    )


def random_scenario(seed, *, num_su=2, num_qu=2, period=24.0, qos_value=2.0):
    rng = np.random.default_rng(seed)
    su = rng.uniform(-50.0, 50.0, size=(num_su, 2))
    qu = rng.uniform(-50.0, 50.0, size=(num_qu, 2))
    return make_scenario(su, qu, period=period, qos=[qos_value] * num_qu)


class TestRelaxedUpdate:
    def test_endpoints_are_fixed_points(self):
        out = relaxed_update(np.array([[0.0]]), np.array([[1.0]]))
        assert out.a[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert out.b[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_half_maps_to_point_six(self):
        out = relaxed_update(np.array([[0.5]]), np.array([[0.5]]))
        assert out.a[0, 0] == pytest.approx(0.6, abs=1e-12), (
            f"relaxed copy of 0.5 is {out.a[0, 0]:.6f}, want 0.6"
        )

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200, deadline=None)
    def test_copy_stays_in_unit_interval(self, x):
        out = relaxed_update(np.array([[x]]), np.array([[x]]))
        t = out.a[0, 0]
        assert -1e-12 <= t <= 1.0 + 1e-12, f"copy {t} left [0, 1] for input {x}"

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200, deadline=None)
    def test_copy_is_stationary_for_the_penalty(self, x):
        # d/dt of (x - t)^2 + x^2 (1 - t)^2 must vanish at the copy.
        t = relaxed_update(np.array([[x]]), np.array([[x]])).a[0, 0]
        slope = -2.0 * (x - t) - 2.0 * x * x * (1.0 - t)
        assert slope == pytest.approx(0.0, abs=1e-10), (
            f"penalty slope {slope:.3e} at copy {t:.6f} for x={x:.6f}"
        )

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            relaxed_update(np.array([[1.5]]), np.array([[0.5]]))


class TestPenaltyPieces:
    def test_zero_exactly_at_binary_points(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.all(_penalty_terms(x, x) == 0.0), (
            f"penalty at a binary fixed point is {_penalty_terms(x, x)}"
        )

    def test_positive_away_from_binary(self):
        x = np.array([[0.4]])
        assert _penalty_terms(x, x)[0, 0] > 0.0

    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=100, deadline=None)
    def test_gradient_matches_finite_difference(self, x, t):
        eps = 1e-6
        up = _penalty_terms(np.array([x + eps]), np.array([t]))[0]
        dn = _penalty_terms(np.array([x - eps]), np.array([t]))[0]
        fd = (up - dn) / (2.0 * eps)
        an = _penalty_gradient(np.array([x]), np.array([t]))[0]
        assert an == pytest.approx(fd, rel=1e-4, abs=1e-6), (
            f"gradient {an:.6e} vs finite difference {fd:.6e} at x={x}, t={t}"
        )

    def test_binary_distance(self):
        assert _binary_distance(np.array([[0.0, 1.0]])) == 0.0
        assert _binary_distance(np.array([[0.5]]), np.array([[0.1]])) == pytest.approx(0.5)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PenaltyConfig(penalty_init=0.0)
        with pytest.raises(ValueError):
            PenaltyConfig(growth=1.0)
        with pytest.raises(ValueError):
            PenaltyConfig(max_iters=0)


class TestRateConstants:
    def scenario(self):
        return make_scenario([[40.0, 0.0]], [[-40.0, 0.0], [0.0, 40.0]], period=3.0)

    def test_interference_split_identity(self):
        # The intercept rate against quality-stream interference equals the
        # full-power rate minus the quality-stream rate at full cancellation.
        sc = self.scenario()
        alpha = np.array([0.3, 0.7, 0.95])
        q = np.array([[0.0, 0.0], [20.0, 5.0], [-10.0, 30.0]])
        _, _, unsched, _ = scheduling_rate_constants(sc, alpha, q)
        from uavsec.model import gains_at

        g = gains_at(sc, q, sc.qu_positions)
        direct = np.log2(1.0 + sc.rho * g) - np.log2(1.0 + sc.rho * g * (1.0 - alpha))
        assert np.allclose(unsched, direct, rtol=1e-12, atol=1e-12), (
            f"max identity gap {np.max(np.abs(unsched - direct)):.3e}"
        )

    def test_power_split_endpoints(self):
        sc = self.scenario()
        q = np.zeros((3, 2))
        su0, e0, u0, q0 = scheduling_rate_constants(sc, np.zeros(3), q)
        assert np.all(su0 == 0.0) and np.all(e0 == 0.0) and np.all(u0 == 0.0)
        su1, e1, u1, q1 = scheduling_rate_constants(sc, np.ones(3), q)
        assert np.all(q1 == 0.0), f"quality rate at full confidential power: {q1}"
        assert np.allclose(u1, e1, rtol=1e-12), (
            "with no quality stream the two intercept forms must agree"
        )

    def test_rejects_bad_shapes(self):
        sc = self.scenario()
        with pytest.raises(ValueError):
            scheduling_rate_constants(sc, np.zeros(2), np.zeros((3, 2)))
        with pytest.raises(ValueError):
            scheduling_rate_constants(sc, np.zeros(3), np.zeros((2, 2)))


class TestSchedulingLpRelaxation:
    def test_lp_without_penalty_dominates_a_binary_point(self):
        # Around any binary feasible schedule the linearized program admits
        # that schedule with its true (unclipped) value, so the optimum with
        # the penalty off can only sit above it.
        sc = make_scenario([[30.0, 0.0]], [[-60.0, 10.0], [-50.0, 40.0]], period=4.0)
        a = np.ones((1, 4))
        b = np.zeros((2, 4))
        alpha = np.full(4, 0.6)
        q = np.tile(np.array([[20.0, 0.0]]), (4, 1))
        su_rate, e, u, _ = scheduling_rate_constants(sc, alpha, q)
        slacks = initial_scheduling_slacks(su_rate, e, u, a, b)
        relaxed = relaxed_update(a, b)
        lp = build_scheduling_lp(sc, alpha, q, (a, b), relaxed, slacks, 0.0)
        res = solve_lp(lp)
        assert res.status == "optimal", f"relaxation came back {res.status}"
        truth = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q)).objective
        assert res.objective >= truth - 1e-9, (
            f"relaxation optimum {res.objective:.9f} below evaluated {truth:.9f}"
        )

    def test_initial_slacks_match_evaluation_when_secrecy_positive(self):
        sc = make_scenario([[10.0, 0.0]], [[-80.0, 0.0]], period=3.0)
        a = np.ones((1, 3))
        b = np.zeros((1, 3))
        alpha = np.full(3, 0.5)
        q = np.tile(np.array([[10.0, 0.0]]), (3, 1))
        su_rate, e, u, _ = scheduling_rate_constants(sc, alpha, q)
        slacks = initial_scheduling_slacks(su_rate, e, u, a, b)
        truth = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q)).objective
        assert slacks.min_rate == pytest.approx(truth, abs=1e-9), (
            f"slack objective {slacks.min_rate:.9f} vs evaluated {truth:.9f}"
        )


class TestSolveScheduling:
    def test_single_slot_enumeration(self):
        # One SU, one QU, one slot, no rate target: among the four binary
        # schedules the best grants the slot to the SU and leaves the QU
        # unscheduled (scheduling it only strengthens its intercept).
        sc = make_scenario([[20.0, 0.0]], [[-70.0, 0.0]], period=1.0)
        alpha = np.array([0.7])
        q = np.array([[15.0, 0.0]])
        best, best_obj = None, -1.0
        for av, bv in itertools.product([0.0, 1.0], repeat=2):
            obj = evaluate(
                sc, Solution(a=np.array([[av]]), b=np.array([[bv]]), alpha1=alpha, q=q)
            ).objective
            if obj > best_obj:
                best, best_obj = (av, bv), obj
        a_out, b_out, trace = solve_scheduling(
            sc, alpha, q, np.array([[0.0]]), np.array([[0.0]])
        )
        got = evaluate(sc, Solution(a=a_out, b=b_out, alpha1=alpha, q=q)).objective
        assert (a_out[0, 0], b_out[0, 0]) == best, (
            f"picked schedule {(a_out[0, 0], b_out[0, 0])}, enumeration says {best}"
        )
        assert got == pytest.approx(best_obj, abs=1e-9)
        assert trace.status == "converged"

    def test_small_instance_matches_exhaustive(self):
        # One SU, two QUs, four slots, a small reachable rate target.  The
        # solver must land within a hair of the exhaustive binary optimum.
        sc = make_scenario(
            [[25.0, 0.0]], [[-60.0, 20.0], [-40.0, -45.0]], period=4.0, qos=[0.5, 0.5]
        )
        alpha = np.array([0.5, 0.6, 0.7, 0.8])
        q = np.array([[10.0, 0.0], [15.0, 5.0], [20.0, 0.0], [15.0, -5.0]])
        best_obj = -1.0
        best = None
        for a_bits in itertools.product([0.0, 1.0], repeat=4):
            a = np.array(a_bits)[None, :]
            for b_choice in itertools.product([-1, 0, 1], repeat=4):
                b = np.zeros((2, 4))
                for n, m in enumerate(b_choice):
                    if m >= 0:
                        b[m, n] = 1.0
                rep = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q))
                if rep.violations:
                    continue
                if rep.objective > best_obj:
                    best_obj, best = rep.objective, (a.copy(), b.copy())
        a0 = np.zeros((1, 4))
        b0 = np.zeros((2, 4))
        b0[0, 0] = 1.0
        b0[1, 1] = 1.0
        a0[0, 2] = 1.0
        a0[0, 3] = 1.0
        rep0 = evaluate(sc, Solution(a=a0, b=b0, alpha1=alpha, q=q))
        assert not rep0.violations, f"starting schedule infeasible: {rep0.violations}"
        a_out, b_out, trace = solve_scheduling(sc, alpha, q, a0, b0)
        assert trace.status in ("converged", "iteration-limit")
        got = evaluate(sc, Solution(a=a_out, b=b_out, alpha1=alpha, q=q))
        assert not got.violations, f"solver schedule infeasible: {got.violations}"
        assert got.objective >= best_obj - 1e-6, (
            f"solver reached {got.objective:.6f}, exhaustive optimum {best_obj:.6f}"
        )

    def test_returns_binary_matrices(self):
        sc = random_scenario(3, qos_value=1.5)
        sol = plan(sc)
        a_out, b_out, trace = solve_scheduling(sc, sol.alpha1, sol.q, sol.a, sol.b)
        assert set(np.unique(a_out)) <= {0.0, 1.0}, f"a not binary: {np.unique(a_out)}"
        assert set(np.unique(b_out)) <= {0.0, 1.0}, f"b not binary: {np.unique(b_out)}"
        assert np.max(a_out.sum(axis=0)) <= 1.0 and np.max(b_out.sum(axis=0)) <= 1.0
        assert trace.kappa[-1] <= PenaltyConfig().threshold or trace.status != "converged"

    def test_binary_convergence_over_seeds(self):
        # The penalty loop must reach binary indicators within its outer
        # iteration budget on ordinary random instances.
        hits = 0
        for seed in range(5):
            sc = random_scenario(seed, qos_value=1.0)
            sol = plan(sc)
            _, _, trace = solve_scheduling(sc, sol.alpha1, sol.q, sol.a, sol.b)
            if trace.status == "converged":
                hits += 1
            assert len(trace.kappa) <= PenaltyConfig().max_iters
        assert hits >= 4, f"binary convergence on only {hits}/5 seeds"

    def test_impossible_target_raises_with_shortfall(self):
        sc = make_scenario([[20.0, 0.0]], [[-30.0, 0.0]], period=2.0, qos=[200.0])
        alpha = np.full(2, 0.5)
        q = np.zeros((2, 2))
        with pytest.raises(ValueError, match="quality-rate shortfalls"):
            solve_scheduling(sc, alpha, q, np.zeros((1, 2)), np.zeros((1, 2)))


class TestSolveSchedulingOma:
    def test_two_slot_enumeration(self):
        # One SU, one QU, two slots, the QU needing exactly one dedicated
        # slot: nine joint assignments, solver must match the best.
        sc = make_scenario([[30.0, 0.0]], [[-30.0, 0.0]], period=2.0, qos=[3.0])
        q = np.array([[10.0, 0.0], [-10.0, 0.0]])
        best_obj, best = -1.0, None
        for n0, n1 in itertools.product([0, 1, 2], repeat=2):
            a = np.zeros((1, 2))
            b = np.zeros((1, 2))
            for n, pick in enumerate((n0, n1)):
                if pick == 1:
                    a[0, n] = 1.0
                elif pick == 2:
                    b[0, n] = 1.0
            alpha = a[0].copy()  # full power to whichever stream runs
            rep = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q))
            if rep.violations:
                continue
            if rep.objective > best_obj:
                best_obj, best = rep.objective, (a.copy(), b.copy())
        assert best is not None, "enumeration found no feasible assignment"
        a0 = np.zeros((1, 2))
        b0 = np.zeros((1, 2))
        b0[0, 0] = 1.0
        a_out, b_out, trace = solve_scheduling_oma(sc, q, a0, b0)
        rep = evaluate(sc, Solution(a=a_out, b=b_out, alpha1=a_out[0].copy(), q=q))
        assert not rep.violations, f"solver assignment infeasible: {rep.violations}"
        assert rep.objective >= best_obj - 1e-6, (
            f"solver reached {rep.objective:.6f}, enumeration optimum {best_obj:.6f}"
        )

    def test_impossible_target_raises(self):
        sc = make_scenario([[30.0, 0.0]], [[-30.0, 0.0]], period=2.0, qos=[100.0])
        q = np.zeros((2, 2))
        with pytest.raises(ValueError, match="orthogonal scheduling infeasible"):
            solve_scheduling_oma(sc, q, np.zeros((1, 2)), np.zeros((1, 2)))


class TestSolvePower:
    def test_dominated_slot_gets_no_confidential_power(self):
        # The scheduled QU hears better than the SU, so any confidential
        # power is intercepted; the solve must push the split to zero.
        sc = make_scenario([[60.0, 0.0]], [[5.0, 0.0]], period=1.0)
        a = np.ones((1, 1))
        b = np.ones((1, 1))
        q = np.zeros((1, 2))
        alpha, trace = solve_power(sc, a, b, q, np.array([0.5]))
        assert alpha[0] <= 1e-3, f"dominated slot kept split {alpha[0]:.6f}"
        assert trace.status in ("converged", "iteration-limit")

    def test_matches_per_slot_closed_form(self):
        # With one SU, no scheduled QU and no rate target the slots are
        # independent, so the iterative solve must agree with the per-slot
        # closed-form rule.
        sc = make_scenario([[20.0, 0.0]], [[-50.0, 30.0]], period=3.0)
        a = np.ones((1, 3))
        b = np.zeros((1, 3))
        q = np.array([[0.0, 0.0], [15.0, 0.0], [30.0, 0.0]])
        from uavsec.model import gains_at

        h = gains_at(sc, q, sc.su_positions)[0]
        g = gains_at(sc, q, sc.qu_positions)[0]
        expect = np.array(
            [allocate_power_slot(h[n], 0.0, g[n], sc.rho) for n in range(3)]
        )
        alpha, trace = solve_power(sc, a, b, q, np.full(3, 0.5), omega=1e-8, max_iters=60)
        assert np.allclose(alpha, expect, atol=1e-3), (
            f"iterative split {alpha} vs closed form {expect}"
        )
        obj_got = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q)).objective
        obj_ref = evaluate(sc, Solution(a=a, b=b, alpha1=expect, q=q)).objective
        assert obj_got >= obj_ref - 1e-6, (
            f"iterative objective {obj_got:.9f} below closed form {obj_ref:.9f}"
        )

    def test_grid_oracle_single_slot(self):
        # Scheduled QU plus one unscheduled listener: scan the split on a
        # fine grid and require the solve to match the grid optimum.
        sc = make_scenario([[15.0, 0.0]], [[-70.0, 0.0], [55.0, 25.0]], period=1.0)
        a = np.ones((1, 1))
        b = np.array([[1.0], [0.0]])
        q = np.array([[10.0, 0.0]])
        grid = np.linspace(0.0, 1.0, 10001)
        objs = [
            evaluate(sc, Solution(a=a, b=b, alpha1=np.array([t]), q=q)).objective
            for t in grid
        ]
        best = max(objs)
        alpha, _ = solve_power(sc, a, b, q, np.array([0.5]), omega=1e-8, max_iters=60)
        got = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q)).objective
        assert got >= best - 1e-4, (
            f"solve reached {got:.6f}, grid optimum {best:.6f}"
        )

    def test_never_decreases_objective(self):
        for seed in range(3):
            sc = random_scenario(seed, qos_value=1.5)
            sol = plan(sc)
            before = evaluate(sc, sol).objective
            alpha, trace = solve_power(sc, sol.a, sol.b, sol.q, sol.alpha1)
            after = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=alpha, q=sol.q))
            assert after.objective >= before - 1e-6, (
                f"seed {seed}: power step dropped {before:.6f} -> {after.objective:.6f}"
            )
            assert not after.violations, f"seed {seed}: violations {after.violations}"
            assert np.all(np.diff(trace.objectives) >= -1e-6), (
                f"seed {seed}: objective path not monotone: {trace.objectives}"
            )

    def test_unreachable_target_reports_status(self):
        sc = make_scenario([[20.0, 0.0]], [[-30.0, 0.0]], period=2.0, qos=[50.0])
        a = np.ones((1, 2))
        b = np.zeros((1, 2))  # the QU never gets a slot, target unreachable
        q = np.zeros((2, 2))
        start = np.full(2, 0.4)
        alpha, trace = solve_power(sc, a, b, q, start)
        assert trace.status == "infeasible-qos"
        assert np.array_equal(alpha, start), "split must come back unchanged"

    def test_violating_start_gets_repaired(self):
        sc = make_scenario([[20.0, 0.0]], [[-25.0, 0.0]], period=2.0, qos=[6.0])
        a = np.ones((1, 2))
        b = np.ones((1, 2))
        q = np.zeros((2, 2))
        alpha, trace = solve_power(sc, a, b, q, np.ones(2))
        rep = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q))
        assert not rep.violations, f"violations after solve: {rep.violations}"
        assert any("repaired" in note for note in trace.notes), trace.notes

    def test_resolve_is_a_fixed_point(self):
        sc = random_scenario(1, qos_value=1.0)
        sol = plan(sc)
        alpha1, _ = solve_power(sc, sol.a, sol.b, sol.q, sol.alpha1, omega=1e-9, max_iters=60)
        obj1 = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=alpha1, q=sol.q)).objective
        alpha2, _ = solve_power(sc, sol.a, sol.b, sol.q, alpha1, omega=1e-9, max_iters=1)
        obj2 = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=alpha2, q=sol.q)).objective
        assert abs(obj2 - obj1) <= 1e-4 * max(1.0, abs(obj1)), (
            f"re-solve moved the objective {obj1:.9f} -> {obj2:.9f}"
        )


class TestSolveTrajectory:
    def test_single_slot_matches_positional_scan(self):
        # One free slot with generous mobility: the solve must find the
        # same hover spot quality as a dense two-dimensional scan.
        sc = make_scenario([[30.0, 0.0]], [[-30.0, 0.0]], period=1.0, vmax=500.0)
        a = np.ones((1, 1))
        b = np.zeros((1, 1))
        alpha = np.array([0.7])

        def obj_at(x, y):
            return evaluate(
                sc, Solution(a=a, b=b, alpha1=alpha, q=np.array([[x, y]]))
            ).objective

        xs = np.linspace(-80.0, 80.0, 81)
        best = max(obj_at(x, y) for x in xs for y in xs)
        q_out, trace = solve_trajectory(
            sc, a, b, alpha, np.zeros((1, 2)), omega=1e-7, max_iters=80
        )
        got = obj_at(q_out[0, 0], q_out[0, 1])
        assert got >= best - 5e-3, (
            f"solve reached {got:.6f} at {q_out[0]}, scan optimum {best:.6f}"
        )
        assert trace.status in ("converged", "iteration-limit")

    def test_never_decreases_objective_and_stays_feasible(self):
        for seed in range(3):
            sc = random_scenario(seed, qos_value=1.5)
            sol = plan(sc)
            before = evaluate(sc, sol).objective
            q_out, trace = solve_trajectory(sc, sol.a, sol.b, sol.alpha1, sol.q)
            after = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=sol.alpha1, q=q_out))
            assert after.objective >= before - 1e-6, (
                f"seed {seed}: path step dropped {before:.6f} -> {after.objective:.6f}"
            )
            assert not after.violations, f"seed {seed}: violations {after.violations}"
            assert np.all(np.diff(trace.objectives) >= -1e-6), (
                f"seed {seed}: objective path not monotone: {trace.objectives}"
            )

    def test_moves_toward_the_security_user(self):
        # Hovering at the start with most of the power confidential, one SU
        # to the east, eavesdropper to the west: the improved path must end
        # closer to the SU.  (A hand-built split: the planner would assign
        # a zero split at the symmetric hover, leaving no gradient at all.)
        sc = make_scenario([[60.0, 0.0]], [[-60.0, 0.0]], period=6.0, qos=[0.0])
        a = np.ones((1, 6))
        b = np.ones((1, 6))
        alpha = np.full(6, 0.8)
        q0 = np.zeros((6, 2))
        d_before = np.linalg.norm(q0 - sc.su_positions[0], axis=1).mean()
        q_out, trace = solve_trajectory(sc, a, b, alpha, q0)
        d_after = np.linalg.norm(q_out - sc.su_positions[0], axis=1).mean()
        assert d_after < d_before - 1.0, (
            f"mean SU distance did not shrink: {d_before:.3f} -> {d_after:.3f}"
        )
        assert np.all(q_out[:, 0] >= -1e-6), f"path strayed west: {q_out}"

    def test_mobility_respected_after_solve(self):
        sc = random_scenario(2, qos_value=1.0)
        sol = plan(sc)
        q_out, _ = solve_trajectory(sc, sol.a, sol.b, sol.alpha1, sol.q)
        chain = np.vstack([sc.q_initial[None], q_out, sc.q_final[None]])
        steps = np.linalg.norm(np.diff(chain, axis=0), axis=1)
        assert np.max(steps) <= sc.d_max + 1e-9, (
            f"largest step {np.max(steps):.6f} exceeds limit {sc.d_max:.6f}"
        )

    def test_mobility_violating_start_raises(self):
        sc = make_scenario([[30.0, 0.0]], [[-30.0, 0.0]], period=2.0, vmax=1.0)
        a = np.ones((1, 2))
        b = np.zeros((1, 2))
        q = np.array([[50.0, 0.0], [0.0, 0.0]])  # unreachable first hop
        with pytest.raises(ValueError, match="mobility"):
            solve_trajectory(sc, a, b, np.full(2, 0.5), q)

    def test_missed_target_reports_status(self):
        sc = make_scenario([[30.0, 0.0]], [[-30.0, 0.0]], period=2.0, qos=[8.0])
        a = np.ones((1, 2))
        b = np.ones((1, 2))
        q = np.zeros((2, 2))
        alpha = np.full(2, 0.9)  # confidential-heavy split starves the QU
        rep = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q))
        assert any(v.kind == "qos" for v in rep.violations), "setup must miss the target"
        q_out, trace = solve_trajectory(sc, a, b, alpha, q)
        assert trace.status == "infeasible-qos"
        assert np.array_equal(q_out, q), "path must come back unchanged"

    def test_resolve_is_near_fixed_point(self):
        sc = random_scenario(4, qos_value=1.0)
        sol = plan(sc)
        q1, _ = solve_trajectory(sc, sol.a, sol.b, sol.alpha1, sol.q, omega=1e-5, max_iters=40)
        obj1 = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=sol.alpha1, q=q1)).objective
        q2, _ = solve_trajectory(sc, sol.a, sol.b, sol.alpha1, q1, omega=1e-5, max_iters=40)
        obj2 = evaluate(sc, Solution(a=sol.a, b=sol.b, alpha1=sol.alpha1, q=q2)).objective
        assert obj2 - obj1 <= 1e-2 * max(abs(obj1), 1e-9), (
            f"second solve still improved a converged path: {obj1:.6f} -> {obj2:.6f}"
        )


class TestRangeRateGeometry:
    @given(
        st.floats(min_value=0.0, max_value=1e5),
        st.floats(min_value=0.0, max_value=1e5),
        st.floats(min_value=1e-2, max_value=1e3),
    )
    @settings(max_examples=150, deadline=None)
    def test_tangent_lower_bounds_the_rate(self, s, s0, coeff):
        h2 = 1e4
        tangent = _range_rate(s0, coeff, h2) + _range_rate_slope(s0, coeff, h2) * (s - s0)
        assert _range_rate(s, coeff, h2) >= tangent - 1e-9, (
            f"rate {_range_rate(s, coeff, h2):.9f} below tangent {tangent:.9f}"
        )

    @pytest.mark.parametrize("s0,coeff", [(0.0, 10.0), (2500.0, 10.0), (1e4, 0.3)])
    def test_slope_and_curvature_match_finite_differences(self, s0, coeff):
        h2 = 1e4
        eps = 1e-3
        fd_slope = (_range_rate(s0 + eps, coeff, h2) - _range_rate(s0 - eps, coeff, h2)) / (
            2.0 * eps
        )
        assert _range_rate_slope(s0, coeff, h2) == pytest.approx(fd_slope, rel=1e-6), (
            f"slope mismatch at s0={s0}"
        )
        fd_curv = (
            _range_rate_slope(s0 + eps, coeff, h2) - _range_rate_slope(s0 - eps, coeff, h2)
        ) / (2.0 * eps)
        assert _range_rate_curvature(s0, coeff, h2) == pytest.approx(fd_curv, rel=1e-5), (
            f"curvature mismatch at s0={s0}"
        )

    def test_zero_coefficient_is_silent(self):
        assert _range_rate(100.0, 0.0, 1e4) == 0.0
        assert _range_rate_slope(100.0, 0.0, 1e4) == 0.0
        assert _range_rate_curvature(100.0, 0.0, 1e4) == 0.0

    @given(st.floats(min_value=1e-6, max_value=1.0 - 1e-6), st.floats(min_value=0.1, max_value=50.0))
    @settings(max_examples=100, deadline=None)
    def test_concave_tangent_upper_bounds_power_terms(self, alpha, cf):
        # The linearized terms in the power surrogate sit above the true
        # concave curve, keeping the surrogate conservative.
        ref = 0.5
        slope = cf / (math.log(2.0) * (1.0 + cf * ref))
        tangent = math.log2(1.0 + cf * ref) + slope * (alpha - ref)
        assert math.log2(1.0 + cf * alpha) <= tangent + 1e-9


class TestBlockChain:
    def test_blocks_compose_without_degrading(self):
        # Run the three blocks in sequence from the planner start; the
        # final solution must be feasible and no worse than the start.
        sc = random_scenario(7, qos_value=2.0)
        sol = plan(sc)
        start = evaluate(sc, sol).objective
        a, b, tr_s = solve_scheduling(sc, sol.alpha1, sol.q, sol.a, sol.b)
        if tr_s.status == "rounding-infeasible":
            a, b = sol.a, sol.b
        alpha, _ = solve_power(sc, a, b, sol.q, sol.alpha1)
        q, _ = solve_trajectory(sc, a, b, alpha, sol.q)
        rep = evaluate(sc, Solution(a=a, b=b, alpha1=alpha, q=q))
        assert not rep.violations, f"chained result infeasible: {rep.violations}"
        assert rep.objective >= start - 1e-6, (
            f"chained blocks dropped the objective {start:.6f} -> {rep.objective:.6f}"
        )
