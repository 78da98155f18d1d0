"""Benchmark-harness checks: scenario generation, baseline schemes, sweeps,
and the exhaustive oracle (cross-checked against a direct enumeration that
builds full solutions and scores them through the evaluator)."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavsec.bench import (
    SCHEMES,
    ExperimentSpec,
    ResultTable,
    TrialRow,
    _oma_start,
    _pareto_prune,
    _perimeter_path,
    gen_scenario,
    oracle_exhaustive,
    run_scheme,
    sweep,
)
from uavsec.model import Scenario, Solution, check_feasible, evaluate
from uavsec.planner import plan


def make_scenario(su, qu, *, height=100.0, period=24.0, slot=1.0, vmax=20.0,
                  qos=None, power=20.0):
    su = np.asarray(su, dtype=float)
    qu = np.asarray(qu, dtype=float)
    if qos is None:
        qos = [0.0] * len(qu)
    return Scenario(
        su_positions=su, qu_positions=qu, height=height,
        flight_period=period, slot_length=slot, num_slots=int(round(period / slot)),
        max_speed=vmax, q_initial=np.zeros(2), q_final=np.zeros(2),
        total_power_dbm=power, noise_power_dbm=-100.0, ref_gain_db=-70.0,
        qos_targets=np.asarray(qos, dtype=float),
    )


class TestGenScenario:
    def test_deterministic_per_seed(self):
        s1, s2 = gen_scenario(5), gen_scenario(5)
        assert np.array_equal(s1.su_positions, s2.su_positions)
        assert np.array_equal(s1.qu_positions, s2.qu_positions)
        s3 = gen_scenario(6)
        assert not np.array_equal(s1.su_positions, s3.su_positions)

    def test_defaults(self):
        sc = gen_scenario(0)
        assert sc.num_su == 3 and sc.num_qu == 3
        assert sc.num_slots == 100 and sc.height == 100.0
        assert sc.rho == pytest.approx(1e12), f"rho {sc.rho:.3e} != 1e12"
        assert np.all(sc.qos_targets == 10.0)
        assert np.all(np.abs(sc.su_positions) <= 50.0)
        assert np.all(np.abs(sc.qu_positions) <= 50.0)

    def test_overrides_leave_positions_alone(self):
        base = gen_scenario(3)
        powered = gen_scenario(3, {"total_power_dbm": 30.0})
        assert powered.total_power_dbm == 30.0
        assert np.array_equal(base.su_positions, powered.su_positions)
        assert np.array_equal(base.qu_positions, powered.qu_positions)
        short = gen_scenario(3, {"flight_period": 50.0})
        assert short.num_slots == 50
        assert np.array_equal(base.su_positions, short.su_positions)

    def test_qos_override(self):
        sc = gen_scenario(0, {"qos_target": 20.0})
        assert np.all(sc.qos_targets == 20.0)

    def test_unknown_parameter(self):
        with pytest.raises(ValueError, match="unknown scenario parameters"):
            gen_scenario(0, {"altitude": 5.0})


class TestExperimentSpec:
    def test_validation(self):
        good = ExperimentSpec("power", (10.0, 20.0), 2, 0, ("planner-noma",))
        assert good.values == (10.0, 20.0)
        with pytest.raises(ValueError, match="at least one trial"):
            ExperimentSpec("power", (10.0,), 0, 0, ("planner-noma",))
        with pytest.raises(ValueError, match="increase strictly"):
            ExperimentSpec("power", (20.0, 10.0), 1, 0, ("planner-noma",))
        with pytest.raises(ValueError, match="unknown sweep parameter"):
            ExperimentSpec("bandwidth", (10.0,), 1, 0, ("planner-noma",))
        with pytest.raises(ValueError, match="unknown schemes"):
            ExperimentSpec("power", (10.0,), 1, 0, ("genie-aided",))

    def test_alias_normalizes(self):
        spec = ExperimentSpec("power", (10.0,), 1, 0, ("iterative-equal-power",))
        assert spec.schemes == ("equal-power-iterated",)


class TestRunScheme:
    def small(self, seed=11, qos=0.5):
        rng = np.random.default_rng(seed)
        return make_scenario(
            rng.uniform(-50, 50, (2, 2)), rng.uniform(-50, 50, (2, 2)),
            qos=[qos, qos],
        )

    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="unknown scheme"):
            run_scheme("waterfilling", self.small())

    def test_planner_scheme_matches_plan(self):
        sc = self.small()
        sol, rep = run_scheme("planner-noma", sc)
        ref = evaluate(sc, plan(sc))
        assert rep.objective == pytest.approx(ref.objective, abs=1e-12)
        assert rep.feasible

    def test_equal_power_pins_the_split(self):
        sc = self.small()
        sol, rep = run_scheme("equal-power", sc)
        assert rep.feasible
        # Repair may lower the split on slots serving a short quality user;
        # everywhere else it stays one half.
        assert np.all(sol.alpha1 <= 0.5 + 1e-12), f"split above half: {sol.alpha1.max()}"
        assert np.any(np.abs(sol.alpha1 - 0.5) < 1e-12)

    def test_near_near_schedules_by_distance(self):
        # Proximity pairing can starve a quality user outright (that is the
        # point of the baseline), so test the rule with no rate targets.
        sc = self.small(qos=0.0)
        sol, rep = run_scheme("near-near", sc)
        assert rep.feasible
        su_d = np.linalg.norm(
            sol.q[None, :, :] - sc.su_positions[:, None, :], axis=2
        )
        expect = np.argmin(su_d, axis=0)
        got = np.argmax(sol.a, axis=0)
        assert np.array_equal(got, expect), "schedule is not nearest-security-user"

    def test_simplified_trajectory_rides_the_square(self):
        sc = gen_scenario(2)
        sol, rep = run_scheme("simplified-trajectory", sc)
        assert not [v for v in check_feasible(sc, sol) if v.kind == "mobility"]
        on_edge = np.sum(np.isclose(np.abs(sol.q), 50.0, atol=1e-6).any(axis=1))
        assert on_edge >= 80, f"only {on_edge}/100 slots on the square edge"

    def test_iterated_beats_its_baseline(self):
        sc = self.small(seed=13, qos=0.0)
        _, base = run_scheme("near-near", sc)
        _, better = run_scheme("near-near-iterated", sc)
        assert better.objective >= base.objective - 1e-6, (
            f"iteration lost ground {base.objective:.6f} -> {better.objective:.6f}"
        )
        assert better.feasible

    def test_iterative_noma_beats_planner(self):
        sc = self.small(seed=17)
        _, low = run_scheme("planner-noma", sc)
        _, high = run_scheme("iterative-noma", sc)
        assert high.objective >= low.objective - 1e-6
        assert high.feasible

    def test_iterative_oma_runs_orthogonal(self):
        sc = gen_scenario(4, {"flight_period": 30.0, "qos_target": 3.0})
        sol, rep = run_scheme("iterative-oma", sc)
        assert rep.feasible
        col = sol.a.sum(axis=0) + sol.b.sum(axis=0)
        assert np.max(col) <= 1.0 + 1e-9, "two users share a slot in orthogonal mode"


class TestOmaStart:
    def test_feasible_one_user_per_slot(self):
        sc = gen_scenario(4, {"flight_period": 40.0, "qos_target": 3.0})
        sol = _oma_start(sc)
        assert not check_feasible(sc, sol)
        col = sol.a.sum(axis=0) + sol.b.sum(axis=0)
        assert np.max(col) <= 1.0 + 1e-12, "two users share a slot"
        assert np.array_equal(sol.alpha1, np.clip(sol.a.sum(axis=0), 0.0, 1.0))

    def test_meets_targets_through_flips(self):
        sc = gen_scenario(9, {"flight_period": 30.0, "qos_target": 6.0})
        sol = _oma_start(sc)
        rep = evaluate(sc, sol)
        assert np.all(rep.per_qu_qos >= sc.qos_targets - 1e-6), (
            f"targets missed: {rep.per_qu_qos} vs {sc.qos_targets}"
        )


class TestPerimeterPath:
    def test_mobility_and_edges(self):
        sc = gen_scenario(0)
        q = _perimeter_path(sc)
        steps = np.diff(np.vstack([sc.q_initial, q, sc.q_final]), axis=0)
        assert np.max(np.linalg.norm(steps, axis=1)) <= sc.d_max + 1e-9
        # Slot positions straddle the corners mid-step, so check edge
        # coverage: at 20 m/s a 100 s flight laps the 400 m square several
        # times and must touch all four sides.
        edges_hit = sum([
            np.any(np.isclose(q[:, 0], 50.0, atol=1e-6)),
            np.any(np.isclose(q[:, 0], -50.0, atol=1e-6)),
            np.any(np.isclose(q[:, 1], 50.0, atol=1e-6)),
            np.any(np.isclose(q[:, 1], -50.0, atol=1e-6)),
        ])
        assert edges_hit == 4, f"only {edges_hit} square edges visited"

    def test_short_horizon_still_returns(self):
        sc = gen_scenario(0, {"flight_period": 6.0})
        q = _perimeter_path(sc)
        assert np.linalg.norm(q[-1] - sc.q_final) <= sc.d_max + 1e-9


class TestSweep:
    def test_rows_reproducible_and_counted(self):
        spec = ExperimentSpec(
            "power", (10.0, 20.0), 2, 100, ("planner-noma", "equal-power")
        )
        t1, t2 = sweep(spec), sweep(spec)
        assert len(t1.rows) == 8
        assert t1.rows == t2.rows, "same spec, different tables"
        for row in t1.rows:
            assert row.seed == 100 + row.trial

    def test_mean_excludes_infeasible(self):
        rows = [
            TrialRow("planner-noma", 10.0, 0, 0, 0.5, 0, True),
            TrialRow("planner-noma", 10.0, 1, 1, math.nan, 0, False, "unreachable"),
        ]
        table = ResultTable("power", ("planner-noma",), (10.0,), 2, rows)
        assert table.mean("planner-noma", 10.0) == pytest.approx(0.5)
        assert table.infeasible_count("planner-noma", 10.0) == 1
        summary = table.summary()
        assert summary[0]["feasible_trials"] == 1

    def test_row_count_invariant(self):
        with pytest.raises(ValueError, match="row count"):
            ResultTable("power", ("planner-noma",), (10.0,), 2, [])

    def test_impossible_target_is_reported_not_raised(self):
        spec = ExperimentSpec("qos", (400.0,), 1, 0, ("planner-noma",))
        table = sweep(spec)
        row = table.rows[0]
        assert not row.feasible and row.error, "infeasible trial lost its report"
        assert math.isnan(table.mean("planner-noma", 400.0))


def brute_force_best(scenario, q, grid):
    """Direct enumeration of every schedule and grid power split, scored
    through the evaluator; the oracle must match this on tiny cases."""
    alphas = np.linspace(0.0, 1.0, grid)
    k_count, m_count, n = scenario.num_su, scenario.num_qu, scenario.num_slots
    best = -math.inf
    for a_asg in itertools.product(range(-1, k_count), repeat=n):
        for b_asg in itertools.product(range(-1, m_count), repeat=n):
            for alpha_idx in itertools.product(range(grid), repeat=n):
                a = np.zeros((k_count, n))
                b = np.zeros((m_count, n))
                for slot in range(n):
                    if a_asg[slot] >= 0:
                        a[a_asg[slot], slot] = 1.0
                    if b_asg[slot] >= 0:
                        b[b_asg[slot], slot] = 1.0
                sol = Solution(a=a, b=b, alpha1=alphas[list(alpha_idx)], q=q.copy())
                rep = evaluate(scenario, sol)
                if np.all(rep.per_qu_qos >= scenario.qos_targets - 1e-9):
                    best = max(best, rep.objective)
    return best


class TestOracle:
    def test_size_guard(self):
        sc = gen_scenario(0)  # K=M=3, N=100
        with pytest.raises(ValueError, match="too large"):
            oracle_exhaustive(sc, np.zeros((sc.num_slots, 2)), 11)

    def test_single_slot_reduction(self):
        sc = make_scenario([[30.0, 0.0]], [[-40.0, 10.0]], period=1.0, qos=[1.0])
        q = np.zeros((1, 2))
        got = oracle_exhaustive(sc, q, 101)
        want = brute_force_best(sc, q, 101)
        assert got == pytest.approx(want, abs=1e-9), f"oracle {got} != direct {want}"

    def test_matches_direct_enumeration_one_su(self):
        sc = make_scenario([[25.0, 5.0]], [[-30.0, 0.0]], period=2.0, qos=[1.5])
        q = np.array([[5.0, 0.0], [-5.0, 0.0]])
        got = oracle_exhaustive(sc, q, 5)
        want = brute_force_best(sc, q, 5)
        assert got == pytest.approx(want, abs=1e-9), f"oracle {got} != direct {want}"

    def test_matches_direct_enumeration_two_su(self):
        sc = make_scenario(
            [[25.0, 5.0], [-20.0, -10.0]], [[-30.0, 20.0], [35.0, -15.0]],
            period=2.0, qos=[1.0, 0.5],
        )
        q = np.array([[5.0, 0.0], [-5.0, 0.0]])
        got = oracle_exhaustive(sc, q, 3)
        want = brute_force_best(sc, q, 3)
        assert got == pytest.approx(want, abs=1e-9), f"oracle {got} != direct {want}"

    def test_impossible_target_reports_infeasible(self):
        sc = make_scenario([[30.0, 0.0]], [[-40.0, 10.0]], period=2.0, qos=[50.0])
        assert oracle_exhaustive(sc, np.zeros((2, 2)), 11) == -math.inf


class TestParetoPrune:
    @given(st.lists(
        st.tuples(st.floats(0, 10, allow_nan=False), st.floats(0, 5, allow_nan=False)),
        min_size=1, max_size=40,
    ))
    @settings(max_examples=60, deadline=None)
    def test_prune_keeps_the_frontier(self, pts):
        qos = np.array([p[0] for p in pts])
        sec = np.array([p[1] for p in pts])
        fq, fs = _pareto_prune(qos, sec)
        assert np.all(np.diff(fq) > 0) or len(fq) == 1
        assert np.all(np.diff(fs) < 0) or len(fs) == 1
        for p_q, p_s in pts:
            covered = np.any((fq >= p_q) & (fs >= p_s))
            assert covered, f"point ({p_q}, {p_s}) not covered by the frontier"
