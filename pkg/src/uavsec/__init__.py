"""Secure UAV base-station NOMA downlink: simulator and optimization toolkit.

Subpackages by concern:

* :mod:`uavsec.model` physical model, rates, objective, feasibility
* :mod:`uavsec.convex` LP / smooth convex solvers and bisection
* :mod:`uavsec.subproblems` the three block subproblems (scheduling, power, trajectory)
* :mod:`uavsec.ao` the alternating-optimization driver
* :mod:`uavsec.planner` the closed-form low-complexity planner
* :mod:`uavsec.bench` scenario generation, baselines, sweeps, small oracles
* :mod:`uavsec.cli` command-line front end
"""

from uavsec.ao import ConvergenceTrace, default_init, optimize
from uavsec.bench import (
    ExperimentSpec,
    ResultTable,
    gen_scenario,
    oracle_exhaustive,
    run_scheme,
    sweep,
)
from uavsec.model import (
    EvalReport,
    Scenario,
    SlotRates,
    Solution,
    Violation,
    channel_gain,
    check_feasible,
    evaluate,
    slot_rates,
)
from uavsec.planner import plan

__all__ = [
    "ConvergenceTrace",
    "EvalReport",
    "ExperimentSpec",
    "ResultTable",
    "Scenario",
    "SlotRates",
    "Solution",
    "Violation",
    "channel_gain",
    "check_feasible",
    "default_init",
    "evaluate",
    "gen_scenario",
    "optimize",
    "oracle_exhaustive",
    "plan",
    "run_scheme",
    "slot_rates",
    "sweep",
]

__version__ = "0.1.0"
