"""Command line front end for the secure-downlink toolkit.

Five subcommands cover the workflow:

* ``plan``: solve one instance with the closed-form planner (or any other
  scheme) and write the solution, its evaluation report, and a trajectory
  figure.
* ``optimize``: same outputs plus a convergence-trace CSV, defaulting to
  the iterative scheme.
* ``sweep``: multi-trial parameter sweep over random instances, written
  as one CSV with per-trial rows and a mean/std summary block.
* ``compare``: every requested scheme once on one instance.
* ``trajectory-dump``: per-slot path and schedule of a saved solution,
  as CSV plus the figure.

An instance comes either from ``--scenario FILE`` (a JSON object whose
keys are exactly the Scenario constructor fields, positions in meters,
radio quantities in dB/dBm) or from ``--seed N`` (a fresh random draw of
user locations in the covered square).  Exit codes: 0 on success, 1 when
the instance cannot be served as requested, 2 on bad input.  Every
command is deterministic: rerunning with the same inputs rewrites
byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._svg import trajectory_svg
from .bench import (
    SCHEMES,
    _ALIASES,
    _SWEPT_KEYS,
    ExperimentSpec,
    _run_scheme,
    gen_scenario,
    sweep,
)
from .model import Scenario, Solution

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_scenario",
    "load_solution",
    "main",
    "solution_from_dict",
    "solution_to_dict",
]

# Short names accepted on the command line on top of the canonical
# scheme names.
_CLI_ALIASES = {
    "planner": "planner-noma",
    "iterative": "iterative-noma",
    "noma": "iterative-noma",
    "oma": "iterative-oma",
}

_FORMATS = ("json", "csv", "svg")

_SCENARIO_FIELDS = tuple(f.name for f in dataclasses.fields(Scenario))
_SOLUTION_FIELDS = tuple(f.name for f in dataclasses.fields(Solution))


class ConfigError(Exception):
    """Bad command input: contradictory flags, malformed files, unknown
    names.  Reported on stderr and mapped to exit code 2."""


def canonical_scheme(name: str) -> str:
    """Resolve a command-line scheme name to its canonical form."""
    low = str(name).strip().lower()
    low = _CLI_ALIASES.get(low, low)
    low = _ALIASES.get(low, low)
    if low not in SCHEMES:
        raise ConfigError(
            f"unknown scheme {name!r}; valid names {sorted(SCHEMES)} "
            f"plus shorthands {sorted(_CLI_ALIASES)}"
        )
    return low


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs of one command.

    Exactly one scenario source may be set (a file or a generator seed),
    the solver thresholds must be positive, and the output formats must
    be known.  ``scheme`` is None for commands that take a scheme list
    instead of a single one.
    """

    scenario_file: str | None
    seed: int | None
    scheme: str | None
    omega: float
    max_iters: int
    out_dir: str
    formats: tuple = _FORMATS

    def __post_init__(self) -> None:
        if (self.scenario_file is None) == (self.seed is None):
            raise ConfigError(
                "exactly one scenario source: pass --scenario FILE or --seed N"
            )
        if not self.omega > 0.0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.max_iters < 1:
            raise ConfigError(f"max-iters must be at least 1, got {self.max_iters}")
        unknown = [f for f in self.formats if f not in _FORMATS]
        if unknown:
            raise ConfigError(f"unknown output formats {unknown}; valid {_FORMATS}")


# ---------------------------------------------------------------------------
# File ingestion.


def _load_json_object(path, what: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} file {path} must hold one JSON object")
    return doc


def _check_fields(doc: dict, expected: tuple, what: str) -> None:
    missing = [f for f in expected if f not in doc]
    unknown = [k for k in doc if k not in expected]
    problems = []
    if missing:
        problems.append(f"missing fields {missing}")
    if unknown:
        problems.append(f"unknown fields {unknown}")
    if problems:
        raise ConfigError(f"{what}: " + "; ".join(problems))


def load_scenario(path) -> Scenario:
    """Read one problem instance from JSON.

    The document must carry exactly the Scenario constructor fields,
    positions as [x, y] meter pairs and radio quantities in dB/dBm.
    """
    doc = _load_json_object(path, "scenario")
    _check_fields(doc, _SCENARIO_FIELDS, f"scenario file {path}")
    try:
        return Scenario(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario file {path}: {exc}") from exc


def solution_to_dict(solution: Solution) -> dict:
    return {
        "a": solution.a.tolist(),
        "b": solution.b.tolist(),
        "alpha1": solution.alpha1.tolist(),
        "q": solution.q.tolist(),
    }


def solution_from_dict(doc: dict) -> Solution:
    if not isinstance(doc, dict):
        raise ConfigError("solution document must be one JSON object")
    _check_fields(doc, _SOLUTION_FIELDS, "solution document")
    try:
        return Solution(doc["a"], doc["b"], doc["alpha1"], doc["q"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solution document: {exc}") from exc


def load_solution(path) -> Solution:
    doc = _load_json_object(path, "solution")
    try:
        return solution_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# File output.  JSON is written with sorted keys and CSV with LF
# endings and '.' decimals, so reruns are byte-identical.


def _report_to_dict(report) -> dict:
    return {
        "objective": float(report.objective),
        "per_su_secrecy": report.per_su_secrecy.tolist(),
        "per_qu_qos": report.per_qu_qos.tolist(),
        "feasible": report.feasible,
        "violations": [
            {"kind": v.kind, "index": v.index, "magnitude": v.magnitude}
            for v in report.violations
        ],
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, blocks) -> None:
    """Write blocks of (header, rows) separated by one blank line."""
    lines = []
    for i, (header, rows) in enumerate(blocks):
        if i:
            lines.append("")
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_csv_cell(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


def _ensure_out(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _get_scenario(config: RunConfig) -> Scenario:
    if config.scenario_file is not None:
        return load_scenario(config.scenario_file)
    try:
        return gen_scenario(config.seed)
    except ValueError as exc:
        raise ConfigError(f"cannot generate scenario from seed {config.seed}: {exc}")


# ---------------------------------------------------------------------------
# Commands.


def _write_instance_outputs(out: Path, scenario, solution, report) -> None:
    _write_json(out / "solution.json", solution_to_dict(solution))
    _write_json(out / "report.json", _report_to_dict(report))
    (out / "trajectory.svg").write_text(trajectory_svg(scenario, solution.q))


def cmd_plan(config: RunConfig) -> int:
    """Solve one instance and write solution, report, and figure."""
    scenario = _get_scenario(config)
    solution, report, _, _ = _run_scheme(
        config.scheme, scenario, config.omega, config.max_iters
    )
    out = _ensure_out(config)
    _write_instance_outputs(out, scenario, solution, report)
    return 0 if report.feasible else 1


def cmd_optimize(config: RunConfig) -> int:
    """Like ``plan`` plus a per-iteration convergence trace.

    The trace CSV starts with an iteration-0 row holding the starting
    point's objective; each later row holds the objective after one full
    block cycle and the scheduling anneal's final distance-to-binary for
    that cycle (empty for schemes without a recorded anneal).
    """
    scenario = _get_scenario(config)
    solution, report, trace, start = _run_scheme(
        config.scheme, scenario, config.omega, config.max_iters
    )
    out = _ensure_out(config)
    _write_instance_outputs(out, scenario, solution, report)

    rows = [[0, float(start), ""]]
    if trace is not None:
        for i, objective in enumerate(trace.objectives):
            kappa = ""
            if i < len(trace.kappa) and trace.kappa[i]:
                kappa = float(trace.kappa[i][-1])
            rows.append([i + 1, float(objective), kappa])
    _write_csv(out / "trace.csv", [(("iteration", "objective", "kappa"), rows)])
    return 0 if report.feasible else 1


def cmd_sweep(config: RunConfig, parameter: str, values: tuple, trials: int,
              schemes: tuple) -> int:
    """Run a parameter sweep and write per-trial rows plus aggregates."""
    try:
        spec = ExperimentSpec(
            parameter=parameter, values=values, trials=trials,
            seed=config.seed, schemes=schemes,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    table = sweep(spec, omega=config.omega, max_iters=config.max_iters)

    trial_rows = [
        [r.scheme, table.parameter, float(r.value), r.trial,
         float(r.objective), int(r.feasible), r.iterations]
        for r in table.rows
    ]
    summary_rows = [
        [s["scheme"], table.parameter, float(s["value"]),
         float(s["mean_objective"]), float(s["std_objective"]),
         s["feasible_trials"], s["infeasible_trials"],
         float(s["mean_iterations"])]
        for s in table.summary()
    ]
    out = _ensure_out(config)
    _write_csv(out / "sweep.csv", [
        (("scheme", "param", "value", "trial", "objective", "feasible",
          "iterations"), trial_rows),
        (("scheme", "param", "value", "mean_objective", "std_objective",
          "feasible_trials", "infeasible_trials", "mean_iterations"),
         summary_rows),
    ])
    return 0


def cmd_compare(config: RunConfig, schemes: tuple) -> int:
    """Run every requested scheme once on one instance."""
    scenario = _get_scenario(config)
    rows = []
    any_feasible = False
    for scheme in schemes:
        try:
            _, report, trace, _ = _run_scheme(
                scheme, scenario, config.omega, config.max_iters
            )
        except ValueError as exc:
            rows.append([scheme, math.nan, 0, 0, str(exc)])
        else:
            iterations = trace.iterations if trace is not None else 0
            any_feasible = any_feasible or report.feasible
            rows.append([
                scheme, float(report.objective), int(report.feasible),
                iterations, "",
            ])
    out = _ensure_out(config)
    _write_csv(out / "compare.csv", [
        (("scheme", "objective", "feasible", "iterations", "error"), rows),
    ])
    return 0 if any_feasible else 1


def cmd_trajectory_dump(config: RunConfig, solution_path) -> int:
    """Write the per-slot path and schedule of a saved solution.

    No feasibility gate: a broken solution is exactly what one wants to
    look at, so the dump succeeds whenever shapes line up.
    """
    scenario = _get_scenario(config)
    solution = load_solution(solution_path)
    n, k, m = scenario.num_slots, scenario.num_su, scenario.num_qu
    shapes = {
        "a": (solution.a.shape, (k, n)),
        "b": (solution.b.shape, (m, n)),
        "alpha1": (solution.alpha1.shape, (n,)),
        "q": (solution.q.shape, (n, 2)),
    }
    for name, (got, want) in shapes.items():
        if got != want:
            raise ConfigError(
                f"solution field {name} has shape {got}, scenario needs {want}"
            )

    rows = []
    for slot in range(n):
        su = int(np.argmax(solution.a[:, slot])) if solution.a[:, slot].max() > 0.5 else ""
        qu = int(np.argmax(solution.b[:, slot])) if solution.b[:, slot].max() > 0.5 else ""
        rows.append([
            slot, float(solution.q[slot, 0]), float(solution.q[slot, 1]),
            su, qu, float(solution.alpha1[slot]),
        ])
    out = _ensure_out(config)
    _write_csv(out / "trajectory.csv", [
        (("slot", "x", "y", "scheduled_su", "scheduled_qu",
          "su_power_share"), rows),
    ])
    (out / "trajectory.svg").write_text(trajectory_svg(scenario, solution.q))
    return 0


# ---------------------------------------------------------------------------
# Argument wiring.


def _add_source_args(sp) -> None:
    sp.add_argument("--scenario", metavar="FILE", default=None,
                    help="JSON instance file (keys = Scenario fields)")
    sp.add_argument("--seed", type=int, default=None,
                    help="draw a random instance from this seed instead")


def _add_solver_args(sp) -> None:
    sp.add_argument("--omega", type=float, default=1e-3,
                    help="relative-improvement stop threshold (default 1e-3)")
    sp.add_argument("--max-iters", type=int, default=20,
                    help="iteration cap per solver loop (default 20)")


def _add_out_arg(sp) -> None:
    sp.add_argument("--out", metavar="DIR", default="uavsec-out",
                    help="output directory (default uavsec-out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavsec",
        description="Secure UAV downlink planning, optimization, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="closed-form plan for one instance")
    _add_source_args(sp)
    sp.add_argument("--scheme", default="planner",
                    help="construction scheme (default planner)")
    _add_solver_args(sp)
    _add_out_arg(sp)

    sp = sub.add_parser("optimize", help="iterative refinement with a trace")
    _add_source_args(sp)
    sp.add_argument("--scheme", default="iterative",
                    help="scheme to run (default iterative)")
    _add_solver_args(sp)
    _add_out_arg(sp)

    sp = sub.add_parser("sweep", help="multi-trial parameter sweep")
    sp.add_argument("--seed", type=int, required=True,
                    help="base seed; trial t draws users from seed + t")
    sp.add_argument("--parameter", required=True, choices=sorted(_SWEPT_KEYS),
                    help="which scenario knob to sweep")
    sp.add_argument("--values", required=True,
                    help="comma-separated increasing values")
    sp.add_argument("--trials", type=int, default=50,
                    help="random instances per value (default 50)")
    sp.add_argument("--schemes", default=None,
                    help="comma-separated scheme names (default all)")
    _add_solver_args(sp)
    _add_out_arg(sp)

    sp = sub.add_parser("compare", help="all schemes once on one instance")
    _add_source_args(sp)
    sp.add_argument("--schemes", default=None,
                    help="comma-separated scheme names (default all)")
    _add_solver_args(sp)
    _add_out_arg(sp)

    sp = sub.add_parser("trajectory-dump",
                        help="per-slot path and schedule of a saved solution")
    _add_source_args(sp)
    sp.add_argument("--solution", metavar="FILE", required=True,
                    help="solution.json written by plan or optimize")
    _add_out_arg(sp)

    return parser


def _parse_values(text: str) -> tuple:
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not tokens:
        raise ConfigError("values list is empty")
    try:
        return tuple(float(tok) for tok in tokens)
    except ValueError:
        raise ConfigError(
            f"cannot parse values {text!r}: comma-separated numbers expected"
        )


def _parse_schemes(text: str | None) -> tuple:
    if text is None:
        return SCHEMES
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not tokens:
        raise ConfigError("schemes list is empty")
    return tuple(canonical_scheme(tok) for tok in tokens)


def _dispatch(args) -> int:
    if args.command == "plan":
        config = RunConfig(
            scenario_file=args.scenario, seed=args.seed,
            scheme=canonical_scheme(args.scheme), omega=args.omega,
            max_iters=args.max_iters, out_dir=args.out,
        )
        return cmd_plan(config)
    if args.command == "optimize":
        config = RunConfig(
            scenario_file=args.scenario, seed=args.seed,
            scheme=canonical_scheme(args.scheme), omega=args.omega,
            max_iters=args.max_iters, out_dir=args.out,
        )
        return cmd_optimize(config)
    if args.command == "sweep":
        config = RunConfig(
            scenario_file=None, seed=args.seed, scheme=None,
            omega=args.omega, max_iters=args.max_iters, out_dir=args.out,
        )
        return cmd_sweep(config, args.parameter, _parse_values(args.values),
                         args.trials, _parse_schemes(args.schemes))
    if args.command == "compare":
        config = RunConfig(
            scenario_file=args.scenario, seed=args.seed, scheme=None,
            omega=args.omega, max_iters=args.max_iters, out_dir=args.out,
        )
        return cmd_compare(config, _parse_schemes(args.schemes))
    if args.command == "trajectory-dump":
        config = RunConfig(
            scenario_file=args.scenario, seed=args.seed, scheme=None,
            omega=1e-3, max_iters=20, out_dir=args.out,
        )
        return cmd_trajectory_dump(config, args.solution)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
