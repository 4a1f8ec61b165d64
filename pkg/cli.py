"""
Command line for the radiation-reaction simulator.

    python cli.py run --scenario scenarios/gyration.yaml --out runs
    python cli.py validate [--check NAME ...] [--mutate flip-self-sign]
    python cli.py field-map --scenario scenarios/static_shell.yaml --grid "3,0:2:21,0,0"
    python cli.py sweep --scenario scenarios/gyration.yaml --parameter h --values 0.02,0.01,0.005
    python cli.py compare-lad --scenario scenarios/gyration.yaml --sigmas 0.1,0.05,0.025
    python cli.py schema

Exit codes: 0 success, 1 validation failed, 2 invalid configuration, 3 step too
large, 4 drift exceeded, 5 any other numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

import settings
from asymptotics import ComparisonReport, compare_exact_vs_lad, fit_power_law, fit_sigma_sweep
from errors import (
    EXIT_OK,
    EXIT_VALIDATION_FAILED,
    ConfigInvalid,
    DriftExceeded,
    RadiationReactionError,
    exit_code_for,
)
from history import TrajectoryHistory
from integrator import IntegrationResult, integrate
from outputs import write_comparison, write_csv, write_diagnostics, write_field_map, write_summary, write_trajectory
from scenario import SWEEP_PARAMETERS, Scenario, load_scenario, with_parameter
from selffield import evaluate_self_potential
from validation import MUTATIONS, format_table, run_checks

logger = logging.getLogger(__name__)


@dataclass
class RunArtifacts:
    directory: Path
    result: IntegrationResult
    status: str = "completed"
    files: dict[str, str] = field(default_factory=dict)
    comparison: Optional[ComparisonReport] = None


def parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigInvalid(f"cannot parse value list {text!r}: {e}") from e
    if not values:
        raise ConfigInvalid("the value list is empty")
    return values


def parse_grid(grid: str) -> np.ndarray:
    """
    Grid string "ct,x,y,z" where each entry is a number or start:stop:count.
    Returns the (n, 4) array of field points, ct varying slowest.
    """
    entries = grid.split(",")
    if len(entries) != 4:
        raise ConfigInvalid(f"grid needs 4 comma-separated entries (ct,x,y,z), got {grid!r}")
    axes = []
    for entry in entries:
        parts = entry.split(":")
        try:
            if len(parts) == 1:
                axes.append(np.array([float(parts[0])]))
            elif len(parts) == 3:
                count = int(parts[2])
                if count < 1:
                    raise ValueError("count must be positive")
                axes.append(np.linspace(float(parts[0]), float(parts[1]), count))
            else:
                raise ValueError("expected a number or start:stop:count")
        except ValueError as e:
            raise ConfigInvalid(f"bad grid entry {entry!r}: {e}") from e
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def field_map_rows(history: TrajectoryHistory, scenario: Scenario, points: np.ndarray) -> list[tuple]:
    """Self 4-potential at each point; a failing point is flagged and the map continues."""
    rows = []
    for point in points:
        try:
            evaluation = evaluate_self_potential(history, point, scenario.particle)
        except RadiationReactionError as e:
            logger.warning(f"field point {point.tolist()}: {type(e).__name__}: {e}")
            rows.append((*point.tolist(), None, None, None, None, "", type(e).__name__))
            continue
        rows.append((*point.tolist(), *evaluation.potential.tolist(), evaluation.branch, "ok"))
    return rows


def comparison_samples(history: TrajectoryHistory, scenario: Scenario, count: int) -> np.ndarray:
    """Sample times clear of the turn-on and of the last grid points."""
    ramp = scenario.resolved_ramp()
    lo = max(history.s0, ramp.s0 + ramp.width) + 4.0 * scenario.particle.sigma
    hi = history.s_last - 2.0 * scenario.integrator.step
    if hi <= lo:
        raise ConfigInvalid(f"run too short for the LAD comparison: needs s_end beyond {lo}")
    return np.linspace(lo, hi, count)


def execute_run(scenario: Scenario, out_dir: Path) -> RunArtifacts:
    """Integrate and write every artifact enabled in scenario.outputs. DriftExceeded propagates after the partial run is written."""
    directory = scenario.output_directory(out_dir)
    try:
        result = integrate(scenario)
        status = "completed"
    except DriftExceeded as e:
        if e.result is None:
            raise
        logger.error(f"{scenario.name}: {e}")
        _write_artifacts(RunArtifacts(directory, e.result, "drift_exceeded"), scenario)
        raise
    artifacts = RunArtifacts(directory, result, status)
    _write_artifacts(artifacts, scenario)
    return artifacts


def _write_artifacts(artifacts: RunArtifacts, scenario: Scenario) -> None:
    directory, result = artifacts.directory, artifacts.result
    outputs = scenario.outputs
    if outputs.trajectory:
        artifacts.files["trajectory"] = str(write_trajectory(directory / "trajectory.csv", result.history))
    if outputs.diagnostics:
        artifacts.files["diagnostics"] = str(write_diagnostics(directory / "diagnostics.csv", result.diagnostics))
    if artifacts.status == "completed" and outputs.comparison:
        samples = comparison_samples(result.history, scenario, outputs.comparison_samples)
        artifacts.comparison = compare_exact_vs_lad(result.history, samples, scenario.particle)
        artifacts.files["comparison"] = str(write_comparison(directory / "comparison.csv", [artifacts.comparison]))
    if artifacts.status == "completed" and outputs.field_map:
        rows = field_map_rows(result.history, scenario, parse_grid(outputs.field_map))
        artifacts.files["field_map"] = str(write_field_map(directory / "field_map.csv", rows))
    summary = {
        "status": artifacts.status,
        **(result.summary.to_dict() if result.summary else {}),
        "artifacts": dict(artifacts.files),
        "scenario_config": scenario.model_dump(mode="json"),
    }
    if artifacts.comparison is not None:
        summary["lad_mean_deviation"] = artifacts.comparison.mean_deviation
        summary["lad_max_deviation"] = artifacts.comparison.max_deviation
    artifacts.files["summary"] = str(write_summary(directory / "summary.yaml", summary))


def command_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    artifacts = execute_run(scenario, Path(args.out))
    summary = artifacts.result.summary
    print(
        f"{scenario.name}: {summary.steps} steps, max |u.u - 1| = {summary.max_u_norm_residual:.3e}, "
        f"gamma_end = {summary.gamma_end:.6f}, artifacts in {artifacts.directory}"
    )
    return EXIT_OK


def command_validate(args: argparse.Namespace) -> int:
    try:
        results = run_checks(args.check, args.mutate)
    except ValueError as e:
        raise ConfigInvalid(str(e)) from e
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION_FAILED


def command_field_map(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    points = parse_grid(args.grid)
    result = integrate(scenario)
    rows = field_map_rows(result.history, scenario, points)
    path = write_field_map(scenario.output_directory(Path(args.out)) / "field_map.csv", rows)
    failed = sum(1 for row in rows if row[-1] != "ok")
    print(f"{len(rows)} field points written to {path} ({failed} flagged)")
    return EXIT_OK


def _sweep_run(scenario: Scenario, parameter: str, value: float, out_dir: str) -> dict:
    """One sweep member; failures are reported in the returned row, never raised."""
    row = {"parameter": parameter, "value": value, "status": "ok", "exit_code": EXIT_OK}
    try:
        variant = with_parameter(scenario, parameter, value)
        if parameter == "sigma":
            variant = variant.model_copy(update={"outputs": variant.outputs.model_copy(update={"comparison": True})})
        artifacts = execute_run(variant, Path(out_dir))
    except RadiationReactionError as e:
        row.update(status=type(e).__name__, exit_code=exit_code_for(e), error=str(e))
        return row
    summary = artifacts.result.summary
    row.update(
        steps=summary.steps,
        max_u_norm_residual=summary.max_u_norm_residual,
        gamma_end=summary.gamma_end,
        final_u=summary.final_u,
        final_r=summary.final_r,
    )
    if artifacts.comparison is not None:
        row["lad_mean_deviation"] = artifacts.comparison.mean_deviation
    return row


def convergence_orders(values: Sequence[float], finals: Sequence[np.ndarray]) -> list[float]:
    """Observed order from successive differences of final states along a refining step sequence."""
    orders = []
    for i in range(len(values) - 2):
        coarse = np.linalg.norm(finals[i] - finals[i + 1])
        fine = np.linalg.norm(finals[i + 1] - finals[i + 2])
        ratio = values[i] / values[i + 1]
        if coarse > 0.0 and fine > 0.0 and ratio > 1.0:
            orders.append(float(math.log(coarse / fine) / math.log(ratio)))
    return orders


def sweep(scenario: Scenario, parameter: str, values: Sequence[float], out_dir: Path, workers: int = 1) -> dict:
    if not values:
        raise ConfigInvalid("sweep needs at least one value")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigInvalid(f"unknown sweep parameter {parameter!r}, expected one of {', '.join(SWEEP_PARAMETERS)}")
    base = out_dir / f"{scenario.name}-sweep-{parameter}"
    workers = max(1, min(workers, len(values)))
    logger.info(f"sweeping {parameter} over {list(values)} with {workers} workers")
    if workers == 1:
        rows = [_sweep_run(scenario, parameter, v, str(base)) for v in values]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_run, scenario, parameter, v, str(base)) for v in values]
            rows = [f.result() for f in futures]

    aggregate: dict = {"parameter": parameter, "values": list(values), "runs": rows}
    ok = [row for row in rows if row["status"] == "ok"]
    if parameter == "h" and len(ok) >= 3:
        ordered = sorted(ok, key=lambda row: -row["value"])
        finals = [np.array(row["final_u"] + row["final_r"]) for row in ordered]
        aggregate["convergence_orders"] = convergence_orders([row["value"] for row in ordered], finals)
    if parameter == "sigma":
        fitted = [row for row in ok if row.get("lad_mean_deviation", 0.0) > 0.0]
        if len(fitted) >= 2:
            fit = fit_power_law([row["value"] for row in fitted], [row["lad_mean_deviation"] for row in fitted])
            aggregate["lad_exponent"] = fit.exponent
            aggregate["lad_prefactor"] = fit.prefactor

    columns = ("value", "status", "exit_code", "steps", "max_u_norm_residual", "gamma_end", "lad_mean_deviation")
    preamble = [f"parameter={parameter}"]
    if "convergence_orders" in aggregate:
        preamble.append("convergence_orders=" + " ".join(repr(o) for o in aggregate["convergence_orders"]))
    if "lad_exponent" in aggregate:
        preamble.append(f"lad_exponent={aggregate['lad_exponent']!r}")
    write_csv(base / "sweep.csv", columns, ([row.get(c) for c in columns] for row in rows), preamble)
    write_summary(base / "sweep.yaml", aggregate)
    return aggregate


def command_sweep(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    aggregate = sweep(scenario, args.parameter, parse_values(args.values), Path(args.out), args.workers)
    for row in aggregate["runs"]:
        print(f"{args.parameter}={row['value']!r}: {row['status']}")
    if "convergence_orders" in aggregate:
        print("observed convergence orders: " + ", ".join(f"{o:.2f}" for o in aggregate["convergence_orders"]))
    if "lad_exponent" in aggregate:
        print(f"LAD deviation exponent: {aggregate['lad_exponent']:.3f}")
    failed = [row for row in aggregate["runs"] if row["status"] != "ok"]
    return EXIT_OK if not failed else max(row["exit_code"] for row in failed)


def compare_lad(scenario: Scenario, sigmas: Sequence[float], out_dir: Path, samples: int) -> list[ComparisonReport]:
    reports = []
    for sigma in sigmas:
        variant = with_parameter(scenario, "sigma", sigma)
        result = integrate(variant)
        s_samples = comparison_samples(result.history, variant, samples)
        reports.append(compare_exact_vs_lad(result.history, s_samples, variant.particle))
    if len(reports) >= 2:
        fit_sigma_sweep(reports)
    write_comparison(out_dir / f"{scenario.name}-lad" / "comparison.csv", reports)
    return reports


def command_compare_lad(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    reports = compare_lad(scenario, parse_values(args.sigmas), Path(args.out), args.samples)
    for report in reports:
        print(f"sigma={report.sigma!r}: mean deviation {report.mean_deviation:.4e}, max epsilon {report.max_epsilon:.3e}")
    if reports[0].fit is not None:
        print(f"fitted exponent {reports[0].fit.exponent:.3f}")
    return EXIT_OK


def command_schema(args: argparse.Namespace) -> int:
    print(json.dumps(Scenario.model_json_schema(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=settings.OUTPUT_DIR, help="output directory (default $RR_OUTPUT_DIR or runs)")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    parser = argparse.ArgumentParser(description="Exact radiation-reaction simulator for a finite-size shell charge")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="integrate a scenario and write its artifacts")
    run.add_argument("--scenario", required=True)
    run.set_defaults(handler=command_run)

    validate = commands.add_parser("validate", parents=[common], help="run the invariant suite")
    validate.add_argument("--check", action="append", help="run only this check (repeatable)")
    validate.add_argument("--mutate", choices=sorted(MUTATIONS), help="run the suite against a deliberately broken engine")
    validate.set_defaults(handler=command_validate)

    field_map = commands.add_parser("field-map", parents=[common], help="sample the self 4-potential on a grid")
    field_map.add_argument("--scenario", required=True)
    field_map.add_argument("--grid", required=True, help='"ct,x,y,z" with numbers or start:stop:count entries')
    field_map.set_defaults(handler=command_field_map)

    sweep_cmd = commands.add_parser("sweep", parents=[common], help="run a scenario over a list of parameter values")
    sweep_cmd.add_argument("--scenario", required=True)
    sweep_cmd.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sweep_cmd.add_argument("--values", required=True, help="comma-separated values")
    sweep_cmd.add_argument("--workers", type=int, default=settings.SWEEP_WORKERS)
    sweep_cmd.set_defaults(handler=command_sweep)

    compare = commands.add_parser("compare-lad", parents=[common], help="exact self-force against the LAD form over sigma")
    compare.add_argument("--scenario", required=True)
    compare.add_argument("--sigmas", required=True, help="comma-separated charge radii")
    compare.add_argument("--samples", type=int, default=20)
    compare.set_defaults(handler=command_compare_lad)

    schema = commands.add_parser("schema", parents=[common], help="print the scenario JSON schema")
    schema.set_defaults(handler=command_schema)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings.configure_logging(args.quiet)
    try:
        return args.handler(args)
    except RadiationReactionError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
