"""Command surface of the qmoment CLI."""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError

from qmoment.core.exceptions import InvalidParameter, QMomentError
from qmoment.core.models import GeneratorKind, HeterodyneRecord, MomentTable, Ordering, Port
from qmoment.core.schemas import (
    CalibrationReport,
    MomentTableSchema,
    PurityReport,
    RunConfig,
    SnapshotManifest,
    StateSpec,
    TomographicMomentsSchema,
)
from qmoment.services.crosscheck import DEFAULT_THRESHOLD, crosscheck

from .dependencies import (
    get_amplifier_service,
    get_evolution_service,
    get_moment_service,
    get_oracle_service,
    get_record_repository,
    get_simulation_service,
    get_table_repository,
    get_tomography_service,
    get_uncertainty_service,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

# Flags that map one-to-one onto RunConfig fields.
CONFIG_FLAGS = (
    "state", "cutoff", "R", "ordering", "gamma", "times", "dt",
    "seed", "n", "phases", "order", "input", "output",
)


def parse_times(spec: str, dt: float) -> List[float]:
    """
    Parse ``--times``: a comma list, or ``Nx`` for N times k * dt.

    Raises:
        InvalidParameter: If the text is neither form or a time is negative
    """
    text = spec.strip()
    try:
        if text.endswith("x"):
            count = int(text[:-1])
            if count < 1:
                raise ValueError("count must be positive")
            times = [k * dt for k in range(count)]
        else:
            times = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise InvalidParameter("cannot parse times", {"times": spec, "reason": str(e)}) from e
    if not times or min(times) < 0:
        raise InvalidParameter("times must be a non-empty list of non-negative values", {"times": spec})
    return times


def parse_amp(text: str) -> Dict[str, Any]:
    """Parse ``g:T`` or ``g:T:port`` into AmplifierSchema fields."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise InvalidParameter("amplifier must read g:T or g:T:port", {"amp": text})
    try:
        fields: Dict[str, Any] = {"g": float(parts[0]), "noise_temperature": float(parts[1])}
    except ValueError as e:
        raise InvalidParameter("cannot parse amplifier", {"amp": text}) from e
    if len(parts) == 3:
        fields["port"] = parts[2]
    return fields


def parse_grid(text: str) -> Dict[str, int]:
    """Parse ``THETASxNODES`` such as ``64x80``."""
    thetas, _, nodes = text.lower().partition("x")
    try:
        return {"grid_thetas": int(thetas), "grid_x_nodes": int(nodes)}
    except ValueError as e:
        raise InvalidParameter("grid must read THETASxNODES", {"grid": text}) from e


def build_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from the optional config file with command-line overrides."""
    values: Dict[str, Any] = {}
    if args.config:
        values = get_table_repository().load_run_config(args.config).model_dump(exclude_unset=True)
    for name in CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if getattr(args, "grid", None):
        values.update(parse_grid(args.grid))
    if getattr(args, "amp", None):
        values["amp"] = parse_amp(args.amp)
    return RunConfig.model_validate(values)


def emit(model: BaseModel, output: Optional[str]) -> None:
    """Write a JSON document to ``output`` or stdout."""
    if output:
        get_table_repository().save_model(model, output)
    else:
        sys.stdout.write(model.model_dump_json(indent=2) + "\n")


def require(config: RunConfig, name: str, flag: str) -> Any:
    value = getattr(config, name)
    if value is None:
        raise InvalidParameter(f"{flag} is required", {"option": flag})
    return value


def requested_degree(config: RunConfig, fallback: int) -> int:
    """R from the flags or config file, else ``fallback``."""
    return config.R if "R" in config.model_fields_set else fallback


def load_input_table(config: RunConfig) -> MomentTable:
    return get_table_repository().load_table(require(config, "input", "--in"))


def cmd_state_moments(args: argparse.Namespace, config: RunConfig) -> None:
    """Closed-form moments of a catalogue state, checked against the oracle."""
    spec = StateSpec.parse(require(config, "state", "--state"))
    table = get_moment_service().closed_form_moments(spec, config.ordering, config.R)
    if not args.no_oracle:
        oracle = get_oracle_service()
        state = oracle.realize(spec, config.cutoff)
        residual = table.max_difference(oracle.oracle_moments(state, config.ordering, config.R))
        logger.info("Oracle residual for %s: %.3e", spec.label(), residual)
        if residual > oracle.settings.analytic_tolerance:
            logger.warning("Oracle residual %.3e exceeds tolerance", residual)
    emit(MomentTableSchema.from_table(table), config.output)


def cmd_tomogram(args: argparse.Namespace, config: RunConfig) -> None:
    """Tomogram grid from a moment table or from the Fock oracle."""
    output = require(config, "output", "--output")
    if args.oracle:
        oracle = get_oracle_service()
        state = oracle.realize(StateSpec.parse(require(config, "state", "--state")), config.cutoff)
        grid = oracle.oracle_grid(state, config.grid_thetas, config.grid_x_nodes)
    else:
        source = args.from_moments or require(config, "input", "--from-moments")
        table = get_table_repository().load_table(source)
        grid = get_tomography_service().grid_from_moments(table, config.grid_thetas, config.grid_x_nodes)
    get_record_repository().save_grid(grid, output)


def cmd_invert_tomogram(args: argparse.Namespace, config: RunConfig) -> None:
    """Ordered moments from a tomogram grid CSV."""
    grid = get_record_repository().load_grid(require(config, "input", "--in"))
    table = get_tomography_service().moments_from_tomogram(grid, config.ordering, config.R)
    emit(MomentTableSchema.from_table(table), config.output)


def cmd_crosscheck(args: argparse.Namespace, config: RunConfig) -> None:
    """Heterodyne against homodyne moment estimates."""
    records = get_record_repository()
    simulation = get_simulation_service()
    homodyne = records.load_record(args.homodyne)
    heterodyne = records.load_record(args.heterodyne)
    if isinstance(homodyne, HeterodyneRecord) or not isinstance(heterodyne, HeterodyneRecord):
        raise InvalidParameter(
            "expected a homodyne and a heterodyne record",
            {"homodyne": args.homodyne, "heterodyne": args.heterodyne},
        )
    report = crosscheck(
        simulation.estimate_antinormal_moments(heterodyne, config.R),
        simulation.estimate_moments_from_homodyne(homodyne, Ordering.ANTINORMAL, config.R),
        config.R,
        args.threshold,
    )
    emit(report, config.output)


def cmd_calibrate_amp(args: argparse.Namespace, config: RunConfig) -> None:
    """Noise moments from the amplifier's vacuum response."""
    response = get_table_repository().load_table(args.vacuum_response)
    degree = requested_degree(config, response.max_degree)
    report = get_amplifier_service().calibration_report(response, args.g, degree, Port(args.port))
    emit(report, config.output)


def cmd_deamplify(args: argparse.Namespace, config: RunConfig) -> None:
    """Signal moments from amplified moments and a calibration report."""
    tables = get_table_repository()
    amplified = load_input_table(config)
    amplifier = get_amplifier_service()
    amp = amplifier.model_from_report(tables.load_model(args.calib, CalibrationReport))
    degree = requested_degree(config, min(amplified.max_degree, amp.noise.max_degree))
    table = amplifier.deamplify_moments(amplified, amp, degree)
    emit(MomentTableSchema.from_table(table), config.output)


def cmd_purity(args: argparse.Namespace, config: RunConfig) -> None:
    """Purity, effective temperature and vacuum fidelity of a table."""
    moments = get_moment_service()
    table = moments.as_ordering(load_input_table(config), Ordering.NORMAL)
    series = moments.purity_series(table)
    try:
        temperature = moments.effective_temperature(series.value)
    except QMomentError:
        temperature = None
    emit(
        PurityReport(
            purity=series.value,
            converged=series.converged,
            last_shell=series.last_shell,
            effective_temperature=temperature,
            vacuum_fidelity=moments.vacuum_fidelity(table),
        ),
        config.output,
    )


def cmd_uncertainty(args: argparse.Namespace, config: RunConfig) -> None:
    """Uncertainty relations and moment-matrix positivity."""
    report = get_uncertainty_service().full_report(load_input_table(config), config.order)
    emit(report, config.output)


def cmd_evolve(args: argparse.Namespace, config: RunConfig) -> None:
    """Snapshot series of a propagated table."""
    times = parse_times(require(config, "times", "--times"), config.dt)
    if config.input:
        table = load_input_table(config)
        label = None
    else:
        spec = StateSpec.parse(require(config, "state", "--state or --in"))
        table = get_moment_service().closed_form_moments(spec, Ordering.NORMAL, config.R)
        label = spec.label()

    evolution = get_evolution_service()
    kind = GeneratorKind.DAMPED_NORMAL if config.gamma is not None else GeneratorKind.HARMONIC_NORMAL
    generator = evolution.build_generator(kind, table.max_degree, config.gamma)
    snapshots = evolution.snapshot_series(table, generator, times)

    manifest = SnapshotManifest(
        gamma=config.gamma,
        kind=kind.value,
        times=times,
        R=table.max_degree,
        state=label,
        files=[f"snapshot_{k:02d}.csv" for k in range(len(times))],
    )
    get_record_repository().save_snapshots(snapshots, manifest, config.output or "snapshots")
    sys.stdout.write(manifest.model_dump_json(indent=2) + "\n")


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> None:
    """Synthetic homodyne or heterodyne record."""
    spec = StateSpec.parse(require(config, "state", "--state"))
    output = require(config, "output", "--output")
    simulation = get_simulation_service()
    amp = None
    if config.amp is not None:
        amp = get_amplifier_service().model(
            config.amp.g, config.amp.port, noise_temperature=config.amp.noise_temperature
        )
    if args.mode == "homodyne":
        record = simulation.sample_homodyne(spec, config.phases, config.n, config.seed, config.cutoff, amp)
    else:
        record = simulation.sample_heterodyne(spec, config.n, config.seed, config.cutoff, amp)
    get_record_repository().save_record(record, output)


def cmd_estimate(args: argparse.Namespace, config: RunConfig) -> None:
    """Moments with standard errors from a record."""
    record = get_record_repository().load_record(require(config, "input", "--in"))
    simulation = get_simulation_service()
    if isinstance(record, HeterodyneRecord):
        estimate = simulation.estimate_antinormal_moments(record, config.R)
        emit(MomentTableSchema.from_estimate(estimate), config.output)
    elif args.ordering is not None:
        estimate = simulation.estimate_moments_from_homodyne(record, config.ordering, config.R)
        emit(MomentTableSchema.from_estimate(estimate), config.output)
    else:
        moments = simulation.estimate_tomographic_moments(record, config.R)
        emit(TomographicMomentsSchema.from_moments(moments), config.output)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline step."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file; flags override its values")
    common.add_argument("-o", "--output", help="Output file (JSON goes to stdout when omitted)")
    common.add_argument("--cutoff", type=int, help="Fock cutoff of the oracle state")
    common.add_argument("-R", dest="R", type=int, help="Largest moment degree")
    common.add_argument("--ordering", choices=[o.value for o in Ordering])
    common.add_argument("--state", help="State such as fock:2, coherent:0.3+0.4j, thermal:0.5")
    common.add_argument("--in", dest="input", help="Input file")

    parser = argparse.ArgumentParser(prog="qmoment", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(name, parents=[common], help=help_text)
        command.set_defaults(handler=handler)
        return command

    command = add("state-moments", cmd_state_moments, "closed-form moment table")
    command.add_argument("--no-oracle", action="store_true", help="skip the Fock-oracle check")

    command = add("tomogram", cmd_tomogram, "tomogram grid CSV")
    source = command.add_mutually_exclusive_group()
    source.add_argument("--from-moments", help="moment table JSON")
    source.add_argument("--oracle", action="store_true", help="evaluate --state in the Fock basis")
    command.add_argument("--grid", help="THETASxNODES, e.g. 64x80")

    add("invert-tomogram", cmd_invert_tomogram, "moments from a tomogram grid")

    command = add("crosscheck", cmd_crosscheck, "heterodyne vs homodyne consistency")
    command.add_argument("--homodyne", required=True)
    command.add_argument("--heterodyne", required=True)
    command.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    command = add("calibrate-amp", cmd_calibrate_amp, "noise moments from a vacuum response")
    command.add_argument("--vacuum-response", required=True)
    command.add_argument("--g", type=float, required=True)
    command.add_argument("--port", choices=[p.value for p in Port], default=Port.SIGNAL.value)

    command = add("deamplify", cmd_deamplify, "signal moments from amplified moments")
    command.add_argument("--calib", required=True)

    add("purity", cmd_purity, "purity of a moment table")

    command = add("uncertainty", cmd_uncertainty, "uncertainty relations report")
    command.add_argument("--order", type=int)

    command = add("evolve", cmd_evolve, "snapshot series under harmonic or damped flow")
    command.add_argument("--gamma", type=float)
    command.add_argument("--times", help="comma list or Nx with --dt")
    command.add_argument("--dt", type=float)

    command = add("simulate", cmd_simulate, "synthetic measurement record")
    command.add_argument("--mode", choices=["homodyne", "heterodyne"], required=True)
    command.add_argument("--n", type=int, help="samples (per phase for homodyne)")
    command.add_argument("--seed", type=int)
    command.add_argument("--phases", type=int)
    command.add_argument("--amp", help="g:T or g:T:port")

    add("estimate", cmd_estimate, "moments with standard errors from a record")
    return parser


def error_payload(error: Exception) -> Dict[str, Any]:
    if isinstance(error, QMomentError):
        return error.to_dict()
    if isinstance(error, ValidationError):
        return {
            "error": "ValidationError",
            "context": {"message": "invalid configuration", "errors": json.loads(error.json())},
        }
    return {"error": type(error).__name__, "context": {"message": str(error)}}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv`` and run one subcommand.

    Returns:
        0 on success, 1 for validated failures, 2 for I/O failures
    """
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        args.handler(args, config)
    except OSError as e:
        logger.error("I/O failure: %s", e)
        sys.stdout.write(json.dumps(error_payload(e), default=str) + "\n")
        return EXIT_IO
    except (QMomentError, ValueError, RuntimeError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        sys.stdout.write(json.dumps(error_payload(e), default=str) + "\n")
        return EXIT_INVALID
    return EXIT_OK

