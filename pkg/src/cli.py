"""Command-line front end.

Usage:
    python app.py solve spec.json [--out eq.json] [--csv table.csv]
    python app.py verify spec.json [--tol 1e-4] [--seed 42] [--points 20]
    python app.py certify --n-level 2
    python app.py temporal spec.json --clusters "1;2,3"
    python app.py sweep spec.json --kind cost --target 3 --grid 0.5,1,2,4
    python app.py counterexample --kind product

Shared options, before or after the subcommand: --jobs, --seed, --log-level.
They override the CONTEST_* environment settings.

Exit codes:
    0: success, every check passed
    1: a check or asserted property failed
    2: input error (bad spec, flags, partition, file or setting)
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import replace
from typing import Any

import polars as pl

from src.analytics.sweeps import (
    ComparativeStaticsError,
    effort_cost_r_monotonicity,
    product_conjecture_counterexample,
    salience_profile,
    salience_r_profile,
    sweep_battle_costs,
    sweep_budget_ratio,
    sweep_cost_index,
)
from src.certificate.blocks import CertificateError, certify
from src.components.exports import (
    ExportError,
    equilibrium_table,
    export_to_csv,
    export_to_json,
    write_bytes,
)
from src.contest.domain import (
    ContestSpec,
    SpecValidationError,
    TemporalStructure,
    load_spec,
)
from src.contest.equilibrium import EquilibriumError, solve
from src.contest.probability import BoundaryAllocationError, team_win_prob
from src.contest.temporal import clinch_neutrality_residual, eval_temporal
from src.utils.config import LOG_LEVELS, ConfigError, Settings, load_settings
from src.verification.moments import EnumerationLimitError
from src.verification.oracles import (
    ConvergenceError,
    log_concavity_spot_checks,
    quasiconcavity_counterexample,
    verify_equilibrium,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

TEMPORAL_TOL = 1e-12
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

SWEEP_KINDS = ("cost", "battle-cost", "budget", "salience", "salience-r", "effort-r")

FAILURE_ERRORS = (
    CertificateError,
    ComparativeStaticsError,
    ConvergenceError,
    EquilibriumError,
)
INPUT_ERRORS = (
    SpecValidationError,
    BoundaryAllocationError,
    EnumerationLimitError,
    ExportError,
    ConfigError,
    OSError,
    ValueError,
)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        msg = f"expected a comma-separated list of numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from e
    if not values:
        msg = "grid must not be empty"
        raise argparse.ArgumentTypeError(msg)
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        msg = f"expected an integer, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from e
    if value < 1:
        msg = f"expected a positive integer, got {value}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _common_options() -> argparse.ArgumentParser:
    # SUPPRESS stops an unset subcommand flag from clobbering the global one.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--jobs", type=_positive_int, default=argparse.SUPPRESS, help="worker processes"
    )
    common.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized checks"
    )
    common.add_argument(
        "--log-level", choices=LOG_LEVELS, default=argparse.SUPPRESS, help="log level"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser whose --jobs, --seed and --log-level go before or after the command."""
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="team-contest",
        description="Solve and verify two-team majoritarian multi-battle contests.",
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return subparsers.add_parser(name, help=help_text, parents=[common])

    solve_cmd = command("solve", "closed-form equilibrium")
    solve_cmd.add_argument("spec", help="contest spec JSON file")
    solve_cmd.add_argument("--out", help="write the equilibrium JSON here")
    solve_cmd.add_argument("--csv", help="write the per-battle table here")

    verify_cmd = command("verify", "numerical equilibrium checks")
    verify_cmd.add_argument("spec")
    verify_cmd.add_argument("--tol", type=float, default=1e-4)
    verify_cmd.add_argument(
        "--points", type=_positive_int, default=20, help="log-concavity samples"
    )
    verify_cmd.add_argument("--out")

    certify_cmd = command("certify", "exact PSD certificate")
    certify_cmd.add_argument("--n-level", type=int, required=True)
    certify_cmd.add_argument("--out")

    temporal_cmd = command("temporal", "sequential play")
    temporal_cmd.add_argument("spec")
    temporal_cmd.add_argument(
        "--clusters", required=True, help='1-based clusters, e.g. "1;2,3"'
    )
    temporal_cmd.add_argument(
        "--trivial", choices=("primitive", "half"), default="primitive"
    )

    sweep_cmd = command("sweep", "comparative statics")
    sweep_cmd.add_argument("spec")
    sweep_cmd.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    sweep_cmd.add_argument(
        "--target", type=_positive_int, default=1, help="1-based battle number"
    )
    sweep_cmd.add_argument("--grid", type=_float_list, required=True)
    sweep_cmd.add_argument("--csv", help="write the table here instead of stdout")

    counter_cmd = command("counterexample", "worked counterexamples")
    counter_cmd.add_argument(
        "--kind", choices=("quasiconcavity", "product"), required=True
    )
    return parser


def _emit(data: bytes, path: str | None) -> None:
    if path is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        write_bytes(data, path)
        logger.info("Wrote %s", path)


def _resolve_settings(args: argparse.Namespace) -> Settings:
    settings = load_settings()
    overrides: dict[str, Any] = {}
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "log_level", None) is not None:
        overrides["log_level"] = args.log_level
    return replace(settings, **overrides)


def _cmd_solve(args: argparse.Namespace, settings: Settings) -> int:
    spec = load_spec(args.spec)
    eq = solve(spec)
    _emit(export_to_json(eq.to_dict()), args.out)
    if args.csv:
        write_bytes(export_to_csv(equilibrium_table(eq, spec)), args.csv)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    spec = load_spec(args.spec)
    equilibrium = verify_equilibrium(spec, tol=args.tol)
    concavity = log_concavity_spot_checks(
        spec, n_points=args.points, seed=settings.seed
    )
    passed = equilibrium.passed and concavity.passed
    payload = {
        "passed": passed,
        "equilibrium": equilibrium.to_dict(),
        "log_concavity": concavity.to_dict(),
    }
    _emit(export_to_json(payload), args.out)
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_certify(args: argparse.Namespace, settings: Settings) -> int:
    result = certify(args.n_level)
    _emit(export_to_json(result.to_dict()), args.out)
    return EXIT_OK if result.passed else EXIT_FAILED


def _cmd_temporal(args: argparse.Namespace, settings: Settings) -> int:
    spec = load_spec(args.spec)
    probs = list(solve(spec).prob_a)
    structure = TemporalStructure.parse(args.clusters)
    temporal = eval_temporal(probs, structure, args.trivial)
    simultaneous = team_win_prob(probs)
    residual = abs(temporal - simultaneous)
    passed = residual <= TEMPORAL_TOL
    payload = {
        "clusters": structure.format(),
        "trivial": args.trivial,
        "temporal_prob_a": temporal,
        "simultaneous_prob_a": simultaneous,
        "residual": residual,
        "clinch_neutrality_residual": clinch_neutrality_residual(probs, structure),
        "passed": passed,
    }
    _emit(export_to_json(payload), None)
    return EXIT_OK if passed else EXIT_FAILED


def _run_sweep(args: argparse.Namespace, spec: ContestSpec, jobs: int) -> pl.DataFrame:
    t = args.target - 1
    sweeps: dict[str, Callable[[], pl.DataFrame]] = {
        "cost": lambda: sweep_cost_index(spec, t, args.grid, jobs),
        "battle-cost": lambda: sweep_battle_costs(spec, t, args.grid, jobs),
        "budget": lambda: sweep_budget_ratio(spec, args.grid, jobs),
        "salience": lambda: salience_profile(spec, t, args.grid, jobs),
        "salience-r": lambda: salience_r_profile(spec, t, args.grid, jobs),
        "effort-r": lambda: effort_cost_r_monotonicity(spec, t, args.grid, jobs),
    }
    return sweeps[args.kind]()


def _cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    spec = load_spec(args.spec)
    table = _run_sweep(args, spec, settings.jobs)
    _emit(export_to_csv(table), args.csv)
    return EXIT_OK


def _cmd_counterexample(args: argparse.Namespace, settings: Settings) -> int:
    if args.kind == "quasiconcavity":
        report = quasiconcavity_counterexample()
    else:
        report = product_conjecture_counterexample()
    _emit(export_to_json(report.to_dict()), None)
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS: dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "certify": _cmd_certify,
    "temporal": _cmd_temporal,
    "sweep": _cmd_sweep,
    "counterexample": _cmd_counterexample,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, dispatch a subcommand and map errors to exit codes.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:]

    Returns:
        0 on success, 1 on a failed check, 2 on an input error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT

    try:
        settings = _resolve_settings(args)
    except ConfigError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(
        level=settings.log_level_number,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )

    try:
        return COMMANDS[args.command](args, settings)
    except FAILURE_ERRORS as e:
        print(f"failed: {e}", file=sys.stderr)
        return EXIT_FAILED
    except json.JSONDecodeError as e:
        print(f"error: malformed JSON: {e}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
