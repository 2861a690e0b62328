"""Command line entry point: constants, figure data, simulations and rates.

Data goes to stdout (or ``--output``) as JSON or CSV and never contains timing;
the run manifest with wall time and the sha256 checksum of the data is written
to ``--manifest``. Exit codes: 0 success, 1 invalid configuration, 2 failed
statistical gate.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import typing
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from lp_ball_limits import __version__
from lp_ball_limits.closed_forms import (
    BodyMode,
    PNorm,
    asymptotic_mean,
    asymptotic_variance,
    limit_radius,
)
from lp_ball_limits.errors import LpBallError
from lp_ball_limits.limits import (
    Centering,
    ExperimentConfig,
    clt_experiment,
    covariance_experiment,
    hausdorff_experiment,
)
from lp_ball_limits.rates import GaussianMeasure, MdpRateInput, mdp_rate, stiefel_rate_gaussian
from lp_ball_limits.runner import ReplicateRunner
from lp_ball_limits.sampling import DEFAULT_SEED, SeedSpec
from lp_ball_limits.trackers import WallTimeTracker

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_GATE_FAILURE = 2
SIGNIFICANT_DIGITS = 15
INFEASIBLE = "+inf"


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict[str, typing.Any]
    seed: int
    version: str
    wall_time: float
    checksum: str


@dataclass
class CommandResult:
    data: typing.Any
    rows: list[dict[str, typing.Any]]
    passed: bool = True


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; exit code 2 is reserved for gates
    def error(self, message: str) -> typing.NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def _round(value: typing.Any) -> typing.Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return INFEASIBLE if value > 0 else "-inf"
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(key): _round(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(item) for item in value]
    return value


def _flatten(data: typing.Any, prefix: str = "") -> list[dict[str, typing.Any]]:
    if isinstance(data, dict):
        rows: list[dict[str, typing.Any]] = []
        for key, value in data.items():
            rows.extend(_flatten(value, f"{prefix}.{key}" if prefix else str(key)))
        return rows
    if isinstance(data, list):
        rows = []
        for index, value in enumerate(data):
            rows.extend(_flatten(value, f"{prefix}.{index}"))
        return rows
    return [{"key": prefix, "value": data}]


def render(result: CommandResult, fmt: str) -> bytes:
    """Serialise a command result; identical results give identical bytes."""
    if fmt == "json":
        return (json.dumps(_round(result.data), indent=2, sort_keys=True) + "\n").encode()
    rows = [_round(row) for row in result.rows]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue().encode()


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(item) for item in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _matrix(text: str) -> np.ndarray:
    rows = [_vector(row) for row in text.split(";")]
    if len({row.size for row in rows}) != 1:
        raise argparse.ArgumentTypeError(f"rows of {text!r} have different lengths")
    return np.vstack(rows)


def _mode(text: str) -> BodyMode:
    return BodyMode(text)


def _runner(args: argparse.Namespace) -> ReplicateRunner:
    return ReplicateRunner(threads=args.threads)


def cmd_constants(args: argparse.Namespace) -> CommandResult:
    mode: BodyMode = args.mode
    data = {
        "mode": mode.value,
        "p": str(args.p),
        "m": args.m,
        "mu": asymptotic_mean(mode, args.p, args.m),
        "sigma_sq": asymptotic_variance(mode, args.p, args.m),
        "radius": limit_radius(mode, args.p),
    }
    return CommandResult(data=data, rows=[data])


def cmd_figure_data(args: argparse.Namespace) -> CommandResult:
    """sigma^2 over a grid of q (projections) or p (sections) for every m."""
    mode: BodyMode = args.mode
    grid = np.linspace(args.start, args.stop, args.num, endpoint=args.endpoint)
    rows = []
    for m in args.m:
        for param in grid:
            p = PNorm.from_conjugate(param) if mode is BodyMode.PROJECTION else PNorm.finite(param)
            rows.append({"param": float(param), "m": m, "sigma_sq": asymptotic_variance(mode, p, m)})
    return CommandResult(data=rows, rows=rows)


def cmd_simulate_clt(args: argparse.Namespace) -> CommandResult:
    config = ExperimentConfig(
        mode=args.mode,
        p=args.p,
        m=args.m,
        N=args.N,
        replicates=args.M,
        grid_resolution=args.grid,
        seed=SeedSpec(master_seed=args.seed),
        centering=Centering(args.centering),
        keep_samples=args.samples is not None,
    )
    with _runner(args) as runner:
        report = clt_experiment(config, runner=runner)
    if args.samples is not None and report.samples is not None:
        samples = CommandResult(
            data=None, rows=[{"standardized": value} for value in report.samples]
        )
        Path(args.samples).write_bytes(render(samples, "csv"))
    data = report.to_dict()
    return CommandResult(data=data, rows=_flatten(data), passed=report.passed)


def cmd_simulate_hausdorff(args: argparse.Namespace) -> CommandResult:
    config = ExperimentConfig(
        mode=args.mode,
        p=args.p,
        m=args.m,
        N=args.ladder[0],
        replicates=args.M,
        grid_resolution=args.grid,
        seed=SeedSpec(master_seed=args.seed),
    )
    with _runner(args) as runner:
        report = hausdorff_experiment(config, args.ladder, runner=runner)
    data = report.to_dict()
    rows = [{"N": rung.N, "median": rung.median, "maximum": rung.maximum} for rung in report.rungs]
    return CommandResult(data=data, rows=rows, passed=report.passed)


def cmd_simulate_covariance(args: argparse.Namespace) -> CommandResult:
    with _runner(args) as runner:
        report = covariance_experiment(
            args.q, args.u, args.v, args.N, args.M, SeedSpec(master_seed=args.seed), runner=runner
        )
    data = report.to_dict()
    return CommandResult(data=data, rows=_flatten(data), passed=report.passed)


def cmd_rate_mdp(args: argparse.Namespace) -> CommandResult:
    points = np.atleast_2d(args.points)
    m = points.shape[1]
    f_values = args.f if args.f is not None else np.zeros(points.shape[0])
    z2 = args.z2 if args.z2 is not None else np.zeros((m, m))
    rate = mdp_rate(MdpRateInput(q=args.q, points=points, f_values=f_values, z2=z2))
    data = {"q": args.q, "rate": rate.value, "condition_number": rate.condition_number}
    return CommandResult(data=data, rows=[data])


def cmd_rate_stiefel(args: argparse.Namespace) -> CommandResult:
    if args.covariance is not None:
        nu = GaussianMeasure(covariance=args.covariance)
    else:
        nu = GaussianMeasure.isotropic(args.m, args.sigma)
    value = stiefel_rate_gaussian(nu)
    data = {"m": nu.m, "rate": value, "feasible": not math.isinf(value)}
    return CommandResult(data=data, rows=[data])


def _add_common(parser: argparse.ArgumentParser, *, default_format: str = "json") -> None:
    parser.add_argument("--format", choices=["json", "csv"], default=default_format)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--output", type=Path, default=None, help="write data here, not stdout")
    parser.add_argument("--manifest", type=Path, default=None, help="write the run manifest here")
    parser.add_argument(
        "--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )


def _add_body(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", type=_mode, required=True, help="projection or section")
    parser.add_argument("--p", type=PNorm.parse, required=True, help='decimal or "inf"')
    parser.add_argument("--m", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lp-ball-limits", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    constants = commands.add_parser("constants", help="limit mean, variance and radius")
    _add_body(constants)
    _add_common(constants)
    constants.set_defaults(handler=cmd_constants)

    figure = commands.add_parser("figure-data", help="variance curves over q or p")
    figure.add_argument("--mode", type=_mode, required=True)
    figure.add_argument("--m", type=int, nargs="+", default=[1, 2, 3])
    figure.add_argument("--start", type=float, default=1.0)
    figure.add_argument("--stop", type=float, default=3.0)
    figure.add_argument("--num", type=int, default=201)
    figure.add_argument("--endpoint", action=argparse.BooleanOptionalAction, default=True)
    _add_common(figure, default_format="csv")
    figure.set_defaults(handler=cmd_figure_data)

    simulate = commands.add_parser("simulate", help="Monte Carlo experiments")
    experiments = simulate.add_subparsers(dest="experiment", required=True)

    clt = experiments.add_parser("clt", help="volume central limit theorem")
    _add_body(clt)
    clt.add_argument("--N", type=int, default=4096)
    clt.add_argument("--M", type=int, default=2000, help="replicates")
    clt.add_argument("--grid", type=int, default=None, help="sphere grid resolution")
    clt.add_argument("--centering", choices=[c.value for c in Centering], default="asymptotic")
    clt.add_argument("--samples", type=Path, default=None, help="dump standardized samples (CSV)")
    _add_common(clt)
    clt.set_defaults(handler=cmd_simulate_clt)

    hausdorff = experiments.add_parser("hausdorff", help="Hausdorff distance to the limit ball")
    _add_body(hausdorff)
    hausdorff.add_argument("--ladder", type=int, nargs="+", default=[256, 1024, 4096])
    hausdorff.add_argument("--M", type=int, default=50, help="replicates per rung")
    hausdorff.add_argument("--grid", type=int, default=None)
    _add_common(hausdorff)
    hausdorff.set_defaults(handler=cmd_simulate_hausdorff)

    covariance = experiments.add_parser("covariance", help="covariance of the empirical process")
    covariance.add_argument("--q", type=float, required=True)
    covariance.add_argument("--u", type=_vector, required=True, help='e.g. "1,0"')
    covariance.add_argument("--v", type=_vector, required=True)
    covariance.add_argument("--N", type=int, default=1024)
    covariance.add_argument("--M", type=int, default=100_000)
    _add_common(covariance)
    covariance.set_defaults(handler=cmd_simulate_covariance)

    rate = commands.add_parser("rate", help="rate function evaluators")
    rates = rate.add_subparsers(dest="rate", required=True)

    mdp = rates.add_parser("mdp", help="quadratic moderate deviation rate")
    mdp.add_argument("--q", type=float, required=True)
    mdp.add_argument("--points", type=_matrix, required=True, help='rows split by ";"')
    mdp.add_argument("--f", type=_vector, default=None, help="f-values at the points")
    mdp.add_argument("--z2", type=_matrix, default=None, help="symmetric m x m matrix")
    _add_common(mdp)
    mdp.set_defaults(handler=cmd_rate_mdp)

    stiefel = rates.add_parser("stiefel", help="entropy rate of a centred Gaussian measure")
    stiefel.add_argument("--sigma", type=float, default=1.0)
    stiefel.add_argument("--m", type=int, default=1)
    stiefel.add_argument("--covariance", type=_matrix, default=None)
    _add_common(stiefel)
    stiefel.set_defaults(handler=cmd_rate_stiefel)

    return parser


def _command_name(args: argparse.Namespace) -> str:
    parts = (args.command, getattr(args, "experiment", None), getattr(args, "rate", None))
    return " ".join(part for part in parts if part)


def _parameters(args: argparse.Namespace) -> dict[str, typing.Any]:
    skip = {"handler", "output", "manifest", "log_level", "threads"}
    parameters = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, (BodyMode, Centering)):
            value = value.value
        elif isinstance(value, (PNorm, Path)):
            value = str(value)
        elif isinstance(value, np.ndarray):
            value = value.tolist()
        parameters[key] = value
    return parameters


def main(argv: typing.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.log_level)
    timing: dict[str, float] = {}
    try:
        with WallTimeTracker(timing, "wall_time"):
            result = args.handler(args)
    except (LpBallError, ValueError) as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    payload = render(result, args.format)
    if args.output is not None:
        args.output.write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
        sys.stdout.flush()
    if args.manifest is not None:
        manifest = RunManifest(
            command=_command_name(args),
            parameters=_parameters(args),
            seed=args.seed,
            version=__version__,
            wall_time=timing["wall_time"],
            checksum=hashlib.sha256(payload).hexdigest(),
        )
        args.manifest.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    if not result.passed:
        logger.warning("statistical gates failed", extra={"data": result.data})
        return EXIT_GATE_FAILURE
    return EXIT_OK
