"""Monte Carlo experiments for the limit theorems of random projections and sections.

Three experiments are provided:

* ``clt_experiment`` standardises sqrt(N)(vol - mu) by sigma and tests it
  against the standard normal law.
* ``hausdorff_experiment`` follows the median Hausdorff distance to the limit
  ball along a ladder of dimensions N.
* ``covariance_experiment`` compares the empirical covariance of the empirical
  process at two directions with its closed form.

Replicates draw their frames from ``seed.replicate(index)`` and are reduced in
replicate order, so reports do not depend on the number of threads.
"""

import dataclasses
import enum
import logging
import math
import typing
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy import stats

from lp_ball_limits.closed_forms import (
    BodyMode,
    PNorm,
    abs_gaussian_moment,
    as_unit_vector,
    asymptotic_mean,
    asymptotic_variance,
    finite_n_mean,
    limit_radius,
    process_covariance,
    stiefel_exact_moment,
)
from lp_ball_limits.errors import DomainError, ModeViolationError, TooFewSamplesError
from lp_ball_limits.geometry import (
    frame_moments,
    hausdorff_to_ball,
    scaled_body_volume,
    section_support_profile,
    support_profile,
)
from lp_ball_limits.runner import ReplicateRunner
from lp_ball_limits.sampling import (
    DEFAULT_GRID_RESOLUTION,
    SeedSpec,
    SphereGrid,
    StiefelFrame,
    sample_stiefel,
    sphere_grid,
)
from lp_ball_limits.trackers import WallTimeTracker

logger = logging.getLogger(__name__)

_T = typing.TypeVar("_T")

QUANTILE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
MIN_KS_SAMPLES = 10
ASYMPTOTIC_KS_SAMPLES = 1000
EXACT_BALL_TOLERANCE = 1e-8
HAUSDORFF_RATIO_RANGE = (2.0, 8.0)


class Centering(enum.Enum):
    """Which centre the volumes and the empirical process are measured from."""

    EXACT_FINITE_N = "exact_finite_n"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class ExperimentConfig:
    mode: BodyMode
    p: PNorm
    m: int
    N: int
    replicates: int
    grid_resolution: int | None = None
    seed: SeedSpec = field(default_factory=SeedSpec)
    centering: Centering = Centering.ASYMPTOTIC
    keep_samples: bool = False

    def __post_init__(self) -> None:
        self.mode.check(self.p)
        if self.m not in DEFAULT_GRID_RESOLUTION:
            raise DomainError(f"experiments support m in {{1, 2, 3}}, got m={self.m}")
        if self.N < self.m:
            raise DomainError(f"need N >= m, got N={self.N}, m={self.m}")
        if self.replicates < 1:
            raise DomainError(f"need at least one replicate, got {self.replicates}")

    def grid(self) -> SphereGrid:
        return sphere_grid(self.m, self.grid_resolution)

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "mode": self.mode.value,
            "p": str(self.p),
            "m": self.m,
            "N": self.N,
            "replicates": self.replicates,
            "grid_resolution": len(self.grid()),
            "master_seed": self.seed.master_seed,
            "stream": self.seed.stream,
            "centering": self.centering.value,
        }


class KsResult(typing.NamedTuple):
    statistic: float
    p_value: float


def ks_statistic(
    samples: npt.ArrayLike,
    target_cdf: typing.Callable[[npt.NDArray[np.float64]], npt.ArrayLike] = stats.norm.cdf,
) -> KsResult:
    """Two-sided Kolmogorov-Smirnov statistic against ``target_cdf``.

    The p-value comes from the asymptotic Kolmogorov distribution and is only
    reported for at least 1000 samples; below that it is ``nan``.

    Raises:
        TooFewSamplesError: for fewer than 10 samples.
    """
    values = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    n = values.size
    if n < MIN_KS_SAMPLES:
        raise TooFewSamplesError(f"the KS test needs at least {MIN_KS_SAMPLES} samples, got {n}")
    cdf = np.asarray(target_cdf(values), dtype=np.float64)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    statistic = float(max(np.max(ranks / n - cdf), np.max(cdf - (ranks - 1.0) / n)))
    if n < ASYMPTOTIC_KS_SAMPLES:
        logger.warning(
            "KS p-value refused for %d samples (needs %d)",
            n,
            ASYMPTOTIC_KS_SAMPLES,
            extra={"samples": n},
        )
        return KsResult(statistic, math.nan)
    return KsResult(statistic, float(stats.kstwobign.sf(math.sqrt(n) * statistic)))


@dataclass(frozen=True)
class CltGates:
    """Acceptance gates on a standardised sample: floors widened to k standard errors."""

    mean_floor: float = 0.05
    variance_floor: float = 0.1
    skewness_floor: float = 0.1
    min_ks_p_value: float = 0.01
    standard_errors: float = 4.0

    def __post_init__(self) -> None:
        floors = (self.mean_floor, self.variance_floor, self.skewness_floor)
        if min(floors) < 0.0 or not self.standard_errors > 0.0:
            raise DomainError("gate floors must be nonnegative and standard_errors positive")
        if not 0.0 <= self.min_ks_p_value < 1.0:
            raise DomainError(f"min_ks_p_value must lie in [0, 1), got {self.min_ks_p_value}")

    def tolerances(self, size: int) -> dict[str, float]:
        k = self.standard_errors
        return {
            "mean": max(self.mean_floor, k / math.sqrt(size)),
            "variance": max(self.variance_floor, k * math.sqrt(2.0 / size)),
            "skewness": max(self.skewness_floor, k * math.sqrt(6.0 / size)),
        }

    def evaluate(self, report: "ExperimentReport") -> dict[str, bool]:
        size = int(report.config.get("replicates", 0))
        tolerance = self.tolerances(size)
        gates = {
            "mean": abs(report.sample_mean) <= tolerance["mean"],
            "variance": abs(report.sample_variance - 1.0) <= tolerance["variance"],
            "skewness": abs(report.sample_skewness) <= tolerance["skewness"],
        }
        if not math.isnan(report.ks_p_value):
            gates["ks"] = report.ks_p_value > self.min_ks_p_value
        return gates


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    sample_mean: float
    sample_variance: float
    sample_skewness: float
    ks_statistic: float
    ks_p_value: float
    quantiles: dict[str, float]
    config: dict[str, typing.Any]
    wall_time: float = 0.0
    gates: dict[str, bool] = field(default_factory=dict)
    samples: npt.NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        if self.sample_variance < 0.0:
            raise DomainError("sample variance must be nonnegative")
        if not 0.0 <= self.ks_statistic <= 1.0:
            raise DomainError("KS statistic must lie in [0, 1]")

    @property
    def passed(self) -> bool:
        return all(self.gates.values())

    def to_dict(self, *, include_timing: bool = False) -> dict[str, typing.Any]:
        """Serialisable view; timing is left out unless asked for, so data output is stable."""
        data: dict[str, typing.Any] = {
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "sample_skewness": self.sample_skewness,
            "ks_statistic": self.ks_statistic,
            "ks_p_value": None if math.isnan(self.ks_p_value) else self.ks_p_value,
            "quantiles": dict(self.quantiles),
            "gates": dict(self.gates),
            "passed": self.passed,
            "config": dict(self.config),
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


def summarize(
    samples: npt.ArrayLike,
    config: dict[str, typing.Any],
    *,
    wall_time: float = 0.0,
    keep_samples: bool = False,
) -> ExperimentReport:
    """Summary statistics and the KS test of a standardised sample."""
    values = np.asarray(samples, dtype=np.float64).reshape(-1)
    ks = ks_statistic(values)
    return ExperimentReport(
        sample_mean=float(np.mean(values)),
        sample_variance=float(np.var(values, ddof=1)),
        sample_skewness=float(stats.skew(values)),
        ks_statistic=ks.statistic,
        ks_p_value=ks.p_value,
        quantiles={
            f"{level:g}": float(value)
            for level, value in zip(QUANTILE_LEVELS, np.quantile(values, QUANTILE_LEVELS))
        },
        config=config,
        wall_time=wall_time,
        samples=values if keep_samples else None,
    )


def _run(
    runner: ReplicateRunner | None, fn: typing.Callable[[int], _T], count: int
) -> list[_T]:
    if runner is not None:
        return runner.map(fn, count)
    with ReplicateRunner() as serial:
        return serial.map(fn, count)


def _process_center(q: float, N: int, centering: Centering) -> float:
    if centering is Centering.EXACT_FINITE_N:
        return stiefel_exact_moment(N, q, rescaled=True)
    return abs_gaussian_moment(q)


def _process_values(
    frame: StiefelFrame, q: float, directions: npt.NDArray[np.float64], center: float
) -> npt.NDArray[np.float64]:
    return math.sqrt(frame.N) * (frame_moments(frame, q, directions) - center)


def empirical_process(
    frame: StiefelFrame,
    q: float,
    grid: SphereGrid,
    centering: Centering = Centering.ASYMPTOTIC,
) -> npt.NDArray[np.float64]:
    """Z_N(u) = N^{-1/2} sum_i (|<sqrt(N) v_i, u>|^q - centre) on every grid direction."""
    if not q >= 1.0:
        raise DomainError(f"q must be >= 1, got {q}")
    if grid.m != frame.m:
        raise DomainError(f"grid dimension {grid.m} does not match frame dimension {frame.m}")
    return _process_values(frame, q, grid.directions, _process_center(q, frame.N, centering))


def clt_experiment(
    config: ExperimentConfig,
    *,
    gates: CltGates | None = None,
    runner: ReplicateRunner | None = None,
) -> ExperimentReport:
    """Standardised volumes sqrt(N)(vol - mu)/sigma over the configured replicates.

    Raises:
        ModeViolationError: for p = 2, where the limit variance vanishes.
    """
    if config.p.is_euclidean:
        raise ModeViolationError("the volume CLT excludes p = 2 (degenerate limit variance)")
    mode, p, m, N = config.mode, config.p, config.m, config.N
    sigma = math.sqrt(asymptotic_variance(mode, p, m))
    if config.centering is Centering.EXACT_FINITE_N:
        center = finite_n_mean(mode, p, m, N)
    else:
        center = asymptotic_mean(mode, p, m)
    grid = config.grid()

    def replicate(index: int) -> float:
        frame = sample_stiefel(m, N, config.seed.replicate(index))
        return scaled_body_volume(frame, p, mode, grid)

    logger.debug("clt experiment start", extra={"config": config.to_dict()})
    timing: dict[str, float] = {}
    with WallTimeTracker(timing, "wall_time"):
        volumes = np.array(_run(runner, replicate, config.replicates))
    standardized = math.sqrt(N) * (volumes - center) / sigma
    report = summarize(
        standardized,
        config.to_dict(),
        wall_time=timing["wall_time"],
        keep_samples=config.keep_samples,
    )
    report = dataclasses.replace(report, gates=(gates or CltGates()).evaluate(report))
    logger.debug(
        "clt experiment done in %.3fs",
        report.wall_time,
        extra={"passed": report.passed, "gates": report.gates},
    )
    return report


@dataclass(frozen=True)
class HausdorffRung:
    N: int
    median: float
    maximum: float


@dataclass(frozen=True, eq=False)
class HausdorffReport:
    rungs: list[HausdorffRung]
    ratios: list[tuple[int, int, float]]
    radius: float
    config: dict[str, typing.Any]
    wall_time: float = 0.0
    gates: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.gates.values())

    def to_dict(self, *, include_timing: bool = False) -> dict[str, typing.Any]:
        data: dict[str, typing.Any] = {
            "radius": self.radius,
            "rungs": [dataclasses.asdict(rung) for rung in self.rungs],
            "ratios": [
                {"N": small, "N_large": large, "ratio": ratio} for small, large, ratio in self.ratios
            ],
            "gates": dict(self.gates),
            "passed": self.passed,
            "config": dict(self.config),
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


def hausdorff_experiment(
    config: ExperimentConfig,
    ladder: typing.Sequence[int] | None = None,
    *,
    runner: ReplicateRunner | None = None,
) -> HausdorffReport:
    """Median Hausdorff distance to the limit ball for each N of the ladder.

    The ladder defaults to (N, 4N, 16N) from the config. Rung ``k`` uses the
    streams ``k * replicates`` onwards. Gates: medians strictly decreasing and
    every ratio d_H(N)/d_H(16N) in [2, 8]; at p = 2 every median must vanish
    to 1e-8 instead.

    Raises:
        DomainError: if an N is below m, or p is not 2 and the ladder holds no
            pair (N, 16N) for the ratio gate.
    """
    rungs_n = list(ladder) if ladder is not None else [config.N, 4 * config.N, 16 * config.N]
    if any(n < config.m for n in rungs_n):
        raise DomainError(f"every N in the ladder must be >= m={config.m}")
    if not config.p.is_euclidean and not any(16 * n in rungs_n for n in rungs_n):
        raise DomainError(f"the ladder {rungs_n} holds no pair (N, 16N) for the ratio gate")
    mode, p, m = config.mode, config.p, config.m
    radius = limit_radius(mode, p)
    grid = config.grid()
    profile_of = support_profile if mode is BodyMode.PROJECTION else section_support_profile

    timing: dict[str, float] = {}
    rungs: list[HausdorffRung] = []
    with WallTimeTracker(timing, "wall_time"):
        for position, n in enumerate(rungs_n):
            offset = position * config.replicates

            def replicate(index: int, n: int = n, offset: int = offset) -> float:
                frame = sample_stiefel(m, n, config.seed.replicate(offset + index))
                return hausdorff_to_ball(profile_of(frame, p, grid), radius)

            distances = np.array(_run(runner, replicate, config.replicates))
            rungs.append(
                HausdorffRung(N=n, median=float(np.median(distances)), maximum=float(distances.max()))
            )
            logger.debug("hausdorff rung N=%d done", n, extra={"median": rungs[-1].median})

    by_n = {rung.N: rung.median for rung in rungs}
    ratios = [
        (rung.N, 16 * rung.N, rung.median / by_n[16 * rung.N])
        for rung in rungs
        if 16 * rung.N in by_n and by_n[16 * rung.N] > 0.0
    ]
    medians = [rung.median for rung in rungs]
    if p.is_euclidean:
        gates = {"exact_ball": all(median <= EXACT_BALL_TOLERANCE for median in medians)}
    else:
        low, high = HAUSDORFF_RATIO_RANGE
        gates = {
            "decreasing": all(a > b for a, b in zip(medians, medians[1:])),
            "ratio": bool(ratios) and all(low <= ratio <= high for _, _, ratio in ratios),
        }
    return HausdorffReport(
        rungs=rungs,
        ratios=ratios,
        radius=radius,
        config=config.to_dict() | {"ladder": rungs_n},
        wall_time=timing["wall_time"],
        gates=gates,
    )


@dataclass(frozen=True)
class CovarianceReport:
    q: float
    u: tuple[float, ...]
    v: tuple[float, ...]
    N: int
    replicates: int
    empirical: float
    analytic: float
    standard_error: float
    standard_errors: float = 4.0

    @property
    def passed(self) -> bool:
        return abs(self.empirical - self.analytic) <= self.standard_errors * self.standard_error

    def to_dict(self) -> dict[str, typing.Any]:
        return dataclasses.asdict(self) | {"passed": self.passed}


def covariance_experiment(
    q: float,
    u: npt.ArrayLike,
    v: npt.ArrayLike,
    N: int,
    replicates: int,
    seed: SeedSpec,
    *,
    centering: Centering = Centering.EXACT_FINITE_N,
    standard_errors: float = 4.0,
    runner: ReplicateRunner | None = None,
) -> CovarianceReport:
    """Empirical Cov(Z_N(u), Z_N(v)) over Stiefel replicates against process_covariance."""
    first = as_unit_vector(u, "u")
    second = as_unit_vector(v, "v")
    if first.size != second.size:
        raise DomainError("u and v must live in the same dimension")
    if replicates < 2:
        raise DomainError("a covariance needs at least two replicates")
    m = first.size
    directions = np.vstack([first, second])
    center = _process_center(q, N, centering)

    def replicate(index: int) -> npt.NDArray[np.float64]:
        frame = sample_stiefel(m, N, seed.replicate(index))
        return _process_values(frame, q, directions, center)

    values = np.array(_run(runner, replicate, replicates))
    products = (values[:, 0] - values[:, 0].mean()) * (values[:, 1] - values[:, 1].mean())
    return CovarianceReport(
        q=q,
        u=tuple(float(x) for x in first),
        v=tuple(float(x) for x in second),
        N=N,
        replicates=replicates,
        empirical=float(np.sum(products) / (replicates - 1)),
        analytic=process_covariance(q, first, second),
        standard_error=float(np.std(products, ddof=1) / math.sqrt(replicates)),
        standard_errors=standard_errors,
    )


def gaussian_process_sample(
    q: float, directions: npt.ArrayLike, size: int, rng: np.random.Generator
) -> npt.NDArray[np.float64]:
    """Draws of the limiting process at the given directions, shape (size, k).

    Uses Z(u) = (|<g,u>|^q - E|g|^q) - (q/2) E|g|^q (<g,u>^2 - 1) with g standard
    Gaussian in R^m, whose covariance is process_covariance.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    e_abs = abs_gaussian_moment(q)
    inner = rng.standard_normal((size, dirs.shape[1])) @ dirs.T
    return (np.abs(inner) ** q - e_abs) - 0.5 * q * e_abs * (inner * inner - 1.0)
