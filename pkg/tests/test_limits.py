import dataclasses
import math

import numpy as np
import pytest
from lp_ball_limits.closed_forms import (
    BodyMode,
    PNorm,
    abs_gaussian_moment,
    asymptotic_variance,
    process_covariance,
)
from lp_ball_limits.errors import DomainError, ModeViolationError, TooFewSamplesError
from lp_ball_limits.limits import (
    Centering,
    CltGates,
    ExperimentConfig,
    clt_experiment,
    covariance_experiment,
    empirical_process,
    gaussian_process_sample,
    hausdorff_experiment,
    ks_statistic,
    summarize,
)
from lp_ball_limits.runner import ReplicateRunner
from lp_ball_limits.sampling import SeedSpec, StiefelFrame, sample_stiefel, sphere_grid
from scipy import stats

from tests.helpers import mean_and_se


class TestEmpiricalProcess:
    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("centering", list(Centering))
    def test_vanishes_for_q_2(self, m: int, centering: Centering) -> None:
        for stream in range(5):
            frame = sample_stiefel(m, 128, SeedSpec(2, stream))
            values = empirical_process(frame, 2.0, sphere_grid(m, 200), centering)
            assert np.max(np.abs(values)) <= 1e-8

    def test_definition_in_one_dimension(self, seed: SeedSpec) -> None:
        frame = sample_stiefel(1, 400, seed)
        values = empirical_process(frame, 1.0, sphere_grid(1))
        expected = math.sqrt(400) * (np.mean(np.abs(frame.scaled_columns())) - math.sqrt(2 / math.pi))
        np.testing.assert_allclose(values, expected, rtol=1e-12)

    def test_grid_dimension_must_match(self, frame_2d: StiefelFrame) -> None:
        with pytest.raises(DomainError):
            empirical_process(frame_2d, 1.0, sphere_grid(3, 10))

    @pytest.mark.parametrize(
        "q, v",
        [(1.0, (0.0, 1.0)), (1.0, (1.0, 0.0)), (1.5, (math.cos(0.4), math.sin(0.4)))],
    )
    def test_covariance_matches_closed_form(self, q: float, v: tuple[float, float]) -> None:
        report = covariance_experiment(q, (1.0, 0.0), v, 256, 20_000, SeedSpec(31, 0))
        assert report.analytic == pytest.approx(process_covariance(q, [1.0, 0.0], v), rel=1e-12)
        assert report.passed, report

    def test_covariance_rejects_mismatched_directions(self, seed: SeedSpec) -> None:
        with pytest.raises(DomainError):
            covariance_experiment(1.0, (1.0, 0.0), (1.0, 0.0, 0.0), 32, 10, seed)


def test_gaussian_process_sample_covariance(rng: np.random.Generator) -> None:
    u = np.array([1.0, 0.0])
    v = np.array([math.cos(0.3), math.sin(0.3)])
    samples = gaussian_process_sample(1.5, np.vstack([u, v]), 200_000, rng)
    assert samples.shape == (200_000, 2)
    mean, se = mean_and_se(samples[:, 0])
    assert abs(mean) <= 4 * se
    products = (samples[:, 0] - samples[:, 0].mean()) * (samples[:, 1] - samples[:, 1].mean())
    mean, se = mean_and_se(products)
    assert abs(mean - process_covariance(1.5, u, v)) <= 4 * se


def test_gaussian_process_is_degenerate_for_q_2(rng: np.random.Generator) -> None:
    samples = gaussian_process_sample(2.0, np.eye(3), 100, rng)
    np.testing.assert_allclose(samples, 0.0, atol=1e-12)
    assert abs_gaussian_moment(2.0) == pytest.approx(1.0)


class TestKsStatistic:
    def test_constant_samples(self) -> None:
        result = ks_statistic(np.zeros(2000))
        assert result.statistic >= 0.5

    def test_exact_quantiles(self) -> None:
        size = 5000
        samples = stats.norm.ppf((np.arange(1, size + 1) - 0.5) / size)
        assert ks_statistic(samples).statistic <= 1 / size

    def test_agrees_with_scipy(self, rng: np.random.Generator) -> None:
        samples = rng.standard_normal(3000)
        ours = ks_statistic(samples)
        reference = stats.kstest(samples, "norm")
        assert ours.statistic == pytest.approx(reference.statistic, rel=1e-12)

    def test_calibration(self) -> None:
        accepted = 0
        for stream in range(200):
            samples = SeedSpec(77, stream).generator().standard_normal(10_000)
            accepted += ks_statistic(samples).p_value > 0.001
        assert accepted >= 198

    def test_too_few_samples(self) -> None:
        with pytest.raises(TooFewSamplesError):
            ks_statistic(np.zeros(9))

    def test_small_samples_have_no_p_value(self, rng: np.random.Generator) -> None:
        result = ks_statistic(rng.standard_normal(500))
        assert math.isnan(result.p_value)
        assert 0.0 <= result.statistic <= 1.0

    def test_result_fields(self, rng: np.random.Generator) -> None:
        result = ks_statistic(rng.standard_normal(2000))
        statistic, p_value = result
        assert (statistic, p_value) == (result.statistic, result.p_value)
        assert result._fields == ("statistic", "p_value")
        assert 0.0 < p_value <= 1.0


class TestCltGates:
    def test_floors(self) -> None:
        tolerances = CltGates().tolerances(20_000)
        assert tolerances == {"mean": 0.05, "variance": 0.1, "skewness": 0.1}

    def test_small_samples_widen(self) -> None:
        tolerances = CltGates().tolerances(100)
        assert tolerances["mean"] == pytest.approx(0.4)
        assert tolerances["skewness"] == pytest.approx(4 * math.sqrt(0.06))

    @pytest.mark.parametrize(
        "kwargs", [{"mean_floor": -0.1}, {"standard_errors": 0.0}, {"min_ks_p_value": 1.0}]
    )
    def test_rejects_invalid(self, kwargs: dict[str, float]) -> None:
        with pytest.raises(DomainError):
            CltGates(**kwargs)

    def test_evaluate(self, rng: np.random.Generator) -> None:
        report = summarize(rng.standard_normal(20_000), {"replicates": 20_000})
        gates = CltGates().evaluate(report)
        assert set(gates) == {"mean", "variance", "skewness", "ks"}
        shifted = summarize(rng.standard_normal(20_000) + 0.2, {"replicates": 20_000})
        assert not CltGates().evaluate(shifted)["mean"]


class TestExperimentConfig:
    def test_rejects_incompatible_mode(self) -> None:
        with pytest.raises(ModeViolationError):
            ExperimentConfig(mode=BodyMode.SECTION, p=PNorm.infinity(), m=1, N=10, replicates=1)

    @pytest.mark.parametrize(
        "m, N, replicates", [(4, 100, 1), (2, 1, 1), (1, 10, 0)]
    )
    def test_rejects_bad_sizes(self, m: int, N: int, replicates: int) -> None:
        with pytest.raises(DomainError):
            ExperimentConfig(
                mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=m, N=N, replicates=replicates
            )

    def test_to_dict(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=2, N=64, replicates=3
        )
        assert config.to_dict() == {
            "mode": "projection",
            "p": "inf",
            "m": 2,
            "N": 64,
            "replicates": 3,
            "grid_resolution": 2048,
            "master_seed": 20240917,
            "stream": 0,
            "centering": "asymptotic",
        }


class TestCltExperiment:
    def test_rejects_euclidean(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.finite(2.0), m=1, N=64, replicates=20
        )
        with pytest.raises(ModeViolationError):
            clt_experiment(config)

    def test_cube_projection_passes_gates(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION,
            p=PNorm.infinity(),
            m=1,
            N=1024,
            replicates=2000,
            seed=SeedSpec(7, 0),
        )
        report = clt_experiment(config)
        assert report.passed, report.to_dict()
        assert "wall_time" not in report.to_dict()
        assert report.to_dict(include_timing=True)["wall_time"] >= 0.0
        assert list(report.quantiles) == ["0.01", "0.05", "0.25", "0.5", "0.75", "0.95", "0.99"]

    def test_independent_of_thread_count(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.SECTION,
            p=PNorm.finite(1.0),
            m=2,
            N=64,
            replicates=24,
            grid_resolution=128,
            keep_samples=True,
        )
        serial = clt_experiment(config)
        with ReplicateRunner(threads=4) as runner:
            threaded = clt_experiment(config, runner=runner)
        assert serial.samples is not None and threaded.samples is not None
        np.testing.assert_array_equal(serial.samples, threaded.samples)
        assert serial.to_dict() == threaded.to_dict()

    def test_exact_centering_reduces_bias(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION,
            p=PNorm.infinity(),
            m=1,
            N=32,
            replicates=4000,
            seed=SeedSpec(19, 0),
        )
        asymptotic = clt_experiment(config)
        exact = clt_experiment(dataclasses.replace(config, centering=Centering.EXACT_FINITE_N))
        assert abs(exact.sample_mean) < abs(asymptotic.sample_mean)

    def test_reseeding_keeps_variance(self) -> None:
        reports = [
            clt_experiment(
                ExperimentConfig(
                    mode=BodyMode.PROJECTION,
                    p=PNorm.infinity(),
                    m=1,
                    N=512,
                    replicates=2000,
                    seed=SeedSpec(master, 0),
                )
            )
            for master in (100, 200)
        ]
        combined_se = math.sqrt(2 * (2 / 1999))
        assert abs(reports[0].sample_variance - reports[1].sample_variance) <= 4 * combined_se

    @pytest.mark.slow
    def test_cube_projection_reproduction(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=1, N=4096, replicates=20_000
        )
        report = clt_experiment(config)
        assert abs(report.sample_mean) <= 0.05
        assert abs(report.sample_variance - 1) <= 0.1
        assert abs(report.sample_skewness) <= 0.1
        assert report.ks_p_value > 0.01

    @pytest.mark.slow
    def test_cross_polytope_section_reproduction(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.SECTION,
            p=PNorm.finite(1.0),
            m=2,
            N=2048,
            replicates=2000,
            grid_resolution=2048,
        )
        with ReplicateRunner(threads=4) as runner:
            report = clt_experiment(config, runner=runner)
        assert abs(report.sample_variance - 1) <= 0.15
        assert report.ks_p_value > 0.01
        assert asymptotic_variance(BodyMode.SECTION, PNorm.finite(1.0), 2) > 0


class TestHausdorffExperiment:
    def test_euclidean_control(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.finite(2.0), m=2, N=64, replicates=3, grid_resolution=128
        )
        report = hausdorff_experiment(config, [64, 256])
        assert all(rung.median <= 1e-8 for rung in report.rungs)
        assert report.gates == {"exact_ball": True}

    def test_default_ladder(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.SECTION, p=PNorm.finite(2.0), m=1, N=16, replicates=2
        )
        report = hausdorff_experiment(config)
        assert [rung.N for rung in report.rungs] == [16, 64, 256]
        assert report.ratios == [] or report.ratios[0][:2] == (16, 256)

    def test_cube_segment_shrinks(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=1, N=64, replicates=30
        )
        report = hausdorff_experiment(config, [64, 1024])
        assert report.rungs[0].median > report.rungs[1].median > 0.0
        assert report.radius == pytest.approx(math.sqrt(2 / math.pi))
        assert report.to_dict()["rungs"][0]["N"] == 64
        assert [ratio[:2] for ratio in report.ratios] == [(64, 1024)]

    def test_rejects_small_rungs(self) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=2, N=64, replicates=3
        )
        with pytest.raises(DomainError):
            hausdorff_experiment(config, [1, 64])

    @pytest.mark.parametrize("ladder", [[64, 256], [64], [64, 512, 2048]])
    def test_rejects_ladder_without_ratio_pair(self, ladder: list[int]) -> None:
        config = ExperimentConfig(
            mode=BodyMode.PROJECTION, p=PNorm.infinity(), m=1, N=64, replicates=3
        )
        with pytest.raises(DomainError, match="16N"):
            hausdorff_experiment(config, ladder)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "mode, p", [(BodyMode.PROJECTION, PNorm.infinity()), (BodyMode.SECTION, PNorm.finite(1.0))]
    )
    def test_reproduction(self, mode: BodyMode, p: PNorm) -> None:
        config = ExperimentConfig(mode=mode, p=p, m=2, N=256, replicates=50)
        with ReplicateRunner(threads=4) as runner:
            report = hausdorff_experiment(config, [256, 1024, 4096], runner=runner)
        assert report.gates["decreasing"]
        assert report.gates["ratio"]
        assert report.passed
