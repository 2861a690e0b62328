from lp_ball_limits import BodyMode, PNorm
from lp_ball_limits.limits import ExperimentConfig, hausdorff_experiment
from lp_ball_limits.runner import ReplicateRunner

config = ExperimentConfig(
    mode=BodyMode.SECTION,
    p=PNorm.finite(1.0),
    m=2,
    N=64,
    replicates=10,
    grid_resolution=256,
)

with ReplicateRunner(threads=4) as runner:
    report = hausdorff_experiment(config, ladder=[64, 256, 1024], runner=runner)
