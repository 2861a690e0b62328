from lp_ball_limits import BodyMode, PNorm
from lp_ball_limits.limits import ExperimentConfig, clt_experiment
from lp_ball_limits.sampling import SeedSpec

config = ExperimentConfig(
    mode=BodyMode.PROJECTION,
    p=PNorm.infinity(),
    m=1,
    N=1024,
    replicates=2000,
    seed=SeedSpec(master_seed=20240917),
)

report = clt_experiment(config)
