from lp_ball_limits import BodyMode, PNorm
from lp_ball_limits.closed_forms import asymptotic_mean, asymptotic_variance, limit_radius

cube = PNorm.infinity()

constants = {
    "mu": asymptotic_mean(BodyMode.PROJECTION, cube, 2),
    "sigma_sq": asymptotic_variance(BodyMode.PROJECTION, cube, 2),
    "radius": limit_radius(BodyMode.PROJECTION, cube),
}
