from lp_ball_limits import BodyMode, PNorm
from lp_ball_limits.geometry import scaled_body_volume
from lp_ball_limits.sampling import SeedSpec, sample_stiefel, sphere_grid
from lp_ball_limits.trackers import WallTimeTracker

timings: dict[str, float] = {}
grid = sphere_grid(2, 512)

with WallTimeTracker(timings, "sampling"):
    frames = [sample_stiefel(2, 256, SeedSpec(stream=index)) for index in range(20)]

with WallTimeTracker(timings, "volumes"):
    volumes = [scaled_body_volume(frame, PNorm.finite(3.0), BodyMode.SECTION, grid) for frame in frames]
