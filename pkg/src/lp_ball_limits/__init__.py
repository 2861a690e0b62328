"""Limit theorems for random projections and sections of lp balls."""
__version__ = "0.1.0"

from lp_ball_limits import closed_forms, geometry, limits, rates, sampling, specfun, trackers
from lp_ball_limits.closed_forms import BodyMode, PNorm
from lp_ball_limits.limits import Centering, ExperimentConfig, ExperimentReport
from lp_ball_limits.runner import ReplicateRunner
from lp_ball_limits.sampling import SeedSpec, SphereGrid, StiefelFrame

__all__ = [
    "BodyMode",
    "Centering",
    "ExperimentConfig",
    "ExperimentReport",
    "PNorm",
    "ReplicateRunner",
    "SeedSpec",
    "SphereGrid",
    "StiefelFrame",
    "__version__",
    "closed_forms",
    "geometry",
    "limits",
    "rates",
    "sampling",
    "specfun",
    "trackers",
]
