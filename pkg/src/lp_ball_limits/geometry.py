"""Support and radial functions of projected and sectioned lp balls, and their volumes.

All bodies are scaled by N^{1/p-1/2} and expressed in the coordinates of the
frame, so they live in R^m and converge to Euclidean balls. For m >= 2 the
projection volume goes through the inf-transform

    rho(x) = inf over <x,u> > 0 of h(u) / <x,u>,

evaluated on a sphere grid and refined locally around the best grid direction.
"""

import functools
import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from lp_ball_limits.closed_forms import BodyMode, PNorm, as_unit_vector, kappa
from lp_ball_limits.errors import DomainError
from lp_ball_limits.sampling import SphereGrid, StiefelFrame

logger = logging.getLogger(__name__)

Evaluator = typing.Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]

_ROW_CHUNK = 256
_GOLDEN_SECTION_TOLERANCE = 1e-6
_TANGENT_ITERATIONS = 12
_INV_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True, eq=False)
class SupportProfile:
    """Support values h(u) on a grid.

    ``evaluator`` maps an array of unit directions of shape (k, m) to their
    support values; when present it drives the local refinement.
    """

    grid: SphereGrid
    values: npt.NDArray[np.float64]
    evaluator: Evaluator | None = None

    def __post_init__(self) -> None:
        _check_profile(self.grid, self.values)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial values rho(u) on a grid, with an optional evaluator as for SupportProfile."""

    grid: SphereGrid
    values: npt.NDArray[np.float64]
    evaluator: Evaluator | None = None

    def __post_init__(self) -> None:
        _check_profile(self.grid, self.values)


def _check_profile(grid: SphereGrid, values: npt.NDArray[np.float64]) -> None:
    if np.shape(values) != (len(grid),):
        raise DomainError(f"expected {len(grid)} profile values, got shape {np.shape(values)}")
    if not np.all(np.asarray(values) > 0.0):
        raise DomainError("profile values must be positive")


def frame_moments(
    frame: StiefelFrame, s: float, directions: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """(1/N) sum_i |<sqrt(N) v_i, u>|^s for every row u of ``directions``."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if dirs.shape[1] != frame.m:
        raise DomainError(f"directions must live in R^{frame.m}")
    scaled = frame.scaled_columns()
    out = np.empty(dirs.shape[0])
    for start in range(0, dirs.shape[0], _ROW_CHUNK):
        inner = np.abs(dirs[start : start + _ROW_CHUNK] @ scaled)
        powered = inner if s == 1.0 else inner * inner if s == 2.0 else inner**s
        out[start : start + _ROW_CHUNK] = powered.mean(axis=1)
    return out


def _support_values(frame: StiefelFrame, q: float, directions: npt.ArrayLike) -> typing.Any:
    return frame_moments(frame, q, directions) ** (1.0 / q)


def _radial_values(frame: StiefelFrame, p: float, directions: npt.ArrayLike) -> typing.Any:
    return frame_moments(frame, p, directions) ** (-1.0 / p)


def projection_support(frame: StiefelFrame, p: PNorm, u: npt.ArrayLike) -> float:
    """Support value of N^{1/p-1/2} V B_p^N at u, i.e. N^{1/p-1/2} ||V* u||_q."""
    q = BodyMode.PROJECTION.exponent(p)
    return float(_support_values(frame, q, as_unit_vector(u))[0])


def section_radial(frame: StiefelFrame, p: PNorm, u: npt.ArrayLike) -> float:
    """Radial value of N^{1/p-1/2}(B_p^N cap E) at u, i.e. N^{1/p-1/2} / ||V* u||_p."""
    exponent = BodyMode.SECTION.exponent(p)
    return float(_radial_values(frame, exponent, as_unit_vector(u))[0])


def support_profile(frame: StiefelFrame, p: PNorm, grid: SphereGrid) -> SupportProfile:
    q = BodyMode.PROJECTION.exponent(p)
    _check_grid(frame, grid)
    evaluator = functools.partial(_support_values, frame, q)
    return SupportProfile(grid=grid, values=evaluator(grid.directions), evaluator=evaluator)


def radial_profile(frame: StiefelFrame, p: PNorm, grid: SphereGrid) -> RadialProfile:
    exponent = BodyMode.SECTION.exponent(p)
    _check_grid(frame, grid)
    evaluator = functools.partial(_radial_values, frame, exponent)
    return RadialProfile(grid=grid, values=evaluator(grid.directions), evaluator=evaluator)


def _check_grid(frame: StiefelFrame, grid: SphereGrid) -> None:
    if grid.m != frame.m:
        raise DomainError(f"grid dimension {grid.m} does not match frame dimension {frame.m}")


# Local refinement. Objectives are minimised; each receives candidate directions
# of shape (k, m) and the k targets and returns k values.

Objective = typing.Callable[
    [npt.NDArray[np.float64], npt.NDArray[np.float64]], npt.NDArray[np.float64]
]


def _golden_section(
    objective: Objective,
    targets: npt.NDArray[np.float64],
    start: npt.NDArray[np.float64],
    spacing: float,
) -> npt.NDArray[np.float64]:
    theta0 = np.arctan2(start[:, 1], start[:, 0])
    lo, hi = theta0 - spacing, theta0 + spacing

    def at(theta: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        return objective(np.column_stack([np.cos(theta), np.sin(theta)]), targets)

    while float(np.max(hi - lo)) > _GOLDEN_SECTION_TOLERANCE:
        left = hi - _INV_GOLDEN * (hi - lo)
        right = lo + _INV_GOLDEN * (hi - lo)
        keep_left = at(left) < at(right)
        hi = np.where(keep_left, right, hi)
        lo = np.where(keep_left, lo, left)
    return at(0.5 * (lo + hi))


def _tangent_basis(
    u: npt.NDArray[np.float64],
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    helper = np.zeros_like(u)
    helper[np.arange(u.shape[0]), np.argmin(np.abs(u), axis=1)] = 1.0
    first = np.cross(u, helper)
    first /= np.linalg.norm(first, axis=1, keepdims=True)
    return first, np.cross(u, first)


_STENCIL = np.array([(a, b) for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)])


def _tangent_stencil(
    objective: Objective,
    targets: npt.NDArray[np.float64],
    start: npt.NDArray[np.float64],
    spacing: float,
) -> npt.NDArray[np.float64]:
    count = start.shape[0]
    current = start.copy()
    best = objective(current, targets)
    width = spacing
    for _ in range(_TANGENT_ITERATIONS):
        first, second = _tangent_basis(current)
        candidates = (
            current[:, None, :]
            + width * _STENCIL[None, :, 0, None] * first[:, None, :]
            + width * _STENCIL[None, :, 1, None] * second[:, None, :]
        )
        candidates /= np.linalg.norm(candidates, axis=2, keepdims=True)
        values = objective(
            candidates.reshape(-1, 3), np.repeat(targets, len(_STENCIL), axis=0)
        ).reshape(count, len(_STENCIL))
        choice = np.argmin(values, axis=1)
        chosen = values[np.arange(count), choice]
        improved = chosen < best
        current[improved] = candidates[np.arange(count), choice][improved]
        best = np.minimum(best, chosen)
        width *= 0.5
    return best


def _refine(
    objective: Objective,
    targets: npt.NDArray[np.float64],
    start: npt.NDArray[np.float64],
    grid: SphereGrid,
) -> npt.NDArray[np.float64]:
    if grid.m == 2:
        return _golden_section(objective, targets, start, grid.spacing)
    if grid.m == 3:
        return _tangent_stencil(objective, targets, start, grid.spacing)
    return objective(start, targets)


def _inf_objective(evaluator: Evaluator) -> Objective:
    def objective(
        dirs: npt.NDArray[np.float64], targets: npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        inner = np.einsum("ij,ij->i", dirs, targets)
        values = np.full(dirs.shape[0], np.inf)
        feasible = inner > 0.0
        values[feasible] = evaluator(dirs[feasible]) / inner[feasible]
        return values

    return objective


def _sup_objective(evaluator: Evaluator) -> Objective:
    def objective(
        dirs: npt.NDArray[np.float64], targets: npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        return -evaluator(dirs) * np.einsum("ij,ij->i", dirs, targets)

    return objective


def _radial_of_support(
    profile: SupportProfile, targets: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    grid = profile.grid
    out = np.empty(targets.shape[0])
    starts = np.empty_like(targets)
    for begin in range(0, targets.shape[0], _ROW_CHUNK):
        inner = targets[begin : begin + _ROW_CHUNK] @ grid.directions.T
        with np.errstate(divide="ignore"):
            ratios = np.where(inner > 0.0, profile.values / np.where(inner > 0.0, inner, 1.0), np.inf)
        best = np.argmin(ratios, axis=1)
        out[begin : begin + _ROW_CHUNK] = ratios[np.arange(best.size), best]
        starts[begin : begin + _ROW_CHUNK] = grid.directions[best]
    if not np.all(np.isfinite(out)):
        raise DomainError("a target has no grid direction with <x,u> > 0")
    if profile.evaluator is not None:
        refined = _refine(_inf_objective(profile.evaluator), targets, starts, grid)
        out = np.minimum(out, refined)
    return out


def _support_of_radial(
    profile: RadialProfile, targets: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    grid = profile.grid
    points = profile.values[:, None] * grid.directions
    out = np.empty(targets.shape[0])
    starts = np.empty_like(targets)
    for begin in range(0, targets.shape[0], _ROW_CHUNK):
        products = targets[begin : begin + _ROW_CHUNK] @ points.T
        best = np.argmax(products, axis=1)
        out[begin : begin + _ROW_CHUNK] = products[np.arange(best.size), best]
        starts[begin : begin + _ROW_CHUNK] = grid.directions[best]
    if profile.evaluator is not None:
        refined = -_refine(_sup_objective(profile.evaluator), targets, starts, grid)
        out = np.maximum(out, refined)
    return out


def radial_from_support(profile: SupportProfile, x: npt.ArrayLike) -> float:
    """rho(x) = inf over <x,u> > 0 of h(u)/<x,u>; never below the true radial value."""
    target = as_unit_vector(x, "x")
    return float(_radial_of_support(profile, target[None, :])[0])


def support_from_radial(profile: RadialProfile, u: npt.ArrayLike) -> float:
    """h(u) = max over v of rho(v)<v,u>; never above the true support value."""
    target = as_unit_vector(u)
    return float(_support_of_radial(profile, target[None, :])[0])


def _mirrored(
    transform: typing.Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    grid: SphereGrid,
) -> npt.NDArray[np.float64]:
    half = grid.antipodal_half
    if half is None:
        return transform(grid.directions)
    # the bodies are origin-symmetric, so antipodal directions share their values
    leading = transform(grid.directions[:half])
    return np.concatenate([leading, leading])


def radial_profile_from_support(profile: SupportProfile) -> RadialProfile:
    values = _mirrored(lambda dirs: _radial_of_support(profile, dirs), profile.grid)
    return RadialProfile(grid=profile.grid, values=values)


def support_profile_from_radial(profile: RadialProfile) -> SupportProfile:
    values = _mirrored(lambda dirs: _support_of_radial(profile, dirs), profile.grid)
    return SupportProfile(grid=profile.grid, values=values)


def section_support_profile(frame: StiefelFrame, p: PNorm, grid: SphereGrid) -> SupportProfile:
    """Support values of the scaled section, through the sup-transform of its radial profile."""
    return support_profile_from_radial(radial_profile(frame, p, grid))


def body_volume_from_radial(profile: RadialProfile) -> float:
    """vol_m(C) = kappa_m * integral of rho^m over the normalised sphere measure."""
    grid = profile.grid
    return kappa(grid.m) * float(np.sum(grid.weights * profile.values**grid.m))


def scaled_body_volume(
    frame: StiefelFrame, p: PNorm, mode: BodyMode, grid: SphereGrid
) -> float:
    """vol_m(N^{1/p-1/2}(B_p^N mode E)) for the subspace spanned by the frame's rows."""
    mode.check(p)
    _check_grid(frame, grid)
    if frame.m == 1:
        unit = np.array([1.0])
        if mode is BodyMode.PROJECTION:
            return 2.0 * projection_support(frame, p, unit)
        return 2.0 * section_radial(frame, p, unit)
    if mode is BodyMode.SECTION:
        return body_volume_from_radial(radial_profile(frame, p, grid))
    return body_volume_from_radial(radial_profile_from_support(support_profile(frame, p, grid)))


def hausdorff_to_ball(profile: SupportProfile, r: float) -> float:
    """sup over u of |h(u) - r|, the Hausdorff distance to the centred ball of radius r."""
    if not r > 0.0:
        raise DomainError(f"radius must be positive, got {r}")
    deviations = np.abs(profile.values - r)
    worst = int(np.argmax(deviations))
    distance = float(deviations[worst])
    if profile.evaluator is None or profile.grid.m == 1:
        return distance
    evaluator = profile.evaluator

    def objective(
        dirs: npt.NDArray[np.float64], _: npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        return -np.abs(evaluator(dirs) - r)

    start = profile.grid.directions[worst : worst + 1]
    refined = -float(_refine(objective, start, start, profile.grid)[0])
    return max(distance, refined)


def lipschitz_constant(frame: StiefelFrame, q: float) -> float:
    """(1/N) sum_i q ||sqrt(N) v_i||^q, a Lipschitz bound for u -> (1/N) sum |<sqrt(N) v_i, u>|^q."""
    if not q >= 1.0:
        raise DomainError(f"q must be >= 1, got {q}")
    norms = np.linalg.norm(frame.scaled_columns(), axis=0)
    return float(q * np.mean(norms**q))
