"""Reproducible random generation: Stiefel frames and sphere direction grids.

Every draw is a pure function of a :class:`SeedSpec`. Streams come from numpy's
counter-based ``Philox`` bit generator keyed by ``SeedSequence(master_seed,
spawn_key=(stream, ...))``, normals from ``Generator.standard_normal`` (the
ziggurat method), so replicate ``r`` produces the same frame on any thread.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from lp_ball_limits.errors import DomainError, RankDeficientError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240917
DEFAULT_GRID_RESOLUTION = {1: 2, 2: 2048, 3: 8192}

_MAX_SEED = 2**64
_RANK_RATIO = 1e-12
_ORTHONORMAL_TOLERANCE = 1e-10
_GOLDEN_RATIO = 0.5 * (1.0 + math.sqrt(5.0))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = DEFAULT_SEED
    stream: int = 0

    def __post_init__(self) -> None:
        for name, value in (("master_seed", self.master_seed), ("stream", self.stream)):
            if not 0 <= value < _MAX_SEED:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self, *substream: int) -> np.random.Generator:
        """A Philox generator for this stream, or for a derived sub-stream."""
        sequence = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream, *substream)
        )
        return np.random.Generator(np.random.Philox(sequence))

    def replicate(self, index: int) -> "SeedSpec":
        """The stream of replicate ``index`` counted from this one."""
        return SeedSpec(master_seed=self.master_seed, stream=self.stream + index)


@dataclass(frozen=True, eq=False)
class StiefelFrame:
    """An m x N matrix with orthonormal rows; its columns v_i live in R^m."""

    entries: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] > entries.shape[1]:
            raise DomainError(f"a Stiefel frame needs shape (m, N) with N >= m, got {entries.shape}")
        deviation = orthonormality_error(entries)
        if deviation > _ORTHONORMAL_TOLERANCE:
            raise DomainError(f"rows are not orthonormal (max deviation {deviation:.3e})")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def N(self) -> int:
        return int(self.entries.shape[1])

    def scaled_columns(self) -> npt.NDArray[np.float64]:
        """The matrix sqrt(N) V, whose columns are the vectors sqrt(N) v_i."""
        return math.sqrt(self.N) * self.entries


def orthonormality_error(entries: npt.NDArray[np.float64]) -> float:
    """max |V V* - Id| entrywise."""
    gram = entries @ entries.T
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def _inverse_sqrt_frame(gaussian: npt.NDArray[np.float64]) -> npt.NDArray[np.float64] | None:
    eigenvalues, eigenvectors = np.linalg.eigh(gaussian @ gaussian.T)
    if eigenvalues[0] < _RANK_RATIO * eigenvalues[-1]:
        return None
    inverse_sqrt = (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T
    return inverse_sqrt @ gaussian


def sample_stiefel(m: int, N: int, seed: SeedSpec) -> StiefelFrame:
    """Draw a Haar-distributed frame as V = (G G*)^{-1/2} G with G an m x N Gaussian matrix.

    Raises:
        DomainError: if m < 1 or N < m.
        RankDeficientError: if G G* is numerically singular on the stream and on
            its retry sub-stream.
    """
    if m < 1 or N < m:
        raise DomainError(f"need 1 <= m <= N, got m={m}, N={N}")
    frame = _inverse_sqrt_frame(seed.generator().standard_normal((m, N)))
    if frame is None:
        logger.warning(
            "Gram matrix numerically singular, retrying on a sub-stream",
            extra={"m": m, "N": N, "seed": seed},
        )
        frame = _inverse_sqrt_frame(seed.generator(1).standard_normal((m, N)))
        if frame is None:
            logger.error("Gram matrix singular after retry", extra={"m": m, "N": N})
            raise RankDeficientError(f"G G* stayed rank-deficient for m={m}, N={N}, {seed}")
    return StiefelFrame(entries=frame)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Directions on S^{m-1} with quadrature weights summing to one."""

    m: int
    directions: npt.NDArray[np.float64]
    weights: npt.NDArray[np.float64]
    spacing: float = field(default=0.0)

    def __post_init__(self) -> None:
        directions = np.asarray(self.directions, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if directions.ndim != 2 or directions.shape[1] != self.m:
            raise DomainError(f"directions must have shape (G, {self.m})")
        if weights.shape != (directions.shape[0],) or np.any(weights < 0.0):
            raise DomainError("weights must be nonnegative, one per direction")
        if abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise DomainError("weights must sum to one")
        if np.max(np.abs(np.linalg.norm(directions, axis=1) - 1.0)) > 1e-12:
            raise DomainError("directions must be unit vectors")
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return int(self.directions.shape[0])

    @property
    def antipodal_half(self) -> int | None:
        """Size of the leading half whose negatives make up the rest, if the grid has one."""
        size = len(self)
        if self.m == 1 or (self.m == 2 and size % 2 == 0):
            return size // 2
        return None


def sphere_grid(m: int, resolution: int | None = None) -> SphereGrid:
    """Quadrature directions on S^{m-1} for m in {1, 2, 3}.

    m = 1 gives the exact two-point sphere, m = 2 equally spaced angles and
    m = 3 a Fibonacci lattice, all with uniform weights.
    """
    if m not in DEFAULT_GRID_RESOLUTION:
        raise DomainError(f"sphere grids are available for m in {{1, 2, 3}}, got m={m}")
    size = DEFAULT_GRID_RESOLUTION[m] if resolution is None else int(resolution)
    if size < 1:
        raise DomainError(f"resolution must be positive, got {resolution}")
    if m == 1:
        return SphereGrid(m=1, directions=np.array([[1.0], [-1.0]]), weights=np.full(2, 0.5))
    if m == 2:
        angles = 2.0 * np.pi * np.arange(size) / size
        directions = np.column_stack([np.cos(angles), np.sin(angles)])
        return SphereGrid(
            m=2, directions=directions, weights=np.full(size, 1.0 / size), spacing=2.0 * np.pi / size
        )
    k = np.arange(size, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / size
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = 2.0 * np.pi * k / _GOLDEN_RATIO
    directions = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return SphereGrid(
        m=3,
        directions=directions,
        weights=np.full(size, 1.0 / size),
        spacing=math.sqrt(4.0 * math.pi / size),
    )
