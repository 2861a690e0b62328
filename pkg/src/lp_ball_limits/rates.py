"""Evaluable pieces of the moderate and large deviation rate functions.

``mdp_covariance_matrix`` builds the covariance of the vector

    (|<g,u_1>|^q - E|g|^q, ..., |<g,u_k>|^q - E|g|^q, upper triangle of g g* - Id_m)

and ``mdp_rate_quadratic`` evaluates <x, C^{-1} x> / 2 on it. The entropy rate
of the empirical measure is evaluated on centred Gaussian measures, where it has
a closed form.
"""

import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import linalg

from lp_ball_limits.closed_forms import abs_gaussian_moment, as_unit_vector, mixed_abs_moment
from lp_ball_limits.errors import DegenerateCovarianceError, DomainError, ModeViolationError

logger = logging.getLogger(__name__)

MAX_CONDITION_NUMBER = 1e12
_PSD_TOLERANCE = 1e-12
_DISTINCT_TOLERANCE = 1e-12


def _check_mdp_q(q: float) -> None:
    if not 1.0 <= q < 2.0:
        raise ModeViolationError(f"the moderate deviation rate needs q in [1, 2), got q={q}")


def _check_points(points: npt.ArrayLike) -> npt.NDArray[np.float64]:
    rows = np.atleast_2d(np.asarray(points, dtype=np.float64))
    for index, row in enumerate(rows):
        as_unit_vector(row, f"points[{index}]")
    inner = np.abs(rows @ rows.T)
    np.fill_diagonal(inner, 0.0)
    if rows.shape[0] > 1 and float(inner.max()) >= 1.0 - _DISTINCT_TOLERANCE:
        raise DomainError("points must be pairwise distinct and non-antipodal")
    return rows


def pair_indices(m: int) -> tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]:
    """Upper-triangle index pairs (s <= t) vectorising a symmetric m x m matrix."""
    return np.triu_indices(m)


@dataclass(frozen=True, eq=False)
class MdpRateInput:
    """A point û = (f(u_1), ..., f(u_k), upper triangle of Z) at which the rate is evaluated."""

    q: float
    points: npt.NDArray[np.float64]
    f_values: npt.NDArray[np.float64]
    z2: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        _check_mdp_q(self.q)
        points = _check_points(self.points)
        f_values = np.asarray(self.f_values, dtype=np.float64).reshape(-1)
        z2 = np.atleast_2d(np.asarray(self.z2, dtype=np.float64))
        m = points.shape[1]
        if f_values.size != points.shape[0]:
            raise DomainError("one f-value is needed per point")
        if z2.shape != (m, m) or not np.allclose(z2, z2.T, rtol=0.0, atol=1e-12):
            raise DomainError(f"z2 must be a symmetric {m} x {m} matrix")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "f_values", f_values)
        object.__setattr__(self, "z2", z2)

    @property
    def m(self) -> int:
        return int(self.points.shape[1])

    def uhat(self) -> npt.NDArray[np.float64]:
        return np.concatenate([self.f_values, self.z2[pair_indices(self.m)]])


def mdp_covariance_matrix(
    q: float, points: npt.ArrayLike, m: int | None = None
) -> npt.NDArray[np.float64]:
    """Covariance matrix of size k + m(m+1)/2, blocks [[A, B], [B*, D]].

    A_ij = E|<g,u_i><g,u_j>|^q - (E|g|^q)^2, B couples point i with the pair
    (s, t) through q u_s u_t E|g|^q, and D holds the Gaussian fourth moments
    (2 on pairs (s, s), 1 on pairs (s, t) with s < t).
    """
    _check_mdp_q(q)
    rows = _check_points(points)
    k, dim = rows.shape
    if m is not None and m != dim:
        raise DomainError(f"points live in R^{dim}, not R^{m}")
    e_abs = abs_gaussian_moment(q)
    gram = np.clip(rows @ rows.T, -1.0, 1.0)
    block_a = np.empty((k, k))
    for i in range(k):
        block_a[i, i] = mixed_abs_moment(q, 1.0) - e_abs**2
        for j in range(i + 1, k):
            block_a[i, j] = block_a[j, i] = mixed_abs_moment(q, float(gram[i, j])) - e_abs**2
    first, second = pair_indices(dim)
    block_b = q * e_abs * rows[:, first] * rows[:, second]
    block_d = np.diag(np.where(first == second, 2.0, 1.0))
    return np.block([[block_a, block_b], [block_b.T, block_d]])


def covariance_condition_number(matrix: npt.ArrayLike) -> float:
    return float(np.linalg.cond(np.asarray(matrix, dtype=np.float64)))


def mdp_rate_quadratic(matrix: npt.ArrayLike, uhat: npt.ArrayLike) -> float:
    """<û, C^{-1} û> / 2 through a Cholesky factorisation of C.

    Raises:
        DegenerateCovarianceError: if C is not positive definite or its
            condition number exceeds 1e12.
    """
    covariance = np.asarray(matrix, dtype=np.float64)
    vector = np.asarray(uhat, dtype=np.float64).reshape(-1)
    if covariance.shape != (vector.size, vector.size):
        raise DomainError(f"shape mismatch: C is {covariance.shape}, û has {vector.size} entries")
    condition = covariance_condition_number(covariance)
    if not condition <= MAX_CONDITION_NUMBER:
        logger.error("MDP covariance is singular", extra={"condition_number": condition})
        raise DegenerateCovarianceError(f"covariance matrix is singular (condition {condition:.3e})")
    try:
        factor = linalg.cho_factor(covariance)
    except linalg.LinAlgError as exc:
        raise DegenerateCovarianceError("covariance matrix is not positive definite") from exc
    return max(0.0, 0.5 * float(vector @ linalg.cho_solve(factor, vector)))


class MdpRate(typing.NamedTuple):
    value: float
    condition_number: float


def mdp_rate(rate_input: MdpRateInput) -> MdpRate:
    """Build the covariance matrix for ``rate_input`` and evaluate the quadratic rate at û."""
    covariance = mdp_covariance_matrix(rate_input.q, rate_input.points, rate_input.m)
    return MdpRate(
        value=mdp_rate_quadratic(covariance, rate_input.uhat()),
        condition_number=covariance_condition_number(covariance),
    )


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """A centred Gaussian measure on R^m given by its covariance."""

    covariance: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if covariance.ndim != 2 or covariance.shape[0] != covariance.shape[1]:
            raise DomainError("covariance must be a square matrix")
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=_PSD_TOLERANCE):
            raise DomainError("covariance must be symmetric")
        smallest = float(np.linalg.eigvalsh(covariance)[0])
        if smallest < -_PSD_TOLERANCE * max(1.0, float(np.abs(covariance).max())):
            raise DomainError(f"covariance must be positive semidefinite (eigenvalue {smallest})")
        object.__setattr__(self, "covariance", covariance)

    @classmethod
    def isotropic(cls, m: int, sigma: float) -> "GaussianMeasure":
        """N(0, sigma^2 Id_m)."""
        if m < 1:
            raise DomainError(f"m must be positive, got {m}")
        return cls(covariance=sigma**2 * np.eye(m))

    @property
    def m(self) -> int:
        return int(self.covariance.shape[0])


def relative_entropy_gaussian(nu: GaussianMeasure) -> float:
    """H(nu | N(0, Id)) = (tr S - m - log det S) / 2; infinite for singular S."""
    sign, logdet = np.linalg.slogdet(nu.covariance)
    if sign <= 0.0:
        return math.inf
    return 0.5 * (float(np.trace(nu.covariance)) - nu.m - float(logdet))


def stiefel_rate_gaussian(nu: GaussianMeasure) -> float:
    """H(nu | N(0, Id)) + tr(Id - S)/2 when Id - S is positive semidefinite, else ``math.inf``."""
    slack = np.eye(nu.m) - nu.covariance
    if float(np.linalg.eigvalsh(slack)[0]) < -_PSD_TOLERANCE:
        return math.inf
    entropy = relative_entropy_gaussian(nu)
    if math.isinf(entropy):
        return math.inf
    return max(0.0, entropy + 0.5 * float(np.trace(slack)))
