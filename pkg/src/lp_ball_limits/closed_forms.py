"""Closed-form constants: Gaussian and Stiefel moments, limit means, variances and radii.

Formulas are written in the exponent that keeps infinity out of the
arithmetic: the Hölder conjugate ``q`` for projections and ``p`` itself for
sections. Every Gamma factor goes through ``specfun.log_gamma``.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from lp_ball_limits.errors import DomainError, ModeViolationError
from lp_ball_limits.specfun import gauss_2f1_diag, log_gamma

logger = logging.getLogger(__name__)

_UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PNorm:
    """The norm index p in [1, inf] together with its Hölder conjugate q.

    ``None`` stands for infinity in either slot, so infinity never enters
    arithmetic. Build instances with :meth:`finite`, :meth:`infinity`,
    :meth:`from_conjugate` or :meth:`parse`.
    """

    p: float | None
    q: float | None

    def __post_init__(self) -> None:
        for name, value in (("p", self.p), ("q", self.q)):
            if value is not None and not (math.isfinite(value) and value >= 1.0):
                raise DomainError(f"{name} must lie in [1, inf], got {value}")
        if self.p is None and self.q != 1.0:
            raise DomainError("the conjugate of p = inf is q = 1")
        if self.q is None and self.p != 1.0:
            raise DomainError("the conjugate of q = inf is p = 1")

    @classmethod
    def finite(cls, p: float) -> "PNorm":
        p = float(p)
        if not (math.isfinite(p) and p >= 1.0):
            raise DomainError(f"p must be a finite number >= 1, got {p}")
        if p == 1.0:
            return cls(p=1.0, q=None)
        return cls(p=p, q=p / (p - 1.0))

    @classmethod
    def infinity(cls) -> "PNorm":
        return cls(p=None, q=1.0)

    @classmethod
    def from_conjugate(cls, q: float | None) -> "PNorm":
        """The norm whose conjugate is ``q`` (``None`` meaning q = inf)."""
        return cls.finite(1.0) if q is None else cls.finite(q).conjugate()

    @classmethod
    def parse(cls, text: str) -> "PNorm":
        """Parse a decimal string or the literal ``inf``."""
        cleaned = text.strip().lower()
        if cleaned in {"inf", "infinity", "+inf"}:
            return cls.infinity()
        try:
            value = float(cleaned)
        except ValueError as exc:
            raise DomainError(f"cannot parse p from {text!r}") from exc
        return cls.finite(value)

    def conjugate(self) -> "PNorm":
        return PNorm(p=self.q, q=self.p)

    @property
    def is_infinite(self) -> bool:
        return self.p is None

    @property
    def is_euclidean(self) -> bool:
        return self.p == 2.0 or self.q == 2.0

    def __str__(self) -> str:
        return "inf" if self.p is None else format(self.p, "g")


class BodyMode(enum.Enum):
    """Projection onto, or section with, a random subspace."""

    PROJECTION = "projection"
    SECTION = "section"

    def check(self, p: PNorm) -> None:
        """Raise ModeViolationError if p is outside the mode's range.

        Projections need p in (1, inf] (so q is finite), sections p in [1, inf).
        """
        if self is BodyMode.PROJECTION and p.q is None:
            raise ModeViolationError("projections require p in (1, inf]; p = 1 has q = inf")
        if self is BodyMode.SECTION and p.p is None:
            raise ModeViolationError("sections require p in [1, inf); got p = inf")

    def exponent(self, p: PNorm) -> float:
        """The finite exponent the formulas are written in: q or p."""
        self.check(p)
        value = p.q if self is BodyMode.PROJECTION else p.p
        assert value is not None
        return value


@dataclass(frozen=True)
class MomentTable:
    """E|g|^q and E|g|^{2q} for a standard Gaussian g, tagged with m."""

    q: float
    m: int
    e_abs: float
    e_abs_2q: float

    def __post_init__(self) -> None:
        if not self.e_abs > 0.0:
            raise DomainError("E|g|^q must be positive")
        if self.e_abs_2q < self.e_abs**2 * (1.0 - 1e-12):
            raise DomainError("E|g|^{2q} violates Jensen's inequality")


def _check_dimension(m: int) -> None:
    if int(m) != m or m < 1:
        raise DomainError(f"dimension must be a positive integer, got {m}")


def as_unit_vector(u: npt.ArrayLike, name: str = "u") -> npt.NDArray[np.float64]:
    vector = np.asarray(u, dtype=np.float64).reshape(-1)
    if vector.size == 0 or abs(float(np.linalg.norm(vector)) - 1.0) > _UNIT_TOLERANCE:
        raise DomainError(f"{name} must be a unit vector, got {vector}")
    return vector


def kappa(m: int) -> float:
    """Volume of the Euclidean unit ball in R^m."""
    _check_dimension(m)
    return math.exp(0.5 * m * math.log(math.pi) - log_gamma(1.0 + 0.5 * m))


def abs_gaussian_moment(q: float) -> float:
    """E|g|^q = 2^{q/2} Gamma((q + 1)/2) / sqrt(pi) for g ~ N(0, 1)."""
    if not q > -1.0:
        raise DomainError(f"E|g|^q is finite only for q > -1, got {q}")
    return math.exp(0.5 * q * math.log(2.0) + log_gamma(0.5 * (q + 1.0)) - 0.5 * math.log(math.pi))


def moment_table(q: float, m: int) -> MomentTable:
    _check_dimension(m)
    return MomentTable(
        q=q, m=m, e_abs=abs_gaussian_moment(q), e_abs_2q=abs_gaussian_moment(2.0 * q)
    )


def stiefel_exact_moment(N: int, q: float, *, rescaled: bool = False) -> float:
    """E|v_{i,1}|^q for a column entry of a Haar-distributed Stiefel frame.

    The entry is distributed as a coordinate of a uniform point on S^{N-1}.
    With ``rescaled=True`` returns N^{q/2} E|v_{i,1}|^q, which tends to E|g|^q.
    """
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    if not q > -1.0:
        raise DomainError(f"E|v|^q is finite only for q > -1, got {q}")
    log_value = (
        log_gamma(0.5 * (q + 1.0))
        + log_gamma(0.5 * N)
        - log_gamma(0.5 * (N + q))
        - 0.5 * math.log(math.pi)
    )
    if rescaled:
        log_value += 0.5 * q * math.log(N)
    return math.exp(log_value)


def mixed_abs_moment(q: float, rho: float) -> float:
    """E|<g,u><g,v>|^q for g ~ N(0, Id) and unit u, v with <u,v> = rho."""
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho}")
    if abs(rho) == 1.0:
        return math.exp(q * math.log(2.0) + log_gamma(0.5 + q) - 0.5 * math.log(math.pi))
    prefactor = math.exp(q * math.log(2.0) + 2.0 * log_gamma(0.5 * (q + 1.0)) - math.log(math.pi))
    return prefactor * gauss_2f1_diag(q, rho * rho)


def quadratic_cross_moment(q: float, u: npt.ArrayLike, s: int, t: int) -> float:
    """E[|<g,u>|^q g_s g_t] for g ~ N(0, Id_m) and unit u; s, t are 0-based."""
    vector = as_unit_vector(u)
    m = vector.size
    if not (0 <= s < m and 0 <= t < m):
        raise DomainError(f"indices must lie in [0, {m}), got s={s}, t={t}")
    e_abs = abs_gaussian_moment(q)
    if s == t:
        return (1.0 + q * vector[s] ** 2) * e_abs
    return q * vector[s] * vector[t] * e_abs


def double_sphere_expectation(m: int, p: float, q: float) -> float:
    """E of the double sphere integral of |<g,u>|^p |<g,v>|^q over sigma x sigma."""
    _check_dimension(m)
    if not (p >= 1.0 and q >= 1.0):
        raise DomainError(f"p and q must be >= 1, got p={p}, q={q}")
    log_value = (
        (0.5 * (p + q) + 1.0) * math.log(2.0)
        + log_gamma(0.5 * (m + p + q))
        + log_gamma(0.5 * (1.0 + p))
        + log_gamma(0.5 * (1.0 + q))
        + log_gamma(1.0 + 0.5 * m)
        - math.log(m * math.pi)
        - log_gamma(0.5 * (m + p))
        - log_gamma(0.5 * (m + q))
    )
    return math.exp(log_value)


def asymptotic_mean(mode: BodyMode, p: PNorm, m: int) -> float:
    """The limit of vol_m(N^{1/p-1/2}(B_p^N mode E_N))."""
    _check_dimension(m)
    s = mode.exponent(p)
    log_g = log_gamma(0.5 * (s + 1.0))
    if mode is BodyMode.PROJECTION:
        log_value = (
            0.5 * m * math.log(2.0)
            + m * (s - 1.0) / (2.0 * s) * math.log(math.pi)
            + m / s * log_g
        )
    else:
        log_value = (
            -0.5 * m * math.log(2.0)
            + m * (s + 1.0) / (2.0 * s) * math.log(math.pi)
            - m / s * log_g
        )
    return math.exp(log_value - log_gamma(0.5 * m + 1.0))


def asymptotic_variance(mode: BodyMode, p: PNorm, m: int) -> float:
    """The variance of the Gaussian limit of sqrt(N)(vol - mu); zero at p = 2."""
    _check_dimension(m)
    s = mode.exponent(p)
    if p.is_euclidean:
        return 0.0
    half_m = 0.5 * m
    log_g = log_gamma(0.5 * (s + 1.0))
    log_gms = log_gamma(0.5 * (m + s))
    # 4 Gamma(1+m/2) Gamma(m/2+s) - (2m+s^2) Gamma((m+s)/2)^2, factored by Gamma((m+s)/2)^2
    bracket = 4.0 * math.exp(
        log_gamma(1.0 + half_m) + log_gamma(half_m + s) - 2.0 * log_gms
    ) - (2.0 * m + s * s)
    sign = 1.0 if mode is BodyMode.PROJECTION else -1.0
    pi_power = (s * m - m) / s if mode is BodyMode.PROJECTION else (s * m + m) / s
    log_prefactor = (
        math.log(m)
        + pi_power * math.log(math.pi)
        + sign * (2.0 * m / s) * (0.5 * s * math.log(2.0) + log_g)
        - math.log(2.0 * s * s)
        - 2.0 * log_gamma(1.0 + half_m)
    )
    return max(0.0, math.exp(log_prefactor) * bracket)


def limit_radius(mode: BodyMode, p: PNorm) -> float:
    """Radius of the Euclidean ball the rescaled body converges to in Hausdorff distance."""
    s = mode.exponent(p)
    log_g = log_gamma(0.5 * (s + 1.0))
    if mode is BodyMode.PROJECTION:
        return math.exp(0.5 * math.log(2.0) - math.log(math.pi) / (2.0 * s) + log_g / s)
    return math.exp(math.log(math.pi) / (2.0 * s) - 0.5 * math.log(2.0) - log_g / s)


def finite_n_mean(mode: BodyMode, p: PNorm, m: int, N: int) -> float:
    """The plug-in centre with the exact Stiefel moment in place of E|g|^s."""
    _check_dimension(m)
    s = mode.exponent(p)
    moment = stiefel_exact_moment(N, s, rescaled=True)
    power = m / s if mode is BodyMode.PROJECTION else -m / s
    return kappa(m) * moment**power


def delta_method_variance(mode: BodyMode, p: PNorm, m: int) -> float:
    """The limit variance assembled from the covariance of the limiting process.

    Integrates the process covariance twice over the sphere (through
    ``double_sphere_expectation``) and applies the derivative of
    f -> kappa_m * integral of f^{+-m/s}.
    """
    _check_dimension(m)
    s = mode.exponent(p)
    e_abs = abs_gaussian_moment(s)
    integrated = double_sphere_expectation(m, s, s) - e_abs**2 * (1.0 + s * s / (2.0 * m))
    power = 2.0 * m / s - 2.0 if mode is BodyMode.PROJECTION else -2.0 * m / s - 2.0
    return max(0.0, (kappa(m) * m / s) ** 2 * e_abs**power * integrated)


def process_covariance(q: float, u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """E[Z(u) Z(v)] for the Gaussian limit of the centred empirical process."""
    if not q >= 1.0:
        raise DomainError(f"q must be >= 1, got {q}")
    first = as_unit_vector(u, "u")
    second = as_unit_vector(v, "v")
    if first.size != second.size:
        raise DomainError("u and v must live in the same dimension")
    rho = float(np.clip(first @ second, -1.0, 1.0))
    if np.array_equal(first, second):
        rho = 1.0
    products = first * second
    squares = float(np.sum(products**2))
    cross = float(np.sum(np.triu(np.outer(products, products), k=1)))
    e_abs = abs_gaussian_moment(q)
    correction = 1.0 + 0.5 * q * q * squares + q * q * cross
    return mixed_abs_moment(q, rho) - e_abs**2 * correction
