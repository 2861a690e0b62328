"""Special functions: log-gamma and the diagonal Gauss hypergeometric function.

Only the two functions the limiting constants need are provided: ``log_gamma``
for every Gamma factor and ``gauss_2f1_diag`` for 2F1(-q/2, -q/2; 1/2; x),
the function that appears in the covariance of the limiting process.
"""

import logging
import math
import typing

import numpy as np
import numpy.typing as npt
from scipy import special

from lp_ball_limits.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

# Lanczos sum scaled by exp(g), g = 6.0246800407767296, as a rational function
# with coefficients ordered by decreasing powers (cephes lanczos13m53).
_LANCZOS_G = 6.024680040776729583740234375
_LANCZOS_NUM = np.array(
    [
        0.006061842346248906525783753964555936883222,
        0.5098416655656676188125178644804694509993,
        19.51992788247617482847860966235652136208,
        449.9445569063168119446858607650988409623,
        6955.999602515376140356310115515198987526,
        75999.29304014542649875303443598909137092,
        601859.6171681098786670226533699352302507,
        3481712.15498064590882071018964774556468,
        14605578.08768506808414169982791359218571,
        43338889.32467613834773723740590533316085,
        86363131.28813859145546927288977868422342,
        103794043.1163445451906271053616070238554,
        56906521.91347156388090791033559122686859,
    ]
)
_LANCZOS_DENOM = np.array(
    [
        1.0,
        66.0,
        1925.0,
        32670.0,
        357423.0,
        2637558.0,
        13339535.0,
        45995730.0,
        105258076.0,
        150917976.0,
        120543840.0,
        39916800.0,
        0.0,
    ]
)

DEFAULT_TOLERANCE = 1e-14
MAX_SERIES_TERMS = 1_000_000
_FIRST_CHUNK = 4096
_MAX_CHUNK = 65536
# below this distance from 1 the series is replaced by the 1 - x expansion
_SERIES_BAND = 1e-3


def _lanczos_log_gamma(z: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    # for z > 1 evaluate the rational function in 1/z to avoid overflow of z**12
    large = z > 1.0
    w = np.where(large, 1.0 / np.where(large, z, 1.0), z)
    ratio = np.where(
        large,
        np.polyval(_LANCZOS_NUM[::-1], w) / np.polyval(_LANCZOS_DENOM[::-1], w),
        np.polyval(_LANCZOS_NUM, w) / np.polyval(_LANCZOS_DENOM, w),
    )
    zgh = z + _LANCZOS_G - 0.5
    return np.log(ratio) + (z - 0.5) * (np.log(zgh) - 1.0)


@typing.overload
def log_gamma(x: float) -> float: ...


@typing.overload
def log_gamma(x: npt.ArrayLike) -> typing.Any: ...


def log_gamma(x):
    """Natural logarithm of the Gamma function for positive arguments.

    Accepts a scalar (returns ``float``) or an array (returns an array of the
    same shape). Arguments below 1/2 go through the reflection formula.

    Raises:
        DomainError: if any argument is not a positive finite number.
    """
    values = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if not np.all(np.isfinite(values) & (values > 0.0)):
        raise DomainError(f"log_gamma requires positive finite arguments, got {x!r}")
    result = np.empty_like(values)
    small = values < 0.5
    result[~small] = _lanczos_log_gamma(values[~small])
    if np.any(small):
        xs = values[small]
        result[small] = np.log(np.pi / np.sin(np.pi * xs)) - _lanczos_log_gamma(1.0 - xs)
    if np.ndim(x) == 0:
        return float(result[0])
    return result.reshape(np.shape(x))


def _check_diag_args(q: float, x: float) -> None:
    if not (math.isfinite(q) and q >= 1.0):
        raise DomainError(f"2F1(-q/2, -q/2; 1/2; x) requires q >= 1, got q={q}")
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise DomainError(f"2F1(-q/2, -q/2; 1/2; x) requires 0 <= x <= 1, got x={x}")


def gauss_summation(q: float) -> float:
    """2F1(-q/2, -q/2; 1/2; 1) = Gamma(1/2) Gamma(1/2 + q) / Gamma(1/2 + q/2)^2."""
    _check_diag_args(q, 1.0)
    return math.exp(
        log_gamma(0.5) + log_gamma(0.5 + q) - 2.0 * log_gamma(0.5 + 0.5 * q)
    )


def _derivative_at_one(q: float) -> float:
    # F'(1) = (ab/c) 2F1(a+1, b+1; c+1; 1), finite because c - a - b - 1 = q - 1/2 > 0
    return (
        0.5
        * q
        * q
        * math.exp(log_gamma(1.5) + log_gamma(q - 0.5) - 2.0 * log_gamma(0.5 * (q + 1.0)))
    )


def _chunks(max_terms: int) -> typing.Iterator[tuple[int, int]]:
    start, size = 0, _FIRST_CHUNK
    while start < max_terms:
        stop = min(start + size, max_terms)
        yield start, stop
        start, size = stop, min(2 * size, _MAX_CHUNK)


def _term_ratios(a: float, x: float, start: int, stop: int) -> npt.NDArray[np.float64]:
    k = np.arange(start, stop, dtype=np.float64)
    return (k - a) ** 2 / ((k + 0.5) * (k + 1.0)) * x


def _series_below_one(q: float, x: float, tol: float, max_terms: int) -> float:
    a = 0.5 * q
    # past this index every term ratio is below x, so the tail is geometric
    geometric_from = max(0.0, (a * a - 0.5) / (2.0 * a + 1.5))
    total = 1.0
    term = 1.0
    for start, stop in _chunks(max_terms):
        terms = term * np.cumprod(_term_ratios(a, x, start, stop))
        total += float(np.sum(terms))
        term = float(terms[-1])
        if term == 0.0:
            return total
        if stop > geometric_from and term * x / (1.0 - x) < tol:
            return total
    logger.error(
        "2F1 series did not converge",
        extra={"q": q, "x": x, "max_terms": max_terms, "last_term": term},
    )
    raise ConvergenceError(
        f"2F1(-q/2, -q/2; 1/2; x) series for q={q}, x={x} did not reach tol={tol} "
        f"within {max_terms} terms"
    )


def gauss_2f1_diag(
    q: float,
    x: float,
    *,
    tol: float = DEFAULT_TOLERANCE,
    max_terms: int = MAX_SERIES_TERMS,
) -> float:
    """Evaluate 2F1(-q/2, -q/2; 1/2; x) for q >= 1 and 0 <= x <= 1.

    The power series is summed directly for 1 - x >= 1e-3; every coefficient is
    nonnegative so the function is nondecreasing and convex in x. Closer to 1
    the series needs of order 1/(1 - x) terms, so the connection formula in
    1 - x (``scipy.special.hyp2f1``) is used instead, clipped to the convexity
    bracket F(1) - (1 - x) F'(1) <= F(x) <= F(1). Once that bracket is narrower
    than ``tol`` its lower end is returned.

    Raises:
        DomainError: outside q >= 1, 0 <= x <= 1.
        ConvergenceError: if the tail bound stays above ``tol`` after ``max_terms``
            terms, or the expansion at 1 is not finite.
    """
    _check_diag_args(q, x)
    if x == 0.0:
        return 1.0
    if x == 1.0:
        return gauss_summation(q)
    if 1.0 - x >= _SERIES_BAND:
        return _series_below_one(q, x, tol, max_terms)
    upper = gauss_summation(q)
    lower = upper - (1.0 - x) * _derivative_at_one(q)
    if upper - lower <= tol:
        return lower
    a = 0.5 * q
    value = float(special.hyp2f1(-a, -a, 0.5, x))
    if not math.isfinite(value):
        logger.error("2F1 expansion at 1 is not finite", extra={"q": q, "x": x})
        raise ConvergenceError(
            f"2F1(-q/2, -q/2; 1/2; x) expansion at 1 for q={q}, x={x} is not finite"
        )
    return min(max(value, lower), upper)


def gauss_2f1_diag_series(
    q: float,
    x: float,
    *,
    tol: float = 1e-13,
    max_terms: int = MAX_SERIES_TERMS,
) -> float:
    """Series-only evaluation of 2F1(-q/2, -q/2; 1/2; x), including x = 1.

    At x = 1 the coefficients decay like k^-(q + 3/2); the tail past the last
    summed term is estimated from that power law with the Hurwitz zeta function
    and the loop stops once successive corrected sums agree to ``tol``.
    """
    _check_diag_args(q, x)
    if x < 1.0:
        return _series_below_one(q, x, tol, max_terms)
    a = 0.5 * q
    decay = q + 1.5
    total = 1.0
    term = 1.0
    previous = math.nan
    for start, stop in _chunks(max_terms):
        terms = term * np.cumprod(_term_ratios(a, 1.0, start, stop))
        total += float(np.sum(terms))
        term = float(terms[-1])
        if term == 0.0:
            return total
        n = float(stop)
        corrected = total + term * n**decay * float(special.zeta(decay, n + 1.0))
        if abs(corrected - previous) < tol:
            return corrected
        previous = corrected
    raise ConvergenceError(
        f"2F1(-q/2, -q/2; 1/2; 1) series for q={q} did not settle within {max_terms} terms"
    )
