"""Exceptions raised by lp_ball_limits."""


class LpBallError(Exception):
    """Base class of every error raised by this package."""


class DomainError(LpBallError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModeViolationError(DomainError):
    """The pair (mode, p) is outside the range where a result holds."""


class TooFewSamplesError(DomainError):
    """A statistical test was asked to work with too few samples."""


class ConvergenceError(LpBallError, ArithmeticError):
    """A series did not reach its tolerance within the term cap."""


class RankDeficientError(LpBallError, ArithmeticError):
    """A Gram matrix stayed numerically singular after the retry."""


class DegenerateCovarianceError(LpBallError, ArithmeticError):
    """A covariance matrix is singular, so its quadratic rate is undefined."""
