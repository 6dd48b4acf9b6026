"""Exception hierarchy shared by the solvers and the CLI."""


class CournotError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CournotError, ValueError):
    """An argument lies outside the domain of the function."""


class InstanceError(CournotError, ValueError):
    """A market description could not be parsed or validated."""


class DegenerateInstanceError(CournotError):
    """p(0) <= min_n C'_n(0): nobody wants to produce and optimal welfare is zero."""


class UnboundedShareError(CournotError):
    """A flat price above a flat marginal cost makes the best quantity unbounded."""


class NoMaximumError(CournotError):
    """The objective keeps increasing up to the search bound."""


class NoCandidateError(CournotError):
    """No aggregate quantity satisfies the first-order candidate conditions."""


class NoDifferentiableCandidateError(NoCandidateError):
    """Every fixed point found sits on a kink of the demand curve."""


class NonConvexDemandError(CournotError):
    """The operation requires a convex inverse demand."""


class NotAffineError(CournotError):
    """The operation requires an affine inverse demand."""


class EqualPricesError(CournotError):
    """p(X) equals the socially optimal price, so gamma is 1 and curvature is undefined."""


class SociallyOptimalError(CournotError):
    """The allocation is already socially optimal."""
