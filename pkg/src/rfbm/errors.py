"""Exception types. All derive from ``RfbmError`` so the CLI can map them to exit 1."""


class RfbmError(Exception):
    pass


class DomainError(RfbmError, ValueError):
    """An argument lies outside the region where the quantity is defined."""


class EmbeddingNotNonnegative(RfbmError):
    """Circulant embedding has a materially negative eigenvalue."""


class SizeTooLarge(RfbmError, ValueError):
    pass


class FactorizationFailure(RfbmError):
    pass


class SearchBudgetExceeded(RfbmError):
    pass


class InfeasibleLevel(RfbmError):
    """No exceedances observed where some were expected; raise reps or lower the level."""


class InvalidCorrelation(RfbmError, ValueError):
    pass


class NotMonotone(RfbmError, ValueError):
    pass


class WindowTooSmall(RfbmError):
    """Doubling the truncation window changed the simulated queue beyond tolerance."""


class OverflowGuard(RfbmError):
    pass


class ExtrapolationUnstable(RfbmError):
    pass


class RegimeWarning(UserWarning):
    """An asymptotic formula was evaluated outside its large-level regime."""
