"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent inputs: backend mismatch, bad layout, unknown names."""


class DegenerateMetricError(ValueError):
    """Metric coefficient matrix is (numerically) singular."""


class PreconditionError(RuntimeError):
    """An operation was called on data that violates its precondition."""


class NoPhiError(ValueError):
    """The Clifford automorphism phi cannot be derived from the C-products."""


class PresetMismatch(AssertionError):
    """A preset's frozen expectation disagrees with computation."""
