"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
I/O failures exit 2, degenerate-data and metric errors exit 3.
"""


class FairbanditError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(FairbanditError, ValueError):
    """Invalid profile, config, or constructor argument."""


class ContractViolationError(FairbanditError, ValueError):
    """A caller broke an operation's precondition (e.g. dimension mismatch)."""


class DegenerateDataError(FairbanditError, ValueError):
    """Data admits no meaningful statistic (zero variance, too few samples)."""


class MetricError(FairbanditError, ValueError):
    """A metric is undefined for the given log (missing gender, unknown optimal set)."""


class AggregationError(FairbanditError, RuntimeError):
    """Aggregation input is missing or inconsistent (names the offending cell)."""
