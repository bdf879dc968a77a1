"""Exception types shared across the package."""


class WaitbenchError(Exception):
    """Base class for all package errors."""


class MalformedRow(WaitbenchError):
    """A CSV row violates the long-format schema (bad code, second, age or category)."""


class IncompleteSeries(WaitbenchError):
    """A child's series does not cover every second of the task exactly once."""


class NonDivisorWidth(WaitbenchError):
    """Bin width does not divide the task length."""


class TooFewSamples(WaitbenchError):
    """Not enough samples to split."""


class UnknownChild(WaitbenchError):
    """Requested child id absent from the stratum."""


class EmptyPredictorSet(WaitbenchError):
    """No predictor children supplied."""


class LengthMismatch(WaitbenchError):
    """Vectors or series of unequal length where equal length is required."""


class EmptyInput(WaitbenchError):
    """Empty vectors where at least one element is required."""


class TooFewSeries(WaitbenchError):
    """Not enough series for the requested operation."""


class BadPermutation(WaitbenchError):
    """Supplied ordering is not a permutation of the expected ids."""


class DimensionMismatch(WaitbenchError):
    """Feature count of the input does not match the fitted model."""


class DegenerateHessian(WaitbenchError):
    """Hessian sum plus regularizer is not positive."""


class NonFiniteLoss(WaitbenchError):
    """Training produced a non-finite loss value."""


class ShapeMismatch(WaitbenchError):
    """Array shapes inconsistent with the layer parameters."""


class EmptyReport(WaitbenchError):
    """Report has no entries to render."""


class StratumFailure(WaitbenchError):
    """A pipeline stage failed; message carries the (age, category) context."""


class ConfigError(WaitbenchError):
    """Config file is malformed or holds an invalid value."""
