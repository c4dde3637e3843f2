"""Exception hierarchy.

Three broad families, matched to CLI exit codes: configuration problems
(exit 2), data problems (exit 3), and numerical failures (exit 4).
"""


class SymeventError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SymeventError):
    """Invalid configuration or inconsistent artifacts."""


class DataError(SymeventError):
    """Malformed, degenerate, or otherwise unusable input data."""


class NumericError(SymeventError):
    """Numerical failure during training or evaluation."""


class InvalidAlphabet(ConfigError):
    """Alphabet size below 2 or inconsistent with the declared symbols."""


class DegenerateRange(DataError):
    """All observed values are identical; no split can be placed."""


class CollapsedCells(DataError):
    """Quantile splits collapsed onto each other (empty cells).

    ``percentile`` is the first offending percentile (0..100).
    """

    def __init__(self, message, percentile=None):
        super().__init__(message)
        self.percentile = percentile


class TooFewDistinct(DataError):
    """Fewer distinct values than requested cells."""


class UnknownCategory(DataError):
    """Categorical value absent from the variable's category map."""


class AllMissing(DataError):
    """A channel contains no observed value to impute from."""


class SingleClassDataset(DataError):
    """An operation requiring both classes received only one."""


class EmptyDataset(DataError):
    """No usable records in the input."""


class ShapeMismatch(ConfigError):
    """Array shapes inconsistent with the declared layer/table sizes."""


class IndexOutOfRange(DataError):
    """Symbol or word index outside the table it addresses."""


class SequenceTooShort(DataError):
    """Sequence shorter than a convolution filter or pooling window."""


class EmptySequence(DataError):
    """An empty sequence where at least one step is required."""


class NonFiniteLoss(NumericError):
    """Training loss became NaN or infinite."""


class DigestMismatch(ConfigError):
    """Artifact digests disagree (e.g. checkpoint vs. symbolized data)."""
