"""Exception taxonomy shared across the package."""


class RomanError(Exception):
    """Base class for all errors raised by this package."""


class DepthTooLarge(RomanError):
    """Pyramid construction would produce an empty level."""


class BaseLengthUnreachable(RomanError):
    """No pyramid depth can satisfy the requested minimum base length."""


class InvalidAlpha(RomanError):
    """Overlap parameter outside [0, 1)."""


class InfeasibleGeometry(RomanError):
    """Synthetic task parameters admit no valid construction."""


class DegenerateFeatures(RomanError):
    """Every extracted feature is constant on the training set."""


class ShapeMismatch(RomanError):
    """Input dimensionality does not match what a model was fitted with."""


class MissingBaseline(RomanError):
    """A comparison requires a baseline record that is not present."""


class MissingMember(RomanError):
    """An ensemble requires a member prediction that is not present."""


class ParseError(RomanError):
    """Malformed dataset file; carries location information."""

    def __init__(self, message, path=None, line=None, column=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        if column is not None:
            loc += f":{column}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
        self.column = column


class UnequalLength(RomanError):
    """Series of different lengths in a dataset that requires equal length."""


class UnknownClassLabel(RomanError):
    """A label outside the declared class label set."""


class VersionMismatch(RomanError):
    """Serialized artifact written by an incompatible format version."""


class ChecksumMismatch(RomanError):
    """Serialized payload disagrees with its header (size or digest)."""
