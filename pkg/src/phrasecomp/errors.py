"""Exception types shared across the package."""


class PhrasecompError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PhrasecompError):
    """Malformed bracketed tree input."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class FormatError(PhrasecompError):
    """Malformed file or label format."""


class DimError(PhrasecompError):
    """Vector dimension mismatch."""


class DuplicateError(PhrasecompError):
    """Duplicate key in an embedding store."""


class NotFound(PhrasecompError):
    """Lookup key absent."""


class EmptyDataset(PhrasecompError):
    """No usable rows remain."""


class NotTrainable(PhrasecompError):
    """Arithmetic probes have no parameters to fit."""


class TooSmall(PhrasecompError):
    """Not enough data for the requested split or test."""


class ZeroVector(PhrasecompError):
    """Cosine similarity is undefined for a zero vector."""


class DegenerateControl(PhrasecompError):
    """Control distance is zero; error ratio undefined."""


class CurveTooShort(PhrasecompError):
    """Fewer than two usable learning-curve fractions."""


class UndefinedCorrelation(PhrasecompError):
    """Correlation undefined (constant input)."""


class DomainError(PhrasecompError):
    """Value outside its legal domain."""


class UndefinedAgreement(PhrasecompError):
    """Krippendorff's alpha undefined for this data."""


class EmptyTest(PhrasecompError):
    """No eligible items for the requested test."""


class EmptyIndex(PhrasecompError):
    """N-gram index contains no usable rows."""


class EmptyMatch(PhrasecompError):
    """No candidate phrases share the idiom's pattern."""
