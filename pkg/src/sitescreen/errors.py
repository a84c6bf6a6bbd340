"""Exception hierarchy shared by all sitescreen modules."""


class SiteScreenError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(SiteScreenError):
    """Input structure does not match the expected schema (columns, fields, shapes of documents)."""


class ParseError(SiteScreenError):
    """A cell or value could not be parsed or violates a field constraint."""


class DuplicateKeyError(SiteScreenError):
    """Two records share the same (city, date) key."""


class DateRangeError(SiteScreenError):
    """A date range is empty or inverted."""


class UnfillableSeriesError(SiteScreenError):
    """A per-city series has no observed values to interpolate from."""


class EmptyInputError(SiteScreenError):
    """An operation that requires data received none."""


class InfeasibleKError(SiteScreenError):
    """Requested more clusters than there are rows."""


class UndefinedSilhouetteError(SiteScreenError):
    """Silhouette is undefined (fewer than two clusters)."""


class AlignmentError(SiteScreenError):
    """Row-aligned inputs have mismatched lengths."""


class LabelCoverageError(SiteScreenError):
    """A declared class is absent from the training split."""


class ParameterError(SiteScreenError):
    """A hyperparameter is outside its valid range."""


class ShapeError(SiteScreenError):
    """A row or matrix has the wrong arity."""


class EmptyBackgroundError(SiteScreenError):
    """Attribution requested against an empty background set."""


class DegenerateImportanceError(SiteScreenError):
    """All feature importances are zero; weights cannot be normalized."""


class UnsupportedVersionError(SiteScreenError):
    """A persisted document declares a format version this build does not understand."""


class BundleFormatError(SchemaError):
    """A persisted bundle document is structurally invalid; the message names the offending path."""


class PipelineStageError(SiteScreenError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
