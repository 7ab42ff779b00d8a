"""Exception hierarchy shared by all widthlab modules."""


class WidthlabError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(WidthlabError):
    """Invalid geometry: bad radii ordering, empty masks, masks touching."""


class ParameterError(WidthlabError):
    """A scalar parameter or configuration value is outside its admissible range."""


class OutOfDomainError(WidthlabError):
    """An evaluation point lies outside the domain of definition."""


class ResourceError(WidthlabError):
    """A requested computation exceeds the configured size caps."""


class NumericError(WidthlabError):
    """A numeric cross-check disagreed or an iteration failed to converge.

    Carries a ``details`` dict (iteration counts, the two disagreeing
    values, achieved residuals) for diagnosis.
    """

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class UnsupportedSymbolError(WidthlabError):
    """Toeplitz symbol outside the radial class supported by the diagonal path."""


class TruncationError(WidthlabError):
    """A requested truncation degree is too small for the target accuracy."""

    def __init__(self, message: str, achieved_bound: float | None = None):
        super().__init__(message)
        self.achieved_bound = achieved_bound


class DataError(WidthlabError):
    """Input table malformed: zero, negative or non-finite entries."""
