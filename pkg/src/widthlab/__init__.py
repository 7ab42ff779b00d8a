"""widthlab: Kolmogorov widths, Toeplitz spectra, Bergman kernels and
relative capacities for explicitly parameterized condensers, with a
desk-scale verification of the width-asymptotics law
-log d_m / m^(1/n) -> 2 pi (n! / C(K, D))^(1/n)."""

__version__ = "0.1.0"

from .bergman import KernelDiagonal, MonomialNormTable, RadialWeight
from .capacity import (
    CapacityValue,
    PlanarCondenserGrid,
    PolyhedralCondenser,
    ReinhardtCondenser,
)
from .errors import (
    DataError,
    GeometryError,
    NumericError,
    OutOfDomainError,
    ParameterError,
    ResourceError,
    TruncationError,
    UnsupportedSymbolError,
    WidthlabError,
)
from .multiindex import CountingQuery, GeometryVector, MultiIndexSequence
from .toeplitz import SpectrumTable, SymbolSpec
from .widths import SlopeEstimate, WidthTable

__all__ = [
    "CapacityValue",
    "CountingQuery",
    "DataError",
    "GeometryError",
    "GeometryVector",
    "KernelDiagonal",
    "MonomialNormTable",
    "MultiIndexSequence",
    "NumericError",
    "OutOfDomainError",
    "ParameterError",
    "PlanarCondenserGrid",
    "PolyhedralCondenser",
    "RadialWeight",
    "ReinhardtCondenser",
    "ResourceError",
    "SlopeEstimate",
    "SpectrumTable",
    "SymbolSpec",
    "TruncationError",
    "UnsupportedSymbolError",
    "WidthlabError",
    "WidthTable",
]
