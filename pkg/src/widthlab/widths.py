"""Kolmogorov numbers of condenser embeddings and the asymptotic slope law.

The Hilbert-space widths d_m(H^2(D) -> L^2(K)) of a Reinhardt condenser
are square roots of Toeplitz eigenvalues and are exact; sup-norm widths
are bracketed between a reproducing-kernel lower bound and a staircase
Taylor-tail upper bound.  Both brackets share the asymptotic slope

    -log d_m / m^(1/n)  ->  2 pi (n! / C(K, D))^(1/n),

which slope_estimate fits through the origin over a tail window.  Width
tables are kept in natural logs: linear d_m underflows near m ~ 1100
already for the half-radius disc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bergman import RadialWeight
from .capacity import CapacityValue, Condenser, ReinhardtCondenser, product_capacity
from .errors import DataError, ParameterError
from .multiindex import rearrange, tail_profile
from .toeplitz import SymbolSpec, spectrum

WIDTH_KINDS = ("hilbert-exact", "supnorm-lower", "supnorm-upper")


@dataclass(frozen=True)
class WidthTable:
    """Width values m -> d_m for m = 1..M, carried as natural logs."""

    log_d: np.ndarray
    kind: str
    condenser: Condenser | None = field(default=None, repr=False)
    k: float = 0.0

    def __post_init__(self):
        if self.kind not in WIDTH_KINDS:
            raise ParameterError(f"kind {self.kind!r} not in {WIDTH_KINDS}")

    @property
    def d(self) -> np.ndarray:
        """Linear widths; may flush to zero deep in the tail."""
        return np.exp(self.log_d)

    def __len__(self) -> int:
        return len(self.log_d)


@dataclass(frozen=True)
class SlopeEstimate:
    """Through-origin LSQ fit of -log d_m against m^(1/n) on [m_lo, m_hi]."""

    slope: float
    window: tuple[int, int]
    residual: float
    target: float | None = None

    @property
    def relative_error(self) -> float | None:
        if self.target is None:
            return None
        return abs(self.slope - self.target) / self.target


def embedding_widths(
    cond: ReinhardtCondenser,
    k: float = 0.0,
    w: RadialWeight | None = None,
    M: int = 64,
) -> WidthTable:
    """Exact Kolmogorov numbers of H^2_{k phi}(polydisc a) -> L^2_{k phi}(polydisc b).

    d_m^2 is the m-th Toeplitz eigenvalue for the indicator of the inner
    polydisc.  Unweighted (k = 0) the values are the rearranged products
    prod(alpha_k^(nu_k + 1)) and are computed directly in log space.
    """
    if not isinstance(cond, ReinhardtCondenser):
        raise ParameterError("embedding widths require a Reinhardt condenser")
    if M < 1:
        raise ParameterError(f"M={M} must be >= 1")
    if k == 0.0:
        seq = rearrange(cond.geometry(), M)
        log_d = seq.log_gamma + sum(math.log(a) for a in cond.alpha)
        return WidthTable(log_d=log_d, kind="hilbert-exact", condenser=cond, k=0.0)
    if w is None:
        raise ParameterError("weighted widths (k > 0) require a RadialWeight")
    if tuple(w.R) != tuple(cond.a):
        raise ParameterError("weight domain radii must match the condenser's outer radii")
    sym = SymbolSpec.polydisc(cond.b)
    tail = 1e-13
    table = spectrum(w, k, sym, tail_target=tail)
    while len(table) < M:
        tail /= 1e3
        table = spectrum(w, k, sym, tail_target=tail)
    log_d = 0.5 * np.log(table.lambdas[:M])
    return WidthTable(log_d=log_d, kind="hilbert-exact", condenser=cond, k=float(k))


def default_shrink(cond: ReinhardtCondenser) -> float:
    """Geometric mean of max_k(b_k/a_k) and 1: the intermediate-domain default."""
    return math.sqrt(max(cond.alpha))


def supnorm_bounds(
    cond: ReinhardtCondenser, M: int, s: float | None = None
) -> tuple[WidthTable, WidthTable]:
    """Bracket the sup-norm widths of (polydisc b, polydisc a).

    lower_m chains the reproducing-kernel estimate through an intermediate
    polydisc of radii s*a:

        d_m(H^inf(s a) -> A(K)) >= d_m(H^2(a) -> L^2(K)) / (||J1|| sqrt(m(K)))

    with ||J1|| <= sup over the intermediate polydisc of B(z, z)^(1/2).
    upper_m = sum(gamma_l, l >= m) is the staircase Taylor tail for the
    Cauchy coefficient ball, an upper bound for a_m and hence d_m.
    """
    if M < 1:
        raise ParameterError(f"M={M} must be >= 1")
    alpha = cond.alpha
    if s is None:
        s = default_shrink(cond)
    if not max(alpha) < s < 1.0:
        raise ParameterError(
            f"shrink factor s={s} must lie in (max(b/a), 1) = ({max(alpha)}, 1)"
        )
    geom = cond.geometry()
    seq = rearrange(geom, M)
    log_hilbert = seq.log_gamma + sum(math.log(a) for a in alpha)

    # ||J1||: sup of the polydisc kernel diagonal over |z_k| <= s a_k
    log_J1 = sum(
        -0.5 * math.log(math.pi) - math.log(ak) - math.log(1.0 - s * s)
        for ak in cond.a
    )
    log_sqrt_mK = 0.5 * sum(math.log(math.pi) + 2.0 * math.log(bk) for bk in cond.b)
    log_lower = log_hilbert - log_J1 - log_sqrt_mK

    profile = tail_profile(geom, M)
    log_upper = profile.log_tail[:M]  # tail(m-1) = sum(gamma_l, l >= m)

    lower = WidthTable(log_d=log_lower, kind="supnorm-lower", condenser=cond, k=0.0)
    upper = WidthTable(log_d=log_upper, kind="supnorm-upper", condenser=cond, k=0.0)
    return lower, upper


def slope_estimate(
    table: WidthTable,
    n: int,
    window: tuple[int, int] | None = None,
    target: float | None = None,
) -> SlopeEstimate:
    """Fit -log d_m = slope * m^(1/n) by least squares over a tail window.

    The window defaults to [M/2, M].  The fit is through the origin --
    the limit law has no intercept -- so the finite-M bias decays like
    1/sqrt(M) and shrinks monotonically as M grows.  When the table
    carries a condenser and no explicit target, the capacity target
    2 pi (n!/C)^(1/n) is attached.
    """
    M = len(table)
    if M < 32:
        raise ParameterError(f"table length {M} < 32: no tail window to fit")
    log_d = np.asarray(table.log_d, dtype=float)
    if not np.all(np.isfinite(log_d)):
        raise DataError("width table has zero or non-finite entries")
    if window is None:
        window = (M // 2, M)
    lo, hi = window
    if not 1 <= lo < hi <= M:
        raise ParameterError(f"window {window} invalid for table length {M}")
    m = np.arange(lo, hi + 1, dtype=float)
    x = m ** (1.0 / n)
    y = -log_d[lo - 1 : hi]
    slope = float(np.dot(x, y) / np.dot(x, x))
    residual = float(np.sqrt(np.mean((y - slope * x) ** 2)))
    if target is None and table.condenser is not None:
        target = target_slope(product_capacity(table.condenser), n)
    return SlopeEstimate(slope=slope, window=(lo, hi), residual=residual, target=target)


def target_slope(C: CapacityValue | float, n: int) -> float:
    """Asymptotic width slope 2 pi (n! / C)^(1/n) for capacity C."""
    value = C.value if isinstance(C, CapacityValue) else float(C)
    if not value > 0.0:
        raise ParameterError(f"capacity {value} must be positive")
    return 2.0 * math.pi * (math.factorial(n) / value) ** (1.0 / n)
