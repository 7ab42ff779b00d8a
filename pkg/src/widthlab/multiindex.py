"""Lattice-point counting and rearrangement of geometric multi-sequences.

For a geometry vector ``alpha`` in (0,1)^n, the values ``alpha**nu`` over
multi-indices ``nu`` in N_0^n, rearranged in non-increasing order
``gamma_1 >= gamma_2 >= ...``, drive every truncation argument in this
package: staircase Taylor truncation, sup-norm width upper bounds, and the
explicit tail estimates certifying both.  The decay is stretched
exponential, ``gamma_m <= exp(sum(beta) - (c*m)**(1/n))`` with
``beta_k = log(1/alpha_k)`` and ``c = n! * prod(beta)``, so all sequence
values are carried in natural-log form; linear values are derived views
and may flush to zero far in the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import GeometryError, NumericError, ParameterError, ResourceError

MAX_DIMENSION = 8

# Enumeration caps: candidate boxes and requested sequence lengths beyond
# these raise ResourceError instead of exhausting memory.
MAX_BOX_POINTS = 40_000_000
MAX_SEQUENCE_LENGTH = 2_000_000


@dataclass(frozen=True)
class GeometryVector:
    """Ratio vector alpha in (0,1)^n with its derived decay constants."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= len(self.alpha) <= MAX_DIMENSION:
            raise GeometryError(
                f"dimension must be in [1, {MAX_DIMENSION}], got {len(self.alpha)}"
            )
        for k, a in enumerate(self.alpha):
            if not (0.0 < a < 1.0) or not math.isfinite(a):
                raise GeometryError(f"alpha[{k}]={a!r} not strictly inside (0, 1)")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def beta(self) -> tuple[float, ...]:
        """Per-axis decay rates beta_k = log(1/alpha_k), all positive."""
        return tuple(-math.log(a) for a in self.alpha)

    @property
    def c(self) -> float:
        """Decay constant c = n! * prod(beta); strictly positive."""
        return math.factorial(self.n) * math.prod(self.beta)


@dataclass(frozen=True)
class CountingQuery:
    """Counting-function query: beta in (0,inf)^n and threshold r >= 0."""

    beta: tuple[float, ...]
    r: float

    def __post_init__(self):
        if len(self.beta) < 1:
            raise GeometryError("beta must have dimension >= 1")
        if len(self.beta) > MAX_DIMENSION:
            raise GeometryError(f"dimension must be <= {MAX_DIMENSION}")
        for k, b in enumerate(self.beta):
            if not (b > 0.0) or not math.isfinite(b):
                raise GeometryError(f"beta[{k}]={b!r} must be positive and finite")
        if not (self.r >= 0.0) or not math.isfinite(self.r):
            raise ParameterError(f"threshold r={self.r!r} must be >= 0 and finite")


@dataclass(frozen=True)
class MultiIndexSequence:
    """Initial segment of the non-increasing rearrangement of alpha**nu.

    ``nu[m-1]`` is the multi-index of the m-th largest value and
    ``log_gamma[m-1] = log(alpha**nu[m-1])``.  Ties in gamma are ordered
    lexicographically on nu, which keeps the listed prefix a staircase
    (downward-closed) set: a strictly smaller index has a strictly larger
    gamma, so only incomparable indices can tie.
    """

    nu: np.ndarray
    log_gamma: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        """Linear values; may underflow to 0 deep in the tail."""
        return np.exp(self.log_gamma)

    def __len__(self) -> int:
        return len(self.log_gamma)


@dataclass(frozen=True)
class TailBounds:
    """Lemma-style bounds and certified exact tail at a single index m.

    gamma_bound bounds gamma_m (m >= 1); tail_sum_bound and tail_sum_exact
    refer to sum(gamma_l for l > m).  Linear fields may flush to zero; the
    log fields are authoritative.
    """

    m: int
    gamma_bound: float | None
    tail_sum_bound: float
    tail_sum_exact: float
    log_gamma_bound: float | None
    log_tail_sum_bound: float
    log_tail_sum_exact: float


@dataclass(frozen=True)
class TailProfile:
    """Certified tails sum(gamma_l, l > m) for every m = 0..M at once.

    log_tail[m] includes the enumeration remainder, which is certified
    below ``rel_tol`` relative to the smallest reported tail, so values
    are exact to that relative accuracy and never undershoot.
    """

    log_tail: np.ndarray
    log_remainder: float
    count: int

    def tail(self, m: int) -> float:
        return float(np.exp(self.log_tail[m]))


def _box_size(beta: np.ndarray, r: float) -> int:
    return math.prod(int(math.floor(r / b)) + 1 for b in beta)


def _enumerate_simplex(beta: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """All nu with nu . beta <= r, with their weighted sums."""
    axes = [np.arange(int(math.floor(r / b)) + 1, dtype=np.int64) for b in beta]
    box = math.prod(len(a) for a in axes)
    if box > MAX_BOX_POINTS:
        raise ResourceError(
            f"simplex enumeration box of {box} points exceeds cap {MAX_BOX_POINTS}"
        )
    grids = np.meshgrid(*axes, indexing="ij")
    nu = np.stack([g.ravel() for g in grids], axis=1)
    s = nu.astype(np.float64) @ beta
    keep = s <= r
    return nu[keep], s[keep]


def count_lattice(query: CountingQuery) -> int:
    """Count multi-indices nu in N_0^n with sum(nu_k * beta_k) <= r.

    Exact enumeration count; never materialises the n-dimensional box.
    """
    beta = query.beta
    r = query.r

    def count(bs: tuple[float, ...], budget: float) -> int:
        if budget < 0.0:
            return 0
        if len(bs) == 1:
            return int(math.floor(budget / bs[0])) + 1
        k = np.arange(int(math.floor(budget / bs[0])) + 1, dtype=np.int64)
        rem = budget - k * bs[0]
        if len(bs) == 2:
            return int(np.sum(np.floor(rem / bs[1]).astype(np.int64) + 1))
        return sum(count(bs[1:], float(t)) for t in rem)

    return count(beta, r)


def count_lattice_bounds(query: CountingQuery) -> tuple[float, float]:
    """Two-sided volume bounds bracketing the counting function.

    Lower: r^n / (n! prod(beta)); upper: (r + sum(beta))^n / (n! prod(beta)).
    """
    n = len(query.beta)
    denom = math.factorial(n) * math.prod(query.beta)
    lower = query.r**n / denom
    upper = (query.r + sum(query.beta)) ** n / denom
    return lower, upper


def rearrange(geom: GeometryVector, M: int) -> MultiIndexSequence:
    """First M terms of the non-increasing rearrangement of alpha**nu.

    Candidate indices are generated inside the simplex nu . beta <= r with
    r grown geometrically until at least M candidates exist (the volume
    lower bound makes the initial radius sufficient already), then sorted
    by descending gamma with lexicographic tie-breaking on nu.
    """
    if M < 1:
        raise ParameterError(f"sequence length M={M} must be >= 1")
    if M > MAX_SEQUENCE_LENGTH:
        raise ResourceError(f"M={M} exceeds cap {MAX_SEQUENCE_LENGTH}")
    n = geom.n
    beta = np.asarray(geom.beta)
    r = (geom.c * (M + 1)) ** (1.0 / n) * (1.0 + 1e-12)
    while True:
        nu, s = _enumerate_simplex(beta, r)
        if len(s) >= M:
            break
        r *= 1.26
    order = np.lexsort(tuple(nu[:, j] for j in range(n - 1, -1, -1)) + (s,))
    order = order[:M]
    return MultiIndexSequence(nu=nu[order], log_gamma=-s[order])


def _log_tail_sum_bound(geom: GeometryVector, m: int) -> float:
    """Log of the explicit tail bound sum(gamma_l, l>m) <= prefactor*S*exp(-(cm)^(1/n))."""
    n = geom.n
    beta = geom.beta
    cm = geom.c * m
    log_prefactor = sum(b - math.log(b) for b in beta)  # log 1/prod(alpha_k beta_k)
    if m == 0:
        log_series = 0.0  # only k=0 term survives at cm=0
    else:
        log_cm = math.log(cm)
        terms = [k / n * log_cm - math.lgamma(k + 1) for k in range(n)]
        log_series = float(logsumexp(terms))
    return log_prefactor + log_series - cm ** (1.0 / n)


def _log_gamma_bound(geom: GeometryVector, m: int) -> float:
    return sum(geom.beta) - (geom.c * m) ** (1.0 / geom.n)


def tail_profile(geom: GeometryVector, M: int, rel_tol: float = 1e-15) -> TailProfile:
    """Certified log-tails log(sum(gamma_l, l > m)) for all m = 0..M.

    n = 1 is the closed-form geometric tail.  For n >= 2 the simplex is
    enumerated out to a radius at which the enumeration remainder -- the
    smaller of the explicit tail bound at the cutoff and the exact
    complement against the full product sum prod(1/(1-alpha)) -- drops
    below rel_tol relative to the smallest reported tail.  Falls back to
    NumericError only if the cap is reached before 1e-12 relative.
    """
    if M < 0:
        raise ParameterError(f"M={M} must be >= 0")
    n = geom.n
    alpha = np.asarray(geom.alpha)
    if n == 1:
        a = float(alpha[0])
        m = np.arange(M + 1, dtype=np.float64)
        log_tail = m * math.log(a) - math.log1p(-a)
        return TailProfile(log_tail=log_tail, log_remainder=-math.inf, count=M + 1)

    beta = np.asarray(geom.beta)
    log_total = float(-np.sum(np.log1p(-alpha)))
    total = math.exp(log_total) if log_total < 700 else math.inf
    r = (geom.c * (M + 1)) ** (1.0 / n) + 16.0
    while True:
        nu, s = _enumerate_simplex(beta, r)
        L = len(s)
        if L >= M + 1:
            log_gamma = np.sort(-s)[::-1]
            # remainder route 1: explicit bound at the cutoff
            log_rem_bound = _log_tail_sum_bound(geom, L)
            # remainder route 2: exact complement of the full product sum,
            # padded by the summation rounding allowance
            log_enum_total = float(logsumexp(log_gamma))
            if math.isfinite(total):
                diff = max(total - math.exp(log_enum_total), 0.0)
                log_rem_diff = math.log(diff + 64 * np.finfo(float).eps * total)
            else:
                log_rem_diff = math.inf
            log_remainder = min(log_rem_bound, log_rem_diff)
            suffix = np.logaddexp.accumulate(log_gamma[::-1])[::-1]
            log_tail_min = float(suffix[M]) if M < L else -math.inf
            if log_remainder <= log_tail_min + math.log(rel_tol):
                break
        new_r = r + 8.0
        if _box_size(beta, new_r) > MAX_BOX_POINTS:
            # accept if the documented 1e-12 relative accuracy is still met
            if L >= M + 1 and log_remainder <= log_tail_min + math.log(1e-12):
                break
            raise NumericError(
                "tail enumeration hit the box cap before reaching the "
                "requested relative remainder",
                achieved_log_remainder=log_remainder if L >= M + 1 else None,
            )
        r = new_r

    # log_tail[m] = logaddexp(sum over enumerated l > m, remainder)
    log_tail = np.logaddexp(suffix[: M + 1], log_remainder)
    return TailProfile(log_tail=log_tail, log_remainder=log_remainder, count=L)


def tail_bounds(geom: GeometryVector, m: int) -> TailBounds:
    """Explicit tail bounds at index m plus the certified exact tail.

    gamma_bound = exp(sum(beta)) * exp(-(c m)^(1/n)) bounds gamma_m for
    m >= 1; the tail bound and exact tail refer to sum(gamma_l, l > m)
    and are valid for m >= 0.  The exact tail is computed to 1e-12
    relative accuracy (closed form for n = 1, certified enumeration
    otherwise).
    """
    if m < 0:
        raise ParameterError(f"m={m} must be >= 0")
    if m == 0:
        log_gb = None
    else:
        log_gb = _log_gamma_bound(geom, m)
    log_tb = _log_tail_sum_bound(geom, m)
    profile = tail_profile(geom, m)
    log_exact = float(profile.log_tail[m])
    return TailBounds(
        m=m,
        gamma_bound=None if log_gb is None else float(np.exp(log_gb)),
        tail_sum_bound=float(np.exp(log_tb)),
        tail_sum_exact=float(np.exp(log_exact)),
        log_gamma_bound=log_gb,
        log_tail_sum_bound=log_tb,
        log_tail_sum_exact=log_exact,
    )
