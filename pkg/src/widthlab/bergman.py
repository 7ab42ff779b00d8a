"""Weighted Bergman spaces on polydiscs with diagonal quadratic radial weights.

The weight phi(z) = sum(tau_k |z_k|^2) keeps the monomials orthogonal in
H^2 of the polydisc, so monomial norms, the kernel diagonal and the
semiclassical Monge-Ampere density are all available through
one-dimensional radial moments

    2*pi * integral(r**(2j+1) * exp(-2*s*r**2), r=lo..hi),

evaluated by the incomplete-gamma closed form (scipy's regularized
gammainc) and cross-validated against adaptive quadrature.  Everything
here is carried in natural logs: at scale k the kernel diagonal grows
like exp(2*k*phi(z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaln

from .errors import (
    GeometryError,
    NumericError,
    OutOfDomainError,
    ParameterError,
    TruncationError,
)

MAX_DIMENSION = 8


@dataclass(frozen=True)
class RadialWeight:
    """Strictly psh weight phi(z) = sum(tau_k |z_k|^2) on a polydisc of radii R."""

    tau: tuple[float, ...]
    R: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= len(self.tau) <= MAX_DIMENSION:
            raise GeometryError(f"dimension must be in [1, {MAX_DIMENSION}]")
        if len(self.R) != len(self.tau):
            raise GeometryError("tau and R must have equal length")
        for k, (t, r) in enumerate(zip(self.tau, self.R)):
            if not (t > 0.0 and math.isfinite(t)):
                raise GeometryError(f"tau[{k}]={t!r} must be positive (strict psh)")
            if not (r > 0.0 and math.isfinite(r)):
                raise GeometryError(f"R[{k}]={r!r} must be positive")

    @property
    def n(self) -> int:
        return len(self.tau)

    def phi(self, z) -> float:
        z = np.asarray(z, dtype=complex).ravel()
        return float(np.sum(np.asarray(self.tau) * np.abs(z) ** 2))


@dataclass(frozen=True)
class KernelDiagonal:
    """Kernel diagonal value B(z, z) with its truncation remainder bound."""

    z: tuple[complex, ...]
    value: float
    log_value: float
    remainder_bound: float
    truncation: tuple[int, ...]


def log_radial_moment(j, s: float, r_lo: float, r_hi: float):
    """log of 2*pi*integral(r**(2j+1)*exp(-2*s*r**2), r=r_lo..r_hi).

    Vectorized over the degree j.  For s > 0 this is the incomplete-gamma
    form pi*(2s)**-(j+1)*(gamma(j+1, 2s*r_hi^2) - gamma(j+1, 2s*r_lo^2));
    the regularized difference is taken on whichever side of the median
    avoids cancellation.
    """
    j = np.asarray(j, dtype=np.float64)
    if r_hi <= r_lo:
        raise ParameterError(f"empty radial interval [{r_lo}, {r_hi}]")
    if s == 0.0:
        out = (
            math.log(2 * math.pi)
            - np.log(2 * j + 2)
            + (2 * j + 2) * math.log(r_hi)
        )
        if r_lo > 0.0:
            out = out + np.log1p(-((r_lo / r_hi) ** (2 * j + 2)))
        return out
    x_hi = 2.0 * s * r_hi**2
    x_lo = 2.0 * s * r_lo**2
    a = j + 1.0
    p_hi = gammainc(a, x_hi)
    if r_lo == 0.0:
        diff = p_hi
    else:
        p_lo = gammainc(a, x_lo)
        # Q-difference is stable when both P's are close to 1
        from scipy.special import gammaincc

        diff = np.where(p_lo > 0.5, gammaincc(a, x_lo) - gammaincc(a, x_hi), p_hi - p_lo)
        diff = np.maximum(diff, 0.0)
    with np.errstate(divide="ignore"):
        log_diff = np.log(diff)
    return math.log(math.pi) - a * math.log(2.0 * s) + gammaln(a) + log_diff


def _quad_radial_moment(j: int, s: float, r_lo: float, r_hi: float) -> float:
    val, _ = quad(
        lambda r: 2 * math.pi * r ** (2 * j + 1) * math.exp(-2 * s * r * r),
        r_lo,
        r_hi,
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return val


def monomial_norm(w: RadialWeight, k: float, nu, validate: bool = True) -> float:
    """Squared weighted norm of z**nu on the polydisc, ||z^nu||^2_{k*phi}.

    Product of per-axis radial moments in incomplete-gamma closed form;
    with validate=True each factor is cross-checked against adaptive
    quadrature at 1e-12 relative agreement.
    """
    if k < 0.0:
        raise ParameterError(f"scale k={k} must be >= 0")
    nu = tuple(int(v) for v in np.atleast_1d(nu))
    if len(nu) != w.n or any(v < 0 for v in nu):
        raise ParameterError(f"multi-index {nu} invalid for dimension {w.n}")
    log_norm = 0.0
    for ax in range(w.n):
        lm = float(log_radial_moment(nu[ax], k * w.tau[ax], 0.0, w.R[ax]))
        if validate:
            closed = math.exp(lm)
            ref = _quad_radial_moment(nu[ax], k * w.tau[ax], 0.0, w.R[ax])
            if not math.isclose(closed, ref, rel_tol=1e-12, abs_tol=0.0):
                raise NumericError(
                    "closed-form radial moment disagrees with quadrature",
                    axis=ax,
                    closed_form=closed,
                    quadrature=ref,
                )
        log_norm += lm
    return math.exp(log_norm)


class MonomialNormTable:
    """Per-axis log norms of monomials up to degree J_max, spot-validated.

    For the diagonal weight the norm of z**nu factorizes over axes, so
    the table stores one (J_max+1)-vector of log moments per axis.
    Immutable after construction and shareable across threads.
    """

    def __init__(self, w: RadialWeight, k: float, J_max: int, validate: bool = True):
        if k < 0.0:
            raise ParameterError(f"scale k={k} must be >= 0")
        if J_max < 0:
            raise ParameterError(f"J_max={J_max} must be >= 0")
        self.weight = w
        self.k = float(k)
        self.J_max = int(J_max)
        j = np.arange(J_max + 1)
        self._axis_log_norms = np.vstack(
            [log_radial_moment(j, k * w.tau[ax], 0.0, w.R[ax]) for ax in range(w.n)]
        )
        if validate:
            sample = sorted({0, 1, J_max // 2, J_max} & set(range(J_max + 1)))
            for ax in range(w.n):
                for jj in sample:
                    closed = math.exp(self._axis_log_norms[ax, jj])
                    ref = _quad_radial_moment(jj, k * w.tau[ax], 0.0, w.R[ax])
                    if not math.isclose(closed, ref, rel_tol=1e-12, abs_tol=0.0):
                        raise NumericError(
                            "norm table disagrees with quadrature",
                            axis=ax,
                            degree=jj,
                            closed_form=closed,
                            quadrature=ref,
                        )

    def axis_log_norms(self, ax: int) -> np.ndarray:
        return self._axis_log_norms[ax]

    def log_norm(self, nu) -> float:
        nu = tuple(int(v) for v in np.atleast_1d(nu))
        if any(v > self.J_max for v in nu):
            raise ParameterError(f"multi-index {nu} beyond table degree {self.J_max}")
        return float(sum(self._axis_log_norms[ax, v] for ax, v in enumerate(nu)))

    def norm(self, nu) -> float:
        return math.exp(self.log_norm(nu))


def _axis_kernel_series(
    w: RadialWeight, k: float, ax: int, abs_z: float, J: int
) -> tuple[float, float]:
    """(log sum, log remainder bound) of sum(|z|^(2j)/N_j) over j <= J.

    The term ratio t_{j+1}/t_j = |z|^2 N_j / N_{j+1} decreases in j
    (Cauchy-Schwarz makes N log-convex), so once it falls below 1 the
    tail is dominated by the geometric series with the last ratio.
    """
    j = np.arange(J + 2)
    log_N = log_radial_moment(j, k * w.tau[ax], 0.0, w.R[ax])
    if abs_z == 0.0:
        return float(-log_N[0]), -math.inf
    log_terms = 2 * j * math.log(abs_z) - log_N
    head = log_terms[: J + 1]
    mx = float(np.max(head))
    log_sum = mx + math.log(float(np.sum(np.exp(head - mx))))
    log_ratio = float(log_terms[J + 1] - log_terms[J])  # certified >= later ratios
    if log_ratio >= 0.0:
        return log_sum, math.inf
    log_rem = float(log_terms[J + 1]) - math.log1p(-math.exp(log_ratio))
    return log_sum, log_rem


def kernel_diagonal(
    w: RadialWeight,
    k: float,
    z,
    J_max: int | None = None,
    rel_tol: float = 1e-10,
) -> KernelDiagonal:
    """Bergman kernel diagonal B_{k phi}(z, z) with certified truncation.

    The kernel factorizes over axes; each factor is summed to a degree at
    which the geometric-domination remainder is below rel_tol relative to
    the value.  Passing J_max too small raises TruncationError carrying
    the achieved bound.
    """
    z = tuple(complex(v) for v in np.atleast_1d(z))
    if len(z) != w.n:
        raise ParameterError(f"point dimension {len(z)} != weight dimension {w.n}")
    for ax, zv in enumerate(z):
        if abs(zv) >= w.R[ax]:
            raise OutOfDomainError(
                f"|z[{ax}]|={abs(zv)} not strictly inside radius {w.R[ax]}"
            )

    def combined(J_axes: list[int]) -> tuple[float, float, float]:
        log_S, log_rem = zip(
            *(
                _axis_kernel_series(w, k, ax, abs(z[ax]), J_axes[ax])
                for ax in range(w.n)
            )
        )
        log_value = float(sum(log_S))
        # total remainder: prod(S_k + rem_k) - prod(S_k)
        log_with = float(sum(np.logaddexp(log_S, log_rem)))
        rem_rel = math.expm1(log_with - log_value) if math.isfinite(log_with) else math.inf
        return log_value, rem_rel, log_with

    if J_max is not None:
        J_axes = [int(J_max)] * w.n
        log_value, rem_rel, _ = combined(J_axes)
        if rem_rel > rel_tol:
            raise TruncationError(
                f"J_max={J_max} leaves relative remainder {rem_rel:.3e} > {rel_tol:.1e}",
                achieved_bound=rem_rel,
            )
    else:
        J_axes = [16] * w.n
        for _ in range(60):
            log_value, rem_rel, _ = combined(J_axes)
            if rem_rel <= rel_tol:
                break
            J_axes = [2 * J for J in J_axes]
        else:
            raise NumericError("kernel truncation did not converge", J_axes=J_axes)

    value = math.exp(log_value) if log_value < 700 else math.inf
    return KernelDiagonal(
        z=z,
        value=value,
        log_value=log_value,
        remainder_bound=rem_rel * value if math.isfinite(value) else math.inf,
        truncation=tuple(J_axes),
    )


def ma_density(w: RadialWeight, z) -> float:
    """Lebesgue density of (2 pi)^-n (n!)^-1 (dd^c phi)^n at z.

    For the diagonal quadratic weight, (dd^c phi)^n = n! prod(4 tau_k) dm,
    so the density prod(4 tau_k) / (2 pi)^n is constant on the polydisc.
    """
    z = tuple(complex(v) for v in np.atleast_1d(z))
    if len(z) != w.n:
        raise ParameterError(f"point dimension {len(z)} != weight dimension {w.n}")
    for ax, zv in enumerate(z):
        if abs(zv) >= w.R[ax]:
            raise OutOfDomainError(f"z[{ax}] outside the polydisc")
    return math.prod(4.0 * t for t in w.tau) / (2.0 * math.pi) ** w.n
