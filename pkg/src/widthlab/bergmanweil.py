"""Finite-rank approximation of restriction operators on polyhedral condensers.

The rank-m truncation J_m of the Bergman-Weil reproducing formula keeps
the m staircase-largest pullback powers F^nu.  For monomial maps
F_k(z) = z_k^{p_k} - c_k the coefficient contour integrals collapse in
closed form: holomorphic functions split into m0 = prod(p_k) sectors
z^mu * (function of F), mu < p componentwise, and J_m truncates each
sector's F-expansion to the retained staircase.  That yields the rank
bound rank(J_m) <= m0 * m and makes both the worst-case error and the
explicit Hefer-constant bound exactly computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import Condenser, PolyhedralCondenser, ReinhardtCondenser
from .errors import NumericError, OutOfDomainError, ParameterError
from .multiindex import MultiIndexSequence, rearrange, tail_profile


@dataclass(frozen=True)
class HeferData:
    """Diagonal Hefer matrix for the monomial map F_k(z) = z_k^{p_k} - c_k.

    Entries g_k(zeta, z) = sum_{i<p_k} zeta^i z^{p_k-1-i} satisfy
    F(zeta) - F(z) = G(zeta, z)(zeta - z) identically; the shift c drops
    out of the difference.
    """

    p: tuple[int, ...]

    def __post_init__(self):
        if not self.p or any(not isinstance(v, int) or v < 1 for v in self.p):
            raise ParameterError(f"powers {self.p!r} must be positive integers")

    @property
    def n(self) -> int:
        return len(self.p)

    def axis_terms(self, ax: int) -> list[tuple[int, int]]:
        """(zeta-exponent, z-exponent) pairs of the diagonal entry g_ax."""
        pk = self.p[ax]
        return [(i, pk - 1 - i) for i in range(pk)]

    def entry(self, ax: int, zeta_ax, z_ax):
        zeta_ax = np.asarray(zeta_ax, dtype=complex)
        z_ax = np.asarray(z_ax, dtype=complex)
        out = np.zeros(np.broadcast(zeta_ax, z_ax).shape, dtype=complex)
        for i, j in self.axis_terms(ax):
            out = out + zeta_ax**i * z_ax**j
        return out if out.shape else complex(out)

    def det(self, zeta, z):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = 1.0 + 0.0j
        for ax in range(self.n):
            out = out * self.entry(ax, zeta[ax], z[ax])
        return complex(out)

    def max_identity_defect(self, rng: np.random.Generator, pairs: int = 10_000,
                            box: float = 2.0) -> float:
        """Largest relative defect of F(zeta)-F(z) = G(zeta,z)(zeta-z) on random pairs."""
        worst = 0.0
        for _ in range(pairs):
            zeta = box * (rng.random(self.n) - 0.5) + 1j * box * (rng.random(self.n) - 0.5)
            z = box * (rng.random(self.n) - 0.5) + 1j * box * (rng.random(self.n) - 0.5)
            for ax in range(self.n):
                lhs = zeta[ax] ** self.p[ax] - z[ax] ** self.p[ax]
                rhs = self.entry(ax, zeta[ax], z[ax]) * (zeta[ax] - z[ax])
                scale = max(abs(lhs), abs(rhs), 1.0)
                worst = max(worst, abs(lhs - rhs) / scale)
        return worst


def hefer_det(p, zeta, z) -> complex:
    """det G(zeta, z) = prod_k sum_{i<p_k} zeta_k^i z_k^{p_k-1-i}."""
    p = tuple(int(v) for v in np.atleast_1d(p))
    return HeferData(p).det(zeta, z)


def _condenser_powers(cond: Condenser) -> tuple[int, ...]:
    if isinstance(cond, PolyhedralCondenser):
        return cond.p
    return (1,) * cond.n


def _condenser_shift(cond: Condenser) -> tuple[complex, ...]:
    if isinstance(cond, PolyhedralCondenser):
        return cond.c_reg
    return (0.0,) * cond.n


@dataclass(frozen=True)
class ApproximantSpec:
    """Rank parameter m and the staircase of retained pullback powers."""

    condenser: Condenser
    m: int
    retained: MultiIndexSequence = field(init=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"rank parameter m={self.m} must be >= 1")
        object.__setattr__(
            self, "retained", rearrange(self.condenser.geometry(), self.m)
        )

    @property
    def multiplicity(self) -> int:
        return self.condenser.multiplicity

    @property
    def rank_bound(self) -> int:
        return self.multiplicity * self.m

    def hefer(self) -> HeferData:
        return HeferData(_condenser_powers(self.condenser))


def _check_cauchy_decay(spec: ApproximantSpec, coeffs: dict) -> None:
    a = spec.condenser.a
    bad = []
    for nu, g in coeffs.items():
        nu = tuple(int(v) for v in nu)
        if len(nu) != spec.condenser.n or any(v < 0 for v in nu):
            raise ParameterError(f"coefficient index {nu} invalid")
        bound = math.prod(ak ** (-v) for ak, v in zip(a, nu))
        if abs(g) > bound * (1.0 + 1e-12):
            bad.append((nu, abs(g), bound))
    if bad:
        detail = ", ".join(f"nu={nu}: |g|={g:.6g} > {b:.6g}" for nu, g, b in bad[:5])
        raise ParameterError(
            f"{len(bad)} coefficient(s) violate the Cauchy decay |g_nu| <= prod a^-nu: {detail}"
        )


def approximant_apply(spec: ApproximantSpec, coeffs: dict, z) -> complex:
    """Apply J_m to g = sum g_nu F^nu given finitely many pullback coefficients.

    Returns sum over retained l <= m of g_{nu(l)} F(z)^{nu(l)}; for the
    Reinhardt case this is Taylor truncation to the staircase.  The
    coefficients must satisfy the Cauchy decay |g_nu| <= prod(a_k^-nu_k).
    """
    _check_cauchy_decay(spec, coeffs)
    w = spec.condenser.map_abs(z)
    for ax, (wv, bk) in enumerate(zip(w, spec.condenser.b)):
        if wv > bk * (1.0 + 1e-12):
            raise OutOfDomainError(f"axis {ax}: |F(z)|={wv} outside the compact level {bk}")
    if isinstance(spec.condenser, PolyhedralCondenser):
        Fz = spec.condenser.map_values(z)
    else:
        Fz = np.asarray(z, dtype=complex).ravel()
    total = 0.0 + 0.0j
    lookup = {tuple(int(v) for v in nu): complex(g) for nu, g in coeffs.items()}
    for nu in spec.retained.nu:
        key = tuple(int(v) for v in nu)
        g = lookup.get(key)
        if g is not None:
            total += g * complex(np.prod(Fz**nu))
    return complex(total)


def apply_monomial(spec: ApproximantSpec, sigma, z) -> complex:
    """Apply J_m to the plain monomial z^sigma, in closed form.

    Writing sigma = mu + p*q with mu = sigma mod p, the monomial is
    z^mu * (F + c)^q; the Bergman-Weil coefficient integrals pick out
    exactly the binomial re-expansion, so

        J_m z^sigma = z^mu * sum over retained nu <= q of
                      prod_k binom(q_k, nu_k) c_k^(q_k - nu_k) * F(z)^nu.
    """
    p = _condenser_powers(spec.condenser)
    c = _condenser_shift(spec.condenser)
    sigma = tuple(int(v) for v in np.atleast_1d(sigma))
    if len(sigma) != spec.condenser.n or any(v < 0 for v in sigma):
        raise ParameterError(f"monomial exponent {sigma} invalid")
    mu = tuple(s % pk for s, pk in zip(sigma, p))
    q = tuple(s // pk for s, pk in zip(sigma, p))
    z = np.asarray(z, dtype=complex).ravel()
    if isinstance(spec.condenser, PolyhedralCondenser):
        Fz = spec.condenser.map_values(z)
    else:
        Fz = z
    zmu = complex(np.prod(z ** np.array(mu)))
    total = 0.0 + 0.0j
    for nu in spec.retained.nu:
        if np.all(nu <= np.array(q)):
            coef = 1.0 + 0.0j
            for qk, nk, ck in zip(q, nu, c):
                coef *= math.comb(qk, int(nk)) * (ck ** (qk - int(nk)) if qk > nk else 1.0)
            total += coef * complex(np.prod(Fz**nu))
    return zmu * total


@dataclass(frozen=True)
class ErrorBound:
    """Explicit operator-norm bound ||J - J_m|| <= C * S((c m)^(1/n)) * exp(-(c m)^(1/n))."""

    constant: float
    decay_constant: float
    m: int
    value: float
    log_value: float


def _level_curve(p: int, c: complex, level: float, nodes_per_sheet: int):
    """Branch-tracked parameterisation of {|x^p - c| = level}.

    The curve is connected and covers the w-circle p times; returns the
    sample points x(t) and |dx/dt| * dt weights of a trapezoid rule that
    is spectrally accurate for smooth integrands.
    """
    N = p * nodes_per_sheet
    t = 2.0 * math.pi * p * np.arange(N) / N
    w = level * np.exp(1j * t) + c
    phase = np.unwrap(np.angle(w))
    x = np.abs(w) ** (1.0 / p) * np.exp(1j * phase / p)
    dxdt = x * (1j * level * np.exp(1j * t) / p) / w
    dt = 2.0 * math.pi * p / N
    return x, np.abs(dxdt) * dt


def _axis_hefer_sup(p: int, c: complex, a: float, b: float) -> float:
    """sup over z on {|z^p - c| = b} of (1/a) * contour integral of |g(x, z)| |dx|.

    g(x, z) = sum_{i<p} x^i z^(p-1-i).  |g| is subharmonic in z, so the
    supremum over the closed polyhedron sits on the distinguished
    boundary; both the contour and the z-samples are doubled until the
    value settles.
    """
    if p == 1:
        return 2.0 * math.pi  # g = 1, curve length 2 pi a, divided by a
    prev = None
    nodes, zsamples = 64, 64
    for _ in range(10):
        x, wts = _level_curve(p, c, a, nodes)
        zs, _ = _level_curve(p, c, b, zsamples)
        g = np.zeros((len(zs), len(x)), dtype=complex)
        for i in range(p):
            g += x[None, :] ** i * zs[:, None] ** (p - 1 - i)
        val = float(np.max(np.abs(g) @ wts)) / a
        if prev is not None and math.isclose(val, prev, rel_tol=1e-9, abs_tol=0.0):
            return val
        prev = val
        nodes *= 2
        zsamples *= 2
    raise NumericError("Hefer-constant quadrature did not converge", last=prev)


def hefer_constant(cond: Condenser) -> float:
    """Explicit constant C of the truncation bound.

    C = sup_z integral(|det G| / |F^(1,..,1)|) over the distinguished
    boundary, divided by (2 pi)^n prod(alpha_k log(1/alpha_k)).  For the
    identity map the integral is (2 pi)^n exactly and C reduces to
    prod(1 / (alpha_k log(1/alpha_k))).
    """
    alpha = cond.alpha
    log_pref = -sum(math.log(ak) + math.log(-math.log(ak)) for ak in alpha)
    if isinstance(cond, ReinhardtCondenser):
        return math.exp(log_pref)
    p, c = cond.p, cond.c_reg
    sup_integral = math.prod(
        _axis_hefer_sup(pk, ck, ak, bk)
        for pk, ck, ak, bk in zip(p, c, cond.a, cond.b)
    )
    return sup_integral / (2.0 * math.pi) ** cond.n * math.exp(log_pref)


def error_bound(spec: ApproximantSpec, m: int | None = None) -> ErrorBound:
    """Explicit bound on ||J - J_m|| for the condenser's staircase truncation."""
    m = spec.m if m is None else int(m)
    if m < 0:
        raise ParameterError(f"m={m} must be >= 0")
    geom = spec.condenser.geometry()
    n = geom.n
    c = geom.c
    C = hefer_constant(spec.condenser)
    cm = c * m
    series = sum(cm ** (k / n) / math.factorial(k) for k in range(n))
    log_value = math.log(C) + math.log(series) - cm ** (1.0 / n)
    return ErrorBound(
        constant=C,
        decay_constant=c,
        m=m,
        value=C * series * math.exp(-(cm ** (1.0 / n))),
        log_value=log_value,
    )


def measured_error(spec: ApproximantSpec, m: int | None = None) -> float:
    """Exact worst-case sup error of J_m over the Cauchy coefficient ball.

    The extremal coefficients |g_nu| = prod(a_k^-nu_k) put the monomial
    sup prod(b_k^nu_k) on K, so the error is the rearranged tail
    sum(gamma_l, l > m) with gamma the rearrangement of (b/a)^nu; it is
    dominated by error_bound for every m.
    """
    m = spec.m if m is None else int(m)
    if m < 0:
        raise ParameterError(f"m={m} must be >= 0")
    profile = tail_profile(spec.condenser.geometry(), m)
    return profile.tail(m)


def measured_error_profile(spec: ApproximantSpec, m_max: int) -> np.ndarray:
    """measured_error for every m = 0..m_max from a single enumeration."""
    profile = tail_profile(spec.condenser.geometry(), m_max)
    return np.exp(profile.log_tail)


def numerical_rank(spec: ApproximantSpec, rng: np.random.Generator,
                   probe_factor: int = 4, rel_tol: float = 1e-9) -> int:
    """Numerical rank of J_m on a probe basis of probe_factor * m0 * m monomials.

    The probe monomials are the smallest staircase box of exponents; the
    outputs are evaluated at twice as many random points of the compact
    polyhedron and the rank is counted from the singular values.
    """
    n = spec.condenser.n
    size = probe_factor * spec.rank_bound
    # smallest exponent box holding `size` monomials
    side = max(2, math.ceil(size ** (1.0 / n)))
    grids = np.meshgrid(*([np.arange(side)] * n), indexing="ij")
    sigmas = np.stack([g.ravel() for g in grids], axis=1)
    sigmas = sigmas[np.argsort(sigmas.sum(axis=1), kind="stable")][:size]

    p = _condenser_powers(spec.condenser)
    c = _condenser_shift(spec.condenser)
    npts = 2 * size
    w = np.array(spec.condenser.b) * rng.random((npts, n)) * np.exp(
        2j * math.pi * rng.random((npts, n))
    )
    # pull back to points of the compact polyhedron through one branch
    z = (w + np.array(c)) ** (1.0 / np.array(p))
    mat = np.empty((npts, size), dtype=complex)
    for jcol, sigma in enumerate(sigmas):
        mat[:, jcol] = [apply_monomial(spec, sigma, z[i]) for i in range(npts)]
    svals = np.linalg.svd(mat, compute_uv=False)
    if svals[0] == 0.0:
        return 0
    return int(np.sum(svals > rel_tol * svals[0] * max(mat.shape)))
