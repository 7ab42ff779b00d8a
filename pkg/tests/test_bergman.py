import math

import numpy as np
import pytest
from scipy.special import roots_legendre

from widthlab.bergman import (
    MonomialNormTable,
    RadialWeight,
    kernel_diagonal,
    ma_density,
    monomial_norm,
)
from widthlab.errors import (
    GeometryError,
    NumericError,
    OutOfDomainError,
    TruncationError,
)

UNIT_DISC = RadialWeight((1.0,), (1.0,))


class TestMonomialNorm:
    def test_unweighted_area(self):
        assert monomial_norm(UNIT_DISC, 0.0, (0,)) == pytest.approx(math.pi, rel=1e-13)

    def test_unweighted_degree_one(self):
        assert monomial_norm(UNIT_DISC, 0.0, (1,)) == pytest.approx(
            math.pi / 2, rel=1e-13
        )

    def test_weighted_constant(self):
        expected = (math.pi / 2) * (1 - math.exp(-2.0))
        assert monomial_norm(UNIT_DISC, 1.0, (0,)) == pytest.approx(expected, rel=1e-13)

    def test_product_over_axes(self):
        w = RadialWeight((1.0, 2.0), (1.0, 0.8))
        val = monomial_norm(w, 0.5, (2, 1))
        per_axis = monomial_norm(RadialWeight((1.0,), (1.0,)), 0.5, (2,)) * monomial_norm(
            RadialWeight((2.0,), (0.8,)), 0.5, (1,)
        )
        assert val == pytest.approx(per_axis, rel=1e-12)

    def test_strictly_decreasing_in_k_and_tau(self):
        ks = [0.0, 0.5, 1.0, 2.0, 4.0]
        vals = [monomial_norm(UNIT_DISC, k, (2,)) for k in ks]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        taus = [0.5, 1.0, 2.0, 4.0]
        vals = [monomial_norm(RadialWeight((t,), (1.0,)), 1.0, (2,)) for t in taus]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_cross_validation_catches_disagreement(self, monkeypatch):
        import widthlab.bergman as bg

        monkeypatch.setattr(bg, "_quad_radial_moment", lambda *a: 1.2345)
        with pytest.raises(NumericError):
            monomial_norm(UNIT_DISC, 0.0, (0,))

    def test_norm_table(self):
        table = MonomialNormTable(UNIT_DISC, 1.0, 8)
        assert table.norm((0,)) == pytest.approx(
            monomial_norm(UNIT_DISC, 1.0, (0,)), rel=1e-13
        )
        assert table.norm((5,)) == pytest.approx(
            monomial_norm(UNIT_DISC, 1.0, (5,)), rel=1e-13
        )

    def test_weight_validation(self):
        with pytest.raises(GeometryError):
            RadialWeight((0.0,), (1.0,))
        with pytest.raises(GeometryError):
            RadialWeight((1.0,), (1.0, 1.0))


class TestKernelDiagonal:
    def test_unweighted_at_origin(self):
        kd = kernel_diagonal(UNIT_DISC, 0.0, (0.0,))
        assert kd.value == pytest.approx(1 / math.pi, rel=1e-12)

    def test_unweighted_against_classical_kernel(self):
        kd = kernel_diagonal(UNIT_DISC, 0.0, (0.5,))
        assert kd.value == pytest.approx(1 / (math.pi * (1 - 0.25) ** 2), rel=1e-10)

    def test_bidisc_at_origin(self):
        w = RadialWeight((1.0, 1.0), (1.0, 1.0))
        kd = kernel_diagonal(w, 0.0, (0.0, 0.0))
        assert kd.value == pytest.approx(1 / math.pi**2, rel=1e-12)

    def test_dominates_constant_term(self):
        for k in (0.0, 1.0, 10.0):
            kd = kernel_diagonal(UNIT_DISC, k, (0.37,))
            assert kd.value >= 1.0 / monomial_norm(UNIT_DISC, k, (0,), validate=False)

    def test_truncation_error_carries_bound(self):
        with pytest.raises(TruncationError) as err:
            kernel_diagonal(UNIT_DISC, 0.0, (0.9,), J_max=3)
        assert err.value.achieved_bound > 1e-10

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomainError):
            kernel_diagonal(UNIT_DISC, 0.0, (1.0,))

    def test_semiclassical_ratio_near_interior_points(self):
        k = 200.0
        for z in (0.0, 0.3, 0.55, 0.7):
            kd = kernel_diagonal(UNIT_DISC, k, (z,))
            log_ratio = (
                kd.log_value
                - 2 * k * UNIT_DISC.phi((z,))
                - math.log(k)
                - math.log(ma_density(UNIT_DISC, (z,)))
            )
            assert 0.98 <= math.exp(log_ratio) <= 1.02


class TestMaDensity:
    def test_values(self):
        assert ma_density(UNIT_DISC, (0.0,)) == pytest.approx(2 / math.pi, rel=1e-14)
        w2 = RadialWeight((1.0, 1.0), (1.0, 1.0))
        assert ma_density(w2, (0, 0)) == pytest.approx(4 / math.pi**2, rel=1e-14)
        w3 = RadialWeight((3.0,), (1.0,))
        assert ma_density(w3, (0.0,)) == pytest.approx(6 / math.pi, rel=1e-14)

    def test_domain_check(self):
        with pytest.raises(OutOfDomainError):
            ma_density(UNIT_DISC, (1.2,))


def _polar_inner_product(f, g_nu, w: RadialWeight, k: float, deg: int):
    """<f, z^nu>_{k phi} by tensor polar quadrature (exact angular trapezoid)."""
    n = w.n
    n_ang = 2 * deg + 5
    theta = 2 * math.pi * np.arange(n_ang) / n_ang
    x, wts = roots_legendre(48)
    total = 0.0 + 0.0j
    # tensor over axes: build the full grid iteratively
    grids = [(0.5 * (xx + 1) * w.R[ax], 0.5 * w.R[ax] * ww) for ax in range(n)
             for xx, ww in [(x, wts)]]
    if n == 1:
        r, wr = grids[0]
        for i, rv in enumerate(r):
            zs = rv * np.exp(1j * theta)
            vals = f(zs[None, :]) * np.conj(zs**g_nu[0])[None, :]
            ang = vals.mean(axis=1) * 2 * math.pi
            total += wr[i] * rv * math.exp(-2 * k * w.tau[0] * rv**2) * ang[0]
        return complex(total)
    raise NotImplementedError


class TestReproducingIdentity:
    def test_polynomial_reconstruction(self):
        rng = np.random.default_rng(5)
        k = 1.3
        coeffs = rng.normal(size=6) + 1j * rng.normal(size=6)

        def f(z):
            return sum(c * z**j for j, c in enumerate(coeffs))

        table = MonomialNormTable(UNIT_DISC, k, 5, validate=False)
        recovered = []
        for nu in range(6):
            ip = _polar_inner_product(f, (nu,), UNIT_DISC, k, deg=5)
            recovered.append(ip / table.norm((nu,)))
        for z in (0.2 + 0.1j, -0.4j, 0.55):
            rebuilt = sum(c * z**j for j, c in enumerate(recovered))
            assert abs(rebuilt - f(np.array([[z]]))[0, 0]) <= 1e-12 * max(
                1.0, abs(f(np.array([[z]]))[0, 0])
            )


class TestOffDiagonalMass:
    def test_product_bump_limit(self):
        # k^-1 * double integral of h(z) h(zeta) |B(z,zeta)|^2 dm dm
        # -> (2 pi)^-1 * integral of h^2 dd^c phi = 4 tau int h(r)^2 r dr
        k, tau = 200.0, 1.0
        r0 = 0.6

        def h(r):
            out = np.zeros_like(r)
            inside = r < r0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - (r[inside] / r0) ** 2))
            return out

        J = 220
        log_N = np.array(
            [math.log(monomial_norm(UNIT_DISC, k, (j,), validate=False)) for j in range(J)]
        )
        x, wts = roots_legendre(220)
        r = 0.5 * (x + 1) * r0
        wr = 0.5 * r0 * wts
        # radial moments of h against each normalized monomial
        log_r = np.log(r)
        proj = []
        for j in range(J):
            integrand = h(r) * np.exp(
                2 * j * log_r - log_N[j] / 1.0 - 2 * k * tau * r**2
            )
            proj.append(2 * math.pi * float(np.dot(wr, integrand * r)))
        # by radial symmetry the double integral collapses to sum of squares
        # of the diagonal projections, with one 1/N factor already inside
        lhs = sum(p * p * math.exp(lg) for p, lg in zip(proj, log_N)) / k
        # wait: proj_j already divided by N_j once; need integral pair / N_j
        rhs = 4.0 * tau * float(np.dot(wr, h(r) ** 2 * r))
        assert lhs == pytest.approx(rhs, rel=0.05)
