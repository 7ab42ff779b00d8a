import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from widthlab.errors import GeometryError, ParameterError, ResourceError
from widthlab.multiindex import (
    CountingQuery,
    GeometryVector,
    count_lattice,
    count_lattice_bounds,
    rearrange,
    tail_bounds,
    tail_profile,
)


class TestCountLattice:
    def test_hand_enumeration(self):
        # {(0,0),(1,0),(0,1),(2,0),(1,1),(0,2)}
        assert count_lattice(CountingQuery((1.0, 1.0), 2.0)) == 6

    def test_volume_bracket_example(self):
        lo, hi = count_lattice_bounds(CountingQuery((1.0, 1.0), 2.0))
        assert lo == pytest.approx(2.0)
        assert hi == pytest.approx(8.0)
        assert lo <= 6 <= hi

    def test_one_dimensional(self):
        q = CountingQuery((math.log(2),), 5 * math.log(2))
        assert count_lattice(q) == 6

    def test_invalid_geometry(self):
        with pytest.raises(GeometryError):
            CountingQuery((), 1.0)
        with pytest.raises(GeometryError):
            CountingQuery((1.0, -0.5), 1.0)
        with pytest.raises(ParameterError):
            CountingQuery((1.0,), -1.0)

    @given(
        st.integers(1, 4),
        st.floats(0.1, 3.0),
        st.floats(0.0, 30.0),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_volume_bounds_bracket(self, n, scale, r, rnd):
        beta = tuple(scale * (0.5 + rnd.random()) for _ in range(n))
        q = CountingQuery(beta, r)
        lo, hi = count_lattice_bounds(q)
        assert lo - 1e-9 <= count_lattice(q) <= hi + 1e-9


class TestRearrange:
    def test_half_third(self):
        seq = rearrange(GeometryVector((0.5, 1 / 3)), 5)
        np.testing.assert_allclose(seq.gamma, [1, 0.5, 1 / 3, 0.25, 1 / 6], rtol=1e-14)

    def test_ties_lexicographic(self):
        seq = rearrange(GeometryVector((0.5, 0.5)), 6)
        np.testing.assert_allclose(seq.gamma, [1, 0.5, 0.5, 0.25, 0.25, 0.25], rtol=1e-14)
        # ties ordered lexicographically on nu
        assert seq.nu.tolist() == [[0, 0], [0, 1], [1, 0], [0, 2], [1, 1], [2, 0]]

    def test_one_dimensional_is_identity_enumeration(self):
        seq = rearrange(GeometryVector((0.5,)), 4)
        np.testing.assert_allclose(seq.gamma, [1, 0.5, 0.25, 0.125], rtol=1e-14)
        assert seq.nu.ravel().tolist() == [0, 1, 2, 3]

    def test_staircase_property(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            geom = GeometryVector(tuple(rng.uniform(0.2, 0.9, n)))
            seq = rearrange(geom, 40)
            listed = {tuple(v) for v in seq.nu.tolist()}
            for nu in seq.nu:
                below = [
                    tuple(mu)
                    for mu in np.indices([v + 1 for v in nu]).reshape(len(nu), -1).T
                ]
                assert all(mu in listed for mu in below)

    def test_count_at_log_gamma_dominates_rank(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            geom = GeometryVector(tuple(rng.uniform(0.2, 0.9, n)))
            seq = rearrange(geom, 60)
            for m in (1, 7, 33, 60):
                r = -float(seq.log_gamma[m - 1]) * (1 + 1e-12)
                assert count_lattice(CountingQuery(geom.beta, r)) >= m

    def test_resource_cap(self):
        with pytest.raises(ResourceError):
            rearrange(GeometryVector((0.5,)), 10_000_000)
        with pytest.raises(ParameterError):
            rearrange(GeometryVector((0.5,)), 0)


class TestTailBounds:
    def test_gamma_bound_half(self):
        tb = tail_bounds(GeometryVector((0.5,)), 3)
        assert tb.gamma_bound == pytest.approx(0.25, rel=1e-14)
        # gamma_4 = 1/8 <= bound
        assert 0.125 <= tb.gamma_bound

    def test_tail_exact_geometric(self):
        tb = tail_bounds(GeometryVector((0.5,)), 4)
        assert tb.tail_sum_exact == pytest.approx(0.125, rel=1e-12)

    def test_gamma_bound_two_dim(self):
        tb = tail_bounds(GeometryVector((0.5, 0.5)), 1)
        expected = 4.0 * math.exp(-math.sqrt(2.0 * math.log(2.0) ** 2))
        assert tb.gamma_bound == pytest.approx(expected, rel=1e-12)
        assert tb.gamma_bound >= 0.5  # gamma_2

    def test_m_zero_has_tail_but_no_gamma_bound(self):
        tb = tail_bounds(GeometryVector((0.5, 0.5)), 0)
        assert tb.gamma_bound is None
        assert tb.tail_sum_exact == pytest.approx(4.0 - 1.0, rel=1e-12)

    def test_bounds_dominate_sequence(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(1, 4))
            geom = GeometryVector(tuple(rng.uniform(0.1, 0.9, n)))
            M = 300
            seq = rearrange(geom, M)
            profile = tail_profile(geom, M)
            m = np.arange(1, M + 1, dtype=float)
            log_gb = sum(geom.beta) - (geom.c * m) ** (1.0 / n)
            assert np.all(seq.log_gamma <= log_gb + 1e-9)
            cm = geom.c * m
            series = sum(cm ** (k / n) / math.factorial(k) for k in range(n))
            log_tb = sum(b - math.log(b) for b in geom.beta) + np.log(series) - cm ** (
                1.0 / n
            )
            assert np.all(profile.log_tail[1:] <= log_tb + 1e-9)

    def test_profile_matches_complement_of_partial_sums(self):
        geom = GeometryVector((0.5, 0.5))
        profile = tail_profile(geom, 6)
        # full sum is prod(1/(1-alpha)) = 4
        partial = np.concatenate([[0.0], np.cumsum(rearrange(geom, 6).gamma)])
        np.testing.assert_allclose(
            np.exp(profile.log_tail), 4.0 - partial, rtol=1e-12
        )

    def test_deep_tail_stays_finite_in_log_space(self):
        profile = tail_profile(GeometryVector((0.5,)), 10_000)
        assert np.all(np.isfinite(profile.log_tail))
        assert profile.log_tail[-1] < -6900  # far past linear underflow


class TestGeometryVector:
    def test_validation(self):
        with pytest.raises(GeometryError):
            GeometryVector(())
        with pytest.raises(GeometryError):
            GeometryVector((0.5,) * 9)
        with pytest.raises(GeometryError):
            GeometryVector((1.0,))
        with pytest.raises(GeometryError):
            GeometryVector((0.0,))

    def test_decay_constant_positive(self):
        geom = GeometryVector((0.5, 0.25, 0.75))
        assert geom.c > 0
        assert geom.c == pytest.approx(
            6 * math.log(2) * math.log(4) * math.log(4 / 3), rel=1e-12
        )
