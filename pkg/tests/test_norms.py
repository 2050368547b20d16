import numpy as np
import pytest
from hypothesis import given, strategies as st

from kslab import semigroups as sg
from kslab.norms import (grad_l2_norm_spectral, grad_lp_norm, grid_lp_norm, l2_norm_spectral,
                         lp_norm, mass, mean, mean_zero_project, norm_report, poincare_ratio)
from kslab.spectral import SpectralField, build_domain, to_spectral

seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, 8.0, np.inf])


class TestLpNorms:
    @pytest.mark.parametrize("p", [1, 2, 3.5, np.inf])
    def test_constant(self, interval, p):
        f = to_spectral(np.ones(interval.shape), interval)
        expect = 1.0 if np.isinf(p) else np.pi ** (1 / p)
        assert lp_norm(f, p) == pytest.approx(expect, rel=1e-14)

    def test_cos_l2(self, interval):
        (x,) = interval.points()
        f = to_spectral(np.cos(3 * x), interval)
        assert lp_norm(f, 2) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-14)
        # ||(cos 3x)'||_2 = 3 sqrt(pi/2)
        assert grad_lp_norm(f, 2) == pytest.approx(3 * np.sqrt(np.pi / 2), rel=1e-13)

    def test_large_p_does_not_overflow(self, interval):
        f = to_spectral(1e200 * np.ones(interval.shape), interval)
        assert lp_norm(f, 8) == pytest.approx(1e200 * np.pi ** (1 / 8), rel=1e-12)

    @pytest.mark.parametrize("p", [0.5, 0, -1])
    def test_rejects_small_p(self, interval, p):
        with pytest.raises(ValueError):
            grid_lp_norm(np.ones(interval.shape), interval, p)

    def test_parseval_matches_quadrature(self, rect, rng):
        f = sg.random_field(rect, rng, mean_zero=False)
        assert l2_norm_spectral(f.coeffs, rect) == pytest.approx(lp_norm(f, 2), rel=1e-12)
        assert grad_l2_norm_spectral(f.coeffs, rect) == pytest.approx(grad_lp_norm(f, 2), rel=1e-12)

    def test_report(self, interval, rng):
        f = sg.random_field(interval, rng)
        assert norm_report(f, 3).value == lp_norm(f, 3)
        assert norm_report(f, 3, "gradLp").value == grad_lp_norm(f, 3)
        with pytest.raises(ValueError):
            norm_report(f, 3, "H1")

    @given(seeds, exponents, exponents)
    def test_holder_volume_inequality(self, seed, p, q):
        # ||f||_p <= |Omega|^{1/p - 1/q} ||f||_q for p <= q
        p, q = min(p, q), max(p, q)
        d = build_domain(2, [np.pi, 2.0], [16, 12])
        f = sg.random_field(d, np.random.default_rng(seed), mean_zero=False)
        factor = d.volume() ** ((1 / p) - (0 if np.isinf(q) else 1 / q))
        assert lp_norm(f, p) <= factor * lp_norm(f, q) * (1 + 1e-12)


class TestMeanMass:
    def test_mass_of_constant(self, rect):
        f = to_spectral(np.full(rect.shape, 3.0), rect)
        assert mean(f) == pytest.approx(3.0)
        assert mass(f) == pytest.approx(3.0 * 2 * np.pi)

    def test_projection(self, rect, rng):
        f = mean_zero_project(sg.random_field(rect, rng, mean_zero=False))
        assert mean(f) == 0.0


class TestPoincare:
    @given(seeds)
    def test_lower_bound(self, seed):
        d = build_domain(2, [np.pi, 2.0], [16, 12])
        f = sg.random_field(d, np.random.default_rng(seed))
        assert poincare_ratio(f) >= d.lambda1 * (1 - 1e-10)

    @given(seeds)
    def test_lower_bound_1d(self, seed):
        d = build_domain(1, [3.0], 32)
        f = sg.random_field(d, np.random.default_rng(seed), decay=0.5)
        assert poincare_ratio(f) >= d.lambda1 * (1 - 1e-10)

    def test_equality_on_first_mode(self, interval):
        c = np.zeros(interval.shape)
        c[1] = 1.0
        assert poincare_ratio(SpectralField(interval, c)) == pytest.approx(1.0, rel=1e-13)

    def test_zero_field(self, interval):
        with pytest.raises(ValueError):
            poincare_ratio(SpectralField.zeros(interval))

    def test_nonzero_mean(self, interval):
        c = np.zeros(interval.shape)
        c[0], c[1] = 1.0, 1.0
        with pytest.raises(ValueError):
            poincare_ratio(SpectralField(interval, c))
