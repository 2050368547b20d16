import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kslab import semigroups as sg
from kslab.solver import (SimState, SolverConfig, make_state, nonlinear_term, simulate,
                          step_gamma0, step_gamma1)
from kslab.spectral import SpectralField, build_domain, inverse_helmholtz, to_spectral


def _mode_field(domain, *entries):
    c = np.zeros(domain.shape)
    for amp, idx in entries:
        c[idx] = amp
    return SpectralField(domain, c)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(scheme="rk4"), dict(dealias="3/2"), dict(dt0=1e-12),
                                    dict(t_end=0.0), dict(output_dt=0.015),
                                    dict(blowup_linf_threshold=-1.0), dict(cfl_safety=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_make_state_checks(self, interval):
        u = SpectralField.zeros(interval)
        with pytest.raises(ValueError):
            make_state(u, 1.0, 2)
        with pytest.raises(ValueError):
            make_state(u, -1.0, 0)
        with pytest.raises(ValueError):
            make_state(u, 1.0, 1)

    def test_gamma0_slaves_v(self, interval, rng):
        u = sg.random_field(interval, rng)
        st0 = make_state(u, 1.0, 0)
        assert np.array_equal(st0.v.coeffs, inverse_helmholtz(u).coeffs)


class TestNonlinearTerm:
    def test_analytic_1d(self, interval):
        # -(cos x (cos x)')' = (sin x cos x)' = cos 2x
        (x,) = interval.points()
        u = to_spectral(np.cos(x), interval)
        n = nonlinear_term(u, u)
        expect = np.zeros(interval.shape)
        expect[2] = 1.0
        # round-off is amplified by the wavenumber in the derivative
        assert np.allclose(n.coeffs, expect, atol=1e-12)

    def test_zero_mean(self, rect, rng):
        n = nonlinear_term(sg.random_field(rect, rng, mean_zero=False), sg.random_field(rect, rng))
        assert n.coeffs.flat[0] == 0.0

    def test_constant_signal_gives_zero(self, rect, rng):
        v = SpectralField(rect, np.zeros(rect.shape))
        assert np.all(nonlinear_term(sg.random_field(rect, rng), v).coeffs == 0.0)

    def test_dealias_truncates(self, interval, rng):
        n = nonlinear_term(sg.random_field(interval, rng), sg.random_field(interval, rng))
        assert np.all(n.coeffs[~interval.dealias_mask()] == 0.0)

    def test_bad_dealias(self, interval):
        u = SpectralField.zeros(interval)
        with pytest.raises(ValueError):
            nonlinear_term(u, u, "none-ish")


class TestLinearConsistency:
    @pytest.mark.parametrize("scheme", ["imex_cnab2", "imex_euler"])
    def test_gamma0_exact(self, interval, rng, scheme):
        u0 = sg.random_field(interval, rng)
        cfg = SolverConfig(dt0=0.05, t_end=3.0, output_dt=0.5, nonlinear=False, scheme=scheme)
        run = simulate(make_state(u0, 1.3, 0), cfg)
        exact = sg.semigroup_gamma0_apply(u0, 3.0, 1.3)
        assert np.allclose(run.final_state.u.coeffs, exact.coeffs, atol=1e-12)

    def test_gamma1_exact(self, rect, rng):
        u0, v0 = sg.random_field(rect, rng), sg.random_field(rect, rng)
        cfg = SolverConfig(dt0=0.05, t_end=2.0, output_dt=0.5, nonlinear=False)
        run = simulate(make_state(u0, 0.8, 1, v0), cfg)
        exact = sg.semigroup_gamma1_apply(sg.LinearState(u0, v0), 2.0, 0.8)
        assert np.allclose(run.final_state.u.coeffs, exact.u.coeffs, atol=1e-12)
        assert np.allclose(run.final_state.v.coeffs, exact.v.coeffs, atol=1e-12)


class TestInvariants:
    @settings(max_examples=10)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0), st.sampled_from([0, 1]))
    def test_mass_conserved(self, seed, M, gamma):
        d = build_domain(2, [np.pi, 2.0], [16, 12])
        rng = np.random.default_rng(seed)
        u0 = SpectralField(d, 0.3 * sg.random_coeffs(d, rng))
        st0 = make_state(u0, M, gamma, inverse_helmholtz(u0) if gamma else None, dt=0.01)
        run = simulate(st0, SolverConfig(dt0=0.01, t_end=0.5, output_dt=0.1))
        assert run.mass_drift_rate <= 1e-12

    def test_equilibrium_stays(self, rect):
        for gamma in (0, 1):
            z = SpectralField.zeros(rect)
            st0 = make_state(z, 1.5, gamma, z if gamma else None)
            run = simulate(st0, SolverConfig(dt0=0.05, t_end=1.0, output_dt=0.5))
            assert np.all(run.final_state.u.coeffs == 0.0)

    def test_diagonal_symmetry(self):
        d = build_domain(2, [np.pi, np.pi], 32)
        c = np.zeros(d.shape)
        c[1, 0] = c[0, 1] = 0.2
        c[2, 1] = c[1, 2] = 0.05
        u0 = SpectralField(d, c)
        run = simulate(make_state(u0, 1.0, 1, inverse_helmholtz(u0)),
                       SolverConfig(dt0=0.01, t_end=1.0, output_dt=0.5))
        uc = run.final_state.u.coeffs
        assert np.allclose(uc, uc.T, atol=1e-14)

    def test_steps_advance_time(self, interval, rng):
        st0 = make_state(sg.random_field(interval, rng), 1.0, 0)
        st1 = step_gamma0(st0, 0.1)
        assert st1.t == pytest.approx(0.1) and st1.prev_dt == 0.1
        with pytest.raises(ValueError):
            step_gamma1(st0, 0.1)


class TestOrder:
    def _final(self, scheme, dt):
        d = build_domain(1, [np.pi], 32)
        u0 = _mode_field(d, (0.5, 1), (0.3, 2))
        cfg = SolverConfig(dt0=dt, t_end=1.0, output_dt=0.1, scheme=scheme, cfl_safety=1e9)
        return simulate(make_state(u0, 1.0, 0), cfg).final_state.u.coeffs

    @pytest.mark.parametrize("scheme,order", [("imex_euler", 1), ("imex_cnab2", 2)])
    def test_self_convergence(self, scheme, order):
        a, b, c = (self._final(scheme, dt) for dt in (0.02, 0.01, 0.005))
        ratio = np.max(np.abs(a - b)) / np.max(np.abs(b - c))
        assert ratio == pytest.approx(2**order, rel=0.15)


class TestStopping:
    def test_linf_threshold(self, interval):
        u0 = _mode_field(interval, (0.5, 1))
        run = simulate(make_state(u0, 1.0, 0), SolverConfig(blowup_linf_threshold=1.2, t_end=1.0))
        assert run.status == "linf_exceeded"
        assert run.outcomes[-1].status == "linf_exceeded"
        assert run.final_state.t < 1.0

    def test_dt_collapse(self, interval):
        u0 = _mode_field(interval, (0.5, 1))
        cfg = SolverConfig(cfl_safety=1e-9, dt_min=1e-4, t_end=1.0)
        run = simulate(make_state(u0, 1.0, 0), cfg)
        assert run.status == "dt_collapsed"
        assert run.final_state.t == 0.0

    def test_output_times(self, interval, rng):
        st0 = make_state(SpectralField(interval, 1e-3 * sg.random_coeffs(interval, rng)), 1.0, 0)
        run = simulate(st0, SolverConfig(dt0=0.01, t_end=1.0, output_dt=0.25))
        assert np.allclose(run.times, [0, 0.25, 0.5, 0.75, 1.0])
        assert run.status == "ok" and run.steps == 100
        assert set(run.norms) == {"u_L1", "u_L2", "u_Linf", "grad_v_L1", "grad_v_Linf"}

    def test_observer(self, interval, rng):
        seen = []
        st0 = make_state(SpectralField(interval, 1e-3 * sg.random_coeffs(interval, rng)), 1.0, 0)
        simulate(st0, SolverConfig(dt0=0.01, t_end=0.5, output_dt=0.25), observer=seen.append)
        assert [s.t for s in seen] == pytest.approx([0, 0.25, 0.5])
        assert all(isinstance(s, SimState) for s in seen)
