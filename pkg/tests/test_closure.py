"""Electron closure and two-fluid model: nondimensionalization, Newton
solver, linear response, guards, dispersion."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import acoustic_omega, linear_response_factor
from qkdv.errors import ConfigurationError, GuardTripError, VacuumError
from qkdv.grid import Field, make_grid
from qkdv.qep import (
    EPState,
    LAB,
    PhysicalParams,
    dispersion_oracle,
    electron_closure,
    ep_rhs,
    nondimensionalize,
    scaled_frame,
    solve_ep,
)

G = make_grid(2.0 * math.pi, 64)


class TestNondimensionalization:
    def test_hydrogen_like_plasma_H_order_one(self):
        # a dense, cold plasma where quantum effects matter
        p = PhysicalParams(n0=1e32, TFe=1e5)
        H, scales = nondimensionalize(p)
        assert H > 0
        assert scales.omega_pe > scales.omega_pi > 0
        assert scales.v_Fe > scales.c_s > 0

    def test_H_scales_with_density(self):
        # H ~ hbar * omega_pe / k_B T_Fe grows with sqrt(n0)
        H1, _ = nondimensionalize(PhysicalParams(n0=1e30, TFe=1e5))
        H2, _ = nondimensionalize(PhysicalParams(n0=4e30, TFe=1e5))
        assert H2 == pytest.approx(2.0 * H1, rel=1e-12)

    def test_invalid_params_rejected(self):
        with pytest.raises(ConfigurationError):
            PhysicalParams(n0=-1.0, TFe=1e5)
        with pytest.raises(ConfigurationError):
            PhysicalParams(n0=1e30, TFe=0.0)


class TestFrames:
    def test_lab_frame_factors(self):
        assert LAB.tag == "lab"
        assert LAB.bohm_factor == 1.0
        assert LAB.poisson_factor == 1.0

    def test_scaled_frame_factors(self):
        fr = scaled_frame(0.1)
        assert fr.tag == "scaled"
        assert fr.bohm_factor == pytest.approx(0.1)
        assert fr.poisson_factor == pytest.approx(0.1)

    def test_scaled_frame_requires_valid_eps(self):
        with pytest.raises(ConfigurationError):
            scaled_frame(0.0)
        with pytest.raises(ConfigurationError):
            scaled_frame(1.5)


class TestClosureEquilibrium:
    @pytest.mark.parametrize("H", [0.0, 1.0, 2.0])
    def test_equilibrium_maps_to_equilibrium(self, H):
        res = electron_closure(Field.constant(G, 1.0), H, LAB)
        assert np.max(np.abs(res.n_e.samples - 1.0)) == 0.0
        assert np.max(np.abs(res.phi.samples)) < 1e-15
        assert res.newton_iters == 0


class TestClosureLinearResponse:
    @pytest.mark.parametrize("H", [0.0, 1.0, 2.0])
    @pytest.mark.parametrize("k_mode", [1, 2])
    def test_small_amplitude_response(self, H, k_mode):
        # [DERIVED oracle: Fourier linearization of the elliptic system]
        a = 1e-6
        n_i = Field(G, 1.0 + a * np.cos(k_mode * G.x))
        res = electron_closure(n_i, H, LAB)
        response = 2.0 * np.real(res.n_e.coeffs[k_mode]) / G.N / a
        expected = linear_response_factor(float(k_mode), H)
        assert response == pytest.approx(expected, rel=1e-8)

    def test_newton_iteration_budget(self):
        # a large perturbation still converges in a few damped steps
        n_i = Field(G, 1.0 + 0.3 * np.cos(G.x))
        for H in (0.0, 1.0, 2.0):
            res = electron_closure(n_i, H, LAB)
            assert res.newton_iters <= 6
            assert res.residual < 1e-10

    @given(a=st.floats(min_value=1e-8, max_value=0.2),
           H=st.floats(min_value=0.0, max_value=3.0))
    @settings(max_examples=15, deadline=None)
    def test_converges_across_amplitudes(self, a, H):
        n_i = Field(G, 1.0 + a * np.cos(2 * G.x))
        res = electron_closure(n_i, H, LAB)
        assert res.residual < 1e-10
        assert np.all(res.n_e.samples > 0.0)

    def test_smallness_comes_out_neutral(self):
        # epsilon-scaled elliptic coupling: response approaches quasi-neutral
        n_i = Field(G, 1.0 + 1e-6 * np.cos(G.x))
        res = electron_closure(n_i, 1.0, scaled_frame(0.01))
        gap = np.max(np.abs(res.n_e.samples - n_i.samples))
        assert gap < 0.05 * 1e-6  # within 5% of the perturbation size


class TestClosureConsistency:
    def test_poisson_equation_satisfied(self):
        # residual check of the assembled solution in the original variables
        from qkdv.grid import spectral_derivative
        n_i = Field(G, 1.0 + 0.2 * np.cos(G.x) + 0.05 * np.sin(2 * G.x))
        H = 1.5
        res = electron_closure(n_i, H, LAB)
        lhs = spectral_derivative(res.phi, 2).samples
        rhs = res.n_e.samples - n_i.samples
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_potential_formula_satisfied(self):
        from qkdv.grid import spectral_derivative
        n_i = Field(G, 1.0 + 0.2 * np.cos(G.x))
        H = 1.5
        res = electron_closure(n_i, H, LAB)
        sq = Field(G, np.sqrt(res.n_e.samples))
        phi_direct = (-0.5 + 0.5 * res.n_e.samples ** 2
                      - (H ** 2 / 2.0) * spectral_derivative(sq, 2).samples
                      / sq.samples)
        assert np.max(np.abs(res.phi.samples - phi_direct)) < 1e-9


class TestEPState:
    def test_vacuum_rejected(self):
        with pytest.raises(VacuumError):
            EPState(0.0, Field(G, -0.1 + np.zeros(G.N)), Field.zeros(G))


class TestSolveEP:
    def test_equilibrium_is_a_fixed_point(self):
        state0 = EPState(0.0, Field.constant(G, 1.0), Field.zeros(G))
        traj = solve_ep(state0, 1.0, LAB, 1.0, n_samples=5)
        final = traj.states[-1]
        assert np.max(np.abs(final.n_i.samples - 1.0)) < 1e-13
        assert np.max(np.abs(final.u_i.samples)) < 1e-13

    def test_mass_and_momentum_means_conserved(self):
        n0 = Field(G, 1.0 + 0.1 * np.cos(G.x))
        state0 = EPState(0.0, n0, Field(G, 0.05 * np.sin(G.x)))
        traj = solve_ep(state0, 1.0, LAB, 2.0, n_samples=4)
        for s in traj.states:
            assert s.n_i.mean() == pytest.approx(n0.mean(), abs=1e-13)
            assert s.u_i.mean() == pytest.approx(0.05 * 0.0, abs=1e-13)

    def test_sample_times_exact(self):
        state0 = EPState(0.0, Field.constant(G, 1.0), Field.zeros(G))
        traj = solve_ep(state0, 0.0, LAB, 1.0, n_samples=4)
        assert traj.times == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_density_guard_trips_on_blowup(self):
        # far beyond the validity window: the guard must fail loudly
        n0 = Field(G, 1.0 + 0.9 * np.cos(G.x))
        state0 = EPState(0.0, n0, Field(G, 2.5 * np.cos(G.x)))
        with pytest.raises((GuardTripError, VacuumError)):
            solve_ep(state0, 0.0, LAB, 5.0, n_samples=5)

    def test_time_reversibility(self):
        # the model is time-reversible: (n, u) -> (n, -u) retraces the path
        n0 = Field(G, 1.0 + 0.1 * np.cos(G.x))
        state0 = EPState(0.0, n0, Field.zeros(G))
        fwd = solve_ep(state0, 1.0, LAB, 1.0, n_samples=2)
        last = fwd.states[-1]
        back = solve_ep(EPState(0.0, last.n_i, -1.0 * last.u_i), 1.0, LAB, 1.0,
                        n_samples=2)
        assert np.max(np.abs(back.states[-1].n_i.samples - n0.samples)) < 1e-8
        assert np.max(np.abs(back.states[-1].u_i.samples)) < 1e-8


class TestDispersion:
    def test_oracle_values(self):
        # omega(k)^2 = q/(1+q), q = k^2 (1 + H^2 k^2 / 4)
        assert dispersion_oracle(1.0, 0.0) == pytest.approx(1.0 / math.sqrt(2.0))
        assert dispersion_oracle(1.0, 2.0) == pytest.approx(math.sqrt(2.0 / 3.0))
        assert dispersion_oracle(1.0, 0.0) == pytest.approx(acoustic_omega(1.0, 0.0))

    def test_long_wave_speed_is_unity(self):
        # omega/k -> 1 as k -> 0 regardless of H: the acoustic speed
        for H in (0.0, 1.0, 2.0):
            assert dispersion_oracle(1e-4, H) / 1e-4 == pytest.approx(1.0, abs=1e-7)


class TestRHS:
    def test_rhs_shape_and_mean(self):
        n0 = Field(G, 1.0 + 0.1 * np.cos(G.x))
        state = EPState(0.0, n0, Field(G, 0.02 * np.sin(G.x)))
        clo = electron_closure(state.n_i, 1.0, LAB)
        dn, du = ep_rhs(state, clo, LAB)
        # both right-hand sides are perfect x-derivatives: exactly zero mean
        assert abs(dn.mean()) < 1e-14
        assert abs(du.mean()) < 1e-14
