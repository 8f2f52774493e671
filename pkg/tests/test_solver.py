"""Finite-volume solver: fluxes, stepping, energy ledger, convergence."""

import numpy as np
import pytest

from shlab.errors import InvalidValueError, PositivityError
from shlab.fields import ScalarField, TorusGrid, VectorField
from shlab.friction import FrictionParams
from shlab.solver import (
    EnergyLedger,
    Scenario,
    State,
    cfl_dt,
    max_wave_speed,
    physical_flux,
    rusanov_flux,
    simulate,
    step,
)


def uniform_scenario(grid, h=1.0, u=(0.0, 0.0), gamma=0.0, a=0.5, T=1.0, **kw):
    return Scenario(
        grid=grid,
        T=T,
        a=a,
        friction=FrictionParams(gamma=gamma),
        h0=ScalarField.constant(grid, h),
        u0=VectorField.constant(grid, *u),
        **kw,
    )


def smooth_scenario(grid, T=0.2, **kw):
    return Scenario(
        grid=grid,
        T=T,
        a=0.5,
        friction=FrictionParams(),
        h0=ScalarField.from_function(grid, lambda x1, x2: 1.0 + 0.2 * np.sin(2 * np.pi * x1)),
        u0=VectorField.from_functions(
            grid, lambda x1, x2: 0.1 * np.cos(2 * np.pi * x2), lambda x1, x2: 0.0 * x1
        ),
        **kw,
    )


class TestStateAndScenario:
    def test_state_requires_positive_height(self, grid32):
        with pytest.raises(PositivityError):
            State(ScalarField.constant(grid32, -1.0), VectorField.constant(grid32, 0, 0))

    def test_scenario_validation(self, grid32):
        with pytest.raises(InvalidValueError):
            uniform_scenario(grid32, a=-1.0)
        with pytest.raises(InvalidValueError):
            uniform_scenario(grid32, cfl=1.5)
        with pytest.raises(PositivityError):
            uniform_scenario(grid32, h=0.0)

    def test_initial_state_momentum(self, grid32):
        scn = uniform_scenario(grid32, h=2.0, u=(1.5, 0.0))
        np.testing.assert_allclose(scn.initial_state().q.values[0], 3.0)


class TestWaveSpeedAndCfl:
    def test_still_state(self, grid32):
        st = uniform_scenario(grid32).initial_state()
        assert max_wave_speed(st, 0.5) == pytest.approx(1.0)

    def test_moving_state(self, grid32):
        st = uniform_scenario(grid32, u=(2.0, 0.0)).initial_state()
        assert max_wave_speed(st, 0.5) == pytest.approx(3.0)

    def test_vacuum_limit(self, grid32):
        st = State(
            ScalarField.constant(grid32, 1e-14), VectorField.constant(grid32, 0.0, 0.0)
        )
        assert max_wave_speed(st, 0.5) < 1e-6

    def test_cfl_values(self, grid32):
        st = uniform_scenario(grid32, u=(1.0, 0.0)).initial_state()  # speed 2
        assert cfl_dt(st, 0.5, 0.4, 0.01, dt_max=10.0) == pytest.approx(0.002)
        still = uniform_scenario(grid32).initial_state()  # speed 1
        assert cfl_dt(still, 0.5, 0.5, 0.02, dt_max=10.0) == pytest.approx(0.01)

    def test_zero_speed_returns_cap(self, grid32):
        st = State(
            ScalarField.constant(grid32, 1e-30), VectorField.constant(grid32, 0.0, 0.0)
        )
        # speed ~ 1e-15; the dt cap takes over
        assert cfl_dt(st, 0.5, 0.4, 0.01, dt_max=0.25) == pytest.approx(0.25)


class TestRusanovFlux:
    def test_identical_cells_give_exact_flux(self):
        cell = (1.3, 0.4, -0.2)
        flux = rusanov_flux(cell, cell, a=0.5, axis=0)
        np.testing.assert_allclose(flux, physical_flux(*cell, 0.5, 0))

    def test_pure_pressure(self):
        cell = (1.0, 0.0, 0.0)
        flux = rusanov_flux(cell, cell, a=0.5, axis=0)
        np.testing.assert_allclose(flux, (0.0, 0.5, 0.0))

    def test_dam_break_against_scalar_oracle(self):
        # independent plain-float implementation of the same formula
        a = 0.5
        hl, hr = 2.0, 1.0
        left = (hl, 0.0, 0.0)
        right = (hr, 0.0, 0.0)
        s = max(np.sqrt(2 * a * hl), np.sqrt(2 * a * hr))
        expect_mass = 0.5 * (0.0 + 0.0) - 0.5 * s * (hr - hl)
        expect_mom = 0.5 * (a * hl**2 + a * hr**2)
        flux = rusanov_flux(left, right, a, axis=0)
        assert flux[0] == pytest.approx(expect_mass, rel=1e-14)
        assert flux[1] == pytest.approx(expect_mom, rel=1e-14)
        assert flux[2] == pytest.approx(0.0, abs=1e-15)

    def test_vectorized_matches_scalar(self, rng):
        h = rng.uniform(0.5, 2.0, size=8)
        q1 = rng.normal(size=8)
        q2 = rng.normal(size=8)
        arr = rusanov_flux((h, q1, q2), (h[::-1], q1[::-1], q2[::-1]), 0.5, axis=1)
        for i in range(8):
            one = rusanov_flux(
                (h[i], q1[i], q2[i]), (h[7 - i], q1[7 - i], q2[7 - i]), 0.5, axis=1
            )
            for c in range(3):
                assert arr[c][i] == pytest.approx(one[c], rel=1e-14, abs=1e-14)


class TestStep:
    def test_uniform_still_state_is_steady(self, grid32):
        scn = uniform_scenario(grid32, gamma=0.7)
        st = scn.initial_state()
        new, info = step(st, scn, dt=1e-3)
        np.testing.assert_array_equal(new.h.values, st.h.values)
        np.testing.assert_allclose(new.q.values, 0.0, atol=1e-16)
        assert info.dissipation_inc == 0.0

    def test_galilean_symmetry_of_x_translation(self, grid32):
        # shifting the initial data by one cell commutes with stepping
        scn = smooth_scenario(grid32)
        st = scn.initial_state()
        shifted = State(
            ScalarField(grid32, np.roll(st.h.values, 1, axis=0)),
            VectorField(grid32, np.roll(st.q.values, 1, axis=1)),
        )
        a, _ = step(st, scn, dt=1e-3)
        b, _ = step(shifted, scn, dt=1e-3)
        np.testing.assert_allclose(np.roll(a.h.values, 1, axis=0), b.h.values, atol=1e-14)

    def test_mass_is_conserved_exactly(self, grid32):
        scn = smooth_scenario(grid32)
        st = scn.initial_state()
        m0 = float(np.mean(st.h.values))
        for _ in range(50):
            st, _ = step(st, scn, dt=2e-3)
        assert float(np.mean(st.h.values)) == pytest.approx(m0, rel=1e-13)


class TestSimulate:
    def test_zero_horizon_returns_initial_state(self, grid32):
        traj = simulate(uniform_scenario(grid32, T=0.0))
        assert len(traj.states) == 1
        assert traj.n_steps == 0

    def test_steady_state_ledger_is_flat(self, grid32):
        traj = simulate(uniform_scenario(grid32, gamma=0.3, T=1.0, n_output=11))
        total = traj.ledger.column("total")
        np.testing.assert_allclose(total, total[0], atol=1e-14)

    def test_uniform_coulomb_decay_matches_ode(self, grid32):
        # spatially uniform run reduces to du/dt = -gamma u/|u|
        scn = uniform_scenario(grid32, u=(1.0, 0.0), gamma=0.5, T=1.0, n_output=11)
        traj = simulate(scn)
        dt = scn.T / traj.n_steps
        u_final = traj.states[-1].velocity().values
        np.testing.assert_allclose(u_final[0], 0.5, atol=3 * dt)
        np.testing.assert_allclose(u_final[1], 0.0, atol=1e-14)

    def test_decay_dissipation_integral(self, grid32):
        scn = uniform_scenario(grid32, u=(1.0, 0.0), gamma=0.5, T=1.0, n_output=11)
        traj = simulate(scn)
        dt = scn.T / traj.n_steps
        u_T = float(traj.states[-1].velocity().values[0].mean())
        expected = 0.5 * (1.0 - u_T**2) * 1.0  # mass = 1
        assert traj.ledger.column("dissipation_cum")[-1] == pytest.approx(expected, abs=5 * dt)

    def test_energy_residual_is_one_sided(self, grid32):
        traj = simulate(smooth_scenario(grid32, n_output=21))
        assert float(np.max(traj.ledger.column("e2_residual"))) <= 1e-12

    def test_forcing_work_enters_ledger(self, grid32):
        scn = Scenario(
            grid=grid32,
            T=0.5,
            a=0.5,
            friction=FrictionParams(),
            h0=ScalarField.constant(grid32, 1.0),
            u0=VectorField.constant(grid32, 0.0, 0.0),
            f=VectorField.constant(grid32, 0.2, 0.0),
            n_output=6,
        )
        traj = simulate(scn)
        work = traj.ledger.column("work_cum")
        assert work[-1] > 0.0
        assert float(np.max(traj.ledger.column("e2_residual"))) <= 1e-12

    def test_selections_recorded_per_output_time(self, grid32):
        traj = simulate(uniform_scenario(grid32, u=(1.0, 0.0), gamma=0.5, T=0.5, n_output=6))
        assert len(traj.selections) == len(traj.states)
        assert np.all(traj.selections[1].norm() <= 1.0 + 1e-12)

    def test_determinism(self, grid32):
        a = simulate(smooth_scenario(grid32, n_output=6))
        b = simulate(smooth_scenario(grid32, n_output=6))
        assert a.ledger.rows == b.ledger.rows
        np.testing.assert_array_equal(a.states[-1].h.values, b.states[-1].h.values)


class TestConvergence:
    def test_first_order_l1_self_convergence(self):
        # gamma=0 smooth data; error vs 4x reference drops ~2x per refinement
        errors = []
        ref = simulate(smooth_scenario(TorusGrid(64, 64), n_output=3))
        for nx in (16, 32):
            traj = simulate(smooth_scenario(TorusGrid(nx, nx), n_output=3))
            f = 64 // nx
            coarse_ref = ref.states[-1].h.values.reshape(nx, f, nx, f).mean(axis=(1, 3))
            errors.append(float(np.mean(np.abs(traj.states[-1].h.values - coarse_ref))))
        order = np.log2(errors[0] / errors[1])
        assert order >= 0.8


class TestLedger:
    def test_csv_round_trip(self, grid32, tmp_path):
        traj = simulate(uniform_scenario(grid32, u=(1.0, 0.0), gamma=0.5, T=0.5, n_output=6))
        path = tmp_path / "ledger.csv"
        traj.ledger.to_csv(path)
        rows = np.genfromtxt(path, delimiter=",", names=True)
        assert tuple(rows.dtype.names) == EnergyLedger.columns
        np.testing.assert_allclose(rows["mass"], traj.ledger.column("mass"), rtol=1e-15)
