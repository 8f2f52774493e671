"""Multi-valued friction: selection, implicit resolvent, linearized coefficient."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shlab.errors import EnergyPositivityError, InvalidValueError, PositivityError
from shlab.fields import ScalarField, TorusGrid, VectorField
from shlab.friction import (
    FrictionParams,
    coulomb_selection,
    default_velocity_floor,
    friction_coefficient_field,
    friction_shrink,
)


def const_state(grid, q1, q2, h):
    return VectorField.constant(grid, q1, q2), ScalarField.constant(grid, h)


class TestParams:
    def test_defaults(self):
        p = FrictionParams()
        assert p.gamma == 0.0 and p.law == "coulomb"

    def test_rejects_negative_gamma(self):
        with pytest.raises(InvalidValueError):
            FrictionParams(gamma=-1.0)

    def test_rejects_unknown_law(self):
        with pytest.raises(InvalidValueError):
            FrictionParams(law="sticky")

    def test_gamma_field_on_wrong_grid(self, grid32):
        gamma = ScalarField.constant(TorusGrid(16, 16), 0.5)
        with pytest.raises(InvalidValueError):
            FrictionParams(gamma=gamma).gamma_values(grid32)


class TestSelection:
    def test_normalization(self, grid32):
        u = VectorField.constant(grid32, 3.0, 4.0)
        B = coulomb_selection(u, tol_u=1e-12)
        np.testing.assert_allclose(B.values[0], 0.6, atol=1e-15)
        np.testing.assert_allclose(B.values[1], 0.8, atol=1e-15)

    def test_zero_velocity_selects_zero(self, grid32):
        B = coulomb_selection(VectorField.constant(grid32, 0.0, 0.0))
        assert not np.any(B.values)

    def test_below_threshold_snaps_to_zero(self, grid32):
        B = coulomb_selection(VectorField.constant(grid32, 1e-13, 0.0), tol_u=1e-12)
        assert not np.any(B.values)

    def test_default_floor_scales_with_velocity(self, grid32):
        u = VectorField.constant(grid32, 1e6, 0.0)
        assert default_velocity_floor(u) > 1e-7

    @settings(max_examples=40, deadline=None)
    @given(
        u1=st.floats(-10, 10, allow_nan=False),
        u2=st.floats(-10, 10, allow_nan=False),
    )
    def test_graph_properties(self, u1, u2):
        grid = TorusGrid(4, 4)
        u = VectorField.constant(grid, u1, u2)
        B = coulomb_selection(u)
        assert np.all(B.norm() <= 1.0 + 1e-12)
        assert np.all(B.values[0] * u1 + B.values[1] * u2 >= -1e-15)


class TestShrink:
    def test_closed_form(self, grid32):
        q, h = const_state(grid32, 3.0, 4.0, 1.0)
        out = friction_shrink(q, h, FrictionParams(gamma=2.0), dt=1.0)
        np.testing.assert_allclose(out.values[0], 1.8, atol=1e-14)
        np.testing.assert_allclose(out.values[1], 2.4, atol=1e-14)

    def test_full_stop_inside_set_valued_regime(self, grid32):
        q, h = const_state(grid32, 0.1, 0.0, 1.0)
        out = friction_shrink(q, h, FrictionParams(gamma=0.5), dt=1.0)
        assert not np.any(out.values)

    def test_zero_friction_is_identity(self, grid32):
        q, h = const_state(grid32, 1.5, -0.5, 2.0)
        out = friction_shrink(q, h, FrictionParams(), dt=0.1)
        np.testing.assert_array_equal(out.values, q.values)

    def test_requires_positive_height(self, grid32):
        q, _ = const_state(grid32, 1.0, 0.0, 1.0)
        with pytest.raises(PositivityError):
            friction_shrink(q, ScalarField.constant(grid32, 0.0), FrictionParams(gamma=1.0), 0.1)

    def test_requires_positive_dt(self, grid32):
        q, h = const_state(grid32, 1.0, 0.0, 1.0)
        with pytest.raises(InvalidValueError):
            friction_shrink(q, h, FrictionParams(gamma=1.0), dt=0.0)

    def test_consistency_with_selection(self, grid32):
        # (q - q') / dt -> gamma h B for |q|/h >> dt gamma
        gamma, dt = 0.7, 1e-6
        q, h = const_state(grid32, 3.0, 4.0, 2.0)
        out = friction_shrink(q, h, FrictionParams(gamma=gamma), dt)
        rate = (q.values - out.values) / dt
        B = coulomb_selection(VectorField(grid32, q.values / h.values))
        np.testing.assert_allclose(rate, gamma * h.values * B.values, rtol=1e-9)

    def test_extended_law_against_quadratic_oracle(self, grid32):
        # |q'| solves c x^2 + x - |q_c| = 0 after the coulomb shrink
        gamma, gamma2, dt, hval = 0.4, 1.3, 0.05, 0.8
        params = FrictionParams(gamma=gamma, gamma2=gamma2, law="extended")
        q, h = const_state(grid32, 2.0, -1.0, hval)
        out = friction_shrink(q, h, params, dt)
        mag0 = np.hypot(2.0, -1.0)
        mag_c = mag0 - dt * gamma * hval  # coulomb stage, known not to stop here
        c = dt * gamma2 / hval
        roots = np.roots([c, 1.0, -mag_c])
        expected = float(roots[roots > 0][0])
        np.testing.assert_allclose(np.hypot(out.values[0], out.values[1]), expected, rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        q1=st.floats(-5, 5, allow_nan=False),
        q2=st.floats(-5, 5, allow_nan=False),
        gamma=st.floats(0, 3, allow_nan=False),
        gamma2=st.floats(0, 3, allow_nan=False),
        dt=st.floats(1e-4, 0.5, allow_nan=False),
    )
    def test_resolvent_is_a_contraction_toward_zero(self, q1, q2, gamma, gamma2, dt):
        grid = TorusGrid(4, 4)
        params = FrictionParams(gamma=gamma, gamma2=gamma2, law="extended")
        q, h = const_state(grid, q1, q2, 1.0)
        out = friction_shrink(q, h, params, dt)
        mag_in = np.hypot(q1, q2)
        mag_out = float(np.hypot(out.values[0], out.values[1]).max())
        assert mag_out <= mag_in + 1e-12
        if mag_out > 0:
            # direction is preserved
            cross = out.values[0] * q2 - out.values[1] * q1
            np.testing.assert_allclose(cross, 0.0, atol=1e-10 * (1 + mag_in))


class TestCoefficientField:
    def test_coulomb_value(self, grid32):
        out = friction_coefficient_field(
            ScalarField.constant(grid32, 1.0),
            ScalarField.constant(grid32, 0.5),
            FrictionParams(gamma=1.0),
        )
        np.testing.assert_allclose(out.values, 1.0)

    def test_extended_value(self, grid32):
        out = friction_coefficient_field(
            ScalarField.constant(grid32, 2.0),
            ScalarField.constant(grid32, 1.0),
            FrictionParams(gamma=1.0, gamma2=1.0, law="extended"),
        )
        np.testing.assert_allclose(out.values, 2.0)

    def test_zero_coefficients(self, grid32):
        out = friction_coefficient_field(
            ScalarField.constant(grid32, 1.0),
            ScalarField.constant(grid32, 0.5),
            FrictionParams(),
        )
        assert not np.any(out.values)

    def test_requires_positive_energy(self, grid32):
        with pytest.raises(EnergyPositivityError):
            friction_coefficient_field(
                ScalarField.constant(grid32, 1.0),
                ScalarField.constant(grid32, 0.0),
                FrictionParams(gamma=1.0),
            )
