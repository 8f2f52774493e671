"""Grids, field containers, and the pointwise tensor algebra."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shlab.errors import InvalidValueError, PositivityError
from shlab.fields import (
    ScalarField,
    SpaceTimeField,
    SymTracelessField,
    TorusGrid,
    VectorField,
    integrate,
    lambda_max_traceless,
    tensor_apply,
    time_derivative,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


class TestTorusGrid:
    def test_spacing_and_centers(self):
        g = TorusGrid(8, 16)
        assert g.dx == 1.0 / 8
        assert g.dy == 1.0 / 16
        x1, x2 = g.cell_centers()
        assert x1[0, 0] == 0.5 * g.dx
        assert x2.shape == (8, 16)

    @pytest.mark.parametrize("nx,ny", [(3, 8), (8, 3), (5, 8), (8, 7), (0, 8), (2, 8)])
    def test_rejects_odd_or_tiny_counts(self, nx, ny):
        with pytest.raises(InvalidValueError):
            TorusGrid(nx, ny)


class TestLambdaMax:
    def test_three_four_five(self):
        assert lambda_max_traceless(3.0, 4.0) == pytest.approx(5.0, abs=1e-15)

    def test_zero_matrix(self):
        assert lambda_max_traceless(0.0, 0.0) == 0.0

    def test_diagonal(self):
        assert lambda_max_traceless(1.0, 0.0) == 1.0

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidValueError):
            lambda_max_traceless(np.nan, 0.0)

    @given(p=finite, s=finite)
    def test_matches_eigendecomposition(self, p, s):
        mat = np.array([[p, s], [s, -p]])
        expected = float(np.max(np.linalg.eigvalsh(mat)))
        assert lambda_max_traceless(p, s) == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestIntegrate:
    def test_constant(self, grid64):
        assert integrate(ScalarField.constant(grid64, 2.5)) == pytest.approx(2.5)

    def test_band_limited_mean_zero(self, grid64):
        f = ScalarField.from_function(grid64, lambda x1, x2: np.sin(2 * np.pi * x1))
        assert integrate(f) == pytest.approx(0.0, abs=1e-14)

    def test_sin_squared(self, grid64):
        f = ScalarField.from_function(grid64, lambda x1, x2: np.sin(2 * np.pi * x1) ** 2)
        assert integrate(f) == pytest.approx(0.5, abs=1e-14)


class TestTensorApply:
    def test_unit_x_momentum(self, grid32):
        out = tensor_apply(
            VectorField.constant(grid32, 1.0, 0.0), ScalarField.constant(grid32, 1.0)
        )
        np.testing.assert_allclose(out.p, 0.5)
        np.testing.assert_allclose(out.s, 0.0)

    def test_diagonal_momentum(self, grid32):
        out = tensor_apply(
            VectorField.constant(grid32, 1.0, 1.0), ScalarField.constant(grid32, 2.0)
        )
        np.testing.assert_allclose(out.p, 0.0)
        np.testing.assert_allclose(out.s, 0.5)

    def test_zero_momentum(self, grid32):
        out = tensor_apply(
            VectorField.constant(grid32, 0.0, 0.0), ScalarField.constant(grid32, 3.0)
        )
        assert not np.any(out.values)

    def test_requires_positive_height(self, grid32):
        with pytest.raises(PositivityError):
            tensor_apply(
                VectorField.constant(grid32, 1.0, 0.0), ScalarField.constant(grid32, 0.0)
            )

    @settings(max_examples=50, deadline=None)
    @given(q1=finite, q2=finite, h=positive)
    def test_kinetic_energy_equals_lambda_max(self, q1, q2, h):
        # half |q|^2 / h is exactly the top eigenvalue of the deviatoric part
        # of q (x) q / h -- the identity the certificate leans on
        grid = TorusGrid(4, 4)
        dev = tensor_apply(VectorField.constant(grid, q1, q2), ScalarField.constant(grid, h))
        kinetic = 0.5 * (q1 * q1 + q2 * q2) / h
        lam = lambda_max_traceless(dev.p, dev.s)
        np.testing.assert_allclose(lam, kinetic, rtol=1e-12, atol=1e-12)


class TestFieldValidation:
    def test_scalar_shape_mismatch(self, grid32):
        with pytest.raises(InvalidValueError):
            ScalarField(grid32, np.zeros((8, 8)))

    def test_vector_shape_mismatch(self, grid32):
        with pytest.raises(InvalidValueError):
            VectorField(grid32, np.zeros((3, 32, 32)))

    def test_non_finite_rejected(self, grid32):
        bad = np.zeros((32, 32))
        bad[0, 0] = np.inf
        with pytest.raises(InvalidValueError):
            ScalarField(grid32, bad)

    def test_symtraceless_components(self, grid32):
        f = SymTracelessField.zeros(grid32)
        assert f.p.shape == (32, 32)
        assert f.s.shape == (32, 32)


class TestSpaceTimeField:
    def make(self, grid, times, kind="scalar"):
        shape = (times.size, *grid.shape) if kind == "scalar" else (times.size, 2, *grid.shape)
        return SpaceTimeField(grid, times, np.zeros(shape), kind=kind)

    def test_basic(self, grid32):
        f = self.make(grid32, np.linspace(0.0, 1.0, 5))
        assert f.num_nodes == 5
        assert f.dt == pytest.approx(0.25)
        assert isinstance(f.slice(0), ScalarField)

    def test_rejects_nonuniform_times(self, grid32):
        with pytest.raises(InvalidValueError):
            self.make(grid32, np.array([0.0, 0.1, 0.3]))

    def test_rejects_nonzero_start(self, grid32):
        with pytest.raises(InvalidValueError):
            self.make(grid32, np.array([0.5, 1.0, 1.5]))

    def test_rejects_too_few_nodes(self, grid32):
        with pytest.raises(InvalidValueError):
            self.make(grid32, np.array([0.0, 1.0]))

    def test_time_derivative_exact_on_quadratics(self, grid32):
        times = np.linspace(0.0, 1.0, 9)
        vals = (2.0 + 3.0 * times - 1.5 * times**2)[:, None, None] * np.ones((1, 32, 32))
        f = SpaceTimeField(grid32, times, vals)
        expected = (3.0 - 3.0 * times)[:, None, None]
        np.testing.assert_allclose(time_derivative(f).values, expected * np.ones((1, 32, 32)),
                                   rtol=0, atol=1e-12)
