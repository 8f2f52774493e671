"""Periodic grids and sampled fields.

Everything in the package lives on a uniform cell-centered grid over the unit
torus [0,1)^2.  Scalar fields are (nx, ny) arrays, vector fields (2, nx, ny),
and symmetric traceless 2x2 tensor fields are stored as the two independent
components (p, s) of [[p, s], [s, -p]], so symmetry and tracelessness hold by
construction.  Axis 0 is x1, axis 1 is x2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidValueError, PositivityError


@dataclass(frozen=True)
class TorusGrid:
    """Uniform cell-centered grid on the unit torus.

    Cell centers sit at ((i + 1/2) dx, (j + 1/2) dy).  Counts must be even and
    at least 4 so discrete Fourier transforms have an unambiguous band.
    """

    nx: int
    ny: int

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 4 or n % 2 != 0:
                raise InvalidValueError(
                    f"grid counts must be even and >= 4, got {self.nx}x{self.ny}"
                )

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (indexing='ij') of cell-center coordinates."""
        x1 = (np.arange(self.nx) + 0.5) * self.dx
        x2 = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x1, x2, indexing="ij")


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class ScalarField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise InvalidValueError(
                f"scalar field shape {v.shape} does not match grid {self.grid.shape}"
            )
        _check_finite(v, "scalar field")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "ScalarField":
        x1, x2 = grid.cell_centers()
        return cls(grid, np.asarray(fn(x1, x2), dtype=float) + np.zeros(grid.shape))


@dataclass(frozen=True)
class VectorField:
    grid: TorusGrid
    values: np.ndarray  # shape (2, nx, ny)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2, *self.grid.shape):
            raise InvalidValueError(
                f"vector field shape {v.shape} does not match grid {self.grid.shape}"
            )
        _check_finite(v, "vector field")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: TorusGrid, vx: float, vy: float) -> "VectorField":
        out = np.empty((2, *grid.shape))
        out[0] = vx
        out[1] = vy
        return cls(grid, out)

    @classmethod
    def from_functions(cls, grid: TorusGrid, fx, fy) -> "VectorField":
        x1, x2 = grid.cell_centers()
        out = np.empty((2, *grid.shape))
        out[0] = np.asarray(fx(x1, x2), dtype=float) + np.zeros(grid.shape)
        out[1] = np.asarray(fy(x1, x2), dtype=float) + np.zeros(grid.shape)
        return cls(grid, out)

    def norm(self) -> np.ndarray:
        """Pointwise Euclidean norm, shape (nx, ny)."""
        return np.hypot(self.values[0], self.values[1])


@dataclass(frozen=True)
class SymTracelessField:
    """Symmetric traceless tensor field [[p, s], [s, -p]] stored as (p, s)."""

    grid: TorusGrid
    values: np.ndarray  # shape (2, nx, ny): component 0 is p, component 1 is s

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2, *self.grid.shape):
            raise InvalidValueError(
                f"tensor field shape {v.shape} does not match grid {self.grid.shape}"
            )
        _check_finite(v, "tensor field")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> np.ndarray:
        return self.values[0]

    @property
    def s(self) -> np.ndarray:
        return self.values[1]

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SymTracelessField":
        return cls(grid, np.zeros((2, *grid.shape)))


def lambda_max_traceless(p, s):
    """Largest eigenvalue of the traceless symmetric matrix [[p, s], [s, -p]].

    The eigenvalues are +-sqrt(p^2 + s^2).  Accepts scalars or arrays.
    """
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(s))):
        raise InvalidValueError("lambda_max_traceless requires finite input")
    out = np.hypot(p, s)
    return float(out) if out.ndim == 0 else out


def integrate(f: ScalarField) -> float:
    """Integral over the unit torus: cell measure times sum, i.e. the mean."""
    return float(np.mean(f.values))


def integrate_values(values: np.ndarray) -> float:
    """integrate() for a bare (nx, ny) sample array."""
    return float(np.mean(values))


def tensor_apply(q: VectorField, h: ScalarField) -> SymTracelessField:
    """Traceless part of q (x) q / h as a SymTracelessField.

    p = (q1^2 - q2^2) / (2h), s = q1 q2 / h.  Requires h > 0 everywhere.
    """
    hv = h.values
    if np.any(hv <= 0.0):
        raise PositivityError("tensor_apply requires h > 0 everywhere")
    q1, q2 = q.values
    out = np.empty((2, *q.grid.shape))
    out[0] = (q1 * q1 - q2 * q2) / (2.0 * hv)
    out[1] = q1 * q2 / hv
    return SymTracelessField(q.grid, out)


@dataclass(frozen=True)
class SpaceTimeField:
    """Time-indexed stack of spatial fields on uniform nodes t_0=0, ..., t_K=T.

    ``values`` has shape (K+1, nx, ny) for scalar kind and (K+1, 2, nx, ny)
    for vector / symtraceless kinds.
    """

    grid: TorusGrid
    times: np.ndarray
    values: np.ndarray
    kind: str = field(default="scalar")

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 3:
            raise InvalidValueError("need at least 3 time nodes (K >= 2)")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise InvalidValueError("time nodes must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-12, atol=1e-14):
            raise InvalidValueError("time nodes must be uniformly spaced")
        if t[0] != 0.0:
            raise InvalidValueError("time nodes must start at t = 0")
        if self.kind == "scalar":
            expect = (t.size, *self.grid.shape)
        elif self.kind in ("vector", "symtraceless"):
            expect = (t.size, 2, *self.grid.shape)
        else:
            raise InvalidValueError(f"unknown space-time field kind {self.kind!r}")
        if v.shape != expect:
            raise InvalidValueError(
                f"space-time values shape {v.shape}, expected {expect}"
            )
        _check_finite(v, "space-time field")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def num_nodes(self) -> int:
        return self.times.size

    def slice(self, k: int):
        """Spatial field at time node k, wrapped in the matching field type."""
        if self.kind == "scalar":
            return ScalarField(self.grid, self.values[k])
        if self.kind == "vector":
            return VectorField(self.grid, self.values[k])
        return SymTracelessField(self.grid, self.values[k])


def time_derivative(f: SpaceTimeField) -> SpaceTimeField:
    """2nd-order time derivative: centered interior, one-sided at endpoints."""
    v = f.values
    dt = f.dt
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    return SpaceTimeField(f.grid, f.times, out, kind=f.kind)
