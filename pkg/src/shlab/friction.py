"""Coulomb friction: multi-valued graph, selection, and implicit resolvent.

The friction term u/|u| is multi-valued at u = 0 (any point of the closed
unit ball).  The solver never evaluates the graph directly: it applies the
exact backward-Euler resolvent of the inclusion, which is a pointwise norm
shrinkage.  The velocity-dependent "extended" law adds a quadratic drag
sub-step solved in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnergyPositivityError, InvalidValueError, PositivityError
from .fields import ScalarField, TorusGrid, VectorField

LAWS = ("coulomb", "extended")


@dataclass(frozen=True)
class FrictionParams:
    """Coulomb coefficient gamma (constant or field) and the extended-law
    velocity-dependent coefficient gamma2."""

    gamma: float | ScalarField = 0.0
    gamma2: float = 0.0
    law: str = "coulomb"

    def __post_init__(self):
        if self.law not in LAWS:
            raise InvalidValueError(f"friction law must be one of {LAWS}, got {self.law!r}")
        g = self.gamma.values if isinstance(self.gamma, ScalarField) else self.gamma
        if np.any(np.asarray(g) < 0.0):
            raise InvalidValueError("friction gamma must be nonnegative")
        if self.gamma2 < 0.0:
            raise InvalidValueError("friction gamma2 must be nonnegative")

    def gamma_values(self, grid: TorusGrid) -> np.ndarray:
        if isinstance(self.gamma, ScalarField):
            if self.gamma.grid != grid:
                raise InvalidValueError("gamma field lives on a different grid")
            return self.gamma.values
        return np.full(grid.shape, float(self.gamma))


def default_velocity_floor(u: VectorField) -> float:
    """Scale-aware threshold below which the selection snaps to zero."""
    return 1e-12 * (float(np.max(u.norm())) + 1.0)


def coulomb_selection(u: VectorField, tol_u: float | None = None) -> VectorField:
    """Single-valued selection from the friction graph: u/|u| above tol_u,
    zero below.  Always |B| <= 1 and B . u >= 0."""
    if tol_u is None:
        tol_u = default_velocity_floor(u)
    if tol_u <= 0.0:
        raise InvalidValueError("tol_u must be positive")
    norm = u.norm()
    active = norm > tol_u
    scale = np.where(active, 1.0 / np.where(active, norm, 1.0), 0.0)
    return VectorField(u.grid, u.values * scale)


def friction_shrink(
    q: VectorField, h: ScalarField, params: FrictionParams, dt: float
) -> VectorField:
    """Exact backward-Euler resolvent of the friction inclusion on momentum.

    Coulomb part: q' = 0 if |q| <= dt*gamma*h, else q scaled by
    (1 - dt*gamma*h/|q|).  Extended law follows with the closed-form solve of
    |q'| (1 + dt*gamma2*|q'|/h) = |q| (positive root of the quadratic).
    """
    if dt <= 0.0:
        raise InvalidValueError("dt must be positive")
    hv = h.values
    if np.any(hv <= 0.0):
        raise PositivityError("friction_shrink requires h > 0 everywhere")
    norm = q.norm()
    thresh = dt * params.gamma_values(q.grid) * hv
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norm > thresh, 1.0 - thresh / np.where(norm > 0, norm, 1.0), 0.0)
    out = q.values * factor
    if params.law == "extended" and params.gamma2 > 0.0:
        c = dt * params.gamma2 / hv
        mag = np.hypot(out[0], out[1])
        # |q'| = (-1 + sqrt(1 + 4 c |q|)) / (2 c), written to avoid cancellation
        new_mag = 2.0 * mag / (1.0 + np.sqrt(1.0 + 4.0 * c * mag))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = out * np.where(mag > 0.0, new_mag / np.where(mag > 0, mag, 1.0), 0.0)
    return VectorField(q.grid, out)


def friction_coefficient_field(
    h: ScalarField, E: ScalarField, params: FrictionParams
) -> ScalarField:
    """Scalar multiplier that renders the friction term linear in momentum.

    gamma * sqrt(h / 2E) for the Coulomb law; the extended law adds
    gamma2 * sqrt(2E / h).  Requires h > 0 and E > 0 everywhere.
    """
    hv, Ev = h.values, E.values
    if np.any(hv <= 0.0):
        raise PositivityError("friction coefficient requires h > 0 everywhere")
    if np.any(Ev <= 0.0):
        raise EnergyPositivityError("friction coefficient requires E > 0 everywhere")
    out = params.gamma_values(h.grid) * np.sqrt(hv / (2.0 * Ev))
    if params.law == "extended":
        out = out + params.gamma2 * np.sqrt(2.0 * Ev / hv)
    return ScalarField(h.grid, out)
