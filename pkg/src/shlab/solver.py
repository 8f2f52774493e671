"""First-order finite-volume integrator for the avalanche balance laws.

Conservative variables are the height h and momentum q = h u, with pressure
a h^2.  Each step is an operator split: Rusanov flux update, exact friction
resolvent, explicit force.  The flux update conserves mass exactly; the
friction resolvent and the Rusanov viscosity are both dissipative, which is
what the energy ledger checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidValueError, NumericalAbort, PositivityError
from .fields import ScalarField, TorusGrid, VectorField, integrate
from .friction import FrictionParams, coulomb_selection, friction_shrink

H_FLOOR = 1e-10


@dataclass(frozen=True)
class State:
    """Conservative pair (h, q) at one time."""

    h: ScalarField
    q: VectorField

    def __post_init__(self):
        if np.any(self.h.values <= 0.0):
            raise PositivityError("state height must be positive everywhere")
        if self.h.grid != self.q.grid:
            raise InvalidValueError("h and q live on different grids")

    @property
    def grid(self) -> TorusGrid:
        return self.h.grid

    def velocity(self) -> VectorField:
        return VectorField(self.grid, self.q.values / self.h.values)


@dataclass(frozen=True)
class Scenario:
    grid: TorusGrid
    T: float
    a: float
    friction: FrictionParams
    h0: ScalarField
    u0: VectorField
    f: VectorField | None = None
    cfl: float = 0.4
    n_output: int = 101
    h_floor: float = H_FLOOR
    dt_max: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.T < 0.0:
            raise InvalidValueError("final time T must be nonnegative")
        if self.a <= 0.0:
            raise InvalidValueError("pressure coefficient a must be positive")
        if not 0.0 < self.cfl < 1.0:
            raise InvalidValueError("Courant number must lie in (0, 1)")
        if np.any(self.h0.values <= 0.0):
            raise PositivityError("initial height must satisfy h0 > 0 everywhere")
        if self.n_output < 2:
            raise InvalidValueError("need at least 2 output times")

    def initial_state(self) -> State:
        return State(self.h0, VectorField(self.grid, self.h0.values * self.u0.values))

    def default_dt_max(self) -> float:
        return self.dt_max if self.dt_max is not None else self.T / 100.0


def max_wave_speed(state: State, a: float) -> float:
    """Largest |u_axis| + sqrt(2 a h) over cells and both axis directions."""
    h = state.h.values
    c = np.sqrt(2.0 * a * h)
    u = np.abs(state.q.values) / h
    return float(np.max(u + c))


def cfl_dt(state: State, a: float, cfl: float, dx: float, dt_max: float) -> float:
    if not 0.0 < cfl < 1.0:
        raise InvalidValueError("Courant number must lie in (0, 1)")
    speed = max_wave_speed(state, a)
    if speed <= 0.0:
        return dt_max
    return min(cfl * dx / speed, dt_max)


def physical_flux(h, q1, q2, a, axis):
    """Exact flux 3-vector (mass, x-momentum, y-momentum) along an axis."""
    qa = q1 if axis == 0 else q2
    f0 = qa
    f1 = qa * q1 / h
    f2 = qa * q2 / h
    if axis == 0:
        f1 = f1 + a * h * h
    else:
        f2 = f2 + a * h * h
    return f0, f1, f2


def rusanov_flux(left, right, a: float, axis: int):
    """Rusanov interface flux between cell values (h, q1, q2).

    Accepts scalars or arrays; returns the flux 3-tuple
    (F(L) + F(R)) / 2 - s (U_R - U_L) / 2 with s the larger of the two cells'
    |u_axis| + sqrt(2 a h).
    """
    hl, q1l, q2l = left
    hr, q1r, q2r = right
    fl = physical_flux(hl, q1l, q2l, a, axis)
    fr = physical_flux(hr, q1r, q2r, a, axis)
    ul = (q1l if axis == 0 else q2l) / hl
    ur = (q1r if axis == 0 else q2r) / hr
    s = np.maximum(np.abs(ul) + np.sqrt(2.0 * a * hl), np.abs(ur) + np.sqrt(2.0 * a * hr))
    return tuple(
        0.5 * (a_ + b_) - 0.5 * s * (wr - wl)
        for a_, b_, wl, wr in zip(fl, fr, (hl, q1l, q2l), (hr, q1r, q2r))
    )


@dataclass(frozen=True)
class StepInfo:
    """Per-step bookkeeping: the effective friction selection actually applied
    and the energy-ledger increments."""

    B: VectorField
    dissipation_inc: float
    work_inc: float


def step(state: State, scenario: Scenario, dt: float) -> tuple[State, StepInfo]:
    """One split step: Rusanov fluxes, friction resolvent, explicit force."""
    grid = state.grid
    a = scenario.a
    h = state.h.values
    q1, q2 = state.q.values

    hn, q1n, q2n = h.copy(), q1.copy(), q2.copy()
    for axis, dxi in ((0, grid.dx), (1, grid.dy)):
        left = (h, q1, q2)
        right = tuple(np.roll(w, -1, axis=axis) for w in left)
        flux = rusanov_flux(left, right, a, axis)
        coef = dt / dxi
        hn -= coef * (flux[0] - np.roll(flux[0], 1, axis=axis))
        q1n -= coef * (flux[1] - np.roll(flux[1], 1, axis=axis))
        q2n -= coef * (flux[2] - np.roll(flux[2], 1, axis=axis))

    if np.any(hn < scenario.h_floor):
        # clip-and-renormalize fallback, at most once per step
        mass_before = float(np.mean(hn))
        hn = np.maximum(hn, scenario.h_floor)
        mass_after = float(np.mean(hn))
        if mass_after <= 0.0 or not np.isfinite(mass_after):
            raise NumericalAbort("height positivity lost beyond recovery")
        hn *= mass_before / mass_after
        if np.any(hn < scenario.h_floor * (1.0 - 1e-12)) or np.any(~np.isfinite(hn)):
            raise NumericalAbort("height positivity lost after fallback")
    if not (np.all(np.isfinite(q1n)) and np.all(np.isfinite(q2n))):
        raise NumericalAbort("momentum became non-finite")

    h_field = ScalarField(grid, hn)
    q_pre = VectorField(grid, np.stack([q1n, q2n]))
    q_post = (
        q_pre
        if _friction_is_trivial(scenario.friction)
        else friction_shrink(q_pre, h_field, scenario.friction, dt)
    )

    gamma = scenario.friction.gamma_values(grid)
    denom = dt * gamma * hn
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.where(denom > 0.0, (q_pre.values - q_post.values) / np.where(denom > 0, denom, 1.0), 0.0)
    Bnorm = np.hypot(B[0], B[1])
    over = Bnorm > 1.0
    if np.any(over):
        B = B / np.where(over, Bnorm, 1.0)
    B_field = VectorField(grid, B)

    u_post = q_post.values / hn
    diss_inc = dt * float(np.mean(gamma * hn * (B[0] * u_post[0] + B[1] * u_post[1])))

    if scenario.f is not None:
        q_final = VectorField(grid, q_post.values + dt * hn * scenario.f.values)
        u_final = q_final.values / hn
        work_inc = dt * float(
            np.mean(hn * (scenario.f.values[0] * u_final[0] + scenario.f.values[1] * u_final[1]))
        )
    else:
        q_final = q_post
        work_inc = 0.0

    return State(h_field, q_final), StepInfo(B_field, diss_inc, work_inc)


def _friction_is_trivial(params: FrictionParams) -> bool:
    g = params.gamma.values if isinstance(params.gamma, ScalarField) else params.gamma
    return not np.any(np.asarray(g) > 0.0) and params.gamma2 == 0.0


@dataclass
class EnergyLedger:
    """Time series of the discrete energy balance.

    e2_residual = total + dissipation_cum - total(0) - work_cum; for a
    dissipative run it stays <= 0 up to roundoff.
    """

    columns = (
        "t",
        "mass",
        "kinetic",
        "potential",
        "total",
        "dissipation_cum",
        "work_cum",
        "e2_residual",
    )
    rows: list[tuple] = field(default_factory=list)

    def append(self, t, state: State, a: float, diss_cum: float, work_cum: float):
        h = state.h.values
        q = state.q.values
        kinetic = float(np.mean(0.5 * (q[0] ** 2 + q[1] ** 2) / h))
        potential = float(np.mean(a * h * h))
        total = kinetic + potential
        mass = float(np.mean(h))
        if self.rows:
            total0 = self.rows[0][4]
        else:
            total0 = total
        residual = total + diss_cum - total0 - work_cum
        self.rows.append((t, mass, kinetic, potential, total, diss_cum, work_cum, residual))

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


@dataclass
class Trajectory:
    """States and effective friction selections at the output times."""

    scenario: Scenario
    times: np.ndarray
    states: list[State]
    selections: list[VectorField]
    ledger: EnergyLedger
    n_steps: int = 0


def simulate(scenario: Scenario) -> Trajectory:
    """Advance the scenario with adaptive CFL steps, landing exactly on the
    equispaced output times."""
    out_times = np.linspace(0.0, scenario.T, scenario.n_output)
    state = scenario.initial_state()
    ledger = EnergyLedger()
    ledger.append(0.0, state, scenario.a, 0.0, 0.0)
    states = [state]
    selections = [coulomb_selection(scenario.u0)]

    if scenario.T == 0.0:
        return Trajectory(scenario, np.array([0.0]), states, selections, ledger)

    dx = min(scenario.grid.dx, scenario.grid.dy)
    dt_max = scenario.default_dt_max()
    diss_cum = 0.0
    work_cum = 0.0
    t = 0.0
    n_steps = 0
    last_info = None
    for target in out_times[1:]:
        while t < target - 1e-14 * scenario.T:
            dt = cfl_dt(state, scenario.a, scenario.cfl, dx, dt_max)
            dt = min(dt, target - t)
            state, info = step(state, scenario, dt)
            diss_cum += info.dissipation_inc
            work_cum += info.work_inc
            t += dt
            n_steps += 1
            last_info = info
        t = target
        states.append(state)
        selections.append(last_info.B if last_info is not None else selections[0])
        ledger.append(t, state, scenario.a, diss_cum, work_cum)
    return Trajectory(scenario, out_times, states, selections, ledger, n_steps)
