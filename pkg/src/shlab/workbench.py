"""Subsolution workbench.

Mechanizes the construction behind the non-uniqueness result: pick a height
history compatible with the initial data, recover the potential and kinetic
energy budget, close the mean-momentum ODE and the deviatoric stress solve,
certify membership in the subsolution set (pointwise eigenvalue constraint
with margin delta), and push the energy-gap functional towards zero with
compactly supported oscillatory perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import spectral
from .errors import (
    ConstraintError,
    DesignError,
    EnergyPositivityError,
    InvalidValueError,
    SearchError,
    SolvabilityError,
)
from .fields import (
    ScalarField,
    SpaceTimeField,
    SymTracelessField,
    TorusGrid,
    VectorField,
    lambda_max_traceless,
    time_derivative,
)
from .friction import FrictionParams, friction_coefficient_field

E_MIN_FACTOR = 1e-6
MASS_DRIFT_TOL = 1e-10


# ---------------------------------------------------------------------------
# height design and derived fields


def design_height(
    h0: ScalarField,
    psi0: ScalarField,
    T: float,
    num_steps: int,
    amplitude_cap: float = 0.25,
) -> SpaceTimeField:
    """Choose a positive height history h(t) = h0 + s(t) g.

    g = -Lap(psi0) is mean-zero, so total mass is constant; s(0) = 0 and
    s'(0) = 1 match the initial data and its first time derivative.  The
    profile s(t) = tau (1 - exp(-t/tau)) is bounded by tau, which is sized so
    the excursion never exceeds amplitude_cap * min h0.
    """
    if not 0.0 < amplitude_cap < 1.0:
        raise DesignError("amplitude_cap must lie in (0, 1)")
    if np.any(h0.values <= 0.0):
        raise DesignError("height design requires h0 > 0")
    times = np.linspace(0.0, T, num_steps + 1)
    g = -spectral.laplacian_values(psi0.values)
    gmax = float(np.max(np.abs(g)))
    if gmax == 0.0:
        values = np.broadcast_to(h0.values, (times.size, *h0.grid.shape)).copy()
        return SpaceTimeField(h0.grid, times, values, kind="scalar")
    tau = amplitude_cap * float(np.min(h0.values)) / gmax
    if tau < 1e-8:
        raise DesignError(
            f"height excursion budget too small (tau = {tau:.3e}); "
            "increase amplitude_cap or smooth psi0"
        )
    s = tau * (1.0 - np.exp(-times / tau))
    values = h0.values[None] + s[:, None, None] * g[None]
    if np.any(values <= 0.0):
        raise DesignError("designed height lost positivity")
    return SpaceTimeField(h0.grid, times, values, kind="scalar")


def stream_potential(h: SpaceTimeField) -> SpaceTimeField:
    """Mean-zero potential with -Lap(psi(t)) = dh/dt per time slice."""
    mass = h.values.mean(axis=(1, 2))
    if float(np.max(np.abs(mass - mass[0]))) > MASS_DRIFT_TOL:
        raise SolvabilityError("height mass drifts in time; potential undefined")
    dh = time_derivative(h)
    out = np.empty_like(h.values)
    for k in range(h.num_nodes):
        out[k] = spectral.poisson_solve_values(dh.values[k] - dh.values[k].mean())
    return SpaceTimeField(h.grid, h.times, out, kind="scalar")


def _as_a_values(a, grid: TorusGrid) -> np.ndarray:
    if isinstance(a, ScalarField):
        return a.values
    return np.full(grid.shape, float(a))


def _as_offset_series(offset, times: np.ndarray) -> np.ndarray:
    arr = np.asarray(offset, dtype=float)
    if arr.ndim == 0:
        return np.full(times.size, float(arr))
    if arr.shape != times.shape:
        raise InvalidValueError("energy offset series must match the time nodes")
    return arr


def kinetic_energy_field(offset, a, h: SpaceTimeField, psi: SpaceTimeField) -> SpaceTimeField:
    """Kinetic-energy budget E(t, x) = offset(t) - a h^2 - d(psi)/dt."""
    lam = _as_offset_series(offset, h.times)
    av = _as_a_values(a, h.grid)
    dpsi = time_derivative(psi)
    values = lam[:, None, None] - av[None] * h.values**2 - dpsi.values
    return SpaceTimeField(h.grid, h.times, values, kind="scalar")


def _grad_stack(psi: SpaceTimeField) -> np.ndarray:
    out = np.empty((psi.num_nodes, 2, *psi.grid.shape))
    for k in range(psi.num_nodes):
        out[k] = spectral.grad_values(psi.values[k])
    return out


def _coefficient_stack(
    h: SpaceTimeField, E: SpaceTimeField, friction: FrictionParams, e_min: float
) -> np.ndarray:
    """Per-node linear friction coefficient field gamma sqrt(h/2E) (+ extended
    term).  Raises if E dips below the admissible floor."""
    if float(np.min(E.values)) < e_min:
        raise EnergyPositivityError(
            f"kinetic energy floor violated: min E = {float(np.min(E.values)):.3e} < {e_min:.3e}"
        )
    out = np.empty_like(h.values)
    for k in range(h.num_nodes):
        out[k] = friction_coefficient_field(
            ScalarField(h.grid, h.values[k]), ScalarField(h.grid, E.values[k]), friction
        ).values
    return out


def _friction_active(friction: FrictionParams) -> bool:
    g = friction.gamma.values if isinstance(friction.gamma, ScalarField) else friction.gamma
    return bool(np.any(np.asarray(g) > 0.0)) or friction.gamma2 > 0.0


def solve_mean_momentum(
    v: SpaceTimeField,
    E: SpaceTimeField,
    h: SpaceTimeField,
    psi: SpaceTimeField,
    friction: FrictionParams,
    f: VectorField | None,
    V0,
    e_min: float = 0.0,
) -> np.ndarray:
    """Spatial-mean momentum component V(t) from its linear ODE.

    dV/dt = mean(coef) V + mean(coef (v + grad psi) + h f), V(0) = V0, with
    coef the linear friction coefficient.  Classical 4th-order one-step
    integration; node data is interpolated linearly for the half steps.
    """
    times = h.times
    grid = h.grid
    gpsi = _grad_stack(psi)
    if _friction_active(friction):
        coef = _coefficient_stack(h, E, friction, e_min)
    else:
        coef = np.zeros_like(h.values)
    cbar = coef.mean(axis=(1, 2))
    rhs = coef[:, None] * (v.values + gpsi)
    if f is not None:
        rhs = rhs + h.values[:, None] * f.values[None]
    bbar = rhs.mean(axis=(2, 3))  # (K+1, 2)

    def interp(series, t):
        return np.interp(t, times, series) if series.ndim == 1 else np.array(
            [np.interp(t, times, series[:, d]) for d in range(series.shape[1])]
        )

    V = np.empty((times.size, 2))
    V[0] = np.asarray(V0, dtype=float)
    dt = float(times[1] - times[0])
    for k in range(times.size - 1):
        t = times[k]

        def rate(tt, vv):
            return interp(cbar, tt) * vv + interp(bbar, tt)

        k1 = rate(t, V[k])
        k2 = rate(t + dt / 2, V[k] + dt / 2 * k1)
        k3 = rate(t + dt / 2, V[k] + dt / 2 * k2)
        k4 = rate(t + dt, V[k] + dt * k3)
        V[k + 1] = V[k] + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return V


def solve_stress(
    v: SpaceTimeField,
    V: np.ndarray,
    E: SpaceTimeField,
    h: SpaceTimeField,
    psi: SpaceTimeField,
    friction: FrictionParams,
    f: VectorField | None,
    e_min: float = 0.0,
) -> SpaceTimeField:
    """Deviatoric stress corrector M(t) with div M equal to the mean-free part
    of the friction-plus-force right-hand side, mean-zero per slice."""
    grid = h.grid
    gpsi = _grad_stack(psi)
    if _friction_active(friction):
        coef = _coefficient_stack(h, E, friction, e_min)
    else:
        coef = None
    out = np.zeros((h.num_nodes, 2, *grid.shape))
    for k in range(h.num_nodes):
        rhs = np.zeros((2, *grid.shape))
        if coef is not None:
            drag = coef[k][None] * (v.values[k] + V[k][:, None, None] + gpsi[k])
            rhs -= drag - drag.mean(axis=(1, 2))[:, None, None]
        if f is not None:
            force = h.values[k][None] * f.values
            rhs += force - force.mean(axis=(1, 2))[:, None, None]
        if np.any(rhs != 0.0):
            _, M = spectral.korn_solve_values(rhs)
            out[k] = M
    return SpaceTimeField(grid, h.times, out, kind="symtraceless")


# ---------------------------------------------------------------------------
# subsolution state and certificate


@dataclass(frozen=True)
class SubsolutionState:
    """Full record of one candidate subsolution.

    velocity is the divergence-free mean-zero part, flux its space-time
    companion, mean_momentum the V(t) series, stress the corrector M(t), and
    delta the certified margin.
    """

    grid: TorusGrid
    times: np.ndarray
    a: float | ScalarField
    friction: FrictionParams
    force: VectorField | None
    height: SpaceTimeField
    potential: SpaceTimeField
    energy_offset: np.ndarray  # (K+1,)
    kinetic_energy: SpaceTimeField
    velocity: SpaceTimeField
    flux: SpaceTimeField
    mean_momentum: np.ndarray  # (K+1, 2)
    stress: SpaceTimeField
    delta: float

    def total_momentum_stack(self) -> np.ndarray:
        """v + V + grad(psi) sampled at every node, shape (K+1, 2, nx, ny)."""
        return (
            self.velocity.values
            + self.mean_momentum[:, :, None, None]
            + _grad_stack(self.potential)
        )


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    margin: SpaceTimeField
    min_margin: float
    pointwise_bound_holds: bool


def _deviatoric_outer(g: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(p, s) of the traceless part of g (x) g / h for stacked fields."""
    g1, g2 = g[:, 0], g[:, 1]
    p = (g1 * g1 - g2 * g2) / (2.0 * h)
    s = g1 * g2 / h
    return p, s


def subsolution_certificate(sub: SubsolutionState) -> CertificateReport:
    """Pointwise margin E - delta - lambda_max[g (x) g / h - F - M].

    Passes iff the margin is strictly positive everywhere.  Also re-checks the
    eigenvalue lower bound: half |g|^2 / h never exceeds the lambda_max term.
    """
    g = sub.total_momentum_stack()
    h = sub.height.values
    p, s = _deviatoric_outer(g, h)
    p = p - sub.flux.values[:, 0] - sub.stress.values[:, 0]
    s = s - sub.flux.values[:, 1] - sub.stress.values[:, 1]
    half_speed = 0.5 * (g[:, 0] ** 2 + g[:, 1] ** 2) / h
    lam = half_speed + lambda_max_traceless(p, s)
    margin = sub.kinetic_energy.values - sub.delta - lam
    bound_ok = bool(np.all(half_speed <= lam + 1e-12 * (1.0 + np.abs(lam))))
    return CertificateReport(
        passed=bool(np.all(margin > 0.0)),
        margin=SpaceTimeField(sub.grid, sub.times, margin, kind="scalar"),
        min_margin=float(np.min(margin)),
        pointwise_bound_holds=bound_ok,
    )


def energy_gap(sub: SubsolutionState) -> float:
    """Space-time integral of half |g|^2 / h - E (trapezoid in time).

    Nonpositive for every certified subsolution; zero exactly on solutions.
    """
    g = sub.total_momentum_stack()
    integrand = 0.5 * (g[:, 0] ** 2 + g[:, 1] ** 2) / sub.height.values - sub.kinetic_energy.values
    per_slice = integrand.mean(axis=(1, 2))
    return float(np.trapezoid(per_slice, sub.times))


def transport_residual(sub: SubsolutionState) -> float:
    """Max residual of the linear constraint d(velocity)/dt + div(flux) = 0,
    with the discrete time stencil; interior nodes only."""
    dv = time_derivative(sub.velocity)
    worst = 0.0
    for k in range(1, sub.times.size - 1):
        divF = spectral.div_traceless_values(sub.flux.values[k])
        worst = max(worst, float(np.max(np.abs(dv.values[k] + divF))))
    return worst


# ---------------------------------------------------------------------------
# problem container and the energy-offset search


@dataclass(frozen=True)
class WorkbenchProblem:
    """Scenario-level inputs for the subsolution pipeline."""

    grid: TorusGrid
    T: float
    num_steps: int
    a: float | ScalarField
    friction: FrictionParams
    h0: ScalarField
    u0: VectorField
    force: VectorField | None = None
    delta: float = 0.1
    amplitude_cap: float = 0.25

    def initial_split(self):
        q0 = VectorField(self.grid, self.h0.values * self.u0.values)
        return spectral.helmholtz_decompose(q0)

    def build(self, offset) -> SubsolutionState:
        """Assemble the candidate with velocity frozen at v0 and zero flux."""
        parts = self.initial_split()
        height = design_height(self.h0, parts.psi, self.T, self.num_steps, self.amplitude_cap)
        psi = stream_potential(height)
        offset_series = _as_offset_series(offset, height.times)
        E = kinetic_energy_field(offset_series, self.a, height, psi)
        e_min = E_MIN_FACTOR * float(np.max(np.abs(offset_series)))
        v = SpaceTimeField(
            self.grid,
            height.times,
            np.broadcast_to(parts.v.values, (height.num_nodes, 2, *self.grid.shape)).copy(),
            kind="vector",
        )
        V = solve_mean_momentum(v, E, height, psi, self.friction, self.force, parts.Vmean, e_min)
        M = solve_stress(v, V, E, height, psi, self.friction, self.force, e_min)
        flux = SpaceTimeField(
            self.grid, height.times, np.zeros_like(v.values), kind="symtraceless"
        )
        return SubsolutionState(
            grid=self.grid,
            times=height.times,
            a=self.a,
            friction=self.friction,
            force=self.force,
            height=height,
            potential=psi,
            energy_offset=offset_series,
            kinetic_energy=E,
            velocity=v,
            flux=flux,
            mean_momentum=V,
            stress=M,
            delta=self.delta,
        )


def find_energy_offset(
    problem: WorkbenchProblem,
    delta: float | None = None,
    rel_tol: float = 1e-3,
    safety: float = 1.1,
    max_doublings: int = 60,
) -> float:
    """Smallest constant energy offset whose candidate certifies, bisected to
    rel_tol and multiplied by a safety factor."""
    if delta is not None:
        problem = replace(problem, delta=delta)
    if problem.delta <= 0.0:
        raise InvalidValueError("margin delta must be positive")

    def passes(lam: float) -> bool:
        try:
            return subsolution_certificate(problem.build(lam)).passed
        except EnergyPositivityError:
            return False

    a_vals = _as_a_values(problem.a, problem.grid)
    lo = 0.0
    hi = float(np.max(a_vals) * np.max(problem.h0.values) ** 2 + problem.delta)
    for _ in range(max_doublings):
        if passes(hi):
            break
        lo = hi
        hi *= 2.0
    else:
        raise SearchError("energy offset search hit its cap without certifying")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return safety * hi


# ---------------------------------------------------------------------------
# oscillatory perturbations


def _bump_derivs(xi: np.ndarray, order: int) -> np.ndarray:
    """Derivatives (0..order <= 3) of exp(1 - 1/(1 - xi^2)), zero outside."""
    inside = np.abs(xi) < 1.0
    x = np.where(inside, xi, 0.0)
    gsafe = 1.0 - x * x
    r1 = -2.0 * x / gsafe**2
    r2 = -2.0 / gsafe**2 - 8.0 * x * x / gsafe**3
    r3 = -24.0 * x / gsafe**3 - 48.0 * x**3 / gsafe**4
    with np.errstate(over="ignore"):
        b = np.where(inside, np.exp(1.0 - 1.0 / gsafe), 0.0)
    out = [b]
    if order >= 1:
        out.append(np.where(inside, b * r1, 0.0))
    if order >= 2:
        out.append(np.where(inside, b * (r2 + r1 * r1), 0.0))
    if order >= 3:
        out.append(np.where(inside, b * (r3 + 3.0 * r1 * r2 + r1**3), 0.0))
    return out[order]


@dataclass(frozen=True)
class SpaceTimeBox:
    """Open box (t_lo, t_hi) x (x_lo, x_hi) x (y_lo, y_hi) inside (0,T) x Omega."""

    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        for lo, hi in ((self.t_lo, self.t_hi), (self.x_lo, self.x_hi), (self.y_lo, self.y_hi)):
            if not lo < hi:
                raise InvalidValueError("box bounds must satisfy lo < hi")


@dataclass(frozen=True)
class OscillatoryPair:
    """Compactly supported perturbation (w, G) of a subsolution."""

    w: SpaceTimeField
    G: SpaceTimeField
    n: int
    box: SpaceTimeBox
    amplitude: float
    degenerate: bool = False


class _WavePotential:
    """Scalar potential phi = A chi_t(t) chi_x(x) chi_y(y) sin(omega t + theta(x)).

    The pair is derived through one scalar potential,
        w = perp-grad(Lap(phi)),   G = (-2 d1 d2, d1^2 - d2^2) applied to dphi/dt,
    for which div w = 0 and dw/dt + div G = 0 are operator identities.  The
    spatial derivatives are taken with the discrete spectral operators, so the
    discrete divergence vanishes to roundoff and the transport identity holds
    exactly in continuous time (the only residual a centered time stencil sees
    is its own O(dt^2) truncation).  Time factors are analytic, so slices
    outside the box are exactly zero; spatial support is exact up to the
    spectral tail of the C-infinity bump.
    """

    def __init__(self, box: SpaceTimeBox, eta_x: tuple[float, float], n: int, omega: float):
        self.box = box
        self.eta_x = eta_x
        self.n = n
        self.omega = omega

    def _bump(self, u: np.ndarray, lo: float, hi: float, order: int) -> np.ndarray:
        xi = (2.0 * u - lo - hi) / (hi - lo)
        return _bump_derivs(xi, order) * (2.0 / (hi - lo)) ** order

    def evaluate(self, times: np.ndarray, grid: TorusGrid, amplitude: float):
        """Sampled (w, G) arrays, shapes (K+1, 2, nx, ny) each."""
        b = self.box
        e1, e2 = self.eta_x
        kmag = 2.0 * np.pi * self.n * math.hypot(e1, e2)
        A = amplitude / kmag**3

        x1 = (np.arange(grid.nx) + 0.5) * grid.dx
        x2 = (np.arange(grid.ny) + 0.5) * grid.dy
        chi_t = self._bump(times, b.t_lo, b.t_hi, 0)
        dchi_t = self._bump(times, b.t_lo, b.t_hi, 1)
        chi_xy = np.outer(self._bump(x1, b.x_lo, b.x_hi, 0), self._bump(x2, b.y_lo, b.y_hi, 0))
        theta = 2.0 * np.pi * self.n * (e1 * x1[:, None] + e2 * x2[None, :])

        k1 = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)[:, None]
        k2 = 2.0 * np.pi * np.fft.fftfreq(grid.ny, d=grid.dy)[None, :]
        k1[grid.nx // 2, 0] = 0.0
        k2[0, grid.ny // 2] = 0.0
        k2sum = k1 * k1 + k2 * k2

        w = np.empty((times.size, 2, grid.nx, grid.ny))
        G = np.empty_like(w)
        for k in range(times.size):
            wt = self.omega * times[k]
            phi = A * chi_t[k] * chi_xy * np.sin(theta + wt)
            dphi = A * chi_xy * (
                dchi_t[k] * np.sin(theta + wt) + chi_t[k] * self.omega * np.cos(theta + wt)
            )
            if chi_t[k] == 0.0 and dchi_t[k] == 0.0:
                w[k] = 0.0
                G[k] = 0.0
                continue
            ph = np.fft.fft2(phi)
            dph = np.fft.fft2(dphi)
            w[k, 0] = np.real(np.fft.ifft2(-1j * k2 * k2sum * ph))
            w[k, 1] = np.real(np.fft.ifft2(1j * k1 * k2sum * ph))
            G[k, 0] = np.real(np.fft.ifft2(2.0 * k1 * k2 * dph))
            G[k, 1] = np.real(np.fft.ifft2((k2 * k2 - k1 * k1) * dph))
        return w, G


_DIRECTIONS = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0))


def _box_mask(times: np.ndarray, grid: TorusGrid, box: SpaceTimeBox) -> np.ndarray:
    x1 = (np.arange(grid.nx) + 0.5) * grid.dx
    x2 = (np.arange(grid.ny) + 0.5) * grid.dy
    mt = (times > box.t_lo) & (times < box.t_hi)
    m1 = (x1 > box.x_lo) & (x1 < box.x_hi)
    m2 = (x2 > box.y_lo) & (x2 < box.y_hi)
    return mt[:, None, None] & m1[None, :, None] & m2[None, None, :]


def _constraint_lambda(g: np.ndarray, r: np.ndarray, Wp: np.ndarray, Ws: np.ndarray) -> np.ndarray:
    p, s = _deviatoric_outer(g, r)
    return 0.5 * (g[:, 0] ** 2 + g[:, 1] ** 2) / r + lambda_max_traceless(p - Wp, s - Ws)


def oscillatory_pair(
    g: SpaceTimeField,
    W: SpaceTimeField,
    r: SpaceTimeField,
    e: SpaceTimeField,
    n: int,
    box: SpaceTimeBox,
    seed: int = 0,
    amplitude: float | None = None,
    max_backtracks: int = 60,
) -> OscillatoryPair:
    """Compactly supported oscillation preserving the pointwise constraint.

    The pair comes from a single plane-wave potential with a smooth cutoff:
    the wave direction lies in the cone b . eta_x = 0, the amplitude is
    backtracked until lambda_max[(g+w)(x)(g+w)/r - (W+G)] < e survives on the
    whole box.  A vanishing constraint gap yields the zero perturbation with
    the degenerate flag set instead of an error.
    """
    times = g.times
    grid = g.grid
    if np.any(r.values <= 0.0):
        raise ConstraintError("oscillatory pair requires r > 0")
    lam0 = _constraint_lambda(g.values, r.values, W.values[:, 0], W.values[:, 1])
    mask = _box_mask(times, grid, box)
    if np.any((lam0 >= e.values) & mask):
        raise ConstraintError("constraint lambda_max[...] < e fails on the support box")

    gap = float(np.min(np.where(mask, e.values - lam0, np.inf)))
    zero = lambda: OscillatoryPair(  # noqa: E731
        w=SpaceTimeField(grid, times, np.zeros((times.size, 2, *grid.shape)), kind="vector"),
        G=SpaceTimeField(grid, times, np.zeros((times.size, 2, *grid.shape)), kind="symtraceless"),
        n=n,
        box=box,
        amplitude=0.0,
        degenerate=True,
    )
    if not np.isfinite(gap) or gap <= 1e-12 * float(np.max(np.abs(e.values)) + 1.0):
        return zero()

    rng = np.random.default_rng(seed)
    e1, e2 = _DIRECTIONS[rng.integers(len(_DIRECTIONS))]
    # temporal frequency independent of n: the spatial oscillation sharpens as
    # n grows while the time sampling burden stays fixed
    omega = float(rng.uniform(2.0, 6.0))
    wave = _WavePotential(box, (e1, e2), n, omega)

    if amplitude is None:
        amp = 0.5 * math.sqrt(gap * float(np.min(r.values)))
    else:
        amp = float(amplitude)
    e_pad = np.where(mask, e.values, lam0 + 0.5 * gap)
    for _ in range(max_backtracks):
        w, G = wave.evaluate(times, grid, amp)
        lam = _constraint_lambda(
            g.values + w, r.values, W.values[:, 0] + G[:, 0], W.values[:, 1] + G[:, 1]
        )
        # outside the box only the spectral tail of the cutoff remains, so the
        # padded level (half the box gap above lambda0) is a strict check there
        if np.all(lam < e_pad):
            return OscillatoryPair(
                w=SpaceTimeField(grid, times, w, kind="vector"),
                G=SpaceTimeField(grid, times, G, kind="symtraceless"),
                n=n,
                box=box,
                amplitude=amp,
            )
        amp *= 0.5
    return zero()


# ---------------------------------------------------------------------------
# improvement loop


@dataclass(frozen=True)
class ImprovementReport:
    accepted: bool
    gap_before: float
    gap_after: float
    delta_after: float
    note: str = ""


def default_box(T: float) -> SpaceTimeBox:
    return SpaceTimeBox(0.15 * T, 0.85 * T, 0.1, 0.9, 0.1, 0.9)


def improvement_step(
    sub: SubsolutionState,
    seed: int = 0,
    n: int = 8,
    box: SpaceTimeBox | None = None,
) -> tuple[SubsolutionState, ImprovementReport]:
    """One convex-integration improvement: perturb (velocity, flux) with an
    oscillatory pair generated at energy level E - delta/2, recompute the
    mean momentum and stress for the perturbed velocity, and re-certify at the
    halved margin.  Rejected steps leave the state unchanged."""
    gap_before = energy_gap(sub)
    if gap_before >= -1e-14:
        return sub, ImprovementReport(False, gap_before, gap_before, sub.delta, "zero gap")
    if box is None:
        box = default_box(float(sub.times[-1]))

    g_stack = SpaceTimeField(sub.grid, sub.times, sub.total_momentum_stack(), kind="vector")
    W = SpaceTimeField(
        sub.grid, sub.times, sub.flux.values + sub.stress.values, kind="symtraceless"
    )
    e_level = SpaceTimeField(
        sub.grid, sub.times, sub.kinetic_energy.values - 0.5 * sub.delta, kind="scalar"
    )
    pair = oscillatory_pair(g_stack, W, sub.height, e_level, n, box, seed=seed)
    if pair.degenerate:
        return sub, ImprovementReport(
            False, gap_before, gap_before, sub.delta, "degenerate gap"
        )

    v_new = SpaceTimeField(
        sub.grid, sub.times, sub.velocity.values + pair.w.values, kind="vector"
    )
    flux_new = SpaceTimeField(
        sub.grid, sub.times, sub.flux.values + pair.G.values, kind="symtraceless"
    )
    e_min = E_MIN_FACTOR * float(np.max(np.abs(sub.energy_offset)))
    parts_V0 = sub.mean_momentum[0]
    try:
        V_new = solve_mean_momentum(
            v_new, sub.kinetic_energy, sub.height, sub.potential,
            sub.friction, sub.force, parts_V0, e_min,
        )
        M_new = solve_stress(
            v_new, V_new, sub.kinetic_energy, sub.height, sub.potential,
            sub.friction, sub.force, e_min,
        )
    except EnergyPositivityError as exc:
        return sub, ImprovementReport(False, gap_before, gap_before, sub.delta, str(exc))

    candidate = replace(
        sub,
        velocity=v_new,
        flux=flux_new,
        mean_momentum=V_new,
        stress=M_new,
        delta=0.5 * sub.delta,
    )
    report = subsolution_certificate(candidate)
    if not report.passed:
        return sub, ImprovementReport(
            False, gap_before, gap_before, sub.delta, "re-certification failed"
        )
    gap_after = energy_gap(candidate)
    if gap_after <= gap_before:
        return sub, ImprovementReport(
            False, gap_before, gap_before, sub.delta, "gap did not improve"
        )
    return candidate, ImprovementReport(True, gap_before, gap_after, candidate.delta)
