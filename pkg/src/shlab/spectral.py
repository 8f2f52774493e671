"""DFT-based derivatives and elliptic solves on the unit torus.

Cell-center samples are treated as collocation values of the trigonometric
interpolant.  All solves are diagonal per wavevector; the zero mode is fixed
by a zero-mean gauge.  The Nyquist mode is zeroed for odd derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SolvabilityError
from .fields import ScalarField, SymTracelessField, TorusGrid, VectorField

#: mean-freeness tolerance for torus solvability; inputs within it are
#: mean-corrected, beyond it rejected
MEAN_TOL = 1e-10


@lru_cache(maxsize=32)
def _wavenumbers(nx: int, ny: int):
    """(k1, k2, k1d, k2d, k2sum): angular wavenumbers on the (nx, ny) grid.

    k1/k2 include the Nyquist mode (for even derivatives and Laplacians),
    k1d/k2d have it zeroed (for odd derivatives).  k2sum = k1^2 + k2^2.
    """
    k1 = 2.0 * np.pi * np.fft.fftfreq(nx, d=1.0 / nx)[:, None]
    k2 = 2.0 * np.pi * np.fft.fftfreq(ny, d=1.0 / ny)[None, :]
    k1d = k1.copy()
    k2d = k2.copy()
    k1d[nx // 2, 0] = 0.0
    k2d[0, ny // 2] = 0.0
    k2sum = k1 * k1 + k2 * k2
    return k1, k2, np.broadcast_to(k1d, (nx, ny)), np.broadcast_to(k2d, (nx, ny)), k2sum


def grad_values(f: np.ndarray) -> np.ndarray:
    """Spectral gradient of a scalar sample array, shape (2, nx, ny)."""
    nx, ny = f.shape
    _, _, k1d, k2d, _ = _wavenumbers(nx, ny)
    fh = np.fft.fft2(f)
    out = np.empty((2, nx, ny))
    out[0] = np.real(np.fft.ifft2(1j * k1d * fh))
    out[1] = np.real(np.fft.ifft2(1j * k2d * fh))
    return out


def div_values(q: np.ndarray) -> np.ndarray:
    """Spectral divergence of a (2, nx, ny) sample array."""
    nx, ny = q.shape[1:]
    _, _, k1d, k2d, _ = _wavenumbers(nx, ny)
    qh1 = np.fft.fft2(q[0])
    qh2 = np.fft.fft2(q[1])
    return np.real(np.fft.ifft2(1j * k1d * qh1 + 1j * k2d * qh2))


def laplacian_values(f: np.ndarray) -> np.ndarray:
    nx, ny = f.shape
    _, _, _, _, k2sum = _wavenumbers(nx, ny)
    return np.real(np.fft.ifft2(-k2sum * np.fft.fft2(f)))


def div_traceless_values(ps: np.ndarray) -> np.ndarray:
    """Divergence of [[p, s], [s, -p]] given (2, nx, ny) samples (p, s).

    Row-wise: (d1 p + d2 s, d1 s - d2 p).
    """
    gp = grad_values(ps[0])
    gs = grad_values(ps[1])
    out = np.empty_like(ps)
    out[0] = gp[0] + gs[1]
    out[1] = gs[0] - gp[1]
    return out


def spectral_grad(f: ScalarField) -> VectorField:
    """Exact gradient of the trigonometric interpolant of f."""
    return VectorField(f.grid, grad_values(f.values))


def spectral_div(q: VectorField) -> ScalarField:
    """Exact divergence of the trigonometric interpolant of q."""
    return ScalarField(q.grid, div_values(q.values))


def spectral_div_traceless(m: SymTracelessField) -> VectorField:
    """Divergence of a symmetric traceless tensor field."""
    return VectorField(m.grid, div_traceless_values(m.values))


def _demean(values: np.ndarray, what: str) -> np.ndarray:
    mean = float(np.mean(values))
    if abs(mean) > MEAN_TOL:
        raise SolvabilityError(
            f"{what} must be mean-free on the torus (|mean| = {abs(mean):.3e} > {MEAN_TOL:g})"
        )
    return values - mean


def poisson_solve_values(rhs: np.ndarray) -> np.ndarray:
    """Solve -Lap(psi) = rhs with zero mean; rhs must be mean-free."""
    rhs = _demean(rhs, "Poisson right-hand side")
    nx, ny = rhs.shape
    _, _, _, _, k2sum = _wavenumbers(nx, ny)
    rh = np.fft.fft2(rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(k2sum > 0.0, rh / k2sum, 0.0)
    return np.real(np.fft.ifft2(ph))


def poisson_solve(rhs: ScalarField) -> ScalarField:
    return ScalarField(rhs.grid, poisson_solve_values(rhs.values))


@dataclass(frozen=True)
class HelmholtzParts:
    """q = v + Vmean + grad(psi): divergence-free mean-zero v, spatial mean
    Vmean, mean-zero potential psi."""

    v: VectorField
    Vmean: np.ndarray  # shape (2,)
    psi: ScalarField


def helmholtz_decompose(q: VectorField) -> HelmholtzParts:
    """Unique L2-orthogonal splitting of a periodic vector field."""
    grid = q.grid
    Vmean = np.array([float(np.mean(q.values[0])), float(np.mean(q.values[1]))])
    # grad(psi) is the curl-free mean-zero part: -Lap(psi) = -div q
    div_q = div_values(q.values)
    psi = poisson_solve_values(-(div_q - np.mean(div_q)))
    gpsi = grad_values(psi)
    v = q.values.copy()
    v[0] -= Vmean[0] + gpsi[0]
    v[1] -= Vmean[1] + gpsi[1]
    return HelmholtzParts(
        v=VectorField(grid, v), Vmean=Vmean, psi=ScalarField(grid, psi)
    )


def korn_solve_values(rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve div(grad m + grad^t m - div m I) = rhs with zero-mean m.

    In 2D the operator collapses to the componentwise Laplacian
    (div grad^t m and grad div m cancel), so the solve is a vector Poisson
    problem; each component of rhs must be mean-free.  Returns (m, M) samples
    with M the symmetric traceless tensor (p, s) = (d1 m1 - d2 m2, d1 m2 + d2 m1).
    """
    m = np.empty_like(rhs)
    m[0] = -poisson_solve_values(
        np.asarray(_demean(rhs[0], "stress right-hand side (component 1)"))
    )
    m[1] = -poisson_solve_values(
        np.asarray(_demean(rhs[1], "stress right-hand side (component 2)"))
    )
    g1 = grad_values(m[0])
    g2 = grad_values(m[1])
    M = np.empty_like(rhs)
    M[0] = g1[0] - g2[1]
    M[1] = g2[0] + g1[1]
    return m, M


def korn_solve(rhs: VectorField) -> tuple[VectorField, SymTracelessField]:
    m, M = korn_solve_values(rhs.values)
    return VectorField(rhs.grid, m), SymTracelessField(rhs.grid, M)
