"""Mean-field side: coupling constant, cubic split-step flow, orbital diagnostics.

The flow integrates i d phi/dt = (-Lap + A^t + a |phi|^2) phi with a spectral
kinetic step between diagonal half-steps, sharing the time grid (and the trap
midpoint rule) with the many-body propagator so coupled runs stay synchronized.
This sign convention is the unique one under which the counting functional's
derivative identity holds along coupled runs (see functionals); flipping the
potential or kinetic signs breaks the exact cancellation the check verifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lattice import Field, Grid, quad_inner, spectral_laplacian
from .manybody import TrapSpec

__all__ = [
    "GpTrajectory",
    "OrbitalDiagnostics",
    "coupling_constant",
    "propagate_gp",
    "orbital_diagnostics",
    "gp_energy",
    "normalize_orbital",
    "gaussian_orbital",
    "plane_wave_orbital",
    "harmonic_ground_orbital",
    "orthogonal_excited_orbital",
]


def coupling_constant(v: Field) -> float:
    """Signed quadrature integral of the interaction (no absolute value)."""
    imag = float(np.max(np.abs(np.imag(v.values))))
    if imag > 1e-12:
        raise ValidationError(f"interaction must be real; imaginary part up to {imag:g}")
    return v.grid.spacing * float(np.sum(np.real(v.values)))


def normalize_orbital(field: Field) -> Field:
    nrm = math.sqrt(field.grid.spacing * float(np.sum(np.abs(field.values) ** 2)))
    if nrm < 1e-300:
        raise ValidationError("cannot normalize a zero orbital")
    return Field(values=field.values / nrm, grid=field.grid)


def gaussian_orbital(grid: Grid, width: float, center: float = 0.0) -> Field:
    """Normalized gaussian with |phi|^2 of standard deviation `width`."""
    x = grid.points - center
    return normalize_orbital(Field(np.exp(-x * x / (4.0 * width * width)), grid))


def plane_wave_orbital(grid: Grid, mode: int = 0) -> Field:
    """exp(2 pi i mode x / L) / sqrt(L); exactly normalized and flat."""
    phase = 2.0 * np.pi * mode * grid.points / grid.length
    return Field(np.exp(1j * phase) / math.sqrt(grid.length), grid)


def harmonic_ground_orbital(grid: Grid, omega: float) -> Field:
    """Ground profile of -Lap + 0.5 omega^2 x^2 (gaussian with matched width)."""
    if not omega > 0:
        raise ValidationError(f"trap frequency must be positive, got {omega}")
    return gaussian_orbital(grid, width=1.0 / math.sqrt(math.sqrt(2.0) * omega))


def orthogonal_excited_orbital(phi: Field, width: float | None = None) -> Field:
    """First-excited-style profile x * gaussian, Gram-Schmidt orthogonalized to phi."""
    grid = phi.grid
    if width is None:
        width = max(grid.length / 8.0, 2.0 * grid.spacing)
    x = grid.points
    raw = x * np.exp(-x * x / (4.0 * width * width)).astype(np.complex128)
    raw = raw - quad_inner(phi, Field(raw, grid)) * phi.values
    return normalize_orbital(Field(raw, grid))


@dataclass(frozen=True, eq=False)
class GpTrajectory:
    """Orbitals stored at uniformly spaced sample times."""

    times: np.ndarray
    orbitals: list[Field]

    def __len__(self) -> int:
        return len(self.orbitals)

    def __getitem__(self, i: int) -> Field:
        return self.orbitals[i]


def gp_step(values: np.ndarray, grid: Grid, a: float, trap: TrapSpec,
            dt: float, t: float, kinetic_phase: np.ndarray) -> np.ndarray:
    """One Strang step; nonlinear phase uses the instantaneous density."""
    t_mid = t + 0.5 * dt
    trap_pot = trap.potential(grid, t_mid)
    values = values * np.exp(-0.5j * dt * (trap_pot + a * np.abs(values) ** 2))
    values = np.fft.ifft(kinetic_phase * np.fft.fft(values))
    values = values * np.exp(-0.5j * dt * (trap_pot + a * np.abs(values) ** 2))
    return values


def propagate_gp(phi: Field, a: float, trap: TrapSpec, dt: float, steps: int,
                 t0: float = 0.0, sample_every: int = 1) -> GpTrajectory:
    """Propagate the condensate orbital, storing every `sample_every`-th state."""
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    if sample_every < 1:
        raise ValidationError("sample_every must be >= 1")
    grid = phi.grid
    kinetic_phase = np.exp(-1j * dt * grid.wavenumbers ** 2)
    values = np.array(phi.values)
    times = [t0]
    orbitals = [phi]
    for step in range(steps):
        values = gp_step(values, grid, a, trap, dt, t0 + step * dt, kinetic_phase)
        if (step + 1) % sample_every == 0:
            times.append(t0 + (step + 1) * dt)
            orbitals.append(Field(values.copy(), grid))
    return GpTrajectory(times=np.array(times), orbitals=orbitals)


@dataclass(frozen=True)
class OrbitalDiagnostics:
    """Sup norm and the L2 size of the density curvature, the envelope inputs."""

    linf: float
    laplacian_density_l2: float


def orbital_diagnostics(phi: Field) -> OrbitalDiagnostics:
    density = np.abs(phi.values) ** 2
    lap = spectral_laplacian(density, phi.grid)
    l2 = math.sqrt(phi.grid.spacing * float(np.sum(np.abs(lap) ** 2)))
    return OrbitalDiagnostics(linf=float(np.max(np.abs(phi.values))), laplacian_density_l2=l2)


def gp_energy(phi: Field, a: float, trap: TrapSpec, t: float = 0.0) -> float:
    """<phi, -Lap phi> + integral A |phi|^2 + (a/2) integral |phi|^4."""
    grid = phi.grid
    h = grid.spacing
    density = np.abs(phi.values) ** 2
    kinetic = -h * float(np.real(np.vdot(phi.values, spectral_laplacian(phi.values, grid))))
    potential = h * float(np.sum(trap.potential(grid, t) * density))
    nonlinear = 0.5 * a * h * float(np.sum(density ** 2))
    return kinetic + potential + nonlinear
