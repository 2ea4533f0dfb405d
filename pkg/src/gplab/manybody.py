"""Exact N-boson states: tensor representation, Hamiltonian action, Strang propagation.

A state is the full rank-N amplitude tensor over the grid, kept permutation
symmetric and normalized in the quadrature norm h^(N/2) * ||tensor||_2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import MemoryGuardError, ValidationError
from .lattice import Field, Grid, pair_interaction_matrix, quad_inner, same_grid

__all__ = [
    "ManyBodyState",
    "TrapSpec",
    "MEMORY_GUARD_AMPLITUDES",
    "product_state",
    "symmetrize",
    "perturbed_state",
    "random_symmetric_state",
    "apply_hamiltonian",
    "propagate_many_body",
    "check_memory_guard",
]

MEMORY_GUARD_AMPLITUDES = 2 ** 27

TRAP_KINDS = ("none", "harmonic", "harmonic-ramped")


def check_memory_guard(npoints: int, n: int) -> None:
    amplitudes = npoints ** n
    if amplitudes > MEMORY_GUARD_AMPLITUDES:
        raise MemoryGuardError(
            f"state tensor would hold {npoints}^{n} = {amplitudes} amplitudes, "
            f"above the hard limit of 2^27 = {MEMORY_GUARD_AMPLITUDES}")


@dataclass(frozen=True)
class TrapSpec:
    """External trap A^t(x); 'harmonic-ramped' interpolates the frequency linearly."""

    kind: str = "none"
    omega: float = 0.0
    omega_start: float = 0.0
    omega_end: float = 0.0
    ramp_time: float = 0.0

    def __post_init__(self):
        if self.kind not in TRAP_KINDS:
            raise ValidationError(f"unknown trap kind {self.kind!r}; expected one of {TRAP_KINDS}")
        if self.kind == "harmonic-ramped" and not self.ramp_time > 0:
            raise ValidationError("ramped trap needs ramp_time > 0")

    @property
    def time_dependent(self) -> bool:
        return self.kind == "harmonic-ramped"

    def frequency(self, t: float) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "harmonic":
            return self.omega
        s = min(max(t / self.ramp_time, 0.0), 1.0)
        return self.omega_start + s * (self.omega_end - self.omega_start)

    def potential(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        """A^t sampled on the grid: 0.5 * omega(t)^2 * x^2 (zero for kind 'none')."""
        if self.kind == "none":
            return np.zeros(grid.npoints)
        w = self.frequency(t)
        return 0.5 * w * w * grid.points ** 2


@dataclass(frozen=True, eq=False)
class ManyBodyState:
    """Normalized symmetric N-particle amplitude tensor of shape (M,)*N."""

    tensor: np.ndarray
    grid: Grid

    def __post_init__(self):
        tensor = np.asarray(self.tensor, dtype=np.complex128)
        if tensor.ndim < 1 or tensor.shape != (self.grid.npoints,) * tensor.ndim:
            raise ValidationError(
                f"tensor shape {tensor.shape} is not (M,)*N for M={self.grid.npoints}")
        object.__setattr__(self, "tensor", tensor)
        self.tensor.setflags(write=False)

    @property
    def n(self) -> int:
        return self.tensor.ndim

    def norm(self) -> float:
        return quad_norm(self.tensor, self.grid)

    def inner(self, other: np.ndarray) -> complex:
        """Quadrature inner product <self, other> on tensors."""
        return complex(self.grid.spacing ** self.n * np.vdot(self.tensor, other))

    def symmetry_defect(self) -> float:
        """Largest amplitude change under any transposition of two particles."""
        worst = 0.0
        for i, j in itertools.combinations(range(self.n), 2):
            worst = max(worst, float(np.max(np.abs(self.tensor - np.swapaxes(self.tensor, i, j)))))
        return worst


def quad_norm(tensor: np.ndarray, grid: Grid) -> float:
    return float(grid.spacing ** (tensor.ndim / 2.0) * np.linalg.norm(tensor.ravel()))


def _normalized(tensor: np.ndarray, grid: Grid) -> np.ndarray:
    nrm = quad_norm(tensor, grid)
    if nrm < 1e-12:
        raise ValidationError("cannot normalize a (numerically) zero tensor")
    return tensor / nrm


def _require_normalized_orbital(phi: Field, tol: float = 1e-12) -> None:
    nrm = math.sqrt(phi.grid.spacing * float(np.sum(np.abs(phi.values) ** 2)))
    if abs(nrm - 1.0) > tol:
        raise ValidationError(f"orbital is not normalized: quadrature norm {nrm!r}")


def product_state(phi: Field, n: int) -> ManyBodyState:
    """|phi>^(x)N, the fully condensed state."""
    if n < 1:
        raise ValidationError(f"particle count must be >= 1, got {n}")
    check_memory_guard(phi.grid.npoints, n)
    _require_normalized_orbital(phi)
    tensor = np.ones((), dtype=np.complex128)
    for _ in range(n):
        tensor = np.multiply.outer(tensor, phi.values)
    return ManyBodyState(tensor=_normalized(tensor, phi.grid), grid=phi.grid)


def symmetrize(tensor: np.ndarray, grid: Grid) -> ManyBodyState:
    """Project onto the symmetric sector and renormalize.

    Rejects tensors whose symmetric component is numerically zero.
    """
    tensor = np.asarray(tensor, dtype=np.complex128)
    n = tensor.ndim
    acc = np.zeros_like(tensor)
    for perm in itertools.permutations(range(n)):
        acc += np.transpose(tensor, perm)
    acc /= math.factorial(n)
    if quad_norm(acc, grid) < 1e-12:
        raise ValidationError("tensor has no symmetric component to 1e-12")
    return ManyBodyState(tensor=_normalized(acc, grid), grid=grid)


def perturbed_state(phi: Field, chi: Field, eps: float, n: int) -> ManyBodyState:
    """Condensate with a single-defect admixture of weight eps^2.

    sqrt(1-eps^2) phi^N + eps * Sym(chi phi^(N-1)), with chi orthogonal to phi;
    the one-defect sector then carries weight exactly eps^2.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"defect amplitude must lie in [0, 1], got {eps}")
    check_memory_guard(phi.grid.npoints, n)
    _require_normalized_orbital(phi)
    _require_normalized_orbital(chi, tol=1e-9)
    overlap = quad_inner(phi, chi)
    if abs(overlap) > 1e-10:
        raise ValidationError(f"chi is not orthogonal to phi: <phi, chi> = {overlap!r}")
    base = product_state(phi, n).tensor
    one_defect = np.zeros_like(base)
    for j in range(n):
        factors = [phi.values] * n
        factors[j] = chi.values
        term = np.ones((), dtype=np.complex128)
        for f in factors:
            term = np.multiply.outer(term, f)
        one_defect += term
    one_defect /= math.sqrt(n)
    tensor = math.sqrt(1.0 - eps * eps) * base + eps * one_defect
    return ManyBodyState(tensor=_normalized(tensor, phi.grid), grid=phi.grid)


def random_symmetric_state(grid: Grid, n: int, rng: np.random.Generator) -> ManyBodyState:
    """Normalized symmetric state with iid complex gaussian raw amplitudes."""
    shape = (grid.npoints,) * n
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return symmetrize(raw, grid)


def _pair_sum_diagonal(v2: np.ndarray, n: int) -> np.ndarray:
    """sum_{j<k} v2[x_j, x_k] as a full diagonal tensor of shape (M,)*n."""
    m = v2.shape[0]
    total = np.zeros((m,) * n)
    for j, k in itertools.combinations(range(n), 2):
        shape = [1] * n
        shape[j] = m
        shape[k] = m
        total = total + v2.reshape(shape)
    return total


def _onebody_sum_diagonal(values: np.ndarray, n: int) -> np.ndarray:
    m = values.shape[0]
    total = np.zeros((m,) * n)
    for j in range(n):
        shape = [1] * n
        shape[j] = m
        total = total + values.reshape(shape)
    return total


def _kinetic_symbol(grid: Grid, n: int) -> np.ndarray:
    """sum_j k_j^2 over all particle axes (Fourier multiplier of -sum Laplacians)."""
    return _onebody_sum_diagonal(grid.wavenumbers ** 2, n)


def apply_hamiltonian(psi: ManyBodyState, v: Field | None, trap: TrapSpec,
                      t: float = 0.0) -> np.ndarray:
    """H psi = (-sum_j Lap_j + sum_{j<k} v(x_j-x_k) + sum_j A^t(x_j)) psi.

    Returns the raw tensor; linear, so unnormalized input is fine.
    """
    grid = psi.grid
    n = psi.n
    if v is not None and not same_grid(v.grid, grid):
        raise ValidationError("interaction field lives on a different grid")
    out = np.fft.ifftn(_kinetic_symbol(grid, n) * np.fft.fftn(psi.tensor))
    if v is not None:
        out = out + _pair_sum_diagonal(pair_interaction_matrix(v), n) * psi.tensor
    if trap.kind != "none":
        out = out + _onebody_sum_diagonal(trap.potential(grid, t), n) * psi.tensor
    return out


def propagate_many_body(psi: ManyBodyState, v: Field | None, trap: TrapSpec,
                        dt: float, steps: int, t0: float = 0.0) -> ManyBodyState:
    """Strang-split propagation by `steps` intervals of length dt from time t0.

    Half-step diagonal phase (interaction + trap at the interval midpoint),
    full spectral kinetic step, half-step diagonal phase. Every factor is
    unitary, so norm and symmetry are conserved to rounding.
    """
    if not dt > 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    grid = psi.grid
    n = psi.n
    tensor = np.array(psi.tensor)
    kinetic_phase = np.exp(-1j * dt * _kinetic_symbol(grid, n))
    static_diag = np.zeros((grid.npoints,) * n)
    if v is not None:
        static_diag = static_diag + _pair_sum_diagonal(pair_interaction_matrix(v), n)
    if trap.kind != "none" and not trap.time_dependent:
        static_diag = static_diag + _onebody_sum_diagonal(trap.potential(grid, 0.0), n)
    half_phase = np.exp(-0.5j * dt * static_diag)
    for step in range(steps):
        if trap.time_dependent:
            t_mid = t0 + (step + 0.5) * dt
            phase = half_phase * np.exp(
                -0.5j * dt * _onebody_sum_diagonal(trap.potential(grid, t_mid), n))
        else:
            phase = half_phase
        tensor *= phase
        tensor = np.fft.ifftn(kinetic_phase * np.fft.fftn(tensor))
        tensor *= phase
    return ManyBodyState(tensor=tensor, grid=grid)
