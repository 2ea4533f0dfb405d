"""Dense-matrix oracles for small systems.

Every fast-path operation has a twin here built from explicit M^N x M^N
matrices: spectral Laplacian columns, Kronecker-embedded projectors, literal
sector sums, eigendecomposition propagation. Intended for tests; all entry
points enforce small sizes through the amplitude count.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ValidationError
from .lattice import Field, Grid, pair_interaction_matrix
from .manybody import TrapSpec, _pair_sum_diagonal, _onebody_sum_diagonal
from .projector import shift_table

__all__ = [
    "dense_laplacian",
    "dense_hamiltonian",
    "dense_gp_hamiltonian",
    "dense_propagate",
    "dense_projector",
    "embed_one_body",
    "dense_sector_projector",
    "dense_weight_operator",
    "dense_pair_multiplier",
    "quad_expectation",
]

DENSE_MAX_DIM = 4096


def _check_dim(dim: int) -> None:
    if dim > DENSE_MAX_DIM:
        raise ValidationError(f"dense oracle limited to dimension {DENSE_MAX_DIM}, got {dim}")


def dense_laplacian(grid: Grid) -> np.ndarray:
    """Spectral Laplacian as an explicit M x M matrix."""
    eye = np.eye(grid.npoints, dtype=np.complex128)
    return np.fft.ifft(-(grid.wavenumbers[:, None] ** 2) * np.fft.fft(eye, axis=0), axis=0)


def embed_one_body(op: np.ndarray, n: int, j: int) -> np.ndarray:
    """Kronecker-embed a one-particle operator at particle j (1-based)."""
    m = op.shape[0]
    _check_dim(m ** n)
    out = np.eye(1, dtype=np.complex128)
    for axis in range(n):
        out = np.kron(out, op if axis == j - 1 else np.eye(m, dtype=np.complex128))
    return out


def dense_projector(phi: Field) -> np.ndarray:
    """One-particle p = |phi><phi| under the quadrature pairing."""
    return phi.grid.spacing * np.outer(phi.values, np.conj(phi.values))


def dense_hamiltonian(grid: Grid, n: int, v: Field | None, trap: TrapSpec,
                      t: float = 0.0) -> np.ndarray:
    """Full many-body Hamiltonian matrix on M^n amplitudes."""
    m = grid.npoints
    _check_dim(m ** n)
    lap = dense_laplacian(grid)
    out = np.zeros((m ** n, m ** n), dtype=np.complex128)
    for j in range(1, n + 1):
        out -= embed_one_body(lap, n, j)
    if v is not None:
        out += np.diag(_pair_sum_diagonal(pair_interaction_matrix(v), n).ravel())
    if trap.kind != "none":
        out += np.diag(_onebody_sum_diagonal(trap.potential(grid, t), n).ravel())
    return out


def dense_gp_hamiltonian(grid: Grid, n: int, phi: Field, a: float, trap: TrapSpec,
                         t: float = 0.0) -> np.ndarray:
    """Sum of one-particle mean-field Hamiltonians -Lap + A + a |phi|^2."""
    m = grid.npoints
    _check_dim(m ** n)
    one = -dense_laplacian(grid) + np.diag(trap.potential(grid, t)
                                           + a * np.abs(phi.values) ** 2)
    out = np.zeros((m ** n, m ** n), dtype=np.complex128)
    for j in range(1, n + 1):
        out += embed_one_body(one, n, j)
    return out


def dense_propagate(hamiltonian: np.ndarray, tensor: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) applied through an exact eigendecomposition."""
    herm_defect = float(np.max(np.abs(hamiltonian - np.conj(hamiltonian.T))))
    if herm_defect > 1e-9:
        raise ValidationError(f"oracle needs a Hermitian matrix; defect {herm_defect:g}")
    energies, modes = np.linalg.eigh(0.5 * (hamiltonian + np.conj(hamiltonian.T)))
    vec = modes @ (np.exp(-1j * energies * t) * (np.conj(modes.T) @ tensor.ravel()))
    return vec.reshape(tensor.shape)


def dense_sector_projector(phi: Field, n: int, j: int, k: int) -> np.ndarray:
    """P_{j,k} as a literal sum of p/q Kronecker products on the last j particles."""
    m = phi.grid.npoints
    _check_dim(m ** n)
    if k < 0 or k > j:
        return np.zeros((m ** n, m ** n), dtype=np.complex128)
    p = dense_projector(phi)
    q = np.eye(m, dtype=np.complex128) - p
    eye = np.eye(m, dtype=np.complex128)
    total = np.zeros((m ** n, m ** n), dtype=np.complex128)
    slots = list(range(n - j, n))
    for defect_slots in itertools.combinations(slots, k):
        term = np.eye(1, dtype=np.complex128)
        for axis in range(n):
            if axis not in slots:
                factor = eye
            elif axis in defect_slots:
                factor = q
            else:
                factor = p
            term = np.kron(term, factor)
        total += term
    return total


def dense_weight_operator(phi: Field, n: int, values: np.ndarray, d: int = 0) -> np.ndarray:
    """sum_k f(k+d) P_k with the out-of-range-zero shift convention."""
    table = shift_table(np.asarray(values, dtype=np.float64), d)
    m = phi.grid.npoints
    out = np.zeros((m ** n, m ** n), dtype=np.complex128)
    for k in range(n + 1):
        if table[k] != 0.0:
            out += table[k] * dense_sector_projector(phi, n, n, k)
    return out


def dense_pair_multiplier(w: np.ndarray, n: int) -> np.ndarray:
    """Diagonal operator w(x_1, x_2) acting on the first two particles."""
    m = w.shape[0]
    _check_dim(m ** n)
    diag = np.zeros((m,) * n)
    shape = [1] * n
    shape[0] = m
    shape[1] = m
    diag = diag + np.asarray(w).reshape(shape)
    return np.diag(diag.ravel()).astype(np.complex128)


def quad_expectation(tensor: np.ndarray, op: np.ndarray, grid: Grid) -> complex:
    """<psi, Op psi> with the quadrature weight h^N."""
    vec = tensor.ravel()
    return complex(grid.spacing ** tensor.ndim * np.vdot(vec, op @ vec))
