"""Defect-counting formalism: orbital projectors, sector projectors, weight operators.

For a condensate orbital phi, p_j projects particle j onto phi and q_j = 1 - p_j.
The sector projector P_k picks out states with exactly k particles orthogonal to
phi ("defects"). Weight operators act as f(k) on sector k; shifted variants act
as f(k+d) with the convention that out-of-range arguments contribute zero.

The fast path diagonalizes every sector projector at once by rotating each
particle axis into an orthonormal basis whose first vector is phi; the defect
count of a rotated index tuple is simply the number of nonzero entries. A
literal sum over defect configurations is kept as a brute-force oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .lattice import Field
from .manybody import ManyBodyState

__all__ = [
    "WeightFunction",
    "SectorBasis",
    "SectorDecomposition",
    "orthonormal_completion",
    "apply_p",
    "apply_q",
    "sector_decompose",
    "sector_weights",
    "brute_force_sector",
    "apply_weight",
    "m_lambda_values",
    "shift_table",
    "alpha_lambda",
    "n_hat_squared_expectation",
    "n_hat_squared_qsum",
    "reduced_density",
    "density_distances",
]

BRUTE_FORCE_MAX_N = 5
BRUTE_FORCE_MAX_M = 6


def orthonormal_completion(phi: Field) -> np.ndarray:
    """Quadrature-orthonormal basis of the one-particle space, first column phi.

    Deterministic Householder construction; the returned matrix B satisfies
    h * B^dag B = identity and B[:, 0] == phi.values.
    """
    h = phi.grid.spacing
    u = math.sqrt(h) * phi.values
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > 1e-10:
        raise ValidationError(f"orbital is not normalized: quadrature norm {nrm!r}")
    u = u / nrm
    m = u.shape[0]
    lead = u[0]
    alpha = lead / abs(lead) if abs(lead) > 1e-14 else 1.0
    c = np.conj(alpha) * u
    w = c.copy()
    w[0] -= 1.0
    ww = float(np.real(np.vdot(w, w)))
    unitary = np.eye(m, dtype=np.complex128)
    if ww > 1e-28:
        unitary -= (2.0 / ww) * np.outer(w, np.conj(w))
    unitary *= alpha
    return unitary / math.sqrt(h)


@lru_cache(maxsize=None)
def _defect_counts(m: int, n: int) -> np.ndarray:
    counts = np.zeros((m,) * n, dtype=np.int64)
    marker = (np.arange(m) > 0).astype(np.int64)
    for axis in range(n):
        shape = [1] * n
        shape[axis] = m
        counts = counts + marker.reshape(shape)
    counts.setflags(write=False)
    return counts


class SectorBasis:
    """Per-particle rotation that sends phi to basis index 0."""

    def __init__(self, phi: Field):
        self.grid = phi.grid
        self.phi = phi
        self.basis = orthonormal_completion(phi)
        self._forward = self.grid.spacing * np.conj(self.basis)

    def coefficients(self, tensor: np.ndarray) -> np.ndarray:
        """Expansion coefficients of a tensor in the rotated product basis."""
        out = tensor
        for _ in range(tensor.ndim):
            out = np.tensordot(out, self._forward, axes=([0], [0]))
        return out

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        out = coeffs
        for _ in range(coeffs.ndim):
            out = np.tensordot(out, self.basis, axes=([0], [1]))
        return out

    def defect_counts(self, n: int) -> np.ndarray:
        return _defect_counts(self.grid.npoints, n)


@dataclass(frozen=True, eq=False)
class SectorDecomposition:
    """State expressed in the rotated basis, with per-index defect counts."""

    basis: SectorBasis
    coefficients: np.ndarray
    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.coefficients.ndim

    def weights(self) -> np.ndarray:
        """||P_k psi||^2 for k = 0..N (sums to ||psi||^2)."""
        density = np.abs(self.coefficients) ** 2
        return np.bincount(self.counts.ravel(), weights=density.ravel(),
                           minlength=self.n + 1)

    def component(self, k: int) -> np.ndarray:
        """P_k psi back in position space (zero tensor for out-of-range k)."""
        if k < 0 or k > self.n:
            return np.zeros_like(self.coefficients)
        return self.basis.reconstruct(self.coefficients * (self.counts == k))

    def apply_values(self, table: np.ndarray) -> np.ndarray:
        """sum_k table[k] P_k psi for a length-(N+1) value table."""
        table = np.asarray(table, dtype=np.float64)
        if table.shape != (self.n + 1,):
            raise ValidationError(f"weight table must have length {self.n + 1}")
        return self.basis.reconstruct(self.coefficients * table[self.counts])


def sector_decompose(psi: ManyBodyState, phi: Field) -> SectorDecomposition:
    basis = SectorBasis(phi)
    coeffs = basis.coefficients(psi.tensor)
    return SectorDecomposition(basis=basis, coefficients=coeffs,
                               counts=basis.defect_counts(psi.n))


def sector_weights(psi: ManyBodyState, phi: Field) -> np.ndarray:
    return sector_decompose(psi, phi).weights()


def _apply_orbital_projector(tensor: np.ndarray, phi: Field, axis: int) -> np.ndarray:
    """p acting on one particle axis: |phi><phi| under the quadrature pairing."""
    h = phi.grid.spacing
    reduced = np.tensordot(tensor, h * np.conj(phi.values), axes=([axis], [0]))
    return np.moveaxis(np.multiply.outer(reduced, phi.values), -1, axis)


def _particle_axis(psi_ndim: int, j: int) -> int:
    if not 1 <= j <= psi_ndim:
        raise ValidationError(f"particle index {j} out of range 1..{psi_ndim}")
    return j - 1


def apply_p(psi: ManyBodyState | np.ndarray, phi: Field, j: int) -> np.ndarray:
    """p_j psi. Particle indices are 1-based."""
    tensor = psi.tensor if isinstance(psi, ManyBodyState) else np.asarray(psi)
    return _apply_orbital_projector(tensor, phi, _particle_axis(tensor.ndim, j))


def apply_q(psi: ManyBodyState | np.ndarray, phi: Field, j: int) -> np.ndarray:
    """q_j psi = psi - p_j psi."""
    tensor = psi.tensor if isinstance(psi, ManyBodyState) else np.asarray(psi)
    return tensor - _apply_orbital_projector(tensor, phi, _particle_axis(tensor.ndim, j))


def brute_force_sector(psi: ManyBodyState, phi: Field, j: int, k: int) -> np.ndarray:
    """P_{j,k} psi by literal enumeration of defect placements on the last j particles.

    Oracle twin of the rotated fast path; guarded to small systems.
    """
    n = psi.n
    m = psi.grid.npoints
    if n > BRUTE_FORCE_MAX_N or m > BRUTE_FORCE_MAX_M:
        raise ValidationError(
            f"brute-force oracle is limited to N <= {BRUTE_FORCE_MAX_N}, "
            f"M <= {BRUTE_FORCE_MAX_M}; got N={n}, M={m}")
    if not 0 <= j <= n:
        raise ValidationError(f"projector acts on the last j particles; j={j} invalid for N={n}")
    if k < 0 or k > j:
        return np.zeros_like(psi.tensor)
    axes = list(range(n - j, n))
    total = np.zeros_like(psi.tensor)
    for defect_axes in itertools.combinations(axes, k):
        term = psi.tensor
        for axis in axes:
            if axis in defect_axes:
                term = term - _apply_orbital_projector(term, phi, axis)
            else:
                term = _apply_orbital_projector(term, phi, axis)
        total += term
    return total


@dataclass(frozen=True)
class WeightFunction:
    """Nonnegative weight table f(0..N) for building sector-diagonal operators."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValidationError("weight table must be a nonempty 1-d sequence")
        if np.any(values < 0):
            raise ValidationError("weight values must be nonnegative")
        object.__setattr__(self, "values", values)
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size - 1

    def __call__(self, k: int) -> float:
        if k < 0 or k > self.n:
            return 0.0
        return float(self.values[k])

    def shifted_values(self, d: int = 0) -> np.ndarray:
        """Table of f(k+d) over k = 0..N, zero where k+d falls outside 0..N."""
        return shift_table(self.values, d)

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "WeightFunction":
        return cls(np.full(n + 1, value))

    @classmethod
    def m_lambda(cls, n: int, lam: float) -> "WeightFunction":
        return cls(m_lambda_values(n, lam))

    @classmethod
    def n_relative(cls, n: int) -> "WeightFunction":
        return cls(np.sqrt(np.arange(n + 1) / n))


def shift_table(values: np.ndarray, d: int) -> np.ndarray:
    """values[k+d] over k = 0..N with zeros outside the valid index range."""
    values = np.asarray(values, dtype=np.float64)
    size = values.size
    out = np.zeros(size)
    lo = max(0, -d)
    hi = min(size, size - d)
    if lo < hi:
        out[lo:hi] = values[lo + d:hi + d]
    return out


def m_lambda_values(n: int, lam: float) -> np.ndarray:
    """Saturating counting weight: k / n^lam below n^lam, then 1."""
    if not 0.0 < lam < 1.0:
        raise ValidationError(f"lambda must lie in (0, 1), got {lam}")
    threshold = float(n) ** lam
    k = np.arange(n + 1, dtype=np.float64)
    return np.where(k <= threshold, k / threshold, 1.0)


def apply_weight(psi: ManyBodyState | np.ndarray, phi: Field,
                 f: WeightFunction | np.ndarray, d: int = 0) -> np.ndarray:
    """Weight operator: sum_k f(k+d) P_k psi."""
    tensor = psi.tensor if isinstance(psi, ManyBodyState) else np.asarray(psi)
    if isinstance(f, WeightFunction):
        table = f.shifted_values(d)
    else:
        table = shift_table(np.asarray(f, dtype=np.float64), d)
    if table.shape != (tensor.ndim + 1,):
        raise ValidationError(
            f"weight table length {table.size} does not match {tensor.ndim} particles")
    basis = SectorBasis(phi)
    coeffs = basis.coefficients(tensor)
    counts = basis.defect_counts(tensor.ndim)
    return basis.reconstruct(coeffs * table[counts])


def alpha_lambda(psi: ManyBodyState, phi: Field, lam: float) -> float:
    """Counting functional: expectation of the saturating defect weight."""
    weights = sector_weights(psi, phi)
    return float(np.dot(m_lambda_values(psi.n, lam), weights))


def n_hat_squared_expectation(psi: ManyBodyState, phi: Field) -> float:
    """Expected defect fraction <psi, (n_hat)^2 psi> = sum_k (k/N) ||P_k psi||^2."""
    weights = sector_weights(psi, phi)
    n = psi.n
    return float(np.dot(np.arange(n + 1) / n, weights))


def n_hat_squared_qsum(psi: ManyBodyState, phi: Field) -> float:
    """Same observable evaluated as N^-1 sum_j <psi, q_j psi> (independent path)."""
    n = psi.n
    total = 0.0
    for j in range(1, n + 1):
        total += np.real(psi.inner(apply_q(psi, phi, j)))
    return float(total / n)


def reduced_density(psi: ManyBodyState) -> np.ndarray:
    """One-particle marginal density matrix, quadrature trace one."""
    m = psi.grid.npoints
    flat = psi.tensor.reshape(m, -1)
    return psi.grid.spacing ** (psi.n - 1) * (flat @ np.conj(flat.T))


def density_distances(mu: np.ndarray, phi: Field) -> tuple[float, float]:
    """Operator-norm and trace-norm distance of mu from the pure state |phi><phi|.

    Distances are taken in the quadrature geometry, where both matrices act as
    integral kernels h * sum_y K[x, y] f(y).
    """
    mu = np.asarray(mu, dtype=np.complex128)
    herm_defect = float(np.max(np.abs(mu - np.conj(mu.T))))
    if herm_defect > 1e-8:
        raise ValidationError(f"density matrix is not Hermitian: defect {herm_defect:g}")
    h = phi.grid.spacing
    delta = h * (mu - np.outer(phi.values, np.conj(phi.values)))
    delta = 0.5 * (delta + np.conj(delta.T))
    eigs = np.linalg.eigvalsh(delta)
    return float(np.max(np.abs(eigs))), float(np.sum(np.abs(eigs)))
