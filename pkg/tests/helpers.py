"""Shared constructions for the test suite."""

import numpy as np

from gplab.gp import normalize_orbital
from gplab.lattice import Field, build_grid


def random_orbital(grid, rng) -> Field:
    raw = rng.standard_normal(grid.npoints) + 1j * rng.standard_normal(grid.npoints)
    return normalize_orbital(Field(raw, grid))


def random_weight_values(n, rng) -> np.ndarray:
    return rng.uniform(0.0, 2.0, n + 1)


def gaussian_pair(grid, width=1.0):
    """A normalized orbital and an exactly orthogonal partner on the grid."""
    x = grid.points
    phi = normalize_orbital(Field(np.exp(-x * x / (4.0 * width * width)), grid))
    chi_raw = x * np.exp(-x * x / (4.0 * width * width)).astype(np.complex128)
    overlap = grid.spacing * np.vdot(phi.values, chi_raw)
    chi = normalize_orbital(Field(chi_raw - overlap * phi.values, grid))
    return phi, chi


def tensor_dist(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def small_grid(m=4, length=4.0):
    return build_grid(m, length)
