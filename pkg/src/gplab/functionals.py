"""The comparison functionals: h_{1,2}, the derivative functional gamma, term
bounds, the decay exponent, and the exponential error envelope.

gamma is assembled so that along a coupled run (many-body state under the full
Hamiltonian, orbital under the mean-field flow) the counting functional obeys
d alpha / dt = gamma exactly; the finite-difference check in
`alpha_derivative_check` is the executable statement of that identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .gp import GpTrajectory, OrbitalDiagnostics, orbital_diagnostics
from .lattice import Field, pair_interaction_matrix, same_grid
from .manybody import ManyBodyState
from .projector import (
    alpha_lambda,
    apply_p,
    apply_q,
    m_lambda_values,
    sector_decompose,
    shift_table,
)

__all__ = [
    "GammaBreakdown",
    "TermBoundReport",
    "DerivativeCheckRow",
    "EnvelopeParams",
    "EXPONENT_CONVENTIONS",
    "h12_matrix",
    "h12_apply",
    "gamma_lambda",
    "gamma_term_bounds",
    "fit_term_bound_constant",
    "fit_derivative_constant",
    "fit_envelope_constant",
    "alpha_derivative_check",
    "derivative_mismatch",
    "delta_lambda",
    "k_phi",
    "gronwall_envelope",
]

EXPONENT_CONVENTIONS = ("plus", "minus")

# Orientation of the three imaginary parts relative to forward time evolution
# (exp(-iHt) for the state, the matching mean-field flow for the orbital).
# Pinned by the dense commutator oracle in the test suite.
GAMMA_SIGN = -1.0


@dataclass(frozen=True)
class GammaBreakdown:
    """The three summands of the derivative functional and their combination."""

    term_a: float
    term_b: float
    term_c: float

    @property
    def gamma(self) -> float:
        return 2.0 * self.term_a + self.term_b + 2.0 * self.term_c


def h12_matrix(phi: Field, n: int, v: Field | None, a: float) -> np.ndarray:
    """Comparison multiplier on a particle pair:

    N(N-1) v(x1 - x2) - a N |phi|^2(x1) - a N |phi|^2(x2),
    the pair interaction against its mean-field replacement.
    """
    if n < 2:
        raise ValidationError(f"pair comparison needs at least 2 particles, got {n}")
    m = phi.grid.npoints
    density = np.abs(phi.values) ** 2
    out = -a * n * (density[:, None] + density[None, :])
    if v is not None:
        if not same_grid(v.grid, phi.grid):
            raise ValidationError("interaction and orbital live on different grids")
        out = out + n * (n - 1) * pair_interaction_matrix(v)
    return out


def _multiply_pair(tensor: np.ndarray, w: np.ndarray) -> np.ndarray:
    shape = [1] * tensor.ndim
    shape[0] = w.shape[0]
    shape[1] = w.shape[1]
    return tensor * w.reshape(shape)


def h12_apply(psi: ManyBodyState | np.ndarray, phi: Field, n: int,
              v: Field | None, a: float) -> np.ndarray:
    """h_{1,2} psi as a diagonal multiplier on particles 1 and 2."""
    tensor = psi.tensor if isinstance(psi, ManyBodyState) else np.asarray(psi)
    return _multiply_pair(tensor, h12_matrix(phi, n, v, a))


def _gamma_inner_products(psi: ManyBodyState, phi: Field, lam: float,
                          v: Field | None, a: float) -> tuple[complex, complex, complex]:
    """The three bra-kets behind gamma, as complex numbers.

    Weight differences ride on the bra side (they are self-adjoint and commute
    with the orbital projectors), so one sector decomposition of psi serves all
    three terms.
    """
    n = psi.n
    if n < 2:
        raise ValidationError("gamma needs at least 2 particles")
    h = psi.grid.spacing

    def inner(bra: np.ndarray, ket: np.ndarray) -> complex:
        return complex(h ** n * np.vdot(bra, ket))

    dec = sector_decompose(psi, phi)
    m_table = m_lambda_values(n, lam)
    diff_down = dec.apply_values(shift_table(m_table, -1) - m_table)  # (m^_-1 - m^) psi
    diff_up2 = dec.apply_values(m_table - shift_table(m_table, 2))   # (m^ - m^_2) psi
    h12 = h12_matrix(phi, n, v, a)

    p1p2_psi = apply_p(apply_p(psi.tensor, phi, 1), phi, 2)
    ket_a = apply_p(apply_q(_multiply_pair(p1p2_psi, h12), phi, 2), phi, 1)
    z_a = inner(diff_down, ket_a)

    q1q2_psi = apply_q(apply_q(psi.tensor, phi, 1), phi, 2)
    ket_b = _multiply_pair(apply_p(apply_p(diff_up2, phi, 1), phi, 2), h12)
    z_b = inner(q1q2_psi, ket_b)

    ket_c = _multiply_pair(apply_q(apply_p(psi.tensor, phi, 1), phi, 2), h12)
    bra_c = apply_q(apply_q(diff_down, phi, 1), phi, 2)
    z_c = inner(bra_c, ket_c)
    return z_a, z_b, z_c


def gamma_lambda(psi: ManyBodyState, phi: Field, lam: float,
                 v: Field | None, a: float) -> GammaBreakdown:
    """Derivative functional of the counting observable along the coupled flow."""
    z_a, z_b, z_c = _gamma_inner_products(psi, phi, lam, v, a)
    return GammaBreakdown(term_a=GAMMA_SIGN * z_a.imag,
                          term_b=GAMMA_SIGN * z_b.imag,
                          term_c=GAMMA_SIGN * z_c.imag)


@dataclass(frozen=True)
class TermBoundReport:
    """Unsigned term sizes against their bound shapes for a supplied constant."""

    lhs: tuple[float, float, float]
    bounds: tuple[float, float, float]
    ratios: tuple[float, float, float]
    constant: float
    alpha: float

    @property
    def min_admissible_constant(self) -> float:
        return self.constant * max(self.ratios)


def _k_tilde(diag: OrbitalDiagnostics) -> float:
    return (diag.laplacian_density_l2 + diag.linf + 1.0) * diag.linf


def gamma_term_bounds(psi: ManyBodyState, phi: Field, lam: float, beta: float,
                      v: Field | None, a: float, c: float = 1.0) -> TermBoundReport:
    """Sizes of the three gamma bra-kets next to their bound shapes.

    Bounds: |term a|, |term c| <= C k(phi) N^delta and
    |term b| <= C (||phi||_inf^2 alpha + k(phi) N^delta), with
    k(phi) = (||Lap|phi|^2|| + ||phi||_inf + 1) ||phi||_inf. Ratios of lhs to
    the C=1 shapes give the smallest single constant that makes all three hold.
    """
    if not c > 0:
        raise ValidationError(f"bound constant must be positive, got {c}")
    z_a, z_b, z_c = _gamma_inner_products(psi, phi, lam, v, a)
    diag = orbital_diagnostics(phi)
    kt = _k_tilde(diag)
    alpha = alpha_lambda(psi, phi, lam)
    decay = float(psi.n) ** delta_lambda(lam, beta)
    shape_ac = kt * decay
    shape_b = diag.linf ** 2 * alpha + kt * decay
    lhs = (abs(z_a), abs(z_b), abs(z_c))
    return TermBoundReport(
        lhs=lhs,
        bounds=(c * shape_ac, c * shape_b, c * shape_ac),
        ratios=(lhs[0] / shape_ac, lhs[1] / shape_b, lhs[2] / shape_ac),
        constant=c,
        alpha=alpha,
    )


def fit_term_bound_constant(reports: Sequence[TermBoundReport]) -> float:
    """Smallest single constant making every reported bound hold."""
    if not reports:
        raise ValidationError("need at least one report to fit a constant")
    return max(max(r.ratios) for r in reports)


def delta_lambda(lam: float, beta: float) -> float:
    """Decay exponent 0.5 * max(1 - lam - 4 beta, -1 + lam + 3 beta).

    Negative (so the bound term decays) only for beta < 1/3 and suitable lam.
    """
    if not 0.0 < lam < 1.0:
        raise ValidationError(f"lambda must lie in (0, 1), got {lam}")
    if not 0.0 <= beta < 1.0:
        raise ValidationError(f"beta must lie in [0, 1), got {beta}")
    return 0.5 * max(1.0 - lam - 4.0 * beta, -1.0 + lam + 3.0 * beta)


def k_phi(diag: OrbitalDiagnostics, c_v: float) -> float:
    """Envelope prefactor C_v (||Lap|phi|^2|| + ||phi||_inf + 1) ||phi||_inf."""
    if not c_v > 0:
        raise ValidationError(f"C_v must be positive, got {c_v}")
    return c_v * _k_tilde(diag)


@dataclass(frozen=True)
class EnvelopeParams:
    """Inputs of the exponential envelope at one sample time."""

    c_v: float
    k_phi: float
    delta_lambda: float
    exponent_convention: str = "plus"


def _exponent_factor(n: int, delta: float, convention: str) -> float:
    if convention not in EXPONENT_CONVENTIONS:
        raise ValidationError(
            f"unknown exponent convention {convention!r}; expected one of {EXPONENT_CONVENTIONS}")
    sign = 1.0 if convention == "plus" else -1.0
    return float(n) ** (sign * delta)


def gronwall_envelope(alpha0: float, times: np.ndarray, linf_series: np.ndarray,
                      c_v: float, k_series: np.ndarray, delta: float, n: int,
                      convention: str = "plus") -> np.ndarray:
    """Exponential-in-time bound dominating alpha:

    E(t) = e^I(t) alpha0 + (e^I(t) - 1) K(t) N^(+-delta),
    I(t) = integral of C_v ||phi^s||_inf^2 ds (trapezoid rule on the samples).
    The exponent sign follows `convention`; with a negative decay exponent the
    "plus" convention is the decaying bound. The harness emits both variants.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size < 1:
        raise ValidationError("need at least one sample time")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("sample times must be strictly increasing")
    linf = np.asarray(linf_series, dtype=np.float64)
    k_series = np.asarray(k_series, dtype=np.float64)
    if linf.shape != times.shape or k_series.shape != times.shape:
        raise ValidationError("series must match the sample times in length")
    rate = c_v * linf ** 2
    integral = np.zeros_like(times)
    if times.size > 1:
        integral[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(times))
    growth = np.exp(integral)
    factor = _exponent_factor(n, delta, convention)
    return growth * alpha0 + (growth - 1.0) * k_series * factor


def fit_derivative_constant(alphas: np.ndarray, gammas: np.ndarray,
                            linf_series: np.ndarray, k_tilde_series: np.ndarray,
                            n: int, delta: float, convention: str = "plus") -> float:
    """Smallest C with |d alpha/dt| <= C (||phi||_inf^2 alpha + k(phi) N^(+-delta))
    along the sampled run, using gamma as the exact derivative."""
    factor = _exponent_factor(n, delta, convention)
    denom = (np.asarray(linf_series) ** 2 * np.asarray(alphas)
             + np.asarray(k_tilde_series) * factor)
    if np.any(denom <= 0):
        raise ValidationError("bound shape vanished; cannot fit a constant")
    return float(np.max(np.abs(np.asarray(gammas)) / denom))


def fit_envelope_constant(alpha0: float, times: np.ndarray, alphas: np.ndarray,
                          linf_series: np.ndarray, k_tilde_series: np.ndarray,
                          n: int, delta: float, convention: str = "plus",
                          rtol: float = 1e-10) -> float:
    """Smallest C_v whose envelope (with K = C_v k(phi)) dominates the sampled alpha.

    The envelope grows monotonically with C_v, so the value is found by
    doubling and bisection; the returned constant always dominates.
    """
    alphas = np.asarray(alphas, dtype=np.float64)

    def dominates(c: float) -> bool:
        env = gronwall_envelope(alpha0, times, linf_series, c,
                                c * np.asarray(k_tilde_series), delta, n,
                                convention=convention)
        return bool(np.all(alphas <= env + 1e-15))

    if dominates(0.0):
        return 0.0
    hi = 1.0
    while not dominates(hi):
        hi *= 2.0
        if hi > 1e12:
            raise ValidationError("no finite envelope constant dominates the run")
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if dominates(mid):
            hi = mid
        else:
            lo = mid
    return hi


def k_tilde_series_from(orbitals: Sequence[Field]) -> np.ndarray:
    """C_v-free envelope prefactors, one per sampled orbital."""
    return np.array([_k_tilde(orbital_diagnostics(phi)) for phi in orbitals])


@dataclass(frozen=True)
class DerivativeCheckRow:
    time: float
    fd_derivative: float
    gamma: float

    @property
    def mismatch(self) -> float:
        return abs(self.fd_derivative - self.gamma)


def derivative_mismatch(times: np.ndarray, alphas: np.ndarray,
                        gammas: np.ndarray) -> list[DerivativeCheckRow]:
    """Centered finite difference of alpha against gamma at interior samples."""
    times = np.asarray(times, dtype=np.float64)
    if times.size < 3:
        raise ValidationError("derivative check needs at least 3 samples")
    spacings = np.diff(times)
    if np.max(np.abs(spacings - spacings[0])) > 1e-12 * max(abs(spacings[0]), 1.0):
        raise ValidationError("derivative check needs uniformly spaced samples")
    alphas = np.asarray(alphas, dtype=np.float64)
    gammas = np.asarray(gammas, dtype=np.float64)
    dt = spacings[0]
    rows = []
    for i in range(1, times.size - 1):
        fd = (alphas[i + 1] - alphas[i - 1]) / (2.0 * dt)
        rows.append(DerivativeCheckRow(time=float(times[i]), fd_derivative=float(fd),
                                       gamma=float(gammas[i])))
    return rows


def alpha_derivative_check(psi_samples: Sequence[ManyBodyState], phi_traj: GpTrajectory,
                           lam: float, v: Field | None, a: float) -> list[DerivativeCheckRow]:
    """Evaluate alpha and gamma on synchronized trajectories, then compare
    the centered difference of alpha with gamma at the interior samples."""
    if len(psi_samples) != len(phi_traj):
        raise ValidationError("trajectories must hold the same number of samples")
    alphas = np.array([alpha_lambda(psi, phi, lam)
                       for psi, phi in zip(psi_samples, phi_traj.orbitals)])
    gammas = np.array([gamma_lambda(psi, phi, lam, v, a).gamma
                       for psi, phi in zip(psi_samples, phi_traj.orbitals)])
    return derivative_mismatch(phi_traj.times, alphas, gammas)
