"""Experiment orchestration: config files, coupled runs, sweeps, deterministic output.

Config files are flat `key = value` text; the same dotted keys work as CLI
overrides. A run propagates the many-body state and the mean-field orbital in
lockstep and emits one CSV row per sample time plus a JSON sidecar with the
resolved config and fitted constants. Identical configs produce identical bytes.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import MemoryGuardError, NumericalAbort, ValidationError
from .functionals import (
    EXPONENT_CONVENTIONS,
    delta_lambda,
    fit_envelope_constant,
    fit_derivative_constant,
    gamma_lambda,
    gronwall_envelope,
    k_tilde_series_from,
)
from .gp import (
    coupling_constant,
    gaussian_orbital,
    gp_energy,
    harmonic_ground_orbital,
    orbital_diagnostics,
    orthogonal_excited_orbital,
    plane_wave_orbital,
    propagate_gp,
)
from .lattice import Field, InteractionSpec, build_grid, scaled_interaction
from .manybody import (
    ManyBodyState,
    TrapSpec,
    check_memory_guard,
    perturbed_state,
    product_state,
    propagate_many_body,
)
from .projector import alpha_lambda, n_hat_squared_expectation, reduced_density, density_distances

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ReportRow",
    "RunReport",
    "SweepReport",
    "CSV_COLUMNS",
    "default_config",
    "parse_config_text",
    "load_config",
    "apply_override",
    "validate_config",
    "run",
    "sweep",
    "write_report",
    "write_sweep",
]

CSV_COLUMNS = (
    "t", "alpha", "gamma", "gamma_a", "gamma_b", "gamma_c", "n_hat_sq",
    "opnorm_dist", "trace_dist", "envelope_minus", "envelope_plus",
    "psi_norm", "phi_linf", "gp_energy",
)

PHI_KINDS = ("gaussian", "flat", "plane-wave", "harmonic-ground")
INITIAL_KINDS = ("product", "perturbed")
SWEEP_AXES = ("N", "beta", "lambda")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 3
    m: int = 16
    length: float = 8.0
    beta: float = 0.2
    lam: float = 0.5
    dt: float = 1e-3
    steps: int = 1000
    sample_every: int = 10
    interaction_shape: str = "box"     # box | gaussian | double-well-signed | none
    interaction_amplitude: float = 1.0
    interaction_radius: float = 0.5
    trap_kind: str = "none"
    trap_omega: float = 0.0
    trap_omega_start: float = 0.0
    trap_omega_end: float = 0.0
    trap_ramp_time: float = 0.0
    initial_kind: str = "product"
    initial_eps: float = 0.0
    chi_width: float = 0.0             # 0 picks the default excited-profile width
    phi0_kind: str = "gaussian"
    phi0_width: float = 1.0
    phi0_mode: int = 1
    c_v: str = "fit"                   # "fit" or a positive number as text
    exponent_convention: str = "plus"
    tstar: float = -1.0                # negative: half the total run time
    seed: int = 0
    out: str = "runs/out"


# external (file / CLI) key -> (attribute, parser)
_CONFIG_KEYS = {
    "N": ("n", int),
    "M": ("m", int),
    "L": ("length", float),
    "beta": ("beta", float),
    "lambda": ("lam", float),
    "dt": ("dt", float),
    "steps": ("steps", int),
    "sample_every": ("sample_every", int),
    "interaction.shape": ("interaction_shape", str),
    "interaction.amplitude": ("interaction_amplitude", float),
    "interaction.radius": ("interaction_radius", float),
    "trap.kind": ("trap_kind", str),
    "trap.omega": ("trap_omega", float),
    "trap.omega_start": ("trap_omega_start", float),
    "trap.omega_end": ("trap_omega_end", float),
    "trap.ramp_time": ("trap_ramp_time", float),
    "initial.kind": ("initial_kind", str),
    "initial.eps": ("initial_eps", float),
    "initial.chi_width": ("chi_width", float),
    "initial.phi": ("phi0_kind", str),
    "initial.phi_width": ("phi0_width", float),
    "initial.phi_mode": ("phi0_mode", int),
    "C_v": ("c_v", str),
    "exponent_convention": ("exponent_convention", str),
    "tstar": ("tstar", float),
    "seed": ("seed", int),
    "out": ("out", str),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _CONFIG_KEYS.items()}


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _set_key(config: ExperimentConfig, key: str, raw: str) -> ExperimentConfig:
    if key not in _CONFIG_KEYS:
        raise ValidationError(f"unknown config key {key!r}")
    attr, parser = _CONFIG_KEYS[key]
    try:
        value = parser(raw.strip())
    except ValueError as exc:
        raise ValidationError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
    return replace(config, **{attr: value})


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse flat `key = value` lines; '#' starts a comment, blank lines ignored."""
    config = base or default_config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"config line {lineno} is not `key = value`: {line!r}")
        key, raw = stripped.split("=", 1)
        config = _set_key(config, key.strip(), raw)
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def apply_override(config: ExperimentConfig, override: str) -> ExperimentConfig:
    """Apply a CLI `key=value` override with the same dotted keys as the file."""
    if "=" not in override:
        raise ValidationError(f"override must look like key=value, got {override!r}")
    key, raw = override.split("=", 1)
    return _set_key(config, key.strip(), raw)


def resolved_dict(config: ExperimentConfig) -> dict:
    """Config as external keys, for the JSON sidecar."""
    return {_ATTR_TO_KEY[f.name]: getattr(config, f.name) for f in fields(config)}


def _c_v_fixed(config: ExperimentConfig) -> float | None:
    if config.c_v.strip() == "fit":
        return None
    try:
        value = float(config.c_v)
    except ValueError as exc:
        raise ValidationError(f"C_v must be 'fit' or a number, got {config.c_v!r}") from exc
    if not value > 0:
        raise ValidationError(f"fixed C_v must be positive, got {value}")
    return value


def validate_config(config: ExperimentConfig) -> None:
    """Range-check everything before any allocation; memory guard first."""
    check_memory_guard(config.m, config.n)
    if config.n < 2:
        raise ValidationError(f"runs need at least 2 particles, got N={config.n}")
    if config.m < 2:
        raise ValidationError(f"grid needs at least 2 points, got M={config.m}")
    if not config.length > 0:
        raise ValidationError(f"domain length must be positive, got {config.length}")
    if not 0.0 <= config.beta < 1.0:
        raise ValidationError(f"beta must lie in [0, 1), got {config.beta}")
    if not 0.0 < config.lam < 1.0:
        raise ValidationError(f"lambda must lie in (0, 1), got {config.lam}")
    if not config.dt > 0 or not math.isfinite(config.dt):
        raise ValidationError(f"dt must be positive and finite, got {config.dt}")
    if config.steps < 1:
        raise ValidationError(f"steps must be >= 1, got {config.steps}")
    if config.sample_every < 1 or config.steps % config.sample_every != 0:
        raise ValidationError(
            f"sample_every must be >= 1 and divide steps; got {config.sample_every} / {config.steps}")
    if config.interaction_shape != "none":
        if config.m % 2 != 0:
            raise ValidationError("interacting runs need an even grid point count")
        # constructing the spec and the scaled field validates shape/radius/support
        scaled_interaction(_interaction_spec(config), config.n, config.beta,
                           build_grid(config.m, config.length))
    if config.trap_kind not in ("none", "harmonic", "harmonic-ramped"):
        raise ValidationError(f"unknown trap kind {config.trap_kind!r}")
    if config.initial_kind not in INITIAL_KINDS:
        raise ValidationError(f"unknown initial state kind {config.initial_kind!r}")
    if not 0.0 <= config.initial_eps <= 1.0:
        raise ValidationError(f"initial.eps must lie in [0, 1], got {config.initial_eps}")
    if config.phi0_kind not in PHI_KINDS:
        raise ValidationError(f"unknown initial orbital {config.phi0_kind!r}")
    if config.phi0_kind == "gaussian" and not config.phi0_width > 0:
        raise ValidationError("gaussian initial orbital needs a positive width")
    if config.phi0_kind == "harmonic-ground" and config.trap_kind == "none":
        raise ValidationError("harmonic-ground initial orbital needs a harmonic trap")
    if config.exponent_convention not in EXPONENT_CONVENTIONS:
        raise ValidationError(
            f"unknown exponent convention {config.exponent_convention!r}")
    _c_v_fixed(config)
    delta_lambda(config.lam, config.beta)
    TrapSpec(**_trap_kwargs(config))


def _interaction_spec(config: ExperimentConfig) -> InteractionSpec:
    return InteractionSpec(shape=config.interaction_shape,
                           amplitude=config.interaction_amplitude,
                           radius=config.interaction_radius)


def _trap_kwargs(config: ExperimentConfig) -> dict:
    return dict(kind=config.trap_kind, omega=config.trap_omega,
                omega_start=config.trap_omega_start, omega_end=config.trap_omega_end,
                ramp_time=config.trap_ramp_time)


def _initial_orbital(config: ExperimentConfig, grid) -> Field:
    if config.phi0_kind == "gaussian":
        return gaussian_orbital(grid, config.phi0_width)
    if config.phi0_kind == "flat":
        return plane_wave_orbital(grid, 0)
    if config.phi0_kind == "plane-wave":
        return plane_wave_orbital(grid, config.phi0_mode)
    omega = config.trap_omega if config.trap_kind == "harmonic" else config.trap_omega_start
    return harmonic_ground_orbital(grid, omega)


@dataclass(frozen=True)
class ReportRow:
    t: float
    alpha: float
    gamma: float
    gamma_a: float
    gamma_b: float
    gamma_c: float
    n_hat_sq: float
    opnorm_dist: float
    trace_dist: float
    envelope_minus: float
    envelope_plus: float
    psi_norm: float
    phi_linf: float
    gp_energy: float

    def values(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in CSV_COLUMNS)


@dataclass(frozen=True)
class RunReport:
    config: ExperimentConfig
    rows: list[ReportRow]
    fitted: dict

    def csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(repr(v) for v in row.values()))
        return "\n".join(lines) + "\n"

    def sidecar_json(self) -> str:
        payload = {"config": resolved_dict(self.config), "fitted": self.fitted}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


def run(config: ExperimentConfig) -> RunReport:
    """Propagate the coupled pair and evaluate every observable at sample times."""
    validate_config(config)
    grid = build_grid(config.m, config.length)
    n = config.n
    trap = TrapSpec(**_trap_kwargs(config))

    if config.interaction_shape == "none":
        v = None
        a = 0.0
        a_profile = 0.0
    else:
        spec = _interaction_spec(config)
        v = scaled_interaction(spec, n, config.beta, grid)
        # lattice-consistent coupling: N times the quadrature integral of the
        # scaled interaction, which converges to the profile integral as h -> 0
        a = n * coupling_constant(v)
        a_profile = spec.signed_area()

    phi = _initial_orbital(config, grid)
    if config.initial_kind == "product":
        psi = product_state(phi, n)
    else:
        chi = orthogonal_excited_orbital(phi, config.chi_width or None)
        psi = perturbed_state(phi, chi, config.initial_eps, n)

    sample_dt = config.dt * config.sample_every
    n_windows = config.steps // config.sample_every
    times: list[float] = []
    raw_rows: list[dict] = []
    sampled_orbitals: list[Field] = []

    def observe(step_index: int, t: float, psi_t: ManyBodyState, phi_t: Field) -> None:
        breakdown = gamma_lambda(psi_t, phi_t, config.lam, v, a)
        mu = reduced_density(psi_t)
        opnorm, trace = density_distances(mu, phi_t)
        diag = orbital_diagnostics(phi_t)
        row = dict(
            t=t,
            alpha=alpha_lambda(psi_t, phi_t, config.lam),
            gamma=breakdown.gamma,
            gamma_a=breakdown.term_a,
            gamma_b=breakdown.term_b,
            gamma_c=breakdown.term_c,
            n_hat_sq=n_hat_squared_expectation(psi_t, phi_t),
            opnorm_dist=opnorm,
            trace_dist=trace,
            psi_norm=psi_t.norm(),
            phi_linf=diag.linf,
            gp_energy=gp_energy(phi_t, a, trap, t),
        )
        for name, value in row.items():
            if not math.isfinite(value):
                raise NumericalAbort(
                    f"non-finite {name} at step {step_index} (t={t:g})", step=step_index)
        times.append(t)
        raw_rows.append(row)
        sampled_orbitals.append(phi_t)

    observe(0, 0.0, psi, phi)
    for window in range(n_windows):
        t0 = window * sample_dt
        psi = propagate_many_body(psi, v, trap, config.dt, config.sample_every, t0=t0)
        phi_traj = propagate_gp(phi, a, trap, config.dt, config.sample_every,
                                t0=t0, sample_every=config.sample_every)
        phi = phi_traj.orbitals[-1]
        observe((window + 1) * config.sample_every, (window + 1) * sample_dt, psi, phi)

    delta = delta_lambda(config.lam, config.beta)
    alphas = np.array([r["alpha"] for r in raw_rows])
    gammas = np.array([r["gamma"] for r in raw_rows])
    linfs = np.array([r["phi_linf"] for r in raw_rows])
    k_tilde = k_tilde_series_from(sampled_orbitals)

    fixed = _c_v_fixed(config)
    fitted: dict = {
        "a_lattice": a,
        "a_profile": a_profile,
        "delta_lambda": delta,
        "alpha0": float(alphas[0]),
        "c_v_mode": "fixed" if fixed is not None else "fit",
        "gamma_max_abs": float(np.max(np.abs(gammas))),
    }
    envelopes = {}
    times_arr = np.array(times)
    for convention in EXPONENT_CONVENTIONS:
        # the derivative-inequality constant is reported for reference; the
        # envelope constant is fitted against the envelope itself so that the
        # emitted bound dominates alpha at every sample by construction
        fitted[f"c_derivative_{convention}"] = fit_derivative_constant(
            alphas, gammas, linfs, k_tilde, n, delta, convention=convention)
        if fixed is not None:
            c_conv = fixed
        else:
            c_conv = fit_envelope_constant(float(alphas[0]), times_arr, alphas,
                                           linfs, k_tilde, n, delta,
                                           convention=convention)
        fitted[f"c_fit_{convention}"] = c_conv
        envelopes[convention] = gronwall_envelope(
            float(alphas[0]), times_arr, linfs, c_conv, c_conv * k_tilde,
            delta, n, convention=convention)

    rows = [
        ReportRow(envelope_minus=float(envelopes["minus"][i]),
                  envelope_plus=float(envelopes["plus"][i]),
                  **{k: float(val) for k, val in raw.items()})
        for i, raw in enumerate(raw_rows)
    ]
    logger.info("run finished: %d rows, alpha(T)=%.3e", len(rows), rows[-1].alpha)
    return RunReport(config=config, rows=rows, fitted=fitted)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_report(report: RunReport, out_dir: str | Path | None = None) -> Path:
    """Write report.csv and run.json atomically; returns the output directory."""
    out = Path(out_dir) if out_dir is not None else Path(report.config.out)
    _atomic_write(out / "report.csv", report.csv_text())
    _atomic_write(out / "run.json", report.sidecar_json())
    return out


@dataclass(frozen=True)
class SweepReport:
    base_config: ExperimentConfig
    axis: str
    entries: list[dict]
    fits: dict
    reports: dict

    def summary_csv_text(self) -> str:
        cols = ("axis_value", "status", "tstar", "alpha_tstar", "n_hat_sq_tstar",
                "opnorm_tstar", "delta_lambda")
        lines = [",".join(cols)]
        for e in self.entries:
            lines.append(",".join(_cell(e.get(c)) for c in cols))
        return "\n".join(lines) + "\n"

    def summary_json(self) -> str:
        payload = {
            "axis": self.axis,
            "base_config": resolved_dict(self.base_config),
            "entries": self.entries,
            "fits": self.fits,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


_AXIS_ATTR = {"N": ("n", int), "beta": ("beta", float), "lambda": ("lam", float)}


def sweep(config: ExperimentConfig, axis: str, values, tstar: float | None = None) -> SweepReport:
    """Run the base config once per axis value and fit the scaling trends.

    Memory-guard violations are recorded as skipped entries; the sweep never
    aborts on them.
    """
    if axis not in _AXIS_ATTR:
        raise ValidationError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = list(values)
    if len(values) < 3:
        raise ValidationError(f"sweep needs at least 3 axis values, got {len(values)}")
    attr, caster = _AXIS_ATTR[axis]
    if tstar is None:
        tstar = config.tstar if config.tstar > 0 else 0.5 * config.dt * config.steps

    entries: list[dict] = []
    reports: dict = {}
    for value in values:
        value = caster(value)
        cfg = replace(config, **{attr: value})
        try:
            report = run(cfg)
        except MemoryGuardError as exc:
            logger.warning("skipping %s=%s: %s", axis, value, exc)
            entries.append({"axis_value": value, "status": f"skipped: {exc}",
                            "tstar": tstar, "alpha_tstar": None, "n_hat_sq_tstar": None,
                            "opnorm_tstar": None, "delta_lambda": None})
            continue
        times = report.column("t")
        idx = int(np.argmin(np.abs(times - tstar)))
        entries.append({
            "axis_value": value,
            "status": "ok",
            "tstar": float(times[idx]),
            "alpha_tstar": float(report.rows[idx].alpha),
            "n_hat_sq_tstar": float(report.rows[idx].n_hat_sq),
            "opnorm_tstar": float(report.rows[idx].opnorm_dist),
            "delta_lambda": float(report.fitted["delta_lambda"]),
        })
        reports[value] = report

    fits = _sweep_fits(axis, entries)
    return SweepReport(base_config=config, axis=axis, entries=entries, fits=fits,
                       reports=reports)


def _sweep_fits(axis: str, entries: list[dict]) -> dict:
    fits: dict = {"axis": axis}
    ok = [e for e in entries if e["status"] == "ok"]
    fits["completed"] = len(ok)
    if axis != "N" or len(ok) < 2:
        return fits
    ns = np.array([float(e["axis_value"]) for e in ok])
    for column, label in (("alpha_tstar", "alpha_slope"), ("opnorm_tstar", "xi_slope")):
        series = np.array([e[column] for e in ok])
        if np.any(series <= 1e-14):
            fits[label] = None
            fits[f"{label}_degenerate"] = True
            continue
        slope = float(np.polyfit(np.log(ns), np.log(series), 1)[0])
        fits[label] = slope
        fits[f"{label}_degenerate"] = False
    return fits


def write_sweep(report: SweepReport, out_dir: str | Path | None = None) -> Path:
    out = Path(out_dir) if out_dir is not None else Path(report.base_config.out)
    _atomic_write(out / "summary.csv", report.summary_csv_text())
    _atomic_write(out / "summary.json", report.summary_json())
    for value, run_report in report.reports.items():
        sub = out / f"run_{report.axis}={value}"
        _atomic_write(sub / "report.csv", run_report.csv_text())
        _atomic_write(sub / "run.json", run_report.sidecar_json())
    return out
