"""Config-driven command line: scan | spectrum | stokes | oracle | validate.

Configuration is a flat ``key = value`` text file (``#`` comments).  MHz
values are converted to rad/s exactly once, at this boundary.  Exit codes:
0 success, 1 validation error, 2 numerical failure (instability or
singularity), 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .oracle import (PsdEstimate, TrajectoryConfig, compare, kernel_backend,
                     psd_estimate, simulate)
from .params import DriveField, PhysicalParams, TWO_PI_MHZ
from .spectra import (build_drift_x, build_drift_y, fold_angle,
                      min_max_spectrum, model_validity, noise_spectrum)
from .steady import cavity_scan, steady_states
from .stokes import apply_detection_loss, phase_scan_dataset, stokes_noise
from .tables import OutputTable, format_value


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, in user units (MHz, degrees, seconds)."""

    # cavity and atomic ensemble
    kappa_mhz: float = 5.0
    gamma_perp_mhz: float = 1.3
    gamma_par_mhz: float = 1.3
    gamma_mhz: float = 2.6
    delta_mhz: float = -50.0
    transmission: float = 0.1
    n_atoms: float = 5000000.0
    g_coupling_mhz: float = 2.203230756026887e-06
    eta_det: float = 0.718
    # drive: optical power and the power-to-flux calibration constant
    power_uw: float = 7.0
    flux_per_uw: float = 8.681320413586838e+22
    # operating point
    delta_c_mhz: float = -283.3151955708165
    branch: str = "high"
    # cavity-length scan bounds and step
    scan_start_mhz: float = -380.0
    scan_stop_mhz: float = -130.0
    scan_step_mhz: float = 0.25
    # spectrum analysis grid
    freqs_mhz: tuple = (3.0, 6.0)
    theta_start_deg: float = -180.0
    theta_stop_deg: float = 180.0
    theta_points: int = 241
    # stochastic oracle
    oracle_dt: float = 5e-11
    oracle_duration: float = 0.00025
    oracle_seed: int = 20201
    oracle_burn_in: float = 0.02
    oracle_segment_length: int = 16384
    oracle_overlap: float = 0.5
    oracle_perturb_sx: float = 0.0
    # output
    out_dir: str = "out"
    format: str = "csv"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_KEY_ORDER = [f.name for f in fields(RunConfig)]

# keys grouped for the rendered template
_SECTIONS = [
    ("cavity and atomic ensemble (rates in MHz = rate / 2pi)",
     ["kappa_mhz", "gamma_perp_mhz", "gamma_par_mhz", "gamma_mhz",
      "delta_mhz", "transmission", "n_atoms", "g_coupling_mhz", "eta_det"]),
    ("drive power and the power -> |alpha_in|^2 calibration",
     ["power_uw", "flux_per_uw"]),
    ("operating point for spectrum / stokes / oracle",
     ["delta_c_mhz", "branch"]),
    ("cavity scan bounds and step",
     ["scan_start_mhz", "scan_stop_mhz", "scan_step_mhz"]),
    ("analysis frequencies and homodyne phase grid",
     ["freqs_mhz", "theta_start_deg", "theta_stop_deg", "theta_points"]),
    ("stochastic oracle (dt and duration in seconds)",
     ["oracle_dt", "oracle_duration", "oracle_seed", "oracle_burn_in",
      "oracle_segment_length", "oracle_overlap", "oracle_perturb_sx"]),
    ("output",
     ["out_dir", "format"]),
]


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if key == "freqs_mhz":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValueError("expected at least one frequency")
        return tuple(float(p) for p in parts)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def _format_key(key: str, value) -> str:
    if key == "freqs_mhz":
        return ", ".join(repr(float(v)) for v in value)
    return format_value(value)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a flat key=value configuration.

    Unknown keys, duplicates, syntax problems and violated physical
    invariants are reported with the offending key and line number; keys
    absent from the file keep their defaults.
    """
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValidationError(
                f"config line {lineno}: expected 'key = value', got "
                f"{stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_TYPES:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValidationError(
                f"config line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ValidationError(
                f"config line {lineno}: bad value for {key!r}: {exc}") from None
        lines[key] = lineno
    cfg = replace(RunConfig(), **values)
    _validate_config(cfg, lines)
    return cfg


def render_config(cfg: RunConfig) -> str:
    """Canonical key=value rendering; comments excluded."""
    out = []
    for key in _KEY_ORDER:
        out.append(f"{key} = {_format_key(key, getattr(cfg, key))}")
    return "\n".join(out) + "\n"


def config_template(cfg: RunConfig | None = None) -> str:
    """Commented configuration template with canonical values."""
    cfg = cfg or RunConfig()
    blocks = []
    for title, keys in _SECTIONS:
        blocks.append(f"# {title}")
        for key in keys:
            blocks.append(f"{key} = {_format_key(key, getattr(cfg, key))}")
        blocks.append("")
    return "\n".join(blocks)


def config_hash(cfg: RunConfig) -> str:
    """Hash of the physics-relevant configuration.

    Output destination and format do not alter the computed numbers and are
    excluded, so runs into different directories stay byte-comparable.
    """
    physics = "\n".join(
        f"{key} = {_format_key(key, getattr(cfg, key))}"
        for key in _KEY_ORDER if key not in ("out_dir", "format"))
    return hashlib.sha256(physics.encode()).hexdigest()[:16]


def _where(lines: dict, key: str) -> str:
    return f"line {lines[key]}" if key in lines else "default"


def _validate_config(cfg: RunConfig, lines: dict) -> None:
    def fail(key: str, message: str):
        raise ValidationError(f"config {_where(lines, key)}: {key}: {message}")

    if cfg.kappa_mhz <= 0:
        fail("kappa_mhz", "must be > 0")
    if cfg.gamma_perp_mhz < 0 or cfg.gamma_par_mhz < 0:
        fail("gamma_perp_mhz", "decay channels must be >= 0")
    if cfg.gamma_mhz != cfg.gamma_perp_mhz + cfg.gamma_par_mhz:
        fail("gamma_mhz",
             f"must equal gamma_perp_mhz + gamma_par_mhz exactly "
             f"({cfg.gamma_mhz} != {cfg.gamma_perp_mhz} + {cfg.gamma_par_mhz})")
    if cfg.delta_mhz == 0:
        fail("delta_mhz", "zero detuning is outside the dispersive model")
    if not 0 < cfg.transmission <= 1:
        fail("transmission", "must lie in (0, 1]")
    if not 0 < cfg.eta_det <= 1:
        fail("eta_det", "must lie in (0, 1]")
    if cfg.n_atoms < 0:
        fail("n_atoms", "must be >= 0")
    if cfg.power_uw < 0:
        fail("power_uw", "must be >= 0")
    if cfg.flux_per_uw <= 0:
        fail("flux_per_uw", "must be > 0")
    if cfg.branch not in ("high", "low") and not _is_index(cfg.branch):
        fail("branch", "must be 'high', 'low' or a branch index 0..2")
    if cfg.scan_step_mhz <= 0:
        fail("scan_step_mhz", "must be > 0")
    if cfg.scan_stop_mhz <= cfg.scan_start_mhz:
        fail("scan_stop_mhz", "must exceed scan_start_mhz")
    if not cfg.freqs_mhz or any(f <= 0 for f in cfg.freqs_mhz):
        fail("freqs_mhz", "analysis frequencies must be > 0")
    if cfg.theta_points < 2:
        fail("theta_points", "need at least 2 phase points")
    if cfg.theta_stop_deg <= cfg.theta_start_deg:
        fail("theta_stop_deg", "must exceed theta_start_deg")
    if cfg.oracle_dt <= 0:
        fail("oracle_dt", "must be > 0")
    if cfg.oracle_duration <= 0:
        fail("oracle_duration", "must be > 0")
    if cfg.oracle_duration < 1000.0 * cfg.oracle_dt:
        fail("oracle_duration", "must be at least 1000 * oracle_dt")
    if not 0 <= cfg.oracle_burn_in <= 0.5:
        fail("oracle_burn_in", "must lie in [0, 0.5]")
    if cfg.oracle_segment_length < 16:
        fail("oracle_segment_length", "must be >= 16")
    if not 0 <= cfg.oracle_overlap <= 0.9:
        fail("oracle_overlap", "must lie in [0, 0.9]")
    if cfg.format not in ("csv", "json"):
        fail("format", "must be 'csv' or 'json'")


def _is_index(branch: str) -> bool:
    try:
        return int(branch) >= 0
    except ValueError:
        return False


def build_params(cfg: RunConfig) -> PhysicalParams:
    return PhysicalParams.from_mhz(
        kappa_mhz=cfg.kappa_mhz, gamma_perp_mhz=cfg.gamma_perp_mhz,
        gamma_par_mhz=cfg.gamma_par_mhz, gamma_mhz=cfg.gamma_mhz,
        delta_mhz=cfg.delta_mhz, transmission=cfg.transmission,
        n_atoms=cfg.n_atoms, g_coupling_mhz=cfg.g_coupling_mhz,
        eta_det=cfg.eta_det)


def build_drive(cfg: RunConfig) -> DriveField:
    return DriveField.from_power(cfg.power_uw * cfg.flux_per_uw)


def select_branch(cfg: RunConfig, params: PhysicalParams):
    """Steady-state branch at the configured operating point."""
    delta_c = cfg.delta_c_mhz * TWO_PI_MHZ
    branches = steady_states(params, build_drive(cfg), delta_c)
    if _is_index(cfg.branch):
        idx = int(cfg.branch)
        if idx >= len(branches):
            raise NumericalError(
                f"branch {idx} requested but only {len(branches)} branches "
                f"exist at delta_c = {cfg.delta_c_mhz} MHz")
        return branches[idx]
    stable = [b for b in branches if b.mean_field_stable]
    if not stable:
        raise NumericalError(
            f"no dynamically stable branch at delta_c = {cfg.delta_c_mhz} MHz")
    return stable[-1] if cfg.branch == "high" else stable[0]


def _theta_grid(cfg: RunConfig) -> np.ndarray:
    return np.radians(np.linspace(cfg.theta_start_deg, cfg.theta_stop_deg,
                                  cfg.theta_points))


def _base_meta(cfg: RunConfig) -> dict:
    return {"generator": f"kerrpol {__version__}",
            "config_hash": config_hash(cfg),
            "seed": cfg.oracle_seed}


def cmd_validate(cfg: RunConfig, log=print) -> int:
    params = build_params(cfg)
    log(f"configuration ok (hash {config_hash(cfg)})")
    if params.bad_cavity:
        log("note: bad-cavity regime, cavity linewidth exceeds the atomic "
            f"linewidth ({cfg.kappa_mhz} > {cfg.gamma_mhz} MHz)")
    for warning in params.validity_warnings():
        log(f"warning: {warning}")
    return 0


def cmd_scan(cfg: RunConfig) -> OutputTable:
    params = build_params(cfg)
    n_steps = int(math.floor((cfg.scan_stop_mhz - cfg.scan_start_mhz)
                             / cfg.scan_step_mhz + 1e-9)) + 1
    grid_mhz = cfg.scan_start_mhz + cfg.scan_step_mhz * np.arange(n_steps)
    result = cavity_scan(params, build_drive(cfg), grid_mhz * TWO_PI_MHZ)
    rows = []
    for rec_mhz, rec in zip(grid_mhz, result.records):
        intensities = [b.intensity for b in rec.branches]
        padded = intensities + [None] * (3 - len(intensities))
        sel = rec.branches[rec.selected_branch]
        rows.append((float(rec_mhz), len(rec.branches),
                     padded[0], padded[1], padded[2],
                     rec.selected_branch,
                     rec.transmitted_intensity_plus,
                     rec.transmitted_intensity_minus,
                     sel.mean_field_stable,
                     rec.linear_polarization_stable))
    return OutputTable(
        name="scan",
        columns=["delta_c_mhz", "n_branches", "intensity_branch0",
                 "intensity_branch1", "intensity_branch2", "selected_branch",
                 "i_plus", "i_minus", "mean_field_stable",
                 "linear_polarization_stable"],
        units=["MHz", "1", "photon", "photon", "photon", "1", "photon/s",
               "photon/s", "bool", "bool"],
        rows=rows,
        meta={**_base_meta(cfg), "power_uw": cfg.power_uw})


def cmd_spectrum(cfg: RunConfig, mode: str = "y",
                 log=lambda *_: None) -> OutputTable:
    if mode not in ("x", "y"):
        raise ValidationError(f"mode must be 'x' or 'y', got {mode!r}")
    params = build_params(cfg)
    steady = select_branch(cfg, params)
    build = build_drift_y if mode == "y" else build_drift_x
    model = build(steady, params)
    if not model.is_stable:
        raise NumericalError(
            f"{mode}-mode fluctuations unstable on branch "
            f"{steady.branch_index} (margin {model.stability_margin:.4g} "
            "rad/s)")
    thetas = _theta_grid(cfg)
    rows = []
    for freq in cfg.freqs_mhz:
        omega = freq * TWO_PI_MHZ
        for warning in model_validity(model, params, omega):
            log(f"warning ({freq} MHz): {warning}")
        spec = noise_spectrum(model, [omega], thetas)
        for theta, value in zip(thetas, spec.values[0]):
            rows.append(("grid", freq, float(theta), float(value),
                         apply_detection_loss(float(value), params.eta_det)))
        smin, smax, theta_min = min_max_spectrum(model, omega)
        rows.append(("min", freq, theta_min, smin,
                     apply_detection_loss(smin, params.eta_det)))
        rows.append(("max", freq, fold_angle(theta_min + math.pi / 2.0), smax,
                     apply_detection_loss(smax, params.eta_det)))
    return OutputTable(
        name=f"spectrum_{mode}",
        columns=["kind", "omega_mhz", "theta_rad", "s", "s_after_loss"],
        units=["-", "MHz", "rad", "1", "1"],
        rows=rows,
        meta={**_base_meta(cfg), "mode": mode,
              "branch_index": steady.branch_index,
              "s_x": steady.s_x, "eta_det": params.eta_det})


def cmd_stokes(cfg: RunConfig) -> tuple[OutputTable, OutputTable]:
    params = build_params(cfg)
    steady = select_branch(cfg, params)
    model = build_drift_y(steady, params)
    if not model.is_stable:
        raise NumericalError(
            f"orthogonal mode unstable on branch {steady.branch_index} "
            f"(margin {model.stability_margin:.4g} rad/s)")
    thetas = _theta_grid(cfg)
    scan_rows = []
    summary_rows = []
    for freq in cfg.freqs_mhz:
        omega = freq * TWO_PI_MHZ
        ds = phase_scan_dataset(model, omega, thetas, eta=params.eta_det)
        for th, ct, v in zip(ds.theta_hd, ds.cos_theta, ds.v_theta):
            assert v >= 1.0 - params.eta_det - 1e-12   # loss floor re-check
            scan_rows.append((freq, float(th), float(ct), float(v)))
        spec = noise_spectrum(model, [omega], np.array([0.0, math.pi / 2.0]))
        record = stokes_noise(spec, steady.alpha_x)[0]
        product = record.uncertainty_product
        assert product >= 1.0 - 1e-6                   # emission re-check
        summary_rows.append((freq, record.v_s2_norm, record.v_s3_norm,
                             product))
    scan_table = OutputTable(
        name="stokes_scan",
        columns=["omega_mhz", "theta_hd_rad", "cos_theta", "v_theta"],
        units=["MHz", "rad", "1", "1"],
        rows=scan_rows,
        meta={**_base_meta(cfg), "eta_det": params.eta_det,
              "branch_index": steady.branch_index})
    summary_table = OutputTable(
        name="stokes_summary",
        columns=["omega_mhz", "v_s2_norm", "v_s3_norm",
                 "uncertainty_product"],
        units=["MHz", "1", "1", "1"],
        rows=summary_rows,
        meta={**_base_meta(cfg), "branch_index": steady.branch_index})
    return scan_table, summary_table


def cmd_oracle(cfg: RunConfig, mode: str = "y") -> dict:
    """Stochastic-vs-analytic consistency report for the configured point."""
    params = build_params(cfg)
    steady = select_branch(cfg, params)
    build = build_drift_y if mode == "y" else build_drift_x
    model = build(steady, params)
    if not model.is_stable:
        raise NumericalError(
            f"{mode}-mode fluctuations unstable on branch "
            f"{steady.branch_index}")

    sim_model = model
    if cfg.oracle_perturb_sx != 0.0:
        factor = 1.0 + cfg.oracle_perturb_sx
        if factor <= 0.0:
            raise ValidationError("oracle_perturb_sx must exceed -1")
        scaled = replace(steady,
                         alpha_x=steady.alpha_x * math.sqrt(factor),
                         s_x=steady.s_x * factor)
        sim_model = build(scaled, params)
        if not sim_model.is_stable:
            raise NumericalError("perturbed oracle model is unstable")

    omega_ref = cfg.freqs_mhz[0] * TWO_PI_MHZ
    _, _, theta_min = min_max_spectrum(model, omega_ref)
    theta_list = (theta_min, fold_angle(theta_min + math.pi / 2.0))
    traj = TrajectoryConfig(dt=cfg.oracle_dt, duration=cfg.oracle_duration,
                            seed=cfg.oracle_seed, burn_in=cfg.oracle_burn_in,
                            theta_list=theta_list)
    series = simulate(sim_model, traj)
    estimate = psd_estimate(series, cfg.oracle_segment_length,
                            cfg.oracle_overlap)

    lo, hi = 0.1 * params.kappa, 3.0 * params.kappa
    band = np.nonzero((estimate.omega >= lo) & (estimate.omega <= hi))[0]
    if band.size < 10:
        raise ValidationError(
            "oracle PSD resolution too coarse for the comparison band; "
            "decrease oracle_dt or increase oracle_segment_length")
    picks = band[np.linspace(0, band.size - 1, 12).round().astype(int)]
    picks = np.unique(picks)
    analytic = noise_spectrum(model, estimate.omega[picks], theta_list)
    subset = PsdEstimate(omega=estimate.omega[picks],
                         psd=estimate.psd[picks],
                         stderr=estimate.stderr[picks],
                         n_segments=estimate.n_segments,
                         thetas=series.thetas)
    report = compare(analytic, subset)
    return {
        "generator": f"kerrpol {__version__}",
        "config_hash": config_hash(cfg),
        "seed": cfg.oracle_seed,
        "mode": mode,
        "backend": kernel_backend(),
        "n_steps": traj.n_steps,
        "n_segments": estimate.n_segments,
        "perturb_sx": cfg.oracle_perturb_sx,
        "comparison": report.to_dict(),
    }


def _write_report(report: dict, out_dir: str) -> str:
    import json
    import os

    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "oracle_report.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return path


def _load_config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "format", None):
        overrides["format"] = args.format
    if getattr(args, "seed", None) is not None:
        overrides["oracle_seed"] = args.seed
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kerrpol",
        description="Saturable Kerr-cavity polarization squeezing simulator")
    parser.add_argument("--version", action="version",
                        version=f"kerrpol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a key=value config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--format", choices=["csv", "json"],
                       help="output format (overrides config)")
        p.add_argument("--seed", type=int,
                       help="oracle seed (overrides config)")

    add_common(sub.add_parser("scan", help="cavity-length scan dataset"))
    p_spec = sub.add_parser("spectrum", help="quadrature noise spectra")
    add_common(p_spec)
    p_spec.add_argument("--mode", choices=["x", "y"], default="y")
    add_common(sub.add_parser("stokes", help="Stokes noise and phase scan"))
    p_orc = sub.add_parser("oracle",
                           help="stochastic check of the analytic spectra")
    add_common(p_orc)
    p_orc.add_argument("--mode", choices=["x", "y"], default="y")
    p_val = sub.add_parser("validate", help="validate a configuration")
    add_common(p_val)
    p_tmpl = sub.add_parser("template",
                            help="print the default configuration")
    add_common(p_tmpl)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "template":
            sys.stdout.write(config_template(cfg))
            return 0
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "scan":
            path = cmd_scan(cfg).write(cfg.out_dir, cfg.format)
            print(path)
            return 0
        if args.command == "spectrum":
            table = cmd_spectrum(cfg, args.mode,
                                 log=lambda m: print(m, file=sys.stderr))
            print(table.write(cfg.out_dir, cfg.format))
            return 0
        if args.command == "stokes":
            scan_table, summary_table = cmd_stokes(cfg)
            print(scan_table.write(cfg.out_dir, cfg.format))
            print(summary_table.write(cfg.out_dir, cfg.format))
            return 0
        if args.command == "oracle":
            report = cmd_oracle(cfg, args.mode)
            print(_write_report(report, cfg.out_dir))
            if not report["comparison"]["passed"]:
                print(f"oracle mismatch: max |z| = "
                      f"{report['comparison']['max_abs_z']:.2f}",
                      file=sys.stderr)
                return 3
            return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
