"""Nonlinear intracavity steady states: saturation, bistability, scans.

The driven polarization mode sees a saturable reactive dephasing.  Expanded
to first order in the saturation s = c*I (c = 2 g^2 / delta^2,
I = |alpha_x|^2), the steady state obeys

    [kappa + i*(delta_c - delta_0*(1 - s))] * alpha_x = sqrt(2*kappa) * alpha_in

whose intensity form is a cubic in I,

    2*kappa*P = I * [kappa^2 + D(I)^2],   D(I) = delta_c - delta_0 + delta_0*c*I,

with P = |alpha_in|^2 the incident photon flux and delta_0 the linear
collective dephasing.  One or three positive roots exist; the fold of the
S-curve (d P/d I = 0) bounds the bistable window and the negative-slope
branch is dynamically unstable.

The orthogonal (undriven) polarization mode has its own linear drift whose
eigenvalues decide whether the linearly polarized solution survives; its
largest real part is reported as ``y_mode_margin`` (negative = stable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import DriveField, PhysicalParams

# Coincident intensity roots closer than this (relative) are merged.
MERGE_RTOL = 1e-7
# Acceptable steady-state residual, relative to the drive amplitude.
RESIDUAL_RTOL = 1e-9


def linear_dephasing(params: PhysicalParams) -> float:
    """Collective linear dephasing 2*N*g^2*kappa / (delta*T), rad/s.

    Sign follows the sign of the detuning.
    """
    if params.delta == 0:
        raise ValidationError("linear dephasing undefined at zero detuning")
    return (2.0 * params.n_atoms * params.g_coupling ** 2 * params.kappa
            / (params.delta * params.transmission))


def saturation(alpha_x: complex, params: PhysicalParams) -> float:
    """Saturation parameter s = 2 g^2 |alpha_x|^2 / delta^2 (dimensionless)."""
    if params.delta == 0:
        raise ValidationError("saturation undefined at zero detuning")
    return 2.0 * params.g_coupling ** 2 * abs(alpha_x) ** 2 / params.delta ** 2


def kerr_coefficient(params: PhysicalParams) -> float:
    """Intensity-to-saturation slope c = 2 g^2 / delta^2, so s = c*I."""
    if params.delta == 0:
        raise ValidationError("Kerr coefficient undefined at zero detuning")
    return 2.0 * params.g_coupling ** 2 / params.delta ** 2


@dataclass(frozen=True)
class SteadyState:
    """One intracavity solution branch.

    ``alpha_x`` is real and positive by phase convention; ``alpha_in`` is the
    drive amplitude with its phase adjusted per branch so that convention
    holds.  ``y_mode_margin`` is the largest real part of the orthogonal-mode
    drift eigenvalues (rad/s, negative = linear polarization stable).
    """

    alpha_x: complex
    s_x: float
    delta_c: float
    delta_0: float
    branch_index: int
    mean_field_stable: bool
    y_mode_margin: float
    alpha_in: complex

    @property
    def intensity(self) -> float:
        return abs(self.alpha_x) ** 2


def _stability_margin(kappa: float, detuning: float, conj_coupling: float) -> float:
    """max Re(eigenvalue) of [[-k-i*d, m12], [conj(m12), -k+i*d]].

    Closed form -kappa + sqrt(max(0, |m12|^2 - d^2)); valid for any complex
    m12 with |m12| = conj_coupling.
    """
    radicand = conj_coupling ** 2 - detuning ** 2
    if radicand <= 0.0:
        return -kappa
    return -kappa + math.sqrt(radicand)


def x_mode_margin(steady: "SteadyState", params: PhysicalParams) -> float:
    """Stability margin of the driven-mode linearization (rad/s)."""
    d0, s = steady.delta_0, steady.s_x
    det = steady.delta_c - d0 + 2.0 * d0 * s
    return _stability_margin(params.kappa, det, abs(d0 * s))


def y_mode_stability(steady: "SteadyState", params: PhysicalParams) -> float:
    """Stability margin of the orthogonal-mode linearization (rad/s).

    Closed form -kappa + sqrt(max(0, chi^2 - d_y^2)) with
    d_y = delta_c - delta_0 + delta_0*s and chi = delta_0*s/2.  Negative
    margin means the linear polarization is stable; crossing zero is the
    oscillation threshold of the orthogonal mode.
    """
    d0, s = steady.delta_0, steady.s_x
    det = steady.delta_c - d0 + d0 * s
    return _stability_margin(params.kappa, det, abs(d0 * s / 2.0))


def cubic_coefficients(params: PhysicalParams, power: float,
                       delta_c: float) -> tuple[float, float, float, float]:
    """Coefficients (a3, a2, a1, a0) of the steady-state cubic in I."""
    d0 = linear_dephasing(params)
    c = kerr_coefficient(params)
    dl = delta_c - d0
    slope = d0 * c
    return (slope ** 2,
            2.0 * dl * slope,
            params.kappa ** 2 + dl ** 2,
            -2.0 * params.kappa * power)


def _cubic_real_roots(coeffs: tuple[float, float, float, float]) -> list[float]:
    """Real non-negative roots of the steady-state cubic, Newton-polished."""
    a3, a2, a1, a0 = coeffs
    if a0 == 0.0:
        return [0.0]
    # companion-matrix solve; numpy strips leading zeros for degenerate cubics
    raw = np.roots([a3, a2, a1, a0])
    scale = max(abs(r) for r in raw)
    real = [float(r.real) for r in raw
            if abs(r.imag) <= 1e-9 * max(scale, 1.0) and r.real > 0.0]

    def f(x: float) -> float:
        return ((a3 * x + a2) * x + a1) * x + a0

    def fp(x: float) -> float:
        return (3.0 * a3 * x + 2.0 * a2) * x + a1

    polished = []
    for r in real:
        for _ in range(3):
            d = fp(r)
            if d == 0.0:
                break
            step = f(r) / d
            r -= step
            if abs(step) <= 1e-16 * abs(r):
                break
        polished.append(r)
    polished.sort()

    merged: list[float] = []
    for r in polished:
        if merged and abs(r - merged[-1]) <= MERGE_RTOL * max(abs(r), abs(merged[-1])):
            continue
        merged.append(r)
    return merged


def steady_states(params: PhysicalParams, drive: DriveField,
                  delta_c: float) -> list[SteadyState]:
    """All steady-state branches at one cavity detuning, sorted by intensity.

    Each branch carries its own drive phase such that alpha_x is real and
    positive, and satisfies the complex steady-state relation to within
    ``RESIDUAL_RTOL``.
    """
    power = drive.power
    d0 = linear_dephasing(params)
    kappa = params.kappa

    if power == 0.0:
        zero = SteadyState(alpha_x=0j, s_x=0.0, delta_c=delta_c, delta_0=d0,
                           branch_index=0, mean_field_stable=True,
                           y_mode_margin=-kappa, alpha_in=0j)
        return [zero]

    roots = _cubic_real_roots(cubic_coefficients(params, power, delta_c))
    branches = []
    for idx, intensity in enumerate(roots):
        alpha_x = complex(math.sqrt(intensity))
        s = saturation(alpha_x, params)   # exact by construction
        det = delta_c - d0 + d0 * s  # D(I)
        alpha_in = (kappa + 1j * det) * alpha_x / math.sqrt(2.0 * kappa)
        margin_x = _stability_margin(kappa, delta_c - d0 + 2.0 * d0 * s,
                                     abs(d0 * s))
        margin_y = _stability_margin(kappa, det, abs(d0 * s / 2.0))
        branches.append(SteadyState(
            alpha_x=alpha_x, s_x=s, delta_c=delta_c, delta_0=d0,
            branch_index=idx, mean_field_stable=margin_x < 0.0,
            y_mode_margin=margin_y, alpha_in=alpha_in))
    return branches


def steady_state_residual(steady: SteadyState, params: PhysicalParams) -> float:
    """|[kappa + i*(delta_c - delta_0*(1 - s))]*alpha_x - sqrt(2k)*alpha_in|."""
    bracket = params.kappa + 1j * (steady.delta_c
                                   - steady.delta_0 * (1.0 - steady.s_x))
    return abs(bracket * steady.alpha_x
               - math.sqrt(2.0 * params.kappa) * steady.alpha_in)


def drive_for_intensity(params: PhysicalParams, delta_c: float,
                        intensity: float) -> float:
    """Incident photon flux P that sustains intracavity intensity I."""
    d0 = linear_dephasing(params)
    det = delta_c - d0 + d0 * kerr_coefficient(params) * intensity
    return intensity * (params.kappa ** 2 + det ** 2) / (2.0 * params.kappa)


def turning_points(params: PhysicalParams,
                   drive_range: tuple[float, float] | None,
                   delta_c: float) -> list[tuple[float, float]]:
    """Fold points (I, P) of the S-curve where dP/dI = 0, sorted by I.

    Solving dP/dI = 0 with u = delta_0*c*I gives
    3 u^2 + 4 (delta_c - delta_0) u + (delta_c - delta_0)^2 + kappa^2 = 0;
    real solutions require |delta_c - delta_0| >= sqrt(3)*kappa and a sign of
    u compatible with I > 0.  ``drive_range`` (P_lo, P_hi), when given,
    filters the returned points by their drive value.
    """
    d0 = linear_dephasing(params)
    c = kerr_coefficient(params)
    slope = d0 * c
    if slope == 0.0:
        return []
    dl = delta_c - d0
    disc = dl ** 2 - 3.0 * params.kappa ** 2
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    points = []
    for u in ((-2.0 * dl - sq) / 3.0, (-2.0 * dl + sq) / 3.0):
        intensity = u / slope
        if intensity <= 0.0:
            continue
        power = drive_for_intensity(params, delta_c, intensity)
        if drive_range is not None and not (drive_range[0] <= power <= drive_range[1]):
            continue
        points.append((intensity, power))
    points.sort()
    return points


@dataclass(frozen=True)
class ScanRecord:
    """Steady-state picture at one cavity detuning during a scan."""

    delta_c: float
    branches: tuple[SteadyState, ...]
    selected_branch: int
    transmitted_intensity_plus: float
    transmitted_intensity_minus: float
    linear_polarization_stable: bool


@dataclass(frozen=True)
class ScanResult:
    """Ordered cavity scan with the hysteresis traversal recorded.

    ``selected_branch`` in each record is the branch the scan actually
    follows: continuation by intensity proximity among dynamically stable
    branches, so the traversal stays on the branch it entered on and jumps
    only when that branch disappears at a fold.
    """

    records: tuple[ScanRecord, ...]

    def delta_c_values(self) -> np.ndarray:
        return np.array([r.delta_c for r in self.records])

    def selected_intensity(self) -> np.ndarray:
        return np.array([r.branches[r.selected_branch].intensity
                         for r in self.records])


def cavity_scan(params: PhysicalParams, drive: DriveField,
                delta_c_grid: np.ndarray) -> ScanResult:
    """Scan the cavity detuning and record branches, outputs and stability.

    The transmitted circular components each carry half of the driven-mode
    output photon flux 2*kappa*I while the linear polarization is stable.
    """
    grid = np.asarray(delta_c_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("detuning grid must be 1-D with >= 2 points")
    steps = np.diff(grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValidationError("detuning grid must be strictly monotone")

    records = []
    previous_intensity: float | None = None
    for delta_c in grid:
        branches = steady_states(params, drive, float(delta_c))
        stable = [b for b in branches if b.mean_field_stable]
        candidates = stable if stable else list(branches)
        if previous_intensity is None:
            selected = min(candidates, key=lambda b: b.intensity)
        else:
            selected = min(candidates,
                           key=lambda b: abs(b.intensity - previous_intensity))
        previous_intensity = selected.intensity
        flux = 2.0 * params.kappa * selected.intensity
        records.append(ScanRecord(
            delta_c=float(delta_c),
            branches=tuple(branches),
            selected_branch=selected.branch_index,
            transmitted_intensity_plus=0.5 * flux,
            transmitted_intensity_minus=0.5 * flux,
            linear_polarization_stable=selected.y_mode_margin < 0.0,
        ))
    return ScanResult(records=tuple(records))
