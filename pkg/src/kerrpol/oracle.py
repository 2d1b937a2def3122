"""Brute-force stochastic verification of the analytic spectra.

For linear dynamics driven by Gaussian noise, symmetrized quantum spectra
coincide with the spectra of a classical complex process driven by
half-quantum white noise: <dxi dxi*> = dt/2, <dxi dxi> = 0.  That
equivalence is the foundation of this module.  It integrates

    d a = (m11*a + m12*conj(a)) dt + sqrt(2*kappa) dxi

by Euler-Maruyama, forms output quadrature samples

    b_k = sqrt(2*kappa)*a_k - xi_k/dt,
    X_theta[k] = 2*Re(e^{-i*theta} b_k),

and estimates their power spectral density by a windowed, segment-averaged
periodogram with error bars from the segment scatter.  The -xi_k/dt
feed-through reuses the increment that drives step k; that is the consistent
discretization of the white input appearing both in the cavity drive and in
the output.

The per-step recursion is the hot loop: it runs in the compiled extension
``_em_core`` when available and falls back to the pure-Python twin
``_em_fallback`` otherwise (force the fallback with KERRPOL_PURE_PYTHON=1).
``bench/benchmark_em.py`` compares the two.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import UnstableModelError, ValidationError
from .spectra import FluctuationModel, NoiseSpectrum

MAX_STEP_FRACTION = 0.1   # dt * |m11| above this is too coarse to trust
DEFAULT_CHUNK = 1 << 21   # noise samples per kernel call


def _load_kernel():
    if os.environ.get("KERRPOL_PURE_PYTHON"):
        from . import _em_fallback
        return _em_fallback, False
    try:
        from . import _em_core
        return _em_core, True
    except ImportError:
        from . import _em_fallback
        return _em_fallback, False


_kernel, _kernel_compiled = _load_kernel()


def kernel_backend() -> str:
    """Which integrator backend is active: 'compiled' or 'python'."""
    return "compiled" if _kernel_compiled else "python"


@dataclass(frozen=True)
class TrajectoryConfig:
    """Integration settings for one stochastic trajectory."""

    dt: float
    duration: float
    seed: int
    burn_in: float = 0.0
    theta_list: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.duration >= 1000.0 * self.dt:
            raise ValidationError("duration must be at least 1000*dt")
        if not 0.0 <= self.burn_in <= 0.5:
            raise ValidationError("burn_in fraction must lie in [0, 0.5]")
        if len(self.theta_list) == 0:
            raise ValidationError("theta_list must not be empty")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True, eq=False)
class QuadratureSeries:
    """Output quadrature records X_theta(t) after burn-in removal."""

    dt: float
    thetas: tuple[float, ...]
    samples: np.ndarray                 # shape (n_kept, n_theta)
    field: np.ndarray | None            # intracavity trajectory, optional
    seed: int


def simulate(model: FluctuationModel, cfg: TrajectoryConfig,
             store_field: bool = False,
             chunk_size: int = DEFAULT_CHUNK) -> QuadratureSeries:
    """Integrate the linear fluctuation dynamics; deterministic per seed.

    Noise increments come from ``numpy.random.default_rng(seed)`` in fixed
    chunk sizes, so identical configurations reproduce bit-identical series.
    """
    if not model.is_stable:
        raise UnstableModelError(
            f"cannot simulate unstable {model.mode_label}-mode model "
            f"(margin {model.stability_margin:.3g} rad/s)")
    if cfg.dt * abs(model.m11) > MAX_STEP_FRACTION:
        raise ValidationError(
            f"step too coarse: dt*|m11| = {cfg.dt * abs(model.m11):.3g} "
            f"> {MAX_STEP_FRACTION}")

    n_total = cfg.n_steps
    n_burn = int(cfg.burn_in * n_total)
    thetas = np.asarray(cfg.theta_list, dtype=float)
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)

    rng = np.random.default_rng(cfg.seed)
    sigma = 0.5 * math.sqrt(cfg.dt)  # per-component std of dxi

    x_out = np.empty((n_total, thetas.size))
    field_out = np.empty(n_total, dtype=np.complex128) if store_field else None
    a = 0j
    done = 0
    while done < n_total:
        m = min(chunk_size, n_total - done)
        # interleaved draws keep the noise stream independent of chunking
        draws = rng.standard_normal(2 * m)
        noise = (draws[0::2] + 1j * draws[1::2]) * sigma
        x_chunk, field_chunk, a = _kernel.integrate_em(
            complex(model.m11), complex(model.m12), float(model.kappa),
            float(cfg.dt), noise, cos_t, sin_t, a, bool(store_field))
        x_out[done:done + m] = x_chunk
        if store_field:
            field_out[done:done + m] = field_chunk
        done += m

    return QuadratureSeries(
        dt=cfg.dt,
        thetas=tuple(float(t) for t in thetas),
        samples=x_out[n_burn:],
        field=field_out[n_burn:] if store_field else None,
        seed=cfg.seed)


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    """Segment-averaged PSD per (omega, theta) with standard errors."""

    omega: np.ndarray                   # rad/s, positive bins
    psd: np.ndarray                     # shape (n_omega, n_theta)
    stderr: np.ndarray
    n_segments: int
    thetas: tuple[float, ...]

    def __post_init__(self) -> None:
        if np.any(self.psd < 0.0):
            raise ValidationError("PSD estimates cannot be negative")


def welch_psd(samples: np.ndarray, dt: float, segment_length: int,
              overlap: float = 0.5) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Hann-windowed averaged periodogram on raw samples.

    Density convention: P(omega) = dt * |FFT(w*window)|^2 / sum(window^2),
    so a flat process with per-sample variance v has PSD v*dt and the
    shot-noise-discretized output (variance 1/dt) sits at 1.  Returns
    (omega, mean, stderr, n_segments); the DC bin is included, frequencies
    are rad/s.
    """
    x = np.atleast_2d(samples.T).T       # (n, n_cols)
    n = x.shape[0]
    if segment_length > n:
        raise ValidationError("segment_length exceeds series length")
    if not 0.0 <= overlap <= 0.9:
        raise ValidationError("overlap must lie in [0, 0.9]")
    hop = max(1, int(round(segment_length * (1.0 - overlap))))
    starts = range(0, n - segment_length + 1, hop)
    n_seg = len(starts)
    if n_seg < 4:
        raise ValidationError(
            f"need at least 4 segments for error bars, got {n_seg}")

    window = np.hanning(segment_length + 1)[:-1]   # periodic Hann
    norm = dt / np.sum(window ** 2)
    n_freq = segment_length // 2 + 1
    acc = np.zeros((n_freq, x.shape[1]))
    acc2 = np.zeros_like(acc)
    for s in starts:
        seg = x[s:s + segment_length] * window[:, None]
        p = norm * np.abs(np.fft.rfft(seg, axis=0)) ** 2
        acc += p
        acc2 += p * p
    mean = acc / n_seg
    var = np.maximum(acc2 - n_seg * mean ** 2, 0.0) / (n_seg - 1)
    stderr = np.sqrt(var / n_seg)
    omega = 2.0 * math.pi * np.fft.rfftfreq(segment_length, d=dt)
    return omega, mean, stderr, n_seg


def psd_estimate(series: QuadratureSeries, segment_length: int,
                 overlap: float = 0.5) -> PsdEstimate:
    """Welch estimate of the output quadrature spectra of ``series``."""
    omega, mean, stderr, n_seg = welch_psd(
        series.samples, series.dt, segment_length, overlap)
    return PsdEstimate(omega=omega, psd=mean, stderr=stderr,
                       n_segments=n_seg, thetas=series.thetas)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Pointwise z-scores of analytic spectra against PSD estimates."""

    omega: np.ndarray
    theta: np.ndarray
    analytic: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    z: np.ndarray
    max_abs_z: float
    fraction_within_3: float
    passed: bool

    def to_dict(self) -> dict:
        rows = [
            {"omega": float(w), "theta": float(t), "analytic": float(a),
             "empirical": float(e), "stderr": float(s), "z": float(z)}
            for w, t, a, e, s, z in zip(self.omega, self.theta, self.analytic,
                                        self.empirical, self.stderr, self.z)
        ]
        return {"points": rows,
                "max_abs_z": float(self.max_abs_z),
                "fraction_within_3": float(self.fraction_within_3),
                "passed": bool(self.passed)}


def compare(analytic: NoiseSpectrum, empirical: PsdEstimate,
            rtol: float = 1e-9) -> ComparisonReport:
    """z-score table (analytic - empirical)/stderr on the common grid.

    Frequencies are matched within ``rtol``; phases must match exactly.
    Passes when at least 95% of the compared points satisfy |z| <= 3.
    """
    theta_cols = []
    for t in empirical.thetas:
        matches = np.nonzero(np.abs(analytic.theta - t) <= 1e-12)[0]
        if matches.size == 0:
            raise ValidationError(
                f"analytic spectrum does not cover theta = {t!r}")
        theta_cols.append(int(matches[0]))

    omega_pairs = []
    for i, w in enumerate(analytic.omega):
        j = int(np.argmin(np.abs(empirical.omega - w)))
        if abs(empirical.omega[j] - w) <= rtol * max(abs(w), 1.0):
            omega_pairs.append((i, j))
    if not omega_pairs:
        raise ValidationError("analytic and empirical grids are disjoint")

    omega_list, theta_list, ana, emp, err = [], [], [], [], []
    for i, j in omega_pairs:
        for k, (t, col) in enumerate(zip(empirical.thetas, theta_cols)):
            omega_list.append(analytic.omega[i])
            theta_list.append(t)
            ana.append(analytic.values[i, col])
            emp.append(empirical.psd[j, k])
            err.append(empirical.stderr[j, k])
    ana = np.array(ana)
    emp = np.array(emp)
    err = np.array(err)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(err > 0, (ana - emp) / err, 0.0)
    max_abs = float(np.max(np.abs(z)))
    frac = float(np.mean(np.abs(z) <= 3.0))
    return ComparisonReport(
        omega=np.array(omega_list), theta=np.array(theta_list),
        analytic=ana, empirical=emp, stderr=err, z=z,
        max_abs_z=max_abs, fraction_within_3=frac,
        passed=frac >= 0.95)
