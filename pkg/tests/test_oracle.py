import math

import numpy as np
import pytest

import kerrpol as kp
from kerrpol import oracle as oracle_mod
from kerrpol import _em_fallback

from conftest import make_params, steady_at


def empty_resonant_model():
    p = make_params(delta0=0.0)
    steady = kp.steady_states(p, kp.DriveField(alpha_in=0j), 0.0)[0]
    return kp.build_drift_y(steady, p), p


def squeezing_model(s=0.2, delta0=-12.0, det_y=1.9):
    p = make_params(delta0=delta0)
    delta_c = delta0 * (1.0 - s) + det_y
    steady = steady_at(p, delta_c, s)
    model = kp.build_drift_y(steady, p)
    assert model.is_stable
    return model, p


# ---------------------------------------------------------------------------
# trajectory configuration

def test_config_validation():
    with pytest.raises(kp.ValidationError):
        kp.TrajectoryConfig(dt=0.0, duration=1.0, seed=1)
    with pytest.raises(kp.ValidationError):
        kp.TrajectoryConfig(dt=0.01, duration=5.0, seed=1)   # < 1000 dt
    with pytest.raises(kp.ValidationError):
        kp.TrajectoryConfig(dt=0.01, duration=100.0, seed=1, burn_in=0.7)
    with pytest.raises(kp.ValidationError):
        kp.TrajectoryConfig(dt=0.01, duration=100.0, seed=1, theta_list=())


def test_simulate_rejects_coarse_step_and_instability():
    model, p = squeezing_model()
    with pytest.raises(kp.ValidationError):
        kp.simulate(model, kp.TrajectoryConfig(dt=0.2, duration=400.0, seed=1))

    p2 = make_params(delta0=-10.0)
    steady = steady_at(p2, kp.linear_dephasing(p2) * (1.0 - 0.5), 0.5)
    unstable = kp.build_drift_y(steady, p2)
    assert not unstable.is_stable
    with pytest.raises(kp.UnstableModelError):
        kp.simulate(unstable, kp.TrajectoryConfig(dt=0.001, duration=10.0, seed=1))


# ---------------------------------------------------------------------------
# simulation statistics

def test_stationary_field_variance_is_half():
    # resonant empty cavity: d a = -kappa a dt + sqrt(2 kappa) dxi, so the
    # stationary <|a|^2> balances at 1/2 quantum
    model, _ = empty_resonant_model()
    cfg = kp.TrajectoryConfig(dt=0.02, duration=8000.0, seed=42, burn_in=0.05)
    series = kp.simulate(model, cfg, store_field=True)
    mag2 = np.abs(series.field) ** 2
    blocks = np.array_split(mag2, 64)
    means = np.array([b.mean() for b in blocks])
    stderr = means.std(ddof=1) / math.sqrt(len(means))
    assert abs(means.mean() - 0.5) <= 3.0 * stderr


def test_fixed_seed_is_bit_identical():
    model, _ = squeezing_model()
    cfg = kp.TrajectoryConfig(dt=0.01, duration=200.0, seed=7,
                              theta_list=(0.0, 0.9))
    s1 = kp.simulate(model, cfg, store_field=True)
    s2 = kp.simulate(model, cfg, store_field=True)
    assert np.array_equal(s1.samples, s2.samples)
    assert np.array_equal(s1.field, s2.field)


def test_different_seeds_agree_within_errors():
    model, _ = squeezing_model()
    psd = []
    for seed in (1, 2):
        cfg = kp.TrajectoryConfig(dt=0.01, duration=30000.0, seed=seed,
                                  burn_in=0.02, theta_list=(0.0,))
        psd.append(kp.psd_estimate(kp.simulate(model, cfg), 2048))
    a, b = psd
    sel = slice(1, 400, 20)
    z = (a.psd[sel, 0] - b.psd[sel, 0]) / np.hypot(a.stderr[sel, 0],
                                                   b.stderr[sel, 0])
    assert np.mean(np.abs(z)) < 1.5
    assert np.all(np.abs(z) < 5.0)


def test_backends_agree():
    model, _ = squeezing_model()
    cfg = kp.TrajectoryConfig(dt=0.01, duration=500.0, seed=11,
                              theta_list=(0.3,))
    native = kp.simulate(model, cfg, store_field=True)
    saved = oracle_mod._kernel
    oracle_mod._kernel = _em_fallback
    try:
        fallback = kp.simulate(model, cfg, store_field=True)
    finally:
        oracle_mod._kernel = saved
    assert np.allclose(native.samples, fallback.samples, rtol=1e-9, atol=1e-9)
    assert np.allclose(native.field, fallback.field, rtol=1e-9, atol=1e-12)


def test_chunked_integration_is_seamless():
    model, _ = squeezing_model()
    cfg = kp.TrajectoryConfig(dt=0.01, duration=300.0, seed=3)
    whole = kp.simulate(model, cfg, chunk_size=1 << 22)
    pieces = kp.simulate(model, cfg, chunk_size=1024)
    assert np.array_equal(whole.samples, pieces.samples)


def test_conjugate_reconstruction_matches_two_variable_integration():
    # the kernel stores only a; integrating the full conjugate pair
    # explicitly must reproduce conj(a) to 1e-12
    model, _ = squeezing_model()
    n = 4000
    dt = 0.01
    rng = np.random.default_rng(5)
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (0.5 * math.sqrt(dt))
    cos_t = np.array([1.0])
    sin_t = np.array([0.0])
    _, field, _ = _em_fallback.integrate_em(
        complex(model.m11), complex(model.m12), model.kappa, dt, noise,
        cos_t, sin_t, 0j, True)

    m = model.drift_matrix
    sq = math.sqrt(2.0 * model.kappa)
    v = np.zeros(2, dtype=complex)
    pair = np.empty((n, 2), dtype=complex)
    for k in range(n):
        pair[k] = v
        drive = np.array([noise[k], noise[k].conjugate()])
        v = v + dt * (m @ v) + sq * drive
    assert np.allclose(pair[:, 0], field, rtol=0, atol=1e-12)
    assert np.allclose(pair[:, 1], field.conjugate(), rtol=0, atol=1e-12)


# ---------------------------------------------------------------------------
# PSD estimation

def test_psd_pure_sinusoid_peaks_at_its_frequency():
    dt = 1.0
    n = 8192
    f0 = 50.0 / 1024.0   # exactly on a bin of the 1024-sample segments
    t = np.arange(n) * dt
    x = np.sin(2.0 * math.pi * f0 * t)
    series = kp.QuadratureSeries(dt=dt, thetas=(0.0,),
                                 samples=x[:, None], field=None, seed=0)
    est = kp.psd_estimate(series, 1024, overlap=0.5)
    peak = int(np.argmax(est.psd[:, 0]))
    assert est.omega[peak] == pytest.approx(2.0 * math.pi * f0, rel=1e-12)
    assert est.psd[peak, 0] > 100.0 * np.median(est.psd[:, 0])


def test_psd_unit_white_noise_is_flat_one():
    rng = np.random.default_rng(123)
    x = rng.standard_normal(400000)
    series = kp.QuadratureSeries(dt=1.0, thetas=(0.0,),
                                 samples=x[:, None], field=None, seed=0)
    est = kp.psd_estimate(series, 1024, overlap=0.5)
    sel = slice(1, None)   # skip the DC bin (mean not removed)
    z = (est.psd[sel, 0] - 1.0) / est.stderr[sel, 0]
    assert np.mean(np.abs(z) <= 3.0) > 0.95
    assert abs(np.mean(est.psd[sel, 0]) - 1.0) < 0.01


def test_psd_ornstein_uhlenbeck_matches_lorentzian():
    # exact AR(1) sampling of d x = -g x dt + sigma dW; two-sided PSD in the
    # density convention is sigma^2 / (g^2 + w^2)
    g, sigma, dt, n = 0.7, 1.3, 0.02, 1_500_000
    rho = math.exp(-g * dt)
    q = sigma * math.sqrt((1.0 - rho * rho) / (2.0 * g))
    rng = np.random.default_rng(77)
    w = rng.standard_normal(n)
    x = np.empty(n)
    acc = 0.0
    for k in range(n):
        acc = rho * acc + q * w[k]
        x[k] = acc
    series = kp.QuadratureSeries(dt=dt, thetas=(0.0,),
                                 samples=x[:, None], field=None, seed=0)
    est = kp.psd_estimate(series, 4096, overlap=0.5)
    sel = (est.omega > 0.05) & (est.omega < 10.0)
    lorentz = sigma ** 2 / (g ** 2 + est.omega[sel] ** 2)
    z = (est.psd[sel, 0] - lorentz) / est.stderr[sel, 0]
    assert np.mean(np.abs(z) <= 3.0) > 0.95


def test_psd_input_validation():
    series = kp.QuadratureSeries(dt=1.0, thetas=(0.0,),
                                 samples=np.zeros((100, 1)), field=None, seed=0)
    with pytest.raises(kp.ValidationError):
        kp.psd_estimate(series, 200)          # segment longer than series
    with pytest.raises(kp.ValidationError):
        kp.psd_estimate(series, 64, overlap=0.95)
    with pytest.raises(kp.ValidationError):
        kp.psd_estimate(series, 50, overlap=0.0)   # only 2 segments


def test_halving_dt_changes_psd_within_errors():
    model, _ = squeezing_model()
    estimates = []
    for dt in (0.02, 0.01):
        cfg = kp.TrajectoryConfig(dt=dt, duration=20000.0, seed=9,
                                  burn_in=0.02, theta_list=(0.0,))
        series = kp.simulate(model, cfg)
        estimates.append(kp.psd_estimate(series, int(round(40.96 / dt)), 0.5))
    coarse, fine = estimates
    sel = (coarse.omega > 0.1) & (coarse.omega < 3.0)
    idx = np.nonzero(sel)[0][::5]
    z = (coarse.psd[idx, 0] - fine.psd[idx, 0]) / np.hypot(
        coarse.stderr[idx, 0], fine.stderr[idx, 0])
    assert np.mean(np.abs(z)) < 1.0
    assert np.mean(np.abs(z) <= 3.0) >= 0.95


# ---------------------------------------------------------------------------
# analytic-vs-empirical comparison

def run_comparison(model, seed=17, duration=40000.0, perturb_sx=0.0):
    cfg = kp.TrajectoryConfig(dt=0.01, duration=duration, seed=seed,
                              burn_in=0.02, theta_list=(0.0, 0.8))
    sim_model = model
    if perturb_sx:
        steady = model.steady_ref
        scaled = kp.SteadyState(
            alpha_x=steady.alpha_x * math.sqrt(1.0 + perturb_sx),
            s_x=steady.s_x * (1.0 + perturb_sx), delta_c=steady.delta_c,
            delta_0=steady.delta_0, branch_index=steady.branch_index,
            mean_field_stable=steady.mean_field_stable,
            y_mode_margin=steady.y_mode_margin, alpha_in=steady.alpha_in)
        params = make_params(delta0=steady.delta_0)
        sim_model = kp.build_drift_y(scaled, params)
    series = kp.simulate(sim_model, cfg)
    est = kp.psd_estimate(series, 4096, overlap=0.5)
    sel = (est.omega > 0.15) & (est.omega < 2.5)
    idx = np.nonzero(sel)[0][:: max(1, sel.sum() // 10)][:10]
    analytic = kp.noise_spectrum(model, est.omega[idx], cfg.theta_list)
    sub = kp.PsdEstimate(omega=est.omega[idx], psd=est.psd[idx],
                         stderr=est.stderr[idx], n_segments=est.n_segments,
                         thetas=series.thetas)
    return kp.compare(analytic, sub)


def test_compare_self_consistency_passes():
    model, _ = squeezing_model()
    report = run_comparison(model)
    assert report.passed
    assert report.max_abs_z <= 3.5
    assert len(report.z) >= 20


def test_compare_flags_perturbed_model():
    model, _ = squeezing_model()
    report = run_comparison(model, perturb_sx=-0.2)
    assert not report.passed


def test_compare_identical_inputs_gives_zero_z():
    model, _ = squeezing_model()
    omega = np.linspace(0.2, 2.0, 12)
    thetas = (0.0, 0.5)
    spec = kp.noise_spectrum(model, omega, thetas)
    fake = kp.PsdEstimate(omega=omega, psd=spec.values.copy(),
                          stderr=np.zeros_like(spec.values), n_segments=8,
                          thetas=thetas)
    report = kp.compare(spec, fake)
    assert np.all(report.z == 0.0)
    assert report.passed


def test_compare_disjoint_grids_error():
    model, _ = squeezing_model()
    spec = kp.noise_spectrum(model, [0.5, 1.0], (0.0,))
    est = kp.PsdEstimate(omega=np.array([10.0, 20.0]),
                         psd=np.ones((2, 1)), stderr=np.ones((2, 1)),
                         n_segments=8, thetas=(0.0,))
    with pytest.raises(kp.ValidationError):
        kp.compare(spec, est)
