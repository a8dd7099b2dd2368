import numpy as np
import pytest
import sympy

from helpers import ar_realization, grid_search_reflection, sinusoid, trapezoid

from semgrasp.burg import (
    BurgModel,
    burg_fit,
    compute_reflection,
    init_state,
    psd_from_model,
    stage_error,
    update_ar_coefficients,
    update_prediction_errors,
)
from semgrasp.errors import DegenerateSignalError


# ---------------------------------------------------------------- lattice ops


def test_init_state_stage_zero():
    x = np.array([1.0, 2.0, 3.0])
    s = init_state(x)
    assert s.stage == 0
    assert s.signal_length == 3
    np.testing.assert_array_equal(s.forward_errors, x)
    np.testing.assert_array_equal(s.backward_errors, x)
    assert s.ar_coeffs == [] and s.reflection_coeffs == []
    # stage-0 error: forward plus backward sums over the whole signal
    assert s.error_power == pytest.approx(2 * np.dot(x, x))


def test_update_errors_zero_reflection_is_shift():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(16)
    s0 = init_state(x)
    s1 = update_prediction_errors(s0, 0.0)
    # forward errors keep their values on the shrunken range; backward errors
    # are the one-sample delay of the previous backward errors
    np.testing.assert_array_equal(s1.forward_errors, x[1:])
    np.testing.assert_array_equal(s1.backward_errors, x[:-1])
    assert s1.stage == 1
    assert len(s1.forward_errors) == len(x) - 1
    assert s1.ar_coeffs == [0.0]


def test_update_errors_hand_expansion_alternating():
    # x = [1,-1,1,-1], r = 1:
    #   e1f[n] = x[n] + 1*x[n-1] = 0 for n=1..3
    #   e1b[n] = x[n-1] + 1*x[n] = 0 for n=1..3
    s0 = init_state(np.array([1.0, -1.0, 1.0, -1.0]))
    s1 = update_prediction_errors(s0, 1.0)
    np.testing.assert_array_equal(s1.forward_errors, np.zeros(3))
    np.testing.assert_array_equal(s1.backward_errors, np.zeros(3))


def test_two_stage_update_matches_symbolic_expansion():
    # expand the stage-2 forward/backward errors symbolically in terms of the
    # raw samples, then compare against two numeric lattice updates
    n_samp = 6
    xs = sympy.symbols(f"x0:{n_samp}")
    r1, r2 = sympy.symbols("r1 r2")
    e0f = list(xs)
    e0b = list(xs)
    e1f = {n: e0f[n] + r1 * e0b[n - 1] for n in range(1, n_samp)}
    e1b = {n: e0b[n - 1] + r1 * e0f[n] for n in range(1, n_samp)}
    e2f = {n: e1f[n] + r2 * e1b[n - 1] for n in range(2, n_samp)}
    e2b = {n: e1b[n - 1] + r2 * e1f[n] for n in range(2, n_samp)}

    rng = np.random.default_rng(7)
    x_val = rng.standard_normal(n_samp)
    r1_val, r2_val = 0.37, -0.52
    subs = dict(zip(xs, x_val)) | {r1: r1_val, r2: r2_val}

    s = init_state(x_val)
    s = update_prediction_errors(s, r1_val)
    s = update_prediction_errors(s, r2_val)
    for j, n in enumerate(range(2, n_samp)):
        assert s.forward_errors[j] == pytest.approx(float(e2f[n].subs(subs)), abs=1e-12)
        assert s.backward_errors[j] == pytest.approx(float(e2b[n].subs(subs)), abs=1e-12)


def test_update_errors_rejects_bad_reflection():
    s = init_state(np.arange(5.0))
    with pytest.raises(ValueError):
        update_prediction_errors(s, 1.5)


def test_compute_reflection_constant_signal_errors_at_stage_one():
    # stage 0 of a constant signal yields r = -1, which annihilates the
    # residual; the stage-1 denominator is then exactly zero
    s0 = init_state(np.array([5.0, 5.0, 5.0, 5.0]))
    r = compute_reflection(s0)
    assert r == -1.0
    s1 = update_prediction_errors(s0, r)
    with pytest.raises(DegenerateSignalError):
        compute_reflection(s1)


def test_compute_reflection_ar1_matches_grid_and_theory():
    # x[n] = 0.5 x[n-1] + w[n]  ->  whitening coefficient a1 = -0.5, and the
    # first reflection coefficient equals a1 for an AR(1) fit
    x = ar_realization([-0.5], n=10000, seed=21)
    s = init_state(x)
    r = compute_reflection(s)
    assert -0.55 <= r <= -0.45
    r_grid = grid_search_reflection(s.forward_errors, s.backward_errors, n_points=4001)
    assert r == pytest.approx(r_grid, abs=1e-3)


def test_compute_reflection_white_noise_near_zero():
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        s = init_state(rng.standard_normal(10000))
        assert abs(compute_reflection(s)) < 0.05


def test_reflection_bound_cauchy_schwarz():
    rng = np.random.default_rng(8)
    for _ in range(50):
        x = rng.standard_normal(int(rng.integers(8, 64)))
        s = init_state(x)
        for _ in range(4):
            r = compute_reflection(s)
            assert abs(r) <= 1.0 + 1e-12
            s = update_prediction_errors(s, r)


def test_grid_oracle_equivalence_small_signals():
    rng = np.random.default_rng(77)
    for _ in range(20):
        x = rng.standard_normal(int(rng.integers(8, 33)))
        s = init_state(x)
        for _ in range(3):
            r = compute_reflection(s)
            r_grid = grid_search_reflection(s.forward_errors, s.backward_errors)
            assert r == pytest.approx(r_grid, abs=2e-5)
            s = update_prediction_errors(s, r)


def test_update_ar_coefficients_base_case():
    assert update_ar_coefficients([], 0.3) == [0.3]


def test_update_ar_coefficients_order_two_expansion():
    a1, r = 0.6, -0.25
    out = update_ar_coefficients([a1], r)
    assert out == pytest.approx([a1 + r * a1, r])


def test_update_ar_coefficients_zero_reflection_appends_zero():
    prev = [0.5, -0.2, 0.1]
    assert update_ar_coefficients(prev, 0.0) == prev + [0.0]


def test_stage_error_zero_series():
    s0 = init_state(np.array([1.0, -1.0, 1.0, -1.0]))
    r = compute_reflection(s0)
    assert r == 1.0  # alternating signal is perfectly predicted by x[n] = -x[n-1]
    s1 = update_prediction_errors(s0, r)
    assert stage_error(s1) == 0.0
    assert s1.error_power == 0.0


def test_stage_error_monotone_nonincreasing():
    rng = np.random.default_rng(9)
    for _ in range(100):
        x = rng.standard_normal(int(rng.integers(16, 64)))
        s = init_state(x)
        prev = stage_error(s)
        for _ in range(10):
            s = update_prediction_errors(s, compute_reflection(s))
            cur = stage_error(s)
            assert cur <= prev * (1 + 1e-12)
            prev = cur


# ------------------------------------------------------------------ burg_fit


def test_burg_fit_recovers_ar2_coefficients():
    # poles at radius 0.9, angles +-pi/4:
    # whitening filter 1 - 2*0.9*cos(pi/4) z^-1 + 0.81 z^-2
    a_true = [-2 * 0.9 * np.cos(np.pi / 4), 0.81]
    errs = []
    for seed in range(3):
        x = ar_realization(a_true, n=8192, seed=seed)
        model = burg_fit(x, 2, 500.0)
        errs.append(np.abs(np.array(model.ar_coeffs) - a_true).mean())
    assert np.mean(errs) < 0.05


def test_burg_fit_sinusoid_peak_location():
    x = sinusoid(50.0, 2048, rate=500.0, noise=0.05, seed=4)
    model = burg_fit(x, 10, 500.0)
    psd = psd_from_model(model, 128)
    peak = psd.frequencies[int(np.argmax(psd.power))]
    bin_width = psd.frequencies[1] - psd.frequencies[0]
    assert abs(peak - 50.0) <= bin_width


def test_burg_fit_order_ten_reflection_invariants(synth_dataset):
    model = burg_fit(synth_dataset.records[0].channel1, 10, 500.0)
    assert len(model.reflection_coeffs) == 10
    assert all(abs(r) <= 1.0 + 1e-12 for r in model.reflection_coeffs)
    assert len(model.ar_coeffs) == 10
    assert model.noise_variance > 0


def test_burg_fit_rejects_bad_inputs():
    with pytest.raises(DegenerateSignalError):
        burg_fit(np.full(64, 3.25), 2, 500.0)
    with pytest.raises(ValueError):
        burg_fit(np.arange(8.0), 7, 500.0)  # length must exceed order + 1
    with pytest.raises(ValueError):
        burg_fit(np.arange(64.0), 0, 500.0)
    with pytest.raises(DegenerateSignalError):
        burg_fit(np.array([np.nan, 1.0, 2.0, 3.0]), 1, 500.0)


def test_burg_fit_perfectly_predictable_signal_errors():
    x = np.array([1.0, -1.0] * 8)
    with pytest.raises(DegenerateSignalError):
        burg_fit(x, 1, 500.0)


def test_burg_fit_scale_equivariance():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(512)
    base = burg_fit(x, 6, 500.0)
    for c in (3.0, -0.01, 1e4):
        scaled = burg_fit(c * x, 6, 500.0)
        np.testing.assert_allclose(scaled.ar_coeffs, base.ar_coeffs, rtol=1e-9)
        np.testing.assert_allclose(scaled.reflection_coeffs, base.reflection_coeffs, rtol=1e-9)
        assert scaled.noise_variance == pytest.approx(base.noise_variance * c * c, rel=1e-9)
        p0 = psd_from_model(base, 64).power
        p1 = psd_from_model(scaled, 64).power
        np.testing.assert_allclose(p1, p0 * c * c, rtol=1e-9)


def test_burg_fit_stability_low_orders():
    rng = np.random.default_rng(23)
    for order in (1, 2, 3, 4):
        for _ in range(10):
            x = rng.standard_normal(256)
            model = burg_fit(x, order, 500.0)
            roots = np.roots(np.concatenate([[1.0], model.ar_coeffs]))
            assert np.all(np.abs(roots) < 1.0)


# ----------------------------------------------------------------------- psd


def test_psd_flat_for_zero_coefficients():
    model = BurgModel(order=1, ar_coeffs=[0.0], reflection_coeffs=[0.0],
                      noise_variance=2.5, sample_rate=500.0)
    psd = psd_from_model(model, 64)
    np.testing.assert_allclose(psd.power, 2.5 / 500.0, rtol=1e-12)


def test_psd_ar1_low_pass_is_monotone():
    model = BurgModel(order=1, ar_coeffs=[-0.9], reflection_coeffs=[-0.9],
                      noise_variance=1.0, sample_rate=500.0)
    psd = psd_from_model(model, 128)
    assert np.all(np.diff(psd.power) < 0)


def test_psd_grid_and_invariants():
    model = BurgModel(order=2, ar_coeffs=[-0.5, 0.2], reflection_coeffs=[0.0, 0.2],
                      noise_variance=1.0, sample_rate=500.0)
    psd = psd_from_model(model, 33)
    assert psd.nbins == 33
    assert len(psd.frequencies) == len(psd.power) == 33
    assert psd.frequencies[0] == 0.0
    assert psd.frequencies[-1] == 250.0
    assert np.all(np.diff(psd.frequencies) > 0)
    assert np.all(psd.power >= 0)
    assert np.all(np.isfinite(psd.power))
    with pytest.raises(ValueError):
        psd_from_model(model, 7)


def test_psd_integral_recovers_realization_variance():
    for seed, a in ((1, [-0.6]), (2, [-1.0, 0.5])):
        x = ar_realization(a, n=200000, seed=seed)
        model = burg_fit(x, len(a), 500.0)
        psd = psd_from_model(model, 512)
        integral = 2.0 * trapezoid(psd.power, psd.frequencies)
        assert integral == pytest.approx(np.var(x), rel=0.10)
