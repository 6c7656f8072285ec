import numpy as np
import pytest
from hypothesis import given, strategies as st

from spincool.analysis import fft_peak, fit_decay, visibility
from spincool.bath import BathModel, sigma_from_t2star
from spincool.bloch import averaged_chevron, rabi_lineshape
from spincool.model import QubitParams
from spincool.sequences import (CHUNK, Delay, Envelope, MeasurementModel, Rotate, cpmg_sequence,
                                ramsey_sequence, rotation, run_chevron, run_cpmg, run_detuned_ramsey,
                                run_phase_sweep, run_rabi, run_ramsey, run_t1_pumpprobe,
                                simulate_counts)

IDEAL = QubitParams(osp_fidelity=1.0, kappa_ratio=0.0, t1=1e12)
QUIET = BathModel(sigma_static=0.0)


def binomial_se(p, n):
    return np.sqrt(np.clip(p * (1 - p), 1e-4, None) / n)


def test_noiseless_rabi_matches_lineshape():
    t = np.linspace(0, 60, 31)
    env = run_rabi(IDEAL, QUIET, 40.0, 10.0, t, 10_000, seed=3)
    p = rabi_lineshape(t, 10.0, 40.0)
    assert np.all(np.abs(env.top - p) < 4 * binomial_se(p, 10_000))
    np.testing.assert_array_equal(env.bottom, 0.0)


def test_rabi_detuning_sign_convention():
    # the frame detuning enters as delta - delta_ac
    t = np.linspace(0, 60, 13)
    a = run_rabi(IDEAL, QUIET, 40.0, 10.0, t, 2000, seed=1, delta_ac=10.0)
    b = run_rabi(IDEAL, QUIET, 40.0, 0.0, t, 2000, seed=1)
    np.testing.assert_array_equal(a.top, b.top)


def test_warm_chevron_matches_quadrature():
    t = np.array([2.0, 5.0, 10.0, 20.0])
    deltas = np.linspace(-300, 300, 7)
    data = run_chevron(IDEAL, BathModel(sigma_static=52.0), 100.0, deltas, t, 4000, seed=2)
    ref = averaged_chevron(t[None, :], deltas[:, None], 100.0, 52.0)
    assert np.all(np.abs(data - ref) < 4 * binomial_se(ref, 4000))


def test_rabi_quality_independent_of_rabi_frequency():
    qs = []
    for omega in (65.0, 130.0):
        t = np.linspace(0, 600 * 65.0 / omega, 401)
        env = run_rabi(QubitParams(), QUIET, omega, 0.0, t, 4000, seed=4)
        res = fit_decay(env, "exponential", offset=True, oscillation=omega)
        qs.append(2 * res["T"] * 1e-3 * res["frequency"])
    assert qs[0] == pytest.approx(qs[1], rel=0.05)
    assert qs[1] == pytest.approx(1 / (np.pi * 0.019), rel=0.05)


def test_ramsey_visibility_one_without_noise():
    env = run_ramsey(IDEAL, QUIET, np.linspace(0, 500, 11), 0.0, 500, seed=0)
    np.testing.assert_array_equal(env.visibility, 1.0)


def test_ramsey_serrodyne_peak():
    env = run_ramsey(QubitParams(), BathModel(sigma_static=0.355), np.linspace(0, 2000, 201), 20.0, 2000, 5)
    assert fft_peak(env).centre == pytest.approx(20.0, abs=0.1)


def test_ramsey_t2star_narrow_bath():
    env = run_ramsey(QubitParams(), BathModel(sigma_static=2.9), np.linspace(0, 300, 151), 0.0, 4000, 6)
    assert fit_decay(env, "gaussian")["T"] == pytest.approx(77.6, rel=0.03)


def test_ramsey_t2star_inverse_proportional_to_width():
    tau = np.linspace(0, 600, 151)
    ts = [fit_decay(run_ramsey(QubitParams(), BathModel(sigma_static=s), tau * 2.9 / s, 0.0, 3000, 8),
                    "gaussian")["T"] for s in (1.45, 2.9, 5.8)]
    assert ts[0] / ts[1] == pytest.approx(2.0, rel=0.05)
    assert ts[1] / ts[2] == pytest.approx(2.0, rel=0.05)


def test_ramsey_rejects_descending_grid():
    with pytest.raises(ValueError):
        run_ramsey(IDEAL, QUIET, [10.0, 5.0, 0.0], 0.0, 10)


def test_final_phase_pi_swaps_envelopes_exactly():
    tau = np.linspace(0, 300, 31)
    bath = BathModel(sigma_static=2.9, sigma_dyn=1.0)
    seq = ramsey_sequence(tau, 20.0)
    shifted = seq[:-1] + [rotation(np.pi / 2, phase=seq[-1].phase + np.pi)]
    a = simulate_counts(seq, (31, 2), QubitParams(), bath, 700, 11, "swap")
    b = simulate_counts(shifted, (31, 2), QubitParams(), bath, 700, 11, "swap")
    np.testing.assert_array_equal(a[:, ::-1], b)
    env = Envelope.from_counts(tau, a, 700)
    np.testing.assert_array_equal(env.swapped().top, Envelope.from_counts(tau, b, 700).top)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=20), st.floats(0.01, 100.0))
def test_visibility_scale_invariant(values, scale):
    down = np.asarray(values)
    up = down[::-1] * 0.5
    np.testing.assert_allclose(visibility(scale * down, scale * up), visibility(down, up), atol=1e-12)
    assert np.all(np.abs(visibility(down, up)) <= 1.05 + 1e-12) or np.max(down - up) <= 0


def test_shot_noise_scales_inverse_sqrt():
    tau = np.full(200, 100.0)
    bath = BathModel(sigma_static=2.9)
    spread = []
    for shots in (256, 1024):
        c = simulate_counts(ramsey_sequence(tau), (200, 2), QubitParams(), bath, shots, 1, ("noise", shots))
        spread.append(np.std((c[:, 0] - c[:, 1]) / shots))
    assert spread[0] / spread[1] == pytest.approx(2.0, rel=0.2)


def test_counts_independent_of_threads_and_chunking():
    tau = np.linspace(0, 200, 21)
    bath = BathModel(sigma_static=2.9, sigma_dyn=1.0)
    shots = 3 * CHUNK + 17
    a = run_ramsey(QubitParams(), bath, tau, 0.0, shots, 9, threads=1)
    b = run_ramsey(QubitParams(), bath, tau, 0.0, shots, 9, threads=4)
    np.testing.assert_array_equal(a.top, b.top)
    np.testing.assert_array_equal(a.bottom, b.bottom)


def test_detuned_ramsey_zero_offset_does_not_oscillate():
    bath = BathModel(sigma_static=float(sigma_from_t2star(87.0)))
    env = run_detuned_ramsey(QubitParams(), bath, [0.0], np.linspace(0, 300, 151), 3000, 1).envelopes[0]
    assert fft_peak(env).centre < 1.0


@pytest.mark.parametrize("offset", [-50.0, 25.0, 50.0])
def test_detuned_ramsey_oscillates_at_offset(offset):
    bath = BathModel(sigma_static=float(sigma_from_t2star(87.0)))
    env = run_detuned_ramsey(QubitParams(), bath, [offset], np.linspace(0, 300, 301), 3000, 1).envelopes[0]
    resolution = 1e3 / (300 * 8)
    assert fft_peak(env).centre == pytest.approx(abs(offset), abs=resolution)


def test_detuned_ramsey_t2star_at_50mhz():
    bath = BathModel(sigma_static=float(sigma_from_t2star(87.0)))
    env = run_detuned_ramsey(QubitParams(), bath, [50.0], np.linspace(0, 300, 301), 5000, 1).envelopes[0]
    assert fit_decay(env, "gaussian", oscillation=50.0)["T"] == pytest.approx(87.0, abs=6.0)


@pytest.mark.parametrize("n_pi", [1, 2, 5])
def test_static_bath_echo_visibility_one(n_pi):
    env = run_cpmg(IDEAL, BathModel(sigma_static=52.0), n_pi, np.linspace(0.1, 20, 9), 500)
    np.testing.assert_allclose(env.visibility, 1.0, atol=1e-12)


def test_cpmg_conventions():
    t = np.array([100.0])
    a = cpmg_sequence(2, t, convention="n_tau")
    b = cpmg_sequence(2, t, convention="2n_tau")
    free = lambda seq: sum(float(np.squeeze(el.duration)) for el in seq if isinstance(el, Delay))
    assert free(a) == pytest.approx(100.0)
    assert free(b) == pytest.approx(50.0)
    with pytest.raises(ValueError):
        cpmg_sequence(0, t)
    with pytest.raises(ValueError):
        cpmg_sequence(1, t, convention="other")


def test_t1_zero_delay_has_no_contrast():
    env = run_t1_pumpprobe(QubitParams(), [0.0, 47.0, 94.0], 2000, 1)
    assert env.visibility[0] == 0.0


def test_t1_analytic_point():
    params = QubitParams()
    env = run_t1_pumpprobe(params, [0.0, 47.0, 500.0], 20_000, 2)
    d = env.top - env.bottom
    meas = MeasurementModel.from_params(params)
    d_inf = meas.bright_probability(0.0) - meas.bright_probability(meas.initial_z)
    assert d[1] / d_inf == pytest.approx(1 - np.exp(-1), abs=0.03)


def test_phase_sweep_extremes_and_period():
    params = QubitParams()
    phi = np.linspace(0, 4 * np.pi, 33)
    env = run_phase_sweep(params, phi, 20_000, 3)
    assert env.top[0] == pytest.approx(env.top.max(), abs=0.02)
    assert env.top[8] == pytest.approx(env.top.min(), abs=0.02)
    # closed form: two pi/2 pulses give P_down = (1 + cos phi) / 2, readout scaled by F^2
    f = params.osp_fidelity
    expected = 0.5 * (1 - f * f * (-np.cos(phi)))
    assert np.max(np.abs(env.top - expected)) < 4 * np.sqrt(0.25 / 20_000)


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        simulate_counts([Rotate(100.0, -1.0)], (1, 2), IDEAL, QUIET, 10, 0, "x")
    with pytest.raises(ValueError):
        simulate_counts([Delay(1.0)], (1, 2), IDEAL, QUIET, 0, 0, "x")
