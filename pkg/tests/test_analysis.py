from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spincool import analysis
from spincool.analysis import (FitError, estimate_bath, fft_peak, fft_sigma, fit_chevron, fit_curve,
                               fit_decay, fit_powerlaw, hyperfine_per_nucleus, macrostates, metrics,
                               nuclei_count, osp_fidelity, pi_fidelity, visibility)
from spincool.bath import BathModel, sigma_from_t2star
from spincool.bloch import averaged_chevron
from spincool.model import QubitParams, default_gaas_registry
from spincool.sequences import run_ramsey


def envelope(t, y, unit="ns"):
    return SimpleNamespace(sweep=np.asarray(t, float), visibility=np.asarray(y, float), unit=unit)


def gaussian_envelope(t2, t_max, n=301, serrodyne=0.0):
    t = np.linspace(0, t_max, n)
    return envelope(t, np.exp(-(t / t2) ** 2) * np.cos(2 * np.pi * serrodyne * t * 1e-3))


def test_exponential_exact_recovery():
    t = np.linspace(0, 300, 121)
    res = fit_curve(t, np.exp(-t / 73.0), "exponential")
    assert res["T"] == pytest.approx(73.0, rel=1e-6)
    assert res["amplitude"] == pytest.approx(1.0, rel=1e-6)


def test_gaussian_with_noise():
    rng = np.random.default_rng(1)
    t = np.linspace(0, 2000, 201)
    y = np.exp(-(t / 608.0) ** 2) + 0.02 * rng.standard_normal(t.size)
    res = fit_curve(t, y, "gaussian")
    assert res["T"] == pytest.approx(608.0, rel=0.02)
    assert res.errors["T"] > 0


def test_stretched_on_exponential_gives_unit_alpha():
    t = np.linspace(0, 10, 60)
    res = fit_curve(t, 0.9 * np.exp(-t / 2.93), "stretched")
    assert res.alpha == pytest.approx(1.0, abs=0.05)


def test_damped_oscillation_fit():
    t = np.linspace(0, 300, 301)
    y = 0.5 * np.exp(-t / 64.0) * np.cos(2 * np.pi * 130.0 * t * 1e-3) + 0.5
    res = fit_decay(envelope(t, y), "exponential", offset=True, oscillation=129.0)
    assert res["T"] == pytest.approx(64.0, rel=1e-6)
    assert res["frequency"] == pytest.approx(130.0, rel=1e-8)
    assert res["offset"] == pytest.approx(0.5, rel=1e-6)


def test_recovery_fit():
    t = np.linspace(0, 200, 41)
    res = fit_curve(t, 0.8 * (1 - np.exp(-t / 47.0)), "recovery")
    assert res["T"] == pytest.approx(47.0, rel=1e-6)


@given(st.floats(0.1, 20.0))
def test_fit_reparametrisation(a):
    t = np.linspace(0, 300, 61)
    base = fit_curve(t, np.exp(-t / 73.0), "exponential")
    scaled = fit_curve(a * t, np.exp(-t / 73.0), "exponential")
    assert scaled["T"] == pytest.approx(a * base["T"], rel=1e-6)


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_curve([0, 1, 2], [1, 0.5, 0.2])
    with pytest.raises(ValueError):
        fit_curve(np.arange(6.0), np.ones(6), "lorentzian")
    with pytest.raises(ValueError):
        fit_curve(np.arange(6.0), [1, np.nan, 1, 1, 1, 1])


def test_fit_failure_reports_best_residual(monkeypatch):
    monkeypatch.setattr(analysis, "_lsq", lambda *a, **k: None)
    with pytest.raises(FitError) as info:
        fit_curve(np.arange(10.0), np.exp(-np.arange(10.0)))
    assert info.value.best_residual == np.inf
    assert "best residual" in str(info.value)


def test_fit_result_rows():
    res = fit_curve(np.linspace(0, 10, 20), np.exp(-np.linspace(0, 10, 20) / 3), "exponential")
    rows = res.rows()
    assert [r[1] for r in rows] == ["amplitude", "T"]
    assert all(r[0] == "exponential" for r in rows)


def test_fft_width_of_gaussian_envelope():
    assert fft_sigma(gaussian_envelope(78.0, 400.0)) == pytest.approx(2.90, rel=0.03)


@pytest.mark.parametrize("t2", [40.0, 78.0, 200.0, 634.0])
def test_fft_width_within_two_bins(t2):
    env = gaussian_envelope(t2, 6 * t2)
    bin_width = 1e3 / (8 * 301 * (6 * t2 / 300))
    assert abs(fft_sigma(env) - float(sigma_from_t2star(t2))) < 2 * bin_width


def test_serrodyne_shifts_but_does_not_broaden():
    plain = fft_peak(gaussian_envelope(634.0, 2000.0, 201))
    shifted = fft_peak(gaussian_envelope(634.0, 2000.0, 201, serrodyne=20.0))
    assert plain.centre == pytest.approx(0.0, abs=1e-9)
    assert shifted.centre == pytest.approx(20.0, abs=0.01)
    assert shifted.sigma == pytest.approx(plain.sigma, rel=0.01)


@pytest.mark.parametrize("sigma,t_max", [(0.355, 2000.0), (2.9, 300.0), (52.0, 20.0)])
def test_fft_round_trip_through_simulated_ramsey(sigma, t_max):
    env = run_ramsey(QubitParams(), BathModel(sigma_static=sigma), np.linspace(0, t_max, 201), 0.0, 4000, 2)
    assert fft_sigma(env) == pytest.approx(sigma, rel=0.05)


def test_fft_requires_uniform_grid():
    with pytest.raises(ValueError):
        fft_sigma(envelope([0, 1, 3, 4, 5, 6], np.ones(6)))


def test_powerlaw_exact():
    n = np.array([1, 2, 4, 8, 16, 20])
    pl = fit_powerlaw(np.c_[n, 2.93 * n ** 0.69])
    assert pl.gamma == pytest.approx(0.69, abs=1e-9)
    assert pl.prefactor == pytest.approx(2.93, rel=1e-9)


def test_powerlaw_from_two_endpoints():
    assert fit_powerlaw([(1, 2.93), (20, 22.0)]).gamma == pytest.approx(0.67, abs=0.005)


def test_powerlaw_uncertainty_grows_with_perturbation():
    rng = np.random.default_rng(3)
    n = np.array([1, 2, 4, 8, 16, 20])
    clean = 2.93 * n ** 0.69 * (1 + 0.001 * rng.standard_normal(n.size))
    gammas = []
    for _ in range(200):
        noisy = clean * (1 + 0.1 * rng.standard_normal(n.size))
        gammas.append(fit_powerlaw(np.c_[n, noisy]).gamma)
    assert np.std(gammas) > 10 * fit_powerlaw(np.c_[n, clean]).gamma_err
    assert fit_powerlaw(np.c_[n, clean * (1 + 0.1 * rng.standard_normal(n.size))]).gamma_err > \
        fit_powerlaw(np.c_[n, clean]).gamma_err


def test_powerlaw_validation():
    with pytest.raises(ValueError):
        fit_powerlaw([(1, 2.0)])
    with pytest.raises(ValueError):
        fit_powerlaw([(1, 2.0), (0, 3.0)])


@pytest.mark.parametrize("abundance", ["sublattice", "site"])
def test_nuclei_count_within_factor_two(abundance):
    n = estimate_bath(3.9, default_gaas_registry(), abundance=abundance).n_nuclei
    assert 0.7e5 <= n <= 2.8e5


def test_abundance_conventions_differ_by_two():
    reg = default_gaas_registry()
    assert nuclei_count(3.9, reg, "sublattice") == pytest.approx(2 * nuclei_count(3.9, reg, "site"))
    with pytest.raises(ValueError):
        nuclei_count(3.9, reg, "other")


def test_coupling_per_nucleus_and_macrostates():
    assert hyperfine_per_nucleus(1.4e5, 3.9) == pytest.approx(0.138, abs=5e-4)
    assert macrostates(0.355, 0.138) == pytest.approx(2.6, abs=0.1)


@given(st.floats(1.0, 100.0))
def test_estimator_scaling(t2):
    reg = default_gaas_registry()
    a, b = estimate_bath(t2, reg), estimate_bath(2 * t2, reg)
    assert b.n_nuclei == pytest.approx(4 * a.n_nuclei, rel=1e-12)
    assert b.a_c * np.sqrt(b.n_nuclei) == pytest.approx(a.a_c * np.sqrt(a.n_nuclei) / 2, rel=1e-12)


def test_rabi_metrics():
    q, fpi = metrics(73.0, 130.0)
    assert q == pytest.approx(18.98, abs=1e-9)
    assert fpi == pytest.approx(0.5 * (1 + np.exp(-1 / 18.98)), abs=1e-15)
    assert fpi == pytest.approx(0.975, abs=0.002)
    assert pi_fidelity(30.0) == pytest.approx(0.9836, abs=5e-5)


@given(st.floats(0.05, 1e4), st.floats(0.05, 1e4))
def test_pi_fidelity_monotone_and_bounded(q1, q2):
    lo, hi = sorted((q1, q2))
    assert 0.5 < pi_fidelity(lo) <= pi_fidelity(hi) <= 1.0


def test_trivial_estimators():
    assert osp_fidelity(0.0, 100.0) == 1.0
    assert osp_fidelity(1.99, 100.0) == pytest.approx(0.99, abs=1e-4)
    np.testing.assert_array_equal(visibility([0.3, 0.3], [0.3, 0.3]), 0.0)
    with pytest.raises(ValueError):
        osp_fidelity(2.0, 1.0)
    with pytest.raises(ValueError):
        pi_fidelity(0.0)


def test_chevron_fit_recovers_parameters():
    t = np.linspace(0, 480, 25)
    d = np.linspace(-40, 40, 21)
    tt, dd = np.meshgrid(t, d)
    data = averaged_chevron(tt, dd, 8.9, 8.1, -1.61)
    res = fit_chevron(t, d, data, amplitude=False)
    assert res["sigma_oh"] == pytest.approx(8.1, rel=1e-4)
    assert res["delta_ac"] == pytest.approx(-1.61, abs=1e-3)
    assert res["omega"] == pytest.approx(8.9, rel=1e-4)
    with pytest.raises(ValueError):
        fit_chevron(t, d, data[:-1])
