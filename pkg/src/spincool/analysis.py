"""Fits and estimators: decay models, FFT width, power laws, bath size, Rabi metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from .bath import sigma_from_t2star
from .bloch import averaged_chevron

TWO_PI = 2.0 * np.pi
N_STARTS = 8
FFT_PAD = 8
DECAY_MODELS = ("exponential", "gaussian", "stretched", "recovery")


class FitError(RuntimeError):
    """Raised when no start of a nonlinear fit converges."""

    def __init__(self, message, best_residual=np.inf):
        super().__init__(f"{message} (best residual norm {best_residual:.4g})")
        self.best_residual = best_residual


@dataclass
class FitResult:
    model: str
    params: dict
    errors: dict
    residual_norm: float
    n_points: int = 0
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]

    @property
    def alpha(self):
        return self.params.get("alpha")

    def rows(self):
        return [(self.model, k, v, self.errors.get(k, np.nan), self.residual_norm)
                for k, v in self.params.items()]


def visibility(c_down, c_up):
    """C = (c_down - c_up) / max(c_down - c_up); zero when there is no contrast."""
    d = np.asarray(c_down, float) - np.asarray(c_up, float)
    if d.size == 0:
        return d
    peak = np.max(d)
    if not peak > 0:
        return np.zeros_like(d)
    return d / peak


# --- nonlinear least squares ------------------------------------------------------

def _decay(model, t, T, alpha=1.0):
    x = np.abs(t / T)
    if model == "exponential":
        return np.exp(-x)
    if model == "gaussian":
        return np.exp(-x * x)
    if model == "stretched":
        # trial exponents during a fit can overflow x**alpha; exp(-inf) = 0 is the right limit
        with np.errstate(over="ignore"):
            return np.exp(-x ** alpha)
    raise ValueError(model)


def _builder(model, offset, oscillation, freq_scale=1.0):
    names = ["amplitude", "T"]
    if model == "stretched":
        names.append("alpha")
    if oscillation is not None:
        names += ["frequency", "phase"]
    if offset:
        names.append("offset")

    def f(p, t):
        q = dict(zip(names, p))
        if model == "recovery":
            y = q["amplitude"] * (1.0 - np.exp(-t / abs(q["T"])))
        else:
            y = q["amplitude"] * _decay(model, t, q["T"], abs(q.get("alpha", 1.0)))
        if oscillation is not None:
            y = y * np.cos(TWO_PI * q["frequency"] * freq_scale * t + q["phase"])
        return y + q.get("offset", 0.0)

    return names, f


def _lsq(fun, p0, n, names):
    res = least_squares(fun, p0, method="lm" if n >= len(p0) else "trf")
    if not (np.all(np.isfinite(res.x)) and np.isfinite(res.cost)):
        return None
    ssr = 2.0 * res.cost
    jtj = res.jac.T @ res.jac
    dof = max(n - len(p0), 1)
    cov = np.linalg.pinv(jtj) * ssr / dof
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return res, err


def fit_curve(t, y, model="exponential", *, offset=False, oscillation=None, p0=None,
              t_scales=None, freq_scale=1.0) -> FitResult:
    """Fit ``y(t)`` to one of :data:`DECAY_MODELS`, optionally times cos(2 pi f t + phase).

    ``oscillation`` is the starting frequency; ``freq_scale`` converts frequency
    times ``t`` into cycles (1e-3 for MHz with ns). Multi-start over 8 log-spaced time constants across the sweep range (and two
    phases when oscillating); the lowest residual wins.
    """
    if model not in DECAY_MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {DECAY_MODELS}")
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.shape != y.shape or t.size < 5:
        raise ValueError("need at least 5 matching (t, y) points")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite data")
    if model == "recovery" and oscillation is not None:
        raise ValueError("recovery model does not oscillate")
    names, f = _builder(model, offset, oscillation, freq_scale)
    span = float(np.ptp(t)) or 1.0
    scales = t_scales if t_scales is not None else np.geomspace(span / 50, 2 * span, N_STARTS)
    phases = (0.0, np.pi) if oscillation is not None else (0.0,)
    c0 = float(np.mean(y[-max(1, y.size // 4):])) if offset else 0.0
    if model == "recovery":
        amp0 = y[np.argmax(np.abs(t))]
    else:
        amp0 = y[np.argmin(np.abs(t))] - c0
    starts = []
    if p0 is not None:
        starts.append(np.asarray([p0[k] for k in names], float))
    for T0 in scales:
        for ph in phases:
            guess = {"amplitude": amp0, "T": T0, "alpha": 1.5, "frequency": oscillation,
                     "phase": ph, "offset": c0}
            starts.append(np.array([guess[k] for k in names], float))

    def resid(p):
        return f(p, t) - y

    best, best_err = None, None
    for s in starts:
        try:
            out = _lsq(resid, s, t.size, names)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if out is not None and (best is None or out[0].cost < best.cost):
            best, best_err = out
    if best is None or not best.success:
        raise FitError(f"{model} fit did not converge", np.inf if best is None else np.sqrt(2 * best.cost))
    params = dict(zip(names, map(float, best.x)))
    errors = dict(zip(names, map(float, best_err)))
    params["T"] = abs(params["T"])
    if "alpha" in params:
        params["alpha"] = abs(params["alpha"])
    if oscillation is not None and params["amplitude"] < 0:
        params["amplitude"] = -params["amplitude"]
        params["phase"] += np.pi
    if "phase" in params:
        params["phase"] = float(np.mod(params["phase"], TWO_PI))
    return FitResult(model, params, errors, float(np.sqrt(2 * best.cost)), t.size)


FREQ_SCALE = {"ns": 1e-3, "us": 1.0}


def fit_decay(envelope, model="exponential", **kw) -> FitResult:
    """Fit the visibility of an envelope-like object (``sweep``, ``visibility``).

    Oscillation frequencies are in MHz when the envelope unit is ns or us.
    """
    kw.setdefault("freq_scale", FREQ_SCALE.get(getattr(envelope, "unit", ""), 1.0))
    return fit_curve(envelope.sweep, envelope.visibility, model, **kw)


# --- spectral width ---------------------------------------------------------------

def _check_uniform(t):
    t = np.asarray(t, float)
    if t.size < 5:
        raise ValueError("need at least 5 points")
    d = np.diff(t)
    if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-6, atol=0):
        raise ValueError("sweep must be uniformly spaced and ascending")
    return t, float(d[0])


def cosine_spectrum(t, y, pad: int = FFT_PAD):
    """Trapezoid cosine transform of ``y(t)`` on a zero-padded rfft grid.

    For a signal starting at t = 0 this is the spectrum of its even extension,
    so a Gaussian decay exp(-(t/T)^2) maps to a Gaussian of std 1/(sqrt(2) pi T).
    """
    t, dt = _check_uniform(t)
    y = np.asarray(y, float).copy()
    y[0] *= 0.5
    y[-1] *= 0.5
    n = pad * y.size
    freqs = np.fft.rfftfreq(n, dt * 1e-3)  # MHz for t in ns
    spec = np.fft.rfft(y, n)
    spec = np.real(spec * np.exp(-1j * TWO_PI * freqs * t[0] * 1e-3)) * dt
    return freqs, spec


@dataclass
class SpectralPeak:
    centre: float  # MHz
    sigma: float  # MHz
    amplitude: float
    freqs: np.ndarray
    spectrum: np.ndarray


def fft_peak(envelope, pad: int = FFT_PAD) -> SpectralPeak:
    """Gaussian-pair fit A[g(f - f0) + g(f + f0)] to the cosine spectrum of the visibility."""
    freqs, spec = cosine_spectrum(envelope.sweep, envelope.visibility, pad)
    i = int(np.argmax(spec))
    f0, a0 = freqs[i], spec[i]
    below = np.nonzero(spec[i:] < a0 / 2)[0]
    hw = freqs[i + below[0]] - f0 if below.size else freqs[-1] / 4
    s0 = max(hw / np.sqrt(2 * np.log(2)), freqs[1])

    def model(p):
        a, c, s = p
        return a * (np.exp(-(freqs - c) ** 2 / (2 * s * s)) + np.exp(-(freqs + c) ** 2 / (2 * s * s)))

    # restrict to the peak neighbourhood so unrelated spectral leakage is ignored
    window = np.abs(freqs - f0) < max(5 * s0, 5 * freqs[1])
    if i == 0:
        # peak at DC: the pair is unresolved, so pin the centre to zero
        res = least_squares(lambda p: (model([p[0], 0.0, p[1]]) - spec)[window], [a0 / 2, s0], method="lm")
        (a, s), c = res.x, 0.0
    else:
        a_init = a0 / (1.0 + np.exp(-2.0 * f0 * f0 / (s0 * s0)))
        res = least_squares(lambda p: (model(p) - spec)[window], [a_init, f0, s0], method="lm")
        a, c, s = res.x
    return SpectralPeak(abs(float(c)), abs(float(s)), float(a), freqs, spec)


def fft_sigma(envelope, pad: int = FFT_PAD) -> float:
    """Overhauser width (MHz) from the spectral width of the Ramsey visibility."""
    return fft_peak(envelope, pad).sigma


# --- power law ----------------------------------------------------------------------

@dataclass
class PowerLawFit:
    gamma: float
    gamma_err: float
    prefactor: float


def fit_powerlaw(points) -> PowerLawFit:
    """T2 = c N^gamma by linear regression of log T2 on log N."""
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (N, T2) pairs")
    if np.any(pts <= 0):
        raise ValueError("N and T2 must be positive")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if pts.shape[0] == 2:
        g = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return PowerLawFit(float(g), np.nan, float(np.exp(ly[0] - g * lx[0])))
    r = stats.linregress(lx, ly)
    return PowerLawFit(float(r.slope), float(r.stderr), float(np.exp(r.intercept)))


# --- bath estimators ----------------------------------------------------------------

ABUNDANCE_CONVENTIONS = ("sublattice", "site")


@dataclass(frozen=True)
class BathEstimate:
    n_nuclei: float
    a_c: float  # MHz
    macrostates: float

    def __post_init__(self):
        if not (self.n_nuclei > 0 and self.a_c > 0 and self.macrostates > 0):
            raise ValueError("bath estimate quantities must be positive")


def nuclei_count(t2_star, registry, abundance="sublattice") -> float:
    """N = 5/4 sum_k eta_k (2 pi A_k)^2 T2*^2 with A_k in MHz and ``t2_star`` in ns.

    ``abundance="sublattice"`` uses the isotope fraction within each sublattice;
    ``"site"`` divides by two for the fraction of all lattice sites.
    """
    if abundance not in ABUNDANCE_CONVENTIONS:
        raise ValueError(f"abundance must be one of {ABUNDANCE_CONVENTIONS}")
    if not t2_star > 0:
        raise ValueError("t2_star must be > 0")
    scale = 1.0 if abundance == "sublattice" else 0.5
    t_us = t2_star * 1e-3
    total = sum(scale * registry[name].abundance * (TWO_PI * registry[name].hyperfine * t_us) ** 2
                for name in registry.estimator_species)
    return 1.25 * total


def hyperfine_per_nucleus(n_nuclei, t2_star) -> float:
    """A_c = 1 / (sqrt(5 N / 2) pi T2*) in MHz, ``t2_star`` in ns."""
    if not (n_nuclei > 0 and t2_star > 0):
        raise ValueError("n_nuclei and t2_star must be > 0")
    return 1.0 / (np.sqrt(2.5 * n_nuclei) * np.pi * t2_star * 1e-3)


def macrostates(sigma_oh, a_c) -> float:
    if not a_c > 0:
        raise ValueError("a_c must be > 0")
    return sigma_oh / a_c


def estimate_bath(t2_star, registry, sigma_oh=None, abundance="sublattice") -> BathEstimate:
    """N from the bare T2*, then A_c from N, then sigma_oh / A_c.

    ``sigma_oh`` defaults to the width equivalent of ``t2_star``.
    """
    n = nuclei_count(t2_star, registry, abundance)
    a_c = hyperfine_per_nucleus(n, t2_star)
    sigma = float(sigma_from_t2star(t2_star)) if sigma_oh is None else sigma_oh
    return BathEstimate(n, a_c, macrostates(sigma, a_c))


# --- scalar metrics --------------------------------------------------------------------

def pi_fidelity(q) -> float:
    if not q > 0:
        raise ValueError("Q must be > 0")
    return 0.5 * (1.0 + np.exp(-1.0 / q))


def metrics(t2_rabi, f_rabi):
    """(Q, f_pi) with Q = 2 T2_Rabi f_Rabi (``t2_rabi`` ns, ``f_rabi`` MHz)."""
    q = 2.0 * t2_rabi * 1e-3 * f_rabi
    return q, pi_fidelity(q)


def osp_fidelity(c_inf, c0) -> float:
    """F = sqrt(1 - c_inf / c0) from residual and initial pumping counts."""
    if not c0 > 0 or not 0 <= c_inf <= c0:
        raise ValueError("need c0 > 0 and 0 <= c_inf <= c0")
    return float(np.sqrt(1.0 - c_inf / c0))


# --- chevron -------------------------------------------------------------------------

def fit_chevron(t_grid, deltas, data, *, p0=(5.0, 0.0, 10.0), amplitude=True) -> FitResult:
    """Fit a P_down map (deltas x t) to the Gaussian-averaged Rabi lineshape.

    Free parameters are sigma_oh, delta_ac and omega (all MHz), plus a contrast
    scale when ``amplitude`` is set.
    """
    t = np.asarray(t_grid, float)
    d = np.asarray(deltas, float)
    data = np.asarray(data, float)
    if data.shape != (d.size, t.size):
        raise ValueError("data must have shape (len(deltas), len(t_grid))")
    names = ["sigma_oh", "delta_ac", "omega"] + (["amplitude"] if amplitude else [])
    tt, dd = np.meshgrid(t, d)

    def resid(p):
        scale = p[3] if amplitude else 1.0
        return (scale * averaged_chevron(tt, dd, abs(p[2]), abs(p[0]), p[1]) - data).ravel()

    start = list(p0) + ([1.0] if amplitude else [])
    out = _lsq(resid, np.array(start, float), data.size, names)
    if out is None or not out[0].success:
        raise FitError("chevron fit did not converge")
    res, err = out
    params = dict(zip(names, map(float, res.x)))
    params["sigma_oh"] = abs(params["sigma_oh"])
    params["omega"] = abs(params["omega"])
    return FitResult("chevron", params, dict(zip(names, map(float, err))),
                     float(np.sqrt(2 * res.cost)), data.size)
