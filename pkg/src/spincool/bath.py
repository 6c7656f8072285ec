"""Semiclassical Overhauser-field model.

Each shot sees a detuning delta = delta_static + delta_dyn(t): a quasi-static
Gaussian draw plus an Ornstein-Uhlenbeck (OU) component. Cooling protocols
act on ensembles of such detunings; re-warming is modelled at the level of
the ensemble width.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import constants as C

TWO_PI = 2.0 * np.pi
NS_PER_US = 1000.0


def t2star_from_sigma(sigma):
    """Gaussian-envelope T2* (ns) for an Overhauser width ``sigma`` (MHz): sqrt(2) / (2 pi sigma)."""
    sigma = np.asarray(sigma, float)
    with np.errstate(divide="ignore"):
        return np.sqrt(2.0) / (TWO_PI * sigma) * NS_PER_US


def sigma_from_t2star(t2star):
    """Inverse of :func:`t2star_from_sigma`; ``t2star`` in ns, result in MHz."""
    return np.sqrt(2.0) / (TWO_PI * np.asarray(t2star, float)) * NS_PER_US


@dataclass(frozen=True)
class BathModel:
    sigma_static: float = C.SIGMA_WARM_MHZ  # MHz
    sigma_dyn: float = 0.0  # MHz, OU stationary width
    tau_corr: float = 1000.0  # us, OU correlation time
    relax_time: float = C.RELAX_TIME_QSC_US  # us, return-to-warm time
    sigma_warm: float = C.SIGMA_WARM_MHZ  # MHz
    a_c: float = C.A_C_MHZ  # MHz

    def __post_init__(self):
        for name in ("sigma_static", "sigma_dyn", "sigma_warm", "a_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.tau_corr > 0:
            raise ValueError("tau_corr must be > 0")
        if not self.relax_time > 0:
            raise ValueError("relax_time must be > 0")

    def with_(self, **changes) -> "BathModel":
        return replace(self, **changes)

    @property
    def sigma_total(self) -> float:
        return float(np.hypot(self.sigma_static, self.sigma_dyn))


@dataclass
class BathState:
    delta: float | np.ndarray  # MHz, one value per trajectory
    sigma_now: float  # MHz, ensemble width tracked by cooling

    def __post_init__(self):
        if self.sigma_now < 0:
            raise ValueError("sigma_now must be >= 0")


def sample_detuning(model: BathModel, sigma: float | None, rng, size=None):
    """Draw quasi-static detuning(s) from N(0, sigma^2); ``sigma=None`` uses the model width."""
    sigma = model.sigma_static if sigma is None else sigma
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return sigma * rng.standard_normal(size)


def ou_step(state: BathState, dt: float, model: BathModel, rng) -> BathState:
    """Exact OU update over ``dt`` us (mean-reverting to zero with width ``sigma_dyn``)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return BathState(state.delta, state.sigma_now)
    rho = np.exp(-dt / model.tau_corr)
    delta = np.asarray(state.delta, float)
    noise = model.sigma_dyn * np.sqrt(1.0 - rho * rho) * rng.standard_normal(delta.shape)
    new = delta * rho + noise
    return BathState(new if new.ndim else float(new), state.sigma_now)


def ou_step_integrated(x, dt, sigma_dyn, tau_corr, n1, n2):
    """Exact joint OU update of value and time integral.

    ``x`` in MHz, ``dt`` and ``tau_corr`` in us; ``n1``, ``n2`` are independent
    standard normals. Returns ``(x_new, integral)`` with the integral of x over
    the step in MHz*us (cycles). Conditional moments follow from the OU
    covariance s^2 exp(-|t - t'|/tau).
    """
    x = np.asarray(x, float)
    dt = np.asarray(dt, float)
    mu = np.exp(-dt / tau_corr)
    s2 = sigma_dyn * sigma_dyn
    var_x = s2 * (1.0 - mu * mu)
    var_i = s2 * tau_corr ** 2 * (2.0 * (dt / tau_corr - 1.0 + mu) - (1.0 - mu) ** 2)
    cov = s2 * tau_corr * (1.0 - mu) ** 2
    var_i = np.maximum(var_i, 0.0)
    sx = np.sqrt(var_x)
    si = np.sqrt(var_i)
    denom = sx * si
    corr = np.divide(cov, denom, out=np.zeros(np.broadcast(cov, denom).shape), where=denom > 0)
    corr = np.clip(corr, -1.0, 1.0)
    x_new = x * mu + sx * n1
    integral = x * tau_corr * (1.0 - mu) + si * (corr * n1 + np.sqrt(1.0 - corr * corr) * n2)
    return x_new, integral


def rewarm(sigma_now, t_wait, model: BathModel):
    """Ensemble width after waiting ``t_wait`` us.

    T2*(t) relaxes exponentially (time constant ``relax_time``) from the T2*
    of ``sigma_now`` to the bare T2* of ``sigma_warm``. Because T2* is
    inversely proportional to the width, this is a harmonic interpolation
    between the two widths.
    """
    t_wait = np.asarray(t_wait, float)
    if np.any(t_wait < 0):
        raise ValueError("t_wait must be >= 0")
    sigma_now = np.asarray(sigma_now, float)
    warm = model.sigma_warm
    d = np.exp(-t_wait / model.relax_time)
    denom = sigma_now * (1.0 - d) + warm * d
    out = np.divide(sigma_now * warm, denom, out=np.full(np.broadcast(sigma_now, d).shape, float(warm)),
                    where=denom > 0)
    return out if out.ndim else float(out)


def ou_phase_variance(segments, sigma_dyn, tau_corr):
    """Variance of the accumulated phase (rad^2) for a piecewise-constant filter.

    ``segments`` is a sequence of ``(duration_us, sign)``. Exact for OU noise of
    stationary width ``sigma_dyn`` (MHz) and correlation time ``tau_corr`` (us).
    Used to calibrate the echo decay and as an independent check of the shot engine.
    """
    lengths = np.array([s[0] for s in segments], float)
    signs = np.array([s[1] for s in segments], float)
    tau = tau_corr
    e = np.exp(-lengths / tau)
    starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    total = 0.0
    for i in range(len(lengths)):
        total += signs[i] ** 2 * 2.0 * tau * tau * (lengths[i] / tau - 1.0 + e[i])
        for j in range(i + 1, len(lengths)):
            gap = starts[j] - (starts[i] + lengths[i])
            total += 2.0 * signs[i] * signs[j] * tau * tau * (1 - e[i]) * (1 - e[j]) * np.exp(-gap / tau)
    return (TWO_PI * sigma_dyn) ** 2 * total


def cpmg_segments(total_time, n_pi):
    """Filter segments (duration, sign) of a CPMG block with ``n_pi`` pulses over ``total_time``."""
    tau = total_time / n_pi
    segs = [(tau / 2, 1.0)]
    sign = -1.0
    for _ in range(n_pi - 1):
        segs.append((tau, sign))
        sign = -sign
    segs.append((tau / 2, sign))
    return segs


def cpmg_coherence(t, n_pi, sigma_dyn, tau_corr):
    """Ensemble coherence exp(-var/2) of a CPMG block under OU noise; ``t`` in us."""
    t = np.atleast_1d(np.asarray(t, float))
    out = np.array([np.exp(-0.5 * ou_phase_variance(cpmg_segments(ti, n_pi), sigma_dyn, tau_corr))
                    if ti > 0 else 1.0 for ti in t])
    return out
