"""Nuclear-spin cooling protocols as feedback maps on an ensemble of detunings.

Each trajectory carries one Overhauser detuning delta (MHz). A cooling cycle
applies a deterministic drift toward the lock point, then a Gaussian kick that
models re-warming of the bath during the cycle plus a diffusion floor.

Rabi cooling: a long drive at Omega_c locks the ESR to the drive frequency
within a capture window, drift = -gain * delta * exp(-delta^2 / 2w^2) * T_c.

Sensing-based cooling (QSC): a Ramsey sensing step of length tau imprints
sin(2 pi delta tau) on the electron, and the Hartmann-Hahn drive step converts it
into a nuclear flip-flop of size ~A_c in the direction set by that sign. The
drive step itself also contributes a small Rabi-type locking drift.

Both drifts are odd in delta, so the ensemble mean stays at the lock point.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as C
from .bath import BathModel, BathState, rewarm, t2star_from_sigma
from .model import DIFFERENCE_FREQUENCY

TWO_PI = 2.0 * np.pi
N_TRAJECTORIES = 20000
HH_WIDTH_MHZ = 3.0
# flip-flop quarter period of the drive step; sets the T_c optimum
FLIPFLOP_TIME_NS = C.QSC_TC_NS
RAMSEY_OVERHEAD_US = 1.0


def hh_efficiency(omega_c, centre=DIFFERENCE_FREQUENCY, width=HH_WIDTH_MHZ):
    """Gaussian Hartmann-Hahn efficiency factor, 1 at ``centre``."""
    return np.exp(-((np.asarray(omega_c, float) - centre) ** 2) / (2.0 * width * width))


def flipflop_efficiency(t_c, t_opt=FLIPFLOP_TIME_NS):
    """Fraction of a full electron-nuclear swap after driving for ``t_c`` ns."""
    return np.sin(0.5 * np.pi * np.asarray(t_c, float) / t_opt) ** 2


@dataclass(frozen=True)
class RabiCoolingConfig:
    omega_c: float = C.COOL_OMEGA_MHZ  # MHz
    t_c: float = C.RABI_COOL_TC_NS  # ns
    f_c_offset: float = 0.0  # MHz, lock point relative to the bare Zeeman frequency
    capture_width: float = 100.0  # MHz
    # calibrated: 52 -> 2.9 MHz steady state (scripts/calibrate_cooling.py)
    gain: float = 0.095  # per us of drive
    diffusion: float = 1.0  # MHz^2 per cycle
    reset_duration: float = C.RESET_NS  # ns
    overhead: float = 300.0  # ns of probe/readout per cycle
    hh_centre: float = DIFFERENCE_FREQUENCY
    hh_width: float = HH_WIDTH_MHZ

    def __post_init__(self):
        for name in ("omega_c", "t_c", "capture_width", "gain", "diffusion", "reset_duration",
                     "overhead", "hh_width"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.capture_width == 0 or self.hh_width == 0:
            raise ValueError("capture_width and hh_width must be > 0")

    def with_(self, **changes):
        return replace(self, **changes)

    @property
    def cycle_time(self) -> float:
        """us"""
        return (self.t_c + self.reset_duration + self.overhead) * 1e-3

    @property
    def efficiency(self) -> float:
        return float(hh_efficiency(self.omega_c, self.hh_centre, self.hh_width))


@dataclass(frozen=True)
class QscConfig:
    n_cycles: int = C.QSC_CYCLES
    tau_min: float = C.QSC_TAU_MIN_NS  # ns
    tau_max: float = C.QSC_TAU_MAX_NS  # ns
    schedule: str = "linear"
    t_c: float = C.QSC_TC_NS  # ns
    omega_c: float = C.COOL_OMEGA_MHZ  # MHz
    # calibrated: 52 -> 0.355 MHz steady state (scripts/calibrate_cooling.py)
    gain: float = 3.0
    diffusion: float = 0.093  # MHz^2 per cycle
    lock_ratio: float = 0.05  # locking drift of the drive step, per us, per unit gain
    capture_width: float = 100.0  # MHz
    reset_duration: float = C.RESET_NS  # ns
    pulse_time: float = 2 * C.PI_HALF_NS  # ns, both sensing pulses
    flipflop_time: float = FLIPFLOP_TIME_NS
    hh_centre: float = DIFFERENCE_FREQUENCY
    hh_width: float = HH_WIDTH_MHZ

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError("need 0 < tau_min <= tau_max")
        if self.schedule not in ("linear", "geometric"):
            raise ValueError("schedule must be 'linear' or 'geometric'")
        for name in ("t_c", "omega_c", "gain", "diffusion", "lock_ratio", "reset_duration",
                     "pulse_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.capture_width <= 0 or self.hh_width <= 0 or self.flipflop_time <= 0:
            raise ValueError("widths and flipflop_time must be > 0")

    def with_(self, **changes):
        return replace(self, **changes)

    def taus(self) -> np.ndarray:
        if self.schedule == "linear":
            return np.linspace(self.tau_min, self.tau_max, self.n_cycles)
        return np.geomspace(self.tau_min, self.tau_max, self.n_cycles)

    def cycle_time(self, tau) -> float:
        """us"""
        return (self.pulse_time + tau + self.t_c + self.reset_duration) * 1e-3

    @property
    def sequence_time(self) -> float:
        """Duration of one pass through the schedule (us)."""
        return float(sum(self.cycle_time(t) for t in self.taus()))

    @property
    def efficiency(self) -> float:
        return float(hh_efficiency(self.omega_c, self.hh_centre, self.hh_width))


def locking_drift(delta, gain, t_c, capture_width, lock_point=0.0):
    """-gain * (delta - lock) * exp(-(delta - lock)^2 / 2w^2) * T_c[us]."""
    d = np.asarray(delta, float) - lock_point
    return -gain * d * np.exp(-d * d / (2.0 * capture_width ** 2)) * (t_c * 1e-3)


def sensing_drift(delta, tau_sense, gain, a_c, vis=1.0):
    """-gain * a_c * V * sin(2 pi delta tau); ``tau_sense`` in ns."""
    return -gain * a_c * vis * np.sin(TWO_PI * np.asarray(delta, float) * tau_sense * 1e-3)


def _kick(delta, t_cycle, bath: BathModel, diffusion, rng):
    """Re-warming over ``t_cycle`` us plus a diffusion floor that fades at the warm width."""
    delta = np.asarray(delta, float)
    s = float(np.std(delta)) if delta.size > 1 else 0.0
    var = max(rewarm(s, t_cycle, bath) ** 2 - s * s, 0.0)
    var += diffusion * max(1.0 - (s / bath.sigma_warm) ** 2, 0.0) if bath.sigma_warm > 0 else diffusion
    return delta + np.sqrt(var) * rng.standard_normal(delta.shape)


def _state(delta):
    delta = np.asarray(delta, float)
    return BathState(delta, float(np.std(delta)) if delta.size > 1 else 0.0)


def rabi_cool_cycle(state: BathState, cfg: RabiCoolingConfig, rng, bath_model: BathModel | None = None
                    ) -> BathState:
    bath = bath_model or BathModel(relax_time=C.RELAX_TIME_RABI_US)
    d = np.asarray(state.delta, float)
    d = d + locking_drift(d, cfg.gain * cfg.efficiency, cfg.t_c, cfg.capture_width, cfg.f_c_offset)
    return _state(_kick(d, cfg.cycle_time, bath, cfg.diffusion, rng))


def sensing_visibility(tau_sense, bath: BathModel):
    """Visibility loss from bath noise that is not the trajectory's own static detuning."""
    return float(np.exp(-0.5 * (TWO_PI * bath.sigma_dyn * tau_sense * 1e-3) ** 2))


def qsc_cycle(state: BathState, tau_sense: float, cfg: QscConfig, a_c: float, rng,
              bath_model: BathModel | None = None) -> BathState:
    if not tau_sense > 0:
        raise ValueError("tau_sense must be > 0")
    bath = bath_model or BathModel()
    eff = cfg.efficiency
    d = np.asarray(state.delta, float)
    vis = sensing_visibility(tau_sense, bath)
    d = d + sensing_drift(d, tau_sense, cfg.gain * eff * flipflop_efficiency(cfg.t_c, cfg.flipflop_time),
                          a_c, vis)
    d = d + locking_drift(d, cfg.gain * cfg.lock_ratio * eff, cfg.t_c, cfg.capture_width)
    return _state(_kick(d, cfg.cycle_time(tau_sense), bath, cfg.diffusion, rng))


@dataclass
class CoolingTrace:
    cycle: np.ndarray
    tau_sense: np.ndarray
    sigma_now: np.ndarray
    mean_delta: np.ndarray
    ensemble: np.ndarray
    experiment_time: float  # us
    rep_sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def final_sigma(self) -> float:
        return float(np.std(self.ensemble))

    @property
    def final_t2star(self) -> float:
        """ns"""
        return float(t2star_from_sigma(self.final_sigma))

    def steady_sigma(self, last: int = 10) -> float:
        """Mean end-of-repetition width over the last ``last`` repetitions."""
        return float(np.mean(self.rep_sigma[-last:]))

    def rows(self):
        return zip(self.cycle, self.tau_sense, self.sigma_now, self.mean_delta)


def run_protocol(cfg, reps: int, bath_model: BathModel | None = None, rng=None, *,
                 n_traj: int = N_TRAJECTORIES, sigma0: float | None = None,
                 ramsey_overhead: float | None = None) -> CoolingTrace:
    """Repeat a cooling protocol ``reps`` times starting from the warm ensemble.

    Each repetition is one pass of the protocol followed by a Ramsey probe of
    ``ramsey_overhead`` us during which the bath re-warms freely (default 1 us
    for QSC; Rabi cooling already counts its probe in ``cfg.overhead``). Returns the
    per-cycle width trace; late repetitions describe the interleaved steady state.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = np.random.default_rng(rng)
    if ramsey_overhead is None:
        ramsey_overhead = 0.0 if isinstance(cfg, RabiCoolingConfig) else RAMSEY_OVERHEAD_US
    if bath_model is None:
        relax = C.RELAX_TIME_RABI_US if isinstance(cfg, RabiCoolingConfig) else C.RELAX_TIME_QSC_US
        bath_model = BathModel(relax_time=relax)
    s0 = bath_model.sigma_warm if sigma0 is None else sigma0
    state = _state(s0 * rng.standard_normal(n_traj))
    cyc, taus, sig, mean, rep_sig = [], [], [], [], []
    elapsed = 0.0
    k = 0
    for _ in range(reps):
        if isinstance(cfg, RabiCoolingConfig):
            state = rabi_cool_cycle(state, cfg, rng, bath_model)
            steps = [(0.0, cfg.cycle_time)]
        elif isinstance(cfg, QscConfig):
            steps = []
            for tau in cfg.taus():
                state = qsc_cycle(state, tau, cfg, bath_model.a_c, rng, bath_model)
                steps.append((tau, cfg.cycle_time(tau)))
                cyc.append(k)
                taus.append(tau)
                sig.append(state.sigma_now)
                mean.append(float(np.mean(state.delta)))
                k += 1
        else:
            raise TypeError(f"unsupported cooling config {type(cfg).__name__}")
        if isinstance(cfg, RabiCoolingConfig):
            cyc.append(k)
            taus.append(0.0)
            sig.append(state.sigma_now)
            mean.append(float(np.mean(state.delta)))
            k += 1
        elapsed += sum(t for _, t in steps) + ramsey_overhead
        state = _state(_kick(state.delta, ramsey_overhead, bath_model, 0.0, rng))
        rep_sig.append(state.sigma_now)
    return CoolingTrace(np.array(cyc), np.array(taus, float), np.array(sig), np.array(mean),
                        np.asarray(state.delta), elapsed, np.array(rep_sig))


def sweep_parameter(cfg, name: str, values, reps: int, bath_model=None, seed=0, last=10, **kw):
    """Steady-state width for each value of config field ``name``."""
    return np.array([run_protocol(cfg.with_(**{name: v}), reps, bath_model, seed, **kw).steady_sigma(last)
                     for v in values])
