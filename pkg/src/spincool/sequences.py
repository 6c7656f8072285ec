"""Pulse sequences and the Monte-Carlo shot engine.

A sequence is a list of elements whose numeric fields broadcast against a
``(points, variants)`` grid: ``points`` runs over the swept parameter and
``variants`` over the two final-phase versions (0 and pi) that give the top
and bottom envelopes. Each shot draws its own bath detuning and readout
uniforms from a counter-based substream, shared by both variants of a sweep
point. Counts are integers summed in any order, so results do not depend on
the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import constants as C
from .analysis import visibility
from .bath import BathModel, ou_step_integrated
from .bloch import (MHZ_NS, TWO_PI, DriveSegment, bloch_vector, propagate,
                    relax_longitudinal, rotate)
from .model import QubitParams
from .seeding import chunks, substream

NS_PER_US = 1000.0
CHUNK = 256


@dataclass(frozen=True)
class Rotate:
    rabi: float | np.ndarray  # MHz
    duration: float | np.ndarray  # ns
    phase: float | np.ndarray = 0.0  # rad
    detuning: float | np.ndarray = 0.0  # MHz, drive offset on top of the frame detuning


@dataclass(frozen=True)
class Delay:
    duration: float | np.ndarray  # ns


@dataclass(frozen=True)
class Reset:
    duration: float = C.RESET_NS  # ns; re-pumps the spin into |up>


@dataclass(frozen=True)
class Measure:
    pass


PulseElement = Union[Rotate, Delay, Reset, Measure]


def rotation(angle: float, rabi: float = C.RAMSEY_RABI_MHZ, phase=0.0) -> Rotate:
    """Pulse of rotation ``angle`` (rad) at Rabi frequency ``rabi``."""
    return Rotate(rabi=rabi, duration=angle / (TWO_PI * rabi * MHZ_NS), phase=phase)


def _check_durations(sequence):
    for el in sequence:
        if isinstance(el, (Rotate, Delay, Reset)) and np.any(np.asarray(el.duration) < 0):
            raise ValueError(f"negative duration in {type(el).__name__}")


@dataclass(frozen=True)
class MeasurementModel:
    """Optical spin pumping and readout.

    Initialisation leaves polarisation ``osp_fidelity`` along +z; readout maps
    z affinely to a bright probability with contrast ``osp_fidelity`` on top
    of ``dark_floor``. The ideal contrast is thus reduced by F_OSP^2.
    """

    osp_fidelity: float = C.OSP_FIDELITY
    dark_floor: float = 0.0

    def __post_init__(self):
        if not (0 <= self.osp_fidelity <= 1 and 0 <= self.dark_floor <= 1):
            raise ValueError("probabilities must lie in [0, 1]")

    @classmethod
    def from_params(cls, params: QubitParams, dark_floor: float = 0.0) -> "MeasurementModel":
        return cls(params.osp_fidelity, dark_floor)

    @property
    def initial_z(self) -> float:
        return self.osp_fidelity

    def bright_probability(self, z):
        p = 0.5 * (1.0 - self.osp_fidelity * np.asarray(z, float))
        return self.dark_floor + (1.0 - self.dark_floor) * p


@dataclass
class Envelope:
    sweep: np.ndarray
    top: np.ndarray
    bottom: np.ndarray
    visibility: np.ndarray
    shots: int
    unit: str = ""

    def __post_init__(self):
        self.sweep = np.asarray(self.sweep, float)
        self.top = np.asarray(self.top, float)
        self.bottom = np.asarray(self.bottom, float)
        self.visibility = np.asarray(self.visibility, float)

    def __len__(self):
        return len(self.sweep)

    @classmethod
    def from_counts(cls, sweep, counts, shots, unit=""):
        counts = np.asarray(counts)
        top = counts[:, 0] / shots
        bottom = counts[:, 1] / shots
        return cls(sweep, top, bottom, visibility(top, bottom), shots, unit)

    @classmethod
    def empty(cls, unit=""):
        z = np.zeros(0)
        return cls(z, z, z, z, 0, unit)

    def swapped(self) -> "Envelope":
        """Exchange the two variants (adds pi to the final pulse phase)."""
        return Envelope(self.sweep, self.bottom, self.top, visibility(self.bottom, self.top),
                        self.shots, self.unit)

    def to_csv(self, path):
        from .io import write_envelope

        write_envelope(self, path)


def _draw_shot(seed, stream, shot, shape, n_ou, pool_size):
    # one draw per sweep point, shared by the variants (common random numbers):
    # identical variants give identical outcomes and a pi phase swaps them exactly
    g = substream(seed, stream, shot)
    row = shape[:-1] + (1,)
    if pool_size:
        base = g.integers(pool_size, size=row)
    else:
        base = g.standard_normal(row)
    u = g.random(row)
    ou = g.standard_normal(row + (n_ou,)) if n_ou else None
    base, u = np.broadcast_to(base, shape), np.broadcast_to(u, shape)
    if ou is not None:
        ou = np.broadcast_to(ou, shape + (n_ou,))
    return base, u, ou


def _run_chunk(sequence, shape, lo, hi, *, params, bath, meas, seed, stream, frame_detuning,
               ideal_pulses, delta_pool):
    n_delays = sum(isinstance(el, Delay) for el in sequence)
    use_ou = bath.sigma_dyn > 0
    n_ou = 1 + 2 * n_delays if use_ou else 0
    pool = None if delta_pool is None else np.asarray(delta_pool, float)
    draws = [_draw_shot(seed, stream, s, shape, n_ou, 0 if pool is None else len(pool))
             for s in range(lo, hi)]
    base = np.stack([d[0] for d in draws])
    u = np.stack([d[1] for d in draws])
    delta_static = pool[base] if pool is not None else bath.sigma_static * base
    if use_ou:
        ou = np.stack([d[2] for d in draws])
        x = bath.sigma_dyn * ou[..., 0]
        k = 1
    frame = np.asarray(frame_detuning, float)

    init = bloch_vector(0.0, 0.0, meas.initial_z)
    state = np.broadcast_to(init, base.shape + (3,)).copy()
    for el in sequence:
        if isinstance(el, Rotate):
            if ideal_pulses:
                angle = TWO_PI * np.asarray(el.rabi) * np.asarray(el.duration) * MHZ_NS
                state = rotate(state, np.cos(el.phase), np.sin(el.phase), 0.0, angle)
            else:
                total = delta_static + frame + el.detuning + (x if use_ou else 0.0)
                seg = DriveSegment(rabi=el.rabi, detuning=total, phase=el.phase, duration=el.duration,
                                   flip_rate=params.flip_rate(np.asarray(el.rabi, float)))
                state = propagate(state, seg, params.t1, max_step=None)
        elif isinstance(el, Delay):
            dur = np.asarray(el.duration, float)
            cycles = (delta_static + frame) * dur * MHZ_NS
            if use_ou:
                x, integral = ou_step_integrated(x, dur / NS_PER_US, bath.sigma_dyn, bath.tau_corr,
                                                 ou[..., k], ou[..., k + 1])
                k += 2
                cycles = cycles + integral
            state = rotate(state, 0.0, 0.0, 1.0, TWO_PI * cycles)
            state = relax_longitudinal(state, dur, params.t1)
        elif isinstance(el, Reset):
            state = np.broadcast_to(init, state.shape).copy()
        elif isinstance(el, Measure):
            pass
        else:
            raise TypeError(f"unknown pulse element {el!r}")
    bright = u < meas.bright_probability(state[..., 2])
    return bright.sum(axis=0, dtype=np.int64)


def simulate_counts(sequence: Sequence[PulseElement], shape, params: QubitParams, bath: BathModel,
                    shots: int, seed: int, stream, *, meas: MeasurementModel | None = None,
                    frame_detuning=0.0, ideal_pulses: bool = True, delta_pool=None,
                    threads: int = 1) -> np.ndarray:
    """Bright counts of shape ``shape`` summed over ``shots`` independent shots."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _check_durations(sequence)
    meas = meas or MeasurementModel.from_params(params)
    shape = tuple(shape)
    work = dict(params=params, bath=bath, meas=meas, seed=seed, stream=stream,
                frame_detuning=frame_detuning, ideal_pulses=ideal_pulses, delta_pool=delta_pool)
    parts = list(chunks(shots, CHUNK))
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda p: _run_chunk(sequence, shape, *p, **work), parts))
    else:
        results = [_run_chunk(sequence, shape, *p, **work) for p in parts]
    return np.sum(results, axis=0)


# --- experiments --------------------------------------------------------------

def run_rabi(params: QubitParams, bath_model: BathModel, omega: float, delta: float, t_grid,
             shots: int, seed: int = 0, *, delta_ac: float = 0.0, meas=None, threads: int = 1,
             delta_pool=None, stream="rabi") -> Envelope:
    """Drive |up> for each time in ``t_grid`` (ns); variant 1 is the undriven reference."""
    t = np.asarray(t_grid, float)
    durations = t[:, None] * np.array([1.0, 0.0])
    seq = [Rotate(rabi=omega, duration=durations)]
    counts = simulate_counts(seq, durations.shape, params, bath_model, shots, seed, stream, meas=meas,
                             frame_detuning=delta - delta_ac, ideal_pulses=False,
                             delta_pool=delta_pool, threads=threads)
    return Envelope.from_counts(t, counts, shots, "ns")


def run_chevron(params, bath_model, omega, deltas, t_grid, shots, seed=0, *, delta_ac=0.0, meas=None,
                threads=1):
    """Bright fraction map of shape (len(deltas), len(t_grid)) from repeated :func:`run_rabi`."""
    rows = [run_rabi(params, bath_model, omega, d, t_grid, shots, seed, delta_ac=delta_ac, meas=meas,
                     threads=threads, stream=("chevron", i)).top
            for i, d in enumerate(np.asarray(deltas, float))]
    return np.array(rows)


def ramsey_sequence(tau, serrodyne=0.0, rabi=C.RAMSEY_RABI_MHZ):
    tau = np.asarray(tau, float)
    final_phase = TWO_PI * serrodyne * tau[:, None] * MHZ_NS + np.array([0.0, np.pi])
    return [rotation(np.pi / 2, rabi), Delay(tau[:, None]), rotation(np.pi / 2, rabi, final_phase)]


def run_ramsey(params: QubitParams, bath_model: BathModel, tau_grid, serrodyne: float, shots: int,
               seed: int = 0, *, rabi: float = C.RAMSEY_RABI_MHZ, probe_offset: float = 0.0,
               ideal_pulses: bool = True, delta_pool=None, meas=None, threads: int = 1,
               stream="ramsey") -> Envelope:
    """pi/2 - tau - pi/2(phi) with phi = 2 pi serrodyne tau; ``tau_grid`` in ns."""
    tau = np.asarray(tau_grid, float)
    if np.any(np.diff(tau) < 0):
        raise ValueError("tau_grid must be ascending")
    seq = ramsey_sequence(tau, serrodyne, rabi)
    counts = simulate_counts(seq, (len(tau), 2), params, bath_model, shots, seed, stream, meas=meas,
                             frame_detuning=probe_offset, ideal_pulses=ideal_pulses,
                             delta_pool=delta_pool, threads=threads)
    return Envelope.from_counts(tau, counts, shots, "ns")


@dataclass
class RamseyMap:
    offsets: np.ndarray
    sweep: np.ndarray
    visibility: np.ndarray  # (len(offsets), len(sweep))
    envelopes: list = field(default_factory=list)


def run_detuned_ramsey(params, bath_model, offsets, tau_grid, shots, seed=0, *, delta_pool=None,
                       meas=None, threads=1, **kw) -> RamseyMap:
    """Ramsey versus probe offset Delta = f_c - f_probe; one envelope per offset."""
    offsets = np.asarray(offsets, float)
    envs = [run_ramsey(params, bath_model, tau_grid, 0.0, shots, seed, probe_offset=off,
                       delta_pool=delta_pool, meas=meas, threads=threads, stream=("detuned_ramsey", i), **kw)
            for i, off in enumerate(offsets)]
    return RamseyMap(offsets, np.asarray(tau_grid, float), np.array([e.visibility for e in envs]), envs)


def cpmg_sequence(n_pi: int, t_total_ns, rabi=C.RAMSEY_RABI_MHZ, convention="n_tau"):
    """pi/2_x - [tau/2 - pi_y - tau/2] x n_pi - pi/2_x(+pi); total free time per ``convention``.

    ``"n_tau"``: t = n_pi * tau (pulse spacing tau). ``"2n_tau"``: t = 2 n_pi tau.
    """
    if n_pi < 1:
        raise ValueError("n_pi must be >= 1")
    t = np.asarray(t_total_ns, float)
    if convention == "n_tau":
        spacing = t / n_pi
    elif convention == "2n_tau":
        spacing = t / (2 * n_pi)
    else:
        raise ValueError(f"unknown CPMG convention {convention!r}")
    spacing = spacing[:, None]
    seq = [rotation(np.pi / 2, rabi), Delay(spacing / 2)]
    for i in range(n_pi):
        seq.append(rotation(np.pi, rabi, np.pi / 2))
        seq.append(Delay(spacing if i < n_pi - 1 else spacing / 2))
    seq.append(rotation(np.pi / 2, rabi, np.zeros_like(spacing) + np.array([0.0, np.pi])))
    return seq


def run_cpmg(params: QubitParams, bath_model: BathModel, n_pi: int, t_grid, shots: int, seed: int = 0,
             *, rabi=C.RAMSEY_RABI_MHZ, convention="n_tau", meas=None, threads=1,
             stream=None) -> Envelope:
    """CPMG decay versus total time ``t_grid`` (us)."""
    t = np.asarray(t_grid, float)
    seq = cpmg_sequence(n_pi, t * NS_PER_US, rabi, convention)
    counts = simulate_counts(seq, (len(t), 2), params, bath_model, shots, seed,
                             stream or ("cpmg", n_pi), meas=meas, threads=threads)
    return Envelope.from_counts(t, counts, shots, "us")


def run_t1_pumpprobe(params: QubitParams, tau_grid, shots: int, seed: int = 0, *, meas=None,
                     threads=1) -> Envelope:
    """Pump, wait ``tau`` (us), probe. Variant 1 is the zero-delay background."""
    tau = np.asarray(tau_grid, float)
    if np.any(tau < 0):
        raise ValueError("tau_grid must be >= 0")
    waits = tau[:, None] * np.array([1.0, 0.0]) * NS_PER_US
    seq = [Reset(), Delay(waits), Measure()]
    counts = simulate_counts(seq, waits.shape, params, BathModel(sigma_static=0.0), shots, seed, "t1",
                             meas=meas, threads=threads)
    return Envelope.from_counts(tau, counts, shots, "us")


def run_phase_sweep(params: QubitParams, phi_grid, shots: int, seed: int = 0, *,
                    rabi=C.RAMSEY_RABI_MHZ, meas=None, threads=1) -> Envelope:
    """Two back-to-back pi/2 pulses, the second with phase phi (and phi + pi)."""
    phi = np.asarray(phi_grid, float)
    seq = [rotation(np.pi / 2, rabi), rotation(np.pi / 2, rabi, phi[:, None] + np.array([0.0, np.pi]))]
    counts = simulate_counts(seq, (len(phi), 2), params, BathModel(sigma_static=0.0), shots, seed,
                             "phase_sweep", meas=meas, threads=threads)
    return Envelope.from_counts(phi, counts, shots, "rad")
