"""Rotating-frame Bloch propagation of a single electron spin.

State vectors are numpy arrays with a trailing axis of length 3 (x, y, z);
any leading shape is propagated elementwise, so a whole shot ensemble moves
in one call. z = +1 is the optically pumped |up> (dark) state.

The generator for a drive segment is

    dr/dt = 2*pi*(Omega cos(phi), Omega sin(phi), Delta) x r
            - 2*pi*kappa * r                       (drive-induced depolarisation)
            - (r_z - z_eq)/T1 * z_hat               (longitudinal relaxation)

Rotation and isotropic depolarisation commute, so without T1 the segment is
solved in closed form. With finite T1 the segment is Strang-split.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi
# MHz x ns -> cycles
MHZ_NS = 1e-3
NS_PER_US = 1000.0
DEFAULT_MAX_STEP_NS = 0.1


def bloch_vector(x=0.0, y=0.0, z=1.0) -> np.ndarray:
    return np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                        np.asarray(z, float)), axis=-1)


@dataclass(frozen=True)
class DriveSegment:
    """One constant-amplitude drive (or free evolution when ``rabi == 0``).

    Fields may be scalars or broadcastable arrays. ``detuning`` is the total
    detuning, bath contribution included.
    """

    rabi: float | np.ndarray = 0.0  # MHz
    detuning: float | np.ndarray = 0.0  # MHz
    phase: float | np.ndarray = 0.0  # rad
    duration: float | np.ndarray = 0.0  # ns
    flip_rate: float | np.ndarray = 0.0  # MHz, kappa / 2pi

    def __post_init__(self):
        if np.any(np.asarray(self.duration) < 0):
            raise ValueError("duration must be >= 0")
        if np.any(np.asarray(self.rabi) < 0):
            raise ValueError("rabi must be >= 0")


def rotate(state, axis_x, axis_y, axis_z, angle):
    """Rodrigues rotation of ``state`` about the (not necessarily unit) axis by ``angle``.

    A zero axis leaves the state untouched.
    """
    state = np.asarray(state, float)
    ax = np.asarray(axis_x, float)
    ay = np.asarray(axis_y, float)
    az = np.asarray(axis_z, float)
    norm = np.sqrt(ax * ax + ay * ay + az * az)
    safe = np.where(norm > 0, norm, 1.0)
    kx, ky, kz = ax / safe, ay / safe, az / safe
    angle = np.where(norm > 0, angle, 0.0)
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = state[..., 0], state[..., 1], state[..., 2]
    dot = kx * x + ky * y + kz * z
    cx = ky * z - kz * y
    cy = kz * x - kx * z
    cz = kx * y - ky * x
    one_c = 1.0 - c
    return np.stack(
        [x * c + cx * s + kx * dot * one_c,
         y * c + cy * s + ky * dot * one_c,
         z * c + cz * s + kz * dot * one_c],
        axis=-1,
    )


def relax_longitudinal(state, duration, t1, z_eq=0.0):
    """Exact T1 channel: z relaxes toward ``z_eq``; x, y untouched. ``duration`` in ns, ``t1`` in us."""
    state = np.asarray(state, float)
    if t1 is None or np.isinf(t1):
        return state
    decay = np.exp(-np.asarray(duration, float) / (t1 * NS_PER_US))
    z = z_eq + (state[..., 2] - z_eq) * decay
    x, y = np.broadcast_arrays(state[..., 0], state[..., 1], z)[:2]
    return np.stack([x, y, z], axis=-1)


def _rotate_and_depolarise(state, seg: DriveSegment, duration):
    cos_p, sin_p = np.cos(seg.phase), np.sin(seg.phase)
    rabi = np.asarray(seg.rabi, float)
    detuning = np.asarray(seg.detuning, float)
    eff = np.sqrt(rabi * rabi + detuning * detuning)
    angle = TWO_PI * eff * np.asarray(duration, float) * MHZ_NS
    out = rotate(state, rabi * cos_p, rabi * sin_p, detuning, angle)
    shrink = np.exp(-TWO_PI * np.asarray(seg.flip_rate, float) * np.asarray(duration, float) * MHZ_NS)
    return out * np.asarray(shrink)[..., None]


def propagate(state, seg: DriveSegment, t1=None, *, z_eq=0.0,
              max_step: float | None = DEFAULT_MAX_STEP_NS) -> np.ndarray:
    """Propagate Bloch vector(s) through one segment.

    With ``t1`` infinite the closed form is exact for any flip rate. With finite
    ``t1`` the segment is cut into equal Strang steps no longer than
    ``max_step`` ns (``max_step=None`` uses a single step, which is accurate to
    O(duration / T1) and is what the shot engine uses for ns-scale pulses).
    """
    state = np.asarray(state, float)
    duration = np.asarray(seg.duration, float)
    if t1 is None or np.isinf(t1):
        return _rotate_and_depolarise(state, seg, duration)
    longest = float(np.max(duration)) if duration.size else 0.0
    n = 1 if max_step is None else max(1, int(np.ceil(longest / max_step - 1e-12)))
    dt = duration / n
    for _ in range(n):
        state = relax_longitudinal(state, dt / 2, t1, z_eq)
        state = _rotate_and_depolarise(state, seg, dt)
        state = relax_longitudinal(state, dt / 2, t1, z_eq)
    return state


def down_probability(state) -> np.ndarray:
    """Population of |down> for a Bloch vector with z = +1 meaning |up>."""
    return 0.5 * (1.0 - np.asarray(state, float)[..., 2])


def rabi_lineshape(t, delta, omega):
    """P_down after driving |up> for time ``t`` (ns) at Rabi ``omega`` and detuning ``delta`` (MHz)."""
    t = np.asarray(t, float)
    omega = np.asarray(omega, float)
    delta = np.asarray(delta, float)
    eff2 = omega * omega + delta * delta
    weight = np.divide(omega * omega, eff2, out=np.zeros(np.broadcast(omega, delta).shape), where=eff2 > 0)
    return weight * np.sin(np.pi * np.sqrt(eff2) * t * MHZ_NS) ** 2


@lru_cache(maxsize=None)
def _hermite(n: int):
    x, w = np.polynomial.hermite.hermgauss(n)
    return x, w / np.sqrt(np.pi)


def _trapezoid_nodes(sigma, t_max, span=8.0):
    """Uniform nodes over +-span*sigma, fine enough for the Gaussian and for
    the 1/t oscillation of the lineshape in the detuning."""
    h = sigma / 4.0
    if t_max > 0:
        h = min(h, 1.0 / (8.0 * t_max * MHZ_NS))
    k = int(np.ceil(span * sigma / h))
    x = np.linspace(-span * sigma, span * sigma, 2 * k + 1)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return x, w / w.sum()


def averaged_chevron(t, delta, omega, sigma_oh, delta_ac=0.0, n_nodes: int | None = None):
    """Rabi lineshape averaged over a Gaussian Overhauser detuning of width ``sigma_oh``.

    The detuning argument is ``delta - delta_ac + d`` with d ~ N(0, sigma_oh^2).
    By default the average is a uniform trapezoid rule whose spacing resolves
    the lineshape's oscillation in d at the longest ``t``; an integer
    ``n_nodes`` selects Gauss-Hermite quadrature instead (accurate only while
    sigma_oh * t stays of order one cycle).
    """
    if sigma_oh < 0:
        raise ValueError("sigma_oh must be >= 0")
    centre = np.asarray(delta, float) - delta_ac
    if sigma_oh == 0:
        return rabi_lineshape(t, centre, omega)
    t, centre, omega = np.broadcast_arrays(np.asarray(t, float), centre, np.asarray(omega, float))
    if n_nodes is None:
        x, w = _trapezoid_nodes(sigma_oh, float(np.max(np.abs(t))) if t.size else 0.0)
        shifted_scale = 1.0
    else:
        x, w = _hermite(n_nodes)
        shifted_scale = np.sqrt(2.0) * sigma_oh
    out = np.empty(t.shape)
    flat_t, flat_c, flat_o = t.ravel(), centre.ravel(), omega.ravel()
    res = out.reshape(-1)
    # chunk so the (points x nodes) work array stays small
    step = max(1, 2_000_000 // len(x))
    for lo in range(0, flat_t.size, step):
        sl = slice(lo, lo + step)
        shifted = flat_c[sl, None] + shifted_scale * x
        res[sl] = rabi_lineshape(flat_t[sl, None], shifted, flat_o[sl, None]) @ w
    return out
