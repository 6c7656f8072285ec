"""Exact state-vector model of one driven electron coupled to a few spin-1/2 nuclei.

H/h = Omega S_x + Delta S_z + sum_n [omega_n I_z^n + a_col,n S_z I_z^n + a_nc,n S_z I_x^n]

in the frame rotating with the drive. Frequencies are MHz and times ns. Basis
order is electron first, then nuclei in the given order; index 0 of each
factor is spin up.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

TWO_PI = 2.0 * np.pi
MAX_NUCLEI = 8

SX = 0.5 * np.array([[0, 1], [1, 0]], complex)
SY = 0.5 * np.array([[0, -1j], [1j, 0]], complex)
SZ = 0.5 * np.array([[1, 0], [0, -1]], complex)
EYE = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class CentralSpinSystem:
    omega_n: tuple = ()  # MHz
    a_col: tuple = ()  # MHz
    a_nc: tuple = ()  # MHz
    rabi: float = 0.0  # MHz
    detuning: float = 0.0  # MHz
    nuclear_spin: float = 0.5

    def __post_init__(self):
        for name in ("omega_n", "a_col", "a_nc"):
            object.__setattr__(self, name, tuple(float(v) for v in np.atleast_1d(getattr(self, name))))
        n = len(self.omega_n)
        if n > MAX_NUCLEI:
            raise ValueError(f"at most {MAX_NUCLEI} nuclei supported, got {n}")
        if len(self.a_col) != n or len(self.a_nc) != n:
            raise ValueError("omega_n, a_col and a_nc must have equal length")
        vals = self.omega_n + self.a_col + self.a_nc + (self.rabi, self.detuning)
        if not np.all(np.isfinite(vals)):
            raise ValueError("all frequencies must be finite")
        if self.nuclear_spin != 0.5:
            raise ValueError("only spin-1/2 nuclei are modelled")

    @property
    def n_nuclei(self) -> int:
        return len(self.omega_n)

    @property
    def dim(self) -> int:
        return 2 ** (self.n_nuclei + 1)

    def with_(self, **changes) -> "CentralSpinSystem":
        fields = dict(omega_n=self.omega_n, a_col=self.a_col, a_nc=self.a_nc, rabi=self.rabi,
                      detuning=self.detuning, nuclear_spin=self.nuclear_spin)
        fields.update(changes)
        return CentralSpinSystem(**fields)


def embed(op, site: int, n_sites: int):
    """``op`` acting on ``site`` (0 = electron) of an ``n_sites`` register."""
    return reduce(np.kron, [op if k == site else EYE for k in range(n_sites)])


def nuclear_iz(sys: CentralSpinSystem, n: int | None = None) -> np.ndarray:
    """Diagonal of I_z for nucleus ``n`` (or the total when ``n`` is None)."""
    sites = sys.n_nuclei + 1
    idx = range(sys.n_nuclei) if n is None else [n]
    return sum(np.real(np.diag(embed(SZ, k + 1, sites))) for k in idx) if sys.n_nuclei else np.zeros(sys.dim)


def build_hamiltonian(sys: CentralSpinSystem) -> np.ndarray:
    sites = sys.n_nuclei + 1
    sz = embed(SZ, 0, sites)
    h = sys.rabi * embed(SX, 0, sites) + sys.detuning * sz
    for k in range(sys.n_nuclei):
        iz = embed(SZ, k + 1, sites)
        ix = embed(SX, k + 1, sites)
        h = h + sys.omega_n[k] * iz + sys.a_col[k] * sz @ iz + sys.a_nc[k] * sz @ ix
    return h


class Propagator:
    """Cached eigendecomposition of H for repeated evolution of one system."""

    def __init__(self, sys: CentralSpinSystem):
        self.sys = sys
        self.energies, self.vectors = np.linalg.eigh(build_hamiltonian(sys))

    def unitary(self, t) -> np.ndarray:
        phase = np.exp(-1j * TWO_PI * self.energies * t * 1e-3)
        return (self.vectors * phase) @ self.vectors.conj().T

    def __call__(self, state, t):
        v = self.vectors
        return v @ (np.exp(-1j * TWO_PI * self.energies * t * 1e-3) * (v.conj().T @ state))


def basis_state(sys: CentralSpinSystem, electron_up: bool = True, nuclei=None) -> np.ndarray:
    """Product state; ``nuclei`` is a sequence of booleans (True = up), default all up."""
    nuclei = [True] * sys.n_nuclei if nuclei is None else list(nuclei)
    vecs = [np.array([1, 0], complex) if up else np.array([0, 1], complex)
            for up in [electron_up] + nuclei]
    return reduce(np.kron, vecs)


def evolve(state, sys: CentralSpinSystem, t) -> np.ndarray:
    """Exact evolution for ``t`` ns via eigendecomposition."""
    state = np.asarray(state, complex)
    if abs(np.linalg.norm(state) - 1.0) > 1e-8:
        raise ValueError("state must be normalised")
    return Propagator(sys)(state, t)


def expectation(state, op) -> float:
    state = np.asarray(state, complex)
    if op.ndim == 1:
        return float(np.real(np.sum(np.abs(state) ** 2 * op)))
    return float(np.real(state.conj() @ op @ state))


@dataclass
class TransferCurve:
    omega: np.ndarray
    delta_iz: np.ndarray

    def peak(self) -> float:
        return float(self.omega[np.argmax(np.abs(self.delta_iz))])

    def rows(self):
        return zip(self.omega, self.delta_iz)


def polarisation_transfer(sys: CentralSpinSystem, t_drive) -> float:
    """Change of total nuclear <I_z> after driving for ``t_drive`` ns.

    The electron starts in |up>; the nuclei start maximally mixed, so the result
    is the average over all nuclear basis states.
    """
    prop = Propagator(sys)
    iz = nuclear_iz(sys)
    u = prop.unitary(t_drive)
    up_cols = np.arange(sys.dim // 2)  # electron up is the first half of the basis
    cols = u[:, up_cols]
    after = np.sum(np.abs(cols) ** 2 * iz[:, None], axis=0)
    return float(np.mean(after - iz[up_cols]))


def hh_scan(template: CentralSpinSystem, omega_grid, t_drive) -> TransferCurve:
    """Nuclear polarisation transfer versus drive Rabi frequency."""
    if not any(a > 0 for a in np.abs(template.a_nc)):
        raise ValueError("hh_scan needs a non-collinear coupling a_nc > 0 on some nucleus")
    omega = np.asarray(omega_grid, float)
    out = np.array([polarisation_transfer(template.with_(rabi=w), t_drive) for w in omega])
    return TransferCurve(omega, out)
