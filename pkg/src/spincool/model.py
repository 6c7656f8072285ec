"""Qubit parameters, nuclear species registry and unit conventions.

All public interfaces use ordinary frequency in MHz. Angular factors of 2*pi
are applied inside the propagators. Pulse durations are in ns, relaxation and
waiting times in us. Detunings follow Delta = f_Z - f_probe.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from . import constants as C

NS_PER_US = 1000.0


@dataclass(frozen=True)
class QubitParams:
    f_zeeman: float = C.F_ZEEMAN_MHZ
    g_factor: float = C.G_ELECTRON
    t1: float = C.T1_US
    osp_time: float = C.OSP_TIME_NS
    osp_fidelity: float = C.OSP_FIDELITY
    kappa_ratio: float = C.KAPPA_RATIO

    def __post_init__(self):
        if not self.f_zeeman > 0:
            raise ValueError(f"f_zeeman must be > 0, got {self.f_zeeman}")
        if not self.t1 > 0:
            raise ValueError(f"t1 must be > 0, got {self.t1}")
        if not 0.0 <= self.osp_fidelity <= 1.0:
            raise ValueError(f"osp_fidelity must lie in [0, 1], got {self.osp_fidelity}")
        if not self.kappa_ratio >= 0:
            raise ValueError(f"kappa_ratio must be >= 0, got {self.kappa_ratio}")

    def flip_rate(self, rabi: float) -> float:
        """Drive-induced spin-flip rate kappa/2pi (MHz) at Rabi frequency ``rabi``."""
        return self.kappa_ratio * rabi

    def with_(self, **changes) -> "QubitParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class NuclearSpecies:
    name: str
    larmor: float  # MHz at the registry field
    abundance: float
    hyperfine: float  # MHz, ordinary frequency
    spin: float = C.NUCLEAR_SPIN_GAAS

    def __post_init__(self):
        if not self.larmor > 0:
            raise ValueError(f"{self.name}: larmor must be > 0")
        if not 0.0 <= self.abundance <= 1.0:
            raise ValueError(f"{self.name}: abundance must lie in [0, 1]")


@dataclass(frozen=True)
class SpeciesRegistry:
    """Nuclear species present in the dot at field ``b_field`` (tesla)."""

    species: tuple[NuclearSpecies, ...]
    b_field: float = C.B_FIELD_T
    # species summed by the nuclei-count estimator; 27Al only enters Larmor tables
    estimator_species: tuple[str, ...] = ("69Ga", "71Ga", "75As")

    def __iter__(self):
        return iter(self.species)

    def __len__(self):
        return len(self.species)

    def __getitem__(self, name: str) -> NuclearSpecies:
        for s in self.species:
            if s.name == name:
                return s
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(s.name == name for s in self.species)

    @property
    def difference_frequency(self) -> float:
        """omega(71Ga) - omega(75As) in MHz."""
        return self["71Ga"].larmor - self["75As"].larmor

    def at_field(self, b_field: float) -> "SpeciesRegistry":
        """Rebuild with Larmor frequencies scaled to a new field (fixed gyromagnetic ratios)."""
        scale = b_field / self.b_field
        rebuilt = tuple(replace(s, larmor=s.larmor * scale) for s in self.species)
        return replace(self, species=rebuilt, b_field=b_field)


# quoted constant; the registry's own difference 39.0 - 21.9 = 17.1 agrees within 0.02 MHz
DIFFERENCE_FREQUENCY = C.DIFFERENCE_FREQ_MHZ


def default_gaas_registry() -> SpeciesRegistry:
    return SpeciesRegistry(
        species=(
            NuclearSpecies("75As", C.LARMOR_AS75_MHZ, C.ABUNDANCE_AS75, C.HYPERFINE_AS75_MHZ),
            NuclearSpecies("69Ga", C.LARMOR_GA69_MHZ, C.ABUNDANCE_GA69, C.HYPERFINE_GA69_MHZ),
            NuclearSpecies("27Al", C.LARMOR_AL27_MHZ, C.ABUNDANCE_AL27, C.HYPERFINE_AL27_MHZ),
            NuclearSpecies("71Ga", C.LARMOR_GA71_MHZ, C.ABUNDANCE_GA71, C.HYPERFINE_GA71_MHZ),
        )
    )


@dataclass(frozen=True)
class UnitsConvention:
    frequency: str = "MHz"
    pulse_time: str = "ns"
    relaxation_time: str = "us"
    detuning_sign: str = "Delta = f_Z - f_probe"


UNITS = UnitsConvention()
