"""Monte-Carlo simulator for nuclear-spin cooling of a quantum-dot electron spin qubit."""

__version__ = "0.1.0"
