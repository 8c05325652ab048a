"""Simulation of a passive PT-symmetric trapped-ion qubit: spectra, dynamics,
order parameters across the exceptional point, and shot-noise measurement."""
__version__ = "0.1.0"
