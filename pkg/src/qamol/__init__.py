"""Quantum-attention variational model for molecular ground-state energies."""

__version__ = "0.1.0"
