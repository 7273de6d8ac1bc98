"""Molecular qubit-Hamiltonian dataset generator.

Pipeline per geometry: Gaussian integrals -> RHF -> MO transform ->
second-quantized Hamiltonian -> fermion-to-qubit mapping -> JSON file,
with a determinant-FCI reference energy computed on an independent route.
"""

__version__ = "0.1.0"
