"""Shared dense-matrix oracles used to cross-check the matrix-free kernels."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from qamol.pauli import PauliTerm, QubitHamiltonian

REPO_ROOT = Path(__file__).resolve().parent.parent
H2_DATASET = REPO_ROOT / "datasets" / "h2"

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_word(word: str) -> np.ndarray:
    """Kronecker-product matrix for a Pauli word; qubit 0 is the leftmost factor."""
    mat = np.eye(1, dtype=complex)
    for c in word:
        mat = np.kron(mat, PAULI_1Q[c])
    return mat


def dense_hamiltonian(h: QubitHamiltonian) -> np.ndarray:
    dim = 2**h.n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        mat += t.coefficient * dense_word(t.word)
    return mat


def random_state(k: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(2**k) + 1j * rng.standard_normal(2**k)
    return v / np.linalg.norm(v)


def random_hamiltonian(n_q: int, n_terms: int, rng: np.random.Generator) -> QubitHamiltonian:
    words = set()
    while len(words) < n_terms:
        words.add("".join(rng.choice(list("IXYZ"), size=n_q)))
    terms = tuple(PauliTerm(float(rng.standard_normal()), w) for w in sorted(words))
    return QubitHamiltonian(
        n_qubits=n_q,
        terms=terms,
        molecule="random",
        basis="none",
        mapping="none",
        bond_length_bohr=1.0,
        hf_bitstring="0" * n_q,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)
