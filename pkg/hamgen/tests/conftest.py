"""Dense-matrix helpers for cross-checking mapped operators on few qubits."""
from __future__ import annotations

import numpy as np

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_word(word: str) -> np.ndarray:
    mat = np.eye(1, dtype=complex)
    for c in word:
        mat = np.kron(mat, PAULI_1Q[c])
    return mat


def dense_operator(terms: dict[str, float] | list[dict]) -> np.ndarray:
    """Dense matrix from either a {word: coeff} dict or mqt-ham-v1 term rows."""
    if isinstance(terms, dict):
        rows = terms.items()
    else:
        rows = ((t["word"], t["coeff"]) for t in terms)
    rows = list(rows)
    n = len(rows[0][0])
    mat = np.zeros((2**n, 2**n), dtype=complex)
    for word, coeff in rows:
        mat += coeff * dense_word(word)
    return mat
