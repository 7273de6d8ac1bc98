"""Qubit Hamiltonians as weighted Pauli strings, with matrix-free kernels.

Convention used everywhere in this package: qubit 0 is the leftmost
character of a Pauli word and the most significant bit of a statevector
index.  A statevector on k qubits is a complex ndarray of shape (2**k,).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

__all__ = [
    "PauliTerm",
    "Nucleus",
    "QubitHamiltonian",
    "ParseError",
    "ConvergenceError",
    "basis_state",
    "apply_pauli_word",
    "apply_hamiltonian",
    "expectation",
    "ground_energy",
    "parse_hamiltonian",
    "parse_hamiltonian_file",
]

DATASET_SCHEMA = "mqt-ham-v1"

_PAULI_CHARS = frozenset("IXYZ")


class ParseError(ValueError):
    """A dataset document violated the mqt-ham-v1 schema."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class ConvergenceError(RuntimeError):
    """Iterative eigensolver ran out of iterations.

    Carries the best available estimate and its residual norm.
    """

    def __init__(self, message: str, best_estimate: float | None, residual: float | None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.residual = residual


@dataclass(frozen=True)
class PauliTerm:
    """One real-weighted Pauli string, e.g. 0.5 * 'ZIXY'."""

    coefficient: float
    word: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient {self.coefficient!r}")
        bad = set(self.word) - _PAULI_CHARS
        if bad:
            raise ValueError(f"invalid Pauli characters {sorted(bad)} in word {self.word!r}")


@dataclass(frozen=True)
class Nucleus:
    symbol: str
    proton_number: int
    xyz_bohr: tuple[float, float, float]


@dataclass(frozen=True)
class QubitHamiltonian:
    """Pauli-sum Hamiltonian plus the molecule metadata it was built from."""

    n_qubits: int
    terms: tuple[PauliTerm, ...]
    molecule: str
    basis: str
    mapping: str
    bond_length_bohr: float
    hf_bitstring: str
    nuclei: tuple[Nucleus, ...] = ()
    electron_ids: tuple[tuple[int, ...], ...] = ()
    reference_energy_hartree: float | None = None
    hf_energy_hartree: float | None = None
    _masks: tuple = field(default=None, repr=False, compare=False)  # lazy kernel cache

    def __post_init__(self):
        for t in self.terms:
            if len(t.word) != self.n_qubits:
                raise ValueError(
                    f"term word {t.word!r} has length {len(t.word)}, expected {self.n_qubits}"
                )
        if len(self.hf_bitstring) != self.n_qubits or set(self.hf_bitstring) - {"0", "1"}:
            raise ValueError(f"hf_bitstring {self.hf_bitstring!r} is not a length-{self.n_qubits} binary string")

    @property
    def hf_index(self) -> int:
        """Amplitude index of the Hartree-Fock basis state (qubit 0 = MSB)."""
        return int(self.hf_bitstring, 2)

    def masks(self):
        """Per-term (flip_mask, z_mask, phase) triples for the matrix-free kernel."""
        if self._masks is None:
            triples = tuple(_word_masks(t.word) for t in self.terms)
            object.__setattr__(self, "_masks", triples)
        return self._masks


def basis_state(k: int, index: int) -> np.ndarray:
    """Computational basis state |index> on k qubits."""
    s = np.zeros(2**k, dtype=complex)
    s[index] = 1.0
    return s


def _word_masks(word: str) -> tuple[int, int, complex]:
    """Bit masks realizing P|b> = phase * (-1)^{popcount(b & z_mask)} |b ^ flip_mask>."""
    k = len(word)
    flip = 0
    zmask = 0
    n_y = 0
    for q, c in enumerate(word):
        bit = 1 << (k - 1 - q)  # qubit 0 is the MSB
        if c == "X":
            flip |= bit
        elif c == "Y":
            flip |= bit
            zmask |= bit
            n_y += 1
        elif c == "Z":
            zmask |= bit
    return flip, zmask, 1j**n_y


def _signs(k: int, zmask: int) -> np.ndarray:
    """(-1)^{popcount(i & zmask)} for every amplitude index i."""
    idx = np.arange(2**k, dtype=np.uint64) & np.uint64(zmask)
    parity = np.bitwise_count(idx) & np.uint64(1)
    return 1.0 - 2.0 * parity.astype(np.float64)


def apply_pauli_word(state: np.ndarray, word: str) -> np.ndarray:
    """Return P|psi> for a Pauli word, without materializing any matrix.

    out[j] = phase * (-1)^popcount((j^flip) & zmask) * psi[j^flip]
    """
    k = int(np.log2(state.shape[0]))
    if len(word) != k:
        raise ValueError(f"word length {len(word)} does not match state on {k} qubits")
    flip, zmask, phase = _word_masks(word)
    out = state * _signs(k, zmask) if zmask else state.astype(complex, copy=True)
    if flip:
        out = out[np.arange(2**k) ^ flip]
    return phase * out if phase != 1 else out


def apply_hamiltonian(h: QubitHamiltonian, state: np.ndarray) -> np.ndarray:
    """Return H|psi> accumulated term by term (matrix-free)."""
    k = h.n_qubits
    if state.shape[0] != 2**k:
        raise ValueError(f"state has {state.shape[0]} amplitudes, expected {2**k}")
    out = np.zeros_like(state, dtype=complex)
    idx = np.arange(2**k)
    for term, (flip, zmask, phase) in zip(h.terms, h.masks()):
        contrib = state * _signs(k, zmask) if zmask else state
        if flip:
            contrib = contrib[idx ^ flip]
        out += (term.coefficient * phase) * contrib
    return out


def expectation(h: QubitHamiltonian, state: np.ndarray) -> float:
    """<psi|H|psi> in Hartree; asserts the imaginary residue is negligible."""
    hs = apply_hamiltonian(h, state)
    val = np.vdot(state, hs)
    if abs(val.imag) >= 1e-10:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}; Hamiltonian not Hermitian?")
    return float(val.real)


def ground_energy(h: QubitHamiltonian, tol: float = 1e-9, maxiter: int = 10_000, seed: int = 7) -> float:
    """Smallest eigenvalue of H via matrix-free implicitly restarted Lanczos.

    The start vector is seeded so oracle values are reproducible.  Raises
    ConvergenceError (carrying the best Ritz estimate and residual) if the
    iteration cap is hit.
    """
    if h.n_qubits > 16:
        raise ValueError(f"ground_energy is desk-scale only (n_q <= 16, got {h.n_qubits})")
    dim = 2**h.n_qubits
    if dim <= 4:
        return float(np.linalg.eigvalsh(dense_matrix(h))[0])
    op = spla.LinearOperator(
        (dim, dim),
        matvec=lambda v: apply_hamiltonian(h, v.astype(complex)),
        dtype=complex,
    )
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    try:
        vals = spla.eigsh(
            op, k=1, which="SA", v0=v0, tol=tol, maxiter=maxiter, return_eigenvectors=False
        )
    except spla.ArpackNoConvergence as exc:
        best = float(exc.eigenvalues[0]) if len(exc.eigenvalues) else None
        residual = None
        if best is not None and len(exc.eigenvectors):
            vec = exc.eigenvectors[:, 0]
            residual = float(np.linalg.norm(apply_hamiltonian(h, vec) - best * vec))
        raise ConvergenceError(
            f"Lanczos did not converge within {maxiter} iterations", best, residual
        ) from exc
    return float(vals[0])


def dense_matrix(h: QubitHamiltonian) -> np.ndarray:
    """Explicit 2^n x 2^n matrix; intended for small n and cross-checks."""
    if h.n_qubits > 14:
        raise ValueError("dense_matrix is limited to n_q <= 14")
    dim = 2**h.n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(dim)
    for col in range(dim):
        mat[:, col] = apply_hamiltonian(h, eye[:, col].astype(complex))
    return mat


def _require(doc: dict, key: str, kind, where: str = ""):
    path = f"{where}{key}"
    if not isinstance(doc, dict):
        raise ParseError(where.rstrip("."), "expected an object")
    if key not in doc:
        raise ParseError(path, "missing required field")
    val = doc[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ParseError(path, f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def parse_hamiltonian(doc: dict) -> QubitHamiltonian:
    """Validate one mqt-ham-v1 document and build a QubitHamiltonian.

    Term order in the document is preserved.
    """
    if not isinstance(doc, dict):
        raise ParseError("document", "expected a JSON object")
    schema = _require(doc, "schema", str)
    if schema != DATASET_SCHEMA:
        raise ParseError("schema", f"expected {DATASET_SCHEMA!r}, got {schema!r}")
    n_q = _require(doc, "n_qubits", int)
    if n_q < 1:
        raise ParseError("n_qubits", f"must be positive, got {n_q}")
    molecule = _require(doc, "molecule", str)
    basis = _require(doc, "basis", str)
    mapping = _require(doc, "mapping", str)
    bond = _require(doc, "bond_length_bohr", float)
    hf = _require(doc, "hf_bitstring", str)
    if len(hf) != n_q:
        raise ParseError("hf_bitstring", f"length {len(hf)} does not match n_qubits={n_q}")
    if set(hf) - {"0", "1"}:
        raise ParseError("hf_bitstring", f"contains non-binary characters: {hf!r}")

    nuclei = []
    for i, entry in enumerate(_require(doc, "nuclei", list)):
        where = f"nuclei[{i}]."
        sym = _require(entry, "symbol", str, where)
        z = _require(entry, "proton_number", int, where)
        xyz = _require(entry, "xyz_bohr", list, where)
        if len(xyz) != 3:
            raise ParseError(where + "xyz_bohr", "expected 3 coordinates")
        nuclei.append(Nucleus(sym, z, tuple(float(c) for c in xyz)))

    electron_ids = []
    for i, ids in enumerate(_require(doc, "electron_ids", list)):
        if not isinstance(ids, list) or not all(isinstance(v, int) for v in ids):
            raise ParseError(f"electron_ids[{i}]", "expected a list of integers")
        electron_ids.append(tuple(ids))
    if len(electron_ids) != len(nuclei):
        raise ParseError("electron_ids", f"{len(electron_ids)} groups for {len(nuclei)} nuclei")

    terms = []
    for i, entry in enumerate(_require(doc, "terms", list)):
        where = f"terms[{i}]."
        coeff = _require(entry, "coeff", (int, float), where)
        word = _require(entry, "word", str, where)
        if len(word) != n_q:
            raise ParseError(where + "word", f"length {len(word)} does not match n_qubits={n_q}")
        if set(word) - _PAULI_CHARS:
            raise ParseError(where + "word", f"invalid Pauli characters in {word!r}")
        terms.append(PauliTerm(float(coeff), word))

    ref = doc.get("reference_energy_hartree")
    if ref is not None and not isinstance(ref, (int, float)):
        raise ParseError("reference_energy_hartree", "expected a number or null")
    hf_e = doc.get("hf_energy_hartree")
    if hf_e is not None and not isinstance(hf_e, (int, float)):
        raise ParseError("hf_energy_hartree", "expected a number or null")

    return QubitHamiltonian(
        n_qubits=n_q,
        terms=tuple(terms),
        molecule=molecule,
        basis=basis,
        mapping=mapping,
        bond_length_bohr=float(bond),
        hf_bitstring=hf,
        nuclei=tuple(nuclei),
        electron_ids=tuple(electron_ids),
        reference_energy_hartree=None if ref is None else float(ref),
        hf_energy_hartree=None if hf_e is None else float(hf_e),
    )


def parse_hamiltonian_file(path: str | Path) -> QubitHamiltonian:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), f"invalid JSON: {exc}") from exc
    try:
        return parse_hamiltonian(doc)
    except ParseError as exc:
        raise ParseError(f"{path.name}:{exc.field}", str(exc).split(": ", 1)[-1]) from exc
