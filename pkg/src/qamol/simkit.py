"""Dense statevector simulation primitives.

Gates mutate a caller-owned Register in place and return it for chaining.
Qubit 0 is the most significant bit of the amplitude index, matching the
Pauli-word convention in `qamol.pauli`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Register",
    "BranchEnsemble",
    "rot_gate",
    "rot_matrix",
    "ry_gate",
    "cnot",
    "cswap",
    "strongly_entangling_layer",
    "mps_layer",
    "z_expectations",
    "trace_to_ensemble",
]


@dataclass
class Register:
    """k-qubit statevector with in-place gate application."""

    k: int
    state: np.ndarray = None

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(2**self.k, dtype=complex)
            self.state[0] = 1.0
        else:
            self.state = np.asarray(self.state, dtype=complex)
            if self.state.shape != (2**self.k,):
                raise ValueError(f"state shape {self.state.shape} does not match k={self.k}")

    def check_norm(self, atol: float = 1e-9) -> None:
        nv = np.linalg.norm(self.state)
        if abs(nv - 1.0) > atol:
            raise ValueError(f"register norm drifted to {nv}")

    def _axis(self, q: int) -> int:
        if not 0 <= q < self.k:
            raise IndexError(f"qubit {q} out of range for k={self.k}")
        return q


@dataclass(frozen=True)
class BranchEnsemble:
    """Weighted pure-state decomposition of a (generally mixed) d-qubit state."""

    d: int
    branches: tuple[tuple[float, np.ndarray], ...]
    discarded_mass: float = 0.0

    def __post_init__(self):
        if not self.branches:
            raise ValueError("ensemble needs at least one branch")
        total = 0.0
        for w, s in self.branches:
            if w <= 0:
                raise ValueError(f"non-positive branch weight {w}")
            if s.shape != (2**self.d,):
                raise ValueError(f"branch state shape {s.shape} does not match d={self.d}")
            nv = np.linalg.norm(s)
            if abs(nv - 1.0) > 1e-9:
                raise ValueError(f"branch state norm {nv} is not 1")
            total += w
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"branch weights sum to {total}, expected 1")

    @classmethod
    def pure(cls, state: np.ndarray) -> "BranchEnsemble":
        d = int(np.log2(state.shape[0]))
        return cls(d, ((1.0, np.asarray(state, dtype=complex)),))

    def density_matrix(self) -> np.ndarray:
        """Σ_b w_b |φ_b⟩⟨φ_b| — reconstruction used by tests and merging."""
        rho = np.zeros((2**self.d, 2**self.d), dtype=complex)
        for w, s in self.branches:
            rho += w * np.outer(s, s.conj())
        return rho


def _apply_1q(reg: Register, q: int, u: np.ndarray) -> Register:
    q = reg._axis(q)
    psi = reg.state.reshape([2] * reg.k)
    psi = np.moveaxis(psi, q, 0)
    psi = np.tensordot(u, psi, axes=([1], [0]))
    reg.state = np.ascontiguousarray(np.moveaxis(psi, 0, q)).reshape(-1)
    return reg


def _rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rot_matrix(theta_z1: float, theta_y: float, theta_z2: float) -> np.ndarray:
    """2x2 unitary Rz(θz1)·Ry(θy)·Rz(θz2); the rightmost factor acts first."""
    return _rz(theta_z1) @ _ry(theta_y) @ _rz(theta_z2)


def rot_gate(reg: Register, qubit: int, theta_z1: float, theta_y: float, theta_z2: float) -> Register:
    return _apply_1q(reg, qubit, rot_matrix(theta_z1, theta_y, theta_z2))


def ry_gate(reg: Register, qubit: int, theta: float) -> Register:
    return _apply_1q(reg, qubit, _ry(theta))


def _bit(k: int, q: int) -> int:
    return 1 << (k - 1 - q)


def cnot(reg: Register, control: int, target: int) -> Register:
    if control == target:
        raise ValueError("control and target collide")
    reg._axis(control)
    reg._axis(target)
    idx = np.arange(2**reg.k)
    cset = (idx & _bit(reg.k, control)).astype(bool)
    src = np.where(cset, idx ^ _bit(reg.k, target), idx)
    reg.state = reg.state[src]
    return reg


def cswap(reg: Register, control: int, a: int, b: int) -> Register:
    if len({control, a, b}) != 3:
        raise ValueError("cswap indices collide")
    for q in (control, a, b):
        reg._axis(q)
    k = reg.k
    idx = np.arange(2**k)
    cset = (idx & _bit(k, control)).astype(bool)
    differ = ((idx & _bit(k, a)).astype(bool)) ^ ((idx & _bit(k, b)).astype(bool))
    src = np.where(cset & differ, idx ^ (_bit(k, a) | _bit(k, b)), idx)
    reg.state = reg.state[src]
    return reg


def strongly_entangling_layer(
    reg: Register, qubits: list[int], params: np.ndarray, adjoint: bool = False
) -> Register:
    """One strongly-entangling block: per-qubit Rz·Ry·Rz, then a cyclic CNOT ring.

    With adjoint=True applies the exact inverse (reversed ring, inverted rotations).
    """
    nq = len(qubits)
    if nq < 2:
        raise ValueError("strongly entangling layer needs at least 2 qubits")
    params = np.asarray(params, dtype=float)
    if params.shape != (nq, 3):
        raise ValueError(f"params shape {params.shape}, expected {(nq, 3)}")
    ring = [(qubits[i], qubits[(i + 1) % nq]) for i in range(nq)]
    if not adjoint:
        for q, (z1, y, z2) in zip(qubits, params):
            rot_gate(reg, q, z1, y, z2)
        for c, t in ring:
            cnot(reg, c, t)
    else:
        for c, t in reversed(ring):
            cnot(reg, c, t)
        for q, (z1, y, z2) in zip(qubits, params):
            rot_gate(reg, q, -z2, -y, -z1)
    return reg


def mps_layer(reg: Register, qubits: list[int], ancilla: int, params: np.ndarray) -> Register:
    """Bond-dimension-2 staircase ending on the ancilla.

    Block i acts on the pair (chain[i], chain[i+1]) of the walk
    q_0, …, q_{d−1}, ancilla: a rot on each pair qubit, then CNOT from the
    first to the second.  The ancilla ends up carrying the 1-qubit summary.
    """
    if ancilla in qubits:
        raise ValueError("ancilla must not be one of the data qubits")
    d = len(qubits)
    params = np.asarray(params, dtype=float)
    if params.shape != (d, 2, 3):
        raise ValueError(f"params shape {params.shape}, expected {(d, 2, 3)}")
    chain = list(qubits) + [ancilla]
    for i in range(d):
        lo, hi = chain[i], chain[i + 1]
        rot_gate(reg, lo, *params[i, 0])
        rot_gate(reg, hi, *params[i, 1])
        cnot(reg, lo, hi)
    return reg


def _z_expectations_pure(state: np.ndarray, k: int, qubits: list[int]) -> np.ndarray:
    probs = np.abs(state) ** 2
    probs = probs.reshape([2] * k)
    out = np.empty(len(qubits))
    for i, q in enumerate(qubits):
        if not 0 <= q < k:
            raise IndexError(f"qubit {q} out of range for k={k}")
        marg = probs.sum(axis=tuple(ax for ax in range(k) if ax != q))
        out[i] = marg[0] - marg[1]
    return out


def z_expectations(obj: Register | BranchEnsemble, qubits: list[int]) -> np.ndarray:
    """Per-qubit ⟨Z⟩; ensembles are weight-averaged.  Values lie in [−1, 1]."""
    if isinstance(obj, Register):
        return _z_expectations_pure(obj.state, obj.k, qubits)
    out = np.zeros(len(qubits))
    for w, s in obj.branches:
        out += w * _z_expectations_pure(s, obj.d, qubits)
    return out


def trace_to_ensemble(reg: Register, keep_qubits: list[int], max_branches: int | None = 4) -> BranchEnsemble:
    """Partial trace over the complement of keep_qubits, as a pure-state ensemble.

    Eigendecomposes the reduced density matrix, keeps eigenpairs with
    eigenvalue > 1e-12, truncates to the max_branches largest, and
    renormalizes; the discarded eigenvalue mass is recorded on the result.
    max_branches=None keeps every branch (exact mode).
    """
    if not keep_qubits:
        raise ValueError("keep_qubits must be nonempty")
    keep = list(keep_qubits)
    rest = [q for q in range(reg.k) if q not in keep]
    psi = reg.state.reshape([2] * reg.k)
    psi = np.transpose(psi, axes=keep + rest)
    mat = psi.reshape(2 ** len(keep), -1)
    rho = mat @ mat.conj().T
    return _ensemble_from_density(rho, len(keep), max_branches)


def _ensemble_from_density(rho: np.ndarray, d: int, max_branches: int | None) -> BranchEnsemble:
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > 1e-9:
        raise ValueError(f"reduced density matrix non-Hermitian by {herm_err:.3e}")
    vals, vecs = np.linalg.eigh(rho)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    total = float(np.clip(vals, 0.0, None).sum())
    mask = vals > 1e-12
    vals, vecs = vals[mask], vecs[:, mask]
    if max_branches is not None and len(vals) > max_branches:
        vals, vecs = vals[:max_branches], vecs[:, :max_branches]
    discarded = max(total - float(vals.sum()), 0.0)
    vals = vals / vals.sum()
    branches = tuple((float(w), np.ascontiguousarray(vecs[:, i])) for i, w in enumerate(vals))
    return BranchEnsemble(d, branches, discarded_mass=discarded)
