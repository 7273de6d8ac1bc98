"""Quantum self-attention machinery: angle embedding, the Query/Key/Value +
MPS + controlled-SWAP update channel, and the per-electron token block.

The update register packs four groups, qubit 0 first:
[main d_emb | value-aux d_emb | qk-aux d_emb | ancilla 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simkit import (
    BranchEnsemble,
    Register,
    _ensemble_from_density,
    cswap,
    mps_layer,
    ry_gate,
    strongly_entangling_layer,
    z_expectations,
)

__all__ = [
    "AttentionParams",
    "LayerParams",
    "VALUE_LAYERS",
    "angle_embed",
    "attention_update",
    "token_block_forward",
]

VALUE_LAYERS = 6  # Value ansatz depth; Query/Key use a single layer


@dataclass(frozen=True)
class AttentionParams:
    """Trainable angles of one attention update channel on d_emb qubits."""

    query: np.ndarray  # (1, d_emb, 3)
    key: np.ndarray  # (1, d_emb, 3)
    value: np.ndarray  # (VALUE_LAYERS, d_emb, 3)
    mps: np.ndarray  # (d_emb, 2, 3) staircase blocks, last one onto the ancilla

    def __post_init__(self):
        d = self.d_emb
        shapes = {
            "query": (1, d, 3),
            "key": (1, d, 3),
            "value": (VALUE_LAYERS, d, 3),
            "mps": (d, 2, 3),
        }
        for name, want in shapes.items():
            arr = getattr(self, name)
            if arr.shape != want:
                raise ValueError(f"{name} shape {arr.shape}, expected {want}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def d_emb(self) -> int:
        return self.query.shape[1]

    @classmethod
    def zeros(cls, d_emb: int) -> "AttentionParams":
        return cls(
            query=np.zeros((1, d_emb, 3)),
            key=np.zeros((1, d_emb, 3)),
            value=np.zeros((VALUE_LAYERS, d_emb, 3)),
            mps=np.zeros((d_emb, 2, 3)),
        )

    @classmethod
    def random(cls, d_emb: int, rng: np.random.Generator, scale: float = np.pi) -> "AttentionParams":
        return cls(
            query=rng.uniform(-scale, scale, (1, d_emb, 3)),
            key=rng.uniform(-scale, scale, (1, d_emb, 3)),
            value=rng.uniform(-scale, scale, (VALUE_LAYERS, d_emb, 3)),
            mps=rng.uniform(-scale, scale, (d_emb, 2, 3)),
        )


@dataclass(frozen=True)
class LayerParams:
    """Attention channel plus the residual-path normalization affine."""

    attention: AttentionParams
    norm_scale: np.ndarray  # (d_emb,)
    norm_shift: np.ndarray  # (d_emb,)

    def __post_init__(self):
        d = self.attention.d_emb
        for name in ("norm_scale", "norm_shift"):
            arr = getattr(self, name)
            if arr.shape != (d,):
                raise ValueError(f"{name} shape {arr.shape}, expected {(d,)}")


def angle_embed(features: np.ndarray) -> np.ndarray:
    """Product state ⊗_q Ry(f_q)|0⟩ as a statevector on len(features) qubits."""
    features = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(features)):
        raise ValueError("angle features must be finite")
    state = np.ones(1, dtype=complex)
    for f in features:
        state = np.kron(state, [np.cos(f / 2), np.sin(f / 2)])
    return state


def attention_update(
    psi: BranchEnsemble,
    x_j: np.ndarray,
    x_k: np.ndarray,
    p: AttentionParams,
    max_branches: int | None = 4,
) -> BranchEnsemble:
    """One token-mixing channel application on the d_emb-qubit token state.

    Per input branch, a 3·d_emb+1 register runs the Query/Key score circuit
    into the ancilla (via the MPS staircase) and the Value circuit on an
    auxiliary copy register; a qubit-wise controlled SWAP then writes the
    value features into the main register wherever the ancilla fires.
    Discarding everything but main yields a mixed state; the weighted
    reduced density matrices of all input branches are accumulated and
    eigendecomposed once, so max_branches=None (or 2^d_emb) is lossless.
    """
    d = p.d_emb
    x_j = np.asarray(x_j, dtype=float)
    x_k = np.asarray(x_k, dtype=float)
    if x_j.shape != (d,) or x_k.shape != (d,):
        raise ValueError(f"token features must have shape {(d,)}")
    if psi.d != d:
        raise ValueError(f"ensemble on {psi.d} qubits, params expect {d}")

    main = list(range(d))
    vaux = list(range(d, 2 * d))
    qkaux = list(range(2 * d, 3 * d))
    ancilla = 3 * d
    k = 3 * d + 1
    rest = np.zeros(2 ** (2 * d + 1), dtype=complex)
    rest[0] = 1.0

    rho = np.zeros((2**d, 2**d), dtype=complex)
    for w, branch in psi.branches:
        reg = Register(k, np.kron(branch, rest))
        for q, f in zip(qkaux, x_j):
            ry_gate(reg, q, f)
        strongly_entangling_layer(reg, qkaux, p.query[0])
        strongly_entangling_layer(reg, qkaux, p.key[0], adjoint=True)
        for q, f in zip(qkaux, x_k):
            ry_gate(reg, q, -f)
        mps_layer(reg, qkaux, ancilla, p.mps)
        for q, f in zip(vaux, x_k):
            ry_gate(reg, q, f)
        for layer in range(VALUE_LAYERS):
            strongly_entangling_layer(reg, vaux, p.value[layer])
        for qm, qv in zip(main, vaux):
            cswap(reg, ancilla, qm, qv)
        mat = reg.state.reshape(2**d, -1)  # main block is the leading axis
        rho += w * (mat @ mat.conj().T)
    return _ensemble_from_density(rho, d, max_branches)


def token_block_forward(
    tokens: np.ndarray, p: AttentionParams, max_branches: int | None = 4
) -> np.ndarray:
    """Run every token of one electron block through m sequential updates.

    tokens: (m, d_emb) squashed angle features.  Row j of the result holds
    the per-qubit ⟨Z⟩ readout of token j's state after mixing with all m
    tokens in order; entries lie in [−1, 1].
    """
    tokens = np.asarray(tokens, dtype=float)
    m, d = tokens.shape
    if d != p.d_emb:
        raise ValueError(f"tokens have d_emb={d}, params expect {p.d_emb}")
    out = np.empty((m, d))
    for j in range(m):
        ens = BranchEnsemble.pure(angle_embed(tokens[j]))
        for k in range(m):
            ens = attention_update(ens, tokens[j], tokens[k], p, max_branches)
        out[j] = z_expectations(ens, list(range(d)))
    return out
