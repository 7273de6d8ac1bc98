"""Named trainable-parameter store shared by the quantum model and the
classical baseline.

Every tensor is registered exactly once under a unique name and assigned to
one side of a total partition:

* upstream — everything that feeds the token pipeline (electron embedding,
  tokenizer weights, all per-layer parameters); differentiated by finite
  differences or SPSA.
* downstream — the aggregation FC, the two conv kernels, the aggregation
  norms, and the per-molecule output heads; differentiated analytically.

Weight decay is excluded for normalization shifts, identified by parameter
names ending in "shift".
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .circuits import VALUE_LAYERS, AttentionParams, LayerParams
from .molecules import MoleculeSpec

__all__ = [
    "ClassicalLayerParams",
    "ParamStore",
    "add_head",
    "init_store",
]

KINDS = ("quantum", "classical")


@dataclass(frozen=True)
class ClassicalLayerParams:
    """One pre-norm encoder layer: single-head attention plus tanh FFN."""

    wq: np.ndarray  # (d, d)
    wk: np.ndarray  # (d, d)
    wv: np.ndarray  # (d, d)
    wo: np.ndarray  # (d, d)
    ffn_w1: np.ndarray  # (d, 4d)
    ffn_b1: np.ndarray  # (4d,)
    ffn_w2: np.ndarray  # (4d, d)
    ffn_b2: np.ndarray  # (d,)
    norm_in_scale: np.ndarray
    norm_in_shift: np.ndarray
    norm_attn_scale: np.ndarray
    norm_attn_shift: np.ndarray
    norm_ffn_scale: np.ndarray
    norm_ffn_shift: np.ndarray


class ParamStore:
    """Ordered name -> ndarray map with a frozen topology.

    Values are mutable (the optimizer updates them in place via __setitem__);
    names and shapes are fixed at construction.
    """

    def __init__(
        self,
        groups: dict[str, np.ndarray],
        upstream: tuple[str, ...],
        kind: str,
        d_emb: int,
        n_layers: int,
    ):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        unknown = set(upstream) - set(groups)
        if unknown:
            raise ValueError(f"upstream names not registered: {sorted(unknown)}")
        self._groups = {k: np.asarray(v, dtype=float) for k, v in groups.items()}
        self._upstream = tuple(upstream)
        self.kind = kind
        self.d_emb = d_emb
        self.n_layers = n_layers

    # -- mapping surface ---------------------------------------------------
    def __getitem__(self, name: str) -> np.ndarray:
        return self._groups[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        cur = self._groups[name]
        value = np.asarray(value, dtype=float)
        if value.shape != cur.shape:
            raise ValueError(f"{name}: shape {value.shape} != registered {cur.shape}")
        self._groups[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._groups

    def __iter__(self):
        return iter(self._groups)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._groups)

    @property
    def upstream_names(self) -> tuple[str, ...]:
        return self._upstream

    @property
    def downstream_names(self) -> tuple[str, ...]:
        up = set(self._upstream)
        return tuple(n for n in self._groups if n not in up)

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self._groups.values())

    def applies_weight_decay(self, name: str) -> bool:
        return not name.endswith("shift")

    # -- flat views --------------------------------------------------------
    def flatten(self, names: tuple[str, ...] | None = None) -> np.ndarray:
        names = self.names if names is None else names
        return np.concatenate([self._groups[n].ravel() for n in names]) if names else np.zeros(0)

    def assign_flat(self, names: tuple[str, ...], vec: np.ndarray) -> None:
        pos = 0
        for n in names:
            cur = self._groups[n]
            nxt = pos + cur.size
            self._groups[n] = np.asarray(vec[pos:nxt], dtype=float).reshape(cur.shape).copy()
            pos = nxt
        if pos != vec.size:
            raise ValueError(f"flat vector has {vec.size} entries, expected {pos}")

    def copy(self) -> "ParamStore":
        return ParamStore(
            {k: v.copy() for k, v in self._groups.items()},
            self._upstream,
            self.kind,
            self.d_emb,
            self.n_layers,
        )

    def checksum(self) -> str:
        """SHA-256 over names, shapes, and little-endian float64 payloads."""
        hasher = hashlib.sha256()
        for name, arr in self._groups.items():
            hasher.update(name.encode())
            hasher.update(str(arr.shape).encode())
            hasher.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return hasher.hexdigest()

    # -- structured views --------------------------------------------------
    def layer(self, l: int) -> LayerParams | ClassicalLayerParams:
        if not 0 <= l < self.n_layers:
            raise IndexError(f"layer {l} out of range [0, {self.n_layers})")
        p = f"layer{l}."
        if self.kind == "quantum":
            att = AttentionParams(
                query=self[p + "query"],
                key=self[p + "key"],
                value=self[p + "value"],
                mps=self[p + "mps"],
            )
            return LayerParams(
                attention=att,
                norm_scale=self[p + "norm_scale"],
                norm_shift=self[p + "norm_shift"],
            )
        return ClassicalLayerParams(
            **{f: self[p + f] for f in ClassicalLayerParams.__dataclass_fields__}
        )

    def head(self, molecule: str) -> tuple[np.ndarray, np.ndarray]:
        wname = f"final_fc.{molecule}.weight"
        if wname not in self._groups:
            raise KeyError(f"no output head for molecule {molecule!r}")
        return self._groups[wname], self._groups[f"final_fc.{molecule}.bias"]


def add_head(store: ParamStore, mol: MoleculeSpec) -> ParamStore:
    """Store extended with a zero output head for `mol` (no-op if present)."""
    if f"final_fc.{mol.name}.weight" in store:
        return store
    groups = {n: store[n].copy() for n in store.names}
    groups[f"final_fc.{mol.name}.weight"] = np.zeros((2 * store.d_emb, 2**mol.n_q))
    groups[f"final_fc.{mol.name}.bias"] = np.zeros(2**mol.n_q)
    return ParamStore(groups, store.upstream_names, store.kind, store.d_emb, store.n_layers)


def init_store(
    molecules: list[MoleculeSpec],
    d_emb: int,
    n_layers: int,
    kind: str = "quantum",
    seed: int = 0,
    init_scale: float = 0.1,
    max_electron_id: int = 4,
) -> ParamStore:
    """Fresh parameter store with one output head per molecule.

    The output heads start at exactly zero so the initial model state is the
    Hartree-Fock vector; norm scales start at 1 and shifts at 0.  Tokenizer
    weights start near the identity so the 4-feature recovery in aggregation
    is well conditioned from the first step.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if d_emb < 4:
        raise ValueError(f"d_emb={d_emb}: feature recovery needs d_emb >= 4")
    if n_layers < 1:
        raise ValueError("need at least one layer")
    if not molecules:
        raise ValueError("need at least one molecule")
    names = [mol.name for mol in molecules]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate molecule names: {names}")
    top_id = max(max(mol.electron_ids) for mol in molecules)
    if top_id > max_electron_id:
        raise ValueError(f"electron id {top_id} exceeds embedding table size {max_electron_id}")

    rng = np.random.default_rng(seed)
    d = d_emb
    groups: dict[str, np.ndarray] = {}
    upstream: list[str] = []

    def reg_up(name, value):
        groups[name] = value
        upstream.append(name)

    reg_up("electron_embed", 0.1 * rng.standard_normal((max_electron_id, 3)))
    reg_up("w_en", np.eye(4, d) + 0.05 * rng.standard_normal((4, d)))
    for l in range(n_layers):
        p = f"layer{l}."
        if kind == "quantum":
            reg_up(p + "query", rng.uniform(-init_scale, init_scale, (1, d, 3)))
            reg_up(p + "key", rng.uniform(-init_scale, init_scale, (1, d, 3)))
            reg_up(p + "value", rng.uniform(-init_scale, init_scale, (VALUE_LAYERS, d, 3)))
            reg_up(p + "mps", rng.uniform(-init_scale, init_scale, (d, 2, 3)))
            reg_up(p + "norm_scale", np.ones(d))
            reg_up(p + "norm_shift", np.zeros(d))
        else:
            for w in ("wq", "wk", "wv", "wo"):
                reg_up(p + w, rng.standard_normal((d, d)) / np.sqrt(d))
            reg_up(p + "ffn_w1", rng.standard_normal((d, 4 * d)) / np.sqrt(d))
            reg_up(p + "ffn_b1", np.zeros(4 * d))
            reg_up(p + "ffn_w2", rng.standard_normal((4 * d, d)) / np.sqrt(4 * d))
            reg_up(p + "ffn_b2", np.zeros(d))
            for nm in ("norm_in", "norm_attn", "norm_ffn"):
                reg_up(p + nm + "_scale", np.ones(d))
                reg_up(p + nm + "_shift", np.zeros(d))

    groups["agg_fc.weight"] = rng.standard_normal((d, 2 * d)) / np.sqrt(d)
    groups["agg_fc.bias"] = np.zeros(2 * d)
    for conv in ("conv_nuc", "conv_elec"):
        groups[conv + ".weight"] = rng.standard_normal((2 * d, 2 * d, 2)) / np.sqrt(4 * d)
        groups[conv + ".bias"] = np.zeros(2 * d)
    for nm in ("agg_norm_e", "agg_norm_out"):
        groups[nm + ".scale"] = np.ones(2 * d)
        groups[nm + ".shift"] = np.zeros(2 * d)
    for mol in molecules:
        groups[f"final_fc.{mol.name}.weight"] = np.zeros((2 * d, 2**mol.n_q))
        groups[f"final_fc.{mol.name}.bias"] = np.zeros(2**mol.n_q)

    return ParamStore(groups, tuple(upstream), kind, d, n_layers)
