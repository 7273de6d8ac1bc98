"""AdamW optimizer, split-strategy gradient engine, and the training regimes:
plain single-molecule training, multi-molecule pretraining, few-shot
fine-tuning, and potential-energy-curve sweeps.

Gradients are composite: parameters downstream of the layer stack get exact
reverse-mode gradients from one cached forward pass; upstream parameters
(embedding, tokenizer weights, all layer parameters) are estimated by central
finite differences or SPSA on the full forward pass.

Bond lengths are sampled continuously; the Hamiltonian is looked up at the
nearest 0.05-Bohr grid point (clamped to the dataset range) while the
tokenizer sees the exact sampled geometry.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import model
from .molecules import MoleculeSpec
from .params import KINDS, ParamStore, add_head, init_store
from .pauli import QubitHamiltonian
from .runio import HamiltonianLibrary

__all__ = [
    "AdamState",
    "GRAD_MODES",
    "IterRow",
    "PEC_GRID",
    "RunRecord",
    "TrainConfig",
    "adamw_step",
    "config_from_dict",
    "fd_gradient",
    "finetune",
    "gradient",
    "mean_abs_delta",
    "pretrain",
    "snap_bond",
    "spsa_gradient",
    "sweep_pec",
    "train_plain",
    "zero_shot_eval",
]

BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8
GRAD_MODES = ("fd-central", "spsa")
GRID_STEP, GRID_LO, GRID_HI = 0.05, 0.05, 5.0

# evaluation sweep: 0.1 .. 4.9 Bohr in 0.1 steps
PEC_GRID = tuple(round(0.1 * k, 10) for k in range(1, 50))


def snap_bond(r: float, lo: float = GRID_LO, hi: float = GRID_HI, step: float = GRID_STEP) -> float:
    """Nearest dataset grid point, clamped to [lo, hi]."""
    k = int(round(r / step))
    k = min(max(k, int(round(lo / step))), int(round(hi / step)))
    return round(k * step, 10)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 0.004
    weight_decay: float = 0.001
    iterations: int = 100
    bond_range: tuple[float, float] = (0.05, 5.0)
    seed: int = 0
    grad_mode: str = "fd-central"
    fd_step: float = 1e-4
    max_branches: int | None = 4
    molecules: tuple[str, ...] = ("H2",)
    fewshot_bonds: tuple[float, ...] | None = None
    d_emb: int = 4
    n_layers: int = 2
    kind: str = "quantum"
    init_scale: float = 0.1

    def __post_init__(self):
        lo, hi = self.bond_range
        if not lo < hi:
            raise ValueError(f"bond_range {self.bond_range}: need lo < hi")
        if self.fd_step <= 0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.grad_mode not in GRAD_MODES:
            raise ValueError(f"grad_mode must be one of {GRAD_MODES}, got {self.grad_mode!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.max_branches is not None and self.max_branches < 1:
            raise ValueError(f"max_branches must be None or >= 1, got {self.max_branches}")
        if not self.molecules:
            raise ValueError("molecules must name at least one species")
        self.bond_range = (float(lo), float(hi))
        self.molecules = tuple(self.molecules)
        if self.fewshot_bonds is not None:
            self.fewshot_bonds = tuple(float(b) for b in self.fewshot_bonds)

    def with_overrides(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


def config_from_dict(doc: dict) -> TrainConfig:
    """TrainConfig from a parsed JSON/TOML document; unknown keys rejected."""
    known = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown config key {unknown[0]!r} (valid keys: {sorted(known)})")
    kwargs = dict(doc)
    if "bond_range" in kwargs:
        lo, hi = kwargs["bond_range"]
        kwargs["bond_range"] = (float(lo), float(hi))
    return TrainConfig(**kwargs)


# ---------------------------------------------------------------------------
# run record
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IterRow:
    iteration: int
    molecule: str
    r_sampled: float
    r_hamiltonian: float
    energy: float
    grad_norm_upstream: float
    grad_norm_downstream: float
    wall_time_s: float


@dataclass
class RunRecord:
    """Append-only training trace plus the final parameter checksum."""

    rows: list[IterRow] = field(default_factory=list)
    final_checksum: str = ""

    def append(self, row: IterRow) -> None:
        self.rows.append(row)

    def stable_bytes(self) -> bytes:
        """Deterministic serialization: everything except wall times."""
        lines = [
            f"{r.iteration},{r.molecule},{r.r_sampled!r},{r.r_hamiltonian!r},"
            f"{r.energy!r},{r.grad_norm_upstream!r},{r.grad_norm_downstream!r}"
            for r in self.rows
        ]
        lines.append(self.final_checksum)
        return "\n".join(lines).encode()

    def csv_rows(self):
        return [
            (
                r.iteration,
                r.molecule,
                r.r_sampled,
                r.r_hamiltonian,
                r.energy,
                r.grad_norm_upstream,
                r.grad_norm_downstream,
                r.wall_time_s,
            )
            for r in self.rows
        ]


# ---------------------------------------------------------------------------
# AdamW
# ---------------------------------------------------------------------------

class AdamState:
    """Per-tensor first/second moments and step counts."""

    def __init__(self):
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t: dict[str, int] = {}

    def to_tensors(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for n in self.m:
            out[f"adam.m.{n}"] = self.m[n]
            out[f"adam.v.{n}"] = self.v[n]
            out[f"adam.t.{n}"] = np.array(float(self.t[n]))
        return out

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray]) -> "AdamState":
        state = cls()
        for key, arr in tensors.items():
            if key.startswith("adam.m."):
                state.m[key[len("adam.m."):]] = np.array(arr, dtype=float)
            elif key.startswith("adam.v."):
                state.v[key[len("adam.v."):]] = np.array(arr, dtype=float)
            elif key.startswith("adam.t."):
                state.t[key[len("adam.t."):]] = int(round(float(arr)))
        return state


def adamw_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float,
) -> None:
    """One decoupled-weight-decay Adam update, in place on the store.

    Decay (skipped for normalization shifts) is applied to the parameter
    before the adaptive step.  Only tensors present in `grads` are touched.
    """
    for name in sorted(grads):
        g = np.asarray(grads[name], dtype=float)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {name!r}; aborting update")
        p = store[name]
        if weight_decay and store.applies_weight_decay(name):
            p = p * (1.0 - lr * weight_decay)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        else:
            v = state.v[name]
        m = BETA1 * m + (1.0 - BETA1) * g
        v = BETA2 * v + (1.0 - BETA2) * g * g
        t = state.t.get(name, 0) + 1
        state.m[name], state.v[name], state.t[name] = m, v, t
        m_hat = m / (1.0 - BETA1**t)
        v_hat = v / (1.0 - BETA2**t)
        store[name] = p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


# ---------------------------------------------------------------------------
# gradient engine
# ---------------------------------------------------------------------------

def fd_gradient(loss, store: ParamStore, names: tuple[str, ...], step: float) -> dict[str, np.ndarray]:
    """Central finite differences per coordinate; perturbs the live tensors
    and restores them exactly."""
    grads: dict[str, np.ndarray] = {}
    for name in names:
        arr = store[name]
        g = np.empty_like(arr)
        for ix in np.ndindex(arr.shape):
            keep = arr[ix]
            arr[ix] = keep + step
            f_plus = loss(store)
            arr[ix] = keep - step
            f_minus = loss(store)
            arr[ix] = keep
            g[ix] = (f_plus - f_minus) / (2.0 * step)
        grads[name] = g
    return grads


def spsa_gradient(
    loss, store: ParamStore, names: tuple[str, ...], step: float, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Simultaneous-perturbation estimate: one Rademacher direction, two
    forward passes."""
    theta = store.flatten(names)
    delta = rng.integers(0, 2, theta.size).astype(float) * 2.0 - 1.0
    store.assign_flat(names, theta + step * delta)
    f_plus = loss(store)
    store.assign_flat(names, theta - step * delta)
    f_minus = loss(store)
    store.assign_flat(names, theta)
    ghat = (f_plus - f_minus) / (2.0 * step) * delta
    grads: dict[str, np.ndarray] = {}
    pos = 0
    for name in names:
        shape = store[name].shape
        size = int(np.prod(shape)) if shape else 1
        grads[name] = ghat[pos : pos + size].reshape(shape).copy()
        pos += size
    return grads


def gradient(
    store: ParamStore,
    mol: MoleculeSpec,
    r: float,
    h: QubitHamiltonian,
    grad_mode: str = "fd-central",
    fd_step: float = 1e-4,
    max_branches: int | None = 4,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Energy and composite gradient at one (molecule, bond, Hamiltonian).

    Downstream parameters are differentiated analytically off a single cached
    forward pass; upstream parameters by `grad_mode`.
    """
    energy, cache = model.forward_cached(mol, r, h, store, max_branches)
    grads = model.downstream_gradient(mol, h, store, cache)

    def loss(s: ParamStore) -> float:
        return model.energy_forward(mol, r, h, s, max_branches)

    if grad_mode == "fd-central":
        grads.update(fd_gradient(loss, store, store.upstream_names, fd_step))
    elif grad_mode == "spsa":
        if rng is None:
            raise ValueError("spsa mode needs a random generator")
        grads.update(spsa_gradient(loss, store, store.upstream_names, fd_step, rng))
    else:
        raise ValueError(f"unknown grad_mode {grad_mode!r}")
    return energy, grads


# ---------------------------------------------------------------------------
# training loops
# ---------------------------------------------------------------------------

def _norm_over(grads: dict[str, np.ndarray], names) -> float:
    total = sum(float(np.sum(grads[n] ** 2)) for n in names if n in grads)
    return float(np.sqrt(total))


def _run_loop(
    mols: list[MoleculeSpec],
    config: TrainConfig,
    library: HamiltonianLibrary,
    store: ParamStore,
    adam: AdamState,
    record: RunRecord,
    bonds: tuple[float, ...] | None,
    bond_shift: float,
    start_iteration: int,
    on_iteration=None,
) -> None:
    up_names = store.upstream_names
    for it in range(start_iteration, config.iterations):
        rng_it = np.random.default_rng([config.seed, it])
        mol = mols[it % len(mols)]
        if bonds is not None:
            r = float(rng_it.choice(bonds))
        else:
            lo, hi = config.bond_range
            r = float(rng_it.uniform(lo, hi))
            while r <= 0.0:
                r = float(rng_it.uniform(lo, hi))
        r_h = snap_bond(r + bond_shift)
        h = library.hamiltonian(mol.name, r_h)
        t0 = time.perf_counter()
        energy, grads = gradient(
            store,
            mol,
            r,
            h,
            grad_mode=config.grad_mode,
            fd_step=config.fd_step,
            max_branches=config.max_branches,
            rng=rng_it,
        )
        adamw_step(store, grads, adam, config.learning_rate, config.weight_decay)
        wall = time.perf_counter() - t0
        record.append(
            IterRow(
                iteration=it,
                molecule=mol.name,
                r_sampled=r,
                r_hamiltonian=r_h,
                energy=energy,
                grad_norm_upstream=_norm_over(grads, up_names),
                grad_norm_downstream=_norm_over(grads, store.downstream_names),
                wall_time_s=wall,
            )
        )
        if on_iteration is not None:
            on_iteration(it, store, adam, record)
    record.final_checksum = store.checksum()


def train_plain(
    molecule: str,
    config: TrainConfig,
    library: HamiltonianLibrary,
    store: ParamStore | None = None,
    adam: AdamState | None = None,
    record: RunRecord | None = None,
    start_iteration: int = 0,
    on_iteration=None,
) -> tuple[ParamStore, RunRecord]:
    """Sequential training on one molecule with random bond sampling."""
    mol = library.molecule_spec(molecule)
    if store is None:
        store = init_store(
            [mol], config.d_emb, config.n_layers, config.kind, config.seed, config.init_scale
        )
    adam = adam if adam is not None else AdamState()
    record = record if record is not None else RunRecord()
    _run_loop(
        [mol], config, library, store, adam, record, None, 0.0, start_iteration, on_iteration
    )
    return store, record


def pretrain(
    config: TrainConfig,
    library: HamiltonianLibrary,
    store: ParamStore | None = None,
    adam: AdamState | None = None,
    record: RunRecord | None = None,
    start_iteration: int = 0,
    on_iteration=None,
) -> tuple[ParamStore, RunRecord]:
    """Round-robin training over config.molecules with per-molecule heads."""
    mols = [library.molecule_spec(name) for name in config.molecules]
    if store is None:
        store = init_store(
            mols, config.d_emb, config.n_layers, config.kind, config.seed, config.init_scale
        )
    adam = adam if adam is not None else AdamState()
    record = record if record is not None else RunRecord()
    _run_loop(
        mols, config, library, store, adam, record, None, 0.0, start_iteration, on_iteration
    )
    return store, record


def finetune(
    store: ParamStore,
    molecule: str,
    config: TrainConfig,
    library: HamiltonianLibrary,
    bond_shift: float = 0.0,
    adam: AdamState | None = None,
    record: RunRecord | None = None,
    start_iteration: int = 0,
    on_iteration=None,
) -> tuple[ParamStore, RunRecord]:
    """Few-shot fine-tuning: bonds are drawn only from config.fewshot_bonds."""
    if not config.fewshot_bonds:
        raise ValueError("fine-tuning needs a non-empty fewshot_bonds list")
    mol = library.molecule_spec(molecule)
    store = add_head(store, mol)
    adam = adam if adam is not None else AdamState()
    record = record if record is not None else RunRecord()
    _run_loop(
        [mol],
        config,
        library,
        store,
        adam,
        record,
        tuple(config.fewshot_bonds),
        bond_shift,
        start_iteration,
        on_iteration,
    )
    return store, record


# ---------------------------------------------------------------------------
# evaluation sweeps
# ---------------------------------------------------------------------------

def sweep_pec(
    store: ParamStore,
    molecule: str,
    grid,
    library: HamiltonianLibrary,
    max_branches: int | None = 4,
    bond_shift: float = 0.0,
) -> list[tuple[float, float, float, float]]:
    """Rows (r, E, E_exact, E - E_exact) over the bond grid.

    With bond_shift != 0 the model is tokenized at r but scored against the
    Hamiltonian (and exact energy) at r + bond_shift's nearest grid point.
    """
    mol = library.molecule_spec(molecule)
    rows = []
    for r in grid:
        r_h = snap_bond(float(r) + bond_shift)
        h = library.hamiltonian(mol.name, r_h)
        e = model.energy_forward(mol, float(r), h, store, max_branches)
        e_exact = library.exact_energy(mol.name, r_h)
        rows.append((float(r), e, e_exact, e - e_exact))
    return rows


def zero_shot_eval(
    store: ParamStore,
    molecule: str,
    grid,
    library: HamiltonianLibrary,
    max_branches: int | None = 4,
    bond_shift: float = 0.0,
) -> list[tuple[float, float, float, float]]:
    """PEC of a trained store with no gradient steps (alias of sweep_pec)."""
    return sweep_pec(store, molecule, grid, library, max_branches, bond_shift)


def mean_abs_delta(rows) -> float:
    """Mean |E - E_exact| over sweep rows (the PEC error metric)."""
    if not rows:
        raise ValueError("no sweep rows")
    return float(np.mean([abs(row[3]) for row in rows]))
