"""Run artifacts and dataset access: Hamiltonian file libraries, versioned
parameter checkpoints with a text sidecar, CSV emitters with fixed schemas,
run manifests, and JSON/TOML config loading.

Checkpoint layout (little endian, self-describing):
    line 1: b"qamol-ckpt v1\\n"
    line 2: one JSON header naming every tensor (key, shape) in payload order
            plus the store topology (kind, d_emb, n_layers, upstream names)
            and a free-form "meta" object
    rest:   the tensors' float64 C-order bytes, concatenated
"""
from __future__ import annotations

import csv
import hashlib
import json
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .molecules import MoleculeSpec, from_hamiltonian
from .params import ParamStore
from .pauli import QubitHamiltonian, ground_energy, parse_hamiltonian_file

__all__ = [
    "COMPARE_COLUMNS",
    "ORACLE_COLUMNS",
    "PEC_COLUMNS",
    "RECORD_COLUMNS",
    "CheckpointError",
    "HamiltonianLibrary",
    "load_checkpoint",
    "load_config",
    "read_csv",
    "save_checkpoint",
    "write_csv",
    "write_manifest",
]

MAGIC = b"qamol-ckpt v1\n"

RECORD_COLUMNS = (
    "iteration",
    "molecule",
    "r_sampled_bohr",
    "r_hamiltonian_bohr",
    "energy_hartree",
    "grad_norm_upstream",
    "grad_norm_downstream",
    "wall_time_s",
)
PEC_COLUMNS = ("r_bohr", "energy_hartree", "energy_exact_hartree", "delta_e_hartree")
ORACLE_COLUMNS = ("r_bohr", "energy_exact_hartree")
COMPARE_COLUMNS = ("model", "molecule", "trials", "mean_abs_delta_e_hartree")

_FILE_RE = re.compile(r"^(?P<mol>[A-Za-z0-9]+)_r(?P<r>\d+\.\d\d)\.json$")


class CheckpointError(ValueError):
    """Checkpoint file is missing, truncated, or from an unknown format."""


# ---------------------------------------------------------------------------
# dataset library
# ---------------------------------------------------------------------------

class HamiltonianLibrary:
    """Lazy, cached access to `<molecule>_r<value>.json` Hamiltonian files."""

    def __init__(self, roots: dict[str, Path]):
        self._roots = {name: Path(d) for name, d in roots.items()}
        self._ham_cache: dict[tuple[str, str], QubitHamiltonian] = {}
        self._exact_cache: dict[tuple[str, str], float] = {}
        self._mol_cache: dict[str, MoleculeSpec] = {}

    @classmethod
    def scan(cls, *dirs: str | Path) -> "HamiltonianLibrary":
        """Build a library from directories, inferring molecule names from
        file names."""
        roots: dict[str, Path] = {}
        for d in dirs:
            d = Path(d)
            if not d.is_dir():
                raise FileNotFoundError(f"dataset directory {d} does not exist")
            for f in sorted(d.glob("*.json")):
                m = _FILE_RE.match(f.name)
                if m:
                    roots.setdefault(m["mol"], d)
        if not roots:
            raise FileNotFoundError(
                "no dataset files matching <molecule>_r<value>.json under: "
                + ", ".join(str(d) for d in dirs)
            )
        return cls(roots)

    @property
    def molecules(self) -> tuple[str, ...]:
        return tuple(sorted(self._roots))

    def root(self, molecule: str) -> Path:
        if molecule not in self._roots:
            raise FileNotFoundError(f"no dataset directory for molecule {molecule!r}")
        return self._roots[molecule]

    def grid(self, molecule: str) -> tuple[float, ...]:
        """Sorted bond lengths for which files exist."""
        rs = []
        for f in self.root(molecule).glob(f"{molecule}_r*.json"):
            m = _FILE_RE.match(f.name)
            if m and m["mol"] == molecule:
                rs.append(float(m["r"]))
        return tuple(sorted(rs))

    def path(self, molecule: str, r: float) -> Path:
        return self.root(molecule) / f"{molecule}_r{r:.2f}.json"

    def hamiltonian(self, molecule: str, r: float) -> QubitHamiltonian:
        key = (molecule, f"{r:.2f}")
        if key not in self._ham_cache:
            path = self.path(molecule, r)
            if not path.is_file():
                raise FileNotFoundError(f"no dataset file for {molecule} at r={r:.2f}: {path}")
            h = parse_hamiltonian_file(path)
            if h.molecule != molecule:
                raise ValueError(f"{path} holds molecule {h.molecule!r}, expected {molecule!r}")
            self._ham_cache[key] = h
        return self._ham_cache[key]

    def exact_energy(self, molecule: str, r: float) -> float:
        """Ground energy of the stored Hamiltonian (cached per file)."""
        key = (molecule, f"{r:.2f}")
        if key not in self._exact_cache:
            self._exact_cache[key] = ground_energy(self.hamiltonian(molecule, r))
        return self._exact_cache[key]

    def molecule_spec(self, molecule: str) -> MoleculeSpec:
        if molecule not in self._mol_cache:
            grid = self.grid(molecule)
            if not grid:
                raise FileNotFoundError(f"no files for molecule {molecule!r}")
            self._mol_cache[molecule] = from_hamiltonian(self.hamiltonian(molecule, grid[0]))
        return self._mol_cache[molecule]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(
    path: str | Path,
    store: ParamStore,
    extra_tensors: dict[str, np.ndarray] | None = None,
    meta: dict | None = None,
) -> Path:
    """Write the store (plus optional named tensors, e.g. optimizer moments)
    and a human-readable `.txt` sidecar next to it."""
    path = Path(path)
    tensors: list[tuple[str, np.ndarray]] = [(f"param.{n}", store[n]) for n in store.names]
    for key in sorted(extra_tensors or {}):
        tensors.append((f"extra.{key}", np.asarray(extra_tensors[key], dtype=float)))
    header = {
        "version": 1,
        "kind": store.kind,
        "d_emb": store.d_emb,
        "n_layers": store.n_layers,
        "upstream": list(store.upstream_names),
        "tensors": [{"key": k, "shape": list(a.shape)} for k, a in tensors],
        "meta": meta or {},
    }
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    lines = [
        f"qamol checkpoint v1: kind={store.kind} d_emb={store.d_emb} "
        f"n_layers={store.n_layers} tensors={len(tensors)}",
        f"params checksum: {store.checksum()}",
    ]
    for key, arr in tensors:
        lines.append(f"{key}  shape={tuple(arr.shape)}  l2={np.linalg.norm(arr):.6e}")
    Path(str(path) + ".txt").write_text("\n".join(lines) + "\n")
    return path


def load_checkpoint(path: str | Path) -> tuple[ParamStore, dict[str, np.ndarray], dict]:
    """Inverse of save_checkpoint: (store, extra tensors, meta)."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    with open(path, "rb") as f:
        if f.readline() != MAGIC:
            raise CheckpointError(f"{path} is not a v1 checkpoint")
        try:
            header = json.loads(f.readline().decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: unreadable header ({exc})") from exc
        payload = f.read()
    want = sum(int(np.prod(t["shape"])) for t in header["tensors"]) * 8
    if len(payload) != want:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, header says {want}")
    pos = 0
    groups: dict[str, np.ndarray] = {}
    extra: dict[str, np.ndarray] = {}
    for t in header["tensors"]:
        shape = tuple(t["shape"])
        size = int(np.prod(shape)) * 8
        arr = np.frombuffer(payload[pos : pos + size], dtype="<f8").reshape(shape).copy()
        pos += size
        key = t["key"]
        if key.startswith("param."):
            groups[key[len("param."):]] = arr
        elif key.startswith("extra."):
            extra[key[len("extra."):]] = arr
        else:
            raise CheckpointError(f"{path}: unknown tensor key {key!r}")
    store = ParamStore(
        groups,
        tuple(header["upstream"]),
        header["kind"],
        header["d_emb"],
        header["n_layers"],
    )
    return store, extra, header.get("meta", {})


# ---------------------------------------------------------------------------
# CSV + manifest + config
# ---------------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | Path, columns: tuple[str, ...], rows) -> Path:
    """CSV with a mandatory header row; floats keep full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path} is empty, expected a header row")
    return rows[0], rows[1:]


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    dataset_dirs: dict[str, Path],
    seed: int,
    outputs: list[str],
) -> Path:
    """Reproducibility manifest, written before any compute starts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets = {}
    for name, d in sorted(dataset_dirs.items()):
        d = Path(d)
        files = {
            f.name: _sha256_file(f)
            for f in sorted(d.glob("*.json"))
            if _FILE_RE.match(f.name)
        }
        datasets[name] = {"dir": str(d), "files": files}
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "code_version": __version__,
        "python": sys.version.split()[0],
        "datasets": datasets,
        "outputs": outputs,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def load_config(path: str | Path) -> dict:
    """Config document as a dict; JSON or TOML by file suffix."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file {path} does not exist")
    suffix = path.suffix.lower()
    if suffix == ".json":
        with open(path) as f:
            doc = json.load(f)
    elif suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # pragma: no cover - pre-3.11 fallback
            import tomli as tomllib
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    else:
        raise ValueError(f"config {path}: expected a .json or .toml file")
    if not isinstance(doc, dict):
        raise ValueError(f"config {path}: top level must be a table/object")
    return doc
