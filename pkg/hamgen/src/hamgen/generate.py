"""Dataset generation and validation for mqt-ham-v1 JSON files."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import PROTON_NUMBER
from .fci import fci_ground_energy, hf_determinant
from .mapping import MAPPINGS, build_qubit_hamiltonian, occupation_to_bits
from .molecules import MoleculeDef, get_molecule
from .scf import ScfError, mo_integrals, run_rhf

log = logging.getLogger("hamgen")

SCHEMA = "mqt-ham-v1"


@dataclass
class GenSpec:
    molecule: str
    basis: str | None = None  # None -> molecule default
    mapping: str | None = None
    grid_lo: float = 0.05
    grid_hi: float = 5.0
    grid_step: float = 0.05
    out_dir: str | Path = "."

    def __post_init__(self):
        if self.grid_step <= 0:
            raise ValueError("grid step must be positive")
        if self.grid_lo <= 0 or self.grid_hi < self.grid_lo:
            raise ValueError(f"bad grid ({self.grid_lo}, {self.grid_hi})")

    def grid(self) -> list[float]:
        n = int(round((self.grid_hi - self.grid_lo) / self.grid_step)) + 1
        return [round(self.grid_lo + k * self.grid_step, 6) for k in range(n)]


def build_document(mol: MoleculeDef, r: float, basis: str, mapping: str) -> dict:
    """Full pipeline for one geometry; returns the mqt-ham-v1 document."""
    coords = mol.geometry(r)
    res = run_rhf(mol.symbols, coords, mol.charges, mol.n_electrons, basis)
    h_mo, eri_mo = mo_integrals(res)
    n_spatial = res.n_mo
    n_so = 2 * n_spatial

    terms = build_qubit_hamiltonian(h_mo, eri_mo, res.e_nuc, mapping)
    e_fci = fci_ground_energy(h_mo, eri_mo, mol.n_electrons, res.e_nuc)

    occ = [0] * n_so
    hf_mask = hf_determinant(n_spatial, mol.n_electrons)
    for j in range(n_so):
        occ[j] = (hf_mask >> j) & 1
    hf_bits = occupation_to_bits(occ, MAPPINGS[mapping](n_so))

    # stable term order: identity first, then lexicographic
    ident = "I" * n_so
    words = sorted(w for w in terms if w != ident)
    ordered = ([(ident, terms[ident])] if ident in terms else []) + [(w, terms[w]) for w in words]

    return {
        "schema": SCHEMA,
        "molecule": mol.name,
        "basis": basis,
        "mapping": mapping,
        "n_qubits": n_so,
        "bond_length_bohr": r,
        "hf_bitstring": hf_bits,
        "hf_energy_hartree": res.energy,
        "reference_energy_hartree": e_fci,
        "nuclei": [
            {
                "symbol": sym,
                "proton_number": PROTON_NUMBER[sym],
                "xyz_bohr": [float(c) for c in xyz],
            }
            for sym, xyz in zip(mol.symbols, coords)
        ],
        "electron_ids": [list(ids) for ids in mol.electron_ids],
        "terms": [{"coeff": c, "word": w} for w, c in ordered],
    }


def file_name(molecule: str, r: float) -> str:
    return f"{molecule}_r{r:.2f}.json"


def generate(spec: GenSpec) -> list[Path]:
    """Emit one JSON file per grid point; SCF failures skip the point with a log line."""
    mol = get_molecule(spec.molecule)
    basis = spec.basis or mol.default_basis
    mapping = spec.mapping or mol.default_mapping
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for r in spec.grid():
        try:
            doc = build_document(mol, r, basis, mapping)
        except ScfError as exc:
            log.warning("skipping %s at r=%.2f: %s", mol.name, r, exc)
            continue
        path = out_dir / file_name(mol.name, r)
        path.write_text(json.dumps(doc, indent=1))
        written.append(path)
        log.info("wrote %s (E_FCI=%.8f)", path.name, doc["reference_energy_hartree"])
    return written


def _hf_expectation(doc: dict) -> float:
    """<hf|H|hf> straight from the document: only flip-free words contribute."""
    bits = doc["hf_bitstring"]
    val = 0.0
    for term in doc["terms"]:
        word, coeff = term["word"], term["coeff"]
        sign = 1.0
        diagonal = True
        for ch, b in zip(word, bits):
            if ch in ("X", "Y"):
                diagonal = False
                break
            if ch == "Z" and b == "1":
                sign = -sign
        if diagonal:
            val += coeff * sign
    return val


def validate_file(path: Path) -> list[str]:
    """Schema, Hermiticity, HF-consistency, and FCI<=HF checks for one file."""
    problems = []
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        return [f"{path}: invalid JSON: {exc}"]

    required = [
        "schema", "molecule", "basis", "mapping", "n_qubits", "bond_length_bohr",
        "hf_bitstring", "nuclei", "electron_ids", "terms",
    ]
    for key in required:
        if key not in doc:
            problems.append(f"{path}: missing field {key}")
    if problems:
        return problems
    if doc["schema"] != SCHEMA:
        problems.append(f"{path}: schema {doc['schema']!r} != {SCHEMA!r}")
    n_q = doc["n_qubits"]
    if len(doc["hf_bitstring"]) != n_q or set(doc["hf_bitstring"]) - {"0", "1"}:
        problems.append(f"{path}: bad hf_bitstring")
    for i, term in enumerate(doc["terms"]):
        if len(term["word"]) != n_q or set(term["word"]) - set("IXYZ"):
            problems.append(f"{path}: terms[{i}] bad word")
        if not isinstance(term["coeff"], (int, float)):
            problems.append(f"{path}: terms[{i}] non-real coefficient (Hermiticity)")
    if problems:
        return problems

    hf_e = doc.get("hf_energy_hartree")
    if hf_e is not None:
        got = _hf_expectation(doc)
        if abs(got - hf_e) > 1e-8:
            problems.append(f"{path}: <hf|H|hf>={got:.10f} differs from hf_energy {hf_e:.10f}")
    ref = doc.get("reference_energy_hartree")
    if ref is not None and hf_e is not None and ref > hf_e + 1e-12:
        problems.append(f"{path}: FCI {ref:.10f} above HF {hf_e:.10f}")
    return problems


def validate(dataset_dir: str | Path) -> list[str]:
    paths = sorted(Path(dataset_dir).glob("*.json"))
    if not paths:
        return [f"{dataset_dir}: no dataset files"]
    problems = []
    for p in paths:
        problems.extend(validate_file(p))
    return problems
