"""Molecule descriptions for the model: per-species geometry as a function of
bond length, proton numbers, and electron orbital identifiers grouped by atom.

All coordinates are in Bohr.  Supported geometries are one-parameter families:
H2 and LiH are diatomics, BeH2 is linear and symmetric, H4 is a uniformly
spaced linear chain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import QubitHamiltonian

__all__ = [
    "ATOMIC_NUMBER",
    "DEFAULT_ELECTRON_IDS",
    "MoleculeSpec",
    "from_hamiltonian",
    "geometry",
]

ATOMIC_NUMBER = {"H": 1, "Li": 3, "Be": 4}

# Orbital identifiers per atom, in nucleus order; sequential ids per atom so a
# shared embedding table can serve every species.
DEFAULT_ELECTRON_IDS = {
    "H2": ((1,), (1,)),
    "LiH": ((1, 2, 3), (1,)),
    "BeH2": ((1,), (1, 2, 3, 4), (1,)),
    "H4": ((1,), (1,), (1,), (1,)),
}

_SYMBOLS = {
    "H2": ("H", "H"),
    "LiH": ("Li", "H"),
    "BeH2": ("H", "Be", "H"),
    "H4": ("H", "H", "H", "H"),
}

R_MAX = 5.0  # geometry families are defined on (0, R_MAX] Bohr


def geometry(name: str, r: float) -> np.ndarray:
    """Nuclear coordinates (m, 3) for molecule `name` at bond length r."""
    if not 0.0 < r <= R_MAX:
        raise ValueError(f"bond length {r} outside (0, {R_MAX}] Bohr")
    if name == "H2":
        z = [-r / 2, r / 2]
    elif name == "LiH":
        z = [0.0, r]
    elif name == "BeH2":
        z = [-r, 0.0, r]
    elif name == "H4":
        z = [(i - 1.5) * r for i in range(4)]
    else:
        raise ValueError(f"unknown molecule {name!r}")
    out = np.zeros((len(z), 3))
    out[:, 2] = z
    return out


@dataclass(frozen=True)
class MoleculeSpec:
    """Static description of one molecule instance used by the model.

    electron_groups lists orbital identifiers per nucleus, in nucleus order;
    the flattened view plus each electron's atom index are derived properties.
    """

    name: str
    symbols: tuple[str, ...]
    electron_groups: tuple[tuple[int, ...], ...]
    n_q: int
    basis: str = ""
    mapping: str = ""

    def __post_init__(self):
        if len(self.symbols) != len(self.electron_groups):
            raise ValueError(
                f"{len(self.symbols)} nuclei but {len(self.electron_groups)} electron groups"
            )
        for s in self.symbols:
            if s not in ATOMIC_NUMBER:
                raise ValueError(f"unknown element symbol {s!r}")
        if self.name not in _SYMBOLS:
            raise ValueError(f"no geometry family for molecule {self.name!r}")
        if self.n <= 0:
            raise ValueError("molecule has no electrons")
        if self.n_q <= 0:
            raise ValueError(f"invalid qubit count {self.n_q}")

    @property
    def m(self) -> int:
        return len(self.symbols)

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.electron_groups)

    @property
    def electron_ids(self) -> tuple[int, ...]:
        """Flat orbital identifiers, electrons ordered by nucleus."""
        return tuple(i for g in self.electron_groups for i in g)

    @property
    def electron_atom(self) -> tuple[int, ...]:
        """Index of the nucleus each electron belongs to."""
        return tuple(j for j, g in enumerate(self.electron_groups) for _ in g)

    @property
    def proton_numbers(self) -> np.ndarray:
        return np.array([ATOMIC_NUMBER[s] for s in self.symbols], dtype=float)

    def positions(self, r: float) -> np.ndarray:
        """Nuclear coordinates (m, 3) at bond length r."""
        return geometry(self.name, r)


def from_hamiltonian(h: QubitHamiltonian) -> MoleculeSpec:
    """Build the MoleculeSpec matching a dataset Hamiltonian's metadata."""
    if h.nuclei:
        symbols = tuple(nuc.symbol for nuc in h.nuclei)
    else:
        symbols = _SYMBOLS.get(h.molecule)
        if symbols is None:
            raise ValueError(f"dataset file for {h.molecule!r} lists no nuclei")
    groups = h.electron_ids or DEFAULT_ELECTRON_IDS.get(h.molecule)
    if groups is None:
        raise ValueError(f"no electron identifiers known for {h.molecule!r}")
    return MoleculeSpec(
        name=h.molecule,
        symbols=symbols,
        electron_groups=tuple(tuple(g) for g in groups),
        n_q=h.n_qubits,
        basis=h.basis,
        mapping=h.mapping,
    )
