"""Molecule definitions: geometry as a function of bond length, defaults, ids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import PROTON_NUMBER


@dataclass(frozen=True)
class MoleculeDef:
    name: str
    symbols: tuple[str, ...]
    geometry: Callable[[float], np.ndarray]  # r (Bohr) -> (n_atoms, 3) Bohr
    n_electrons: int
    default_basis: str
    default_mapping: str
    electron_ids: tuple[tuple[int, ...], ...]  # per nucleus, sequential per atom

    @property
    def charges(self) -> tuple[int, ...]:
        return tuple(PROTON_NUMBER[s] for s in self.symbols)


MOLECULES: dict[str, MoleculeDef] = {
    "H2": MoleculeDef(
        name="H2",
        symbols=("H", "H"),
        geometry=lambda r: np.array([[0.0, 0.0, -r / 2], [0.0, 0.0, r / 2]]),
        n_electrons=2,
        default_basis="6-31g",
        default_mapping="bravyi_kitaev",
        electron_ids=((1,), (1,)),
    ),
    "LiH": MoleculeDef(
        name="LiH",
        symbols=("Li", "H"),
        geometry=lambda r: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, r]]),
        n_electrons=4,
        default_basis="sto-3g",
        default_mapping="bravyi_kitaev",
        electron_ids=((1, 2, 3), (1,)),
    ),
    "BeH2": MoleculeDef(
        name="BeH2",
        symbols=("H", "Be", "H"),
        geometry=lambda r: np.array([[0.0, 0.0, -r], [0.0, 0.0, 0.0], [0.0, 0.0, r]]),
        n_electrons=6,
        default_basis="sto-3g",
        default_mapping="bravyi_kitaev",
        electron_ids=((1,), (1, 2, 3, 4), (1,)),
    ),
    "H4": MoleculeDef(
        name="H4",
        symbols=("H", "H", "H", "H"),
        geometry=lambda r: np.array([[0.0, 0.0, (i - 1.5) * r] for i in range(4)]),
        n_electrons=4,
        default_basis="sto-3g",
        default_mapping="jordan_wigner",
        electron_ids=((1,), (1,), (1,), (1,)),
    ),
}


def get_molecule(name: str) -> MoleculeDef:
    if name not in MOLECULES:
        raise ValueError(f"unknown molecule {name!r}; choose from {sorted(MOLECULES)}")
    return MOLECULES[name]
