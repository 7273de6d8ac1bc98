"""Fermion-to-qubit mappings (Jordan-Wigner and Bravyi-Kitaev) over Pauli words.

Words use the convention of the consumer package: qubit 0 is the leftmost
character.  Spin orbital j maps to qubit j (interleaved spin ordering).
The Bravyi-Kitaev transform is built from a Fenwick-tree segmentation;
each node's subtree covers a contiguous orbital interval ending at itself,
which yields the update/parity/flip sets directly.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "word_multiply",
    "MajoranaSet",
    "jordan_wigner_majoranas",
    "bravyi_kitaev_majoranas",
    "build_qubit_hamiltonian",
    "occupation_to_bits",
]

# single-qubit products: (left, right) -> (phase, result)
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def word_multiply(w1: str, w2: str) -> tuple[complex, str]:
    """(phase, word) with operator w1·w2; qubit-wise products with i-phases."""
    phase = 1 + 0j
    chars = []
    for c1, c2 in zip(w1, w2):
        ph, c = _MUL[(c1, c2)]
        phase *= ph
        chars.append(c)
    return phase, "".join(chars)


def _word_from_sets(n: int, x_set=(), y_set=(), z_set=()) -> str:
    chars = ["I"] * n
    for q in x_set:
        chars[q] = "X"
    for q in y_set:
        chars[q] = "Y"
    for q in z_set:
        chars[q] = "Z"
    return "".join(chars)


class MajoranaSet:
    """Pauli words for the majorana pair of every fermionic mode.

    even[j] maps a_j + a†_j; odd[j] maps i(a†_j − a_j); so
    a†_j = (even[j] − i·odd[j]) / 2 and a_j = (even[j] + i·odd[j]) / 2.
    occupation_intervals[j] lists the orbitals whose occupations XOR into
    qubit j's computational-basis value.
    """

    def __init__(self, even: list[str], odd: list[str], occupation_sets: list[list[int]]):
        self.even = even
        self.odd = odd
        self.occupation_sets = occupation_sets
        self.n = len(even)


def jordan_wigner_majoranas(n: int) -> MajoranaSet:
    even, odd = [], []
    for j in range(n):
        z_prefix = range(j)
        even.append(_word_from_sets(n, x_set=[j], z_set=z_prefix))
        odd.append(_word_from_sets(n, y_set=[j], z_set=z_prefix))
    return MajoranaSet(even, odd, [[j] for j in range(n)])


def _fenwick_intervals(n: int) -> tuple[list, list]:
    """parent[i] and subtree interval start[i] of the Fenwick segmentation."""
    parent: list = [None] * n
    start: list = [None] * n
    start[n - 1] = 0

    def rec(left: int, right: int, up: int) -> None:
        if left >= right:
            return
        pivot = (left + right) >> 1
        parent[pivot] = up
        start[pivot] = left
        rec(left, pivot, pivot)
        rec(pivot + 1, right, up)

    rec(0, n - 1, n - 1)
    return parent, start


def bravyi_kitaev_majoranas(n: int) -> MajoranaSet:
    parent, start = _fenwick_intervals(n)

    def update_set(j: int) -> list[int]:
        out = []
        while parent[j] is not None:
            j = parent[j]
            out.append(j)
        return out

    def parity_set(j: int) -> list[int]:
        out = []
        x = j - 1
        while x >= 0:
            out.append(x)
            x = start[x] - 1
        return out

    children = [[] for _ in range(n)]
    for i, p in enumerate(parent):
        if p is not None:
            children[p].append(i)

    even, odd, occ_sets = [], [], []
    for j in range(n):
        u = update_set(j)
        p = parity_set(j)
        remainder = [q for q in p if q not in children[j]]
        even.append(_word_from_sets(n, x_set=u + [j], z_set=p))
        odd.append(_word_from_sets(n, y_set=[j], x_set=u, z_set=remainder))
        occ_sets.append(list(range(start[j], j + 1)))
    return MajoranaSet(even, odd, occ_sets)


MAPPINGS = {
    "jordan_wigner": jordan_wigner_majoranas,
    "bravyi_kitaev": bravyi_kitaev_majoranas,
}


def occupation_to_bits(occ: list[int], majo: MajoranaSet) -> str:
    """Computational-basis bitstring encoding an occupation-number vector."""
    bits = []
    for j in range(majo.n):
        val = 0
        for orb in majo.occupation_sets[j]:
            val ^= occ[orb]
        bits.append(str(val))
    return "".join(bits)


def _ladder(majo: MajoranaSet, j: int, dagger: bool) -> list[tuple[complex, str]]:
    sign = -1j if dagger else 1j
    return [(0.5, majo.even[j]), (0.5 * sign, majo.odd[j])]


def _accumulate_product(acc: dict, coeff: complex, factors: list[list[tuple[complex, str]]]) -> None:
    """acc += coeff * Π factors, expanding sums of single Pauli words."""
    terms = [(coeff, None)]
    for factor in factors:
        new_terms = []
        for c0, w0 in terms:
            for c1, w1 in factor:
                if w0 is None:
                    new_terms.append((c0 * c1, w1))
                else:
                    ph, w = word_multiply(w0, w1)
                    new_terms.append((c0 * c1 * ph, w))
        terms = new_terms
    for c, w in terms:
        acc[w] = acc.get(w, 0j) + c


def build_qubit_hamiltonian(
    h_mo: np.ndarray, eri_mo: np.ndarray, e_nuc: float, mapping: str, screen: float = 1e-12
) -> dict[str, float]:
    """Map the second-quantized Hamiltonian onto Pauli words.

    H = E_nuc + Σ_pq h_pq a†_pσ a_qσ + ½ Σ_pqrs (pq|rs) a†_pσ a†_rτ a_sτ a_qσ
    over interleaved spin orbitals; nuclear repulsion folds into the
    identity word.  Coefficients must come out real (imaginary residue
    below 1e-10 is asserted, then dropped).
    """
    if mapping not in MAPPINGS:
        raise ValueError(f"unknown mapping {mapping!r}; choose from {sorted(MAPPINGS)}")
    n_spatial = h_mo.shape[0]
    n_so = 2 * n_spatial
    majo = MAPPINGS[mapping](n_so)
    acc: dict[str, complex] = {"I" * n_so: complex(e_nuc)}

    for p in range(n_spatial):
        for q in range(n_spatial):
            if abs(h_mo[p, q]) < screen:
                continue
            for sigma in (0, 1):
                _accumulate_product(
                    acc,
                    complex(h_mo[p, q]),
                    [_ladder(majo, 2 * p + sigma, True), _ladder(majo, 2 * q + sigma, False)],
                )

    for p in range(n_spatial):
        for q in range(n_spatial):
            for r in range(n_spatial):
                for s in range(n_spatial):
                    val = eri_mo[p, q, r, s]
                    if abs(val) < screen:
                        continue
                    for sigma in (0, 1):
                        for tau in (0, 1):
                            pp, rr = 2 * p + sigma, 2 * r + tau
                            ss, qq = 2 * s + tau, 2 * q + sigma
                            if pp == rr or ss == qq:
                                continue  # a†a† or aa on the same mode vanishes
                            _accumulate_product(
                                acc,
                                0.5 * complex(val),
                                [
                                    _ladder(majo, pp, True),
                                    _ladder(majo, rr, True),
                                    _ladder(majo, ss, False),
                                    _ladder(majo, qq, False),
                                ],
                            )

    out: dict[str, float] = {}
    for word, coeff in acc.items():
        if abs(coeff.imag) > 1e-10:
            raise ValueError(f"non-real Pauli coefficient {coeff} on {word}")
        if abs(coeff.real) >= screen:
            out[word] = float(coeff.real)
    return out
