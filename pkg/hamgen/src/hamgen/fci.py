"""Determinant full CI in the S_z = 0 sector via Slater-Condon rules.

This is the reference-energy route, independent of the qubit-operator
route in `mapping`: the two are cross-checked in tests and during
dataset validation.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

__all__ = ["spin_orbital_integrals", "determinants", "fci_matrix", "fci_ground_energy", "hf_determinant"]


def spin_orbital_integrals(h_mo: np.ndarray, eri_mo: np.ndarray):
    """Interleaved spin-orbital h1[P,Q] and antisymmetrized g[P,Q,R,S] = <PQ||RS>.

    Spin orbital 2p is spatial p with alpha spin, 2p+1 the beta partner.
    """
    n_so = 2 * h_mo.shape[0]
    spat = np.arange(n_so) // 2
    spin = np.arange(n_so) % 2
    same = spin[:, None] == spin[None, :]
    h1 = h_mo[spat[:, None], spat[None, :]] * same

    pp, qq, rr, ss = np.meshgrid(np.arange(n_so), np.arange(n_so), np.arange(n_so), np.arange(n_so), indexing="ij")
    # <PQ|RS> = (p r | q s), spins matching within each bra-ket pair
    coul = eri_mo[spat[pp], spat[rr], spat[qq], spat[ss]] * same[pp, rr] * same[qq, ss]
    g = coul - np.swapaxes(coul, 2, 3)
    return h1, g


def determinants(n_spatial: int, n_electrons: int) -> list[int]:
    """All S_z=0 determinants as bitmasks over interleaved spin orbitals."""
    if n_electrons % 2:
        raise ValueError("S_z=0 enumeration needs an even electron count")
    n_half = n_electrons // 2
    masks = []
    for alpha in combinations(range(n_spatial), n_half):
        a_mask = sum(1 << (2 * p) for p in alpha)
        for beta in combinations(range(n_spatial), n_half):
            masks.append(a_mask + sum(1 << (2 * p + 1) for p in beta))
    return masks


def hf_determinant(n_spatial: int, n_electrons: int) -> int:
    """Aufbau filling: lowest n/2 spatial orbitals doubly occupied."""
    return sum(0b11 << (2 * p) for p in range(n_electrons // 2))


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _phase_single(mask: int, p: int, q: int) -> float:
    """Sign of moving an electron p -> q on mask (p occupied, q empty)."""
    lo, hi = (p, q) if p < q else (q, p)
    between = mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    return -1.0 if between.bit_count() & 1 else 1.0


def _element(m1: int, m2: int, h1: np.ndarray, g: np.ndarray) -> float:
    diff = m1 ^ m2
    degree = diff.bit_count() // 2
    if degree > 2:
        return 0.0
    if degree == 0:
        occ = _bits(m1)
        val = sum(h1[i, i] for i in occ)
        for i in occ:
            for j in occ:
                val += 0.5 * g[i, j, i, j]
        return float(val)
    if degree == 1:
        p = _bits(m1 & diff)[0]
        q = _bits(m2 & diff)[0]
        val = h1[p, q] + sum(g[p, i, q, i] for i in _bits(m1 & m2))
        return float(_phase_single(m1, p, q) * val)
    p1, p2 = _bits(m1 & diff)
    q1, q2 = _bits(m2 & diff)
    sign = _phase_single(m1, p1, q1)
    sign *= _phase_single(m1 ^ (1 << p1) ^ (1 << q1), p2, q2)
    return float(sign * g[p1, p2, q1, q2])


def fci_matrix(h_mo: np.ndarray, eri_mo: np.ndarray, n_electrons: int) -> tuple[np.ndarray, list[int]]:
    h1, g = spin_orbital_integrals(h_mo, eri_mo)
    dets = determinants(h_mo.shape[0], n_electrons)
    n = len(dets)
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            val = _element(dets[i], dets[j], h1, g)
            mat[i, j] = mat[j, i] = val
    return mat, dets


def fci_ground_energy(h_mo: np.ndarray, eri_mo: np.ndarray, n_electrons: int, e_nuc: float) -> float:
    mat, _ = fci_matrix(h_mo, eri_mo, n_electrons)
    return float(np.linalg.eigvalsh(mat)[0]) + e_nuc


def determinant_energy(mask: int, h_mo: np.ndarray, eri_mo: np.ndarray, e_nuc: float) -> float:
    """Energy expectation of a single determinant (diagonal Slater-Condon)."""
    h1, g = spin_orbital_integrals(h_mo, eri_mo)
    return _element(mask, mask, h1, g) + e_nuc
