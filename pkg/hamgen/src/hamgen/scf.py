"""Restricted Hartree-Fock with DIIS acceleration and canonical orthogonalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import build_basis
from .integrals import (
    clear_caches,
    eri_tensor,
    kinetic_matrix,
    normalize_basis,
    nuclear_matrix,
    nuclear_repulsion,
    overlap_matrix,
)


class ScfError(RuntimeError):
    pass


@dataclass
class ScfResult:
    energy: float  # total RHF energy incl. nuclear repulsion (Hartree)
    e_nuc: float
    mo_coeff: np.ndarray  # (n_ao, n_mo) columns sorted by orbital energy
    mo_energy: np.ndarray
    hcore: np.ndarray
    eri: np.ndarray  # AO basis, chemists' notation
    n_electrons: int
    converged: bool

    @property
    def n_mo(self) -> int:
        return self.mo_coeff.shape[1]


def integrals_for(symbols, coords, charges, basis):
    funcs = normalize_basis(build_basis(symbols, coords, basis))
    s = overlap_matrix(funcs)
    h = kinetic_matrix(funcs) + nuclear_matrix(funcs, charges, coords)
    eri = eri_tensor(funcs)
    clear_caches()
    return s, h, eri


def run_rhf(
    symbols,
    coords,
    charges,
    n_electrons: int,
    basis: str,
    max_cycles: int = 200,
    conv_tol: float = 1e-10,
    lindep_tol: float = 1e-7,
) -> ScfResult:
    """Closed-shell SCF; raises ScfError if the cycle cap is hit."""
    if n_electrons % 2:
        raise ScfError(f"restricted HF needs an even electron count, got {n_electrons}")
    n_occ = n_electrons // 2
    coords = np.asarray(coords, dtype=float)
    s, hcore, eri = integrals_for(symbols, coords, charges, basis)
    e_nuc = nuclear_repulsion(charges, coords)

    # canonical orthogonalization, dropping near-dependent combinations
    sval, svec = np.linalg.eigh(s)
    keep = sval > lindep_tol
    x = svec[:, keep] / np.sqrt(sval[keep])
    if keep.sum() < n_occ:
        raise ScfError("overlap basis collapsed below the occupied space")

    def density(fock):
        e_mo, c_ortho = np.linalg.eigh(x.T @ fock @ x)
        c = x @ c_ortho
        occ = c[:, :n_occ]
        return occ @ occ.T, c, e_mo

    dm, c, e_mo = density(hcore)
    energy = 0.0
    err_vecs: list[np.ndarray] = []
    focks: list[np.ndarray] = []
    converged = False
    for _ in range(max_cycles):
        j = np.einsum("pqrs,rs->pq", eri, dm)
        kx = np.einsum("prqs,rs->pq", eri, dm)
        fock = hcore + 2.0 * j - kx
        new_energy = float(np.sum(dm * (hcore + fock))) + e_nuc

        # DIIS on the orthonormalized commutator FDS - SDF
        err = x.T @ (fock @ dm @ s - s @ dm @ fock) @ x
        err_vecs.append(err.ravel())
        focks.append(fock)
        if len(focks) > 8:
            err_vecs.pop(0)
            focks.pop(0)
        if len(focks) > 1:
            m = len(focks)
            bmat = -np.ones((m + 1, m + 1))
            bmat[m, m] = 0.0
            for i in range(m):
                for jj in range(i, m):
                    bmat[i, jj] = bmat[jj, i] = float(err_vecs[i] @ err_vecs[jj])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                coeffs = np.linalg.solve(bmat, rhs)[:m]
                fock = sum(ci * fi for ci, fi in zip(coeffs, focks))
            except np.linalg.LinAlgError:
                pass  # singular DIIS system: fall back to the plain Fock

        max_err = float(np.max(np.abs(err)))
        if abs(new_energy - energy) < conv_tol and max_err < 1e-7:
            energy = new_energy
            converged = True
            break
        energy = new_energy
        dm, c, e_mo = density(fock)

    if not converged:
        raise ScfError(f"SCF did not converge in {max_cycles} cycles (last E={energy:.10f})")
    return ScfResult(
        energy=energy,
        e_nuc=e_nuc,
        mo_coeff=c,
        mo_energy=e_mo,
        hcore=hcore,
        eri=eri,
        n_electrons=n_electrons,
        converged=converged,
    )


def mo_integrals(res: ScfResult) -> tuple[np.ndarray, np.ndarray]:
    """One-electron h_pq and chemists' (pq|rs) in the MO basis."""
    c = res.mo_coeff
    h = c.T @ res.hcore @ c
    eri = np.einsum("pqrs,pi,qj,rk,sl->ijkl", res.eri, c, c, c, c, optimize=True)
    return h, eri
