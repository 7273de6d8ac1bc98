"""Gaussian basis sets: STO-3G (H, Li, Be) and 6-31G (H).

STO-3G exponents come from the universal STO-3G fit scaled by zeta**2 per
shell; the resulting primitives match the distributed tables.  Contraction
coefficients are given for unit-normalized primitives; contracted functions
are renormalized exactly at build time (see integrals.normalize_basis).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# universal STO-3G expansion of a zeta=1 Slater function
_STO3G_1S_EXP = np.array([2.227660584, 0.405771156, 0.109818])
_STO3G_1S_COEF = np.array([0.1543289673, 0.5353281423, 0.4446345422])
_STO3G_2SP_EXP = np.array([0.994203, 0.231031, 0.0751386])
_STO3G_2S_COEF = np.array([-0.09996722919, 0.3995128261, 0.7001154689])
_STO3G_2P_COEF = np.array([0.1559162750, 0.6076837186, 0.3919573931])

# Slater zetas per element: (zeta_1s, zeta_2sp or None)
_STO3G_ZETA = {
    "H": (1.24, None),
    "Li": (2.69, 0.80),
    "Be": (3.68, 1.15),
}

# 6-31G hydrogen: 3-primitive inner s + single-primitive outer s
_631G_H_INNER_EXP = np.array([18.7311370, 2.8253937, 0.6401217])
_631G_H_INNER_COEF = np.array([0.03349460, 0.23472695, 0.81375733])
_631G_H_OUTER_EXP = 0.1612778

PROTON_NUMBER = {"H": 1, "Li": 3, "Be": 4}


@dataclass
class ContractedGaussian:
    """Fixed-center contracted Cartesian Gaussian sum_i c_i x^l y^m z^n e^{-a_i r^2}."""

    center: np.ndarray  # (3,)
    lmn: tuple[int, int, int]
    exps: np.ndarray
    coefs: np.ndarray  # contraction coefficients times primitive norms


def _prim_norm(alpha: float, lmn: tuple[int, int, int]) -> float:
    """Normalization constant of one Cartesian Gaussian primitive."""
    l, m, n = lmn
    fact2 = lambda k: 1.0 if k <= 0 else float(np.prod(np.arange(k, 0, -2)))
    num = (2 * alpha / np.pi) ** 0.75 * (4 * alpha) ** ((l + m + n) / 2)
    den = np.sqrt(fact2(2 * l - 1) * fact2(2 * m - 1) * fact2(2 * n - 1))
    return num / den


def _make_cgf(center, lmn, exps, coefs) -> ContractedGaussian:
    exps = np.asarray(exps, dtype=float)
    coefs = np.asarray(coefs, dtype=float) * np.array([_prim_norm(a, lmn) for a in exps])
    return ContractedGaussian(np.asarray(center, dtype=float), tuple(lmn), exps, coefs)


def atom_basis(symbol: str, center, basis: str) -> list[ContractedGaussian]:
    """Contracted functions of one atom, ordered s before p (x, y, z)."""
    basis = basis.lower()
    if basis == "sto-3g":
        if symbol not in _STO3G_ZETA:
            raise ValueError(f"no STO-3G parameters for {symbol}")
        z1, z2 = _STO3G_ZETA[symbol]
        out = [_make_cgf(center, (0, 0, 0), _STO3G_1S_EXP * z1**2, _STO3G_1S_COEF)]
        if z2 is not None:
            sp_exps = _STO3G_2SP_EXP * z2**2
            out.append(_make_cgf(center, (0, 0, 0), sp_exps, _STO3G_2S_COEF))
            for lmn in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                out.append(_make_cgf(center, lmn, sp_exps, _STO3G_2P_COEF))
        return out
    if basis == "6-31g":
        if symbol != "H":
            raise ValueError(f"6-31G implemented for H only, got {symbol}")
        return [
            _make_cgf(center, (0, 0, 0), _631G_H_INNER_EXP, _631G_H_INNER_COEF),
            _make_cgf(center, (0, 0, 0), [_631G_H_OUTER_EXP], [1.0]),
        ]
    raise ValueError(f"unknown basis {basis!r}")


def build_basis(symbols: list[str], coords: np.ndarray, basis: str) -> list[ContractedGaussian]:
    funcs = []
    for sym, xyz in zip(symbols, coords):
        funcs.extend(atom_basis(sym, xyz, basis))
    return funcs
