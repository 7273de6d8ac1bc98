"""Molecular integrals over contracted Cartesian Gaussians (McMurchie-Davidson).

Hermite expansion coefficients E and Hermite Coulomb terms R are built
recursively; the Boys function uses the regularized lower incomplete gamma.
Supports arbitrary angular momentum; only s and p appear in the shipped
basis sets.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gamma, gammainc

from .basis import ContractedGaussian


def boys(n: int, x: float) -> float:
    """F_n(x) = ∫_0^1 t^{2n} e^{-x t^2} dt."""
    if x < 1e-12:
        return 1.0 / (2 * n + 1) - x / (2 * n + 3)
    a = n + 0.5
    return gamma(a) * gammainc(a, x) / (2.0 * x**a)


@lru_cache(maxsize=200_000)
def hermite_e(i: int, j: int, t: int, qx: float, a: float, b: float) -> float:
    """Hermite expansion coefficient E_t^{ij} for a 1-D Gaussian product.

    qx = Ax - Bx; a, b are the primitive exponents.
    """
    p = a + b
    mu = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return float(np.exp(-mu * qx * qx))
    if j == 0:
        # decrement i
        return (
            hermite_e(i - 1, j, t - 1, qx, a, b) / (2 * p)
            - (mu * qx / a) * hermite_e(i - 1, j, t, qx, a, b)
            + (t + 1) * hermite_e(i - 1, j, t + 1, qx, a, b)
        )
    # decrement j
    return (
        hermite_e(i, j - 1, t - 1, qx, a, b) / (2 * p)
        + (mu * qx / b) * hermite_e(i, j - 1, t, qx, a, b)
        + (t + 1) * hermite_e(i, j - 1, t + 1, qx, a, b)
    )


def _hermite_r(t: int, u: int, v: int, n: int, p: float, pc: np.ndarray, cache: dict) -> float:
    """Hermite Coulomb integral R^n_{tuv} about composite center distance pc."""
    key = (t, u, v, n)
    if key in cache:
        return cache[key]
    if t < 0 or u < 0 or v < 0:
        return 0.0
    if t == u == v == 0:
        val = (-2.0 * p) ** n * boys(n, p * float(pc @ pc))
    elif t > 0:
        val = (t - 1) * _hermite_r(t - 2, u, v, n + 1, p, pc, cache) + pc[0] * _hermite_r(
            t - 1, u, v, n + 1, p, pc, cache
        )
    elif u > 0:
        val = (u - 1) * _hermite_r(t, u - 2, v, n + 1, p, pc, cache) + pc[1] * _hermite_r(
            t, u - 1, v, n + 1, p, pc, cache
        )
    else:
        val = (v - 1) * _hermite_r(t, u, v - 2, n + 1, p, pc, cache) + pc[2] * _hermite_r(
            t, u, v - 1, n + 1, p, pc, cache
        )
    cache[key] = val
    return val


def _prim_overlap(a, lmn1, ra, b, lmn2, rb) -> float:
    p = a + b
    s = (np.pi / p) ** 1.5
    for ax in range(3):
        s *= hermite_e(lmn1[ax], lmn2[ax], 0, ra[ax] - rb[ax], a, b)
    return s


def _prim_kinetic(a, lmn1, ra, b, lmn2, rb) -> float:
    l2, m2, n2 = lmn2

    def s(dl, dm, dn):
        lmn = (l2 + dl, m2 + dm, n2 + dn)
        if min(lmn) < 0:
            return 0.0
        return _prim_overlap(a, lmn1, ra, b, lmn, rb)

    term0 = b * (2 * (l2 + m2 + n2) + 3) * s(0, 0, 0)
    term1 = -2 * b**2 * (s(2, 0, 0) + s(0, 2, 0) + s(0, 0, 2))
    term2 = -0.5 * (
        l2 * (l2 - 1) * s(-2, 0, 0) + m2 * (m2 - 1) * s(0, -2, 0) + n2 * (n2 - 1) * s(0, 0, -2)
    )
    return term0 + term1 + term2


def _prim_nuclear(a, lmn1, ra, b, lmn2, rb, rc) -> float:
    p = a + b
    centroid = (a * ra + b * rb) / p
    pc = centroid - rc
    cache: dict = {}
    val = 0.0
    for t in range(lmn1[0] + lmn2[0] + 1):
        et = hermite_e(lmn1[0], lmn2[0], t, ra[0] - rb[0], a, b)
        if et == 0.0:
            continue
        for u in range(lmn1[1] + lmn2[1] + 1):
            eu = hermite_e(lmn1[1], lmn2[1], u, ra[1] - rb[1], a, b)
            if eu == 0.0:
                continue
            for v in range(lmn1[2] + lmn2[2] + 1):
                ev = hermite_e(lmn1[2], lmn2[2], v, ra[2] - rb[2], a, b)
                if ev == 0.0:
                    continue
                val += et * eu * ev * _hermite_r(t, u, v, 0, p, pc, cache)
    return 2.0 * np.pi / p * val


def _prim_eri(a, lmn1, ra, b, lmn2, rb, c, lmn3, rc, d, lmn4, rd) -> float:
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq = rp - rq
    cache: dict = {}

    e1 = [
        [hermite_e(lmn1[ax], lmn2[ax], t, ra[ax] - rb[ax], a, b) for t in range(lmn1[ax] + lmn2[ax] + 1)]
        for ax in range(3)
    ]
    e2 = [
        [hermite_e(lmn3[ax], lmn4[ax], t, rc[ax] - rd[ax], c, d) for t in range(lmn3[ax] + lmn4[ax] + 1)]
        for ax in range(3)
    ]
    val = 0.0
    for t, et in enumerate(e1[0]):
        if et == 0.0:
            continue
        for u, eu in enumerate(e1[1]):
            if eu == 0.0:
                continue
            for v, ev in enumerate(e1[2]):
                if ev == 0.0:
                    continue
                inner = 0.0
                for tau, etau in enumerate(e2[0]):
                    if etau == 0.0:
                        continue
                    for nu, enu in enumerate(e2[1]):
                        if enu == 0.0:
                            continue
                        for phi, ephi in enumerate(e2[2]):
                            if ephi == 0.0:
                                continue
                            inner += (
                                etau
                                * enu
                                * ephi
                                * (-1.0) ** (tau + nu + phi)
                                * _hermite_r(t + tau, u + nu, v + phi, 0, alpha, pq, cache)
                            )
                val += et * eu * ev * inner
    return 2.0 * np.pi**2.5 / (p * q * np.sqrt(p + q)) * val


def _contract2(f, ga: ContractedGaussian, gb: ContractedGaussian, *extra) -> float:
    out = 0.0
    for a, ca in zip(ga.exps, ga.coefs):
        for b, cb in zip(gb.exps, gb.coefs):
            out += ca * cb * f(a, ga.lmn, ga.center, b, gb.lmn, gb.center, *extra)
    return out


def overlap_matrix(funcs: list[ContractedGaussian]) -> np.ndarray:
    n = len(funcs)
    s = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            s[i, j] = s[j, i] = _contract2(_prim_overlap, funcs[i], funcs[j])
    return s


def kinetic_matrix(funcs: list[ContractedGaussian]) -> np.ndarray:
    n = len(funcs)
    t = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            t[i, j] = t[j, i] = _contract2(_prim_kinetic, funcs[i], funcs[j])
    return t


def nuclear_matrix(funcs: list[ContractedGaussian], charges, coords) -> np.ndarray:
    n = len(funcs)
    v = np.zeros((n, n))
    for z, rc in zip(charges, np.asarray(coords, dtype=float)):
        for i in range(n):
            for j in range(i, n):
                val = -z * _contract2(_prim_nuclear, funcs[i], funcs[j], rc)
                v[i, j] += val
                if i != j:
                    v[j, i] += val
    return v


def eri_tensor(funcs: list[ContractedGaussian]) -> np.ndarray:
    """Chemists' notation (ij|kl) with the full 8-fold symmetry filled in."""
    n = len(funcs)
    eri = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    val = 0.0
                    gi, gj, gk, gl = funcs[i], funcs[j], funcs[k], funcs[l]
                    for a, ca in zip(gi.exps, gi.coefs):
                        for b, cb in zip(gj.exps, gj.coefs):
                            for c, cc in zip(gk.exps, gk.coefs):
                                for d, cd in zip(gl.exps, gl.coefs):
                                    val += ca * cb * cc * cd * _prim_eri(
                                        a, gi.lmn, gi.center,
                                        b, gj.lmn, gj.center,
                                        c, gk.lmn, gk.center,
                                        d, gl.lmn, gl.center,
                                    )
                    for p, q, r, s in (
                        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
                    ):
                        eri[p, q, r, s] = val
    return eri


def normalize_basis(funcs: list[ContractedGaussian]) -> list[ContractedGaussian]:
    """Rescale contraction coefficients so every contracted function has unit self-overlap."""
    for g in funcs:
        norm = _contract2(_prim_overlap, g, g)
        g.coefs = g.coefs / np.sqrt(norm)
    return funcs


def nuclear_repulsion(charges, coords) -> float:
    coords = np.asarray(coords, dtype=float)
    e = 0.0
    for i in range(len(charges)):
        for j in range(i + 1, len(charges)):
            e += charges[i] * charges[j] / np.linalg.norm(coords[i] - coords[j])
    return e


def clear_caches() -> None:
    hermite_e.cache_clear()
