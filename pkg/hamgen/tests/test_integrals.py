"""Integral engine vs closed forms and the classic minimal-basis H2 tables."""
import math

import numpy as np
import pytest

from hamgen.basis import build_basis
from hamgen.integrals import (
    boys,
    eri_tensor,
    kinetic_matrix,
    normalize_basis,
    nuclear_matrix,
    nuclear_repulsion,
    overlap_matrix,
)


def h2_sto3g(r=1.4):
    coords = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, r]])
    funcs = normalize_basis(build_basis(["H", "H"], coords, "sto-3g"))
    return funcs, coords


class TestBoys:
    def test_at_zero(self):
        for n in range(6):
            assert boys(n, 0.0) == pytest.approx(1.0 / (2 * n + 1), abs=1e-12)

    def test_zeroth_closed_form(self):
        # F0(x) = sqrt(pi/x)/2 * erf(sqrt(x))
        for x in (0.1, 0.5, 1.0, 3.7, 10.0):
            want = 0.5 * math.sqrt(math.pi / x) * math.erf(math.sqrt(x))
            assert boys(0, x) == pytest.approx(want, rel=1e-10)

    def test_downward_recursion_consistent(self):
        # F_{n}(x) = ( (2n-1) F_{n-1}(x) - exp(-x) ) / (2x)
        x = 2.3
        for n in range(1, 5):
            want = ((2 * n - 1) * boys(n - 1, x) - math.exp(-x)) / (2 * x)
            assert boys(n, x) == pytest.approx(want, rel=1e-9)


class TestPrimitiveClosedForms:
    def test_ss_overlap(self):
        # normalized s-gaussians: S = (4ab/(a+b)^2)^(3/4) exp(-ab R^2/(a+b))
        a, b, r = 0.8, 1.7, 1.3
        coords = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, r]])
        from hamgen.basis import ContractedGaussian

        ga = ContractedGaussian(coords[0], (0, 0, 0), np.array([a]), np.array([1.0]))
        gb = ContractedGaussian(coords[1], (0, 0, 0), np.array([b]), np.array([1.0]))
        funcs = normalize_basis([ga, gb])
        s = overlap_matrix(funcs)
        want = (4 * a * b / (a + b) ** 2) ** 0.75 * math.exp(-a * b * r * r / (a + b))
        assert s[0, 1] == pytest.approx(want, rel=1e-10)
        assert s[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_ss_kinetic(self):
        # T = (ab/(a+b)) (3 - 2abR^2/(a+b)) S / ... standard closed form
        a, b, r = 1.1, 0.6, 0.9
        from hamgen.basis import ContractedGaussian

        ga = ContractedGaussian(np.zeros(3), (0, 0, 0), np.array([a]), np.array([1.0]))
        gb = ContractedGaussian(np.array([0.0, 0.0, r]), (0, 0, 0), np.array([b]), np.array([1.0]))
        funcs = normalize_basis([ga, gb])
        s = overlap_matrix(funcs)[0, 1]
        t = kinetic_matrix(funcs)[0, 1]
        mu = a * b / (a + b)
        want = mu * (3.0 - 2.0 * mu * r * r) * s
        assert t == pytest.approx(want, rel=1e-10)


class TestMinimalBasisH2:
    """Published minimal-basis H2 values at R = 1.4 Bohr, zeta = 1.24."""

    def test_overlap(self):
        funcs, _ = h2_sto3g()
        s = overlap_matrix(funcs)
        assert s[0, 0] == pytest.approx(1.0, abs=1e-10)
        assert s[0, 1] == pytest.approx(0.6593, abs=2e-4)

    def test_kinetic(self):
        funcs, _ = h2_sto3g()
        t = kinetic_matrix(funcs)
        assert t[0, 0] == pytest.approx(0.7600, abs=2e-4)
        assert t[0, 1] == pytest.approx(0.2365, abs=2e-4)

    def test_nuclear_attraction(self):
        funcs, coords = h2_sto3g()
        v = nuclear_matrix(funcs, [1, 1], coords)
        # V11 = attraction to both centers: -1.2266 + -0.6538 (table values)
        assert v[0, 0] == pytest.approx(-1.2266 - 0.6538, abs=4e-4)

    def test_two_electron(self):
        funcs, _ = h2_sto3g()
        eri = eri_tensor(funcs)
        assert eri[0, 0, 0, 0] == pytest.approx(0.7746, abs=2e-4)
        assert eri[0, 0, 1, 1] == pytest.approx(0.5697, abs=2e-4)
        assert eri[1, 0, 0, 0] == pytest.approx(0.4441, abs=2e-4)
        assert eri[1, 0, 1, 0] == pytest.approx(0.2970, abs=2e-4)

    def test_eri_permutation_symmetry(self):
        funcs, _ = h2_sto3g()
        eri = eri_tensor(funcs)
        assert np.allclose(eri, eri.transpose(1, 0, 2, 3), atol=1e-12)
        assert np.allclose(eri, eri.transpose(0, 1, 3, 2), atol=1e-12)
        assert np.allclose(eri, eri.transpose(2, 3, 0, 1), atol=1e-12)


class TestNuclearRepulsion:
    def test_h2(self):
        coords = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.4]])
        assert nuclear_repulsion([1, 1], coords) == pytest.approx(1.0 / 1.4, rel=1e-12)

    def test_three_center(self):
        coords = np.array([[0.0, 0.0, -2.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
        want = 1 * 4 / 2.0 + 1 * 4 / 2.0 + 1 * 1 / 4.0
        assert nuclear_repulsion([1, 4, 1], coords) == pytest.approx(want, rel=1e-12)
