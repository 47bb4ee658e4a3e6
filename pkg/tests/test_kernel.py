"""Angular kernel and the log-difference profile G.

Point oracles were computed with mpmath (50 digits) once and frozen; the
n = 1 and n = 3 closed forms double as oracles for the general quadrature.
"""

import math

import numpy as np
import pytest
import scipy.integrate

from frachs import DomainError
from frachs.kernel import (
    RadialKernel,
    angular_kernel,
    diag_coefficient,
    get_kernel,
    kernel_selftest,
)

# K(n, alpha, r, rho) oracles, mpmath 50-digit
K_ORACLE = [
    (2.0, 0.8, 1.0, 1.5, 6.248596127500320509436),
    (2.5, 0.6, 1.0, 1.3, 17.29017087301662727322),
    (2.0, 0.8, 1.0, 1.02, 2417.358505014322664402),
    (4.0, 0.9, 1.0, 2.0, 1.105298168534810056642),
    (3.0, 1.2, 1.0, 1.7, 3.493141485464956108588),
]


class TestAngularKernel:
    @pytest.mark.parametrize("n,alpha,r,rho,expected", K_ORACLE)
    def test_oracle_values(self, n, alpha, r, rho, expected):
        assert angular_kernel(n, alpha, r, rho) == pytest.approx(expected, rel=1e-10)

    def test_n1_closed_form(self):
        assert angular_kernel(1.0, 0.5, 2.0, 3.0) == pytest.approx(
            1.0**-1.5 + 5.0**-1.5, rel=1e-14
        )

    def test_n3_closed_form_matches_general_path(self):
        from frachs.kernel import _angular_general

        for rho in (1.2, 2.0, 9.0):
            closed = angular_kernel(3.0, 1.0, 1.0, rho)
            quad = _angular_general(3.0, 1.0, 1.0, rho)
            assert quad == pytest.approx(closed, rel=1e-10)

    def test_symmetry(self):
        a = angular_kernel(2.3, 0.7, 1.1, 2.6)
        b = angular_kernel(2.3, 0.7, 2.6, 1.1)
        assert a == pytest.approx(b, rel=1e-12)

    def test_homogeneity(self):
        n, alpha = 2.0, 1.0
        base = angular_kernel(n, alpha, 1.0, 1.7)
        scaled = angular_kernel(n, alpha, 5.0, 8.5)
        assert scaled == pytest.approx(base * 5.0 ** -(n + alpha), rel=1e-10)

    def test_diagonal_rejected(self):
        with pytest.raises(DomainError):
            angular_kernel(3.0, 1.0, 1.0, 1.0)

    def test_positive_radii_required(self):
        with pytest.raises(DomainError):
            angular_kernel(3.0, 1.0, -1.0, 1.0)


class TestDiagCoefficient:
    def test_n3_value(self):
        for alpha in (0.5, 1.0, 1.5):
            assert diag_coefficient(3.0, alpha) == pytest.approx(
                2.0 * math.pi / (1.0 + alpha), rel=1e-13
            )

    def test_n1_is_one(self):
        assert diag_coefficient(1.0, 0.7) == 1.0

    def test_matches_G_limit(self):
        ker = get_kernel(2.0, 0.8)
        v = 1e-6
        assert float(ker.G(v)) * v ** (1.0 + 0.8) == pytest.approx(ker.a0, rel=1e-4)


class TestGProfile:
    @pytest.mark.parametrize("n,alpha", [(1.0, 0.5), (3.0, 1.0), (2.0, 0.8)])
    def test_matches_angular(self, n, alpha):
        ker = get_kernel(n, alpha)
        for v in (0.01, 0.3, 2.0, 11.0):
            direct = angular_kernel(n, alpha, math.exp(-v / 2), math.exp(v / 2))
            assert float(ker.G(v)) == pytest.approx(direct, rel=5e-10)

    def test_even(self):
        ker = get_kernel(2.0, 0.8)
        v = np.array([0.1, 1.0, 5.0])
        assert np.allclose(ker.G(v), ker.G(-v), rtol=1e-14)

    def test_large_v_asymptote(self):
        for n, alpha in [(1.0, 0.5), (3.0, 1.0), (2.5, 0.9)]:
            ker = get_kernel(n, alpha)
            v = 30.0
            assert float(ker.G(v)) == pytest.approx(
                ker.area * math.exp(-ker.decay * v), rel=1e-10
            )

    def test_tamed_finite_at_zero(self):
        ker = get_kernel(3.0, 1.0)
        assert float(ker.G_tamed(0.0)) == pytest.approx(ker.a0, rel=1e-12)


class TestTailMoment:
    def test_n1_against_analytic(self):
        # for n=1 the kernel tail integral has an elementary antiderivative:
        # int_R^inf (rho - r)^(-1-a) drho = (R - r)^(-a) / a, plus mirrored terms
        n, alpha = 1.0, 0.6
        ker = get_kernel(n, alpha)
        r, R1 = 0.4, 1.0
        nu = 0.5 * (n - alpha)
        w = math.log(R1 / r)
        outer = float(r ** (-alpha) * ker.tail_moment(np.array([w]), nu)[0])
        exact = ((R1 - r) ** -alpha + (R1 + r) ** -alpha) / alpha
        assert outer == pytest.approx(exact, rel=1e-9)

    def test_inner_against_analytic(self):
        n, alpha = 1.0, 0.6
        ker = get_kernel(n, alpha)
        r, r0 = 0.4, 0.05
        nu = 0.5 * (n - alpha)
        w = math.log(r / r0)
        inner = float(r ** (-alpha) * ker.tail_moment(np.array([w]), -nu)[0])
        exact = ((r - r0) ** -alpha - r**-alpha + r**-alpha - (r + r0) ** -alpha) / alpha
        assert inner == pytest.approx(exact, rel=1e-9)

    def test_against_scipy_quad_n2(self):
        ker = get_kernel(2.0, 0.8)
        c = 0.3
        val = float(ker.tail_moment(np.array([0.7]), c)[0])
        chk, _ = scipy.integrate.quad(lambda t: float(ker.G(t)) * math.exp(c * t), 0.7, 120.0, limit=400)
        assert val == pytest.approx(chk, rel=1e-8)

    def test_divergent_rate_rejected(self):
        ker = get_kernel(2.0, 0.8)
        with pytest.raises(DomainError):
            ker.tail_moment(np.array([1.0]), ker.decay)

    def test_positive_w_required(self):
        ker = get_kernel(2.0, 0.8)
        with pytest.raises(DomainError):
            ker.tail_moment(np.array([0.0]), 0.0)


@pytest.mark.parametrize("n,alpha", [(1.0, 0.5), (2.0, 1.0), (3.0, 1.0), (3.0, 1.5)])
def test_selftest_clean(n, alpha):
    report = kernel_selftest(n, alpha)
    assert max(report.values()) < 1e-8


def test_kernel_rejects_bad_alpha():
    with pytest.raises(DomainError):
        RadialKernel(3.0, 2.0)
    with pytest.raises(DomainError):
        RadialKernel(1.0, 1.0)
