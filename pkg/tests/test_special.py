import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from loopfield.special import (bessel_i, gamma_fn, hermite,
                               identity_hermite_exp,
                               identity_hermite_laguerre,
                               identity_laguerre_bessel, laguerre,
                               m_gamma_partial_sums, wick_gff, wick_local,
                               wick_mixed)


def test_gamma_special_values():
    assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) < 1e-12
    assert abs(gamma_fn(1.0) - 1.0) < 1e-13
    assert abs(gamma_fn(5.0) - 24.0) < 1e-11


def test_gamma_recurrence():
    for x in np.linspace(0.1, 10.0, 67):
        rel = abs(gamma_fn(x + 1.0) - x * gamma_fn(x)) / abs(gamma_fn(x + 1.0))
        assert rel < 1e-12


def test_laguerre_low_orders():
    for theta in (0.3, 0.5, 1.0, 1.7):
        for u in (-1.0, 0.0, 0.7, 3.0):
            assert laguerre(0, theta, u) == 1.0
            assert abs(laguerre(1, theta, u) - (u - theta)) < 1e-12


def test_laguerre_rejects_large_degree():
    with pytest.raises(ValueError):
        laguerre(61, 0.5, 1.0)


def test_laguerre_gamma_orthogonality():
    # quadrature oracle: exact generalized Gauss-Laguerre integration of
    # int L_n L_m u^(theta-1) e^-u du / Gamma(theta)
    theta = 0.7
    nodes, weights = scipy.special.roots_genlaguerre(24, theta - 1.0)
    for n in range(6):
        for m in range(6):
            vals = np.array([laguerre(n, theta, x) * laguerre(m, theta, x)
                             for x in nodes])
            integral = float(weights @ vals) / math.gamma(theta)
            expected = 0.0
            if n == m:
                expected = math.factorial(n) * math.gamma(theta + n) \
                    / math.gamma(theta)
            assert abs(integral - expected) < 1e-8 * max(1.0, abs(expected))


def test_hermite_low_orders():
    for x in (-2.0, 0.0, 0.4, 3.0):
        assert hermite(0, x) == 1.0
        assert hermite(1, x) == x
        assert abs(hermite(2, x) - (x * x - 1.0)) < 1e-13


def test_hermite_generating_identity():
    for gamma in (0.2, 0.5, 1.0):
        for t in (0.5, 1.0, 2.0):
            for u in (-1.0, 0.3, 1.5):
                assert identity_hermite_exp(gamma, t, u) < 1e-10


def test_polynomials_are_exactly_polynomial():
    # interpolation through n+1 Chebyshev nodes reproduces the explicit
    # coefficients (independent: math.gamma / math.factorial)
    theta = 0.6
    for n in range(1, 7):
        nodes = 2.0 + 2.0 * np.cos(np.pi * (2 * np.arange(n + 1) + 1)
                                   / (2.0 * (n + 1)))
        vals = [laguerre(n, theta, x) for x in nodes]
        fitted = np.polyfit(nodes, vals, n)[::-1]  # ascending
        explicit = [
            (-1.0) ** (n - i) * math.gamma(n + theta) * math.factorial(n)
            / (math.factorial(n - i) * math.gamma(theta + i)
               * math.factorial(i))
            for i in range(n + 1)
        ]
        for a, b in zip(fitted, explicit):
            assert abs(a - b) < 1e-9 * max(1.0, abs(b))

        vals_h = [hermite(n, x) for x in nodes]
        fitted_h = np.polyfit(nodes, vals_h, n)[::-1]
        explicit_h = np.zeros(n + 1)
        for i in range(n // 2 + 1):
            explicit_h[n - 2 * i] = ((-1.0) ** i * math.factorial(n)
                                     / (math.factorial(i)
                                        * math.factorial(n - 2 * i) * 2.0**i))
        for a, b in zip(fitted_h, explicit_h):
            assert abs(a - b) < 1e-9 * max(1.0, abs(b))


def test_bessel_half_integer_forms():
    for z in np.linspace(0.1, 50.0, 40):
        cosh_form = math.sqrt(2.0 / (math.pi * z)) * math.cosh(z)
        sinh_form = math.sqrt(2.0 / (math.pi * z)) * math.sinh(z)
        assert abs(bessel_i(-0.5, z) - cosh_form) < 1e-10 * cosh_form
        assert abs(bessel_i(0.5, z) - sinh_form) < 1e-10 * sinh_form


def test_bessel_at_zero():
    assert bessel_i(0.7, 0.0) == 0.0
    assert bessel_i(0.0, 0.0) == 1.0


def test_bessel_asymptotic_switch_is_continuous():
    # compare exponentially scaled values across the series/asymptotic
    # switch; the leading asymptotic term is accurate to O(1/z) there
    lo = bessel_i(0.3, 649.9) * math.exp(-649.9)
    hi = bessel_i(0.3, 650.1) * math.exp(-650.1)
    assert abs(lo - hi) / hi < 1e-3


def test_wick_local_low_orders():
    theta, G = 0.4, 0.8
    for ell in (0.1, 1.0, 2.5):
        assert wick_local(ell, G, 0, theta) == 1.0
        assert abs(wick_local(ell, G, 1, theta) - (ell - theta * G)) < 1e-12


def test_wick_gff_square():
    G = 1.3
    for phi in (-1.0, 0.2, 2.0):
        assert abs(wick_gff(phi, G, 2) - (phi * phi - G)) < 1e-12


def test_wick_bridge_theta_half():
    # :ell^n: computed from ell = phi^2/2 equals 2^-n :phi^(2n): exactly
    G = 0.9
    for phi in (-1.4, 0.3, 2.2):
        ell = phi * phi / 2.0
        for n in (1, 2, 3):
            lhs = wick_local(ell, G, n, 0.5)
            rhs = 2.0**-n * wick_gff(phi, G, 2 * n)
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))


def test_wick_mixed_odd_hermite_consistency():
    for n in range(5):
        for h in (-1.5, 0.4, 1.2):
            for G in (0.5, 1.0):
                assert identity_hermite_laguerre(n, h, G) < 1e-10
                lhs = wick_mixed(h, h * h / 2.0, G, n, 0.5)
                rhs = 2.0**-n * G ** ((2 * n + 1) / 2.0) \
                    * hermite(2 * n + 1, h / math.sqrt(G))
                assert abs(lhs - rhs) < 1e-10


def test_wick_mixed_basic():
    theta, G = 0.4, 0.7
    for h in (-2.0, 0.5):
        for ell in (0.2, 1.1):
            assert wick_mixed(h, ell, G, 0, theta) == h
            assert wick_mixed(-h, ell, G, 2, theta) == \
                -wick_mixed(h, ell, G, 2, theta)


def test_laguerre_bessel_identity_grid():
    for theta in (0.25, 0.5, 0.9):
        for t in (0.5, 1.0, 2.0):
            for u in (0.5, 1.0, 2.0):
                for g in (0.5, 1.0, 2.0):
                    assert identity_laguerre_bessel(t, u, g, theta) < 1e-10


def test_laguerre_bessel_theta_half_is_cosh():
    # at theta = 1/2 the right side reduces to e^(-g^2 t/2) cosh(g u)
    for t, u, g in ((0.5, 1.0, 0.7), (1.5, 0.4, 1.1)):
        rhs = math.exp(-g * g * t / 2.0) \
            * (g * u / 2.0) ** 0.5 * bessel_i(-0.5, g * u)
        direct = math.exp(-g * g * t / 2.0) * math.cosh(g * u) \
            / math.sqrt(math.pi)
        assert abs(rhs - direct) < 1e-10


def test_laguerre_bessel_small_gamma():
    assert identity_laguerre_bessel(1.0, 1.0, 1e-3, 0.4) < 1e-12


def test_laguerre_bessel_budget():
    with pytest.raises(ValueError):
        identity_laguerre_bessel(100.0, 1.0, 1.0, 0.5)


def test_m_gamma_partial_sum_convergence():
    # doubling the truncation does not move the value (series converged)
    v80 = m_gamma_partial_sums(1.3, -1, 0.9, 0.35, 0.8, n_terms=80)
    v160 = m_gamma_partial_sums(1.3, -1, 0.9, 0.35, 0.8, n_terms=160)
    assert abs(v80 - v160) < 1e-12


def test_gamma_orthogonality_expectation_of_wick():
    # E[L_n(Z)] = 0 for Z ~ Gamma(theta), n >= 1, by quadrature
    theta = 0.5
    nodes, weights = scipy.special.roots_genlaguerre(24, theta - 1.0)
    for n in (1, 2, 3):
        vals = np.array([laguerre(n, theta, x) for x in nodes])
        integral = float(weights @ vals) / math.gamma(theta)
        assert abs(integral) < 1e-9
