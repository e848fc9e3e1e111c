"""Special functions and Wick renormalization.

Hand-rolled, dependency-free implementations: Lanczos gamma, monic
generalized Laguerre and Hermite polynomials, the modified Bessel
function of the first kind, Wick powers of occupation/GFF variables, and
the deterministic identities tying them together.  These identities are
the zero-variance regression tests of the repository: any drift in a
formula shows up as a residual far above 1e-10.

Conventions (all monic):

* ``laguerre(n, theta, u)``  leading coefficient 1, orthogonal w.r.t.
  the Gamma(theta) weight ``u^(theta-1) e^-u``.
* ``hermite(n, x)``          orthogonal w.r.t. ``e^(-x^2/2)``.
* Wick powers: ``:ell^n: = G^n L_n^(theta-1)(ell/G)``,
  ``:phi^n: = G^(n/2) H_n(phi/sqrt(G))``,
  ``:h ell^n: = h G^n L_n^(theta*-1)(ell/G)`` with ``theta* = 2 - theta``.
"""

from __future__ import annotations

import math

POLY_DEGREE_CAP = 60
BESSEL_SERIES_SWITCH = 650.0
SERIES_TOL = 1e-17
LAGUERRE_BESSEL_BUDGET = 30.0

# Lanczos approximation, g = 7, 9 coefficients (relative error < 1e-13
# over the range used here).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function via the Lanczos approximation (g=7, 9 terms)."""
    if x < 0.5:
        # reflection formula; the sin term is exact for our real inputs
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, 9):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    if x > 140.0:  # t^(x+0.5) would overflow; assemble in log space
        return math.exp((x + 0.5) * math.log(t) - t
                        + math.log(math.sqrt(2.0 * math.pi) * acc))
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def laguerre(n: int, theta: float, u: float) -> float:
    """Monic generalized Laguerre L_n^(theta-1) at u, by the explicit sum.

    Coefficient of u^i is (-1)^(n-i) * Gamma(n+theta) * n! /
    ((n-i)! * Gamma(theta+i) * i!).
    """
    if n < 0 or n > POLY_DEGREE_CAP:
        raise ValueError(f"laguerre degree must be in [0, {POLY_DEGREE_CAP}]")
    if theta <= 0:
        raise ValueError("theta must be positive")
    # ascending-power coefficients via the stable ratio recursion
    coef = gamma_fn(n + theta) / gamma_fn(theta)  # |coef of u^0|
    sign = -1.0 if n % 2 else 1.0
    total = 0.0
    upow = 1.0
    for i in range(n + 1):
        total += sign * coef * upow
        sign = -sign
        upow *= u
        coef = coef * (n - i) / ((theta + i) * (i + 1))
    return total


def _laguerre_recurrence(n_max: int, alpha: float, x: float) -> list[float]:
    """Values of the monic Laguerre family L_0..L_n_max^(alpha) at x.

    Three-term recurrence; used by the identity checks, which need
    degrees beyond the explicit-sum cap.
    """
    vals = [1.0]
    if n_max == 0:
        return vals
    prev = 1.0
    cur = x - (1.0 + alpha)
    vals.append(cur)
    for n in range(1, n_max):
        nxt = (x - (2 * n + 1 + alpha)) * cur - n * (n + alpha) * prev
        vals.append(nxt)
        prev, cur = cur, nxt
    return vals


def hermite(n: int, x: float) -> float:
    """Monic Hermite polynomial H_n at x (weight e^(-x^2/2)).

    Term i of the explicit sum is (-1)^i n!/(i! (n-2i)!) x^(n-2i) / 2^i;
    evaluated as a Horner polynomial in x^2 (times x for odd n).
    """
    if n < 0 or n > POLY_DEGREE_CAP:
        raise ValueError(f"hermite degree must be in [0, {POLY_DEGREE_CAP}]")
    m = n // 2
    coefs = [1.0]  # i = 0 (monic)
    for i in range(m):
        k = n - 2 * i
        coefs.append(-coefs[i] * k * (k - 1) / (2.0 * (i + 1)))
    y = x * x
    acc = coefs[0]
    for i in range(1, m + 1):
        acc = acc * y + coefs[i]
    return acc * x if n % 2 else acc


def bessel_i(nu: float, z: float) -> float:
    """Modified Bessel I_nu(z), power series with asymptotic tail.

    Series is summed to stagnation (term < 1e-17 * sum) for z <= 650;
    beyond that the leading asymptotic e^z / sqrt(2 pi z) is used.
    """
    if z < 0:
        raise ValueError("z must be nonnegative")
    if z == 0.0:
        if nu > 0:
            return 0.0
        if nu == 0:
            return 1.0
        return math.inf
    if z > BESSEL_SERIES_SWITCH:
        return math.exp(z) / math.sqrt(2.0 * math.pi * z)
    half = 0.5 * z
    term = half**nu / gamma_fn(nu + 1.0)
    total = term
    q = half * half
    for k in range(1, 600):
        term *= q / (k * (nu + k))
        total += term
        if term < SERIES_TOL * total:
            break
    return total


# ---------------------------------------------------------------------------
# Wick powers
# ---------------------------------------------------------------------------


def wick_local(ell: float, G: float, n: int, theta: float) -> float:
    """n-th Wick power of the occupation value: G^n L_n^(theta-1)(ell/G)."""
    if G <= 0:
        raise ValueError("G must be positive")
    return G**n * laguerre(n, theta, ell / G)


def wick_gff(phi: float, G: float, n: int) -> float:
    """n-th Wick power of a GFF value: G^(n/2) H_n(phi/sqrt(G))."""
    if G <= 0:
        raise ValueError("G must be positive")
    return G ** (n / 2.0) * hermite(n, phi / math.sqrt(G))


def wick_mixed(h: float, ell: float, G: float, n: int, theta: float) -> float:
    """Mixed Wick power :h ell^n: = h G^n L_n^(theta*-1)(ell/G), theta*=2-theta."""
    if not 0.0 < theta <= 0.5:
        raise ValueError("theta must lie in (0, 1/2]")
    if G <= 0:
        raise ValueError("G must be positive")
    theta_star = 2.0 - theta
    return h * G**n * laguerre(n, theta_star, ell / G)


# ---------------------------------------------------------------------------
# deterministic identities
# ---------------------------------------------------------------------------


def identity_laguerre_bessel(t: float, u: float, gamma: float,
                             theta: float, n_terms: int = 80) -> float:
    """Residual of the Laguerre-to-Bessel resummation.

    LHS = sum_n (gamma^2 t/2)^n / (n! Gamma(theta+n)) L_n^(theta-1)(u^2/(2t)),
    RHS = exp(-gamma^2 t/2) (gamma^2 u^2/4)^((1-theta)/2) I_(theta-1)(gamma u);
    returns |LHS - RHS|.  The power factor is (gamma u / 2)^(1-theta): the
    direct term-by-term expansion gives
    exp(-g^2 t/2) * sum_i (g^2 u^2/4)^i / (i! Gamma(theta+i)).
    """
    if min(t, u, gamma, theta) <= 0:
        raise ValueError("t, u, gamma, theta must be positive")
    z = gamma * gamma * t / 2.0
    if z > LAGUERRE_BESSEL_BUDGET:
        raise ValueError(
            f"gamma^2 t / 2 = {z:g} exceeds the series budget "
            f"{LAGUERRE_BESSEL_BUDGET:g}")
    x = u * u / (2.0 * t)
    lag = _laguerre_recurrence(n_terms, theta - 1.0, x)
    lhs = 0.0
    w = 1.0  # z^n / n!
    for n in range(n_terms + 1):
        lhs += w / gamma_fn(theta + n) * lag[n]
        w *= z / (n + 1.0)
    arg = gamma * u
    rhs = (math.exp(-z) * (arg / 2.0) ** (1.0 - theta) * bessel_i(theta - 1.0, arg))
    return abs(lhs - rhs)


def identity_hermite_laguerre(n: int, h: float, G: float) -> float:
    """Residual of 2^-n G^((2n+1)/2) H_(2n+1)(h/sqrt(G)) = h G^n L_n^(1/2)(h^2/(2G)).

    The Laguerre parameter 1/2 is theta*-1 at theta = 1/2.
    """
    if G <= 0:
        raise ValueError("G must be positive")
    lhs = 2.0**-n * G ** ((2 * n + 1) / 2.0) * hermite(2 * n + 1, h / math.sqrt(G))
    rhs = h * G**n * laguerre(n, 1.5, h * h / (2.0 * G))
    return abs(lhs - rhs)


def identity_hermite_exp(gamma: float, t: float, u: float,
                         n_terms: int = 40) -> float:
    """Residual of sum_n gamma^n t^(n/2) H_n(u/sqrt(t)) / n! = e^(gamma u - gamma^2 t/2)."""
    if t <= 0:
        raise ValueError("t must be positive")
    sqrt_t = math.sqrt(t)
    x = u / sqrt_t
    lhs = 0.0
    w = 1.0  # gamma^n t^(n/2) / n!
    for n in range(n_terms + 1):
        lhs += w * hermite(n, x)
        w *= gamma * sqrt_t / (n + 1.0)
    rhs = math.exp(gamma * u - gamma * gamma * t / 2.0)
    return abs(lhs - rhs)


def m_gamma_partial_sums(ell: float, sigma: int, gamma: float, theta: float,
                         G: float, n_terms: int = 80) -> float:
    """Truncated double expansion of the signed chaos density m_gamma.

    Even part: sum_k (gamma^2/2)^k Gamma(theta)/(k! Gamma(k+theta)) (2 pi)^k :ell^k:.
    Odd part:  gamma^(2(1-theta)) * analogous sum with theta* = 2-theta over
    the mixed powers :h ell^k: where h = c_theta sigma (2 pi ell)^(1-theta).
    This is the independent oracle for ``fields.m_gamma_density``.
    """
    theta_star = 2.0 - theta
    c_theta = 2.0 ** (theta - 1.0) * gamma_fn(theta) / gamma_fn(theta_star)
    h = c_theta * sigma * (2.0 * math.pi * ell) ** (1.0 - theta)
    x = ell / G
    zz = gamma * gamma / 2.0 * (2.0 * math.pi) * G  # (gamma^2/2) (2 pi) G

    lag_even = _laguerre_recurrence(n_terms, theta - 1.0, x)
    lag_odd = _laguerre_recurrence(n_terms, theta_star - 1.0, x)

    even = 0.0
    odd = 0.0
    w = 1.0  # zz^k / k!  (the G^k of the Wick power is folded into zz^k)
    for k in range(n_terms + 1):
        even += w / gamma_fn(k + theta) * lag_even[k]
        odd += w / gamma_fn(k + theta_star) * lag_odd[k]
        w *= zz / (k + 1.0)
    even *= gamma_fn(theta)
    odd *= gamma_fn(theta_star) * h * gamma ** (2.0 * (1.0 - theta))
    return even + odd

