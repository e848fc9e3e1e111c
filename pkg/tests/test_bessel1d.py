import math

import numpy as np
import pytest
import scipy.integrate

from loopfield import backend
from loopfield.bessel1d import (check_duality, check_duality_paired,
                                check_martingale, sample_besq, signed_field,
                                zero_threshold)
from loopfield.mc import gamma_cdf, ks_statistic, mean_se
from loopfield.rng import replica_state
from loopfield.special import laguerre


def test_sample_besq_validation():
    state = backend.seed_state(1)
    with pytest.raises(ValueError):
        sample_besq(1.2, 1.0, 1e-3, state)
    with pytest.raises(ValueError):
        sample_besq(0.5, 1.0, 0.1, state)  # dt > horizon/50


def test_path_structure():
    path = sample_besq(0.4, 1.0, 1e-2, backend.seed_state(3))
    assert path.values[0] == 0.0
    assert np.all(path.values >= 0.0)
    assert path.times[-1] == pytest.approx(1.0)
    # labels change only when crossing the zero threshold
    eps = path.threshold
    above = path.values >= eps
    assert np.array_equal(path.excursion_id > 0, above)
    # zero at 0: excursion id 0 there
    assert path.excursion_id[0] == 0


def test_marginal_gamma_2t():
    theta = 0.4
    R = 4000
    vals = np.empty(R)
    for i in range(R):
        path = sample_besq(theta, 0.5, 1e-2, replica_state(5, i))
        vals[i] = path.values[-1]
    ks = ks_statistic(vals / (2.0 * 0.5), lambda x: gamma_cdf(theta, x))
    assert ks < 1.36 / math.sqrt(R) * 1.6


def test_mean_2_theta_t():
    theta, t = 0.3, 1.0
    R = 4000
    vals = np.empty(R)
    for i in range(R):
        path = sample_besq(theta, t, 1e-2, replica_state(6, i))
        vals[i] = path.values[-1]
    mean, se = mean_se(vals)
    assert abs(mean - 2.0 * theta * t) < 3.0 * se


def test_fractional_moment():
    # E[R_x^(2(1-theta))] = (2x)^(2(1-theta)) Gamma(2-theta)/Gamma(theta)
    theta, x = 0.3, 1.0
    R = 6000
    vals = np.empty(R)
    for i in range(R):
        path = sample_besq(theta, x, 1e-2, replica_state(7, i))
        vals[i] = path.values[-1] ** (2.0 * (1.0 - theta))
    mean, se = mean_se(vals)
    target = (2.0 * x) ** (2.0 * (1.0 - theta)) \
        * math.gamma(2.0 - theta) / math.gamma(theta)
    assert abs(mean - target) < 3.0 * se


def test_signed_field_modulus_and_symmetry():
    theta = 0.5
    path = sample_besq(theta, 1.0, 1e-2, backend.seed_state(11))
    h = signed_field(path)
    assert np.allclose(np.abs(h), path.values ** (1.0 - theta), rtol=1e-12)
    assert np.allclose(np.abs(h), np.sqrt(path.values), rtol=1e-12)
    # mean zero by sign symmetry
    R = 2000
    vals = np.empty(R)
    for i in range(R):
        p = sample_besq(0.3, 0.5, 1e-2, replica_state(12, i))
        vals[i] = signed_field(p)[-1]
    mean, se = mean_se(vals)
    assert abs(mean) < 3.0 * se


def test_signed_field_constant_sign_per_excursion():
    path = sample_besq(0.3, 1.0, 1e-2, backend.seed_state(13))
    h = signed_field(path)
    for e in range(1, path.n_excursions + 1):
        sel = path.excursion_id == e
        signs = np.sign(h[sel])
        assert np.all(signs == signs[0])


def test_additivity_of_besq():
    # BESQ(2 t1) + BESQ(2 t2) has BESQ(2 (t1+t2)) marginals
    t1, t2 = 0.3, 0.45
    R = 3000
    vals = np.empty(R)
    for i in range(R):
        p1 = sample_besq(t1, 0.5, 1e-2, replica_state(31, i, stream=0))
        p2 = sample_besq(t2, 0.5, 1e-2, replica_state(31, i, stream=1))
        vals[i] = p1.values[-1] + p2.values[-1]
    ks = ks_statistic(vals / 1.0, lambda x: gamma_cdf(t1 + t2, x))
    assert ks < 0.03


def test_zero_fraction_decreases_with_theta():
    fractions = []
    for theta in (0.2, 0.5, 0.8):
        R = 300
        frac = 0.0
        for i in range(R):
            path = sample_besq(theta, 1.0, 1e-3, replica_state(41, i))
            frac += float(np.mean(path.values < path.threshold))
        fractions.append(frac / R)
    assert fractions[0] > fractions[1] > fractions[2] > 0.0


def test_martingale_zero_mean_and_control():
    theta = 0.3
    rows = check_martingale(theta, 1, [0.5, 1.0, 2.0], replicas=4000, seed=9)
    for t, mean, se in rows:
        assert abs(mean) < 3.0 * se
    # estimator means are time-constant (conservative joint SE)
    for (t1, m1, s1), (t2, m2, s2) in zip(rows, rows[1:]):
        assert abs(m1 - m2) < 3.0 * math.hypot(s1, s2)
    # time-constant means: pairwise differences within 3 joint SE
    # (same replicas, so compare directly through the covariance-free bound)
    rows2 = check_martingale(theta, 2, [0.5, 1.0], replicas=4000, seed=10)
    for t, mean, se in rows2:
        assert abs(mean) < 3.0 * se
    # mismatched polynomial parameter: |mean| beyond 3 SE
    control = check_martingale(theta, 1, [1.0], replicas=4000, seed=11,
                               theta_poly=theta + 0.3)
    t, mean, se = control[0]
    assert abs(mean) > 3.0 * se
    # quadrature oracle for the control's systematic offset:
    # E[(2t) L_1^(theta'-1)(R_t/(2t))] with R_t ~ Gamma(theta, scale 2t)
    theta_p = theta + 0.3
    integrand = lambda z: ((2.0 * 1.0) * laguerre(1, theta_p, z / 2.0)
                           * z ** (theta - 1.0) * math.exp(-z / 2.0)
                           / (2.0 ** theta * math.gamma(theta)))
    oracle, _ = scipy.integrate.quad(integrand, 0.0, 120.0)
    assert abs(mean - oracle) < 3.0 * se


def test_martingale_validation():
    with pytest.raises(ValueError):
        check_martingale(0.3, 5, [1.0], replicas=10, seed=1)
    with pytest.raises(ValueError):
        check_martingale(0.3, 1, [0.00037], replicas=10, seed=1)


def test_duality_small():
    theta, x, y = 0.3, 0.5, 1.0
    lhs, se, rhs = check_duality(theta, x, y, replicas=8000, seed=21)
    assert abs(lhs - rhs) / rhs < 0.08
    target = (math.gamma(1.7) / math.gamma(0.3)) * 1.0 ** 1.4
    assert rhs == pytest.approx(target, rel=1e-12)


def test_duality_x_equals_y():
    # x = y: lhs reduces to the fractional moment
    theta, x = 0.4, 0.6
    lhs, se, rhs = check_duality(theta, x, x, replicas=6000, seed=22)
    assert abs(lhs - rhs) < 3.0 * se


def test_duality_theta_near_one_degenerates_gracefully():
    lhs, se, rhs = check_duality(0.95, 0.5, 1.0, replicas=500, seed=23)
    assert math.isfinite(lhs) and lhs > 0.0


def test_duality_validation():
    with pytest.raises(ValueError):
        check_duality(0.3, 1.0, 0.5, replicas=10, seed=1)


def test_duality_paired_consistency():
    # coarse estimate from subsampled fine paths agrees with the direct
    # dt = 1e-3 estimator by law; the paired difference is tiny
    out = check_duality_paired(0.3, 0.5, 1.0, replicas=6000, seed=33,
                               dt=2e-3, refine=2)
    direct, direct_se, rhs = check_duality(0.3, 0.5, 1.0, replicas=6000,
                                           seed=34, dt=2e-3)
    joint = math.hypot(out["coarse_se"], direct_se)
    assert abs(out["coarse"] - direct) < 3.0 * joint
    assert abs(out["diff"]) < 0.05 * rhs


def test_threshold_scale():
    assert zero_threshold(1e-3) == pytest.approx(1e-3 ** 0.9)
