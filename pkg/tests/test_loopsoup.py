import math

import numpy as np
import pytest

from loopfield import backend
from loopfield.graph import build_domain, green_function
from loopfield.loopsoup import (full_domain_return_probability,
                                occupation_field, sample_loop_soup,
                                sample_thick_loop)
from loopfield.mc import binomial_se, gamma_cdf, ks_statistic
from loopfield.rng import replica_state


@pytest.fixture(scope="module")
def disc12():
    return build_domain("disc", 12)


def test_rejects_bad_theta(disc12):
    with pytest.raises(ValueError):
        sample_loop_soup(disc12, 0.0, backend.seed_state(1))
    with pytest.raises(ValueError):
        sample_loop_soup(disc12, -1.0, backend.seed_state(1))


def test_determinism_bit_identical(disc12):
    a = sample_loop_soup(disc12, 0.5, backend.seed_state(99))
    b = sample_loop_soup(disc12, 0.5, backend.seed_state(99))
    assert np.array_equal(a.visits, b.visits)
    assert np.array_equal(a.holdings, b.holdings)
    assert np.array_equal(a.trivial_field, b.trivial_field)
    assert np.array_equal(a.occupation, b.occupation)


def test_loop_structure_invariants(disc12):
    sample = sample_loop_soup(disc12, 1.0, backend.seed_state(4))
    assert sample.n_loops > 0
    for j in range(sample.n_loops):
        loop = sample.loop(j)
        visits = loop.visits
        assert visits[0] == visits[-1] == loop.root
        # root is the minimal visited vertex in the fixed order
        assert loop.root == visits.min()
        # consecutive visits are lattice neighbors
        for a, b in zip(visits[:-1], visits[1:]):
            assert b in disc12.nbr[4 * a:4 * a + 4]
        # k first-returns to the root
        assert int((visits == loop.root).sum()) == loop.returns + 1
        assert sample.loop_holdings(j).shape[0] == visits.shape[0] - 1


def test_occupation_recompute_bit_exact(disc12):
    sample = sample_loop_soup(disc12, 0.5, backend.seed_state(7))
    occ = occupation_field(sample, verify=True)
    assert occ is sample.occupation
    assert np.all(occ > 0.0)
    sample.occupation[0] += 1.0
    with pytest.raises(AssertionError):
        occupation_field(sample, verify=True)


def test_occupation_trivial_only():
    # ensure bookkeeping holds on a replica without loops at tiny theta
    dom = build_domain("disc", 8)
    for seed in range(30):
        sample = sample_loop_soup(dom, 0.01, backend.seed_state(seed))
        if sample.n_loops == 0:
            assert np.array_equal(sample.occupation, sample.trivial_field)
            return
    raise AssertionError("no loop-free replica found at theta=0.01")


def test_occupation_mean(disc12):
    theta = 0.5
    green = green_function(disc12, mode="dense")
    g00 = green.diag(disc12.origin)
    R = 3000
    vals = np.empty(R)
    for i in range(R):
        sample = sample_loop_soup(disc12, theta, replica_state(10, i))
        vals[i] = sample.occupation[disc12.origin]
    se = vals.std(ddof=1) / math.sqrt(R)
    assert abs(vals.mean() - theta * g00) < 3.0 * se


def test_gamma_marginal_master_oracle(disc12):
    green = green_function(disc12, mode="dense")
    g00 = green.diag(disc12.origin)
    R = 2500
    for theta in (0.5,):
        vals = np.empty(R)
        for i in range(R):
            sample = sample_loop_soup(disc12, theta, replica_state(21, i))
            vals[i] = sample.occupation[disc12.origin] / g00
        ks = ks_statistic(vals, lambda x: gamma_cdf(theta, x))
        assert ks < 0.03


def test_superposition(disc12):
    # theta1 + theta2 soups merged match a theta1+theta2 soup marginally
    green = green_function(disc12, mode="dense")
    g00 = green.diag(disc12.origin)
    R = 2500
    vals = np.empty(R)
    for i in range(R):
        s1 = sample_loop_soup(disc12, 0.3, replica_state(31, i, stream=0))
        s2 = sample_loop_soup(disc12, 0.7, replica_state(31, i, stream=1))
        vals[i] = (s1.occupation[disc12.origin]
                   + s2.occupation[disc12.origin]) / g00
    ks = ks_statistic(vals, lambda x: gamma_cdf(1.0, x))
    assert ks < 0.03


def test_covariance_against_green(disc12):
    theta = 0.5
    green = green_function(disc12, mode="dense")
    x = disc12.origin
    y = disc12.index_of(2, 0)
    gxy = green.value(x, y)
    R = 6000
    vals = np.empty((R, 2))
    for i in range(R):
        sample = sample_loop_soup(disc12, theta, replica_state(77, i))
        vals[i] = sample.occupation[x], sample.occupation[y]
    prods = (vals[:, 0] - vals[:, 0].mean()) * (vals[:, 1] - vals[:, 1].mean())
    cov = prods.mean()
    se = prods.std(ddof=1) / math.sqrt(R)
    assert abs(cov - theta * gxy**2) < 3.0 * se


# ---------------------------------------------------------------------------
# thick loops
# ---------------------------------------------------------------------------


def test_thick_loop_rejects_bad_a(disc12):
    with pytest.raises(ValueError):
        sample_thick_loop(disc12, disc12.origin, 0.0, backend.seed_state(1))


def test_thick_loop_structure(disc12):
    thick = sample_thick_loop(disc12, disc12.origin, 1.5, backend.seed_state(3))
    for b in range(thick.n_bridges):
        bridge = thick.bridge(b)
        assert bridge[0] == bridge[-1] == disc12.origin
        for a, bb in zip(bridge[:-1], bridge[1:]):
            assert bb in disc12.nbr[4 * a:4 * a + 4]


def test_thick_loop_void_probability(disc12):
    # empirical nonempty fraction matches 1 - exp(-a r/(1-r)) for small a
    a = 0.05
    r = full_domain_return_probability(disc12, disc12.origin)
    lam = a * r / (1.0 - r)
    R = 4000
    nonempty = 0
    for i in range(R):
        thick = sample_thick_loop(disc12, disc12.origin, a, replica_state(55, i))
        nonempty += thick.n_bridges > 0
    p_hat = nonempty / R
    p = 1.0 - math.exp(-lam)
    assert abs(p_hat - p) < 3.0 * binomial_se(p, R) + 1e-12


def test_thick_loop_radius_monotone_coupling(disc12):
    # superposing extra bridges (Poisson additivity in a) can only grow
    # the radius: exact pathwise monotonicity under the coupling
    pts = disc12.points()

    def radius(thick):
        if thick.n_bridges == 0:
            return 0.0
        vs = thick.vertex_set()
        return float(np.max(np.hypot(pts[vs, 0], pts[vs, 1])))

    grew = 0
    for i in range(300):
        state = replica_state(91, i)
        small = sample_thick_loop(disc12, disc12.origin, 0.4, state)
        extra = sample_thick_loop(disc12, disc12.origin, 0.6, state)
        r_small = radius(small)
        union_visits = np.concatenate([small.visits, extra.visits])
        r_union = (float(np.max(np.hypot(pts[union_visits, 0],
                                         pts[union_visits, 1])))
                   if union_visits.size else 0.0)
        assert r_union >= r_small - 1e-15
        grew += r_union > r_small
    assert grew > 0


def test_empty_thick_loop_contributes_nothing(disc12):
    # find an empty sample at tiny a and check it has no vertices
    for i in range(50):
        thick = sample_thick_loop(disc12, disc12.origin, 1e-4,
                                  replica_state(13, i))
        if thick.n_bridges == 0:
            assert thick.vertex_set().size == 0
            return
    raise AssertionError("no empty thick loop at a=1e-4")
