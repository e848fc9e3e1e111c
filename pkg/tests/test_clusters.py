import math

import numpy as np
import pytest

from loopfield import backend
from loopfield.clusters import (build_clusters, circle_shell, crossing_event,
                                disc_vertices, estimate_Zgamma,
                                estimate_Zgamma_conditioned, estimate_Zr,
                                minkowski_estimate, partition_sample)
from loopfield.graph import build_domain
from loopfield.loopsoup import sample_loop_soup
from loopfield.rng import replica_state


def brute_force_closure(loops, n_vertices):
    """Transitive closure of the pairwise-intersection graph (oracle)."""
    sets = [set(map(int, lp)) for lp in loops]
    n = len(sets)
    labels = list(range(n))

    def root(x):
        while labels[x] != x:
            x = labels[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if sets[i] & sets[j]:
                ri, rj = root(i), root(j)
                if ri != rj:
                    labels[max(ri, rj)] = min(ri, rj)
    return [root(i) for i in range(n)]


def canonical(partition_labels):
    seen = {}
    out = []
    for lab in partition_labels:
        if lab not in seen:
            seen[lab] = len(seen)
        out.append(seen[lab])
    return out


def test_two_loops_sharing_vertex():
    part = build_clusters([[0, 1, 2], [2, 5]], 8)
    assert part.n_clusters == 1
    assert part.loop_to_cluster.tolist() == [0, 0]


def test_two_disjoint_loops():
    part = build_clusters([[0, 1], [4, 5]], 8)
    assert part.n_clusters == 2
    assert sorted(part.cluster_vertices(0).tolist()) == [0, 1]


def test_random_instances_match_closure_oracle():
    rng = np.random.default_rng(8)
    for trial in range(25):
        n_loops = int(rng.integers(2, 200))
        loops = [rng.integers(0, 200, size=rng.integers(1, 8)).tolist()
                 for _ in range(n_loops)]
        part = build_clusters(loops, 200)
        oracle = canonical(brute_force_closure(loops, 200))
        assert canonical(part.loop_to_cluster.tolist()) == oracle


def test_crossing_trivial_cases():
    part = build_clusters([[3, 4]], 10)
    assert crossing_event(part, [3], [3])          # A=B touched by a loop
    assert crossing_event(part, [3, 9], [4])
    assert not crossing_event(part, [9], [4])
    empty = build_clusters([], 10)
    assert not crossing_event(empty, [1, 2], [3])  # empty soup


def test_crossing_against_closure():
    rng = np.random.default_rng(3)
    for _ in range(10):
        loops = [rng.integers(0, 60, size=rng.integers(1, 6)).tolist()
                 for _ in range(50)]
        part = build_clusters(loops, 60)
        oracle = brute_force_closure(loops, 60)
        A = rng.integers(0, 60, size=4)
        B = rng.integers(0, 60, size=4)
        # oracle crossing: some loop-cluster touching both
        touch_a = {oracle[j] for j, lp in enumerate(loops)
                   if set(lp) & set(A.tolist())}
        touch_b = {oracle[j] for j, lp in enumerate(loops)
                   if set(lp) & set(B.tolist())}
        assert crossing_event(part, A, B) == bool(touch_a & touch_b)


def test_spin_invariants():
    state = backend.seed_state(5)
    part = build_clusters([[i, i + 1] for i in range(0, 40, 2)], 60, state)
    assert part.spins.shape[0] == part.n_clusters
    assert set(np.unique(part.spins)) <= {-1, 1}
    # spins are balanced on average (many independent draws)
    spins = []
    for seed in range(200):
        st = backend.seed_state(seed)
        p = build_clusters([[2 * i] for i in range(20)], 60, st)
        spins.extend(p.spins.tolist())
    mean = np.mean(spins)
    assert abs(mean) < 3.0 / math.sqrt(len(spins))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def disc16():
    return build_domain("disc", 16)


def test_zr_monotone_in_r_with_shared_replicas(disc16):
    rows = estimate_Zr(disc16, 0.5, [math.exp(-1) * 0.999, 0.2, 0.1],
                       replicas=150, seed=3)
    # same replicas: estimates are pathwise coupled, monotone in r
    assert rows[0][1] >= rows[1][1] >= rows[2][1]


def test_zr_validates_inputs(disc16):
    with pytest.raises(ValueError):
        estimate_Zr(disc16, 0.5, [0.5], replicas=10, seed=1)   # r >= e^-1
    with pytest.raises(ValueError):
        estimate_Zr(disc16, 0.5, [0.01], replicas=10, seed=1)  # r*N < 1
    with pytest.raises(ValueError):
        estimate_Zr(disc16, 0.5, [0.2], replicas=0, seed=1)
    square = build_domain("square", 16)
    with pytest.raises(ValueError):
        estimate_Zr(square, 0.5, [0.2], replicas=10, seed=1)


def test_crossing_monotone_under_superposition(disc16):
    # adding an independent soup can only create crossings (FKG coupling)
    shell = circle_shell(disc16, math.exp(-1.0))
    disc = disc_vertices(disc16, 0.15)
    base_hits = 0
    union_hits = 0
    for i in range(120):
        s1 = sample_loop_soup(disc16, 0.4, replica_state(17, i, stream=0))
        s2 = sample_loop_soup(disc16, 0.3, replica_state(17, i, stream=1))
        p1 = partition_sample(s1)
        base = crossing_event(p1, shell, disc)
        merged = (s1.loop_vertex_sets() + s2.loop_vertex_sets())
        pu = build_clusters(merged, disc16.n_vertices)
        union = crossing_event(pu, shell, disc)
        assert union >= base  # pathwise containment
        base_hits += base
        union_hits += union
    assert union_hits > base_hits  # superposition genuinely adds crossings


def test_zgamma_zero_gamma_limit(disc16):
    rows = estimate_Zgamma(disc16, 0.5, [1e-4], replicas=300, seed=5)
    assert rows[0][1] <= 0.01


def test_zgamma_conditioned_matches_plain(disc16):
    # same estimand: analytic-void conditioned estimator agrees with the
    # plain frequency within joint MC error
    plain = estimate_Zgamma(disc16, 0.5, [0.8], replicas=2500, seed=31)
    cond = estimate_Zgamma_conditioned(disc16, 0.5, [0.8], replicas=2500,
                                       seed=32)
    _g, pz, pse, _n = plain[0]
    _g, cz, cse, _n, _c, _cs = cond[0]
    assert abs(pz - cz) < 3.0 * math.hypot(pse, cse)


def test_zgamma_slope_ordering_example():
    # slope of log Z_gamma vs log gamma over {0.2, 0.4, 0.8}: positive,
    # and larger at theta = 0.25 than at theta = 0.5 (ordering check;
    # needs N = 32 for the scales to separate)
    import loopfield.mc as mc

    dom = build_domain("disc", 32)
    slopes = {}
    for theta, seed in ((0.25, 41), (0.5, 42)):
        rows = estimate_Zgamma_conditioned(dom, theta, [0.2, 0.4, 0.8],
                                           replicas=2500, seed=seed)
        xs = [math.log(g) for g, *_ in rows]
        ys = [math.log(z) for _g, z, *_ in rows]
        ws = [1.0 / (zse / z) ** 2 for _g, z, zse, *_ in rows]
        slope, _b, _se = mc.fit_slope(xs, ys, ws)
        assert slope > 0.0
        slopes[theta] = slope
    assert slopes[0.25] > slopes[0.5]


def test_zgamma_upper_bound_from_same_replicas(disc16):
    # Z_gamma <= P(thick loop nonempty): pathwise containment
    from loopfield.loopsoup import sample_thick_loop

    a = 0.08
    gamma = math.sqrt(2 * a)
    hits = 0
    nonempty = 0
    shell = circle_shell(disc16, math.exp(-1.0))
    for i in range(400):
        state = replica_state(23, i)
        sample = sample_loop_soup(disc16, 0.5, state)
        thick = sample_thick_loop(disc16, disc16.origin, a, state)
        if thick.n_bridges == 0:
            continue_hit = False
        else:
            part = partition_sample(sample, None, extra_loop=thick.visits)
            xi_cl = part.loop_to_cluster[-1]
            continue_hit = bool(np.any(part.vertex_to_cluster[shell] == xi_cl))
        hits += continue_hit
        nonempty += thick.n_bridges > 0
        assert hits <= nonempty
    assert nonempty > 0


# ---------------------------------------------------------------------------
# Minkowski estimator
# ---------------------------------------------------------------------------


def test_minkowski_covers_domain_for_huge_r(disc16):
    sample = sample_loop_soup(disc16, 0.5, backend.seed_state(2))
    part = partition_sample(sample)
    cid = part.largest_cluster()
    zr = 0.7
    mu = minkowski_estimate(part, cid, r=5.0, Zr=zr)
    area = disc16.n_vertices / disc16.N**2
    assert mu == pytest.approx(area / zr, rel=1e-12)


def test_minkowski_monotone_in_r(disc16):
    sample = sample_loop_soup(disc16, 0.5, backend.seed_state(6))
    part = partition_sample(sample)
    cid = part.largest_cluster()
    vals = [minkowski_estimate(part, cid, r, Zr=1.0)
            for r in (0.05, 0.1, 0.2, 0.5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_minkowski_errors(disc16):
    sample = sample_loop_soup(disc16, 0.5, backend.seed_state(2))
    part = partition_sample(sample)
    with pytest.raises(ValueError):
        minkowski_estimate(part, part.n_clusters + 5, 0.1, 1.0)
    with pytest.raises(ValueError):
        minkowski_estimate(part, 0, 0.1, 0.0)
    with pytest.raises(ValueError):
        minkowski_estimate(part, 0, -0.1, 1.0)


def test_circle_shell_width(disc16):
    shell = circle_shell(disc16, math.exp(-1.0))
    pts = disc16.points()[shell]
    dist = np.abs(np.hypot(pts[:, 0], pts[:, 1]) - math.exp(-1.0))
    assert np.all(dist <= 1.0 / disc16.N + 1e-12)
    assert shell.size > 0
