"""Pure-Python sampling kernels.

This module is the reference implementation of the hot kernels; the
compiled extension ``loopfield._kernels`` is a line-by-line twin and must
produce bit-identical output for identical ``(state, arguments)``.  Keep
the two in sync: every random draw, every floating-point expression and
its evaluation order is part of the contract (see
``tests/test_backend_parity.py``).

Random number generation is xoshiro256++ with SplitMix64 seeding.  The
generator state is a 4-element ``uint64`` array owned by the caller and
advanced in place, so one replica can thread a single stream through
several kernel calls.

Distribution samplers (all consuming the stream in documented order):

* uniform:      ``(next() >> 11) * 2**-53``            -> [0, 1)
* uniform_pos:  ``((next() >> 11) + 1) * 2**-53``      -> (0, 1]
* normal:       Marsaglia polar method, no caching (the second value of
                an accepted pair is discarded).
* gamma(shape): Marsaglia-Tsang squeeze for shape >= 1, with the
                ``G(a) = G(a+1) * U^(1/a)`` boost below 1.
* poisson(lam): Knuth multiplication below 10, Hormann's PTRS above.
"""

from __future__ import annotations

import math

import numpy as np

COMPILED = False

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Per-(vertex, return count) Poisson rates below this value are skipped;
# the truncated tail mass is ~1e-16/(1-r), far below statistical
# resolution of any test in the suite.
RATE_CUTOFF = 1e-16

DEFAULT_STEP_CAP = 10_000_000


class SamplerStarvation(RuntimeError):
    """Excursion rejection sampling exceeded the per-attempt step cap."""

    def __init__(self, vertex: int):
        super().__init__(f"excursion sampler starved at vertex index {vertex}")
        self.vertex = vertex


# ---------------------------------------------------------------------------
# seeding / raw generator
# ---------------------------------------------------------------------------


def _splitmix64(z: int) -> tuple[int, int]:
    """One SplitMix64 step: (output, advanced state)."""
    z = (z + _GOLDEN) & _MASK
    x = z
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK, z


def seed_state(seed: int) -> np.ndarray:
    """Initial xoshiro256++ state from a 64-bit seed via SplitMix64."""
    state = np.empty(4, dtype=np.uint64)
    z = seed & _MASK
    for i in range(4):
        value, z = _splitmix64(z)
        state[i] = value
    return state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class _Rng:
    """xoshiro256++ with the distribution samplers used by the kernels."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, state: np.ndarray):
        self.s0 = int(state[0])
        self.s1 = int(state[1])
        self.s2 = int(state[2])
        self.s3 = int(state[3])

    def store(self, state: np.ndarray) -> None:
        state[0] = self.s0
        state[1] = self.s1
        state[2] = self.s2
        state[3] = self.s3

    def next_raw(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s0 + s3) & _MASK, 23) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        return (self.next_raw() >> 11) * 1.1102230246251565e-16

    def uniform_pos(self) -> float:
        return ((self.next_raw() >> 11) + 1) * 1.1102230246251565e-16

    def normal(self) -> float:
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if s >= 1.0 or s == 0.0:
                continue
            return u * math.sqrt(-2.0 * math.log(s) / s)

    def exponential(self, mean: float) -> float:
        return -mean * math.log(self.uniform_pos())

    def gamma(self, shape: float) -> float:
        if shape < 1.0:
            g = self.gamma(shape + 1.0)
            u = self.uniform_pos()
            return g * math.pow(u, 1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / (3.0 * math.sqrt(d))
        while True:
            x = self.normal()
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.uniform_pos()
            x2 = x * x
            if u < 1.0 - 0.0331 * x2 * x2:
                return d * v
            if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
                return d * v

    def poisson(self, lam: float) -> int:
        if lam <= 0.0:
            return 0
        if lam < 10.0:
            lim = math.exp(-lam)
            k = 0
            p = 1.0
            while True:
                k += 1
                p = p * self.uniform()
                if p <= lim:
                    return k - 1
        # PTRS (Hormann 1993), exact transformed rejection for lam >= 10.
        b = 0.931 + 2.53 * math.sqrt(lam)
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        v_r = 0.9277 - 3.6224 / (b - 2.0)
        log_lam = math.log(lam)
        while True:
            u = self.uniform() - 0.5
            v = self.uniform()
            us = 0.5 - abs(u)
            k = int(math.floor((2.0 * a / us + b) * u + lam + 0.43))
            if us >= 0.07 and v <= v_r:
                return k
            if k < 0 or (us < 0.013 and v > us):
                continue
            if (math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
                    <= k * log_lam - lam - math.lgamma(k + 1.0)):
                return k


# ---------------------------------------------------------------------------
# bulk draws
# ---------------------------------------------------------------------------


def uniforms(state: np.ndarray, n: int) -> np.ndarray:
    rng = _Rng(state)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = rng.uniform()
    rng.store(state)
    return out


def normals(state: np.ndarray, n: int) -> np.ndarray:
    rng = _Rng(state)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = rng.normal()
    rng.store(state)
    return out


def gammas(state: np.ndarray, n: int, shape: float, scale: float) -> np.ndarray:
    rng = _Rng(state)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = scale * rng.gamma(shape)
    rng.store(state)
    return out


# ---------------------------------------------------------------------------
# loop soup
# ---------------------------------------------------------------------------


def sample_soup(state, nbr, rets, theta, step_cap=DEFAULT_STEP_CAP):
    """Sample one continuous-time loop soup realization.

    ``nbr`` is the flattened (n, 4) neighbor table (-1 marks a killed
    direction), ``rets`` the per-vertex first-return probabilities in the
    sequentially punctured domains (earlier vertices removed).

    Returns ``(offsets, visits, returns, holdings, trivial, occupation)``:
    loop ``j`` visits ``visits[offsets[j]:offsets[j+1]]`` (a closed walk,
    first == last == root) and its per-visit exponential holding times are
    ``holdings[offsets[j]-j : offsets[j+1]-(j+1)]``.  ``occupation`` already
    includes the Gamma(theta, 1/4) trivial-loop field ``trivial``.

    Draw order per vertex ``i`` (ascending): for k = 1, 2, ... while
    theta*r^k/k >= RATE_CUTOFF draw the Poisson loop count, then for each
    loop its k rejection-sampled first-return excursions followed by its
    holding times.  After all vertices, one Gamma(theta, 1/4) draw per
    vertex (ascending) for the trivial field.
    """
    n = rets.shape[0]
    nbr = np.asarray(nbr, dtype=np.int32).tolist()
    rets = np.asarray(rets, dtype=np.float64).tolist()
    rng = _Rng(state)
    occupation = [0.0] * n
    trivial = np.empty(n, dtype=np.float64)
    visits: list[int] = []
    holdings: list[float] = []
    offsets: list[int] = [0]
    loop_returns: list[int] = []

    for i in range(n):
        r = rets[i]
        if r <= 0.0:
            continue
        lam = theta * r
        k = 1
        while lam >= RATE_CUTOFF:
            m = rng.poisson(lam)
            for _ in range(m):
                start = len(visits)
                visits.append(i)
                for _e in range(k):
                    exc_start = len(visits)
                    pos = i
                    steps = 0
                    while True:
                        u = rng.uniform()
                        nxt = nbr[4 * pos + int(4.0 * u)]
                        steps += 1
                        if steps > step_cap:
                            raise SamplerStarvation(i)
                        if nxt == i:
                            visits.append(i)
                            break
                        if nxt < i:  # killed (-1) or earlier vertex
                            del visits[exc_start:]
                            pos = i
                            steps = 0
                            continue
                        visits.append(nxt)
                        pos = nxt
                nsteps = len(visits) - start - 1
                for j in range(nsteps):
                    h = -0.25 * math.log(rng.uniform_pos())
                    holdings.append(h)
                    occupation[visits[start + j]] += h
                offsets.append(len(visits))
                loop_returns.append(k)
            lam = lam * r * k / (k + 1)
            k += 1

    for i in range(n):
        t = 0.25 * rng.gamma(theta)
        trivial[i] = t
        occupation[i] += t

    rng.store(state)
    return (
        np.asarray(offsets, dtype=np.int64),
        np.asarray(visits, dtype=np.int32),
        np.asarray(loop_returns, dtype=np.int32),
        np.asarray(holdings, dtype=np.float64),
        trivial,
        np.asarray(occupation, dtype=np.float64),
    )


def sample_thick_loop(state, nbr, root, r_root, a, step_cap=DEFAULT_STEP_CAP,
                      n_bridges=-1):
    """Sample the a-thick loop at ``root`` in the full domain.

    Bridge count is Poisson(a*r/(1-r)); each bridge concatenates a
    Geometric(1-r) number of rejection-sampled first-return excursions.
    Returns ``(offsets, visits)`` with one closed walk per bridge.

    ``n_bridges >= 0`` forces the bridge count (no Poisson draw), for
    estimators that condition on the count externally.
    """
    nbr = np.asarray(nbr, dtype=np.int32).tolist()
    rng = _Rng(state)
    visits: list[int] = []
    offsets: list[int] = [0]
    if r_root > 0.0:
        if n_bridges >= 0:
            nb = n_bridges
        else:
            lam = a * r_root / (1.0 - r_root)
            nb = rng.poisson(lam)
        log_r = math.log(r_root)
        for _b in range(nb):
            u = rng.uniform_pos()
            k = 1 + int(math.log(u) / log_r)
            visits.append(root)
            for _e in range(k):
                exc_start = len(visits)
                pos = root
                steps = 0
                while True:
                    uu = rng.uniform()
                    nxt = nbr[4 * pos + int(4.0 * uu)]
                    steps += 1
                    if steps > step_cap:
                        raise SamplerStarvation(root)
                    if nxt == root:
                        visits.append(root)
                        break
                    if nxt < 0:
                        del visits[exc_start:]
                        pos = root
                        steps = 0
                        continue
                    visits.append(nxt)
                    pos = nxt
            offsets.append(len(visits))
    rng.store(state)
    return (
        np.asarray(offsets, dtype=np.int64),
        np.asarray(visits, dtype=np.int32),
    )


# ---------------------------------------------------------------------------
# squared Bessel path
# ---------------------------------------------------------------------------


def besq_path(state, theta, n_steps, dt):
    """Exact-transition BESQ(2*theta) path from 0 on a uniform dt grid.

    Transition: given R_t = v, R_{t+dt} = 2*dt*Gamma(theta + K, 1) with
    K ~ Poisson(v / (2*dt)); this reproduces the Gamma(theta, 2t) marginal
    exactly (noncentral chi-squared mixture with 2*theta degrees of
    freedom).
    """
    rng = _Rng(state)
    out = np.empty(n_steps + 1, dtype=np.float64)
    out[0] = 0.0
    v = 0.0
    inv = 1.0 / (2.0 * dt)
    for s in range(1, n_steps + 1):
        kp = rng.poisson(v * inv)
        v = 2.0 * dt * rng.gamma(theta + kp)
        out[s] = v
    rng.store(state)
    return out


# ---------------------------------------------------------------------------
# loop clustering (union-find; deterministic, no randomness)
# ---------------------------------------------------------------------------


def cluster_loops(offsets, visits, n_vertices):
    """Union-find partition of loops into vertex-sharing clusters.

    Returns ``(loop_cluster, vertex_cluster, n_clusters)``: cluster ids are
    dense, numbered by first appearance in loop order; ``vertex_cluster``
    is -1 for vertices visited by no loop.
    """
    offs = np.asarray(offsets, dtype=np.int64).tolist()
    vis = np.asarray(visits, dtype=np.int32).tolist()
    n_loops = len(offs) - 1
    parent = list(range(n_loops))
    first_loop = [-1] * n_vertices

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for j in range(n_loops):
        for p in range(offs[j], offs[j + 1]):
            v = vis[p]
            if first_loop[v] < 0:
                first_loop[v] = j
            else:
                ra, rb = find(j), find(first_loop[v])
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb

    loop_cluster = np.empty(n_loops, dtype=np.int64)
    label: dict[int, int] = {}
    for j in range(n_loops):
        root = find(j)
        if root not in label:
            label[root] = len(label)
        loop_cluster[j] = label[root]

    vertex_cluster = np.full(n_vertices, -1, dtype=np.int64)
    lc = loop_cluster.tolist()
    for j in range(n_loops):
        c = lc[j]
        for p in range(offs[j], offs[j + 1]):
            vertex_cluster[vis[p]] = c

    return loop_cluster, vertex_cluster, len(label)
