"""Loop clusters, spins, crossing estimators and finite-r Minkowski masses.

Two loops are in the same cluster iff a chain of pairwise
vertex-intersecting loops connects them (shared vertex, not shared
edge).  Clusters carry i.i.d. fair spins.  Discrete circles are annular
vertex shells of width 2/N; the inner crossing target is the full disc
of radius r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from . import backend as default_backend
from . import mc
from .graph import LatticeDomain
from .loopsoup import (full_domain_return_probability, sample_loop_soup,
                       sample_thick_loop)


@dataclass
class ClusterPartition:
    n_vertices: int
    n_clusters: int
    loop_to_cluster: np.ndarray    # (n_loops,)
    vertex_to_cluster: np.ndarray  # (n_vertices,), -1 if loop-free
    spins: np.ndarray              # (n_clusters,) values in {-1, +1}
    domain: LatticeDomain | None = None
    _cache: dict = field(repr=False, default_factory=dict)

    @property
    def n_loops(self) -> int:
        return self.loop_to_cluster.shape[0]

    def cluster_vertices(self, c: int) -> np.ndarray:
        if not 0 <= c < self.n_clusters:
            raise ValueError(f"invalid cluster id {c}")
        return np.nonzero(self.vertex_to_cluster == c)[0]

    def cluster_sizes(self) -> np.ndarray:
        touched = self.vertex_to_cluster[self.vertex_to_cluster >= 0]
        return np.bincount(touched, minlength=self.n_clusters)

    def largest_cluster(self) -> int:
        """Cluster id with the most vertices (smallest id on ties)."""
        if self.n_clusters == 0:
            raise ValueError("no clusters")
        return int(np.argmax(self.cluster_sizes()))

    def vertex_spin(self, v: int) -> int:
        c = self.vertex_to_cluster[v]
        return int(self.spins[c]) if c >= 0 else 0


def _flatten_loops(loops) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(loops) + 1, dtype=np.int64)
    for j, lp in enumerate(loops):
        offsets[j + 1] = offsets[j] + len(lp)
    if len(loops):
        visits = np.concatenate([np.asarray(lp, dtype=np.int32) for lp in loops])
    else:
        visits = np.empty(0, dtype=np.int32)
    return offsets, visits


def build_clusters(loops, n_vertices: int, state=None, kernels=None,
                   domain: LatticeDomain | None = None) -> ClusterPartition:
    """Partition loops (vertex index lists) into clusters and draw spins.

    Spins are i.i.d. fair signs drawn from ``state`` (all +1 when no
    state is supplied, for purely structural uses).
    """
    kern = kernels if kernels is not None else default_backend
    offsets, visits = _flatten_loops(loops)
    loop_cluster, vertex_cluster, n_clusters = \
        kern.cluster_loops(offsets, visits, n_vertices)
    spins = _draw_spins(n_clusters, state, kern)
    return ClusterPartition(
        n_vertices=n_vertices, n_clusters=n_clusters,
        loop_to_cluster=loop_cluster, vertex_to_cluster=vertex_cluster,
        spins=spins, domain=domain)


def _draw_spins(n_clusters: int, state, kern) -> np.ndarray:
    if state is None or n_clusters == 0:
        return np.ones(n_clusters, dtype=np.int8)
    u = kern.uniforms(state, n_clusters)
    return np.where(u < 0.5, 1, -1).astype(np.int8)


def partition_sample(sample, state=None, kernels=None,
                     extra_loop=None) -> ClusterPartition:
    """Cluster a LoopSoupSample directly from its packed walks.

    ``extra_loop`` (a vertex array, e.g. a thick loop's visits) is
    appended as one additional loop with index ``n_loops``.
    """
    kern = kernels if kernels is not None else default_backend
    offsets, visits = sample.offsets, sample.visits
    if extra_loop is not None and len(extra_loop):
        extra = np.asarray(extra_loop, dtype=np.int32)
        offsets = np.concatenate([offsets, [offsets[-1] + extra.shape[0]]])
        visits = np.concatenate([visits, extra])
    loop_cluster, vertex_cluster, n_clusters = \
        kern.cluster_loops(offsets, visits, sample.domain.n_vertices)
    spins = _draw_spins(n_clusters, state, kern)
    return ClusterPartition(
        n_vertices=sample.domain.n_vertices, n_clusters=n_clusters,
        loop_to_cluster=loop_cluster, vertex_to_cluster=vertex_cluster,
        spins=spins, domain=sample.domain)


def crossing_event(partition: ClusterPartition, A, B) -> bool:
    """True iff one cluster's vertex set intersects both A and B."""
    vc = partition.vertex_to_cluster
    ca = vc[np.asarray(A, dtype=np.int64)]
    cb = vc[np.asarray(B, dtype=np.int64)]
    ca = np.unique(ca[ca >= 0])
    cb = np.unique(cb[cb >= 0])
    return bool(np.intersect1d(ca, cb, assume_unique=True).size)


# ---------------------------------------------------------------------------
# discrete circles / discs
# ---------------------------------------------------------------------------


def circle_shell(domain: LatticeDomain, radius: float) -> np.ndarray:
    """Vertices within lattice distance 1/N of the circle (width-2/N shell)."""
    pts = domain.points()
    dist = np.abs(np.hypot(pts[:, 0], pts[:, 1]) - radius)
    out = np.nonzero(dist <= 1.0 / domain.N)[0]
    if out.size == 0:
        raise ValueError(f"empty circle shell at radius {radius}")
    return out


def disc_vertices(domain: LatticeDomain, radius: float) -> np.ndarray:
    """Vertices inside the closed disc of the given radius."""
    pts = domain.points()
    out = np.nonzero(np.hypot(pts[:, 0], pts[:, 1]) <= radius)[0]
    if out.size == 0:
        raise ValueError(f"no vertices inside radius {radius}")
    return out


# ---------------------------------------------------------------------------
# crossing estimators
# ---------------------------------------------------------------------------

_E_INV = float(np.exp(-1.0))


def _zr_task(payload, seed, index):
    domain = payload["domain"]
    kern = default_backend
    state = default_backend.seed_state(seed)
    sample = sample_loop_soup(domain, payload["theta"], state, kern)
    part = partition_sample(sample, None, kern)
    shell_cl = part.vertex_to_cluster[payload["shell"]]
    shell_cl = np.unique(shell_cl[shell_cl >= 0])
    hits = []
    for disc_idx in payload["discs"]:
        dc = part.vertex_to_cluster[disc_idx]
        dc = np.unique(dc[dc >= 0])
        hits.append(int(np.intersect1d(shell_cl, dc, assume_unique=True).size > 0))
    return tuple(hits)


def estimate_Zr(domain: LatticeDomain, theta: float, r_values, replicas: int,
                seed: int, workers: int = 1):
    """Monte Carlo Z_r for each r: frequency of {e^-1 circle <-> r-disc}.

    Returns a list of (r, estimate, se, n) rows sharing the same soup
    replicas (coupled across r).
    """
    if domain.shape != "disc":
        raise ValueError("Z_r requires the unit disc domain")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    r_values = list(r_values)
    for r in r_values:
        if not 0.0 < r < _E_INV:
            raise ValueError(f"r must lie in (0, e^-1), got {r}")
        if r * domain.N < 1.0:
            raise ValueError(f"r = {r} below mesh resolution (r*N >= 1 required)")
    from .graph import return_probabilities
    return_probabilities(domain)  # warm the cache before shipping to workers
    payload = {
        "domain": domain,
        "theta": theta,
        "shell": circle_shell(domain, _E_INV),
        "discs": [disc_vertices(domain, r) for r in r_values],
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = mc.run_replicas(spec, _zr_task, payload)
    arr = np.asarray(records, dtype=np.float64)
    rows = []
    for j, r in enumerate(r_values):
        est = float(arr[:, j].mean())
        rows.append((r, est, mc.binomial_se(est, replicas), replicas))
    return rows


def _zgamma_task(payload, seed, index):
    domain = payload["domain"]
    kern = default_backend
    state = default_backend.seed_state(seed)
    sample = sample_loop_soup(domain, payload["theta"], state, kern)
    hits = []
    for a in payload["a_values"]:
        thick = sample_thick_loop(domain, domain.origin, a, state, kern)
        if thick.n_bridges == 0:
            hits.append(0)
            continue
        part = partition_sample(sample, None, kern, extra_loop=thick.visits)
        xi_cluster = part.loop_to_cluster[-1]
        shell_cl = part.vertex_to_cluster[payload["shell"]]
        hits.append(int(np.any(shell_cl == xi_cluster)))
    return tuple(hits)


def estimate_Zgamma(domain: LatticeDomain, theta: float, gamma_values,
                    replicas: int, seed: int, workers: int = 1):
    """Monte Carlo Z_gamma: origin connected to the e^-1 circle through
    the union of the soup and the a-thick loop at the origin (a = gamma^2/2).

    The origin counts as connected only through a nonempty thick loop.
    Returns a list of (gamma, estimate, se, n).
    """
    if domain.shape != "disc":
        raise ValueError("Z_gamma requires the unit disc domain")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    gamma_values = list(gamma_values)
    for g in gamma_values:
        if g <= 0:
            raise ValueError("gamma must be positive")
    from .graph import return_probabilities
    return_probabilities(domain)
    full_domain_return_probability(domain, domain.origin)  # warm cache
    payload = {
        "domain": domain,
        "theta": theta,
        "a_values": [g * g / 2.0 for g in gamma_values],
        "shell": circle_shell(domain, _E_INV),
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = mc.run_replicas(spec, _zgamma_task, payload)
    arr = np.asarray(records, dtype=np.float64)
    rows = []
    for j, g in enumerate(gamma_values):
        est = float(arr[:, j].mean())
        rows.append((g, est, mc.binomial_se(est, replicas), replicas))
    return rows


def _zero_truncated_poisson(u: float, lam: float) -> int:
    """Inversion sampler for Poisson(lam) conditioned >= 1."""
    norm = math.expm1(lam)  # e^lam - 1
    p = lam
    acc = p
    k = 1
    while u * norm > acc and k < 10_000:
        k += 1
        p = p * lam / k
        acc += p
    return k


def _zgamma_cond_task(payload, seed, index):
    domain = payload["domain"]
    kern = default_backend
    state = default_backend.seed_state(seed)
    sample = sample_loop_soup(domain, payload["theta"], state, kern)
    hits = []
    for a, lam in zip(payload["a_values"], payload["lams"]):
        u = float(kern.uniforms(state, 1)[0])
        k = _zero_truncated_poisson(u, lam)
        thick = sample_thick_loop(domain, domain.origin, a, state, kern,
                                  n_bridges=k)
        part = partition_sample(sample, None, kern, extra_loop=thick.visits)
        xi_cluster = part.loop_to_cluster[-1]
        shell_cl = part.vertex_to_cluster[payload["shell"]]
        hits.append(int(np.any(shell_cl == xi_cluster)))
    return tuple(hits)


def estimate_Zgamma_conditioned(domain: LatticeDomain, theta: float,
                                gamma_values, replicas: int, seed: int,
                                workers: int = 1):
    """Variance-reduced Z_gamma: analytic void probability times the
    Monte Carlo frequency of connection given a nonempty thick loop.

    Same estimand as ``estimate_Zgamma`` (the void factor 1 - e^-lam is
    exact), with the thick-loop count drawn zero-truncated and one soup
    shared across all gamma values.  Returns rows
    (gamma, z_estimate, z_se, n, conditional, conditional_se).
    """
    if domain.shape != "disc":
        raise ValueError("Z_gamma requires the unit disc domain")
    gamma_values = list(gamma_values)
    from .graph import return_probabilities
    return_probabilities(domain)
    r0 = full_domain_return_probability(domain, domain.origin)
    a_values = [g * g / 2.0 for g in gamma_values]
    lams = [a * r0 / (1.0 - r0) for a in a_values]
    payload = {
        "domain": domain, "theta": theta, "a_values": a_values,
        "lams": lams, "shell": circle_shell(domain, _E_INV),
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = mc.run_replicas(spec, _zgamma_cond_task, payload)
    arr = np.asarray(records, dtype=np.float64)
    rows = []
    for j, (g, lam) in enumerate(zip(gamma_values, lams)):
        cond = float(arr[:, j].mean())
        cond_se = mc.binomial_se(cond, replicas)
        void = -math.expm1(-lam)  # 1 - e^-lam
        rows.append((g, void * cond, void * cond_se, replicas, cond, cond_se))
    return rows


# ---------------------------------------------------------------------------
# finite-r Minkowski estimator
# ---------------------------------------------------------------------------


def minkowski_estimate(partition: ClusterPartition, cluster_id: int,
                       r: float, Zr: float) -> float:
    """Discrete mu_{k,r}: (1/Zr) (1/N^2) #{x in D_N : dist(x, C_k) < r}.

    Distances are Euclidean between lattice points (exact distance
    transform over the occupancy grid).
    """
    if Zr <= 0:
        raise ValueError("Zr must be positive")
    if r <= 0:
        raise ValueError("r must be positive")
    if partition.domain is None:
        raise ValueError("partition carries no domain")
    members = partition.cluster_vertices(cluster_id)
    if members.size == 0:
        raise ValueError(f"cluster {cluster_id} has no vertices")
    domain = partition.domain
    key = ("edt", cluster_id)
    if key not in partition._cache:
        grid = domain.occupancy_grid()
        mask = np.zeros_like(grid, dtype=bool)
        imin, jmin = domain._grid_off
        ci = domain.coords[members, 0] - imin
        cj = domain.coords[members, 1] - jmin
        mask[ci, cj] = True
        dist = scipy.ndimage.distance_transform_edt(~mask)
        gi = domain.coords[:, 0] - imin
        gj = domain.coords[:, 1] - jmin
        # per-vertex distance to the cluster, in lattice units
        partition._cache[key] = dist[gi, gj]
    dist_v = partition._cache[key]
    count = int(np.count_nonzero(dist_v < r * domain.N))
    return count / (Zr * domain.N**2)
