"""Statistical verification of isomorphism identities.

``lejan_check`` compares, at theta = 1/2, the soup occupation with half
the squared GFF (marginal law and Wick-square covariance against
(1/2) G(x,y)^2).  ``bfs_dynkin_check`` verifies
E[phi_x phi_y F(phi^2/2)] = G(x,y) E[F(phi^2/2 + ell_p)] on tiny
weighted graphs with F(ell) = exp(-sum_v ell_v), where p is a path from
x to y drawn from the normalized bridge measure: the jump chain from x
conditioned to hit y (rejection sampling), followed by a Geometric
number of first-return excursions at y, every holding period carrying an
Exp(mean 1/q_v) local time (q_v = total jump-plus-killing rate at v; the
lattice case has q = 4 everywhere).

The two-vertex fixture has a closed-form oracle: both sides equal
det(I + G)^(-1/2) G'(x,y) with G' = (Q + I - W)^(-1), the Green function
of the chain with an extra unit killing rate everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as default_backend
from . import mc
from .graph import LatticeDomain, green_function
from .loopsoup import sample_loop_soup


@dataclass
class TinyGraph:
    """Weighted graph with killing, at most 6 vertices, transient."""

    weights: np.ndarray
    killing: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        kappa = np.asarray(self.killing, dtype=np.float64)
        n = w.shape[0]
        if n > 6:
            raise ValueError("TinyGraph supports at most 6 vertices")
        if w.shape != (n, n) or not np.allclose(w, w.T):
            raise ValueError("weights must be a symmetric square matrix")
        if np.any(w < 0) or np.any(np.diag(w) != 0):
            raise ValueError("weights must be nonnegative with zero diagonal")
        if np.any(kappa < 0) or not np.any(kappa > 0):
            raise ValueError("killing rates must be nonnegative, some positive")
        self.weights = w
        self.killing = kappa
        q = w.sum(axis=1) + kappa
        if np.any(q <= 0):
            raise ValueError("isolated vertex without killing")
        self.q = q
        self.P = w / q[:, None]
        rho = max(abs(np.linalg.eigvals(self.P)))
        if rho >= 1.0 - 1e-12:
            raise ValueError("graph is not transient (spectral radius >= 1)")

    @property
    def n_vertices(self) -> int:
        return self.weights.shape[0]

    def green(self) -> np.ndarray:
        Q = np.diag(self.q)
        return np.linalg.inv(Q - self.weights)

    def green_killed(self) -> np.ndarray:
        """Green function with an extra unit killing rate at every vertex."""
        Q = np.diag(self.q + 1.0)
        return np.linalg.inv(Q - self.weights)

    def return_probability(self, y: int) -> float:
        g = self.green()
        return 1.0 - 1.0 / (self.q[y] * g[y, y])


def builtin_graph(name: str) -> TinyGraph:
    if name == "k2":
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        return TinyGraph(weights=w, killing=np.array([2.0, 2.0]))
    if name == "path3":
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 1.0
        w[1, 2] = w[2, 1] = 1.0
        return TinyGraph(weights=w, killing=np.array([1.0, 1.0, 1.0]))
    raise ValueError(f"unknown builtin graph {name!r}")


# ---------------------------------------------------------------------------
# BFS-Dynkin on tiny graphs
# ---------------------------------------------------------------------------


class _TinyRng:
    """Draws the tiny-graph walk and local times from a kernel stream."""

    def __init__(self, state, kern):
        self.state = state
        self.kern = kern
        self._buf = None
        self._pos = 0

    def uniform(self) -> float:
        if self._buf is None or self._pos == len(self._buf):
            self._buf = self.kern.uniforms(self.state, 256)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)


def _walk_step(graph: TinyGraph, v: int, u: float) -> int:
    """Next vertex, or -1 for death; u uniform in [0,1)."""
    acc = 0.0
    scale = graph.q[v]
    for w in range(graph.n_vertices):
        acc += graph.weights[v, w] / scale
        if u < acc:
            return w
    return -1


def _sample_bridge_visits(graph: TinyGraph, x: int, y: int, r_y: float,
                          rng: _TinyRng) -> list[int]:
    """Holding-period visit list of a normalized mu^{x,y} path."""
    while True:  # walk from x conditioned to hit y before killing
        visits = [x]
        v = x
        while True:
            w = _walk_step(graph, v, rng.uniform())
            if w < 0:
                visits = None
                break
            visits.append(w)
            v = w
            if v == y:
                break
        if visits is not None:
            break
    # K >= 0 extra first-return excursions at y
    if r_y > 0.0:
        u = rng.uniform()
        while u <= 0.0:
            u = rng.uniform()
        k = int(math.floor(math.log(u) / math.log(r_y)))
    else:
        k = 0
    for _ in range(k):
        while True:
            exc = []
            v = y
            dead = False
            while True:
                w = _walk_step(graph, v, rng.uniform())
                if w < 0:
                    dead = True
                    break
                exc.append(w)
                v = w
                if v == y:
                    break
            if not dead:
                visits.extend(exc)
                break
    return visits


def _bfs_task(payload, seed, index):
    graph: TinyGraph = payload["graph"]
    x, y = payload["x"], payload["y"]
    kern = default_backend
    state = kern.seed_state(seed)
    L = payload["chol"]
    n = graph.n_vertices

    phi = L @ kern.normals(state, n)
    lhs = phi[x] * phi[y] * math.exp(-0.5 * float(np.dot(phi, phi)))

    phi2 = L @ kern.normals(state, n)
    rng = _TinyRng(state, kern)
    visits = _sample_bridge_visits(graph, x, y, payload["r_y"], rng)
    ell = 0.5 * phi2 * phi2
    for v in visits:
        ell[v] += -(1.0 / graph.q[v]) * math.log(1.0 - rng.uniform())
    rhs_f = math.exp(-float(ell.sum()))
    return lhs, rhs_f


def bfs_dynkin_check(graph: TinyGraph, x: int, y: int, replicas: int,
                     seed: int, workers: int = 1) -> dict:
    """Monte Carlo check of the BFS-Dynkin identity with F = exp(-sum ell).

    Returns lhs/rhs estimates with standard errors and, for the 2-vertex
    fixture (or any graph), the closed-form Gaussian value of both sides.
    """
    if x == y:
        raise ValueError("x and y must differ")
    G = graph.green()
    if G[x, y] <= 0:
        raise ValueError("x and y are not connected")
    payload = {
        "graph": graph, "x": x, "y": y,
        "chol": np.linalg.cholesky(G),
        "r_y": graph.return_probability(y),
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = np.asarray(mc.run_replicas(spec, _bfs_task, payload))
    lhs, lhs_se = mc.mean_se(records[:, 0])
    rhs_f, rhs_f_se = mc.mean_se(records[:, 1])
    gxy = float(G[x, y])
    closed = (np.linalg.det(np.eye(graph.n_vertices) + G) ** -0.5
              * graph.green_killed()[x, y])
    return {
        "lhs": lhs, "lhs_se": lhs_se,
        "rhs": gxy * rhs_f, "rhs_se": gxy * rhs_f_se,
        "green_xy": gxy,
        "closed_form": float(closed),
    }


# ---------------------------------------------------------------------------
# Le Jan identification at theta = 1/2
# ---------------------------------------------------------------------------


def _lejan_soup_task(payload, seed, index):
    kern = default_backend
    state = kern.seed_state(seed)
    sample = sample_loop_soup(payload["domain"], 0.5, state, kern)
    px, py = payload["probes"]
    return float(sample.occupation[px]), float(sample.occupation[py])


def _lejan_gff_task(payload, seed, index):
    kern = default_backend
    state = kern.seed_state(seed)
    phi = payload["chol"] @ kern.normals(state, payload["n"])
    px, py = payload["probes"]
    return float(phi[px]), float(phi[py])


def lejan_check(domain: LatticeDomain, replicas: int, seed: int,
                workers: int = 1, theta: float = 0.5, probes=None,
                gff_replicas: int | None = None) -> dict:
    """Compare soup occupation with phi^2/2 at theta = 1/2.

    Marginal: two-sample KS between ell_x and phi_x^2/2.  Covariance:
    E[:ell_x::ell_y:] and E[(1/2):phi_x^2: (1/2):phi_y^2:] against
    (1/2) G(x,y)^2, each within its MC error.
    """
    if theta != 0.5:
        raise ValueError("the Le Jan identification check requires theta = 1/2")
    green = green_function(domain, mode="dense")
    if probes is None:
        px = domain.origin
        py = domain.index_of(2, 0)
        if py < 0:
            raise ValueError("default probe (2/N, 0) not in domain")
        probes = (px, py)
    px, py = probes
    gxx, gyy, gxy = green.diag(px), green.diag(py), green.value(px, py)

    from .graph import return_probabilities
    return_probabilities(domain)
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    soup = np.asarray(mc.run_replicas(
        spec, _lejan_soup_task,
        {"domain": domain, "probes": probes}, stream=0))

    gff_spec = mc.RunSpec(master_seed=seed,
                          replicas=gff_replicas or replicas, workers=workers)
    gff = np.asarray(mc.run_replicas(
        gff_spec, _lejan_gff_task,
        {"chol": green.cholesky(), "n": domain.n_vertices, "probes": probes},
        stream=1))

    ks = mc.ks_two_sample(soup[:, 0], 0.5 * gff[:, 0] ** 2)

    target = 0.5 * gxy**2
    soup_prod = (soup[:, 0] - 0.5 * gxx) * (soup[:, 1] - 0.5 * gyy)
    soup_cov, soup_cov_se = mc.mean_se(soup_prod)
    gff_prod = (0.5 * (gff[:, 0] ** 2 - gxx)) * (0.5 * (gff[:, 1] ** 2 - gyy))
    gff_cov, gff_cov_se = mc.mean_se(gff_prod)

    return {
        "probes": (int(px), int(py)),
        "green": {"xx": gxx, "yy": gyy, "xy": gxy},
        "ks_marginal": ks,
        "target_cov": target,
        "soup_cov": soup_cov, "soup_cov_se": soup_cov_se,
        "gff_cov": gff_cov, "gff_cov_se": gff_cov_se,
    }
