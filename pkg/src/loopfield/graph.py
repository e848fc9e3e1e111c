"""Lattice domains, discrete Green functions and the Gaussian free field.

A domain is the origin-connected component of the mesh-(1/N) lattice
points lying in the shape at distance >= 1/N from its boundary.  Both
membership tests are exact integer arithmetic: ``i^2 + j^2 <= (N-1)^2``
for the unit disc, ``max(|i|, |j|) <= N-1`` for the side-2 square.

Green normalization: G = (1/4) (I - P)^{-1} with P the killed interior
transition matrix, i.e. G(x, y) is the expected continuous-time
occupation of y for the rate-4 walk from x.  With this convention
G(x, x) = (1/2 pi) log N + O(1) in the bulk and the occupation field of
the theta-soup is marginally Gamma(theta, G(x, x)).

The per-vertex first-return probabilities of the sequentially punctured
domains (vertex order = lexicographic on (i, j); puncture all earlier
vertices) come from one banded Cholesky factorization in reverse vertex
order: eliminating the reversed order makes each pivot d the Dirichlet
operator conditioned on every later-ordered vertex removed, so
G_{D_i}(x_i, x_i) = 1/d and r_i = 1 - d/4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

MIN_MESH = 8
DENSE_MESH_LIMIT = 48  # full Green matrices (and hence GFF) only below this
DENSE_AUTO_VERTICES = 4200
CG_TOL = 1e-10

# neighbor slot order: E, W, N, S
_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class LatticeDomain:
    """Origin-connected lattice approximation of a planar shape."""

    shape: str
    N: int
    coords: np.ndarray          # (n, 2) int32 lattice coordinates (i, j)
    nbr: np.ndarray             # flat (4n,) int32; -1 marks a killed direction
    exit_degree: np.ndarray     # (n,) int8
    origin: int                 # index of the origin vertex
    _grid: np.ndarray = field(repr=False, default=None)
    _grid_off: tuple = field(repr=False, default=None)
    _cache: dict = field(repr=False, default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    def points(self) -> np.ndarray:
        """Vertex positions in domain coordinates (scaled by 1/N)."""
        return self.coords.astype(np.float64) / self.N

    def index_of(self, i: int, j: int) -> int:
        """Vertex index of lattice coordinate (i, j), or -1."""
        imin, jmin = self._grid_off
        gi, gj = i - imin, j - jmin
        if 0 <= gi < self._grid.shape[0] and 0 <= gj < self._grid.shape[1]:
            return int(self._grid[gi, gj])
        return -1

    def nearest_vertex(self, x: float, y: float) -> int:
        """Domain vertex closest to the point (x, y); deterministic ties."""
        pts = self.points()
        d2 = (pts[:, 0] - x) ** 2 + (pts[:, 1] - y) ** 2
        return int(np.argmin(d2))  # argmin takes the first (lowest index)

    def occupancy_grid(self) -> np.ndarray:
        """Boolean grid of domain membership (for distance transforms)."""
        return self._grid >= 0


def _candidates_disc(N: int):
    m = N - 1
    out = []
    for i in range(-m, m + 1):
        for j in range(-m, m + 1):
            if i * i + j * j <= m * m:
                out.append((i, j))
    return out


def _candidates_square(N: int):
    m = N - 1
    return [(i, j) for i in range(-m, m + 1) for j in range(-m, m + 1)]


def _assemble(shape: str, N: int, cands, origin_coord=(0, 0)) -> LatticeDomain:
    cand_set = set(cands)
    if origin_coord not in cand_set:
        raise ValueError("origin is not inside the domain")
    # origin-connected component by BFS
    seen = {origin_coord}
    queue = [origin_coord]
    while queue:
        ci, cj = queue.pop()
        for di, dj in _STEPS:
            nb = (ci + di, cj + dj)
            if nb in cand_set and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    coords = np.array(sorted(seen), dtype=np.int32)  # lexicographic order
    n = coords.shape[0]
    index = {(int(i), int(j)): k for k, (i, j) in enumerate(coords)}
    nbr = np.full(4 * n, -1, dtype=np.int32)
    for k in range(n):
        ci, cj = int(coords[k, 0]), int(coords[k, 1])
        for s, (di, dj) in enumerate(_STEPS):
            nbr[4 * k + s] = index.get((ci + di, cj + dj), -1)
    exit_degree = np.array(
        [int(np.sum(nbr[4 * k:4 * k + 4] < 0)) for k in range(n)],
        dtype=np.int8)

    imin, jmin = int(coords[:, 0].min()), int(coords[:, 1].min())
    gi = coords[:, 0] - imin
    gj = coords[:, 1] - jmin
    grid = np.full((int(gi.max()) + 1, int(gj.max()) + 1), -1, dtype=np.int64)
    grid[gi, gj] = np.arange(n)

    return LatticeDomain(
        shape=shape, N=N, coords=coords, nbr=nbr, exit_degree=exit_degree,
        origin=index[origin_coord], _grid=grid, _grid_off=(imin, jmin))


def build_domain(shape: str, N: int) -> LatticeDomain:
    """Lattice approximation of the unit disc or the side-2 square."""
    if N < MIN_MESH:
        raise ValueError(f"mesh N must be >= {MIN_MESH} (got {N})")
    if shape == "disc":
        cands = _candidates_disc(N)
    elif shape == "square":
        cands = _candidates_square(N)
    else:
        raise ValueError(f"unknown shape {shape!r} (expected 'disc' or 'square')")
    return _assemble(shape, N, cands)


def domain_from_points(points, N: int, origin_coord=(0, 0)) -> LatticeDomain:
    """Domain over an explicit candidate point set (test fixtures)."""
    return _assemble("custom", N, [tuple(p) for p in points], origin_coord)


# ---------------------------------------------------------------------------
# Green function
# ---------------------------------------------------------------------------


def _dirichlet_operator(domain: LatticeDomain) -> scipy.sparse.csr_matrix:
    """Sparse A = 4 I - adjacency; G = A^{-1}."""
    key = "A"
    if key not in domain._cache:
        n = domain.n_vertices
        nbr = domain.nbr
        rows, cols = [], []
        for k in range(n):
            for s in range(4):
                j = nbr[4 * k + s]
                if j >= 0:
                    rows.append(k)
                    cols.append(j)
        data = np.full(len(rows), -1.0)
        A = scipy.sparse.coo_matrix(
            (data, (rows, cols)), shape=(n, n)).tocsr()
        A = A + scipy.sparse.identity(n, format="csr") * 4.0
        domain._cache[key] = A
    return domain._cache[key]


class GreenTable:
    """Discrete Green function, dense or row-on-demand."""

    def __init__(self, domain: LatticeDomain, full: np.ndarray | None):
        self.domain = domain
        self.full = full
        self._rows: dict[int, np.ndarray] = {}
        self._chol = None

    @property
    def is_dense(self) -> bool:
        return self.full is not None

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        if i not in self._rows:
            A = _dirichlet_operator(self.domain)
            e = np.zeros(self.domain.n_vertices)
            e[i] = 1.0
            sol, info = scipy.sparse.linalg.cg(A, e, rtol=CG_TOL, atol=0.0,
                                               maxiter=20_000)
            if info != 0:
                raise RuntimeError(f"CG failed on Green row {i} (info={info})")
            self._rows[i] = sol
        return self._rows[i]

    def value(self, i: int, j: int) -> float:
        return float(self.row(i)[j])

    def diag(self, i: int) -> float:
        return self.value(i, i)

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor of the full matrix (dense tables only)."""
        if self.full is None:
            raise RuntimeError("Cholesky factor requires a dense GreenTable")
        if self._chol is None:
            try:
                self._chol = np.linalg.cholesky(self.full)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError("GreenTable is not positive definite "
                                   "(corrupted input)") from exc
        return self._chol


def green_function(domain: LatticeDomain, mode: str = "auto") -> GreenTable:
    """Green table for a domain.

    ``mode``: 'dense' inverts the Dirichlet operator (allowed for
    N <= 48 only), 'iterative' solves rows on demand by conjugate
    gradients to relative tolerance 1e-10, 'auto' picks dense for small
    vertex counts.
    """
    if domain.n_vertices == 0:
        raise ValueError("domain is empty")
    if mode == "auto":
        mode = ("dense"
                if domain.n_vertices <= DENSE_AUTO_VERTICES
                and domain.N <= DENSE_MESH_LIMIT else "iterative")
    if mode == "dense":
        if domain.N > DENSE_MESH_LIMIT:
            raise ValueError(
                f"dense Green tables are limited to N <= {DENSE_MESH_LIMIT}")
        A = _dirichlet_operator(domain).toarray()
        full = scipy.linalg.inv(A)
        full = 0.5 * (full + full.T)
        return GreenTable(domain, full)
    if mode == "iterative":
        return GreenTable(domain, None)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# sequential first-return probabilities
# ---------------------------------------------------------------------------


def return_probabilities(domain: LatticeDomain) -> np.ndarray:
    """r_i = P(SRW from x_i returns to x_i before leaving D \\ {x_1..x_{i-1}}).

    One banded Cholesky of the Dirichlet operator assembled in reverse
    vertex order; pivot d of reversed position n-1-i gives
    r_i = 1 - d/4.  Cached on the domain.
    """
    if "rets" in domain._cache:
        return domain._cache["rets"]
    n = domain.n_vertices
    nbr = domain.nbr
    # reversed order: position k holds forward vertex n-1-k
    pos_of = np.empty(n, dtype=np.int64)
    for k in range(n):
        pos_of[n - 1 - k] = k
    # bandwidth in reversed order equals max position gap over edges
    bw = 0
    for v in range(n):
        for s in range(4):
            w = nbr[4 * v + s]
            if w >= 0:
                bw = max(bw, abs(int(pos_of[v]) - int(pos_of[w])))
    ab = np.zeros((bw + 1, n))
    ab[bw, :] = 4.0
    for v in range(n):
        kv = int(pos_of[v])
        for s in range(4):
            w = nbr[4 * v + s]
            if w >= 0:
                kw = int(pos_of[w])
                if kw < kv:
                    ab[bw - (kv - kw), kv] = -1.0
    factor = scipy.linalg.cholesky_banded(ab, lower=False)
    pivots = factor[bw, :] ** 2
    rets = np.empty(n)
    for i in range(n):
        rets[i] = 1.0 - pivots[n - 1 - i] / 4.0
    rets = np.clip(rets, 0.0, 1.0)
    domain._cache["rets"] = rets
    return rets


# ---------------------------------------------------------------------------
# Gaussian free field
# ---------------------------------------------------------------------------


def sample_gff(domain: LatticeDomain, green: GreenTable, state,
               kernels=None) -> np.ndarray:
    """Centered Gaussian vector with covariance G, via G = L L^T."""
    if kernels is None:
        from . import backend as kernels
    L = green.cholesky()
    z = kernels.normals(state, domain.n_vertices)
    return L @ z
