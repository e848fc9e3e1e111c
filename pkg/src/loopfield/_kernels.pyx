# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling kernels; bit-identical twin of ``_kernels_py``.

Every random draw and floating-point expression mirrors the pure-Python
reference implementation exactly (same order, same grouping), so both
backends produce identical streams for identical ``(state, arguments)``.
The extension is built with ``-ffp-contract=off`` to rule out FMA
contraction.  See ``_kernels_py`` for the draw-order contract.
"""

from libc.math cimport fabs, floor, lgamma, log, pow, sqrt, exp
from libc.stdlib cimport free, malloc, realloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True

RATE_CUTOFF = 1e-16
DEFAULT_STEP_CAP = 10_000_000

from loopfield._kernels_py import SamplerStarvation

ctypedef unsigned long long u64


cdef struct Rng:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline u64 _rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _next(Rng* r) noexcept nogil:
    cdef u64 result = _rotl(r.s0 + r.s3, 23) + r.s0
    cdef u64 t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return result


cdef inline double _uniform(Rng* r) noexcept nogil:
    return <double>(_next(r) >> 11) * 1.1102230246251565e-16


cdef inline double _uniform_pos(Rng* r) noexcept nogil:
    return <double>((_next(r) >> 11) + 1) * 1.1102230246251565e-16


cdef inline double _normal(Rng* r) noexcept nogil:
    cdef double u, v, s
    while True:
        u = 2.0 * _uniform(r) - 1.0
        v = 2.0 * _uniform(r) - 1.0
        s = u * u + v * v
        if s >= 1.0 or s == 0.0:
            continue
        return u * sqrt(-2.0 * log(s) / s)


cdef double _gamma(Rng* r, double shape) noexcept nogil:
    cdef double d, c, x, v, u, x2, g
    if shape < 1.0:
        g = _gamma(r, shape + 1.0)
        u = _uniform_pos(r)
        return g * pow(u, 1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / (3.0 * sqrt(d))
    while True:
        x = _normal(r)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform_pos(r)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
            return d * v


cdef long _poisson(Rng* r, double lam) noexcept nogil:
    cdef double lim, p, b, a, inv_alpha, v_r, log_lam, u, v, us
    cdef long k
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        lim = exp(-lam)
        k = 0
        p = 1.0
        while True:
            k += 1
            p = p * _uniform(r)
            if p <= lim:
                return k - 1
    b = 0.931 + 2.53 * sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = log(lam)
    while True:
        u = _uniform(r) - 0.5
        v = _uniform(r)
        us = 0.5 - fabs(u)
        k = <long>floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (log(v) + log(inv_alpha) - log(a / (us * us) + b)
                <= k * log_lam - lam - lgamma(k + 1.0)):
            return k


cdef inline void _load(Rng* r, u64[:] state) noexcept:
    r.s0 = state[0]
    r.s1 = state[1]
    r.s2 = state[2]
    r.s3 = state[3]


cdef inline void _store(Rng* r, u64[:] state) noexcept:
    state[0] = r.s0
    state[1] = r.s1
    state[2] = r.s2
    state[3] = r.s3


# ---------------------------------------------------------------------------
# bulk draws
# ---------------------------------------------------------------------------


def uniforms(u64[:] state, Py_ssize_t n):
    cdef Rng rng
    _load(&rng, state)
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = _uniform(&rng)
    _store(&rng, state)
    return out


def normals(u64[:] state, Py_ssize_t n):
    cdef Rng rng
    _load(&rng, state)
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = _normal(&rng)
    _store(&rng, state)
    return out


def gammas(u64[:] state, Py_ssize_t n, double shape, double scale):
    cdef Rng rng
    _load(&rng, state)
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = scale * _gamma(&rng, shape)
    _store(&rng, state)
    return out


# ---------------------------------------------------------------------------
# growable int32 buffer
# ---------------------------------------------------------------------------


cdef struct IBuf:
    int* data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int _ibuf_init(IBuf* b, Py_ssize_t cap) except -1:
    b.data = <int*>malloc(cap * sizeof(int))
    if b.data == NULL:
        raise MemoryError()
    b.size = 0
    b.cap = cap
    return 0


cdef inline int _ibuf_push(IBuf* b, int value) except -1:
    cdef int* p
    if b.size == b.cap:
        p = <int*>realloc(b.data, 2 * b.cap * sizeof(int))
        if p == NULL:
            raise MemoryError()
        b.data = p
        b.cap = 2 * b.cap
    b.data[b.size] = value
    b.size += 1
    return 0


cdef inline object _ibuf_to_numpy(IBuf* b):
    out = np.empty(b.size, dtype=np.int32)
    cdef int[:] o = out
    cdef Py_ssize_t i
    for i in range(b.size):
        o[i] = b.data[i]
    return out


cdef struct DBuf:
    double* data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int _dbuf_init(DBuf* b, Py_ssize_t cap) except -1:
    b.data = <double*>malloc(cap * sizeof(double))
    if b.data == NULL:
        raise MemoryError()
    b.size = 0
    b.cap = cap
    return 0


cdef inline int _dbuf_push(DBuf* b, double value) except -1:
    cdef double* p
    if b.size == b.cap:
        p = <double*>realloc(b.data, 2 * b.cap * sizeof(double))
        if p == NULL:
            raise MemoryError()
        b.data = p
        b.cap = 2 * b.cap
    b.data[b.size] = value
    b.size += 1
    return 0


cdef inline object _dbuf_to_numpy(DBuf* b):
    out = np.empty(b.size, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    for i in range(b.size):
        o[i] = b.data[i]
    return out


# ---------------------------------------------------------------------------
# loop soup
# ---------------------------------------------------------------------------


def sample_soup(u64[:] state, nbr, rets, double theta,
                long step_cap=DEFAULT_STEP_CAP):
    nbr_arr = np.ascontiguousarray(nbr, dtype=np.int32)
    rets_arr = np.ascontiguousarray(rets, dtype=np.float64)
    cdef int[:] nb = nbr_arr
    cdef double[:] rp = rets_arr
    cdef Py_ssize_t n = rets_arr.shape[0]

    cdef Rng rng
    _load(&rng, state)

    occ_np = np.zeros(n, dtype=np.float64)
    triv_np = np.empty(n, dtype=np.float64)
    cdef double[:] occupation = occ_np
    cdef double[:] trivial = triv_np

    cdef IBuf visits
    cdef IBuf returns_buf
    cdef IBuf offsets_buf
    cdef DBuf holdings
    _ibuf_init(&visits, 4096)
    _ibuf_init(&returns_buf, 256)
    _ibuf_init(&offsets_buf, 256)
    _dbuf_init(&holdings, 4096)

    cdef double r, lam, u, h, t
    cdef Py_ssize_t i
    cdef long k, m, mm, e, steps, nsteps, j
    cdef Py_ssize_t start, exc_start
    cdef int pos, nxt, ii

    try:
        for i in range(n):
            r = rp[i]
            if r <= 0.0:
                continue
            ii = <int>i
            lam = theta * r
            k = 1
            while lam >= RATE_CUTOFF:
                m = _poisson(&rng, lam)
                for mm in range(m):
                    start = visits.size
                    _ibuf_push(&visits, ii)
                    for e in range(k):
                        exc_start = visits.size
                        pos = ii
                        steps = 0
                        while True:
                            u = _uniform(&rng)
                            nxt = nb[4 * pos + <int>(4.0 * u)]
                            steps += 1
                            if steps > step_cap:
                                raise SamplerStarvation(i)
                            if nxt == ii:
                                _ibuf_push(&visits, ii)
                                break
                            if nxt < ii:
                                visits.size = exc_start
                                pos = ii
                                steps = 0
                                continue
                            _ibuf_push(&visits, nxt)
                            pos = nxt
                    nsteps = visits.size - start - 1
                    for j in range(nsteps):
                        h = -0.25 * log(_uniform_pos(&rng))
                        _dbuf_push(&holdings, h)
                        occupation[visits.data[start + j]] += h
                    _ibuf_push(&offsets_buf, <int>visits.size)
                    _ibuf_push(&returns_buf, <int>k)
                lam = lam * r * k / (k + 1)
                k += 1

        for i in range(n):
            t = 0.25 * _gamma(&rng, theta)
            trivial[i] = t
            occupation[i] += t

        _store(&rng, state)
        offsets_np = np.empty(offsets_buf.size + 1, dtype=np.int64)
        offsets_np[0] = 0
        offsets_np[1:] = _ibuf_to_numpy(&offsets_buf)
        return (
            offsets_np,
            _ibuf_to_numpy(&visits),
            _ibuf_to_numpy(&returns_buf),
            _dbuf_to_numpy(&holdings),
            triv_np,
            occ_np,
        )
    finally:
        free(visits.data)
        free(returns_buf.data)
        free(offsets_buf.data)
        free(holdings.data)


def sample_thick_loop(u64[:] state, nbr, int root, double r_root, double a,
                      long step_cap=DEFAULT_STEP_CAP, long n_bridges=-1):
    nbr_arr = np.ascontiguousarray(nbr, dtype=np.int32)
    cdef int[:] nb = nbr_arr

    cdef Rng rng
    _load(&rng, state)

    cdef IBuf visits
    _ibuf_init(&visits, 1024)
    offsets_list = [0]

    cdef double lam, log_r, u, uu
    cdef long nbridges, bb, k, e, steps
    cdef Py_ssize_t exc_start
    cdef int pos, nxt

    try:
        if r_root > 0.0:
            if n_bridges >= 0:
                nbridges = n_bridges
            else:
                lam = a * r_root / (1.0 - r_root)
                nbridges = _poisson(&rng, lam)
            log_r = log(r_root)
            for bb in range(nbridges):
                u = _uniform_pos(&rng)
                k = 1 + <long>(log(u) / log_r)
                _ibuf_push(&visits, root)
                for e in range(k):
                    exc_start = visits.size
                    pos = root
                    steps = 0
                    while True:
                        uu = _uniform(&rng)
                        nxt = nb[4 * pos + <int>(4.0 * uu)]
                        steps += 1
                        if steps > step_cap:
                            raise SamplerStarvation(root)
                        if nxt == root:
                            _ibuf_push(&visits, root)
                            break
                        if nxt < 0:
                            visits.size = exc_start
                            pos = root
                            steps = 0
                            continue
                        _ibuf_push(&visits, nxt)
                        pos = nxt
                offsets_list.append(visits.size)

        _store(&rng, state)
        return (
            np.asarray(offsets_list, dtype=np.int64),
            _ibuf_to_numpy(&visits),
        )
    finally:
        free(visits.data)


# ---------------------------------------------------------------------------
# squared Bessel path
# ---------------------------------------------------------------------------


def besq_path(u64[:] state, double theta, Py_ssize_t n_steps, double dt):
    cdef Rng rng
    _load(&rng, state)
    out = np.empty(n_steps + 1, dtype=np.float64)
    cdef double[:] o = out
    o[0] = 0.0
    cdef double v = 0.0
    cdef double inv = 1.0 / (2.0 * dt)
    cdef Py_ssize_t s
    cdef long kp
    for s in range(1, n_steps + 1):
        kp = _poisson(&rng, v * inv)
        v = 2.0 * dt * _gamma(&rng, theta + kp)
        o[s] = v
    _store(&rng, state)
    return out


# ---------------------------------------------------------------------------
# loop clustering (deterministic union-find)
# ---------------------------------------------------------------------------


cdef inline long long _uf_find(long long[:] parent, long long x) noexcept nogil:
    cdef long long root = x
    cdef long long tmp
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        tmp = parent[x]
        parent[x] = root
        x = tmp
    return root


def cluster_loops(offsets, visits, Py_ssize_t n_vertices):
    offs_arr = np.ascontiguousarray(offsets, dtype=np.int64)
    vis_arr = np.ascontiguousarray(visits, dtype=np.int32)
    cdef long long[:] offs = offs_arr
    cdef int[:] vis = vis_arr
    cdef Py_ssize_t n_loops = offs_arr.shape[0] - 1

    parent_np = np.arange(n_loops, dtype=np.int64)
    first_np = np.full(n_vertices, -1, dtype=np.int64)
    cdef long long[:] parent = parent_np
    cdef long long[:] first_loop = first_np

    cdef Py_ssize_t j, p
    cdef long long v, ra, rb, root
    for j in range(n_loops):
        for p in range(offs[j], offs[j + 1]):
            v = vis[p]
            if first_loop[v] < 0:
                first_loop[v] = j
            else:
                ra = _uf_find(parent, j)
                rb = _uf_find(parent, first_loop[v])
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb

    loop_cluster_np = np.empty(n_loops, dtype=np.int64)
    label_np = np.full(max(n_loops, 1), -1, dtype=np.int64)
    cdef long long[:] loop_cluster = loop_cluster_np
    cdef long long[:] label_of_root = label_np
    cdef long long n_labels = 0
    for j in range(n_loops):
        root = _uf_find(parent, j)
        if label_of_root[root] < 0:
            label_of_root[root] = n_labels
            n_labels += 1
        loop_cluster[j] = label_of_root[root]

    vertex_cluster_np = np.full(n_vertices, -1, dtype=np.int64)
    cdef long long[:] vertex_cluster = vertex_cluster_np
    cdef long long c
    for j in range(n_loops):
        c = loop_cluster[j]
        for p in range(offs[j], offs[j + 1]):
            vertex_cluster[vis[p]] = c

    return loop_cluster_np, vertex_cluster_np, int(n_labels)
