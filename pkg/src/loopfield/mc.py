"""Reproducible Monte Carlo harness and statistical utilities.

Replica ``i`` of a run draws from a private xoshiro256++ stream seeded by
``rng.replica_seed(master_seed, i, stream)``; records are returned in
replica order, so output is independent of the worker count.  Tasks must
be module-level callables (picklable) that are pure functions of
``(payload, seed, replica_index)``.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np

from .rng import replica_seed


@dataclass(frozen=True)
class RunSpec:
    master_seed: int
    replicas: int
    workers: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


class ReplicaTaskError(RuntimeError):
    def __init__(self, replica: int, message: str):
        super().__init__(f"replica {replica} failed: {message}")
        self.replica = replica


_WORKER = {}


def _pool_init(task, payload):
    _WORKER["task"] = task
    _WORKER["payload"] = payload


def _pool_run(args):
    index, seed = args
    try:
        return index, _WORKER["task"](_WORKER["payload"], seed, index)
    except Exception as exc:  # surfaced with the replica index by the parent
        return index, ("__replica_error__", repr(exc))


def run_replicas(spec: RunSpec, task, payload, stream: int = 0) -> list:
    """Run ``task(payload, seed, index)`` for every replica, in order.

    Deterministic for a fixed spec regardless of worker count or
    scheduling; a raising task surfaces as ReplicaTaskError carrying the
    replica index.
    """
    jobs = [(i, replica_seed(spec.master_seed, i, stream))
            for i in range(spec.replicas)]
    if spec.workers == 1:
        results = []
        for index, seed in jobs:
            try:
                results.append(task(payload, seed, index))
            except Exception as exc:
                raise ReplicaTaskError(index, repr(exc)) from exc
        return results
    with multiprocessing.Pool(
            spec.workers, initializer=_pool_init,
            initargs=(task, payload)) as pool:
        raw = pool.map(_pool_run, jobs, chunksize=max(1, len(jobs) // (4 * spec.workers)))
    raw.sort(key=lambda item: item[0])
    results = []
    for index, record in raw:
        if isinstance(record, tuple) and len(record) == 2 \
                and record[0] == "__replica_error__":
            raise ReplicaTaskError(index, record[1])
        results.append(record)
    return results


# ---------------------------------------------------------------------------
# distribution utilities
# ---------------------------------------------------------------------------


def gamma_cdf(shape: float, x: float) -> float:
    """Regularized lower incomplete gamma P(shape, x).

    Power series for x < shape + 1, Lentz continued fraction otherwise;
    absolute error below 1e-12.
    """
    if shape <= 0:
        raise ValueError("shape must be positive")
    if x <= 0.0:
        return 0.0
    log_pre = shape * math.log(x) - x - math.lgamma(shape)
    if x < shape + 1.0:
        # series: sum_n x^n Gamma(shape)/Gamma(shape+1+n)
        term = 1.0 / shape
        total = term
        a = shape
        for _ in range(10_000):
            a += 1.0
            term *= x / a
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return min(1.0, math.exp(log_pre) * total)
    # modified Lentz for the continued fraction of Q(shape, x)
    tiny = 1e-300
    b = x + 1.0 - shape
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, 10_000):
        an = -i * (i - shape)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return max(0.0, 1.0 - math.exp(log_pre) * f)


def ks_statistic(samples, cdf) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.shape[0]
    if n == 0:
        raise ValueError("samples must be nonempty")
    f = np.array([cdf(x) for x in xs])
    grid = np.arange(1, n + 1) / n
    d_plus = np.max(grid - f)
    d_minus = np.max(f - (grid - 1.0 / n))
    return float(max(d_plus, d_minus))


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov sup-distance."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / a.size
    cdf_b = np.searchsorted(b, both, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def fit_slope(xs, ys, weights=None):
    """Weighted least-squares line fit.

    Weights are inverse variances; returns (slope, intercept, slope_se)
    with slope_se = sqrt(1 / sum w (x - xbar_w)^2).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape[0] < 3:
        raise ValueError("need at least 3 points")
    w = np.ones_like(xs) if weights is None else np.asarray(weights, dtype=np.float64)
    sw = w.sum()
    xbar = float((w * xs).sum() / sw)
    ybar = float((w * ys).sum() / sw)
    sxx = float((w * (xs - xbar) ** 2).sum())
    if sxx <= 0.0:
        raise ValueError("degenerate x values")
    sxy = float((w * (xs - xbar) * (ys - ybar)).sum())
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    return slope, intercept, math.sqrt(1.0 / sxx)


def binomial_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def mean_se(values) -> tuple[float, float]:
    """Sample mean and its standard error (SD / sqrt(n))."""
    arr = np.asarray(values, dtype=np.float64)
    n = arr.shape[0]
    mean = float(arr.mean())
    if n < 2:
        return mean, math.inf
    sd = float(arr.std(ddof=1))
    return mean, sd / math.sqrt(n)
