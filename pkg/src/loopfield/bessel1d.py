"""Squared Bessel processes, the signed 1D field, martingales and duality.

``sample_besq`` draws BESQ(2 theta) from 0 with exact transitions:
given R_t = v, R_{t+dt} = 2 dt Gamma(theta + K, 1) with
K ~ Poisson(v/(2 dt)) (noncentral chi-squared mixture with 2 theta
degrees of freedom).  The scale constants are pinned by the marginal
R_t ~ Gamma(theta, 2t).

Excursions away from zero are read off the grid with the threshold
eps0 = dt^0.9 (discrete paths of a zero-recurrent process never evaluate
exactly to zero); each excursion carries an independent fair spin and
h(x) = sigma_{e_x} R_x^(1-theta).  The duality statistic
h(x) h(y) collapses in expectation to R_x^(1-theta) R_y^(1-theta) times
the same-excursion indicator, with exact value
(Gamma(2-theta)/Gamma(theta)) (2 min(x,y))^(2(1-theta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as default_backend
from . import mc
from .special import laguerre


def zero_threshold(dt: float) -> float:
    return dt**0.9


@dataclass
class BesqPath:
    theta: float
    dt: float
    times: np.ndarray
    values: np.ndarray
    excursion_id: np.ndarray   # 0 at (thresholded) zeros, 1.. in excursions
    spins: np.ndarray          # spins[k] for excursion k >= 1; spins[0] unused
    threshold: float

    @property
    def n_excursions(self) -> int:
        return self.spins.shape[0] - 1


def _label_excursions(values: np.ndarray, eps: float) -> tuple[np.ndarray, int]:
    above = values >= eps
    labels = np.zeros(values.shape[0], dtype=np.int64)
    current = 0
    prev = False
    for i, flag in enumerate(above):
        if flag:
            if not prev:
                current += 1
            labels[i] = current
        prev = flag
    return labels, current


def sample_besq(theta: float, horizon: float, dt: float, state,
                kernels=None) -> BesqPath:
    """BESQ(2 theta) path from 0 on the uniform grid of step dt."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if dt <= 0 or dt > horizon / 50.0:
        raise ValueError("need 0 < dt <= horizon/50")
    kern = kernels if kernels is not None else default_backend
    n_steps = int(round(horizon / dt))
    values = kern.besq_path(state, theta, n_steps, dt)
    times = np.arange(n_steps + 1) * dt
    eps = zero_threshold(dt)
    labels, n_exc = _label_excursions(values, eps)
    u = kern.uniforms(state, n_exc)
    spins = np.ones(n_exc + 1, dtype=np.int8)
    spins[1:] = np.where(u < 0.5, 1, -1)
    return BesqPath(theta=theta, dt=dt, times=times, values=values,
                    excursion_id=labels, spins=spins, threshold=eps)


def signed_field(path: BesqPath, state=None, kernels=None) -> np.ndarray:
    """h(x) = sigma_{e_x} R_x^(1-theta) on the path grid.

    Grid points at the zero threshold inherit the spin of the following
    excursion (trailing zeros: the preceding one), so |h| = R^(1-theta)
    pointwise.  With ``state`` given, fresh spins are drawn instead of
    the path's own.
    """
    spins = path.spins
    if state is not None:
        kern = kernels if kernels is not None else default_backend
        u = kern.uniforms(state, path.n_excursions)
        spins = np.ones(path.n_excursions + 1, dtype=np.int8)
        spins[1:] = np.where(u < 0.5, 1, -1)
    labels = path.excursion_id.copy()
    # zeros adopt the next excursion's label; trailing zeros the last one
    n = labels.shape[0]
    nxt = 0
    for i in range(n - 1, -1, -1):
        if labels[i] > 0:
            nxt = labels[i]
        elif nxt > 0:
            labels[i] = nxt
    if labels[-1] == 0 and path.n_excursions > 0:
        labels[labels == 0] = path.n_excursions
    point_spins = np.where(labels > 0, spins[labels], 1).astype(np.float64)
    return point_spins * path.values ** (1.0 - path.theta)


# ---------------------------------------------------------------------------
# martingale and duality checks
# ---------------------------------------------------------------------------


def _martingale_task(payload, seed, index):
    kern = default_backend
    state = kern.seed_state(seed)
    values = kern.besq_path(state, payload["theta"], payload["n_steps"],
                            payload["dt"])
    out = []
    n = payload["n"]
    theta_poly = payload["theta_poly"]
    for idx in payload["time_idx"]:
        t = idx * payload["dt"]
        out.append((2.0 * t) ** n * laguerre(n, theta_poly, values[idx] / (2.0 * t)))
    return tuple(out)


def check_martingale(theta: float, n: int, time_grid, replicas: int, seed: int,
                     dt: float = 1e-3, workers: int = 1,
                     theta_poly: float | None = None):
    """MC means of the candidate martingale (2t)^n L_n^(alpha-1)(R_t/(2t)).

    With ``theta_poly`` = theta (default) the expectation is 0 at every
    time; a mismatched polynomial parameter is the negative control.
    Returns a list of (t, mean, se) rows.
    """
    if n < 1 or n > 3:
        raise ValueError("n must be in {1, 2, 3}")
    times = sorted(float(t) for t in time_grid)
    if not times or times[0] <= 0:
        raise ValueError("times must be positive")
    time_idx = [int(round(t / dt)) for t in times]
    if any(abs(i * dt - t) > 1e-9 for i, t in zip(time_idx, times)):
        raise ValueError("every time must be a multiple of dt")
    payload = {
        "theta": theta, "n": n, "dt": dt, "time_idx": time_idx,
        "n_steps": max(time_idx),
        "theta_poly": theta if theta_poly is None else theta_poly,
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = np.asarray(mc.run_replicas(spec, _martingale_task, payload))
    rows = []
    for j, t in enumerate(times):
        mean, se = mc.mean_se(records[:, j])
        rows.append((t, mean, se))
    return rows


def _duality_task(payload, seed, index):
    kern = default_backend
    state = kern.seed_state(seed)
    values = kern.besq_path(state, payload["theta"], payload["n_steps"],
                            payload["dt"])
    ix, iy = payload["ix"], payload["iy"]
    if float(np.min(values[ix:iy + 1])) < payload["eps"]:
        return 0.0
    e = 1.0 - payload["theta"]
    return float(values[ix] ** e * values[iy] ** e)


def check_duality(theta: float, x: float, y: float, replicas: int, seed: int,
                  dt: float = 1e-3, workers: int = 1):
    """Two-point duality with F = 1.

    lhs: MC mean of R_x^(1-theta) R_y^(1-theta) 1{no thresholded zero in
    [x, y]}; rhs: (Gamma(2-theta)/Gamma(theta)) (2x)^(2(1-theta)) exactly.
    Returns (lhs, lhs_se, rhs).
    """
    if not 0.0 < x <= y:
        raise ValueError("need 0 < x <= y")
    ix = int(round(x / dt))
    iy = int(round(y / dt))
    payload = {
        "theta": theta, "dt": dt, "ix": ix, "iy": iy, "n_steps": iy,
        "eps": zero_threshold(dt),
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = np.asarray(mc.run_replicas(spec, _duality_task, payload))
    lhs, se = mc.mean_se(records)
    rhs = (math.gamma(2.0 - theta) / math.gamma(theta)
           * (2.0 * x) ** (2.0 * (1.0 - theta)))
    return lhs, se, rhs


def _duality_paired_task(payload, seed, index):
    kern = default_backend
    state = kern.seed_state(seed)
    refine = payload["refine"]
    values = kern.besq_path(state, payload["theta"], payload["n_steps"],
                            payload["dt_fine"])
    e = 1.0 - payload["theta"]
    ixf, iyf = payload["ix_fine"], payload["iy_fine"]
    weight = values[ixf] ** e * values[iyf] ** e
    fine = weight if float(np.min(values[ixf:iyf + 1])) >= payload["eps_fine"] \
        else 0.0
    coarse_vals = values[::refine]
    ixc, iyc = ixf // refine, iyf // refine
    coarse = weight if float(np.min(coarse_vals[ixc:iyc + 1])) \
        >= payload["eps_coarse"] else 0.0
    return coarse, fine


def check_duality_paired(theta: float, x: float, y: float, replicas: int,
                         seed: int, dt: float = 1e-3, refine: int = 2,
                         workers: int = 1):
    """Duality statistic at dt and dt/refine from the same fine paths.

    Exact transitions compose, so the refine-subsampled path is exactly a
    step-dt path in law; the paired difference isolates the threshold
    discretization effect from MC noise.  Returns a dict with the coarse
    and fine estimates, the paired difference, and the exact rhs.
    """
    if not 0.0 < x <= y:
        raise ValueError("need 0 < x <= y")
    dt_fine = dt / refine
    payload = {
        "theta": theta, "dt_fine": dt_fine, "refine": refine,
        "ix_fine": int(round(x / dt_fine)),
        "iy_fine": int(round(y / dt_fine)),
        "n_steps": int(round(y / dt_fine)),
        "eps_fine": zero_threshold(dt_fine),
        "eps_coarse": zero_threshold(dt),
    }
    spec = mc.RunSpec(master_seed=seed, replicas=replicas, workers=workers)
    records = np.asarray(mc.run_replicas(spec, _duality_paired_task, payload))
    coarse, coarse_se = mc.mean_se(records[:, 0])
    fine, fine_se = mc.mean_se(records[:, 1])
    diff, diff_se = mc.mean_se(records[:, 0] - records[:, 1])
    rhs = (math.gamma(2.0 - theta) / math.gamma(theta)
           * (2.0 * x) ** (2.0 * (1.0 - theta)))
    return {
        "coarse": coarse, "coarse_se": coarse_se,
        "fine": fine, "fine_se": fine_se,
        "diff": diff, "diff_se": diff_se,
        "rhs": rhs, "dt": dt, "dt_fine": dt_fine,
    }
