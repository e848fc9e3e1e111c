"""Command-line interface.

Subcommands cover occupation sampling, crossing/Z_gamma estimation,
field evaluation, Wick covariances, deterministic identity reports, the
isomorphism checks and the one-dimensional Bessel experiments.  Every
output file starts with ``# cmd: <invocation> seed=<s> version=<v>`` and
reruns with identical flags are byte-identical regardless of worker
count.

A config file (``--config``) holds ``key = value`` lines mirroring the
long flag names, with ``#`` comments; explicit flags override file
values and unknown keys are fatal.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import backend as kern
from . import bessel1d, clusters, fields, gff_iso, mc, special
from .graph import build_domain, green_function, return_probabilities
from .loopsoup import sample_loop_soup, sample_thick_loop

class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small parsing helpers
# ---------------------------------------------------------------------------


def _parse_float_token(tok: str) -> float:
    """Float literal or an 'e-K' shorthand for exp(-K)."""
    tok = tok.strip()
    if tok.startswith("e-") or tok.startswith("e+"):
        return math.exp(float(tok[1:]))
    return float(tok)


def _parse_list(text: str) -> list[float]:
    return [_parse_float_token(t) for t in text.split(",") if t.strip()]


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"expected 'x,y' coordinate pair, got {text!r}")
    return float(parts[0]), float(parts[1])


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if any(c in text for c in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _write_csv(path: str, header: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, header: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump({"meta": header, **payload}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header(args, argv) -> str:
    # --workers is scheduling-only and never affects results; keep it out
    # of the header so output is byte-identical across worker counts
    toks = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--workers":
            skip = True
            continue
        if tok.startswith("--workers="):
            continue
        toks.append(tok)
    cmd = "loopfield " + " ".join(toks)
    return f"# cmd: {cmd} seed={args.seed} version={__version__}"


def _resolve_probes(domain, probe_args) -> list[int]:
    if not probe_args:
        return [domain.origin]
    out = []
    for text in probe_args:
        x, y = _parse_point(text)
        i, j = round(x * domain.N), round(y * domain.N)
        idx = domain.index_of(i, j)
        if idx < 0:
            idx = domain.nearest_vertex(x, y)
        out.append(idx)
    return out


# ---------------------------------------------------------------------------
# replica tasks (module level: picklable for worker pools)
# ---------------------------------------------------------------------------


def _occupation_task(payload, seed, index):
    state = kern.seed_state(seed)
    sample = sample_loop_soup(payload["domain"], payload["theta"], state)
    return tuple(float(sample.occupation[p]) for p in payload["probes"])


def _field_task(payload, seed, index):
    domain = payload["domain"]
    state = kern.seed_state(seed)
    sample = sample_loop_soup(domain, payload["theta"], state)
    part = clusters.partition_sample(sample, state)
    dfield = fields.discrete_field(sample.occupation, part,
                                   payload["theta"], domain)
    measure = fields.thick_point_measure(sample.occupation, payload["a"],
                                         domain, payload["theta"])
    weight_of = dict(zip(measure.atoms.tolist(), measure.weights.tolist()))
    out = []
    for p, gpp in zip(payload["probes"], payload["green_diag"]):
        ell = float(sample.occupation[p])
        h = float(dfield.values[p])
        spin = 1 if h >= 0 else -1
        dens = fields.m_gamma_density(ell, spin, payload["gamma"],
                                      payload["theta"], gpp)
        thick = p in weight_of
        out.append((ell, spin, h, dens, thick, weight_of.get(p, 0.0)))
    return tuple(out)


def _wickcov_task(payload, seed, index):
    state = kern.seed_state(seed)
    sample = sample_loop_soup(payload["domain"], payload["theta"], state)
    z, w = payload["zw"]
    return float(sample.occupation[z]), float(sample.occupation[w])


def _minkowski_task(payload, seed, index):
    domain = payload["domain"]
    state = kern.seed_state(seed)
    sample = sample_loop_soup(domain, payload["theta"], state)
    part = clusters.partition_sample(sample, state)
    if part.n_clusters == 0:
        return (-1, 0, 0.0)
    cid = part.largest_cluster()
    size = int(part.cluster_sizes()[cid])
    mu = clusters.minkowski_estimate(part, cid, payload["r"], payload["zr"])
    return (cid, size, mu)


def _besq_task(payload, seed, index):
    state = kern.seed_state(seed)
    values = kern.besq_path(state, payload["theta"], payload["n_steps"],
                            payload["dt"])
    return tuple(float(values[i]) for i in payload["time_idx"])


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise UsageError(f"missing required flag --{name}")


def _runspec(args) -> mc.RunSpec:
    return mc.RunSpec(master_seed=args.seed, replicas=args.replicas,
                      workers=args.workers)


def _cmd_sample_occupation(args, argv) -> int:
    _require(args, "theta", "mesh", "replicas", "out")
    domain = build_domain(args.domain, args.mesh)
    probes = _resolve_probes(domain, args.probe)
    green = green_function(domain, mode="iterative")
    gdiag = [green.diag(p) for p in probes]
    return_probabilities(domain)
    records = mc.run_replicas(_runspec(args), _occupation_task,
                              {"domain": domain, "theta": args.theta,
                               "probes": probes})
    rows = []
    for i, rec in enumerate(records):
        for j, occ in enumerate(rec):
            rows.append((i, j, occ, occ / gdiag[j]))
    _write_csv(args.out, _header(args, argv),
               ["replica", "probe_index", "occupation", "occupation_over_G"],
               rows)
    return 0


def _crossing_fit(rows, xs_of):
    # saturated frequencies (se = 0) carry no log-scale information
    pts = [(xs_of(r), math.log(est), est, se)
           for r, est, se, _n in rows if est > 0.0 and se > 0.0]
    if len(pts) < 3:
        return float("nan"), float("nan"), float("nan")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    ws = [1.0 / (p[3] / p[2]) ** 2 for p in pts]
    return mc.fit_slope(xs, ys, ws)


def _cmd_crossing(args, argv) -> int:
    _require(args, "theta", "mesh", "r-list", "replicas", "out")
    domain = build_domain("disc", args.mesh)
    r_values = _parse_list(args.r_list)
    rows = clusters.estimate_Zr(domain, args.theta, r_values, args.replicas,
                                args.seed, args.workers)
    slope, intercept, slope_se = _crossing_fit(
        rows, lambda r: math.log(-math.log(r)))
    out_rows = [(r, est, se, n, slope, intercept, slope_se)
                for r, est, se, n in rows]
    _write_csv(args.out, _header(args, argv),
               ["r", "estimate", "se", "n",
                "fit_slope", "fit_intercept", "fit_slope_se"], out_rows)
    return 0


def _cmd_zgamma(args, argv) -> int:
    _require(args, "theta", "mesh", "gamma-list", "replicas", "out")
    domain = build_domain("disc", args.mesh)
    gammas = _parse_list(args.gamma_list)
    rows = clusters.estimate_Zgamma(domain, args.theta, gammas, args.replicas,
                                    args.seed, args.workers)
    slope, intercept, slope_se = _crossing_fit(rows, math.log)
    out_rows = [(g, est, se, n, slope, intercept, slope_se)
                for g, est, se, n in rows]
    _write_csv(args.out, _header(args, argv),
               ["gamma", "estimate", "se", "n",
                "fit_slope", "fit_intercept", "fit_slope_se"], out_rows)
    return 0


def _cmd_field(args, argv) -> int:
    _require(args, "theta", "gamma", "mesh", "replicas", "out")
    domain = build_domain(args.domain, args.mesh)
    probes = _resolve_probes(domain, args.probe)
    green = green_function(domain, mode="iterative")
    gdiag = [green.diag(p) for p in probes]
    return_probabilities(domain)
    a = args.gamma**2 / 2.0
    records = mc.run_replicas(
        _runspec(args), _field_task,
        {"domain": domain, "theta": args.theta, "gamma": args.gamma,
         "a": a, "probes": probes, "green_diag": gdiag})
    rows = []
    for i, rec in enumerate(records):
        for j, (ell, spin, h, dens, thick, weight) in enumerate(rec):
            rows.append((i, j, ell, spin, h, dens, int(thick), weight))
    _write_csv(args.out, _header(args, argv),
               ["replica", "probe", "ell", "spin", "h_value",
                "m_gamma_density", "thick", "weight"], rows)
    return 0


def _cmd_wick_cov(args, argv) -> int:
    _require(args, "theta", "n", "m", "mesh", "replicas", "out")
    domain = build_domain(args.domain, args.mesh)
    if args.z is None:
        z = domain.origin
    else:
        z = _resolve_probes(domain, [args.z])[0]
    if args.w is None:
        w = domain.index_of(2, 0)
        if w < 0:
            raise UsageError("default probe (2/N, 0) not in domain; pass --w")
    else:
        w = _resolve_probes(domain, [args.w])[0]
    if z == w:
        raise UsageError("--z and --w must be distinct vertices")
    green = green_function(domain, mode="iterative")
    gzz, gww, gzw = green.diag(z), green.diag(w), green.value(z, w)
    return_probabilities(domain)
    records = np.asarray(mc.run_replicas(
        _runspec(args), _wickcov_task,
        {"domain": domain, "theta": args.theta, "zw": (z, w)}))
    prods = np.array([
        special.wick_local(lz, gzz, args.n, args.theta)
        * special.wick_local(lw, gww, args.m, args.theta)
        for lz, lw in records])
    est, se = mc.mean_se(prods)
    predicted = 0.0
    if args.n == args.m:
        predicted = (special.gamma_fn(args.theta + args.n)
                     * math.factorial(args.n) / special.gamma_fn(args.theta)
                     * gzw ** (2 * args.n))
    _write_csv(args.out, _header(args, argv),
               ["n", "m", "estimate", "se", "predicted"],
               [(args.n, args.m, est, se, predicted)])
    return 0


_IDENTITY_GRIDS = {
    "laguerre-bessel": {
        "theta": (0.25, 0.5, 0.9),
        "t": (0.5, 1.0, 2.0),
        "u": (0.5, 1.0, 2.0),
        "gamma": (0.5, 1.0, 2.0),
    },
    "hermite-laguerre": {
        # G capped at 1.5: the identity is exact, but G^((2n+1)/2) H_(2n+1)
        # magnitudes at G = 2, n = 6 push pure roundoff past the 1e-10 gate
        "n": (0, 1, 2, 3, 4, 5, 6),
        "h": (-2.0, -0.5, 0.5, 2.0),
        "G": (0.5, 1.0, 1.5),
    },
    "hermite-exp": {
        "gamma": (0.2, 0.5, 1.0),
        "t": (0.5, 1.0, 2.0),
        "u": (-1.0, 0.3, 1.5),
    },
}


def identity_report(which: str) -> dict:
    grid = _IDENTITY_GRIDS[which]
    points = []
    if which == "laguerre-bessel":
        for theta in grid["theta"]:
            for t in grid["t"]:
                for u in grid["u"]:
                    for g in grid["gamma"]:
                        res = special.identity_laguerre_bessel(t, u, g, theta)
                        points.append({"theta": theta, "t": t, "u": u,
                                       "gamma": g, "residual": res})
    elif which == "hermite-laguerre":
        for n in grid["n"]:
            for h in grid["h"]:
                for G in grid["G"]:
                    res = special.identity_hermite_laguerre(n, h, G)
                    points.append({"n": n, "h": h, "G": G, "residual": res})
    else:
        for g in grid["gamma"]:
            for t in grid["t"]:
                for u in grid["u"]:
                    res = special.identity_hermite_exp(g, t, u)
                    points.append({"gamma": g, "t": t, "u": u,
                                   "residual": res})
    return {"which": which, "grid": points,
            "max_residual": max(p["residual"] for p in points)}


def _cmd_identity_check(args, argv) -> int:
    report = identity_report(args.which)
    if args.out:
        _write_json(args.out, _header(args, argv), report)
    print(f"{args.which}: max residual {report['max_residual']:.3e} "
          f"over {len(report['grid'])} grid points")
    return 0


def _cmd_gff_iso(args, argv) -> int:
    _require(args, "mesh", "replicas")
    domain = build_domain("disc", args.mesh)
    report = gff_iso.lejan_check(domain, args.replicas, args.seed,
                                 workers=args.workers)
    if args.out:
        _write_json(args.out, _header(args, argv), report)
    print(f"lejan theta=1/2 N={args.mesh}: KS={report['ks_marginal']:.4f}  "
          f"soup cov {report['soup_cov']:.5f}+-{report['soup_cov_se']:.5f}  "
          f"gff cov {report['gff_cov']:.5f}+-{report['gff_cov_se']:.5f}  "
          f"target {report['target_cov']:.5f}")
    return 0


def _cmd_bfs_dynkin(args, argv) -> int:
    _require(args, "replicas")
    name = args.graph
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    graph = gff_iso.builtin_graph(name)
    x = 0 if args.x is None else args.x
    y = (graph.n_vertices - 1) if args.y is None else args.y
    report = gff_iso.bfs_dynkin_check(graph, x, y, args.replicas, args.seed,
                                      workers=args.workers)
    if args.out:
        _write_json(args.out, _header(args, argv), report)
    print(f"bfs-dynkin {args.graph}: lhs={report['lhs']:.5f}+-{report['lhs_se']:.5f} "
          f"rhs={report['rhs']:.5f}+-{report['rhs_se']:.5f} "
          f"closed={report['closed_form']:.5f}")
    return 0


def _cmd_besq(args, argv) -> int:
    _require(args, "theta", "horizon", "replicas", "out")
    dt = args.dt
    times = _parse_list(args.probe_times) if args.probe_times else [args.horizon]
    time_idx = [int(round(t / dt)) for t in times]
    n_steps = int(round(args.horizon / dt))
    if any(i > n_steps or i < 0 for i in time_idx):
        raise UsageError("probe times must lie in [0, horizon]")
    if dt > args.horizon / 50.0:
        raise UsageError("need dt <= horizon/50")
    records = mc.run_replicas(
        _runspec(args), _besq_task,
        {"theta": args.theta, "dt": dt, "n_steps": n_steps,
         "time_idx": time_idx})
    rows = []
    for i, rec in enumerate(records):
        for t, v in zip(times, rec):
            rows.append((i, t, v))
    _write_csv(args.out, _header(args, argv),
               ["replica", "t", "value"], rows)
    return 0


def _cmd_duality1d(args, argv) -> int:
    _require(args, "theta", "x", "y", "replicas", "out")
    lhs, lhs_se, rhs = bessel1d.check_duality(
        args.theta, args.x, args.y, args.replicas, args.seed,
        dt=args.dt, workers=args.workers)
    _write_csv(args.out, _header(args, argv),
               ["theta", "x", "y", "dt", "threshold", "lhs", "lhs_se",
                "rhs", "rel_err"],
               [(args.theta, args.x, args.y, args.dt,
                 bessel1d.zero_threshold(args.dt), lhs, lhs_se, rhs,
                 (lhs - rhs) / rhs)])
    return 0


def _cmd_martingale1d(args, argv) -> int:
    _require(args, "theta", "n", "times", "replicas", "out")
    times = _parse_list(args.times)
    rows = bessel1d.check_martingale(
        args.theta, args.n, times, args.replicas, args.seed,
        dt=args.dt, workers=args.workers,
        theta_poly=args.theta_poly)
    _write_csv(args.out, _header(args, argv),
               ["t", "mean", "se", "n"],
               [(t, mean, se, args.replicas) for t, mean, se in rows])
    return 0


def _cmd_minkowski(args, argv) -> int:
    _require(args, "theta", "mesh", "r", "zr", "replicas", "out")
    domain = build_domain("disc", args.mesh)
    return_probabilities(domain)
    records = mc.run_replicas(
        _runspec(args), _minkowski_task,
        {"domain": domain, "theta": args.theta, "r": args.r, "zr": args.zr})
    rows = [(i, cid, size, args.r, args.zr, mu)
            for i, (cid, size, mu) in enumerate(records)]
    _write_csv(args.out, _header(args, argv),
               ["replica", "cluster_id", "cluster_size", "r", "zr", "mu"],
               rows)
    return 0


# ---------------------------------------------------------------------------
# parser construction / config handling
# ---------------------------------------------------------------------------

_COMMANDS = {
    "sample-occupation": _cmd_sample_occupation,
    "crossing": _cmd_crossing,
    "zgamma": _cmd_zgamma,
    "field": _cmd_field,
    "wick-cov": _cmd_wick_cov,
    "identity-check": _cmd_identity_check,
    "gff-iso": _cmd_gff_iso,
    "bfs-dynkin": _cmd_bfs_dynkin,
    "besq": _cmd_besq,
    "duality1d": _cmd_duality1d,
    "martingale1d": _cmd_martingale1d,
    "minkowski": _cmd_minkowski,
}

# dest -> caster, for config-file values
_OPTION_TYPES = {
    "theta": float, "gamma": float, "mesh": int, "replicas": int,
    "workers": int, "seed": int, "n": int, "m": int, "x": float, "y": float,
    "horizon": float, "dt": float, "r": float, "zr": float,
    "theta_poly": float, "domain": str, "out": str, "r_list": str,
    "gamma_list": str, "which": str, "graph": str, "times": str,
    "probe_times": str, "probe": str,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopfield",
        description="Loop soup Monte Carlo: occupation fields, clusters, "
                    "chaos measures and squared Bessel duality.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(p, domain_choice=True):
        p.add_argument("--config", type=str, default=None,
                       help="key = value file mirroring the long flags")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (fallback: LOOPFIELD_SEED)")
        p.add_argument("--replicas", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", type=str, default=None)
        if domain_choice:
            p.add_argument("--domain", choices=["disc", "square"],
                           default="disc")
            p.add_argument("--mesh", type=int, default=None)

    p = sub.add_parser("sample-occupation",
                       help="occupation field at probe vertices")
    common(p)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--probe", action="append", default=None,
                   help="probe point 'x,y' (repeatable; default origin)")

    p = sub.add_parser("crossing", help="Z_r crossing probabilities")
    common(p, domain_choice=False)
    p.add_argument("--mesh", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--r-list", dest="r_list", type=str, default=None,
                   help="comma list; accepts e-K shorthand for exp(-K)")

    p = sub.add_parser("zgamma", help="Z_gamma thick-loop connection")
    common(p, domain_choice=False)
    p.add_argument("--mesh", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--gamma-list", dest="gamma_list", type=str, default=None)

    p = sub.add_parser("field", help="signed field and chaos density at probes")
    common(p)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--probe", action="append", default=None)

    p = sub.add_parser("wick-cov", help="Wick power covariance")
    common(p)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--z", type=str, default=None, help="probe 'x,y'")
    p.add_argument("--w", type=str, default=None, help="probe 'x,y'")

    p = sub.add_parser("identity-check", help="deterministic identity grids")
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--which", choices=sorted(_IDENTITY_GRIDS), default=None)
    p.add_argument("--grid", choices=["default"], default="default")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)

    p = sub.add_parser("gff-iso", help="Le Jan theta=1/2 identification")
    common(p, domain_choice=False)
    p.add_argument("--mesh", type=int, default=None)

    p = sub.add_parser("bfs-dynkin", help="BFS-Dynkin identity on tiny graphs")
    common(p, domain_choice=False)
    p.add_argument("--graph", type=str, default="builtin:k2")
    p.add_argument("--x", type=int, default=None)
    p.add_argument("--y", type=int, default=None)

    p = sub.add_parser("besq", help="squared Bessel paths at probe times")
    common(p, domain_choice=False)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--probe-times", dest="probe_times", type=str, default=None)

    p = sub.add_parser("duality1d", help="1D two-point duality check")
    common(p, domain_choice=False)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--y", type=float, default=None)
    p.add_argument("--dt", type=float, default=1e-3)

    p = sub.add_parser("martingale1d", help="Laguerre martingale means")
    common(p, domain_choice=False)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--times", type=str, default=None)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--theta-poly", dest="theta_poly", type=float, default=None,
                   help="mismatched polynomial parameter (negative control)")

    p = sub.add_parser("minkowski", help="finite-r Minkowski mass of the "
                                         "largest cluster")
    common(p, domain_choice=False)
    p.add_argument("--mesh", type=int, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--zr", type=float, default=None)

    return parser


def _apply_config(args) -> None:
    if getattr(args, "config", None) is None:
        return
    path = args.config
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            dest = key.replace("-", "_")
            if dest not in _OPTION_TYPES or not hasattr(args, dest):
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            if getattr(args, dest) is None:  # explicit flags take precedence
                caster = _OPTION_TYPES[dest]
                if dest == "probe":
                    setattr(args, dest, [value])
                else:
                    setattr(args, dest, caster(value))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        _apply_config(args)
        if getattr(args, "seed", None) is None:
            env = os.environ.get("LOOPFIELD_SEED")
            if env is None:
                raise UsageError("missing required flag --seed "
                                 "(or LOOPFIELD_SEED)")
            args.seed = int(env)
        if args.command == "identity-check" and args.which is None:
            raise UsageError("missing required flag --which")
        return _COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"loopfield {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"loopfield {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
