"""Figure construction from loopfield CSV outputs.

Each kind validates its input against the header comment (the recorded
subcommand must match) and the expected columns, then renders a PNG and
returns a metadata dict with the quantities a test or caller may want to
check (refit slopes, density normalization, bar values).

The weighted least-squares refit is the same definition the simulator
uses (precision-weighted normal equations), so annotated slopes agree
with the CSV's ``fit_slope`` column to well below 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib
import numpy as np
import scipy.special

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (after backend selection)

FIGURE_KINDS = (
    "gamma-hist",
    "crossing-loglog",
    "zgamma-loglog",
    "martingale-lines",
    "duality-bar",
    "wickcov-table",
)

_EXPECTED_COMMAND = {
    "gamma-hist": "sample-occupation",
    "crossing-loglog": "crossing",
    "zgamma-loglog": "zgamma",
    "martingale-lines": "martingale1d",
    "duality-bar": "duality1d",
    "wickcov-table": "wick-cov",
}

_REQUIRED_COLUMNS = {
    "gamma-hist": ("replica", "probe_index", "occupation",
                   "occupation_over_G"),
    "crossing-loglog": ("r", "estimate", "se", "n", "fit_slope",
                        "fit_intercept", "fit_slope_se"),
    "zgamma-loglog": ("gamma", "estimate", "se", "n", "fit_slope",
                      "fit_intercept", "fit_slope_se"),
    "martingale-lines": ("t", "mean", "se", "n"),
    "duality-bar": ("theta", "x", "y", "dt", "threshold", "lhs", "lhs_se",
                    "rhs", "rel_err"),
    "wickcov-table": ("n", "m", "estimate", "se", "predicted"),
}


class SchemaError(Exception):
    pass


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_path: str
    output_path: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r} "
                              f"(expected one of {', '.join(FIGURE_KINDS)})")


@dataclass
class Table:
    header: str
    command: str
    columns: list
    data: np.ndarray
    flags: dict

    def col(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def load_table(path: str) -> Table:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# cmd: loopfield "):
            raise SchemaError(f"{path}: missing '# cmd: loopfield' header")
        columns = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    tokens = header[len("# cmd: "):].split()
    command = tokens[1]
    flags = {}
    i = 2
    while i < len(tokens):
        tok = tokens[i]
        if tok.startswith("--"):
            if i + 1 < len(tokens) and not tokens[i + 1].startswith("--"):
                flags[tok[2:]] = tokens[i + 1]
                i += 2
                continue
            flags[tok[2:]] = ""
        i += 1
    data = np.array([[float(v) for v in row] for row in rows]) \
        if rows else np.empty((0, len(columns)))
    return Table(header=header, command=command, columns=columns,
                 data=data, flags=flags)


def _validate(table: Table, kind: str, path: str) -> None:
    expected = _EXPECTED_COMMAND[kind]
    if table.command != expected:
        raise SchemaError(
            f"{path}: figure kind {kind!r} expects output of the "
            f"'{expected}' command, found '{table.command}'")
    for column in _REQUIRED_COLUMNS[kind]:
        if column not in table.columns:
            raise SchemaError(f"{path}: missing required column '{column}' "
                              f"for figure kind {kind!r}")


def _wls_slope(xs, ys, weights):
    """Precision-weighted least squares; same math as the simulator."""
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    w = np.asarray(weights)
    sw = w.sum()
    xbar = (w * xs).sum() / sw
    ybar = (w * ys).sum() / sw
    sxx = (w * (xs - xbar) ** 2).sum()
    slope = (w * (xs - xbar) * (ys - ybar)).sum() / sxx
    return float(slope), float(ybar - slope * xbar)


def _require_flag(table: Table, name: str, path: str) -> float:
    if name not in table.flags:
        raise SchemaError(f"{path}: header does not record --{name} "
                          "(required to draw the analytic overlay)")
    return float(table.flags[name])


# ---------------------------------------------------------------------------
# renderers
# ---------------------------------------------------------------------------


def _render_gamma_hist(table: Table, spec: FigureSpec) -> dict:
    theta = _require_flag(table, "theta", spec.input_path)
    sel = table.col("probe_index") == 0
    values = table.col("occupation_over_G")[sel]
    if values.size == 0:
        raise SchemaError(f"{spec.input_path}: no probe-0 rows")

    # plotted range [0, hi] with hi pushed until the analytic tail mass
    # is below 1e-9 (the curve itself starts epsilon above the origin to
    # dodge the theta < 1 singularity)
    hi = max(float(values.max()), 1.0)
    while scipy.special.gammainc(theta, hi) < 1.0 - 1e-9:
        hi *= 1.5
    grid = np.linspace(1e-9, hi, 2048)
    pdf = grid ** (theta - 1.0) * np.exp(-grid) / scipy.special.gamma(theta)
    density_integral = float(scipy.special.gammainc(theta, hi))

    fig, ax = plt.subplots(figsize=(6, 4))
    counts, _, _ = ax.hist(values, bins=48, density=True, alpha=0.6,
                           color="#4878d0",
                           label=f"occupation / G ({values.size} replicas)")
    ax.plot(grid, pdf, "k-", lw=1.5, label=f"Gamma({theta:g}, 1) density")
    ax.set_xlabel("occupation / G(x,x)")
    ax.set_ylabel("density")
    # cap the view against the theta < 1 singularity at the origin
    ax.set_ylim(0, 1.3 * max(float(counts.max()), float(pdf[len(pdf) // 10])))
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    return {"kind": spec.kind, "theta": theta, "n_samples": int(values.size),
            "density_integral": density_integral}


def _render_loglog(table: Table, spec: FigureSpec, xcol: str, xs_of) -> dict:
    est = table.col("estimate")
    se = table.col("se")
    xraw = table.col(xcol)
    keep = (est > 0) & (se > 0)  # same exclusions as the simulator's fit
    if keep.sum() < 3:
        raise SchemaError(f"{spec.input_path}: need >= 3 positive, "
                          "non-saturated estimates for the log-log fit")
    xs = np.array([xs_of(v) for v in xraw[keep]])
    ys = np.log(est[keep])
    w = 1.0 / (se[keep] / est[keep]) ** 2
    slope, intercept = _wls_slope(xs, ys, w)
    file_slope = float(table.col("fit_slope")[0])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(xs, ys, yerr=3.0 * se[keep] / est[keep], fmt="o",
                color="#4878d0", capsize=3, label="estimates (3 SE)")
    span = np.linspace(xs.min(), xs.max(), 50)
    ax.plot(span, slope * span + intercept, "k--", lw=1.2,
            label=f"WLS slope = {slope:.4f}")
    xlabel = ("log log(1/r)" if spec.kind == "crossing-loglog"
              else "log gamma")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("log estimate")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    return {"kind": spec.kind, "slope": slope, "intercept": intercept,
            "file_slope": file_slope,
            "slope_matches_file": abs(slope - file_slope) <= 1e-6}


def _render_martingale(table: Table, spec: FigureSpec) -> dict:
    ts = table.col("t")
    means = table.col("mean")
    ses = table.col("se")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ts, means, yerr=3.0 * ses, fmt="o-", color="#4878d0",
                capsize=3, label="MC mean (3 SE)")
    ax.axhline(0.0, color="k", lw=1.0, label="martingale expectation")
    ax.set_xlabel("t")
    ax.set_ylabel("E[(2t)^n L_n(R_t / 2t)]")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    worst = float(np.max(np.abs(means) / np.where(ses > 0, ses, np.inf)))
    return {"kind": spec.kind, "n_times": int(ts.size), "max_abs_z": worst}


def _render_duality(table: Table, spec: FigureSpec) -> dict:
    lhs = float(table.col("lhs")[0])
    lhs_se = float(table.col("lhs_se")[0])
    rhs = float(table.col("rhs")[0])
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.bar([0], [lhs], yerr=[3.0 * lhs_se], capsize=6, color="#4878d0",
           label="MC lhs (3 SE)")
    ax.bar([1], [rhs], color="#d05048", label="exact rhs")
    ax.set_xticks([0, 1], ["lhs", "rhs"])
    ax.set_ylabel("two-point value")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    return {"kind": spec.kind, "lhs": lhs, "rhs": rhs,
            "rel_err": abs(lhs - rhs) / rhs}


def _render_wickcov(table: Table, spec: FigureSpec) -> dict:
    fig, ax = plt.subplots(figsize=(6, 1.2 + 0.4 * table.data.shape[0]))
    ax.axis("off")
    cell_text = [[f"{int(row[table.columns.index('n')])}",
                  f"{int(row[table.columns.index('m')])}",
                  f"{row[table.columns.index('estimate')]:.6g}",
                  f"{row[table.columns.index('se')]:.3g}",
                  f"{row[table.columns.index('predicted')]:.6g}"]
                 for row in table.data]
    ax.table(cellText=cell_text,
             colLabels=["n", "m", "estimate", "SE", "predicted"],
             loc="center")
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=120)
    plt.close(fig)
    return {"kind": spec.kind, "n_rows": int(table.data.shape[0])}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns the metadata dict."""
    table = load_table(spec.input_path)
    _validate(table, spec.kind, spec.input_path)
    if spec.kind == "gamma-hist":
        return _render_gamma_hist(table, spec)
    if spec.kind == "crossing-loglog":
        return _render_loglog(table, spec, "r",
                              lambda r: math.log(-math.log(r)))
    if spec.kind == "zgamma-loglog":
        return _render_loglog(table, spec, "gamma", math.log)
    if spec.kind == "martingale-lines":
        return _render_martingale(table, spec)
    if spec.kind == "duality-bar":
        return _render_duality(table, spec)
    return _render_wickcov(table, spec)
