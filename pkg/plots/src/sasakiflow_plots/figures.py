"""Figure builders over run artifacts.

These scripts are read-only consumers of the primary package's outputs:
series.csv (fixed column order), report.json, snapshots.jsonl, and
summary.csv from sweeps. Nothing is recomputed from the nodal data beyond
what a plot needs; every number shown is taken from the artifacts. All
figures render on the headless Agg backend and are deterministic, so
re-running a script overwrites its outputs byte-for-byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SERIES_FLOOR = 1e-16  # log plots clip degenerate (converged) series here


class MissingColumnError(KeyError):
    """A required column is absent from the input CSV."""


def read_series(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty series")
    return {name: np.array([float(r[name]) for r in rows])
            for name in rows[0].keys()}


def require_columns(series, names, path=""):
    missing = [n for n in names if n not in series]
    if missing:
        raise MissingColumnError(f"{path}: missing columns {missing}")


def read_report(path):
    return json.loads(Path(path).read_text())


def _format_rate(rate) -> str:
    return f"{float(rate):.3g}"


def plot_decay(series_csv, report_json, out_path) -> dict:
    """Log-scale decay of Y, W, and osc(u), annotated with the fitted Y rate.

    The fit overlay is drawn only when the report classified the run as
    converged; soliton-floor runs show their plateau unadorned. Returns the
    output path and the annotation text (the test contract: the annotated
    rate equals the report's fitted rate to three significant figures).
    """
    series = read_series(series_csv)
    require_columns(series, ("t", "Y", "W", "osc_u"), series_csv)
    report = read_report(report_json)

    ts = series["t"]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name, color in (("Y", "tab:blue"), ("W", "tab:orange"),
                        ("osc_u", "tab:green")):
        ax.semilogy(ts, np.maximum(series[name], SERIES_FLOOR),
                    label=name, color=color, lw=1.4)

    verdict = (report.get("verdict") or {}).get("kind")
    y_rate = (report.get("rates") or {}).get("Y", {}).get("rate")
    annotation = None
    fit_drawn = False
    if verdict == "converged" and y_rate is not None and np.isfinite(y_rate):
        fit = report["rates"]["Y"]
        lo, hi = fit.get("window", (ts[0], ts[-1]))
        mask = (ts >= lo) & (ts <= hi) & (series["Y"] > SERIES_FLOOR)
        if mask.any():
            anchor_t = ts[mask][0]
            anchor_y = series["Y"][mask][0]
            overlay = anchor_y * np.exp(-y_rate * (ts[mask] - anchor_t))
            ax.semilogy(ts[mask], overlay, "k--", lw=1.0, label="fitted rate")
            fit_drawn = True
        annotation = f"Y rate = {_format_rate(y_rate)}"
        ax.annotate(annotation, xy=(0.98, 0.95), xycoords="axes fraction",
                    ha="right", va="top")

    ax.set_xlabel("t")
    ax.set_ylabel("value")
    title = f"decay ({verdict})" if verdict else "decay"
    ax.set_title(title)
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return {"out": str(out_path), "annotation": annotation, "fit_drawn": fit_drawn,
            "verdict": verdict}


def plot_spectrum(series_csv, out_path, labels=None) -> dict:
    """nu(t) with the lambda-proxy band, holomorphic-sector dimension on a twin axis.

    `series_csv` may be a single path or a list of paths; several runs are
    overlaid with labels.
    """
    paths = [series_csv] if isinstance(series_csv, (str, Path)) else list(series_csv)
    labels = labels or [Path(p).parent.name or f"run {i}" for i, p in enumerate(paths)]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    twin = ax.twinx()
    drawn = []
    for path, label in zip(paths, labels):
        series = read_series(path)
        require_columns(series, ("t", "nu", "lambda_lo", "lambda_hi", "dim_hol"), path)
        ts = series["t"]
        line, = ax.plot(ts, series["nu"], lw=1.4, label=f"nu [{label}]")
        ax.fill_between(ts, series["lambda_lo"], series["lambda_hi"],
                        alpha=0.2, color=line.get_color())
        twin.plot(ts, series["dim_hol"], ":", lw=1.0, color=line.get_color())
        drawn.append(label)
    ax.set_xlabel("t")
    ax.set_ylabel("nu and lambda proxy band")
    twin.set_ylabel("dim holomorphic sector")
    twin.set_ylim(bottom=0)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return {"out": str(out_path), "runs": drawn}


def plot_profile(snapshots_jsonl, report_json, series_csv, out_path,
                 n_profiles: int = 5) -> dict:
    """Potential profiles at a few sampled times plus the curvature range trace.

    Node positions are reconstructed from the configuration echoed in the
    report (Gauss-Legendre points of the configured grid size); nodal values
    are plotted as stored.
    """
    report = read_report(report_json)
    n_nodes = int(report["config"]["geometry"].get("n_nodes", 128))
    nodes, _ = np.polynomial.legendre.leggauss(n_nodes)

    snaps = []
    with open(snapshots_jsonl) as fh:
        for line in fh:
            snaps.append(json.loads(line))
    picks = np.unique(np.linspace(0, len(snaps) - 1, n_profiles).astype(int))

    series = read_series(series_csv)
    require_columns(series, ("t", "R_min", "R_max", "R_mean"), series_csv)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    for idx in picks:
        snap = snaps[idx]
        ax1.plot(nodes, np.asarray(snap["phi"]), lw=1.2,
                 label=f"t = {snap['t']:g}")
    ax1.set_xlabel("moment coordinate y")
    ax1.set_ylabel("potential (mean-zero part)")
    ax1.legend(loc="best", fontsize=8)

    ts = series["t"]
    ax2.fill_between(ts, series["R_min"], series["R_max"], alpha=0.25,
                     label="curvature range")
    ax2.plot(ts, series["R_mean"], lw=1.2, label="mean curvature")
    ax2.set_xlabel("t")
    ax2.set_ylabel("transverse curvature")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return {"out": str(out_path), "profiles": [float(snaps[i]["t"]) for i in picks]}


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: inputs, kind, output image path, style options."""

    kind: str                  # decay | spectrum | profile | sweep
    inputs: dict               # role -> path (series, report, snapshots, summary)
    out_path: str
    style: dict = field(default_factory=dict)

    KINDS = ("decay", "spectrum", "profile", "sweep")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        parent = Path(self.out_path).parent
        if parent and not parent.exists():
            parent.mkdir(parents=True, exist_ok=True)

    def render(self) -> dict:
        if self.kind == "decay":
            return plot_decay(self.inputs["series"], self.inputs["report"],
                              self.out_path)
        if self.kind == "spectrum":
            return plot_spectrum(self.inputs["series"], self.out_path,
                                 labels=self.style.get("labels"))
        if self.kind == "profile":
            return plot_profile(self.inputs["snapshots"], self.inputs["report"],
                                self.inputs["series"], self.out_path,
                                n_profiles=self.style.get("n_profiles", 5))
        return plot_sweep(self.inputs["summary"], self.out_path)


def plot_sweep(summary_csv, out_path) -> dict:
    """Summary chart of a sweep: Futaki invariant and fitted rate per case."""
    with open(summary_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    labels = [r["label"] for r in rows]
    futs = [float(r["fut"]) if r["fut"] else np.nan for r in rows]
    rates = [float(r["rate"]) if r["rate"] else np.nan for r in rows]
    xs = np.arange(len(rows))
    ax1.bar(xs, futs, color="tab:red")
    ax1.set_xticks(xs, labels, rotation=30, ha="right", fontsize=8)
    ax1.set_ylabel("Futaki invariant")
    ax2.bar(xs, rates, color="tab:blue")
    ax2.set_xticks(xs, labels, rotation=30, ha="right", fontsize=8)
    ax2.set_ylabel("fitted Y rate")
    for ax in (ax1, ax2):
        ax.axhline(0.0, color="k", lw=0.8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
    return {"out": str(out_path), "cases": labels}
