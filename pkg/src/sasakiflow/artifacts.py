"""Deterministic serialization of trajectories, reports, and spectra.

Time series go to CSV with a fixed column order; snapshots to JSON-lines
(one object per sample, mean-zero nodal values plus the gauge scalars, which
is lossless for re-deriving every diagnostics column); reports to a single
sorted-key JSON document. Floats are written with shortest round-trip repr,
so re-running a configuration reproduces byte-identical artifacts.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FitUnavailableError
from .functionals import CSV_COLUMNS
from .stability import condition_flags, equivalence_monitor, fit_decay_rate, shi_monitor


def _fmt(x) -> str:
    return repr(float(x))


def write_series_csv(path, rows) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row.as_tuple()))
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshots_jsonl(path, traj) -> None:
    with open(path, "w") as fh:
        for snap in traj.snapshots:
            obj = {
                "t": snap.t,
                "phi": [float(v) for v in snap.psi],
                "phi_mean": snap.mean,
                "gauge_growth": snap.gauge_growth,
                "gauge_tau": snap.gauge_tau,
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _try_fit(ts, values):
    try:
        fit = fit_decay_rate(ts, values)
    except FitUnavailableError:
        return {"rate": None, "r_squared": None}
    return {"rate": fit.rate, "r_squared": fit.r_squared,
            "window": list(fit.window), "n_points": fit.n_points}


def build_run_report(traj, config_echo: dict) -> dict:
    """Aggregate verdict, rates, condition flags, and monitor suprema."""
    rows = traj.rows
    ts = np.array([r.t for r in rows])
    u_inf = np.array([float(np.max(np.abs(s.ricci_potential))) for s in traj.states])
    try:
        flags = condition_flags(traj)
    except ValueError:
        flags = None
    shi = shi_monitor(traj)
    equiv = equivalence_monitor(traj)
    last = rows[-1]
    final_state = traj.states[-1]

    report = {
        "verdict": None if traj.verdict is None else {
            "kind": traj.verdict.kind,
            "rate": traj.verdict.rate,
            "r_squared": traj.verdict.r_squared,
            "level": traj.verdict.level,
        },
        "rates": {
            "Y": _try_fit(ts, np.array([r.Y for r in rows])),
            "W": _try_fit(ts, np.array([r.W for r in rows])),
            "u_inf": _try_fit(ts, u_inf),
        },
        "flags": None if flags is None else flags.as_dict(),
        "final_state": {
            "t": last.t,
            "u_inf": float(u_inf[-1]),
            "R_min": last.R_min,
            "R_max": last.R_max,
            "fut": last.fut,
            "nu": last.nu,
            "lambda_proxy": [last.lambda_lo, last.lambda_hi],
            "min_density": float(final_state.density.min()),
        },
        "monitors": {
            "perelman": {
                "max_abs_R": max(max(abs(r.R_min), abs(r.R_max)) for r in rows),
                "max_u_inf": float(u_inf.max()),
                "max_grad_u": max(r.grad_u_max for r in rows),
                "max_diam_T": max(r.diam_T for r in rows),
            },
            "shi": {"sup_m1": shi.sup_m1, "sup_m2": shi.sup_m2,
                    "window": list(shi.window)},
            "equivalence": {"integral": equiv.integral, "max_ratio": equiv.max_ratio},
        },
        "renormalization": None if traj.renormalization is None else {
            "c0_estimate": traj.renormalization.c0_estimate,
            "gauge_coefficient": traj.renormalization.gauge_coefficient,
            "sup_phidot": traj.renormalization.sup_phidot,
            "sup_u": traj.renormalization.sup_u,
        },
        "config": config_echo,
        "versions": {
            "sasakiflow": __version__,
            "numpy": np.__version__,
            "scipy": _scipy_version(),
        },
    }
    return report


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def spectrum_report_dict(report) -> dict:
    return {
        "eigenvalues": [float(v) for v in report.eigenvalues],
        "multiplicities": list(report.multiplicities),
        "nu": report.nu,
        "lambda_proxy": [report.lambda_proxy[0], report.lambda_proxy[1]],
        "dim_hol_sector": report.dim_hol_sector,
        "osc_u": report.osc_u,
        "kappa": report.kappa,
    }


def continuity_report_dict(path_obj, monotonicity=None, terminated_at=None) -> dict:
    points = []
    for i, t in enumerate(path_obj.ts):
        e = path_obj.energies[i]
        points.append({
            "t": float(t),
            "I": e.I, "J": e.J, "L": e.L, "M": e.M,
            "newton_iterations": path_obj.newton_iters[i],
            "final_residual": path_obj.residual_histories[i][-1],
        })
    out = {
        "points": points,
        "terminated_at": terminated_at,
        "version": __version__,
    }
    if monotonicity is not None:
        out["monotonicity"] = {
            "M_nonincreasing": monotonicity.m_nonincreasing,
            "IJ_nondecreasing": monotonicity.ij_nondecreasing,
            "max_M_increase": monotonicity.max_m_increase,
            "max_IJ_decrease": monotonicity.max_ij_decrease,
        }
    return out
