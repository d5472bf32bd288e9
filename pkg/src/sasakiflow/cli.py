"""Command-line interface: run / check / spectrum / continuity / sweep.

Flags mirror environment variables with the SASAKIFLOW_ prefix
(SASAKIFLOW_CONFIG, SASAKIFLOW_PRESET, SASAKIFLOW_OUT, SASAKIFLOW_N_THREADS,
SASAKIFLOW_SEED); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ._threads import single_threaded_blas
from .artifacts import (build_run_report, continuity_report_dict,
                        spectrum_report_dict, write_json, write_series_csv,
                        write_snapshots_jsonl, _fmt)
from .checks import run_check_suite
from .continuity import path_monotonicity, solve_path
from .errors import ConfigurationError, PathTerminationError, SasakiflowError
from .flow import run as run_flow
from .presets import (build_flow_config, build_geometry, build_initial_potential,
                      preset_config)
from .stability import eigen_spectrum
from .geometry import validate_state

ENV_PREFIX = "SASAKIFLOW_"

TOP_LEVEL_KEYS = {"geometry", "initial_potential", "flow", "seed"}


def _env_default(name):
    return os.environ.get(ENV_PREFIX + name.upper())


def load_run_config(args) -> dict:
    if args.config and args.preset:
        raise ConfigurationError("give --config or --preset, not both")
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {args.config}: {exc}") from exc
    else:
        raise ConfigurationError("one of --config or --preset is required")
    unknown = set(cfg) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("geometry", "initial_potential", "flow"):
        if key not in cfg:
            raise ConfigurationError(f"config is missing the {key!r} section")
    return cfg


def execute_run(cfg: dict, out_dir: Path) -> dict:
    bg = build_geometry(cfg["geometry"])
    phi0 = build_initial_potential(cfg["initial_potential"], bg)
    flow_cfg = build_flow_config(cfg["flow"])
    traj = run_flow(phi0, bg, flow_cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_series_csv(out_dir / "series.csv", traj.rows)
    write_snapshots_jsonl(out_dir / "snapshots.jsonl", traj)
    report = build_run_report(traj, config_echo=cfg)
    write_json(out_dir / "report.json", report)
    return report


def cmd_run(args) -> int:
    cfg = load_run_config(args)
    report = execute_run(cfg, Path(args.out))
    verdict = report["verdict"]["kind"] if report["verdict"] else "n/a"
    print(f"run complete: verdict={verdict} -> {args.out}")
    return 0


def cmd_check(args) -> int:
    seed = int(args.seed) if args.seed is not None else 0
    results = run_check_suite(seed=seed)
    failures = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name:28s} max residual {res.max_residual:.3e}"
              f"  (threshold {res.threshold:.1e})")
        if not res.passed:
            failures += 1
    print(f"{len(results) - failures}/{len(results)} suites passed")
    return 0 if failures == 0 else 1


def cmd_spectrum(args) -> int:
    cfg = load_run_config(args)
    bg = build_geometry(cfg["geometry"])
    phi0 = build_initial_potential(cfg["initial_potential"], bg)
    state = validate_state(phi0, bg)
    report = eigen_spectrum(state)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "spectrum.json", spectrum_report_dict(report))
    print(f"spectrum written -> {out_dir / 'spectrum.json'}")
    return 0


def cmd_continuity(args) -> int:
    cfg = load_run_config(args)
    bg = build_geometry(cfg["geometry"])
    phi0 = build_initial_potential(cfg["initial_potential"], bg)
    reference = validate_state(phi0, bg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    terminated_at = None
    try:
        path = solve_path(reference)
    except PathTerminationError as exc:
        path = exc.partial_path
        terminated_at = exc.last_good_t
        print(f"continuation stalled; last good t = {terminated_at}")
    mono = path_monotonicity(path) if len(path.ts) >= 5 else None
    write_json(out_dir / "continuity.json",
               continuity_report_dict(path, mono, terminated_at))
    print(f"continuity path written -> {out_dir / 'continuity.json'}")
    return 0


def _sweep_cases(template: dict, grid: dict):
    slopes_list = grid.get("slopes", [template["geometry"].get("slopes", [2.0, 2.0])])
    amp_list = grid.get("amplitudes", [None])
    cases = []
    for slopes in slopes_list:
        for amp in amp_list:
            cfg = json.loads(json.dumps(template))
            cfg["geometry"]["slopes"] = list(slopes)
            if amp is not None:
                cfg["initial_potential"] = {"family": "legendre",
                                            "coefficients": {"2": amp}}
            label = f"p{slopes[0]:g}-{slopes[1]:g}_a{0.0 if amp is None else amp:g}"
            cases.append((label, slopes, amp, cfg))
    return cases


def cmd_sweep(args) -> int:
    raw = json.loads(Path(args.config).read_text()) if args.config else {}
    if not raw:
        raise ConfigurationError("sweep needs --config with template and grid")
    unknown = set(raw) - {"template", "grid"}
    if unknown:
        raise ConfigurationError(f"unknown sweep keys: {sorted(unknown)}")
    template = raw.get("template")
    if template is None:
        raise ConfigurationError("sweep config is missing 'template'")
    grid = raw.get("grid", {})
    cases = _sweep_cases(template, grid)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_threads = int(args.n_threads) if args.n_threads else 1

    def one(case):
        label, slopes, amp, cfg = case
        try:
            report = execute_run(cfg, out_dir / label)
        except SasakiflowError as exc:
            return (label, slopes, amp, "error", str(exc), None, None, None)
        verdict = report["verdict"]["kind"] if report["verdict"] else "n/a"
        rate = report["rates"]["Y"]["rate"]
        return (label, slopes, amp, "ok", verdict,
                report["final_state"]["fut"], rate, report["final_state"]["nu"])

    if n_threads > 1 and len(cases) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, cases))
    else:
        results = [one(c) for c in cases]

    lines = ["label,p_minus,p_plus,amplitude,status,verdict,fut,rate,nu_inf"]
    for label, slopes, amp, status, verdict, fut, rate, nu in results:
        amp_s = "" if amp is None else _fmt(amp)
        fut_s = "" if fut is None else _fmt(fut)
        rate_s = "" if rate is None else _fmt(rate)
        nu_s = "" if nu is None else _fmt(nu)
        lines.append(f"{label},{_fmt(slopes[0])},{_fmt(slopes[1])},{amp_s},"
                     f"{status},{verdict},{fut_s},{rate_s},{nu_s}")
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n")
    print(f"sweep complete: {len(results)} runs -> {out_dir / 'summary.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sasakiflow",
        description="Normalized Sasaki-Ricci flow laboratory on U(1)-symmetric models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("check", cmd_check), ("spectrum", cmd_spectrum),
                     ("continuity", cmd_continuity), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=_env_default("config"))
        p.add_argument("--preset", default=_env_default("preset"))
        p.add_argument("--out", default=_env_default("out") or "out")
        p.add_argument("--n-threads", default=_env_default("n_threads"))
        p.add_argument("--seed", default=_env_default("seed"))
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with single_threaded_blas():
            return args.fn(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SasakiflowError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
