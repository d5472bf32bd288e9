"""Figure CLI: sasakiflow-plot {decay|spectrum|profile|sweep} --in DIR --out DIR.

The input directory is a run output directory (series.csv, report.json,
snapshots.jsonl) or, for sweeps, the sweep directory holding summary.csv and
per-run subdirectories. Images land in the output directory as
<kind>.png.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, MissingColumnError


def _run_dirs(base: Path):
    return sorted(p.parent for p in base.glob("*/series.csv"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sasakiflow-plot")
    parser.add_argument("kind", choices=["decay", "spectrum", "profile", "sweep"])
    parser.add_argument("--in", dest="in_dir", required=True)
    parser.add_argument("--out", dest="out_dir", required=True)
    args = parser.parse_args(argv)

    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{args.kind}.png"
    style = {}
    inputs = {"series": in_dir / "series.csv", "report": in_dir / "report.json",
              "snapshots": in_dir / "snapshots.jsonl", "summary": in_dir / "summary.csv"}
    if args.kind == "spectrum" and not inputs["series"].exists():
        runs = _run_dirs(in_dir)
        if not runs:
            print(f"no series.csv under {in_dir}", file=sys.stderr)
            return 2
        inputs["series"] = [r / "series.csv" for r in runs]
        style["labels"] = [r.name for r in runs]
    try:
        meta = FigureSpec(kind=args.kind, inputs=inputs, out_path=str(out_path),
                          style=style).render()
    except (FileNotFoundError, MissingColumnError, ValueError) as exc:
        print(f"cannot build {args.kind} figure: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
