"""The plot scripts consume real artifacts from the three named scenarios."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from sasakiflow_plots.cli import main
from sasakiflow_plots.figures import (MissingColumnError, plot_decay,
                                      plot_spectrum, read_series)

PRESETS = ("round", "perturbed-regular", "football-21")


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    base = tmp_path_factory.mktemp("artifacts")
    for preset in PRESETS:
        out = base / preset
        cmd = [sys.executable, "-m", "sasakiflow.cli", "run",
               "--preset", preset, "--out", str(out)]
        subprocess.run(cmd, check=True, capture_output=True)
    return base


@pytest.mark.parametrize("preset", PRESETS)
@pytest.mark.parametrize("kind", ["decay", "spectrum", "profile"])
def test_cli_builds_every_figure(artifacts, tmp_path, preset, kind):
    out = tmp_path / preset
    code = main([kind, "--in", str(artifacts / preset), "--out", str(out)])
    assert code == 0
    image = out / f"{kind}.png"
    assert image.exists() and image.stat().st_size > 2000


def test_decay_annotation_matches_report(artifacts, tmp_path):
    run_dir = artifacts / "perturbed-regular"
    meta = plot_decay(run_dir / "series.csv", run_dir / "report.json",
                      tmp_path / "decay.png")
    report = json.loads((run_dir / "report.json").read_text())
    rate = report["rates"]["Y"]["rate"]
    assert meta["annotation"] == f"Y rate = {rate:.3g}"
    assert meta["fit_drawn"] is True


def test_decay_round_degenerate_series(artifacts, tmp_path):
    run_dir = artifacts / "round"
    meta = plot_decay(run_dir / "series.csv", run_dir / "report.json",
                      tmp_path / "round.png")
    assert Path(meta["out"]).exists()
    # Y is identically ~0; the clipped log plot must not draw a rate overlay
    assert meta["fit_drawn"] is False


def test_decay_football_has_no_fit_line(artifacts, tmp_path):
    run_dir = artifacts / "football-21"
    meta = plot_decay(run_dir / "series.csv", run_dir / "report.json",
                      tmp_path / "football.png")
    assert meta["verdict"] == "soliton_floor"
    assert meta["fit_drawn"] is False
    assert meta["annotation"] is None


def test_spectrum_overlay(artifacts, tmp_path):
    paths = [artifacts / p / "series.csv" for p in PRESETS]
    meta = plot_spectrum(paths, tmp_path / "overlay.png", labels=list(PRESETS))
    assert len(meta["runs"]) == 3
    assert (tmp_path / "overlay.png").exists()


def test_missing_columns_reported(tmp_path):
    bad = tmp_path / "series.csv"
    bad.write_text("t,Y\n0.0,1.0\n")
    with pytest.raises(MissingColumnError):
        plot_spectrum(bad, tmp_path / "x.png")


def test_rerun_is_deterministic(artifacts, tmp_path):
    run_dir = artifacts / "perturbed-regular"
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    plot_decay(run_dir / "series.csv", run_dir / "report.json", a)
    plot_decay(run_dir / "series.csv", run_dir / "report.json", b)
    assert a.read_bytes() == b.read_bytes()


def test_series_reader_roundtrip(artifacts):
    series = read_series(artifacts / "round" / "series.csv")
    assert series["t"][0] == 0.0
    assert abs(series["vol"][0] - 2.0) < 1e-12


@pytest.fixture(scope="session")
def sweep_artifacts(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweep")
    cfg = base / "sweep.json"
    cfg.write_text(json.dumps({
        "template": {
            "geometry": {"slopes": [2.0, 2.0], "n_nodes": 64},
            "initial_potential": {"family": "zero"},
            "flow": {"t_end": 0.5, "dt_max": 0.025, "sample_every": 0.05,
                     "with_spectrum": True},
        },
        "grid": {"slopes": [[2.0, 2.0], [2.0, 1.5], [2.0, 1.0]]},
    }))
    out = base / "out"
    cmd = [sys.executable, "-m", "sasakiflow.cli", "sweep",
           "--config", str(cfg), "--out", str(out)]
    subprocess.run(cmd, check=True, capture_output=True)
    return out


def test_sweep_figure(sweep_artifacts, tmp_path):
    code = main(["sweep", "--in", str(sweep_artifacts), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "sweep.png").stat().st_size > 2000


def test_spectrum_overlay_from_sweep_dir(sweep_artifacts, tmp_path):
    code = main(["spectrum", "--in", str(sweep_artifacts), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "spectrum.png").exists()


def test_figure_spec_validates_kind(tmp_path):
    from sasakiflow_plots import FigureSpec

    with pytest.raises(ValueError):
        FigureSpec(kind="pie", inputs={}, out_path=str(tmp_path / "x.png"))


def test_figure_spec_renders(artifacts, tmp_path):
    from sasakiflow_plots import FigureSpec

    run_dir = artifacts / "perturbed-regular"
    spec = FigureSpec(kind="decay",
                      inputs={"series": run_dir / "series.csv",
                              "report": run_dir / "report.json"},
                      out_path=str(tmp_path / "nested" / "decay.png"))
    meta = spec.render()
    assert Path(meta["out"]).exists()
