"""Shared fixtures. The three named scenarios are expensive, so they are
integrated once per session and reused across test modules."""

import numpy as np
import pytest
import threadpoolctl

# small-matrix workload: multi-threaded BLAS is a large net loss here
threadpoolctl.threadpool_limits(limits=1, user_api="blas")

from sasakiflow import GeometryConfig, make_background, validate_state
from sasakiflow.flow import run
from sasakiflow.presets import (build_flow_config, build_geometry,
                                build_initial_potential, preset_config)


@pytest.fixture(scope="session")
def bg_regular():
    return make_background(GeometryConfig(2.0, 2.0, 128))


@pytest.fixture(scope="session")
def bg_regular_small():
    return make_background(GeometryConfig(2.0, 2.0, 64))


@pytest.fixture(scope="session")
def bg_football():
    return make_background(GeometryConfig(2.0, 1.0, 128))


@pytest.fixture(scope="session")
def round_state(bg_regular):
    return validate_state(np.zeros(bg_regular.n), bg_regular)


def run_preset(name, **flow_overrides):
    cfg = preset_config(name)
    cfg["flow"].update(flow_overrides)
    bg = build_geometry(cfg["geometry"])
    phi0 = build_initial_potential(cfg["initial_potential"], bg)
    return run(phi0, bg, build_flow_config(cfg["flow"]))


@pytest.fixture(scope="session")
def traj_round():
    return run_preset("round")


@pytest.fixture(scope="session")
def traj_perturbed():
    return run_preset("perturbed-regular")


@pytest.fixture(scope="session")
def traj_perturbed_fine():
    # halved diagnostics cadence, spectra off: used for the refinement checks
    return run_preset("perturbed-regular", sample_every=0.00625, with_spectrum=False)


@pytest.fixture(scope="session")
def traj_football():
    return run_preset("football-21")
