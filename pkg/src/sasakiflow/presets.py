"""Named run scenarios used by the CLI and the acceptance suite."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError
from .flow import FlowConfig
from .geometry import BackgroundGeometry, GeometryConfig, make_background


def legendre_potential(bg: BackgroundGeometry, coefficients: dict) -> np.ndarray:
    """Potential from a {degree: coefficient} map in the Legendre basis."""
    if not coefficients:
        return np.zeros(bg.n)
    degrees = {int(k): float(v) for k, v in coefficients.items()}
    coeffs = np.zeros(max(degrees) + 1)
    for deg, val in degrees.items():
        if deg < 0:
            raise ConfigurationError(f"negative Legendre degree {deg}")
        coeffs[deg] = val
    return npleg.legval(bg.grid.nodes, coeffs)


PRESETS = {
    "round": {
        "geometry": {"slopes": [2.0, 2.0], "n_nodes": 128},
        "initial_potential": {"family": "zero"},
        "flow": {
            "t_end": 5.0, "dt_init": 0.01, "dt_max": 0.05, "dt_min": 1e-7,
            "rtol": 1e-6, "sample_every": 0.05, "scheme": "imex",
        },
    },
    "perturbed-regular": {
        "geometry": {"slopes": [2.0, 2.0], "n_nodes": 128},
        "initial_potential": {"family": "legendre", "coefficients": {"2": 0.3}},
        "flow": {
            "t_end": 20.0, "dt_init": 0.0125, "dt_max": 0.0125, "dt_min": 1e-7,
            "rtol": 1e-6, "sample_every": 0.0125, "scheme": "imex",
        },
    },
    "football-21": {
        "geometry": {"slopes": [2.0, 1.0], "n_nodes": 128},
        "initial_potential": {"family": "zero"},
        "flow": {
            "t_end": 20.0, "dt_init": 0.0125, "dt_max": 0.0125, "dt_min": 1e-7,
            "rtol": 1e-6, "sample_every": 0.025, "scheme": "imex",
            "recenter_threshold": 0.02,
        },
    },
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    import copy

    return copy.deepcopy(PRESETS[name])


def build_geometry(spec: dict) -> BackgroundGeometry:
    spec = dict(spec)
    n_nodes = int(spec.pop("n_nodes", 128))
    if "slopes" in spec and "weights" in spec:
        raise ConfigurationError("give either slopes or weights, not both")
    if "slopes" in spec:
        pm, pp = spec.pop("slopes")
        cfg = GeometryConfig(p_minus=float(pm), p_plus=float(pp), n_nodes=n_nodes)
    elif "weights" in spec:
        a, b = spec.pop("weights")
        cfg = GeometryConfig.from_weights(float(a), float(b), n_nodes=n_nodes)
    else:
        raise ConfigurationError("geometry needs 'slopes' or 'weights'")
    if spec:
        raise ConfigurationError(f"unknown geometry keys: {sorted(spec)}")
    return make_background(cfg)


def build_initial_potential(spec: dict, bg: BackgroundGeometry) -> np.ndarray:
    spec = dict(spec)
    family = spec.pop("family", "zero")
    if family == "zero":
        phi0 = np.zeros(bg.n)
    elif family == "legendre":
        phi0 = legendre_potential(bg, spec.pop("coefficients", {}))
    elif family == "file":
        path = spec.pop("path")
        phi0 = np.asarray(np.loadtxt(path, dtype=float))
        if phi0.shape != (bg.n,):
            raise ConfigurationError(
                f"nodal data file has shape {phi0.shape}, grid needs ({bg.n},)")
    else:
        raise ConfigurationError(f"unknown initial_potential family {family!r}")
    if spec:
        raise ConfigurationError(f"unknown initial_potential keys: {sorted(spec)}")
    return phi0


def build_flow_config(spec: dict) -> FlowConfig:
    spec = dict(spec)
    known = {f for f in FlowConfig.__dataclass_fields__}
    unknown = set(spec) - known
    if unknown:
        raise ConfigurationError(f"unknown flow keys: {sorted(unknown)}")
    return FlowConfig(**spec)
