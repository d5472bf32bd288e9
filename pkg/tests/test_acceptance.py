"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The three scenario trajectories come from session fixtures.
"""

import json

import numpy as np
import pytest

from sasakiflow import (bochner_kodaira_residual, eigen_spectrum, futaki,
                        renormalize_initial, validate_state, y_evolution_residual)
from sasakiflow.checks import random_smooth_field
from sasakiflow.cli import execute_run
from sasakiflow.continuity import path_monotonicity, solve_path
from sasakiflow.flow import FlowConfig, run
from sasakiflow.geometry import grad_norm_sq
from sasakiflow.presets import (build_flow_config, build_geometry,
                                build_initial_potential, preset_config)
from sasakiflow.stability import condition_flags, fit_decay_rate

FD_T_START = 0.25  # FD-in-time identities skip the sub-cadence initial transient


def _report(name, value, gate):
    print(f"PASS {name}: {value} (gate {gate})")


# ---------------------------------------------------------------------------
# fixed point
# ---------------------------------------------------------------------------

def test_criterion_round_fixed_point(traj_round):
    worst = max(float(np.abs(s.phi).max()) for s in traj_round.snapshots)
    assert worst < 1e-10
    _report("round fixed point: sup_t |phi|_inf", f"{worst:.3e}", "< 1e-10")


# ---------------------------------------------------------------------------
# convergence under satisfied conditions
# ---------------------------------------------------------------------------

def test_criterion_perturbed_regular_converges(traj_perturbed):
    verdict = traj_perturbed.verdict
    assert verdict is not None and verdict.kind == "converged"

    u_end = float(np.abs(traj_perturbed.states[-1].ricci_potential).max())
    assert u_end < 1e-6

    flags = condition_flags(traj_perturbed)
    assert flags.F and flags.T and flags.C_proxy and flags.M_proxy

    limit_spectrum = eigen_spectrum(traj_perturbed.states[-1])
    nu_inf = limit_spectrum.nu
    assert abs(nu_inf - 3.0) < 1e-3

    ts = np.array([r.t for r in traj_perturbed.rows])
    fit = fit_decay_rate(ts, np.array([r.Y for r in traj_perturbed.rows]))
    target = 2.0 * (nu_inf - 1.0)
    assert abs(fit.rate - target) / target < 0.15
    _report("perturbed-regular", f"verdict=converged |u(T)|={u_end:.2e} "
            f"flags all true, Y-rate {fit.rate:.4f} vs 2(nu-1)={target:.4f}",
            "rate within 15%")


# ---------------------------------------------------------------------------
# obstructed convergence
# ---------------------------------------------------------------------------

def test_criterion_football_soliton_floor(traj_football):
    for state in traj_football.states[:: len(traj_football.states) // 8]:
        for method in ("gradient-pairing", "curvature-weighted", "closed-form"):
            assert abs(futaki(state, method) + 0.5) < 1e-6

    flags = condition_flags(traj_football)
    assert flags.F is False

    verdict = traj_football.verdict
    assert verdict is not None and verdict.kind == "soliton_floor"

    rows = traj_football.rows
    ts = np.array([r.t for r in rows])
    ys = np.array([r.Y for r in rows])
    y_end = ys[-1]
    window = ys[(ts >= 10.0) & (ts <= 20.0)]
    assert y_end > 0
    assert window.min() >= 0.9 * y_end
    _report("football-21", f"fut=-0.5 (3 methods), F=false, soliton_floor, "
            f"Y floor ratio {window.min() / y_end:.6f}", ">= 0.9")


# ---------------------------------------------------------------------------
# identity suite at every sample of every preset
# ---------------------------------------------------------------------------

def _batched_poincare_slacks(state, rng, count=20):
    from numpy.polynomial import legendre as npleg

    grid = state.grid
    degrees = np.arange(11)
    coeffs = 0.5 * rng.standard_normal((count, 11)) / (1.0 + degrees) ** 2
    fields = npleg.legval(grid.nodes, coeffs.T)
    if fields.ndim == 1:
        fields = fields[None, :]
    w = state.weighted_measure()
    dfields = fields @ grid.diff.T
    gsq = state.bg.phi0 * dfields**2 / (2.0 * state.density)
    grad = (gsq @ w) / (2.0 * state.bg.kappa)
    mean = (fields @ w) / 2.0
    quad = (fields**2 @ w) / 2.0
    return grad + mean**2 - quad


@pytest.mark.parametrize("preset", ["round", "perturbed-regular", "football-21"])
def test_criterion_identity_suite(preset, traj_round, traj_perturbed, traj_football):
    traj = {"round": traj_round, "perturbed-regular": traj_perturbed,
            "football-21": traj_football}[preset]
    rng = np.random.default_rng(42)

    worst_bk = 0.0
    worst_fut = 0.0
    worst_gb = 0.0
    worst_vol = 0.0
    worst_poincare = 0.0
    target_gb = (traj.bg.p_minus + traj.bg.p_plus) / 2.0
    for state in traj.states:
        for _ in range(2):
            f = random_smooth_field(state.grid, rng, scale=0.5)
            worst_bk = max(worst_bk, bochner_kodaira_residual(f, state))
        vals = [futaki(state, m) for m in
                ("gradient-pairing", "curvature-weighted", "closed-form")]
        worst_fut = max(worst_fut, max(vals) - min(vals))
        worst_gb = max(worst_gb, abs(state.integrate_dm(state.curvature) - target_gb))
        worst_vol = max(worst_vol, abs(state.bg.integrate(state.density) - 2.0))
        worst_poincare = max(worst_poincare,
                             float(-_batched_poincare_slacks(state, rng).min()))

    worst_y = 0.0
    for i in range(1, len(traj.states) - 1):
        if traj.states[i].t < FD_T_START:
            continue
        worst_y = max(worst_y, y_evolution_residual(traj.states, i))

    assert worst_bk < 1e-6
    assert worst_y < 5e-3
    assert worst_fut < 1e-6
    assert worst_gb < 1e-8
    assert worst_vol < 1e-9
    assert worst_poincare < 1e-10
    _report(f"identity suite [{preset}]",
            f"BK {worst_bk:.1e}, Ydot {worst_y:.1e}, futaki {worst_fut:.1e}, "
            f"GB {worst_gb:.1e}, vol {worst_vol:.1e}, poincare slack "
            f"{-worst_poincare:.1e}", "all within gates")


def test_criterion_ydot_refines_with_cadence(traj_perturbed, traj_perturbed_fine):
    def worst(traj):
        out = 0.0
        for i in range(1, len(traj.states) - 1):
            if traj.states[i].t < FD_T_START:
                continue
            out = max(out, y_evolution_residual(traj.states, i))
        return out

    coarse = worst(traj_perturbed)
    fine = worst(traj_perturbed_fine)
    assert coarse / fine >= 3.0
    _report("Ydot cadence refinement", f"{coarse:.2e} -> {fine:.2e} "
            f"(x{coarse / fine:.2f})", ">= 3x")


# ---------------------------------------------------------------------------
# spectrum oracle
# ---------------------------------------------------------------------------

def test_criterion_spectrum(round_state, traj_round, traj_perturbed, traj_football):
    report = eigen_spectrum(round_state, k=4)
    err = float(np.abs(report.eigenvalues - np.array([1.0, 3.0, 6.0, 10.0])).max())
    assert err < 1e-6

    floor = np.inf
    for traj in (traj_round, traj_perturbed, traj_football):
        dims = set()
        for spec in traj.spectra:
            assert spec is not None
            floor = min(floor, float(spec.eigenvalues.min()))
            dims.add(spec.dim_hol_sector)
        assert len(dims) == 1, f"holomorphic sector jumped: {dims}"
    assert floor >= 1.0 - 5e-3
    _report("spectrum", f"round eigs err {err:.1e}, min eigenvalue {floor:.6f}, "
            "dim_hol constant on every run", "gates met")


# ---------------------------------------------------------------------------
# W / C0 rate relation
# ---------------------------------------------------------------------------

def test_criterion_w_c0_rate_relation(traj_perturbed):
    ts = np.array([r.t for r in traj_perturbed.rows])
    w_fit = fit_decay_rate(ts, np.array([r.W for r in traj_perturbed.rows]))
    u_inf = np.array([float(np.abs(s.ricci_potential).max())
                      for s in traj_perturbed.states])
    u_fit = fit_decay_rate(ts, u_inf)
    bound = w_fit.rate / 4.0  # 1/(2(n+1)) at n = 1
    assert u_fit.rate >= bound * 0.95
    _report("W/C0 rate relation", f"u rate {u_fit.rate:.3f} vs W rate/4 = "
            f"{bound:.3f}", ">= with 5% slack")


# ---------------------------------------------------------------------------
# continuity / flow agreement
# ---------------------------------------------------------------------------

def test_criterion_continuity_flow_agreement(traj_perturbed):
    bg = traj_perturbed.bg
    phi_ref = traj_perturbed.snapshots[0].phi
    reference = validate_state(phi_ref, bg)
    path = solve_path(reference)
    mono = path_monotonicity(path, slack=1e-8)
    assert mono.m_nonincreasing

    renormalized = renormalize_initial(traj_perturbed)
    flow_limit = renormalized.snapshots[-1].phi
    continuity_limit = phi_ref + path.final_potential()
    diff = continuity_limit - flow_limit
    diff -= bg.lebesgue_mean(diff)
    dev = float(np.abs(diff).max())
    assert dev < 1e-5
    _report("continuity/flow agreement", f"|phi_cont - phi_flow| mod const = "
            f"{dev:.2e}, M monotone (worst increase {mono.max_m_increase:.1e})",
            "< 1e-5, <= 1e-8")


# ---------------------------------------------------------------------------
# renormalization invariance
# ---------------------------------------------------------------------------

def test_criterion_renormalization_invariance():
    cfg = preset_config("perturbed-regular")
    bg = build_geometry(cfg["geometry"])
    phi0 = build_initial_potential(cfg["initial_potential"], bg)
    flow_cfg = build_flow_config({**cfg["flow"], "t_end": 8.0,
                                  "with_spectrum": False})
    traj_a = renormalize_initial(run(phi0, bg, flow_cfg))
    traj_b = renormalize_initial(run(phi0 + 5.0, bg, flow_cfg))
    worst = max(float(np.abs(a.phi - b.phi).max())
                for a, b in zip(traj_a.snapshots, traj_b.snapshots))
    assert worst < 1e-6
    # the classical normalization constant is a gauge invariant
    assert abs(traj_a.renormalization.c0_estimate
               - traj_b.renormalization.c0_estimate) < 1e-9
    _report("renormalization invariance",
            f"uniform deviation {worst:.2e}", "< 1e-6")


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

def test_criterion_determinism(tmp_path):
    cfg = preset_config("round")
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    execute_run(json.loads(json.dumps(cfg)), out_a)
    execute_run(json.loads(json.dumps(cfg)), out_b)
    for name in ("series.csv", "report.json", "snapshots.jsonl"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    _report("determinism", "byte-identical series.csv/report.json/snapshots.jsonl",
            "exact")
