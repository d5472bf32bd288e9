import numpy as np
import pytest
from dataclasses import replace

from sasakiflow import (bochner_kodaira_residual, diagnostics, dirichlet_y,
                        energy_functionals, futaki, poincare_slack, validate_state)
from sasakiflow.checks import random_smooth_field
from sasakiflow.errors import InadmissiblePotentialError
from sasakiflow.functionals import monge_ampere_energy, pure_hessian_sq


def test_round_diagnostics_vanish(round_state):
    row = diagnostics(round_state)
    for name in ("Y", "W", "Z", "a", "fut", "mabuchi"):
        assert abs(getattr(row, name)) < 1e-10, name
    assert abs(row.vol - 2.0) < 1e-12
    assert abs(row.R_mean - 1.0) < 1e-8


def test_w_quadratic_expansion(round_state):
    # synthetic Ricci potential u = eps*y (normalized): W = eps^2/3 + O(eps^3)
    eps = 1e-3
    bg = round_state.bg
    u_raw = eps * bg.grid.nodes
    u = u_raw + np.log(bg.integrate(np.exp(-u_raw)) / 2.0)
    state = replace(round_state, ricci_potential=u)
    row = diagnostics(state)
    assert abs(row.W - eps**2 / 3.0) < 2 * eps**3
    assert row.a <= 0.0


def test_futaki_regular_vanishes(bg_regular):
    rng = np.random.default_rng(0)
    for _ in range(3):
        state = validate_state(random_smooth_field(bg_regular.grid, rng), bg_regular)
        for method in ("gradient-pairing", "curvature-weighted", "closed-form"):
            assert abs(futaki(state, method)) < 1e-8


def test_futaki_football_all_methods(bg_football):
    rng = np.random.default_rng(1)
    values = []
    for _ in range(5):
        state = validate_state(random_smooth_field(bg_football.grid, rng), bg_football)
        vals = [futaki(state, m) for m in
                ("gradient-pairing", "curvature-weighted", "closed-form")]
        assert abs(vals[2] + 0.5) < 1e-15
        assert abs(vals[0] + 0.5) < 1e-6
        assert abs(vals[1] + 0.5) < 1e-6
        values.append(vals[0])
    # class invariance: the measured value barely moves across potentials
    assert max(values) - min(values) < 1e-6


def test_futaki_unknown_method(round_state):
    with pytest.raises(ValueError):
        futaki(round_state, "nope")


def test_bochner_kodaira_constant_and_linear(round_state):
    assert bochner_kodaira_residual(np.ones(round_state.grid.n), round_state) == 0.0
    y = round_state.grid.nodes
    # closed-form check: Lap y = -y, pure Hessian vanishes, curvature term 2/3
    lap = round_state.laplacian(y)
    assert np.abs(lap + y).max() < 1e-8
    assert round_state.integrate_dm(pure_hessian_sq(y, round_state)) < 1e-12
    assert bochner_kodaira_residual(y, round_state) < 1e-8


def test_bochner_kodaira_random_states(bg_regular, bg_football):
    rng = np.random.default_rng(2)
    for bg in (bg_regular, bg_football):
        for _ in range(3):
            state = validate_state(random_smooth_field(bg.grid, rng), bg)
            f = random_smooth_field(bg.grid, rng, scale=0.5)
            assert bochner_kodaira_residual(f, state) < 1e-6


def test_poincare_equality_on_holomorphic_sector(round_state):
    # f = y spans the invariant eigenvalue-one sector at the round state
    assert abs(poincare_slack(round_state.grid.nodes, round_state)) < 1e-12


def test_poincare_nonnegative(bg_regular, bg_football):
    rng = np.random.default_rng(3)
    for bg in (bg_regular, bg_football):
        state = validate_state(random_smooth_field(bg.grid, rng), bg)
        for _ in range(20):
            f = random_smooth_field(bg.grid, rng, scale=0.5)
            assert poincare_slack(f, state) >= -1e-10


def test_energy_functionals_zero_and_constant(round_state):
    report = energy_functionals(np.zeros(round_state.grid.n), round_state)
    assert report.I == report.J == report.L == report.M == 0.0
    const = 1.37 * np.ones(round_state.grid.n)
    report = energy_functionals(const, round_state)
    assert abs(report.I) < 1e-12
    assert abs(report.J) < 1e-12
    assert abs(report.L - 1.37) < 1e-12
    assert abs(report.M) < 1e-12


def test_energy_i_minus_j_nonnegative(bg_regular):
    rng = np.random.default_rng(4)
    ref = validate_state(np.zeros(bg_regular.n), bg_regular)
    for _ in range(10):
        psi = random_smooth_field(bg_regular.grid, rng, scale=0.12)
        validate_state(psi, bg_regular)  # admissibility gate
        report = energy_functionals(psi, ref)
        assert report.I - report.J >= -1e-12
        # one transverse dimension makes I quadratic and J = I/2 exactly
        assert abs(report.J - report.I / 2.0) < 1e-12


def test_energy_inadmissible_path_names_s(round_state):
    with pytest.raises(InadmissiblePotentialError) as info:
        energy_functionals(2.0 * round_state.grid.nodes, round_state)
    assert "s =" in str(info.value)


def test_monge_ampere_energy_matches_closed_form(round_state):
    rng = np.random.default_rng(5)
    psi = random_smooth_field(round_state.grid, rng, scale=0.1)
    bg = round_state.bg
    closed = (bg.integrate(psi * round_state.density)
              + 0.5 * bg.integrate(psi * bg.h0(psi))) / 2.0
    assert abs(monge_ampere_energy(psi, round_state) - closed) < 1e-12


def test_y_evolution_identity_round(traj_round):
    from sasakiflow import y_evolution_residual

    mid = len(traj_round.states) // 2
    assert y_evolution_residual(traj_round.states, mid) < 1e-6


def test_mabuchi_accumulator_monotone(traj_perturbed):
    mab = np.array([r.mabuchi for r in traj_perturbed.rows])
    assert np.all(np.diff(mab) <= 1e-15)


def test_row_invariants_on_presets(traj_round, traj_perturbed, traj_football):
    for traj in (traj_round, traj_perturbed, traj_football):
        for r in traj.rows:
            assert r.Y >= -1e-18
            assert r.W >= -1e-18
            assert r.a <= 1e-12
            assert abs(r.vol - 2.0) < 1e-9
