"""Identity suites: the runnable cross-checks behind `sasakiflow check`.

Each suite returns a CheckResult with its worst residual and threshold. The
reduction oracle re-derives the one-dimensional formulas by plain finite
differences in the cylinder chart s = log|z|^2 of the regular background
(metric factor G0(s) = (1 - y^2)/2, y = tanh(s/2)) and is the ground truth
for the density, curvature, gradient-norm, and pure-Hessian reductions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._threads import single_threaded_blas
from .functionals import (bochner_kodaira_residual, futaki, poincare_slack,
                          pure_hessian_sq, y_evolution_residual)
from .geometry import (GeometryConfig, MetricState, grad_norm_sq, make_background,
                       validate_state)


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    threshold: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_residual < self.threshold


def random_smooth_field(grid, rng, scale=0.1, max_degree=10) -> np.ndarray:
    from numpy.polynomial import legendre as npleg

    degrees = np.arange(max_degree + 1)
    coeffs = scale * rng.standard_normal(max_degree + 1) / (1.0 + degrees) ** 2
    return npleg.legval(grid.nodes, coeffs)


def random_states(bg, rng, count=3, scale=0.08):
    out = []
    for _ in range(count):
        phi = random_smooth_field(bg.grid, rng, scale=scale)
        out.append(validate_state(phi, bg))
    return out


# ---------------------------------------------------------------------------
# state-level suites
# ---------------------------------------------------------------------------

def check_volume(states) -> CheckResult:
    worst = max(abs(s.bg.integrate(s.density) - 2.0) for s in states)
    return CheckResult("volume", worst, 1e-10)


def check_gauss_bonnet(states) -> CheckResult:
    worst = 0.0
    for s in states:
        target = (s.bg.p_minus + s.bg.p_plus) / 2.0
        worst = max(worst, abs(s.integrate_dm(s.curvature) - target))
    return CheckResult("gauss-bonnet", worst, 1e-8)


def check_ricci_potential(states) -> CheckResult:
    worst = 0.0
    for s in states:
        res = s.laplacian(s.ricci_potential) - (s.bg.kappa - s.curvature)
        worst = max(worst, float(np.max(np.abs(res))))
    return CheckResult("ricci-potential-equation", worst, 1e-6)


def check_gauge_invariance(bg, rng) -> CheckResult:
    phi = random_smooth_field(bg.grid, rng)
    a = validate_state(phi, bg)
    b = validate_state(phi + 3.7, bg)
    first_order = max(
        float(np.max(np.abs(a.density - b.density))),
        float(np.max(np.abs(a.ricci_potential - b.ricci_potential))),
    )
    # curvature re-differentiates log D, which scales rounding up ~1e3
    curv = float(np.max(np.abs(a.curvature - b.curvature)))
    worst = max(first_order, curv if curv > 1e-7 else 0.0)
    return CheckResult("potential-gauge", worst, 1e-10,
                       detail=f"curvature shift {curv:.2e} (gate 1e-7)")


def check_bochner_kodaira(states, rng, per_state=3) -> CheckResult:
    worst = 0.0
    for s in states:
        for _ in range(per_state):
            f = random_smooth_field(s.grid, rng, scale=0.5)
            worst = max(worst, bochner_kodaira_residual(f, s))
    return CheckResult("bochner-kodaira", worst, 1e-6)


def check_poincare(states, rng, per_state=20) -> CheckResult:
    worst_negative = 0.0
    for s in states:
        for _ in range(per_state):
            f = random_smooth_field(s.grid, rng, scale=0.5)
            slack = poincare_slack(f, s)
            worst_negative = max(worst_negative, -slack)
    return CheckResult("poincare", worst_negative, 1e-10)


def check_futaki_spread(states) -> CheckResult:
    worst = 0.0
    for s in states:
        vals = [futaki(s, m) for m in
                ("gradient-pairing", "curvature-weighted", "closed-form")]
        worst = max(worst, max(vals) - min(vals))
    return CheckResult("futaki-cross-method", worst, 1e-6)


def check_futaki_pairing_identity(states, rng, per_state=3) -> CheckResult:
    """Integration by parts behind the curvature-weighted form, for random h."""
    worst = 0.0
    for s in states:
        u = s.ricci_potential
        du = s.grid.differentiate(u)
        for _ in range(per_state):
            h = random_smooth_field(s.grid, rng, scale=0.5)
            dh = s.grid.differentiate(h)
            pairing = 0.5 * s.bg.integrate(s.bg.phi0 * dh * du)
            weighted = s.integrate_dm(h * (s.curvature - s.bg.kappa))
            worst = max(worst, abs(pairing - weighted))
    return CheckResult("futaki-pairing-ibp", worst, 1e-8)


# ---------------------------------------------------------------------------
# trajectory-level suites
# ---------------------------------------------------------------------------

def check_volume_drift(traj) -> CheckResult:
    vols = np.array([r.vol for r in traj.rows])
    return CheckResult("volume-drift", float(np.max(np.abs(vols - 2.0))), 1e-9)


FD_WINDOW_START = 0.25  # time-difference identities skip the sub-cadence transient


def check_y_identity(traj, t_start: float = FD_WINDOW_START) -> CheckResult:
    worst = 0.0
    for i in range(1, len(traj.states) - 1):
        if traj.states[i].t < t_start:
            continue
        worst = max(worst, y_evolution_residual(traj.states, i))
    return CheckResult("y-evolution-identity", worst, 5e-3,
                       detail=f"samples with t >= {t_start}")


def check_z_is_a_dot(traj, t_start: float = FD_WINDOW_START) -> CheckResult:
    rows = traj.rows
    worst = 0.0
    for i in range(1, len(rows) - 1):
        if rows[i].t < t_start:
            continue
        fd = (rows[i + 1].a - rows[i - 1].a) / (rows[i + 1].t - rows[i - 1].t)
        worst = max(worst, abs(rows[i].Z - fd))
    return CheckResult("z-equals-a-dot", worst, 1e-4,
                       detail=f"samples with t >= {t_start}")


# ---------------------------------------------------------------------------
# 2D finite-difference reduction oracle
# ---------------------------------------------------------------------------

def _fd1(v, h):
    out = np.full_like(v, np.nan)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    return out


def _fd2(v, h):
    out = np.full_like(v, np.nan)
    out[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h**2)
    return out


def reduction_oracle_residual(state: MetricState, f=None,
                              s_max: float = 6.0, h: float = 0.01) -> dict:
    """Compare reduced formulas against 2D finite differences in the s-chart.

    Works on the regular background, where y = tanh(s/2) and the background
    metric factor is G0 = (1 - y^2)/2. Returns the worst-case interior
    disagreement for the density, the curvature, the gradient norm of u, and
    (if `f` is given) the pure antiholomorphic Hessian norm of f.
    """
    bg = state.bg
    if abs(bg.p_minus - 2.0) > 1e-12 or abs(bg.p_plus - 2.0) > 1e-12:
        raise ValueError("the chart oracle is set up for the regular background")
    s = np.arange(-s_max - 6 * h, s_max + 6.001 * h, h)
    y = np.tanh(0.5 * s)
    g0 = 0.5 * (1.0 - y**2)

    phi_s = bg.grid.interpolate(state.phi, y)
    dens_fd = 1.0 + _fd2(phi_s, h) / g0
    dens_reduced = bg.grid.interpolate(state.density, y)

    # chart metric factor from the (separately validated) reduced density,
    # so each comparison carries one finite-difference layer, not two
    g_chart = g0 * dens_reduced
    with np.errstate(invalid="ignore"):
        curv_fd = -_fd2(np.log(g_chart), h) / g_chart
    curv_reduced = bg.grid.interpolate(state.curvature, y)

    u_s = bg.grid.interpolate(state.ricci_potential, y)
    grad_fd = _fd1(u_s, h) ** 2 / g_chart
    grad_reduced = bg.grid.interpolate(grad_norm_sq(state.ricci_potential, state), y)

    interior = slice(6, -6)
    out = {
        "density": float(np.nanmax(np.abs((dens_fd - dens_reduced)[interior]))),
        "curvature": float(np.nanmax(np.abs((curv_fd - curv_reduced)[interior]))),
        "grad_norm": float(np.nanmax(np.abs((grad_fd - grad_reduced)[interior]))),
    }
    if f is not None:
        f_s = bg.grid.interpolate(np.asarray(f, dtype=float), y)
        hess_fd = (_fd2(f_s, h) - _fd1(np.log(g_chart), h) * _fd1(f_s, h)) ** 2 / g_chart**2
        hess_reduced = bg.grid.interpolate(pure_hessian_sq(f, state), y)
        out["pure_hessian"] = float(np.nanmax(np.abs((hess_fd - hess_reduced)[interior])))
    return out


def check_reduction_oracle(rng, n_nodes: int = 128) -> CheckResult:
    bg = make_background(GeometryConfig(2.0, 2.0, n_nodes))
    worst = 0.0
    parts = []
    for _ in range(3):
        phi = random_smooth_field(bg.grid, rng, scale=0.15, max_degree=8)
        state = validate_state(phi, bg)
        f = random_smooth_field(bg.grid, rng, scale=0.5, max_degree=8)
        res = reduction_oracle_residual(state, f=f)
        worst = max(worst, max(res.values()))
        parts.append(max(res.values()))
    return CheckResult("reduction-oracle", worst, 1e-6,
                       detail=f"per-state worst: {parts}")


def check_spectrum_oracle(n_nodes: int = 128) -> CheckResult:
    """Round-state spectrum against l(l+1)/2 and a finer-grid eigensolve."""
    from .stability import eigen_spectrum

    bg = make_background(GeometryConfig(2.0, 2.0, n_nodes))
    state = validate_state(np.zeros(bg.n), bg)
    report = eigen_spectrum(state, k=4)
    exact = np.array([1.0, 3.0, 6.0, 10.0])
    worst = float(np.max(np.abs(report.eigenvalues - exact)))

    bg2 = make_background(GeometryConfig(2.0, 2.0, n_nodes + 64))
    state2 = validate_state(np.zeros(bg2.n), bg2)
    report2 = eigen_spectrum(state2, k=4)
    two_res = float(np.max(np.abs(report.eigenvalues - report2.eigenvalues)))
    return CheckResult("spectrum-oracle", max(worst, two_res), 1e-6,
                       detail=f"vs exact {worst:.2e}, two-resolution {two_res:.2e}")


# ---------------------------------------------------------------------------
# the full suite
# ---------------------------------------------------------------------------

def run_check_suite(seed: int = 0) -> list:
    """Every identity suite at desk scale; a couple of seconds end to end."""
    with single_threaded_blas():
        return _run_check_suite_impl(seed)


def _run_check_suite_impl(seed):
    from .flow import FlowConfig, run
    from .presets import legendre_potential

    rng = np.random.default_rng(seed)
    bg_reg = make_background(GeometryConfig(2.0, 2.0, 128))
    bg_fb = make_background(GeometryConfig(2.0, 1.0, 128))
    states = random_states(bg_reg, rng) + random_states(bg_fb, rng)
    states.append(validate_state(np.zeros(bg_reg.n), bg_reg))

    results = [
        check_volume(states),
        check_gauss_bonnet(states),
        check_ricci_potential(states),
        check_gauge_invariance(bg_reg, rng),
        check_bochner_kodaira(states, rng),
        check_poincare(states, rng),
        check_futaki_spread(states),
        check_futaki_pairing_identity(states, rng),
        check_reduction_oracle(rng),
        check_spectrum_oracle(),
    ]

    phi0 = legendre_potential(bg_reg, {"2": 0.3})
    cfg = FlowConfig(t_end=1.5, dt_init=0.0125, dt_max=0.0125, sample_every=0.0125,
                     with_spectrum=False)
    traj = run(phi0, bg_reg, cfg)
    results.extend([
        check_volume_drift(traj),
        check_y_identity(traj),
        check_z_is_a_dot(traj),
    ])
    return results
