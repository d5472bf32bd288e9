"""Scalar functionals and identity residuals of the flow.

Conventions. Gradients and Laplacians use the complex trace, matching the
reduced pairings |df|^2 = phi0 f'^2 / (2D) and Lap f = H0[f]/D. With the
weighted probability measure drho = e^{-u} dm / Vol the diagnostics are

    Y = int |du|^2 dm                 (unnormalized Dirichlet energy of u)
    a = int u drho                    (always <= 0 by Jensen)
    W = int (u - a)^2 drho
    Z = int |du|^2 drho - kappa int (u - a)^2 drho

and Z = da/dt holds along the flow; that identity pins the factor
conventions once and for all.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import nan

import numpy as np

from .errors import InadmissiblePotentialError
from .geometry import BackgroundGeometry, MetricState, grad_norm_sq, moment_map, \
    transverse_diameter, validate_state
from .spectral import as_values

VOL = 2.0

CSV_COLUMNS = (
    "t", "Y", "W", "Z", "a", "vol", "R_mean", "R_min", "R_max", "osc_u",
    "grad_u_max", "fut", "mabuchi", "nu", "lambda_lo", "lambda_hi", "diam_T",
    "dim_hol", "shi_m1", "shi_m2", "equiv_int",
)


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    Y: float
    W: float
    Z: float
    a: float
    vol: float
    R_mean: float
    R_min: float
    R_max: float
    osc_u: float
    grad_u_max: float
    fut: float
    mabuchi: float
    nu: float
    lambda_lo: float
    lambda_hi: float
    diam_T: float
    dim_hol: float
    shi_m1: float
    shi_m2: float
    equiv_int: float

    def as_tuple(self):
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


def futaki(state: MetricState, method: str = "gradient-pairing") -> float:
    """Futaki character evaluated on the moment-map Hamiltonian field.

    gradient-pairing integrates <dh, du> dm; curvature-weighted integrates
    h (R - kappa) dm; closed-form is the slope invariant (p+ - p-)/2. All
    three agree on every admissible state in the class.
    """
    bg = state.bg
    if method == "closed-form":
        return (bg.p_plus - bg.p_minus) / 2.0
    if method == "gradient-pairing":
        du = state.grid.differentiate(state.ricci_potential)
        # h' = D exactly, so <dh, du> dm reduces to (1/2) int phi0 D u' dy
        return 0.5 * bg.integrate(bg.phi0 * state.density * du)
    if method == "curvature-weighted":
        h = moment_map(state)
        return state.integrate_dm(h * (state.curvature - bg.kappa))
    raise ValueError(f"unknown Futaki method {method!r}")


def pure_hessian_sq(f, state: MetricState) -> np.ndarray:
    """|nabla-bar nabla-bar f|^2 in the state's metric: (phi0^2/4) [(f'/D)']^2.

    Vanishes exactly when the gradient field of f is holomorphic (f' = c D).
    """
    vals = as_values(f, state.grid)
    df = state.grid.differentiate(vals)
    dd = state.grid.differentiate(df / state.density)
    return (state.bg.phi0**2 / 4.0) * dd**2


def bochner_kodaira_residual(f, state: MetricState) -> float:
    """Relative defect of int (Lap f)^2 dm = int |nbar nbar f|^2 dm + int R |df|^2 dm."""
    lap = state.laplacian(as_values(f, state.grid))
    t_mixed = state.integrate_dm(lap**2)
    t_pure = state.integrate_dm(pure_hessian_sq(f, state))
    t_curv = state.integrate_dm(state.curvature * grad_norm_sq(f, state))
    denom = abs(t_mixed) + abs(t_pure) + abs(t_curv)
    if denom <= 1e-13:
        # all terms vanish (constants and near-constants)
        return 0.0
    return abs(t_mixed - t_pure - t_curv) / denom


def dirichlet_y(state: MetricState) -> float:
    """Y = int |du|^2 dm."""
    du = state.grid.differentiate(state.ricci_potential)
    return 0.5 * state.bg.integrate(state.bg.phi0 * du**2)


def y_evolution_rhs(state: MetricState) -> float:
    """Right-hand side of the Y evolution identity at a single state.

    dY/dt = 2 kappa Y - int R |du|^2 dm - int (Lap u)^2 dm - int |nbar nbar u|^2 dm,
    the kappa-weighted form of the (n+1) Y identity at n = 1 (the mixed
    Hessian integral is the Laplacian square in one transverse dimension).
    """
    u = state.ricci_potential
    y_val = dirichlet_y(state)
    curv_term = state.integrate_dm(state.curvature * grad_norm_sq(u, state))
    mixed = state.integrate_dm(state.laplacian(u) ** 2)
    pure = state.integrate_dm(pure_hessian_sq(u, state))
    return 2.0 * state.bg.kappa * y_val - curv_term - mixed - pure


def y_evolution_residual(states, i: int) -> float:
    """Normalized defect of the Y identity at interior sample index i.

    `states` is a time-ordered sequence of MetricState with .t populated;
    the time derivative is the central difference over the neighbors.
    """
    if i <= 0 or i >= len(states) - 1:
        raise IndexError("Y-identity residual needs an interior sample")
    before, here, after = states[i - 1], states[i], states[i + 1]
    ydot_fd = (dirichlet_y(after) - dirichlet_y(before)) / (after.t - before.t)
    rhs = y_evolution_rhs(here)
    scale = max(abs(ydot_fd), dirichlet_y(here), 1e-14)
    return abs(ydot_fd - rhs) / scale


def poincare_slack(f, state: MetricState) -> float:
    """Slack of the weighted Poincare inequality (nonnegative up to rounding).

    Vol^-1 int f^2 e^-u dm
        <= (1/kappa) Vol^-1 int |df|^2 e^-u dm + (Vol^-1 int f e^-u dm)^2.

    The gradient coefficient is pinned by requiring equality on the
    holomorphic (eigenvalue-one) sector, which holds at every slope pair; at
    the round normalization kappa = 1 it reduces to the unit-coefficient form.
    """
    vals = as_values(f, state.grid)
    w = state.weighted_measure()
    mean = (w @ vals) / VOL
    quad = (w @ vals**2) / VOL
    grad = (w @ grad_norm_sq(vals, state)) / (VOL * state.bg.kappa)
    return grad + mean**2 - quad


def diagnostics(state: MetricState, prev_rows=None, spectrum=None,
                prev_state: MetricState | None = None,
                running_curvature_max: float | None = None) -> DiagnosticsRow:
    """Full diagnostics row for one sampled state.

    `prev_rows` (trapezoid Mabuchi accumulation, equivalence integral) and
    `prev_state` (logarithmic density increment) extend the pointwise
    quantities to running monitors; `spectrum` supplies the eigen columns.
    """
    bg = state.bg
    u = state.ricci_potential
    w_meas = state.weighted_measure()
    y_val = dirichlet_y(state)
    a_val = (w_meas @ u) / VOL
    dev = u - a_val
    w_val = (w_meas @ dev**2) / VOL
    gradsq = grad_norm_sq(u, state)
    z_val = (w_meas @ gradsq) / VOL - bg.kappa * (w_meas @ dev**2) / VOL

    prev = prev_rows[-1] if prev_rows else None
    row_t = state.t
    if prev is None:
        mabuchi = 0.0
        equiv_acc = 0.0
    else:
        dt_s = row_t - prev.t
        mabuchi = prev.mabuchi - 0.5 * (y_val + prev.Y) * dt_s
        if prev_state is not None:
            equiv_acc = prev.equiv_int + float(
                np.max(np.abs(state.log_density - prev_state.log_density)))
        else:
            equiv_acc = prev.equiv_int

    curv = state.curvature
    r_absmax = float(np.max(np.abs(curv)))
    k_run = max(running_curvature_max or 0.0, r_absmax)
    k_norm = max(np.sqrt(k_run), k_run) if k_run > 0 else 1.0
    grad_r = np.sqrt(np.maximum(grad_norm_sq(curv, state), 0.0))
    lap_r = state.laplacian(curv)
    shi1 = np.sqrt(max(row_t, 0.0)) * float(np.max(grad_r)) / k_norm
    shi2 = row_t * float(np.max(np.abs(lap_r))) / k_norm

    if spectrum is None:
        nu = lam_lo = lam_hi = dim_hol = nan
    else:
        nu = spectrum.nu
        lam_lo, lam_hi = spectrum.lambda_proxy
        dim_hol = float(spectrum.dim_hol_sector)

    return DiagnosticsRow(
        t=row_t,
        Y=y_val,
        W=w_val,
        Z=z_val,
        a=a_val,
        vol=state.bg.integrate(state.density),
        R_mean=0.5 * state.integrate_dm(curv),
        R_min=float(curv.min()),
        R_max=float(curv.max()),
        osc_u=float(u.max() - u.min()),
        grad_u_max=float(np.sqrt(np.maximum(gradsq, 0.0)).max()),
        fut=futaki(state, "gradient-pairing"),
        mabuchi=mabuchi,
        nu=nu,
        lambda_lo=lam_lo,
        lambda_hi=lam_hi,
        diam_T=transverse_diameter(state),
        dim_hol=dim_hol,
        shi_m1=shi1,
        shi_m2=shi2,
        equiv_int=equiv_acc,
    )


@dataclass(frozen=True)
class EnergyReport:
    """Aubin-type energies of a potential relative to a reference state."""

    I: float
    J: float
    L: float
    M: float


def _gauss_01(steps: int):
    from numpy.polynomial import legendre as npleg

    x, w = npleg.leggauss(int(steps))
    return 0.5 * (x + 1.0), 0.5 * w


def _path_density(reference: MetricState, h0_psi: np.ndarray, s: float) -> np.ndarray:
    dens = reference.density + s * h0_psi
    if dens.min() <= 0.0:
        where = int(np.argmin(dens))
        raise InadmissiblePotentialError(
            f"path point s = {s:.4f} is inadmissible"
            f" (density {dens.min():.3e} at y = {reference.grid.nodes[where]:+.4f})",
            y=float(reference.grid.nodes[where]),
            min_density=float(dens.min()),
        )
    return dens


def monge_ampere_energy(psi, reference: MetricState, steps: int = 16) -> float:
    """L(psi) = Vol^-1 int_0^1 int psi dm_{s psi} ds along the linear path."""
    vals = as_values(psi, reference.grid)
    h0_psi = reference.bg.h0(vals)
    nodes, wts = _gauss_01(steps)
    total = 0.0
    for s, w in zip(nodes, wts):
        dens = _path_density(reference, h0_psi, s)
        total += w * reference.bg.integrate(vals * dens)
    return total / VOL


def energy_functionals(psi, reference: MetricState, steps: int = 16) -> EnergyReport:
    """I, J, L, M of a potential relative to `reference`, linear-path quadrature.

    Raises if any path point s psi leaves the admissible cone, naming the
    failing parameter.
    """
    if steps < 16:
        raise ValueError("path quadrature needs at least 16 points")
    bg = reference.bg
    vals = as_values(psi, reference.grid)
    h0_psi = bg.h0(vals)

    i_val = -bg.integrate(vals * h0_psi) / VOL

    nodes, wts = _gauss_01(steps)
    j_val = 0.0
    l_val = 0.0
    m_val = 0.0
    for s, w in zip(nodes, wts):
        dens = _path_density(reference, h0_psi, s)
        j_val += w * bg.integrate(vals * (reference.density - dens)) / VOL
        l_val += w * bg.integrate(vals * dens) / VOL
        curv = (bg.R0 - bg.h0(np.log(dens))) / dens
        m_val -= w * bg.integrate(vals * (curv - bg.kappa) * dens) / VOL
    return EnergyReport(I=i_val, J=j_val, L=l_val, M=m_val)


def flow_reference_state(bg: BackgroundGeometry) -> MetricState:
    """Zero-potential state of a background (convenience for tests/CLI)."""
    return validate_state(np.zeros(bg.n), bg)
