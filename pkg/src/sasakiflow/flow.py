"""Time integration of the reduced transverse parabolic Monge-Ampere equation.

The flow is phi-dot = log D(phi) + kappa phi - F with D = 1 + H0[phi].
Constant potentials ride an exponentially growing gauge mode e^{kappa t}
that never touches the metric, so the integrator advances the split system

    psi  (zero-Lebesgue-mean part; carries all metric content)
    q    (constant part; scalar ODE q' = kappa q + s(t))
    E    (homogeneous gauge solution E' = kappa E, E(0) = 1)

with s(t) the mean of log D - F. Keeping the huge constant out of the nodal
field preserves full precision in every derived quantity at late times, and
E supplies the discrete gauge profile used by the initial-value
renormalization. Stepping is a two-stage second-order Rosenbrock W-method
(L-stable, order two for any Jacobian approximation), with the frozen
linearization H0[.]/D treated implicitly and step-doubling error control.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from ._threads import single_threaded_blas
from .errors import (ConfigurationError, InadmissiblePotentialError,
                     FitUnavailableError, RenormalizationUnavailableError,
                     StiffStepError)
from .functionals import diagnostics
from .geometry import BackgroundGeometry, MetricState, validate_state
from .spectral import as_values
from .stability import DecayFit, eigen_spectrum, fit_decay_rate

ROS2_GAMMA = 1.0 + 1.0 / np.sqrt(2.0)

SCHEMES = ("imex", "explicit-rk")


@dataclass(frozen=True)
class FlowConfig:
    t_end: float = 20.0
    dt_init: float = 0.01
    dt_min: float = 1e-7
    dt_max: float = 0.0125
    rtol: float = 1e-6
    sample_every: float = 0.0125
    scheme: str = "imex"
    eps_pos: float = 1e-8
    with_spectrum: bool = True
    spectrum_k: int = 8
    recenter_threshold: float | None = None
    # verdict thresholds (fixed defaults, overridable)
    conv_y_tol: float = 1e-10
    floor_y_tol: float = 1e-6
    fit_r2: float = 0.99
    flat_rate_tol: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigurationError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if self.rtol <= 0:
            raise ConfigurationError("rtol must be positive")
        if self.t_end <= 0 or self.sample_every <= 0:
            raise ConfigurationError("t_end and sample_every must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True)
class Snapshot:
    """One sampled point of a trajectory: mean-zero field plus gauge scalars."""

    t: float
    psi: np.ndarray
    mean: float           # constant part q of the potential
    gauge_growth: float   # discrete homogeneous gauge solution E(t)
    gauge_tau: float      # cumulative automorphism recentering parameter

    @property
    def phi(self) -> np.ndarray:
        return self.psi + self.mean


@dataclass(frozen=True)
class Verdict:
    kind: str          # converged | soliton_floor | undecided
    rate: float
    r_squared: float
    level: float       # Y at the final sample


@dataclass(frozen=True)
class Renormalization:
    c0_estimate: float
    gauge_coefficient: float
    sup_phidot: float
    sup_u: float


@dataclass(frozen=True)
class Trajectory:
    bg: BackgroundGeometry
    config: FlowConfig
    snapshots: list
    states: list
    rows: list
    spectra: list
    verdict: Verdict | None = None
    renormalization: Renormalization | None = None

    @property
    def ts(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def y_series(self) -> np.ndarray:
        return np.array([r.Y for r in self.rows])


# ---------------------------------------------------------------------------
# stepping kernels
# ---------------------------------------------------------------------------

def _density_checked(bg, psi, eps_pos):
    dens = 1.0 + bg.h0(psi)
    dmin = min(dens.min(), bg.pole_values(dens).min())
    if not np.isfinite(dmin) or dmin <= eps_pos:
        where = int(np.argmin(dens))
        raise InadmissiblePotentialError(
            f"density reached {dmin:.3e} near y = {bg.grid.nodes[where]:+.4f}",
            y=float(bg.grid.nodes[where]), min_density=float(dmin))
    return dens


def _split_rhs(bg, psi, eps_pos):
    dens = _density_checked(bg, psi, eps_pos)
    g = np.log(dens) - bg.F
    s = bg.lebesgue_mean(g)
    return (g - s) + bg.kappa * psi, s, dens


def _ros2_split(bg, psi, q, E, h, eps_pos):
    kappa = bg.kappa
    g1, s1, dens = _split_rhs(bg, psi, eps_pos)
    jac = bg.laplace0 / dens[:, None] + kappa * np.eye(bg.n)
    lu = sla.lu_factor(np.eye(bg.n) - ROS2_GAMMA * h * jac)
    scal = 1.0 / (1.0 - ROS2_GAMMA * h * kappa)

    k1 = sla.lu_solve(lu, g1)
    k1q = scal * (kappa * q + s1)
    k1e = scal * (kappa * E)

    psi_mid = psi + h * k1
    psi_mid -= bg.lebesgue_mean(psi_mid)
    g2, s2, _ = _split_rhs(bg, psi_mid, eps_pos)
    k2 = sla.lu_solve(lu, g2 - 2.0 * k1)
    k2q = scal * (kappa * (q + h * k1q) + s2 - 2.0 * k1q)
    k2e = scal * (kappa * (E + h * k1e) - 2.0 * k1e)

    psi_new = psi + h * (1.5 * k1 + 0.5 * k2)
    psi_new -= bg.lebesgue_mean(psi_new)
    return psi_new, q + h * (1.5 * k1q + 0.5 * k2q), E + h * (1.5 * k1e + 0.5 * k2e)


def _rk4_split(bg, psi, q, E, h, eps_pos):
    kappa = bg.kappa

    def f(p, qq, ee):
        g, s, _ = _split_rhs(bg, p, eps_pos)
        return g, kappa * qq + s, kappa * ee

    a1, b1, c1 = f(psi, q, E)
    a2, b2, c2 = f(psi + 0.5 * h * a1, q + 0.5 * h * b1, E + 0.5 * h * c1)
    a3, b3, c3 = f(psi + 0.5 * h * a2, q + 0.5 * h * b2, E + 0.5 * h * c2)
    a4, b4, c4 = f(psi + h * a3, q + h * b3, E + h * c3)
    psi_new = psi + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
    psi_new -= bg.lebesgue_mean(psi_new)
    return (psi_new,
            q + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4),
            E + (h / 6.0) * (c1 + 2 * c2 + 2 * c3 + c4))


_SPLIT_KERNELS = {"imex": _ros2_split, "explicit-rk": _rk4_split}


def _full_rhs(bg, phi, eps_pos):
    dens = _density_checked(bg, phi, eps_pos)
    return np.log(dens) - bg.F + bg.kappa * phi, dens


def _ros2_full(bg, phi, h, eps_pos):
    g1, dens = _full_rhs(bg, phi, eps_pos)
    jac = bg.laplace0 / dens[:, None] + bg.kappa * np.eye(bg.n)
    lu = sla.lu_factor(np.eye(bg.n) - ROS2_GAMMA * h * jac)
    k1 = sla.lu_solve(lu, g1)
    g2, _ = _full_rhs(bg, phi + h * k1, eps_pos)
    k2 = sla.lu_solve(lu, g2 - 2.0 * k1)
    return phi + h * (1.5 * k1 + 0.5 * k2)


def _rk4_full(bg, phi, h, eps_pos):
    def f(p):
        return _full_rhs(bg, p, eps_pos)[0]

    k1 = f(phi)
    k2 = f(phi + 0.5 * h * k1)
    k3 = f(phi + 0.5 * h * k2)
    k4 = f(phi + h * k3)
    return phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def step(state: MetricState, dt: float, scheme: str = "imex",
         dt_min: float | None = None, eps_pos: float = 1e-8) -> MetricState:
    """Advance a state by exactly dt, halving the substep on admissibility loss.

    Raises StiffStepError when the substep underflows dt_min (default
    dt / 2^24).
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"scheme must be one of {SCHEMES}")
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    kernel = _ros2_full if scheme == "imex" else _rk4_full
    floor = dt / 2**24 if dt_min is None else dt_min
    bg = state.bg
    phi = state.phi.copy()
    remaining = dt
    h = dt
    while remaining > 1e-15 * dt:
        h = min(h, remaining)
        try:
            phi_new = kernel(bg, phi, h, eps_pos)
        except InadmissiblePotentialError as exc:
            h = h / 2.0
            if h < floor:
                raise StiffStepError(
                    f"substep underflow at t = {state.t + dt - remaining:.6f}",
                    t=state.t + dt - remaining, dt=h,
                    min_density=exc.min_density) from exc
            continue
        phi = phi_new
        remaining -= h
    return validate_state(phi, bg, t=state.t + dt, eps_pos=eps_pos)


# ---------------------------------------------------------------------------
# the run loop
# ---------------------------------------------------------------------------

def run(phi0, bg: BackgroundGeometry, config: FlowConfig) -> Trajectory:
    """Integrate the flow from phi0, sampling diagnostics on a fixed cadence.

    Deterministic for a fixed configuration. Optional automorphism
    recentering (config.recenter_threshold) keeps slope-unbalanced runs
    resolvable through their soliton drift; it changes only the coordinate
    representative, never a diagnostic.
    """
    with single_threaded_blas():
        return _run_impl(phi0, bg, config)


def _run_impl(phi0, bg: BackgroundGeometry, config: FlowConfig) -> Trajectory:
    vals = as_values(phi0, bg.grid)
    kernel = _SPLIT_KERNELS[config.scheme]
    eps = config.eps_pos

    q = bg.lebesgue_mean(vals)
    psi = vals - q
    E = 1.0
    t = 0.0
    tau_cum = 0.0

    recenterer = None
    if config.recenter_threshold is not None:
        from .recenter import Recenterer
        recenterer = Recenterer(bg)
        recenterer.recenter(psi)  # pins the target barycenter

    snapshots: list = []
    states: list = []
    rows: list = []
    spectra: list = []
    running_rmax = 0.0

    def record(t_now, psi_now, q_now, e_now):
        nonlocal running_rmax
        state = validate_state(psi_now, bg, t=t_now, eps_pos=eps)
        spec = eigen_spectrum(state, k=config.spectrum_k) if config.with_spectrum else None
        prev_state = states[-1] if states else None
        row = diagnostics(state, rows, spectrum=spec, prev_state=prev_state,
                          running_curvature_max=running_rmax)
        running_rmax = max(running_rmax, abs(row.R_min), abs(row.R_max))
        snapshots.append(Snapshot(t=t_now, psi=psi_now.copy(), mean=q_now,
                                  gauge_growth=e_now, gauge_tau=tau_cum))
        states.append(state)
        rows.append(row)
        spectra.append(spec)

    record(0.0, psi, q, E)

    n_samples = int(round(config.t_end / config.sample_every))
    if abs(n_samples * config.sample_every - config.t_end) > 1e-9:
        n_samples = int(np.ceil(config.t_end / config.sample_every))
    dt = config.dt_init

    for i_sample in range(1, n_samples + 1):
        target = min(i_sample * config.sample_every, config.t_end)
        while t < target - 1e-12:
            clipped = dt >= target - t
            h = min(dt, target - t)
            try:
                full = kernel(bg, psi, q, E, h, eps)
                mid = kernel(bg, psi, q, E, 0.5 * h, eps)
                half = kernel(bg, mid[0], mid[1], mid[2], 0.5 * h, eps)
            except InadmissiblePotentialError as exc:
                dt = h / 2.0
                if dt < config.dt_min:
                    raise StiffStepError(
                        f"dt underflow at t = {t:.6f} (min density"
                        f" {exc.min_density:.3e} at y = {exc.y:+.4f})",
                        t=t, dt=dt, min_density=exc.min_density) from exc
                continue
            err = float(np.max(np.abs(full[0] - half[0])))
            scale = config.rtol * max(1.0, float(np.max(np.abs(half[0]))))
            ratio = err / scale if scale > 0 else 0.0
            if ratio <= 1.0:
                psi, q, E = half
                t = target if clipped else t + h
                if not clipped:
                    factor = 2.0 if ratio == 0.0 else min(2.0, max(0.2, 0.9 * ratio**(-1.0 / 3.0)))
                    dt = min(config.dt_max, max(config.dt_min, h * factor))
            else:
                factor = max(0.2, 0.9 * ratio**(-1.0 / 3.0))
                dt = h * factor
                if dt < config.dt_min:
                    raise StiffStepError(
                        f"dt underflow at t = {t:.6f} (error control)", t=t, dt=dt)
        t = target
        if recenterer is not None:
            beta = recenterer.barycenter(psi)
            if abs(beta - recenterer.target) > config.recenter_threshold:
                psi, tau = recenterer.recenter(psi)
                tau_cum += tau
        record(t, psi, q, E)

    verdict = detect_limit_rows(rows, config) if len(rows) >= 20 else None
    return Trajectory(bg=bg, config=config, snapshots=snapshots, states=states,
                      rows=rows, spectra=spectra, verdict=verdict)


# ---------------------------------------------------------------------------
# verdicts and renormalization
# ---------------------------------------------------------------------------

def detect_limit_rows(rows, config: FlowConfig) -> Verdict:
    ts = np.array([r.t for r in rows])
    ys = np.array([r.Y for r in rows])
    level = float(ys[-1])
    # a run pinned at the fixed point never leaves the rounding floor
    if ys.max() < 1e-14:
        return Verdict(kind="converged", rate=float("inf"), r_squared=1.0, level=level)
    try:
        fit = fit_decay_rate(ts, ys)
    except FitUnavailableError:
        fit = None
    if fit is not None and fit.rate > 0 and fit.r_squared > config.fit_r2 \
            and level < config.conv_y_tol:
        return Verdict(kind="converged", rate=fit.rate, r_squared=fit.r_squared,
                       level=level)
    if fit is not None and abs(fit.rate) < config.flat_rate_tol \
            and level > config.floor_y_tol:
        return Verdict(kind="soliton_floor", rate=fit.rate, r_squared=fit.r_squared,
                       level=level)
    return Verdict(kind="undecided",
                   rate=fit.rate if fit else float("nan"),
                   r_squared=fit.r_squared if fit else float("nan"),
                   level=level)


def detect_limit(traj: Trajectory) -> Verdict:
    """Classify a trajectory as converged, soliton_floor, or undecided."""
    if len(traj.rows) < 20:
        raise ValueError(f"need at least 20 samples, have {len(traj.rows)}")
    return detect_limit_rows(traj.rows, traj.config)


def renormalize_initial(traj: Trajectory) -> Trajectory:
    """Cancel the e^{kappa t} gauge mode and report the c0 normalization.

    The gauge coefficient is extracted from the trajectory endpoint (exact up
    to rounding against the tracked discrete gauge profile); the classical
    c0 value, the e^{-kappa t}-weighted Dirichlet-energy integral plus the
    initial weighted mean of u, is reported alongside. Requires a tail in
    clean exponential decay; soliton-floor runs are rejected.
    """
    bg = traj.bg
    kappa = bg.kappa
    rows = traj.rows
    ts = np.array([r.t for r in rows])
    ys = np.array([r.Y for r in rows])

    pinned = ys.max() < 1e-14
    fit: DecayFit | None = None
    if not pinned:
        try:
            fit = fit_decay_rate(ts, ys)
        except FitUnavailableError as exc:
            raise RenormalizationUnavailableError(
                f"Dirichlet energy has no usable decay window: {exc}") from exc
        if fit.rate <= 0 or fit.r_squared <= 0.99:
            raise RenormalizationUnavailableError(
                f"Dirichlet energy is not in exponential decay"
                f" (rate {fit.rate:.3e}, r^2 {fit.r_squared:.4f})")

    last = traj.snapshots[-1]
    s_end = bg.lebesgue_mean(traj.states[-1].log_density - bg.F)
    delta = (last.mean + s_end / kappa) / last.gauge_growth

    # classical normalization constant, tail completed by the fitted exponential
    weighted = np.exp(-kappa * ts) * ys
    c0 = float(np.trapezoid(weighted, ts))
    if not pinned and fit is not None:
        c0 += float(weighted[-1] / (kappa + fit.rate))
    u0 = traj.states[0].ricci_potential
    c0 += traj.states[0].integrate_dm(u0) / 2.0

    new_snaps = [replace(s, mean=s.mean - delta * s.gauge_growth)
                 for s in traj.snapshots]
    sup_phidot = 0.0
    sup_u = 0.0
    for snap, state in zip(new_snaps, traj.states):
        phidot = state.log_density - bg.F + kappa * (snap.psi + snap.mean)
        sup_phidot = max(sup_phidot, float(np.max(np.abs(phidot))))
        sup_u = max(sup_u, float(np.max(np.abs(state.ricci_potential))))
    ren = Renormalization(c0_estimate=c0, gauge_coefficient=float(delta),
                          sup_phidot=sup_phidot, sup_u=sup_u)
    return replace(traj, snapshots=new_snaps, renormalization=ren)
