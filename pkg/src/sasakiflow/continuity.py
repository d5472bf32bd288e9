"""Damped-Newton path following for the one-parameter Monge-Ampere family.

Relative to an admissible reference state the equation at parameter t is

    log(D_tot / D_ref) + t kappa psi + L(psi) - h = 0,

with D_tot = D_ref + H0[psi], L the path-quadrature Monge-Ampere energy, and
h the reference data: the appendix-normalized Ricci potential, which in the
flow convention is -u_ref (its normalization int e^h dm_ref = Vol holds with
no constant shift because u_ref itself satisfies int e^{-u} dm = Vol). At
t = 1 a solution produces a transverse Einstein metric in the class; on
slope-unbalanced geometries Newton stalls as t -> 1, which is the expected
Futaki obstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._threads import single_threaded_blas
from .errors import InadmissiblePotentialError, PathTerminationError
from .functionals import energy_functionals, monge_ampere_energy
from .geometry import MetricState

VOL = 2.0


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 40
    tol: float = 2e-11
    damping_floor: float = 2.0**-20
    energy_steps: int = 16


@dataclass(frozen=True)
class ContinuityPath:
    reference: MetricState
    ts: np.ndarray
    psis: list
    energies: list
    newton_iters: list
    residual_histories: list

    def final_potential(self) -> np.ndarray:
        return self.psis[-1]


def default_t_grid() -> np.ndarray:
    """32 uniform panels on [0, 1] with extra points packed near t = 1."""
    base = np.linspace(0.0, 1.0, 33)
    extra = 1.0 - np.array([0.02, 0.015, 0.01, 0.005, 0.0025])
    return np.unique(np.concatenate([base, extra]))


def _residual(reference: MetricState, psi, t, h_data, steps):
    bg = reference.bg
    dens_tot = reference.density + bg.h0(psi)
    if dens_tot.min() <= 0.0:
        raise InadmissiblePotentialError(
            f"continuity iterate left the admissible cone (min density "
            f"{dens_tot.min():.3e})", min_density=float(dens_tot.min()))
    lval = monge_ampere_energy(psi, reference, steps=steps)
    g = np.log(dens_tot / reference.density) + t * bg.kappa * psi + lval - h_data
    return g, dens_tot, lval


def _even_projector(reference: MetricState, h_data):
    """Even-parity projector when the problem data are reflection symmetric.

    At t = 1 the linearization is singular along the holomorphic
    (odd, moment-map) direction; restricting an even problem to the even
    subspace removes that direction entirely. The Gauss grid is symmetric,
    so reflection is the index flip.
    """
    def odd_size(v):
        return float(np.max(np.abs(v - v[::-1])))

    if odd_size(reference.density) < 1e-11 and odd_size(h_data) < 1e-11:
        return lambda v: 0.5 * (v + v[::-1])
    return None


def _solve_point(reference: MetricState, psi0, t, h_data, cfg: NewtonConfig,
                 projector=None):
    bg = reference.bg
    psi = psi0.copy()
    if projector is not None:
        psi = projector(psi)
    g, dens_tot, _ = _residual(reference, psi, t, h_data, cfg.energy_steps)
    res = float(np.max(np.abs(g)))
    history = [res]
    for _ in range(cfg.max_iter):
        if res < cfg.tol:
            break
        jac = bg.laplace0 / dens_tot[:, None] + t * bg.kappa * np.eye(bg.n)
        jac += np.outer(np.ones(bg.n), bg.grid.weights * dens_tot) / VOL
        try:
            lu = sla.lu_factor(jac)
        except sla.LinAlgError as exc:
            raise PathTerminationError(f"singular Newton system at t = {t:.4f}") from exc
        delta = sla.lu_solve(lu, -g)
        if projector is not None:
            delta = projector(delta)
        lam = 1.0
        while True:
            try:
                g_new, dens_new, _ = _residual(reference, psi + lam * delta, t,
                                               h_data, cfg.energy_steps)
                res_new = float(np.max(np.abs(g_new)))
            except InadmissiblePotentialError:
                res_new = np.inf
            if res_new < res or res_new < cfg.tol:
                break
            lam *= 0.5
            if lam < cfg.damping_floor:
                raise PathTerminationError(
                    f"Newton damping floor reached at t = {t:.4f}"
                    f" (residual {res:.3e})")
        psi = psi + lam * delta
        g, dens_tot, res = g_new, dens_new, res_new
        history.append(res)
    else:
        if res >= cfg.tol:
            raise PathTerminationError(
                f"Newton did not converge at t = {t:.4f} (residual {res:.3e})")
    return psi, history


def solve_path(reference: MetricState, t_grid=None,
               newton_cfg: NewtonConfig | None = None) -> ContinuityPath:
    """Continue the family from t = 0 to t = 1, warm-starting each point.

    Raises PathTerminationError carrying the last good parameter and the
    partial path when continuation stalls (expected when the reference class
    has nonzero Futaki invariant).
    """
    with single_threaded_blas():
        return _solve_path_impl(reference, t_grid, newton_cfg)


def _solve_path_impl(reference, t_grid, newton_cfg):
    cfg = newton_cfg or NewtonConfig()
    ts = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if ts[0] != 0.0:
        raise ValueError("t grid must start at 0")
    h_data = -reference.ricci_potential
    projector = _even_projector(reference, h_data)

    psis, energies, iters, histories = [], [], [], []
    psi = np.zeros(reference.grid.n)
    for i, t in enumerate(ts):
        try:
            psi, history = _solve_point(reference, psi, float(t), h_data, cfg,
                                        projector=projector)
        except PathTerminationError as exc:
            last_good = float(ts[i - 1]) if i > 0 else None
            partial = ContinuityPath(reference=reference, ts=ts[:i], psis=psis,
                                     energies=energies, newton_iters=iters,
                                     residual_histories=histories)
            raise PathTerminationError(
                f"continuation stalled at t = {t:.4f}"
                f" (last good t = {last_good})",
                last_good_t=last_good, partial_path=partial) from exc
        psis.append(psi.copy())
        energies.append(energy_functionals(psi, reference, steps=cfg.energy_steps))
        iters.append(len(history) - 1)
        histories.append(history)
    return ContinuityPath(reference=reference, ts=ts, psis=psis, energies=energies,
                          newton_iters=iters, residual_histories=histories)


@dataclass(frozen=True)
class MonotonicityReport:
    m_nonincreasing: bool
    ij_nondecreasing: bool
    max_m_increase: float
    max_ij_decrease: float
    m_violations: list
    ij_violations: list


def path_monotonicity(path: ContinuityPath, slack: float = 1e-8) -> MonotonicityReport:
    """Check dM/dt <= 0 and d(I-J)/dt >= 0 across the solved grid."""
    if len(path.ts) < 5:
        raise ValueError("need at least 5 path points")
    ms = np.array([e.M for e in path.energies])
    ijs = np.array([e.I - e.J for e in path.energies])
    m_viol = []
    ij_viol = []
    max_m_inc = 0.0
    max_ij_dec = 0.0
    for i in range(1, len(path.ts)):
        dm = ms[i] - ms[i - 1]
        dij = ijs[i] - ijs[i - 1]
        if dm > slack:
            m_viol.append((float(path.ts[i - 1]), float(path.ts[i]), float(dm)))
        if dij < -slack:
            ij_viol.append((float(path.ts[i - 1]), float(path.ts[i]), float(dij)))
        max_m_inc = max(max_m_inc, dm)
        max_ij_dec = max(max_ij_dec, -dij)
    return MonotonicityReport(
        m_nonincreasing=not m_viol,
        ij_nondecreasing=not ij_viol,
        max_m_increase=float(max_m_inc),
        max_ij_decrease=float(max_ij_dec),
        m_violations=m_viol,
        ij_violations=ij_viol,
    )
