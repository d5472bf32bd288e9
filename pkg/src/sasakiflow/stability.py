"""Spectral stability machinery: the weighted operator L, condition flags, monitors.

L = -Lap + grad u . grad is self-adjoint for the weighted measure
e^{-u} dm. Its Dirichlet form reduces to A(f,h) = int (phi0/2) f' h' e^{-u} dy
(the evolving density cancels) against the mass form B(f,h) = int f h e^{-u} D dy.
Eigenvalues are reported divided by kappa, which places the Hamiltonian
holomorphic sector exactly at 1 for every slope pair; the weighted Lichnerowicz
bound then reads lambda >= 1 on mean-zero functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import EigensolverError, FitUnavailableError
from .geometry import MetricState

GAP_TOL = 5e-3


def assemble_L(state: MetricState):
    """Symmetric pencil (A, B) of the weighted operator on the full nodal space.

    Constants span the exact kernel of A; `eigen_spectrum` deflates them.
    """
    grid = state.grid
    ew = np.exp(-state.ricci_potential)
    a_mat = 0.5 * grid.diff.T @ ((grid.weights * state.bg.phi0 * ew)[:, None] * grid.diff)
    b_diag = grid.weights * ew * state.density
    return a_mat, np.diag(b_diag)


@dataclass(frozen=True)
class SpectrumReport:
    """Normalized spectrum of L on mean-zero functions, with derived stability data."""

    eigenvalues: np.ndarray
    multiplicities: tuple
    nu: float
    lambda_proxy: tuple
    dim_hol_sector: int
    osc_u: float
    kappa: float


def _cluster(values: np.ndarray, tol: float):
    mult = []
    count = 1
    for i in range(1, len(values)):
        if values[i] - values[i - 1] < tol:
            count += 1
        else:
            mult.append(count)
            count = 1
    mult.append(count)
    return tuple(mult)


def eigen_spectrum(state: MetricState, k: int = 8, gap_tol: float = GAP_TOL) -> SpectrumReport:
    """k smallest eigenvalues of L on the weighted-mean-zero subspace.

    The pencil is reduced to a single symmetric matrix with the diagonal mass
    form, constants are deflated by a Householder reflector, and eigenvalues
    are divided by kappa.
    """
    if k > state.grid.n // 4:
        raise ValueError(f"k = {k} exceeds N/4 = {state.grid.n // 4}")
    a_mat, b_mat = assemble_L(state)
    b_diag = np.diag(b_mat)
    root = np.sqrt(b_diag)
    sym = a_mat / np.outer(root, root)

    v0 = root / np.linalg.norm(root)
    e0 = np.zeros_like(v0)
    e0[0] = 1.0
    hv = v0 - e0
    norm = np.linalg.norm(hv)
    if norm < 1e-14:
        reflector = np.eye(len(v0))
    else:
        hv = hv / norm
        reflector = np.eye(len(v0)) - 2.0 * np.outer(hv, hv)
    basis = reflector[:, 1:]
    reduced = basis.T @ sym @ basis
    reduced = 0.5 * (reduced + reduced.T)
    try:
        eigs = sla.eigh(reduced, eigvals_only=True)
    except sla.LinAlgError as exc:  # pragma: no cover - defensive
        raise EigensolverError(
            f"eigensolve failed: {exc}", condition=float(np.linalg.cond(reduced))
        ) from exc

    eigs = eigs[:k] / state.bg.kappa
    u = state.ricci_potential
    osc = float(u.max() - u.min())
    above = eigs[eigs > 1.0 + gap_tol]
    nu = float(above[0]) if len(above) else float("nan")
    in_band = np.sum((eigs >= 1.0 - gap_tol) & (eigs <= 1.0 + gap_tol))
    proxy = (np.exp(-osc) * (nu - 1.0), np.exp(osc) * (nu - 1.0))
    return SpectrumReport(
        eigenvalues=eigs,
        multiplicities=_cluster(eigs, gap_tol),
        nu=nu,
        lambda_proxy=proxy,
        dim_hol_sector=int(in_band),
        osc_u=osc,
        kappa=state.bg.kappa,
    )


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    window: tuple
    n_points: int


def fit_decay_rate(ts, values, trailing_fraction: float = 0.5,
                   rel_floor: float = 1e-12) -> DecayFit:
    """Least-squares exponential rate of a positive decaying series.

    Samples below `rel_floor` times the series maximum are treated as noise
    floor and dropped; the fit runs over the trailing fraction of what
    survives. Returns the decay rate b of value ~ C e^{-b t} and the r^2 of
    the log-linear fit.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0.0
    if keep.sum() < 10:
        raise FitUnavailableError(f"only {int(keep.sum())} positive samples")
    floor = values[keep].max() * rel_floor
    keep &= values > floor
    ts, values = ts[keep], values[keep]
    start = int(np.floor(len(ts) * (1.0 - trailing_fraction)))
    ts, values = ts[start:], values[start:]
    if len(ts) < 10:
        raise FitUnavailableError(f"trailing window has only {len(ts)} samples")
    logv = np.log(values)
    design = np.vstack([ts, np.ones_like(ts)]).T
    sol, *_ = np.linalg.lstsq(design, logv, rcond=None)
    fitted = design @ sol
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(rate=float(-sol[0]), r_squared=r2,
                    window=(float(ts[0]), float(ts[-1])), n_points=len(ts))


@dataclass(frozen=True)
class ConditionFlags:
    M_proxy: bool
    F: bool
    T: bool
    C_proxy: bool

    def as_dict(self):
        return {"M_proxy": self.M_proxy, "F": self.F, "T": self.T, "C_proxy": self.C_proxy}


def condition_flags(traj, delta_T: float = 0.01, tol_F: float = 1e-6) -> ConditionFlags:
    """Classify a trajectory against the stability conditions.

    M_proxy: the Mabuchi series has flattened (its infimum is its final value
    and the last decade of the run moved it by less than 1e-8).
    F: the Futaki invariant vanishes within tol_F at every sample.
    T: the lower lambda-proxy stays above delta_T at every sample.
    C_proxy: the holomorphic-sector dimension is constant across samples.
    """
    rows = traj.rows
    if not rows:
        raise ValueError("trajectory has no diagnostics rows")
    if not any(np.isfinite(r.nu) for r in rows):
        raise ValueError("trajectory carries no spectral data; run with spectra on")
    mab = np.array([r.mabuchi for r in rows])
    ts = np.array([r.t for r in rows])
    tail_start = ts[0] + 0.9 * (ts[-1] - ts[0])
    tail = mab[ts >= tail_start]
    flat = abs(float(tail[0] - tail[-1])) <= 1e-8 * max(1.0, abs(float(mab[-1])))
    m_proxy = flat and (mab.min() >= mab[-1] - 1e-8)

    f_flag = max(abs(r.fut) for r in rows) < tol_F

    lam_lo = np.array([r.lambda_lo for r in rows])
    t_flag = bool(np.all(np.isfinite(lam_lo))) and float(lam_lo.min()) > delta_T

    dims = {r.dim_hol for r in rows if np.isfinite(r.dim_hol)}
    c_proxy = len(dims) == 1

    return ConditionFlags(M_proxy=bool(m_proxy), F=bool(f_flag), T=bool(t_flag),
                          C_proxy=bool(c_proxy))


@dataclass(frozen=True)
class ShiMonitorReport:
    ts: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    sup_m1: float
    sup_m2: float
    window: tuple


def shi_monitor(traj) -> ShiMonitorReport:
    """Curvature-derivative monitors t^{m/2} |grad^m R| / max(K^1/2, K), m = 1, 2.

    Covariant norms of the transverse curvature are read off the diagnostics
    rows; suprema are taken over t in (0, min(1, t_end)].
    """
    rows = traj.rows
    ts = np.array([r.t for r in rows])
    m1 = np.array([r.shi_m1 for r in rows])
    m2 = np.array([r.shi_m2 for r in rows])
    t_hi = min(1.0, float(ts[-1]))
    window = (ts > 0.0) & (ts <= t_hi)
    sup1 = float(m1[window].max()) if window.any() else 0.0
    sup2 = float(m2[window].max()) if window.any() else 0.0
    return ShiMonitorReport(ts=ts, m1=m1, m2=m2, sup_m1=sup1, sup_m2=sup2,
                            window=(0.0, t_hi))


@dataclass(frozen=True)
class EquivalenceReport:
    integral: float
    max_ratio: float


def equivalence_monitor(traj) -> EquivalenceReport:
    """Cumulative log-density velocity and the worst density ratio across times.

    The first quantity bounds the log of the second when the metrics stay
    uniformly equivalent (Hamilton's lemma); both are reported.
    """
    states = traj.states
    if len(states) < 2:
        raise ValueError("need at least two samples")
    integral = 0.0
    for prev, here in zip(states[:-1], states[1:]):
        integral += float(np.max(np.abs(here.log_density - prev.log_density)))
    logd = np.stack([s.log_density for s in states])
    per_node_span = logd.max(axis=0) - logd.min(axis=0)
    max_ratio = float(np.exp(per_node_span.max()))
    return EquivalenceReport(integral=integral, max_ratio=max_ratio)
