"""Symmetric reduction of transverse Kahler geometry on the model Sasaki manifolds.

A metric in the fixed transverse class is a potential phi(y) on the moment
interval; its density D = 1 + H0[phi] with H0[f] = (1/2)(phi0 f')' is the
determinant ratio against the background profile phi0. The background profile
is the cubic blend

    phi0(y) = (1 - y^2) (p_minus (1 - y) + p_plus (1 + y)) / 4,

which meets the pole slopes phi0'(-1) = p_minus, phi0'(1) = -p_plus. Slope 2
is a smooth pole; slope 2/a is a cone angle 2pi/a. All integrals are taken in
the reduced measure dm = D dy with the Reeb/angular factor absorbed, so the
total volume is 2 and the mean transverse curvature is kappa = (p-+p+)/4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import ConfigurationError, InadmissiblePotentialError
from .spectral import Field, Grid, as_values, make_grid

DEFAULT_NODES = 128
EPS_POSITIVITY = 1e-8


@dataclass(frozen=True)
class GeometryConfig:
    """Pole slopes and grid size of a model geometry; regular case is (2, 2)."""

    p_minus: float = 2.0
    p_plus: float = 2.0
    n_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.p_minus <= 0 or self.p_plus <= 0:
            raise ConfigurationError(
                f"pole slopes must be positive, got ({self.p_minus}, {self.p_plus})"
            )
        if self.n_nodes < 2:
            raise ConfigurationError("n_nodes must be at least 2")

    @classmethod
    def from_weights(cls, a: float, b: float, n_nodes: int = DEFAULT_NODES) -> "GeometryConfig":
        """Orbifold weight form (a, b): slopes p_minus = 2/b, p_plus = 2/a."""
        if a <= 0 or b <= 0:
            raise ConfigurationError(f"weights must be positive, got ({a}, {b})")
        return cls(p_minus=2.0 / b, p_plus=2.0 / a, n_nodes=n_nodes)

    @property
    def kappa(self) -> float:
        return (self.p_minus + self.p_plus) / 4.0


@dataclass(frozen=True)
class BackgroundGeometry:
    """Reference transverse metric: profile, curvature, Ricci potential, operators."""

    grid: Grid
    p_minus: float
    p_plus: float
    kappa: float
    phi0: np.ndarray
    dphi0: np.ndarray
    R0: np.ndarray
    F: np.ndarray
    laplace0: np.ndarray = field(repr=False)     # symmetric-form H0, annihilates constants
    dirichlet_core: np.ndarray = field(repr=False)  # S with f.S f = int (phi0/2) f'^2 dy
    _poisson_lu: tuple = field(repr=False)
    _end_weights: np.ndarray = field(repr=False)  # evaluation at the poles y = -1, +1

    @property
    def n(self) -> int:
        return self.grid.n

    def integrate(self, values: np.ndarray) -> float:
        return self.grid.integrate(values)

    def lebesgue_mean(self, values: np.ndarray) -> float:
        return 0.5 * self.grid.integrate(values)

    def h0(self, values: np.ndarray) -> np.ndarray:
        """H0[f] = (1/2)(phi0 f')' in the summation-by-parts discretization.

        Constants are in the exact kernel; subtracting the mean first keeps
        that true to rounding even for potentials carrying a large constant.
        """
        return self.laplace0 @ (values - 0.5 * (self.grid.weights @ values))

    def pole_values(self, values: np.ndarray) -> np.ndarray:
        """Interpolated values at y = -1 and y = +1."""
        return self._end_weights @ values

    def solve_h0(self, rhs: np.ndarray) -> np.ndarray:
        """Solve H0[f] = rhs with zero Lebesgue mean; rhs is mean-corrected."""
        b = np.empty(self.n + 1)
        b[:-1] = rhs - self.lebesgue_mean(rhs)
        b[-1] = 0.0
        return sla.lu_solve(self._poisson_lu, b)[:-1]


def make_background(config: GeometryConfig) -> BackgroundGeometry:
    """Build the background geometry for the given slopes.

    The Ricci potential F solves H0[F] = R0 - kappa. It is constructed from
    the pole-regular closed form

        F' = (p_minus - 2 kappa (y+1) - phi0') / phi0,

    whose numerator vanishes at both endpoints exactly when
    kappa = (p-+p+)/4, followed by spectral antidifferentiation, one defect
    correction against the discrete operator, and the normalization
    int e^{-F} dy = 2.
    """
    grid = make_grid(config.n_nodes)
    y = grid.nodes
    pm, pp = config.p_minus, config.p_plus
    kappa = config.kappa

    blend = (pm * (1.0 - y) + pp * (1.0 + y)) / 4.0
    phi0 = (1.0 - y**2) * blend
    # the profile is an explicit cubic; use its closed-form derivatives
    dphi0 = ((pp - pm) - 2.0 * (pm + pp) * y - 3.0 * (pp - pm) * y**2) / 4.0
    R0 = kappa + 0.75 * (pp - pm) * y

    weights = grid.weights
    core = 0.5 * grid.diff.T @ (weights[:, None] * (phi0[:, None] * grid.diff))
    laplace0 = -(core / weights[:, None])

    n = grid.n
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = laplace0
    bordered[:n, n] = 1.0
    bordered[n, :n] = weights
    poisson_lu = sla.lu_factor(bordered)

    bary = grid.bary_weights
    end_weights = np.empty((2, n))
    for row, endpoint in enumerate((-1.0, 1.0)):
        w = bary / (endpoint - y)
        end_weights[row] = w / w.sum()

    numerator = pm - 2.0 * kappa * (y + 1.0) - dphi0
    F = grid.antiderivative(numerator / phi0)
    # one defect correction removes the rounding mismatch against the discrete H0
    residual = laplace0 @ F - (R0 - kappa)
    b = np.empty(n + 1)
    b[:n] = residual - 0.5 * grid.integrate(residual)
    b[n] = 0.0
    F = F - sla.lu_solve(poisson_lu, b)[:n]
    F = F + np.log(grid.integrate(np.exp(-F)) / 2.0)

    return BackgroundGeometry(
        grid=grid,
        p_minus=pm,
        p_plus=pp,
        kappa=kappa,
        phi0=phi0,
        dphi0=dphi0,
        R0=R0,
        F=F,
        laplace0=laplace0,
        dirichlet_core=core,
        _poisson_lu=poisson_lu,
        _end_weights=end_weights,
    )


@dataclass(frozen=True)
class MetricState:
    """An admissible metric in the class: potential plus derived fields."""

    bg: BackgroundGeometry
    phi: np.ndarray
    density: np.ndarray
    log_density: np.ndarray
    ricci_potential: np.ndarray
    curvature: np.ndarray
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.bg.grid

    def integrate_dm(self, values: np.ndarray) -> float:
        """Integral against the reduced measure dm = D dy."""
        return self.bg.integrate(values * self.density)

    def weighted_measure(self) -> np.ndarray:
        """Quadrature weights of e^{-u} dm (total mass 2 by normalization)."""
        return self.grid.weights * np.exp(-self.ricci_potential) * self.density

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Metric Laplacian (complex trace): H0[f] / D."""
        return self.bg.h0(values) / self.density

    def at_time(self, t: float) -> "MetricState":
        return replace(self, t=t)


def density(phi, bg: BackgroundGeometry):
    """Density D = 1 + H0[phi]; admissibility is the caller's concern."""
    vals = as_values(phi, bg.grid)
    out = 1.0 + bg.h0(vals)
    if isinstance(phi, Field):
        return Field(bg.grid, out)
    return out


def validate_state(phi, bg: BackgroundGeometry, t: float = 0.0,
                   eps_pos: float = EPS_POSITIVITY) -> MetricState:
    """Check admissibility and populate all derived fields of a state.

    The Ricci potential is the closed form u = kappa phi + log D - F + c with
    c fixed by int e^{-u} dm = 2, so that H0[u]/D = kappa - R.
    """
    vals = as_values(phi, bg.grid)
    dens = 1.0 + bg.h0(vals)
    # positivity must hold on the closed interval: check nodes and pole limits
    poles = bg.pole_values(dens)
    candidates = np.concatenate([dens, poles])
    locations = np.concatenate([bg.grid.nodes, [-1.0, 1.0]])
    dmin = candidates.min()
    if not np.isfinite(dmin) or dmin <= eps_pos:
        where = int(np.argmin(candidates))
        raise InadmissiblePotentialError(
            f"density reached {dmin:.3e} at y = {locations[where]:+.6f}"
            f" (floor {eps_pos:.1e})",
            y=float(locations[where]),
            min_density=float(dmin),
        )
    log_dens = np.log(dens)
    curv = (bg.R0 - bg.h0(log_dens)) / dens
    v = bg.kappa * vals + log_dens - bg.F
    c = np.log(bg.integrate(np.exp(-v) * dens) / 2.0)
    return MetricState(
        bg=bg,
        phi=vals,
        density=dens,
        log_density=log_dens,
        ricci_potential=v + c,
        curvature=curv,
        t=t,
    )


def ricci_potential(phi, bg: BackgroundGeometry) -> np.ndarray:
    """Normalized transverse Ricci potential of an admissible potential."""
    return validate_state(phi, bg).ricci_potential


def grad_norm_sq(f, state: MetricState) -> np.ndarray:
    """Pointwise |df|^2 in the state's metric (complex convention): phi0 f'^2 / (2D)."""
    vals = as_values(f, state.grid)
    df = state.grid.differentiate(vals)
    return state.bg.phi0 * df**2 / (2.0 * state.density)


def dirichlet_energy(f, state: MetricState) -> float:
    """int |df|^2 dm = (1/2) int phi0 f'^2 dy; the density cancels."""
    vals = as_values(f, state.grid)
    df = state.grid.differentiate(vals)
    return 0.5 * state.bg.integrate(state.bg.phi0 * df**2)


def moment_map(state: MetricState) -> np.ndarray:
    """Evolving moment map h with h' = D and h(-1) = -1 (so h(1) = 1)."""
    return -1.0 + state.grid.antiderivative(state.density)


_CHEB_CACHE: dict = {}


def transverse_diameter(state: MetricState) -> float:
    """Pole-to-pole meridian length int sqrt(D/phi0) dy.

    The integrand has inverse-square-root endpoint singularities; splitting
    off 1/sqrt(1-y^2) leaves a smooth factor handled by Gauss-Chebyshev.
    """
    n = state.grid.n
    if n not in _CHEB_CACHE:
        k = np.arange(1, n + 1)
        _CHEB_CACHE[n] = np.cos((2.0 * k - 1.0) * np.pi / (2.0 * n))
    yq = _CHEB_CACHE[n]
    bg = state.bg
    blend = (bg.p_minus * (1.0 - yq) + bg.p_plus * (1.0 + yq)) / 4.0
    dens_q = state.grid.interpolate(state.density, yq)
    smooth = np.sqrt(np.maximum(dens_q, 0.0) / blend)
    return float(np.pi / n * smooth.sum())


@dataclass(frozen=True)
class SasakiScalars:
    """Scale data of the ambient Sasaki triple (g, eta, xi) with its class kappa."""

    kappa: float
    metric_scale: float = 1.0
    eta_scale: float = 1.0
    xi_scale: float = 1.0

    def __post_init__(self):
        if min(self.kappa, self.metric_scale, self.eta_scale, self.xi_scale) <= 0:
            raise ConfigurationError("Sasaki scale data must be positive")


def dhomothety(s: SasakiScalars, a: float) -> SasakiScalars:
    """Tanno rescaling g' = a g + (a^2 - a) eta x eta, eta' = a eta, xi' = xi / a.

    The transverse metric scales by a, so a transverse Einstein constant c
    becomes c / a.
    """
    if a <= 0:
        raise ConfigurationError(f"homothety factor must be positive, got {a}")
    return SasakiScalars(
        kappa=s.kappa / a,
        metric_scale=s.metric_scale * a,
        eta_scale=s.eta_scale * a,
        xi_scale=s.xi_scale / a,
    )


def einstein_normalizing_factor(c: float, n: int = 1) -> float:
    """Homothety factor mapping transverse Einstein constant c > 0 to 2n + 2.

    Composing `dhomothety` with this factor turns a transverse Einstein report
    into the Sasaki-Einstein normalization Ric^T = (2n+2) g^T.
    """
    if c <= 0:
        raise ConfigurationError("transverse Einstein constant must be positive")
    return c / (2.0 * n + 2.0)


TRANSVERSE_PLANE = "transverse-transverse"
REEB_PLANE = "transverse-reeb"


def reconstruct_sasaki_curvature(state: MetricState, node: int, plane: str) -> float:
    """Sectional curvature of the ambient 3-metric at a node.

    Planes containing the Reeb direction have curvature exactly 1; the
    transverse plane carries the transverse sectional curvature 2R corrected
    by the torsion term -3 of the ambient curvature identity.
    """
    if plane == REEB_PLANE:
        return 1.0
    if plane == TRANSVERSE_PLANE:
        return float(2.0 * state.curvature[node] - 3.0)
    raise ConfigurationError(
        f"unknown plane {plane!r}; use {TRANSVERSE_PLANE!r} or {REEB_PLANE!r}"
    )
