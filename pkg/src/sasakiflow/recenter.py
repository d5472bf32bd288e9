"""Automorphism recentering: gauge control for runs with nonzero Futaki invariant.

On slope-unbalanced geometries the flow approaches a soliton that moves by the
one-parameter group of U(1)-equivariant transverse biholomorphisms (cylinder
translations s -> s + tau of the leaf space). Every diagnostic computed by
this package is invariant under that group, but the coordinate density
D(y, t) degenerates exponentially in the fixed gauge, which exhausts any
fixed collocation grid in finite time. Pulling the state back by the inverse
translation keeps the profile centered and resolvable indefinitely without
changing any reported quantity.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import legendre as npleg

from .geometry import BackgroundGeometry


class CylinderCoordinate:
    """Background cylinder coordinate s(y) with ds/dy = 2/phi0 and s(0) = 0.

    The simple poles of 2/phi0 at y = +-1 are split off as exact logarithms;
    the smooth remainder is integrated spectrally.
    """

    def __init__(self, bg: BackgroundGeometry):
        self.bg = bg
        y = bg.grid.nodes
        regular = 2.0 / bg.phi0 - 2.0 / (bg.p_plus * (1.0 - y)) - 2.0 / (bg.p_minus * (1.0 + y))
        self._coeffs = npleg.legint(bg.grid.to_modal(regular), lbnd=0.0)

    def s(self, y):
        bg = self.bg
        return (2.0 / bg.p_plus) * (-np.log1p(-y)) + (2.0 / bg.p_minus) * np.log1p(y) \
            + npleg.legval(y, self._coeffs)

    def ds(self, y):
        bg = self.bg
        phi0 = (1.0 - y**2) * (bg.p_minus * (1.0 - y) + bg.p_plus * (1.0 + y)) / 4.0
        return 2.0 / phi0

    def invert(self, s_target):
        """Solve s(y) = s_target componentwise (bisection polish + Newton)."""
        s_target = np.asarray(s_target, dtype=float)
        lo = np.full_like(s_target, -1.0 + 1e-15)
        hi = np.full_like(s_target, 1.0 - 1e-15)
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            below = self.s(mid) < s_target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        y = 0.5 * (lo + hi)
        for _ in range(4):
            y = y - (self.s(y) - s_target) / self.ds(y)
            y = np.clip(y, -1.0 + 1e-15, 1.0 - 1e-15)
        return y


class Recenterer:
    """Pulls states back along the automorphism group to pin the class barycenter."""

    def __init__(self, bg: BackgroundGeometry, target=None):
        self.bg = bg
        self.coord = CylinderCoordinate(bg)
        self.s_nodes = self.coord.s(bg.grid.nodes)
        self.target = target
        self._last_tau = None

    def barycenter(self, psi: np.ndarray) -> float:
        dens = 1.0 + self.bg.h0(psi)
        return 0.5 * self.bg.integrate(self.bg.grid.nodes * dens)

    def pullback(self, psi: np.ndarray, tau: float) -> np.ndarray:
        """Potential of the state pulled back by s -> s + tau (mean-zero)."""
        bg = self.bg
        dens = 1.0 + bg.h0(psi)
        y2 = self.coord.invert(self.s_nodes + tau)
        dens_q = bg.grid.interpolate(dens, y2)
        phi0_q = (1.0 - y2**2) * (bg.p_minus * (1.0 - y2) + bg.p_plus * (1.0 + y2)) / 4.0
        # jacobian dy2/dy = phi0(y2)/phi0(y): the cylinder translation is measure-exact
        new_dens = dens_q * phi0_q / bg.phi0
        return bg.solve_h0(new_dens - 1.0)

    def recenter(self, psi: np.ndarray, tol: float = 1e-9, max_iter: int = 16):
        """Return (psi', tau) with the barycenter of psi' restored to the target.

        Secant iteration on the translation parameter; each trial is one
        pullback. The target defaults to the barycenter of the first state
        seen.
        """
        beta = self.barycenter(psi)
        if self.target is None:
            self.target = beta
            return psi, 0.0
        t_a, b_a = 0.0, beta
        if self._last_tau is not None:
            t_b = self._last_tau
        else:
            t_b = -np.sign(beta - self.target) * 0.05
        psi_b = self.pullback(psi, t_b)
        b_b = self.barycenter(psi_b)
        for _ in range(max_iter):
            if b_b == b_a:
                break
            t_c = t_b + (self.target - b_b) * (t_b - t_a) / (b_b - b_a)
            psi_c = self.pullback(psi, t_c)
            b_c = self.barycenter(psi_c)
            t_a, b_a, t_b, b_b, psi_b = t_b, b_b, t_c, b_c, psi_c
            if abs(b_c - self.target) < tol:
                break
        self._last_tau = float(t_b)
        return psi_b, float(t_b)
