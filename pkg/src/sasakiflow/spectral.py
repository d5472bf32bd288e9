"""Gauss-Legendre collocation on the moment interval (-1, 1).

Interior nodes only: endpoint-singular quantities are never evaluated at the
poles. Differentiation uses the barycentric formula, which is exact on
polynomials of degree < N up to rounding; quadrature is the Gauss rule, exact
through degree 2N - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError, GridMismatchError

MIN_NODES = 8


def gauss_legendre_rule(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Ungated helper; `make_grid` enforces the production minimum of 8 nodes.
    """
    if n < 1:
        raise ConfigurationError(f"need at least one node, got {n}")
    nodes, weights = npleg.leggauss(int(n))
    return nodes, weights


def _barycentric_weights(nodes, weights):
    # Stable closed form for Gauss-Legendre points: lam_j ~ (-1)^j sqrt((1-x_j^2) w_j).
    n = len(nodes)
    return (-1.0) ** np.arange(n) * np.sqrt((1.0 - nodes**2) * weights)


def _diff_matrix(nodes, bary):
    n = len(nodes)
    dx = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(dx, 1.0)
    mat = (bary[None, :] / bary[:, None]) / dx
    np.fill_diagonal(mat, 0.0)
    # negative-sum trick: rows annihilate constants exactly
    np.fill_diagonal(mat, -mat.sum(axis=1))
    return mat


@dataclass(frozen=True)
class Grid:
    """Immutable collocation grid: nodes, quadrature weights, differentiation data."""

    nodes: np.ndarray
    weights: np.ndarray
    bary_weights: np.ndarray = field(repr=False)
    diff: np.ndarray = field(repr=False)
    vander: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @classmethod
    def gauss_legendre(cls, n: int) -> "Grid":
        nodes, weights = gauss_legendre_rule(n)
        bary = _barycentric_weights(nodes, weights)
        diff = _diff_matrix(nodes, bary)
        vander = npleg.legvander(nodes, n - 1)
        return cls(nodes=nodes, weights=weights, bary_weights=bary, diff=diff, vander=vander)

    def differentiate(self, values: np.ndarray) -> np.ndarray:
        return self.diff @ values

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def to_modal(self, values: np.ndarray) -> np.ndarray:
        """Legendre coefficients of the degree-(N-1) nodal interpolant."""
        return np.linalg.solve(self.vander, values)

    def from_modal(self, coeffs: np.ndarray) -> np.ndarray:
        return npleg.legval(self.nodes, coeffs)

    def antiderivative(self, values: np.ndarray, lower: float = -1.0) -> np.ndarray:
        """Nodal values of the primitive vanishing at `lower`."""
        coeffs = npleg.legint(self.to_modal(values), lbnd=lower)
        return npleg.legval(self.nodes, coeffs)

    def interpolate(self, values: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Barycentric evaluation of the nodal interpolant at arbitrary points."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        diff = targets[:, None] - self.nodes[None, :]
        exact = np.abs(diff) < 1e-14
        diff = np.where(exact, 1.0, diff)
        w = self.bary_weights[None, :] / diff
        out = (w @ values) / w.sum(axis=1)
        rows, cols = np.nonzero(exact)
        out[rows] = values[cols]
        return out


def make_grid(n: int) -> Grid:
    """Production grid constructor; rejects grids too coarse to be trustworthy."""
    if n < MIN_NODES:
        raise ConfigurationError(f"grid size {n} below minimum {MIN_NODES}")
    return Grid.gauss_legendre(n)


@dataclass(frozen=True)
class Field:
    """Nodal values tied to a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n,):
            raise GridMismatchError(
                f"field length {vals.shape} does not match grid size {self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")


def _require_same_grid(f: Field, grid: Grid):
    if f.grid is not grid and not np.array_equal(f.grid.nodes, grid.nodes):
        raise GridMismatchError("field is tied to a different grid")


def differentiate(f: Field) -> Field:
    """Spectral derivative of the nodal interpolant."""
    return Field(f.grid, f.grid.differentiate(f.values))


def integrate(f: Field) -> float:
    """Gauss quadrature of the nodal interpolant over [-1, 1]."""
    return f.grid.integrate(f.values)


def as_values(f, grid: Grid) -> np.ndarray:
    """Accept a Field (grid-checked) or a bare array of nodal values."""
    if isinstance(f, Field):
        _require_same_grid(f, grid)
        return f.values
    vals = np.asarray(f, dtype=float)
    if vals.shape != (grid.n,):
        raise GridMismatchError(f"expected {grid.n} nodal values, got shape {vals.shape}")
    return vals
