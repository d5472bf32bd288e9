import numpy as np
import pytest

from sasakiflow import Field, differentiate, gauss_legendre_rule, integrate, make_grid
from sasakiflow.errors import ConfigurationError, GridMismatchError
from sasakiflow.spectral import Grid


def two_point_rule_oracle():
    """Independent Gauss rule: roots of the degree-2 orthogonal polynomial plus
    the moment system for the weights."""
    # P2(x) = (3x^2 - 1)/2
    roots = np.sort(np.roots([1.5, 0.0, -0.5]))
    # w0 + w1 = mu0 = 2, w0 x0 + w1 x1 = mu1 = 0
    vander = np.vstack([np.ones(2), roots])
    weights = np.linalg.solve(vander, np.array([2.0, 0.0]))
    return roots, weights


def test_two_point_rule_matches_oracle():
    nodes, weights = gauss_legendre_rule(2)
    o_nodes, o_weights = two_point_rule_oracle()
    assert np.allclose(nodes, o_nodes, atol=1e-14)
    assert np.allclose(weights, o_weights, atol=1e-14)
    assert np.allclose(np.abs(nodes), 1.0 / np.sqrt(3.0), atol=1e-15)


def test_make_grid_rejects_small():
    with pytest.raises(ConfigurationError):
        make_grid(7)
    assert make_grid(8).n == 8


@pytest.mark.parametrize("n", [8, 32, 128])
def test_grid_invariants(n):
    g = make_grid(n)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] > -1.0 and g.nodes[-1] < 1.0
    assert np.all(g.weights > 0)


@pytest.mark.parametrize("n", [8, 64])
def test_quadrature_exact_to_degree_2n_minus_1(n):
    g = make_grid(n)
    for k in range(2 * n):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert abs(g.integrate(g.nodes**k) - exact) < 1e-12


def test_basic_integrals():
    g = make_grid(16)
    x = g.nodes
    assert abs(g.integrate(np.ones_like(x)) - 2.0) < 1e-14
    assert abs(g.integrate(x)) < 1e-14
    assert abs(g.integrate(x**2) - 2.0 / 3.0) < 1e-14
    assert abs(g.integrate(x**3)) < 1e-14
    assert abs(g.integrate(1 - x**2) - 4.0 / 3.0) < 1e-14


def test_differentiation_simple():
    g = make_grid(16)
    x = g.nodes
    assert np.allclose(g.differentiate(x), 1.0, atol=1e-12)
    assert np.allclose(g.differentiate(x**2), 2 * x, atol=1e-12)


def test_differentiation_sin_spectral():
    g = make_grid(64)
    err = np.abs(g.differentiate(np.sin(3 * g.nodes)) - 3 * np.cos(3 * g.nodes))
    assert err.max() < 1e-10


def test_differentiation_exact_on_polynomials():
    rng = np.random.default_rng(7)
    g = make_grid(48)
    coeffs = rng.standard_normal(g.n)  # degree N-1
    p = np.polynomial.polynomial.polyval(g.nodes, coeffs)
    dp = np.polynomial.polynomial.polyval(g.nodes, np.polynomial.polynomial.polyder(coeffs))
    rel = np.abs(g.differentiate(p) - dp).max() / max(1.0, np.abs(dp).max())
    assert rel < 1e-10


def test_integration_by_parts_compatibility():
    rng = np.random.default_rng(3)
    g = make_grid(64)
    for _ in range(5):
        cf = rng.standard_normal(g.n // 2)
        cg = rng.standard_normal(g.n // 2)
        f = np.polynomial.polynomial.polyval(g.nodes, cf)
        h = np.polynomial.polynomial.polyval(g.nodes, cg)
        boundary = (np.polynomial.polynomial.polyval(1.0, cf)
                    * np.polynomial.polynomial.polyval(1.0, cg)
                    - np.polynomial.polynomial.polyval(-1.0, cf)
                    * np.polynomial.polynomial.polyval(-1.0, cg))
        lhs = g.integrate(g.differentiate(f) * h) + g.integrate(f * g.differentiate(h))
        assert abs(lhs - boundary) < 1e-10


def test_modal_round_trip():
    rng = np.random.default_rng(11)
    g = make_grid(96)
    vals = np.tanh(g.nodes) + 0.1 * rng.standard_normal(g.n)
    back = g.from_modal(g.to_modal(vals))
    assert np.abs(back - vals).max() < 1e-12


def test_field_validation_and_ops():
    g = make_grid(16)
    f = Field(g, g.nodes**3)
    assert abs(integrate(f)) < 1e-14
    df = differentiate(f)
    assert np.allclose(df.values, 3 * g.nodes**2, atol=1e-11)
    with pytest.raises(GridMismatchError):
        Field(g, np.zeros(5))
    with pytest.raises(ValueError):
        Field(g, np.full(g.n, np.nan))


def test_grid_mismatch_on_ops():
    g = make_grid(16)
    other = make_grid(24)
    f = Field(other, np.zeros(other.n))
    from sasakiflow.spectral import as_values

    with pytest.raises(GridMismatchError):
        as_values(f, g)


def test_interpolation_matches_nodal_values():
    g = make_grid(32)
    vals = np.cos(2 * g.nodes)
    probe = np.array([-0.5, 0.0, 0.3, g.nodes[5]])
    out = g.interpolate(vals, probe)
    assert np.abs(out - np.cos(2 * probe)).max() < 1e-12
