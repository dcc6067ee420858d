import numpy as np
import pytest

from dpgflow import spaces


def test_gauss_rule_exactness():
    # n points integrate monomials exactly through degree 2n-1
    for n in range(1, 13):
        x, w = spaces.gauss_rule(n)
        for deg in range(0, 2 * n):
            exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
            assert abs(w @ x**deg - exact) < 1e-14 * max(1.0, abs(exact))
    x, w = spaces.gauss_rule(6)
    assert abs(w.sum() - 2.0) < 1e-14


def test_gauss_rule_first_inexact_degree():
    # degree 2n should NOT be integrated exactly (sanity that the rule
    # is the expected one, not an over-long rule)
    n = 4
    x, w = spaces.gauss_rule(n)
    assert abs(w @ x ** (2 * n) - 2.0 / (2 * n + 1)) > 1e-8


def test_quad_grid_weights():
    pts, wts = spaces.quad_grid(5)
    assert pts.shape == (25, 2)
    assert abs(wts.sum() - 4.0) < 1e-13
    # integrate x^2 * y^4 over the square
    val = wts @ (pts[:, 0] ** 2 * pts[:, 1] ** 4)
    assert abs(val - (2.0 / 3.0) * (2.0 / 5.0)) < 1e-13


def test_legendre_values():
    pts = np.linspace(-1, 1, 7)
    tab = spaces.legendre_table(4, pts)
    assert np.allclose(tab[2], 0.5 * (3 * pts**2 - 1), atol=1e-14)
    assert np.allclose(tab[3], 0.5 * (5 * pts**3 - 3 * pts), atol=1e-14)
    # endpoint normalization P_k(1) = 1
    assert np.allclose(spaces.legendre_table(6, np.array([1.0]))[:, 0], 1.0)


def test_integrated_legendre_properties():
    pts = np.linspace(-1, 1, 9)
    vals, ders = spaces.integrated_legendre_table(5, pts)
    # first two are the hat functions and sum to one
    assert np.allclose(vals[0] + vals[1], 1.0, atol=1e-14)
    # higher modes vanish at both endpoints
    endpoint_vals, _ = spaces.integrated_legendre_table(5, np.array([-1.0, 1.0]))
    assert np.allclose(endpoint_vals[2:], 0.0, atol=1e-14)
    # derivative of mode k>=2 is the Legendre polynomial of degree k-1
    leg = spaces.legendre_table(4, pts)
    for k in range(2, 6):
        assert np.allclose(ders[k], leg[k - 1], atol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_scalar2d_reproduces_polynomials(order):
    # random polynomial in the tensor space must be exactly representable:
    # solve for coefficients at one point set, verify at another
    rng = np.random.default_rng(7 * order + 3)
    basis = spaces.Scalar2D(order)
    exps = [(i, j) for j in range(order + 1) for i in range(order + 1)]
    coef = rng.standard_normal(len(exps))

    def poly(p):
        return sum(c * p[:, 0] ** i * p[:, 1] ** j for c, (i, j) in zip(coef, exps))

    fit_pts, _ = spaces.quad_grid(order + 2)
    V = basis.eval(fit_pts)
    c_basis, *_ = np.linalg.lstsq(V.T, poly(fit_pts), rcond=None)
    chk = rng.uniform(-1, 1, size=(40, 2))
    err = np.abs(c_basis @ basis.eval(chk) - poly(chk)).max()
    assert err < 1e-10


def test_scalar2d_gradient_vs_fd():
    basis = spaces.Scalar2D(3)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.9, 0.9, size=(20, 2))
    grad = basis.eval_grad(pts)
    h = 1e-6
    for axis in (0, 1):
        dp = pts.copy()
        dm = pts.copy()
        dp[:, axis] += h
        dm[:, axis] -= h
        fd = (basis.eval(dp) - basis.eval(dm)) / (2 * h)
        assert np.abs(grad[:, :, axis] - fd).max() < 1e-6


def test_edge_basis_orthogonality():
    basis = spaces.Edge1D(4)
    x, w = spaces.gauss_rule(6)
    tab = basis.eval(x)
    M = (tab * w) @ tab.T
    assert np.allclose(M, np.diag(basis.mass_diagonal()), atol=1e-13)


@pytest.mark.parametrize("order", [0, 1, 2, 3])
@pytest.mark.parametrize("amap", list(spaces.CHILD_HALF_MAPS) + [(-0.5, 0.5), (-0.5, -0.5)])
def test_constraint_reproduces_parent(order, amap):
    # child coefficients must reproduce the parent polynomial exactly on
    # the child interval, including direction-flipped child edges
    a, b = amap
    rng = np.random.default_rng(29 + order)
    parent_coef = rng.standard_normal(order + 1)
    C = spaces.constrain_edge_dofs(order, a, b)
    child_coef = C @ parent_coef
    basis = spaces.edge_basis(order)
    s = np.linspace(-1, 1, 33)
    child_vals = child_coef @ basis.eval(s)
    parent_vals = parent_coef @ basis.eval(a * s + b)
    assert np.abs(child_vals - parent_vals).max() < 1e-12


def test_poly_orders_validation():
    with pytest.raises(ValueError):
        spaces.PolyOrders(p=0)
    with pytest.raises(ValueError):
        spaces.PolyOrders(p=2, dp=0)
    o = spaces.PolyOrders(p=2, dp=2)
    assert (o.field, o.trace, o.flux, o.test) == (2, 3, 2, 4)
