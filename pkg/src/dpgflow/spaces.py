"""Polynomial bases, quadrature rules and hanging-edge constraints.

Conventions used throughout the package:

* Reference element is the square [-1, 1]^2, reference edge the interval
  [-1, 1].
* Element scalar bases (trial fields and broken test functions) are
  tensor products of 1D integrated-Legendre functions: the two linear
  hat functions plus the vanishing-at-the-ends antiderivatives of
  Legendre polynomials.  Hierarchical, so a lower order basis is a
  prefix of a higher order one.
* Edge (interface) bases are plain Legendre polynomials, orthogonal on
  the reference edge, which makes boundary L2 projections diagonal.
* All bases are evaluated into dense tables (nfuncs x npoints); the
  assembly never needs symbolic access.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class PolyOrders:
    """Polynomial order bundle for the discretization.

    p is the field order; traces run one higher, fluxes at p, and the
    broken test space is enriched by dp.
    """

    p: int = 2
    dp: int = 2

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"field order p must be >= 1, got {self.p}")
        if self.dp < 1:
            raise ValueError(f"enrichment dp must be >= 1, got {self.dp}")

    @property
    def field(self) -> int:
        return self.p

    @property
    def trace(self) -> int:
        return self.p + 1

    @property
    def flux(self) -> int:
        return self.p

    @property
    def test(self) -> int:
        return self.p + self.dp


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1, 1]; exact through degree 2n-1."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def quad_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the reference square: (n^2, 2) points, (n^2,) weights.

    Ordering is x fastest, matching the tensor basis flattening.
    """
    x, w = gauss_rule(n)
    xx, yy = np.meshgrid(x, x, indexing="xy")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    wts = np.outer(w, w).ravel()
    return pts, wts


def legendre_table(order: int, pts: np.ndarray) -> np.ndarray:
    """Values of P_0..P_order at pts, shape (order+1, npts)."""
    pts = np.asarray(pts, dtype=float)
    tab = np.empty((order + 1, pts.size))
    tab[0] = 1.0
    if order >= 1:
        tab[1] = pts
    for k in range(1, order):
        # Bonnet recurrence
        tab[k + 1] = ((2 * k + 1) * pts * tab[k] - k * tab[k - 1]) / (k + 1)
    return tab


def legendre_deriv_table(order: int, pts: np.ndarray) -> np.ndarray:
    """Values of P_0'..P_order' at pts, shape (order+1, npts)."""
    pts = np.asarray(pts, dtype=float)
    tab = legendre_table(order, pts)
    dtab = np.empty_like(tab)
    dtab[0] = 0.0
    if order >= 1:
        dtab[1] = 1.0
    for k in range(1, order):
        dtab[k + 1] = dtab[k - 1] + (2 * k + 1) * tab[k]
    return dtab


def integrated_legendre_table(order: int, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1D hierarchical basis values and derivatives at pts.

    Functions: l_0 = (1-x)/2, l_1 = (1+x)/2, and for k >= 2
    l_k(x) = int_{-1}^x P_{k-1}(t) dt = (P_k - P_{k-2}) / (2k - 1),
    which vanishes at both endpoints.  Returns (vals, derivs), each of
    shape (order+1, npts).
    """
    pts = np.asarray(pts, dtype=float)
    leg = legendre_table(order, pts)
    vals = np.empty((order + 1, pts.size))
    ders = np.empty_like(vals)
    vals[0] = 0.5 * (1.0 - pts)
    ders[0] = -0.5
    if order >= 1:
        vals[1] = 0.5 * (1.0 + pts)
        ders[1] = 0.5
    for k in range(2, order + 1):
        vals[k] = (leg[k] - leg[k - 2]) / (2 * k - 1)
        ders[k] = leg[k - 1]
    return vals, ders


class Scalar2D:
    """Tensor-product scalar basis on the reference square.

    Basis function (i, j) is l_i(x) * l_j(y), flattened with i fastest;
    dimension (order+1)^2.
    """

    def __init__(self, order: int):
        if order < 0:
            raise ValueError("order must be nonnegative")
        self.order = order
        self.dim = (order + 1) ** 2

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """Values at pts (npts, 2) -> (dim, npts)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        vx, _ = integrated_legendre_table(self.order, pts[:, 0])
        vy, _ = integrated_legendre_table(self.order, pts[:, 1])
        # (j, i) outer product flattened with i fastest
        return (vy[:, None, :] * vx[None, :, :]).reshape(self.dim, -1)

    def eval_grad(self, pts: np.ndarray) -> np.ndarray:
        """Reference gradients at pts -> (dim, npts, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        vx, dx = integrated_legendre_table(self.order, pts[:, 0])
        vy, dy = integrated_legendre_table(self.order, pts[:, 1])
        gx = (vy[:, None, :] * dx[None, :, :]).reshape(self.dim, -1)
        gy = (dy[:, None, :] * vx[None, :, :]).reshape(self.dim, -1)
        return np.stack([gx, gy], axis=-1)


class Edge1D:
    """Legendre basis on the reference edge; dimension order+1."""

    def __init__(self, order: int):
        if order < 0:
            raise ValueError("order must be nonnegative")
        self.order = order
        self.dim = order + 1

    def eval(self, pts: np.ndarray) -> np.ndarray:
        return legendre_table(self.order, np.asarray(pts, dtype=float))

    def mass_diagonal(self) -> np.ndarray:
        """Diagonal of the reference-edge mass matrix (orthogonality)."""
        k = np.arange(self.dim)
        return 2.0 / (2 * k + 1)


@lru_cache(maxsize=None)
def _cached_scalar2d(order: int) -> Scalar2D:
    return Scalar2D(order)


@lru_cache(maxsize=None)
def _cached_edge1d(order: int) -> Edge1D:
    return Edge1D(order)


def field_basis(order: int) -> Scalar2D:
    """Scalar basis used per component of the L2 trial fields."""
    return _cached_scalar2d(order)


def test_basis(order: int) -> Scalar2D:
    """Scalar basis used per component of the enriched broken test space."""
    return _cached_scalar2d(order)


def edge_basis(order: int) -> Edge1D:
    """Scalar basis used per component of the interface variables."""
    return _cached_edge1d(order)


@lru_cache(maxsize=None)
def constrain_edge_dofs(order: int, a: float, b: float) -> np.ndarray:
    """Constraint matrix C with child = C @ parent for a sub-edge.

    The child edge's reference coordinate s maps into the parent's as
    t = a*s + b (|a| <= 1, the image inside [-1, 1]).  Because the
    restriction of a degree-`order` polynomial is again degree `order`,
    the L2 projection onto the child basis is exact: C = M^{-1} P with
    M the child mass matrix and P_{ji} = int phi_j(s) phi_i(a s + b) ds.
    """
    basis = edge_basis(order)
    x, w = gauss_rule(order + 1)  # integrand degree <= 2*order
    child = basis.eval(x)
    parent = basis.eval(a * x + b)
    proj = (child * w) @ parent.T
    return proj / basis.mass_diagonal()[:, None]


# Child half-edges of a split edge, in the parent's own parameter:
# child 0 covers [-1, 0] (contains the parent's start), child 1 covers [0, 1].
CHILD_HALF_MAPS = ((0.5, -0.5), (0.5, 0.5))
