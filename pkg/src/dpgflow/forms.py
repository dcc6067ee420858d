"""Local bilinear forms for the first-order viscoelastic system.

The solver works with the ultraweak form of the steady system

    rho (L u) + grad p - eta_s div L - div T = rho f
    L - grad u = 0
    div u = 0
    T + lam [(u . grad) T - L T - T L^h] + (alpha lam / eta_p) T^2
      - eta_p (L + L^h) = 0

for velocity u, pressure p, velocity gradient L, and extra stress T
(symmetric), with `^h` the transpose and the alpha-term present only in
the Giesekus model.  All derivatives sit on broken test functions
(v, q, M, S); element interface unknowns are the velocity trace u-hat,
the traction flux t-hat, and the upper-convected stress flux j-hat.

Linearization is in the fields (u, L, T) only: pressure and interface
variables enter linearly and are solved as totals each iteration.  The
linearized field form, grouped per trial variable, pairs

    u with  rho L0^h v - grad q + div M - lam (grad S : T0)
    L with  eta_s grad v + rho v x u0 + M - 2 eta_p S - 2 lam S T0
    p with  - div v
    T with  sym grad v + S - lam (u0 . grad) S - 2 lam sym(L0^h S)
            [+ (alpha lam / eta_p) (T0 S + S T0)]

and the test-space Gram matrix is the graph norm built from exactly
these four adjoint operators plus the plain L2 norm of (v, q, M, S):
the same tables generate the stiffness columns and the Gram, which is
what makes the assembled element matrices provably SPD.

Component orderings used everywhere:
  trial fields / adjoint rows: u1 u2 p L11 L12 L21 L22 T11 T12 T22
  test slots:                  v1 v2 q M11 M12 M21 M22 S11 S12 S22
Symmetric tensors store (11, 12, 22); their 12-component carries weight
2 in every Frobenius pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .spaces import PolyOrders, edge_basis, field_basis, gauss_rule, quad_grid, test_basis

# component indices, shared by trial fields and test slots
IU1, IU2, IP, IL11, IL12, IL21, IL22, IT11, IT12, IT22 = range(10)
NCOMP = 10

# Frobenius weight of the stored symmetric-tensor components in the
# trial T / flux j-hat columns and in the S-row of the Gram
SYM_W = (1.0, 2.0, 1.0)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the constitutive model.

    rho: density (0 switches off inertia), lam: relaxation time,
    eta_s / eta_p: solvent and polymer viscosities, alpha: Giesekus
    mobility (0 recovers Oldroyd-B), l0/ubar: length and velocity
    scales entering the graph-norm weights, f: body force callable
    (n,2)->(n,2) or None.
    """

    rho: float = 0.0
    lam: float = 0.0
    eta_s: float = 0.59
    eta_p: float = 0.41
    alpha: float = 0.0
    l0: float = 1.0
    ubar: float = 1.0
    f: object = None

    def __post_init__(self):
        if self.eta_s <= 0 or self.eta_p < 0:
            raise ValueError("need eta_s > 0 and eta_p >= 0")
        if min(self.rho, self.lam, self.alpha) < 0:
            raise ValueError("rho, lam, alpha must be nonnegative")
        if self.alpha > 0 and (self.lam == 0 or self.eta_p == 0):
            raise ValueError("Giesekus mobility needs lam > 0 and eta_p > 0")
        if self.l0 <= 0 or self.ubar <= 0:
            raise ValueError("scales l0, ubar must be positive")

    @property
    def eta(self) -> float:
        return self.eta_s + self.eta_p

    @property
    def giesekus_factor(self) -> float:
        return self.alpha * self.lam / self.eta_p if self.alpha > 0 else 0.0

    @classmethod
    def from_benchmark(cls, wi: float, re: float = 0.0, alpha: float = 0.0,
                       beta: float = 0.59, f=None) -> "ModelParams":
        """Nondimensional cylinder-benchmark parameters: unit mean inflow
        velocity, cylinder radius, and total viscosity, so lam equals the
        Weissenberg number and rho the Reynolds number."""
        if not 0 < beta < 1:
            raise ValueError("viscosity ratio beta must lie in (0, 1)")
        return cls(rho=re, lam=wi, eta_s=beta, eta_p=1.0 - beta, alpha=alpha, f=f)


@dataclass
class TrialLayout:
    """Index bookkeeping of the element-local trial vector:
    10 field components, then per edge [u-hat(2), t-hat(2), j-hat(3)]."""

    orders: PolyOrders

    def __post_init__(self):
        p = self.orders.p
        self.nf = (p + 1) ** 2
        self.ntr = p + 2  # trace funcs per component
        self.nfl = p + 1  # flux funcs per component
        self.nfield = NCOMP * self.nf
        self.per_edge = 2 * self.ntr + 5 * self.nfl
        self.ntrial = self.nfield + 4 * self.per_edge

    def field_slice(self, comp: int) -> slice:
        return slice(comp * self.nf, (comp + 1) * self.nf)

    def edge_slice(self, side: int) -> slice:
        a = self.nfield + side * self.per_edge
        return slice(a, a + self.per_edge)

    # offsets inside one edge block
    @property
    def uhat_off(self):
        return 0

    @property
    def that_off(self):
        return 2 * self.ntr

    @property
    def jhat_off(self):
        return 2 * self.ntr + 2 * self.nfl


@dataclass
class TestLayout:
    orders: PolyOrders

    def __post_init__(self):
        self.nt = (self.orders.test + 1) ** 2
        self.ntest = NCOMP * self.nt

    def slot(self, comp: int) -> slice:
        return slice(comp * self.nt, (comp + 1) * self.nt)


@dataclass
class EdgeContext:
    eid: int
    side: int
    sign: int
    tag: int
    tau: np.ndarray      # global edge parameters of the quad points
    wq: np.ndarray       # quadrature weight * ds factor
    xq: np.ndarray       # physical points (nqe, 2)
    n_out: np.ndarray    # element outward normal (nqe, 2)
    Te: np.ndarray       # test-basis trace (nt, nqe)
    Fe: np.ndarray       # field-basis trace (nf, nqe)
    Etr: np.ndarray      # trace basis values (ntr, nqe)
    Efl: np.ndarray      # flux basis values (nfl, nqe)


@dataclass
class ElementContext:
    k: int
    wdet: np.ndarray     # combined quadrature weights (npq,)
    xq: np.ndarray       # physical quad points (npq, 2)
    Fv: np.ndarray       # field basis values (nf, npq)
    Tv: np.ndarray       # test basis values (nt, npq)
    Gx: np.ndarray       # physical test gradients (nt, npq)
    Gy: np.ndarray
    edges: list = field(default_factory=list)

    @property
    def npq(self) -> int:
        return self.wdet.size


_SIDE_REF = {
    0: lambda t: np.column_stack([t, -np.ones_like(t)]),
    1: lambda t: np.column_stack([np.ones_like(t), t]),
    2: lambda t: np.column_stack([-t, np.ones_like(t)]),
    3: lambda t: np.column_stack([-np.ones_like(t), -t]),
}


def build_contexts(mesh: geo.Mesh, orders: PolyOrders) -> list[ElementContext]:
    """Precompute geometry-dependent tables for every element.

    Quadrature uses orders.test + 2 points per direction, two more on
    elements with a curved side (the arc map is trigonometric).
    """
    fb = field_basis(orders.field)
    tb = test_basis(orders.test)
    trb = edge_basis(orders.trace)
    flb = edge_basis(orders.flux)
    n_base = orders.test + 2
    cache: dict[int, tuple] = {}
    contexts = []
    for k in range(mesh.num_elements):
        n1 = n_base + (2 if mesh.curved_side[k] >= 0 else 0)
        if n1 not in cache:
            pts, wts = quad_grid(n1)
            te, we = gauss_rule(n1)
            cache[n1] = (pts, wts, fb.eval(pts), tb.eval(pts), tb.eval_grad(pts), te, we)
        pts, wts, Fv, Tv, TG, te, we = cache[n1]
        xq, J = mesh.ref_map(k, pts)
        detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        # physical gradient: grad_x = J^{-T} grad_ref
        inv00 = J[:, 1, 1] / detJ
        inv01 = -J[:, 0, 1] / detJ
        inv10 = -J[:, 1, 0] / detJ
        inv11 = J[:, 0, 0] / detJ
        Gx = TG[:, :, 0] * inv00 + TG[:, :, 1] * inv10
        Gy = TG[:, :, 0] * inv01 + TG[:, :, 1] * inv11
        ctx = ElementContext(k=k, wdet=wts * detJ, xq=xq, Fv=Fv, Tv=Tv, Gx=Gx, Gy=Gy)
        for s in range(4):
            eid = int(mesh.elem_edges[k, s])
            sign = int(mesh.elem_sign[k, s])
            x_e, ds, n_glob = mesh.edge_geometry(eid, te)
            t_local = te if sign == 1 else -te
            ref_pts = _SIDE_REF[s](t_local)
            Te = tb.eval(ref_pts)
            Fe = fb.eval(ref_pts)
            ctx.edges.append(EdgeContext(
                eid=eid, side=s, sign=sign, tag=int(mesh.edge_tag[eid]),
                tau=te, wq=we * ds, xq=x_e, n_out=sign * n_glob,
                Te=Te, Fe=Fe, Etr=trb.eval(te), Efl=flb.eval(te)))
        contexts.append(ctx)
    return contexts


@dataclass
class BgValues:
    """Background fields at the element quadrature points."""

    u: np.ndarray   # (npq, 2)
    L: np.ndarray   # (npq, 4): 11 12 21 22
    T: np.ndarray   # (npq, 3): 11 12 22

    @classmethod
    def zero(cls, npq: int) -> "BgValues":
        return cls(np.zeros((npq, 2)), np.zeros((npq, 4)), np.zeros((npq, 3)))

    @classmethod
    def from_coeffs(cls, ctx: ElementContext, coeffs: np.ndarray) -> "BgValues":
        """coeffs: (10, nf) element field coefficients."""
        vals = coeffs @ ctx.Fv  # (10, npq)
        return cls(vals[[IU1, IU2]].T, vals[IL11:IL22 + 1].T, vals[IT11:IT22 + 1].T)


def adjoint_tables(ctx: ElementContext, params: ModelParams, bg: BgValues) -> np.ndarray:
    """Adjoint operator values Z[c, qp, testdof] for the ten rows.

    Z[c] maps test coefficients to the value of adjoint row c at each
    quadrature point; the rows are ordered like the trial components.
    Shared by the stiffness and the Gram so the two stay consistent by
    construction.
    """
    nt = ctx.Tv.shape[0]
    npq = ctx.npq
    NT = NCOMP * nt
    lam, rho = params.lam, params.rho
    es, ep = params.eta_s, params.eta_p
    g = params.giesekus_factor
    u1, u2 = bg.u[:, 0], bg.u[:, 1]
    L11, L12, L21, L22 = bg.L.T
    T11, T12, T22 = bg.T.T
    Tv, Gx, Gy = ctx.Tv.T, ctx.Gx.T, ctx.Gy.T  # (npq, nt)
    conv = u1[:, None] * Gx + u2[:, None] * Gy  # (u0 . grad) applied to a slot

    Z = np.zeros((NCOMP, npq, NT))

    def put(c, slot, arr):
        Z[c, :, slot * nt:(slot + 1) * nt] += arr

    # row u: rho L0^h v - grad q + div M - lam grad S : T0
    put(IU1, IU1, rho * L11[:, None] * Tv)
    put(IU1, IU2, rho * L21[:, None] * Tv)
    put(IU1, IP, -Gx)
    put(IU1, IL11, Gx)
    put(IU1, IL12, Gy)
    put(IU1, IT11, -lam * T11[:, None] * Gx)
    put(IU1, IT12, -2 * lam * T12[:, None] * Gx)
    put(IU1, IT22, -lam * T22[:, None] * Gx)
    put(IU2, IU1, rho * L12[:, None] * Tv)
    put(IU2, IU2, rho * L22[:, None] * Tv)
    put(IU2, IP, -Gy)
    put(IU2, IL21, Gx)
    put(IU2, IL22, Gy)
    put(IU2, IT11, -lam * T11[:, None] * Gy)
    put(IU2, IT12, -2 * lam * T12[:, None] * Gy)
    put(IU2, IT22, -lam * T22[:, None] * Gy)

    # row p: -div v
    put(IP, IU1, -Gx)
    put(IP, IU2, -Gy)

    # row L: eta_s grad v + rho v x u0 + M - 2 eta_p S - 2 lam S T0
    put(IL11, IU1, es * Gx + rho * u1[:, None] * Tv)
    put(IL11, IL11, Tv)
    put(IL11, IT11, -(2 * ep + 2 * lam * T11)[:, None] * Tv)
    put(IL11, IT12, -2 * lam * T12[:, None] * Tv)
    put(IL12, IU1, es * Gy + rho * u2[:, None] * Tv)
    put(IL12, IL12, Tv)
    put(IL12, IT11, -2 * lam * T12[:, None] * Tv)
    put(IL12, IT12, -(2 * ep + 2 * lam * T22)[:, None] * Tv)
    put(IL21, IU2, es * Gx + rho * u1[:, None] * Tv)
    put(IL21, IL21, Tv)
    put(IL21, IT12, -(2 * ep + 2 * lam * T11)[:, None] * Tv)
    put(IL21, IT22, -2 * lam * T12[:, None] * Tv)
    put(IL22, IU2, es * Gy + rho * u2[:, None] * Tv)
    put(IL22, IL22, Tv)
    put(IL22, IT12, -2 * lam * T12[:, None] * Tv)
    put(IL22, IT22, -(2 * ep + 2 * lam * T22)[:, None] * Tv)

    # row T: sym grad v + S - lam (u0.grad) S - 2 lam sym(L0^h S)
    #        + (alpha lam / eta_p)(T0 S + S T0)
    put(IT11, IU1, Gx)
    put(IT11, IT11, (1 - 2 * lam * L11 + 2 * g * T11)[:, None] * Tv - lam * conv)
    put(IT11, IT12, (-2 * lam * L21 + 2 * g * T12)[:, None] * Tv)
    put(IT12, IU1, 0.5 * Gy)
    put(IT12, IU2, 0.5 * Gx)
    put(IT12, IT11, (-lam * L12 + g * T12)[:, None] * Tv)
    put(IT12, IT12, (1 - lam * (L11 + L22) + g * (T11 + T22))[:, None] * Tv - lam * conv)
    put(IT12, IT22, (-lam * L21 + g * T12)[:, None] * Tv)
    put(IT22, IU2, Gy)
    put(IT22, IT12, (-2 * lam * L12 + 2 * g * T12)[:, None] * Tv)
    put(IT22, IT22, (1 - 2 * lam * L22 + 2 * g * T22)[:, None] * Tv - lam * conv)
    return Z


def _gram_weights(params: ModelParams) -> np.ndarray:
    wu = (params.l0 / params.eta) ** 2
    wL = params.eta_s ** -2
    return np.array([wu, wu, 1.0,
                     wL, wL, wL, wL,
                     SYM_W[0], SYM_W[1], SYM_W[2]])


def local_gram(ctx: ElementContext, params: ModelParams, bg: BgValues | None = None,
               Z: np.ndarray | None = None) -> np.ndarray:
    """Graph-norm Gram matrix of the broken test space on one element."""
    if bg is None:
        bg = BgValues.zero(ctx.npq)
    if Z is None:
        Z = adjoint_tables(ctx, params, bg)
    gw = _gram_weights(params)
    NT = Z.shape[2]
    G = np.zeros((NT, NT))
    for c in range(NCOMP):
        Zw = Z[c] * (gw[c] * ctx.wdet)[:, None]
        G += Zw.T @ Z[c]
    # plain L2 part of the graph norm
    nt = ctx.Tv.shape[0]
    mass = (ctx.Tv * ctx.wdet) @ ctx.Tv.T
    l2w = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0) + SYM_W
    for slot in range(NCOMP):
        sl = slice(slot * nt, (slot + 1) * nt)
        G[sl, sl] += l2w[slot] * mass
    return G


# trial-side Frobenius weights per component
_TRIAL_W = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0] + list(SYM_W))


def local_B(ctx: ElementContext, params: ModelParams, bg: BgValues | None = None,
            layout: TrialLayout | None = None, Z: np.ndarray | None = None,
            orders: PolyOrders | None = None) -> np.ndarray:
    """Element stiffness columns of the linearized form, field columns
    first, then per-edge interface columns."""
    if bg is None:
        bg = BgValues.zero(ctx.npq)
    if Z is None:
        Z = adjoint_tables(ctx, params, bg)
    if layout is None:
        layout = TrialLayout(orders or _infer_orders(ctx))
    NT = Z.shape[2]
    nt = NT // NCOMP
    B = np.zeros((NT, layout.ntrial))
    WF = ctx.Fv * ctx.wdet  # (nf, npq)
    for c in range(NCOMP):
        B[:, layout.field_slice(c)] = _TRIAL_W[c] * (Z[c].T @ WF.T)

    lam = params.lam
    for e in ctx.edges:
        base = layout.edge_slice(e.side).start
        TeW = e.Te * e.wq  # (nt, nqe)
        tr_block = TeW @ e.Etr.T  # (nt, ntr)
        fl_block = TeW @ e.Efl.T  # (nt, nfl)
        n1 = e.n_out[:, 0]
        n2 = e.n_out[:, 1]
        tr_n1 = (TeW * n1) @ e.Etr.T
        tr_n2 = (TeW * n2) @ e.Etr.T
        ntr, nfl = layout.ntr, layout.nfl

        # u-hat columns: -<u-hat, M n> + <u-hat . n, q>
        a = base + layout.uhat_off
        B[_sl(IP, nt), a:a + ntr] += tr_n1
        B[_sl(IL11, nt), a:a + ntr] -= tr_n1
        B[_sl(IL12, nt), a:a + ntr] -= tr_n2
        a += ntr
        B[_sl(IP, nt), a:a + ntr] += tr_n2
        B[_sl(IL21, nt), a:a + ntr] -= tr_n1
        B[_sl(IL22, nt), a:a + ntr] -= tr_n2

        # t-hat columns: -sign <t-hat, v>
        a = base + layout.that_off
        B[_sl(IU1, nt), a:a + nfl] -= e.sign * fl_block
        B[_sl(IU2, nt), a + nfl:a + 2 * nfl] -= e.sign * fl_block

        # j-hat columns: + sign lam <j-hat, S>
        a = base + layout.jhat_off
        for ci, comp in enumerate((IT11, IT12, IT22)):
            B[_sl(comp, nt), a + ci * nfl:a + (ci + 1) * nfl] += \
                e.sign * lam * SYM_W[ci] * fl_block
    return B


def _sl(slot: int, nt: int) -> slice:
    return slice(slot * nt, (slot + 1) * nt)


def _infer_orders(ctx: ElementContext) -> PolyOrders:
    raise TypeError("pass layout= or orders= to local_B")


def local_nonlinear_load(ctx: ElementContext, params: ModelParams,
                         bg: BgValues) -> np.ndarray:
    """Right-hand side rho(f, v) minus the nonlinear field form at the
    background (with zero pressure slot): the residual load of one
    Gauss-Newton step in which p and the interface unknowns are totals."""
    lam, rho = params.lam, params.rho
    es, ep = params.eta_s, params.eta_p
    g = params.giesekus_factor
    u1, u2 = bg.u[:, 0], bg.u[:, 1]
    L11, L12, L21, L22 = bg.L.T
    T11, T12, T22 = bg.T.T
    w = ctx.wdet
    Tv, Gx, Gy = ctx.Tv, ctx.Gx, ctx.Gy  # (nt, npq)
    nt = Tv.shape[0]
    l = np.zeros(NCOMP * nt)

    if params.f is not None:
        fvals = np.asarray(params.f(ctx.xq), dtype=float).reshape(-1, 2)
        f1, f2 = fvals[:, 0], fvals[:, 1]
    else:
        f1 = f2 = np.zeros_like(u1)

    Lu1 = L11 * u1 + L12 * u2
    Lu2 = L21 * u1 + L22 * u2
    conv = lambda coef: Gx @ (w * coef * u1) + Gy @ (w * coef * u2)

    l[_sl(IU1, nt)] = Tv @ (w * rho * (f1 - Lu1)) \
        - Gx @ (w * (es * L11 + T11)) - Gy @ (w * (es * L12 + T12))
    l[_sl(IU2, nt)] = Tv @ (w * rho * (f2 - Lu2)) \
        - Gx @ (w * (es * L21 + T12)) - Gy @ (w * (es * L22 + T22))
    l[_sl(IP, nt)] = Gx @ (w * u1) + Gy @ (w * u2)
    l[_sl(IL11, nt)] = -(Tv @ (w * L11) + Gx @ (w * u1))
    l[_sl(IL12, nt)] = -(Tv @ (w * L12) + Gy @ (w * u1))
    l[_sl(IL21, nt)] = -(Tv @ (w * L21) + Gx @ (w * u2))
    l[_sl(IL22, nt)] = -(Tv @ (w * L22) + Gy @ (w * u2))

    # X = L0 T0, Y = T0^2
    X11 = L11 * T11 + L12 * T12
    X12 = L11 * T12 + L12 * T22
    X21 = L21 * T11 + L22 * T12
    X22 = L21 * T12 + L22 * T22
    Y11 = T11**2 + T12**2
    Y12 = T12 * (T11 + T22)
    Y22 = T12**2 + T22**2
    l[_sl(IT11, nt)] = Tv @ (w * (-T11 + 2 * lam * X11 + 2 * ep * L11 - g * Y11)) \
        + lam * conv(T11)
    l[_sl(IT12, nt)] = Tv @ (w * (-2 * T12 + 2 * lam * (X12 + X21)
                                  + 2 * ep * (L12 + L21) - 2 * g * Y12)) \
        + 2 * lam * conv(T12)
    l[_sl(IT22, nt)] = Tv @ (w * (-T22 + 2 * lam * X22 + 2 * ep * L22 - g * Y22)) \
        + lam * conv(T22)
    return l


# -- standalone checks -------------------------------------------------

def giesekus_derivative(params: ModelParams, T0: np.ndarray, dT: np.ndarray) -> np.ndarray:
    """Directional derivative of the quadratic Giesekus term
    (alpha lam / eta_p) T^2 at T0 in direction dT."""
    g = params.giesekus_factor
    return g * (T0 @ dT + dT @ T0)


def giesekus_linearization_check(params: ModelParams, trials: int = 20,
                                 seed: int = 0) -> float:
    """Max relative error of the implemented Giesekus derivative against
    central finite differences of the quadratic term, over random
    symmetric states and directions."""
    g = params.giesekus_factor
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        T0 = _rand_sym(rng)
        dT = _rand_sym(rng)
        h = 1e-6
        fd = g * ((T0 + h * dT) @ (T0 + h * dT) - (T0 - h * dT) @ (T0 - h * dT)) / (2 * h)
        an = giesekus_derivative(params, T0, dT)
        denom = max(np.abs(an).max(), 1e-12)
        worst = max(worst, np.abs(an - fd).max() / denom)
    return worst


def _rand_sym(rng) -> np.ndarray:
    a = rng.standard_normal((2, 2))
    return 0.5 * (a + a.T)


def dual_norm_split_check(dim: int = 40, split: int | None = None,
                          seed: int = 0) -> float:
    """Relative error in the dual-norm Pythagoras identity: for a Hilbert
    space split into orthogonal complements M and N, the squared dual
    norm of any functional equals the sum of the squared dual norms of
    its restrictions.  Exercised on a random finite-dimensional space
    with a random SPD inner product."""
    rng = np.random.default_rng(seed)
    if split is None:
        split = max(1, dim // 3)
    A = rng.standard_normal((dim, dim))
    A = A @ A.T + dim * np.eye(dim)  # SPD inner product
    # orthonormalize a random frame in the A-metric; first `split`
    # columns span M, the rest N
    Q = rng.standard_normal((dim, dim))
    for j in range(dim):
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ A @ Q[:, j]) * Q[:, i]
        Q[:, j] /= np.sqrt(Q[:, j] @ A @ Q[:, j])
    l = rng.standard_normal(dim)
    total = l @ np.linalg.solve(A, l)
    partM = np.sum((l @ Q[:, :split]) ** 2)
    partN = np.sum((l @ Q[:, split:]) ** 2)
    return abs(total - (partM + partN)) / abs(total)
