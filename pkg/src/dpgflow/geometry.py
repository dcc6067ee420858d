"""Quadrilateral meshes for the half-channel cylinder domain.

Meshes are immutable snapshots: `refine` returns a new mesh and leaves
its input untouched.  Vertex ids are global across a refinement
hierarchy (a refined mesh appends vertices, never renumbers), which
lets the persistent edge-midpoint registry detect hanging-edge
parent/child relations purely from vertex pairs.

Conventions:

* Element corners are stored counterclockwise; local side s runs from
  corner s to corner (s+1) % 4.
* Every edge has a global orientation from its lower vertex id to its
  higher one; the global edge normal is the tangent rotated clockwise.
  An element's outward normal on a side equals sign * global normal,
  where sign = +1 iff the element traverses the side lo -> hi.  That
  sign is also the flux-orientation factor used by the assembly.
* Cylinder edges are exact circle arcs, parametrized affinely in the
  polar angle; elements owning such a side use a transfinite map that
  blends the exact arc with the bilinear map of the corners, so the
  curved boundary is represented to machine precision at every order.
* Refinement is isotropic 4-way; the children are axis-aligned with the
  parent (child c covers the parent's reference quadrant c), and the
  split point of a cylinder edge is the arc midpoint, not the chord
  midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaces import quad_grid

# Edge tags
INTERIOR = 0
INFLOW = 1
OUTFLOW = 2
WALL = 3
CYLINDER = 4
REFLECTIVE = 5

TAG_NAMES = {
    INTERIOR: "interior",
    INFLOW: "inflow",
    OUTFLOW: "outflow",
    WALL: "wall",
    CYLINDER: "cylinder",
    REFLECTIVE: "reflective",
}

_TOL = 1e-9


@dataclass(frozen=True)
class BenchGeometry:
    """Half-channel with a half-cylinder wall bump at the origin.

    The fluid occupies [-upstream, downstream] x [0, half_height] minus
    the half-disk of the given radius centered at the origin.
    """

    radius: float = 1.0
    half_height: float = 2.0
    upstream: float = 7.5
    downstream: float = 7.5

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.half_height <= self.radius:
            raise ValueError("half_height must exceed the cylinder radius")
        # the structured core block spans [-2r, 2r]; the channel must clear it
        if self.upstream <= 2 * self.radius or self.downstream <= 2 * self.radius:
            raise ValueError("channel too short to clear the cylinder core block")

    @property
    def area(self) -> float:
        return (self.upstream + self.downstream) * self.half_height - 0.5 * math.pi * self.radius**2

    def classify_edge(self, p0, p1) -> int:
        def on_line(v, coord, axis):
            return abs(p0[axis] - v) < _TOL and abs(p1[axis] - v) < _TOL

        def on_circle(p):
            return abs(math.hypot(p[0], p[1]) - self.radius) < _TOL

        if on_circle(p0) and on_circle(p1):
            return CYLINDER
        if on_line(-self.upstream, None, 0):
            return INFLOW
        if on_line(self.downstream, None, 0):
            return OUTFLOW
        if on_line(self.half_height, None, 1):
            return WALL
        if on_line(0.0, None, 1):
            return REFLECTIVE
        return INTERIOR

    def edge_midpoint(self, p0, p1, tag: int) -> tuple[float, float]:
        if tag == CYLINDER:
            t0 = math.atan2(p0[1], p0[0])
            t1 = math.atan2(p1[1], p1[0])
            tm = t0 + 0.5 * _wrap_angle(t1 - t0)
            return (self.radius * math.cos(tm), self.radius * math.sin(tm))
        return (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]))


@dataclass(frozen=True)
class RectGeometry:
    """Axis-aligned rectangle; used by fixtures and manufactured runs."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise ValueError("degenerate rectangle")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def classify_edge(self, p0, p1) -> int:
        if abs(p0[0] - self.x0) < _TOL and abs(p1[0] - self.x0) < _TOL:
            return INFLOW
        if abs(p0[0] - self.x1) < _TOL and abs(p1[0] - self.x1) < _TOL:
            return OUTFLOW
        if abs(p0[1] - self.y1) < _TOL and abs(p1[1] - self.y1) < _TOL:
            return WALL
        if abs(p0[1] - self.y0) < _TOL and abs(p1[1] - self.y0) < _TOL:
            return REFLECTIVE
        return INTERIOR

    def edge_midpoint(self, p0, p1, tag: int) -> tuple[float, float]:
        return (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]))


def _wrap_angle(d: float) -> float:
    while d > math.pi:
        d -= 2 * math.pi
    while d < -math.pi:
        d += 2 * math.pi
    return d


class Mesh:
    """Active-element quad mesh with hanging-edge bookkeeping."""

    def __init__(self, domain, vertices, elems, levels=None, midpoints=None,
                 prev_elem=None, prev_quad=None):
        self.domain = domain
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.elems = np.asarray(elems, dtype=np.int64).reshape(-1, 4)
        ne = len(self.elems)
        self.levels = (np.zeros(ne, dtype=np.int64) if levels is None
                       else np.asarray(levels, dtype=np.int64))
        # persistent registry: (lo, hi) vertex pair -> midpoint vertex id
        self.midpoints = dict(midpoints) if midpoints else {}
        # provenance relative to the mesh this one was refined from
        self.prev_elem = (None if prev_elem is None else np.asarray(prev_elem, dtype=np.int64))
        self.prev_quad = (None if prev_quad is None else np.asarray(prev_quad, dtype=np.int64))
        self._build_topology()

    # -- topology -----------------------------------------------------

    def _build_topology(self):
        V, E = self.vertices, self.elems
        edge_index: dict[tuple[int, int], int] = {}
        edge_verts: list[tuple[int, int]] = []
        edge_elems: list[list[tuple[int, int]]] = []
        ne = len(E)
        self.elem_edges = np.empty((ne, 4), dtype=np.int64)
        self.elem_sign = np.empty((ne, 4), dtype=np.int64)
        for k in range(ne):
            for s in range(4):
                a = int(E[k, s])
                b = int(E[k, (s + 1) % 4])
                lo, hi = (a, b) if a < b else (b, a)
                eid = edge_index.get((lo, hi))
                if eid is None:
                    eid = len(edge_verts)
                    edge_index[(lo, hi)] = eid
                    edge_verts.append((lo, hi))
                    edge_elems.append([])
                edge_elems[eid].append((k, s))
                self.elem_edges[k, s] = eid
                self.elem_sign[k, s] = 1 if a == lo else -1
        self.edge_verts = np.asarray(edge_verts, dtype=np.int64)
        self.edge_elems = edge_elems
        self._edge_index = edge_index

        # hanging-edge constraints: a stored edge whose registered halves
        # are themselves stored edges is a constrained parent
        self.constraints: dict[int, tuple[int, int]] = {}
        for (lo, hi), eid in edge_index.items():
            mid = self.midpoints.get((lo, hi))
            if mid is None:
                continue
            for half, pair in enumerate(((lo, mid), (mid, hi))):
                key = (min(pair), max(pair))
                cid = edge_index.get(key)
                if cid is not None:
                    self.constraints[cid] = (eid, half)

        nEdge = len(self.edge_verts)
        self.edge_tag = np.empty(nEdge, dtype=np.int64)
        for eid, (lo, hi) in enumerate(self.edge_verts):
            self.edge_tag[eid] = self.domain.classify_edge(V[lo], V[hi])
        # interior edges shared by exactly one element and not part of a
        # hanging pair would be a topology bug; audit_mesh checks this.

        # curved sides: element sides whose edge is a cylinder arc
        self.curved_side = np.full(ne, -1, dtype=np.int64)
        self.arc_theta = np.zeros((ne, 2))
        for k in range(ne):
            for s in range(4):
                if self.edge_tag[self.elem_edges[k, s]] == CYLINDER:
                    if self.curved_side[k] >= 0:
                        raise ValueError(f"element {k} has two cylinder sides")
                    self.curved_side[k] = s
                    a = V[E[k, s]]
                    b = V[E[k, (s + 1) % 4]]
                    t0 = math.atan2(a[1], a[0])
                    self.arc_theta[k] = (t0, t0 + _wrap_angle(math.atan2(b[1], b[0]) - t0))

    @property
    def num_elements(self) -> int:
        return len(self.elems)

    @property
    def num_edges(self) -> int:
        return len(self.edge_verts)

    def edge_length(self, eid: int) -> float:
        lo, hi = self.edge_verts[eid]
        if self.edge_tag[eid] == CYLINDER:
            r = self.domain.radius
            a, b = self.vertices[lo], self.vertices[hi]
            d = _wrap_angle(math.atan2(b[1], b[0]) - math.atan2(a[1], a[0]))
            return r * abs(d)
        return float(np.linalg.norm(self.vertices[hi] - self.vertices[lo]))

    def unconstrained_edges(self) -> np.ndarray:
        """Edges that carry interface DoFs (not children of a parent edge)."""
        mask = np.ones(self.num_edges, dtype=bool)
        for cid in self.constraints:
            mask[cid] = False
        return np.nonzero(mask)[0]

    # -- reference maps ----------------------------------------------

    def ref_map(self, k: int, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map reference points (n, 2) of element k to physical space.

        Returns (x, J) with x (n, 2) and J (n, 2, 2), J[i] = dx/dxi.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi, eta = pts[:, 0], pts[:, 1]
        corners = self.vertices[self.elems[k]]
        n0 = 0.25 * (1 - xi) * (1 - eta)
        n1 = 0.25 * (1 + xi) * (1 - eta)
        n2 = 0.25 * (1 + xi) * (1 + eta)
        n3 = 0.25 * (1 - xi) * (1 + eta)
        x = np.outer(n0, corners[0]) + np.outer(n1, corners[1]) \
            + np.outer(n2, corners[2]) + np.outer(n3, corners[3])
        dxi = 0.25 * (-(1 - eta)[:, None] * corners[0] + (1 - eta)[:, None] * corners[1]
                      + (1 + eta)[:, None] * corners[2] - (1 + eta)[:, None] * corners[3])
        deta = 0.25 * (-(1 - xi)[:, None] * corners[0] - (1 + xi)[:, None] * corners[1]
                       + (1 + xi)[:, None] * corners[2] + (1 - xi)[:, None] * corners[3])

        s = int(self.curved_side[k])
        if s >= 0:
            r = self.domain.radius
            t0, t1 = self.arc_theta[k]
            ca = corners[s]
            cb = corners[(s + 1) % 4]
            if s == 0:
                t, dt = xi, (1.0, 0.0)
                blend, db = 0.5 * (1 - eta), (0.0, -0.5)
            elif s == 1:
                t, dt = eta, (0.0, 1.0)
                blend, db = 0.5 * (1 + xi), (0.5, 0.0)
            elif s == 2:
                t, dt = -xi, (-1.0, 0.0)
                blend, db = 0.5 * (1 + eta), (0.0, 0.5)
            else:
                t, dt = -eta, (0.0, -1.0)
                blend, db = 0.5 * (1 - xi), (-0.5, 0.0)
            th = t0 + 0.5 * (t + 1) * (t1 - t0)
            dth_dt = 0.5 * (t1 - t0)
            arc = r * np.column_stack([np.cos(th), np.sin(th)])
            darc = r * dth_dt * np.column_stack([-np.sin(th), np.cos(th)])
            chord = 0.5 * np.outer(1 - t, ca) + 0.5 * np.outer(1 + t, cb)
            dchord = 0.5 * (cb - ca)[None, :] * np.ones_like(t)[:, None]
            bump = arc - chord
            dbump = darc - dchord
            x = x + blend[:, None] * bump
            dxi = dxi + blend[:, None] * dbump * dt[0] + db[0] * bump
            deta = deta + blend[:, None] * dbump * dt[1] + db[1] * bump
        J = np.stack([dxi, deta], axis=-1)  # J[:, i, j] = dx_i / dxi_j
        return x, J

    def edge_geometry(self, eid: int, t: np.ndarray):
        """Physical data of edge eid at global params t (lo -> hi).

        Returns (x, ds_dt, normal) where normal is the global edge
        normal (tangent rotated clockwise), each evaluated at t.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.edge_verts[eid]
        a, b = self.vertices[lo], self.vertices[hi]
        if self.edge_tag[eid] == CYLINDER:
            r = self.domain.radius
            t0 = math.atan2(a[1], a[0])
            d = _wrap_angle(math.atan2(b[1], b[0]) - t0)
            th = t0 + 0.5 * (t + 1) * d
            x = r * np.column_stack([np.cos(th), np.sin(th)])
            tang = np.sign(d) * np.column_stack([-np.sin(th), np.cos(th)])
            ds = np.full_like(t, r * abs(d) / 2)
        else:
            x = 0.5 * np.outer(1 - t, a) + 0.5 * np.outer(1 + t, b)
            v = b - a
            L = np.linalg.norm(v)
            tang = np.tile(v / L, (t.size, 1))
            ds = np.full_like(t, L / 2)
        normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        return x, ds, normal


def _vertex_pool():
    pool: dict[tuple[int, int], int] = {}
    coords: list[tuple[float, float]] = []

    def add(x, y):
        key = (round(x * 1e10), round(y * 1e10))
        idx = pool.get(key)
        if idx is None:
            idx = len(coords)
            pool[key] = idx
            coords.append((x, y))
        return idx

    return add, coords


def build_rect_mesh(nx: int, ny: int, geom: RectGeometry | None = None) -> Mesh:
    """Structured nx x ny mesh of the rectangle."""
    geom = geom or RectGeometry()
    xs = np.linspace(geom.x0, geom.x1, nx + 1)
    ys = np.linspace(geom.y0, geom.y1, ny + 1)
    add, coords = _vertex_pool()
    elems = []
    for j in range(ny):
        for i in range(nx):
            elems.append([add(xs[i], ys[j]), add(xs[i + 1], ys[j]),
                          add(xs[i + 1], ys[j + 1]), add(xs[i], ys[j + 1])])
    return Mesh(geom, coords, elems)


def _graded_points(x0: float, x1: float, n: int, ratio: float) -> np.ndarray:
    """n cells from x0 to x1 with successive widths scaled by ratio."""
    w = ratio ** np.arange(n)
    w *= (x1 - x0) / w.sum()
    return np.concatenate([[x0], x0 + np.cumsum(w)])


def build_initial_mesh(geom: BenchGeometry | None = None) -> Mesh:
    """36-element starting mesh: a 6-element ring around the half
    cylinder inside the core block [-2r, 2r] x [0, 2r], a 7x2 upstream
    block and an 8x2 downstream block, both graded toward the core.
    """
    geom = geom or BenchGeometry()
    r = geom.radius
    H = geom.half_height
    core = 2 * r
    if abs(H - core) > 1e-12:
        # ring outer box reaches the channel wall; the layout assumes the
        # canonical 1:2 radius : half-height proportions
        raise ValueError("initial mesh layout requires half_height == 2 * radius")
    add, coords = _vertex_pool()
    elems = []

    # ring: inner nodes every 30 degrees from 180 to 0, outer nodes on
    # the core box boundary (left wall, top, right wall)
    inner = [add(r * math.cos(th), r * math.sin(th))
             for th in (math.pi * (6 - k) / 6 for k in range(7))]
    outer_pts = [(-core, 0.0), (-core, r), (-core, H), (0.0, H),
                 (core, H), (core, r), (core, 0.0)]
    outer = [add(x, y) for x, y in outer_pts]
    for k in range(6):
        elems.append([inner[k], inner[k + 1], outer[k + 1], outer[k]])

    # upstream block: 7 graded columns, 2 rows
    xs_up = _graded_points(-geom.upstream, -core, 7, 0.78)
    ys = [0.0, r, H]
    for j in range(2):
        for i in range(7):
            elems.append([add(xs_up[i], ys[j]), add(xs_up[i + 1], ys[j]),
                          add(xs_up[i + 1], ys[j + 1]), add(xs_up[i], ys[j + 1])])

    # downstream block: 8 columns growing away from the core, 2 rows
    xs_dn = _graded_points(core, geom.downstream, 8, 1.0 / 0.78)
    for j in range(2):
        for i in range(8):
            elems.append([add(xs_dn[i], ys[j]), add(xs_dn[i + 1], ys[j]),
                          add(xs_dn[i + 1], ys[j + 1]), add(xs_dn[i], ys[j + 1])])

    return Mesh(geom, coords, elems)


def refine(mesh: Mesh, marked) -> Mesh:
    """Isotropic 4-way refinement of the marked elements plus the
    closure needed to keep the mesh 1-irregular.

    Returns a new mesh; provenance (prev_elem, prev_quad) maps each new
    element to its source in `mesh` (quadrant -1 for carried elements).
    """
    marked = set(int(m) for m in marked)
    for m in marked:
        if not (0 <= m < mesh.num_elements):
            raise ValueError(f"marked element {m} out of range")

    # closure: tentative levels must not differ by more than one across
    # any adjacency (shared edge, or hanging parent/child pair)
    levels = mesh.levels.copy()
    adj: set[tuple[int, int]] = set()
    for eid in range(mesh.num_edges):
        inc = mesh.edge_elems[eid]
        if len(inc) == 2:
            adj.add((inc[0][0], inc[1][0]))
    for cid, (pid, _) in mesh.constraints.items():
        for ck, _ in mesh.edge_elems[cid]:
            for pk, _ in mesh.edge_elems[pid]:
                adj.add((ck, pk))
    while True:
        grew = False
        for a, b in adj:
            la = levels[a] + (1 if a in marked else 0)
            lb = levels[b] + (1 if b in marked else 0)
            if la - lb > 1 and b not in marked:
                marked.add(b)
                grew = True
            elif lb - la > 1 and a not in marked:
                marked.add(a)
                grew = True
        if not grew:
            break

    verts = [tuple(v) for v in mesh.vertices]
    midpoints = dict(mesh.midpoints)

    def midpoint_of(a: int, b: int) -> int:
        lo, hi = (a, b) if a < b else (b, a)
        mid = midpoints.get((lo, hi))
        if mid is None:
            p0, p1 = verts[lo], verts[hi]
            tag = mesh.domain.classify_edge(p0, p1)
            x, y = mesh.domain.edge_midpoint(p0, p1, tag)
            mid = len(verts)
            verts.append((x, y))
            midpoints[(lo, hi)] = mid
        return mid

    new_elems, new_levels, prev_elem, prev_quad = [], [], [], []
    for k in range(mesh.num_elements):
        corners = [int(c) for c in mesh.elems[k]]
        if k not in marked:
            new_elems.append(corners)
            new_levels.append(mesh.levels[k])
            prev_elem.append(k)
            prev_quad.append(-1)
            continue
        v0, v1, v2, v3 = corners
        m01 = midpoint_of(v0, v1)
        m12 = midpoint_of(v1, v2)
        m23 = midpoint_of(v2, v3)
        m30 = midpoint_of(v3, v0)
        cx = np.mean([verts[m01], verts[m12], verts[m23], verts[m30]], axis=0)
        ctr = len(verts)
        verts.append((float(cx[0]), float(cx[1])))
        # children aligned with the parent's axes: child c covers the
        # parent's reference quadrant c
        children = [[v0, m01, ctr, m30], [m01, v1, m12, ctr],
                    [m30, ctr, m23, v3], [ctr, m12, v2, m23]]
        quads = [0, 1, 2, 3]
        for child, q in zip(children, quads):
            new_elems.append(child)
            new_levels.append(mesh.levels[k] + 1)
            prev_elem.append(k)
            prev_quad.append(q)

    return Mesh(mesh.domain, verts, new_elems, new_levels, midpoints,
                prev_elem, prev_quad)


# reference-square offsets of the four child quadrants (child ref coords
# map into the parent as parent = offset + 0.5 * child)
CHILD_OFFSETS = ((-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5))


def mesh_area(mesh: Mesh, order: int = 12) -> float:
    pts, wts = quad_grid(order)
    total = 0.0
    for k in range(mesh.num_elements):
        _, J = mesh.ref_map(k, pts)
        total += wts @ np.linalg.det(J)
    return total


def audit_mesh(mesh: Mesh, quad_order: int = 6) -> list[str]:
    """Structural checks; returns a list of violation strings (empty = ok)."""
    issues = []
    pts, _ = quad_grid(quad_order)
    for k in range(mesh.num_elements):
        _, J = mesh.ref_map(k, pts)
        d = np.linalg.det(J)
        if d.min() <= 0:
            issues.append(f"element {k}: nonpositive jacobian (min {d.min():.3e})")
    for eid in range(mesh.num_edges):
        inc = mesh.edge_elems[eid]
        constrained = eid in mesh.constraints
        is_parent = any(pid == eid for (pid, _) in mesh.constraints.values())
        if constrained and is_parent:
            issues.append(f"edge {eid}: constraint chain deeper than one level")
        if constrained and len(inc) != 1:
            issues.append(f"edge {eid}: hanging child with {len(inc)} incident elements")
        if is_parent and len(inc) != 1:
            issues.append(f"edge {eid}: hanging parent with {len(inc)} incident elements")
        if not constrained and not is_parent:
            if len(inc) == 1 and mesh.edge_tag[eid] == INTERIOR:
                issues.append(f"edge {eid}: interior edge with a single element")
            if len(inc) > 2:
                issues.append(f"edge {eid}: more than two incident elements")
    for cid, (pid, half) in mesh.constraints.items():
        if eid_level_gap := abs(
                mesh.levels[mesh.edge_elems[cid][0][0]] - mesh.levels[mesh.edge_elems[pid][0][0]]):
            if eid_level_gap > 1:
                issues.append(f"constraint {cid}->{pid}: level gap {eid_level_gap}")
    if hasattr(mesh.domain, "area"):
        area = mesh_area(mesh)
        if abs(area - mesh.domain.area) > 1e-9 * max(1.0, mesh.domain.area):
            issues.append(f"area mismatch: {area!r} vs {mesh.domain.area!r}")
    return issues


# -- constraint parameter maps ---------------------------------------

def constraint_param_map(mesh: Mesh, cid: int) -> tuple[float, float]:
    """Affine map (a, b) sending the child's edge parameter into the
    parent's: t_parent = a * t_child + b."""
    pid, half = mesh.constraints[cid]
    plo, phi = mesh.edge_verts[pid]
    mid = mesh.midpoints[(int(plo), int(phi))]
    # parent params of the child's endpoints
    param = {int(plo): -1.0, int(phi): 1.0, int(mid): 0.0}
    clo, chi = mesh.edge_verts[cid]
    t_lo, t_hi = param[int(clo)], param[int(chi)]
    return (0.5 * (t_hi - t_lo), 0.5 * (t_hi + t_lo))


# -- persistence ------------------------------------------------------

def dump_mesh(mesh: Mesh, path: str) -> None:
    with open(path, "w") as f:
        f.write("dpgflow-mesh 1\n")
        d = mesh.domain
        if isinstance(d, BenchGeometry):
            f.write(f"domain bench {d.radius!r} {d.half_height!r} {d.upstream!r} {d.downstream!r}\n")
        elif isinstance(d, RectGeometry):
            f.write(f"domain rect {d.x0!r} {d.x1!r} {d.y0!r} {d.y1!r}\n")
        else:
            raise TypeError(f"cannot serialize domain {type(d).__name__}")
        f.write(f"vertices {len(mesh.vertices)}\n")
        for x, y in mesh.vertices:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"elements {mesh.num_elements}\n")
        for corners, lvl in zip(mesh.elems, mesh.levels):
            f.write(" ".join(str(c) for c in corners) + f" {lvl}\n")
        f.write(f"midpoints {len(mesh.midpoints)}\n")
        for (lo, hi), mid in sorted(mesh.midpoints.items()):
            f.write(f"{lo} {hi} {mid}\n")


def load_mesh(path: str) -> Mesh:
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or not lines[0].startswith("dpgflow-mesh"):
        raise ValueError(f"{path}: not a mesh file")
    i = 1
    kind, *params = lines[i].split()[1:]
    params = [float(p) for p in params]
    if kind == "bench":
        domain = BenchGeometry(*params)
    elif kind == "rect":
        domain = RectGeometry(*params)
    else:
        raise ValueError(f"unknown domain kind {kind!r}")
    i += 1
    nv = int(lines[i].split()[1]); i += 1
    verts = []
    for _ in range(nv):
        x, y = lines[i].split(); verts.append((float(x), float(y))); i += 1
    ne = int(lines[i].split()[1]); i += 1
    elems, levels = [], []
    for _ in range(ne):
        parts = lines[i].split()
        elems.append([int(c) for c in parts[:4]])
        levels.append(int(parts[4]))
        i += 1
    nm = int(lines[i].split()[1]); i += 1
    midpoints = {}
    for _ in range(nm):
        lo, hi, mid = (int(v) for v in lines[i].split())
        midpoints[(lo, hi)] = mid
        i += 1
    return Mesh(domain, verts, elems, levels, midpoints)


def export_vtk(mesh: Mesh, path: str, cell_data: dict[str, np.ndarray] | None = None) -> None:
    """Legacy-ASCII unstructured-grid export (corners only; curved edges
    are drawn as chords)."""
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write("dpgflow mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(mesh.vertices)} double\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.16g} {y:.16g} 0\n")
        ne = mesh.num_elements
        f.write(f"CELLS {ne} {5 * ne}\n")
        for corners in mesh.elems:
            f.write("4 " + " ".join(str(c) for c in corners) + "\n")
        f.write(f"CELL_TYPES {ne}\n")
        f.write("".join("9\n" for _ in range(ne)))
        if cell_data:
            f.write(f"CELL_DATA {ne}\n")
            for name, arr in cell_data.items():
                arr = np.asarray(arr, dtype=float)
                if arr.shape != (ne,):
                    raise ValueError(f"cell data {name!r} has shape {arr.shape}")
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in arr:
                    f.write(f"{v:.16g}\n")
