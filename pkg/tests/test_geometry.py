import math

import numpy as np
import pytest

from dpgflow import geometry as geo
from dpgflow.spaces import quad_grid


def test_rect_mesh_counts_and_tags():
    m = geo.build_rect_mesh(3, 2)
    assert m.num_elements == 6
    assert m.num_edges == 3 * 3 + 2 * 4  # horizontal rows + vertical cols
    tags = m.edge_tag
    assert (tags == geo.INFLOW).sum() == 2
    assert (tags == geo.OUTFLOW).sum() == 2
    assert (tags == geo.WALL).sum() == 3
    assert (tags == geo.REFLECTIVE).sum() == 3
    assert not m.constraints
    assert geo.audit_mesh(m) == []


def test_rect_ref_map_affine():
    m = geo.build_rect_mesh(2, 2, geo.RectGeometry(0, 2, 0, 4))
    pts = np.array([[-1.0, -1.0], [1.0, 1.0], [0.0, 0.0], [0.3, -0.7]])
    x, J = m.ref_map(0, pts)
    assert np.allclose(x[0], [0.0, 0.0])
    assert np.allclose(x[1], [1.0, 2.0])
    assert np.allclose(x[2], [0.5, 1.0])
    # constant Jacobian [hx/2, 0; 0, hy/2]
    assert np.allclose(J, np.tile(np.diag([0.5, 1.0]), (4, 1, 1)))


def test_edge_orientation_signs():
    # element traverses each edge lo->hi exactly once on a shared edge
    m = geo.build_rect_mesh(2, 1)
    shared = [e for e in range(m.num_edges) if len(m.edge_elems[e]) == 2]
    assert len(shared) == 1
    (k0, s0), (k1, s1) = m.edge_elems[shared[0]]
    assert m.elem_sign[k0, s0] * m.elem_sign[k1, s1] == -1


def test_outward_normal_convention():
    m = geo.build_rect_mesh(1, 1)
    k = 0
    centers = {"bottom": (0.5, 0.0), "right": (1.0, 0.5), "top": (0.5, 1.0), "left": (0.0, 0.5)}
    expect = {"bottom": (0, -1), "right": (1, 0), "top": (0, 1), "left": (-1, 0)}
    for s in range(4):
        eid = m.elem_edges[k, s]
        x, _, n = m.edge_geometry(eid, np.array([0.0]))
        n_out = m.elem_sign[k, s] * n[0]
        name = next(nm for nm, c in centers.items() if np.allclose(x[0], c))
        assert np.allclose(n_out, expect[name]), (name, n_out)


def test_refine_two_elements_hanging_oracle():
    # 2x1 mesh, refine the left element: 5 active elements, the old
    # shared edge becomes a hanging parent with two constrained halves
    m0 = geo.build_rect_mesh(2, 1, geo.RectGeometry(0, 2, 0, 1))
    m1 = geo.refine(m0, [0])
    assert m1.num_elements == 5
    assert geo.audit_mesh(m1) == []
    assert len(m1.constraints) == 2
    (pids, halves) = zip(*m1.constraints.values())
    assert pids[0] == pids[1]
    assert sorted(halves) == [0, 1]
    pid = pids[0]
    # parent is the original shared vertical edge at x=1
    lo, hi = m1.edge_verts[pid]
    assert np.allclose(m1.vertices[[lo, hi], 0], 1.0)
    # children constrained on it are owned by fine elements, parent by the coarse one
    for cid in m1.constraints:
        (k, _), = m1.edge_elems[cid]
        assert m1.levels[k] == 1
    (kp, _), = m1.edge_elems[pid]
    assert m1.levels[kp] == 0
    # area preserved
    assert abs(geo.mesh_area(m1) - 2.0) < 1e-12


def test_constraint_param_maps_cover_halves():
    m0 = geo.build_rect_mesh(2, 1, geo.RectGeometry(0, 2, 0, 1))
    m1 = geo.refine(m0, [0])
    maps = sorted(geo.constraint_param_map(m1, cid) for cid in m1.constraints)
    # one child covers [-1,0], the other [0,1] of the parent parameter,
    # possibly direction-flipped
    images = sorted((min(-a + b, a + b), max(-a + b, a + b)) for a, b in maps)
    assert np.allclose(images[0], (-1.0, 0.0))
    assert np.allclose(images[1], (0.0, 1.0))


def test_refine_closure_keeps_one_irregular():
    m0 = geo.build_rect_mesh(2, 1, geo.RectGeometry(0, 2, 0, 1))
    m1 = geo.refine(m0, [0])
    # refine a fine child touching the hanging edge: closure must pull in
    # the coarse right element to avoid a 2-level gap
    child_on_edge = next(
        k for cid in m1.constraints for (k, _) in m1.edge_elems[cid])
    m2 = geo.refine(m1, [child_on_edge])
    assert geo.audit_mesh(m2) == []
    gaps = []
    for cid, (pid, _) in m2.constraints.items():
        (kc, _), = m2.edge_elems[cid]
        (kp, _), = m2.edge_elems[pid]
        gaps.append(abs(int(m2.levels[kc]) - int(m2.levels[kp])))
    assert all(g == 1 for g in gaps)


def test_refined_child_offsets_tile_parent():
    m0 = geo.build_rect_mesh(1, 1)
    m1 = geo.refine(m0, [0])
    assert m1.num_elements == 4
    pts = np.array([[0.0, 0.0]])
    for k in range(4):
        q = m1.prev_quad[k]
        ox, oy = geo.CHILD_OFFSETS[q]
        x_child, _ = m1.ref_map(k, pts)
        x_parent, _ = m0.ref_map(0, np.array([[ox, oy]]))
        assert np.allclose(x_child, x_parent)


def test_initial_mesh_structure():
    m = geo.build_initial_mesh()
    assert m.num_elements == 36
    assert (m.curved_side >= 0).sum() == 6
    assert (m.edge_tag == geo.CYLINDER).sum() == 6
    assert geo.audit_mesh(m) == []
    # exact area: channel minus half disk
    assert abs(geo.mesh_area(m) - (30.0 - math.pi / 2)) < 1e-10
    # tags present on all four boundaries
    for tag in (geo.INFLOW, geo.OUTFLOW, geo.WALL, geo.REFLECTIVE):
        assert (m.edge_tag == tag).sum() >= 2


def test_initial_mesh_arc_is_exact():
    m = geo.build_initial_mesh()
    for k in np.nonzero(m.curved_side >= 0)[0]:
        s = m.curved_side[k]
        # sample the curved side through the element map
        t = np.linspace(-1, 1, 9)
        ref = {0: np.column_stack([t, -np.ones_like(t)]),
               1: np.column_stack([np.ones_like(t), t]),
               2: np.column_stack([-t, np.ones_like(t)]),
               3: np.column_stack([-np.ones_like(t), -t])}[int(s)]
        x, _ = m.ref_map(int(k), ref)
        r = np.hypot(x[:, 0], x[:, 1])
        assert np.abs(r - 1.0).max() < 1e-12


def test_refining_curved_element_keeps_area_and_arc():
    m0 = geo.build_initial_mesh()
    curved = list(np.nonzero(m0.curved_side >= 0)[0][:2])
    m1 = geo.refine(m0, curved)
    assert geo.audit_mesh(m1) == []
    assert abs(geo.mesh_area(m1) - (30.0 - math.pi / 2)) < 1e-10
    # new arc midpoints sit on the circle
    assert (m1.curved_side >= 0).sum() == 6 + 2  # each split arc -> 2 curved children
    for k in np.nonzero(m1.curved_side >= 0)[0]:
        corners = m1.vertices[m1.elems[k]]
        s = int(m1.curved_side[k])
        for c in (corners[s], corners[(s + 1) % 4]):
            assert abs(np.hypot(*c) - 1.0) < 1e-12


def test_cylinder_edge_geometry_lengths():
    m = geo.build_initial_mesh()
    arc_edges = np.nonzero(m.edge_tag == geo.CYLINDER)[0]
    total = sum(m.edge_length(int(e)) for e in arc_edges)
    assert abs(total - math.pi) < 1e-12
    # ds factor integrates to the arc length
    from dpgflow.spaces import gauss_rule
    t, w = gauss_rule(4)
    e = int(arc_edges[0])
    _, ds, n = m.edge_geometry(e, t)
    assert abs(w @ ds - m.edge_length(e)) < 1e-12
    # normals are radial (pointing along +-x/r)
    x, _, n = m.edge_geometry(e, np.array([-0.3, 0.8]))
    rad = x / np.linalg.norm(x, axis=1, keepdims=True)
    cross = np.abs(n[:, 0] * rad[:, 1] - n[:, 1] * rad[:, 0])
    assert cross.max() < 1e-12


def test_dump_load_roundtrip(tmp_path):
    m0 = geo.build_initial_mesh()
    m1 = geo.refine(m0, [0, 3, 17])
    path = tmp_path / "mesh.txt"
    geo.dump_mesh(m1, str(path))
    m2 = geo.load_mesh(str(path))
    assert np.allclose(m1.vertices, m2.vertices)
    assert np.array_equal(m1.elems, m2.elems)
    assert np.array_equal(m1.levels, m2.levels)
    assert m1.constraints == m2.constraints
    assert np.array_equal(m1.edge_tag, m2.edge_tag)
    assert isinstance(m2.domain, geo.BenchGeometry)


def test_vtk_export(tmp_path):
    m = geo.build_rect_mesh(2, 2)
    path = tmp_path / "mesh.vtk"
    geo.export_vtk(m, str(path), cell_data={"eta": np.arange(4.0)})
    text = path.read_text()
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert "CELL_DATA 4" in text
    assert text.count("\n9\n") >= 1


def test_bench_geometry_validation():
    with pytest.raises(ValueError):
        geo.BenchGeometry(radius=0)
    with pytest.raises(ValueError):
        geo.BenchGeometry(radius=1, half_height=0.5)
    with pytest.raises(ValueError):
        geo.BenchGeometry(upstream=1.5)
    with pytest.raises(ValueError):
        geo.build_initial_mesh(geo.BenchGeometry(half_height=3.0))


def test_marked_out_of_range():
    m = geo.build_rect_mesh(1, 1)
    with pytest.raises(ValueError):
        geo.refine(m, [5])
