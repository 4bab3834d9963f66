"""Geometry: annulus records, polar grids, triangulation, mesh files."""

import numpy as np
import pytest

from annulus_rd.geometry import (
    DESK_SCALE_H,
    GeometryError,
    build_polar_grid,
    export_mesh,
    make_annulus,
    mesh_edges,
    read_mesh,
    triangle_areas,
    triangle_quality,
    triangulate_annulus,
)


def test_annulus_validation():
    with pytest.raises(GeometryError):
        make_annulus(0.0, 1.0)
    with pytest.raises(GeometryError):
        make_annulus(-0.5, 1.0)
    with pytest.raises(GeometryError):
        make_annulus(1.0, 1.0)
    with pytest.raises(GeometryError):
        make_annulus(1.0, 0.5)
    geom = make_annulus(0.5, 1.0)
    assert geom.rho == 0.5
    assert geom.area == pytest.approx(np.pi * 0.75, rel=1e-15)


def test_polar_grid_nodes():
    geom = make_annulus(0.5, 1.0)
    grid = build_polar_grid(geom, N=17, M=20)
    r = grid.radial_nodes
    assert r[0] == 0.5 and r[-1] == 1.0
    assert np.all(np.diff(r) > 0)
    # Chebyshev-Gauss-Lobatto spacing clusters at both ends
    assert np.diff(r)[0] < np.diff(r)[len(r) // 2]
    theta = grid.angular_nodes
    assert theta[0] == 0.0
    assert len(theta) == 20


def test_angular_grid_periodicity():
    # theta_{j+M} = theta_j mod 2 pi, exactly as floats
    geom = make_annulus(0.5, 1.0)
    grid = build_polar_grid(geom, N=8, M=12)
    wrapped = np.mod(grid.angular_nodes + 2.0 * np.pi, 2.0 * np.pi)
    assert np.allclose(wrapped, grid.angular_nodes, rtol=0, atol=1e-15)


def test_polar_grid_reproducible():
    geom = make_annulus(0.7, 2.1)
    g1 = build_polar_grid(geom, N=33, M=16)
    g2 = build_polar_grid(geom, N=33, M=16)
    assert np.array_equal(g1.radial_nodes, g2.radial_nodes)
    assert np.array_equal(g1.angular_nodes, g2.angular_nodes)


def test_polar_grid_validation():
    geom = make_annulus(0.5, 1.0)
    with pytest.raises(GeometryError):
        build_polar_grid(geom, N=3, M=10)
    with pytest.raises(GeometryError):
        build_polar_grid(geom, N=10, M=7)  # odd angular count


def test_triangulation_deterministic():
    geom = make_annulus(0.5, 1.0)
    m1 = triangulate_annulus(geom, 0.15)
    m2 = triangulate_annulus(geom, 0.15)
    assert np.array_equal(m1.vertices, m2.vertices)
    assert np.array_equal(m1.triangles, m2.triangles)
    assert np.array_equal(m1.boundary_flags, m2.boundary_flags)


def test_triangulation_quality_and_area():
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, 0.15)
    q = triangle_quality(mesh.vertices, mesh.triangles)
    assert q.min() >= 0.3
    area = triangle_areas(mesh.vertices, mesh.triangles).sum()
    assert abs(area - geom.area) / geom.area < 0.01


def test_triangulation_euler_relation():
    # V - E + T = 0 on an annulus; with every boundary edge on one triangle
    # this pins T = 2V - B where B counts boundary vertices
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, DESK_SCALE_H)
    edges = mesh_edges(mesh.triangles)
    n_v = len(mesh.vertices)
    n_e = len(edges)
    n_t = len(mesh.triangles)
    assert n_v - n_e + n_t == 0
    n_b = int(np.sum(mesh.boundary_flags > 0))
    assert n_t == 2 * n_v - n_b


def test_boundary_flags_sit_on_circles():
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, 0.15)
    r = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
    inner = mesh.boundary_flags == 1
    outer = mesh.boundary_flags == 2
    assert inner.any() and outer.any()
    assert np.abs(r[inner] - geom.a).max() < 1e-9
    assert np.abs(r[outer] - geom.b).max() < 1e-9
    interior = mesh.boundary_flags == 0
    assert r[interior].min() > geom.a and r[interior].max() < geom.b


def test_triangulation_h_validation():
    geom = make_annulus(0.5, 1.0)
    with pytest.raises(GeometryError):
        triangulate_annulus(geom, 0.0)
    with pytest.raises(GeometryError):
        triangulate_annulus(geom, 0.5)  # h must be below the thickness


def test_mesh_roundtrip(tmp_path):
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, 0.18)
    node, ele = tmp_path / "m.node", tmp_path / "m.ele"
    export_mesh(mesh, node, ele)
    back = read_mesh(node, ele)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_flags, mesh.boundary_flags)
    assert back.a == mesh.a and back.b == mesh.b and back.h == mesh.h


def test_mesh_export_stable_bytes(tmp_path):
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, 0.2)
    export_mesh(mesh, tmp_path / "a.node", tmp_path / "a.ele")
    export_mesh(mesh, tmp_path / "b.node", tmp_path / "b.ele")
    assert (tmp_path / "a.node").read_bytes() == (tmp_path / "b.node").read_bytes()
    assert (tmp_path / "a.ele").read_bytes() == (tmp_path / "b.ele").read_bytes()


def test_triangles_positively_oriented():
    geom = make_annulus(0.5, 1.0)
    mesh = triangulate_annulus(geom, 0.15)
    p = mesh.vertices[mesh.triangles]
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    assert np.all(cross > 0)
