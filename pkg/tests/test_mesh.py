import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openstokes import mesh
from openstokes.errors import GeometryError, InvalidParameterError, MeshFormatError


def test_channel_counts_and_area():
    m = mesh.build_channel(2.0, 1.0, 8, 4)
    assert m.num_vertices == 9 * 5
    assert m.num_triangles == 2 * 8 * 4
    assert np.all(m.signed_areas() > 0)
    assert math.isclose(m.signed_areas().sum(), 2.0, rel_tol=1e-14)
    m.validate()


def test_channel_outlets():
    m = mesh.build_channel(3.0, 1.5, 6, 3)
    assert m.outlet_ids == [1, 2]
    assert math.isclose(m.outlet_length(1), 1.5, rel_tol=1e-14)
    assert math.isclose(m.outlet_length(2), 1.5, rel_tol=1e-14)
    # outward normals: outlet 1 at x=0 faces -x, outlet 2 at x=L faces +x
    assert np.allclose(m.outlet_normals[1], (-1.0, 0.0))
    assert np.allclose(m.outlet_normals[2], (1.0, 0.0))


def test_boundary_edges_interior_on_left():
    m = mesh.build_channel(1.0, 1.0, 2, 2)
    normals = mesh._edge_normals(m.vertices, m.boundary_edges)
    mids = 0.5 * (m.vertices[m.boundary_edges[:, 0]] + m.vertices[m.boundary_edges[:, 1]])
    centroid = m.vertices.mean(axis=0)
    # outward normal points away from the domain centroid on a convex mesh
    assert np.all(np.einsum("ij,ij->i", normals, mids - centroid) > 0)


@given(
    nx=st.integers(min_value=1, max_value=6),
    ny=st.integers(min_value=1, max_value=6),
    length=st.floats(min_value=0.1, max_value=10.0),
    height=st.floats(min_value=0.1, max_value=5.0),
)
@settings(max_examples=25, deadline=None)
def test_channel_validates_for_any_size(nx, ny, length, height):
    m = mesh.build_channel(length, height, nx, ny)
    m.validate()
    assert math.isclose(m.signed_areas().sum(), length * height, rel_tol=1e-12)
    assert math.isclose(m.outlet_length(1), height, rel_tol=1e-12)


def test_channel_rejects_bad_arguments():
    with pytest.raises(InvalidParameterError):
        mesh.build_channel(-1.0, 1.0, 4, 4)
    with pytest.raises(InvalidParameterError):
        mesh.build_channel(1.0, 1.0, 0, 4)


def test_refine_quadruples_and_preserves_boundary():
    m = mesh.build_channel(2.0, 1.0, 4, 2)
    r = mesh.refine_uniform(m)
    r.validate()
    assert r.num_triangles == 4 * m.num_triangles
    assert math.isclose(r.signed_areas().sum(), 2.0, rel_tol=1e-14)
    for k in (1, 2):
        assert math.isclose(r.outlet_length(k), m.outlet_length(k), rel_tol=1e-14)
    # refinement doubles the boundary edge count
    assert len(r.boundary_edges) == 2 * len(m.boundary_edges)


def test_roundtrip_is_bit_exact():
    m = mesh.build_bifurcation(2.0, 1.0, 1.5, 0.6, 30.0, resolution=2)
    buf = io.StringIO()
    mesh.write_mesh(m, buf)
    buf.seek(0)
    m2 = mesh.read_mesh(buf)
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)
    assert np.array_equal(m.boundary_edges, m2.boundary_edges)
    assert np.array_equal(m.boundary_tags, m2.boundary_tags)
    buf2 = io.StringIO()
    mesh.write_mesh(m2, buf2)
    assert buf.getvalue() == buf2.getvalue()


def test_read_mesh_rejects_malformed():
    with pytest.raises(MeshFormatError):
        mesh.read_mesh(io.StringIO("not-a-mesh 1 2 3\n"))
    with pytest.raises(MeshFormatError):
        mesh.read_mesh(io.StringIO("mesh2d 1 0 0\n0.0\n"))
    bad_tag = "mesh2d 3 1 3\n0.0 0.0\n1.0 0.0\n0.0 1.0\n0 1 2\n0 1 wall\n1 2 wall\n2 0 river\n"
    with pytest.raises(MeshFormatError):
        mesh.read_mesh(io.StringIO(bad_tag))


def test_bifurcation_geometry():
    m = mesh.build_bifurcation(2.0, 1.0, 1.5, 0.6, 30.0, resolution=3)
    m.validate()
    assert m.outlet_ids == [1, 2, 3]
    for k in (2, 3):
        assert math.isclose(m.outlet_length(k), 0.6, rel_tol=1e-12)
    assert math.isclose(m.outlet_length(1), 1.0, rel_tol=1e-12)
    # mirror symmetry about the trunk axis y = 0
    original = {(round(x, 12), round(y, 12)) for x, y in m.vertices.tolist()}
    assert all((round(x, 12), round(-y, 12)) in original for x, y in m.vertices.tolist())


def test_bifurcation_rejects_overlap():
    # a narrow angle with a wide branch pushes the lower branch corner
    # across the symmetry axis
    with pytest.raises(GeometryError):
        mesh.build_bifurcation(2.0, 1.0, 1.5, 1.4, 5.0, resolution=2)


def test_bifurcation_rejects_bad_angle():
    with pytest.raises(InvalidParameterError):
        mesh.build_bifurcation(2.0, 1.0, 1.5, 0.6, 0.0)
    with pytest.raises(InvalidParameterError):
        mesh.build_bifurcation(2.0, 1.0, 1.5, 0.6, 95.0)


def test_all_wall_variant():
    m = mesh.build_channel(1.0, 1.0, 2, 2).all_wall()
    m.validate()
    assert m.outlet_ids == []
    assert np.all(m.boundary_tags == mesh.WALL)
