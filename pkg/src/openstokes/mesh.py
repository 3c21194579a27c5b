"""Tagged triangular meshes for channel and bifurcation geometries.

Vertices are 2D points, triangles are counter-clockwise vertex triples,
and every boundary edge carries a tag: 0 for the rigid wall, k >= 1 for
the k-th inlet/outlet.  Outlet edge sets are required to be flat (all
edges collinear, one shared outward normal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, InvalidParameterError, MeshFormatError

WALL = 0

# relative tolerance for geometric degeneracy checks
GEOM_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation with tagged boundary.

    vertices       : (nv, 2) float array
    triangles      : (nt, 3) int array, CCW
    boundary_edges : (nb, 2) int array, oriented with the interior on the left
    boundary_tags  : (nb,) int array, 0 = wall, k >= 1 = outlet k
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    outlet_normals: dict = field(default_factory=dict)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def outlet_ids(self):
        return sorted(int(k) for k in set(self.boundary_tags.tolist()) if k != WALL)

    def edges_of_outlet(self, k):
        return self.boundary_edges[self.boundary_tags == k]

    def outlet_length(self, k):
        e = self.edges_of_outlet(k)
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))

    def signed_areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def validate(self):
        """Check every structural invariant; raise GeometryError on failure."""
        areas = self.signed_areas()
        scale = math.sqrt(float(np.max(areas)) if len(areas) else 1.0)
        if np.any(areas <= 0.0):
            raise GeometryError("non-positive triangle area")
        counts = _directed_edge_counts(self.triangles)
        boundary = {(i, j) for (i, j), c in counts.items() if (j, i) not in counts}
        for (i, j), c in counts.items():
            if c != 1:
                raise GeometryError("duplicate directed edge (non-manifold mesh)")
        tagged = {tuple(e) for e in self.boundary_edges.tolist()}
        if tagged != boundary:
            raise GeometryError("boundary edge list does not match the topological boundary")
        for k in self.outlet_ids:
            self._check_flat_outlet(k, scale)
        return self

    def _check_flat_outlet(self, k, scale):
        edges = self.edges_of_outlet(k)
        if len(edges) == 0:
            raise GeometryError(f"outlet {k} has no edges")
        normals = _edge_normals(self.vertices, edges)
        n = normals[0]
        if np.max(np.abs(normals - n)) > GEOM_TOL * 10:
            raise GeometryError(f"outlet {k} edges do not share a normal")
        # collinearity: all nodes of the outlet lie on one line through the
        # first vertex with direction perpendicular to n
        pts = self.vertices[np.unique(edges)]
        dist = np.abs((pts - self.vertices[edges[0, 0]]) @ n)
        if np.max(dist) > GEOM_TOL * max(scale, self.outlet_length(k)):
            raise GeometryError(f"outlet {k} is not flat")

    def all_wall(self):
        """Copy of the mesh with every boundary edge retagged as wall."""
        return Mesh(
            self.vertices,
            self.triangles,
            self.boundary_edges,
            np.zeros_like(self.boundary_tags),
            {},
        )


def _directed_edge_counts(triangles):
    counts = {}
    for a, b, c in triangles.tolist():
        for i, j in ((a, b), (b, c), (c, a)):
            counts[(i, j)] = counts.get((i, j), 0) + 1
    return counts


def _edge_normals(vertices, edges):
    d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    # interior on the left => outward normal points right of the direction
    return np.column_stack((d[:, 1] / length, -d[:, 0] / length))


def _extract_boundary(triangles):
    """Directed edges appearing without their reverse, interior on the left."""
    counts = _directed_edge_counts(triangles)
    return np.array(
        sorted((i, j) for (i, j) in counts if (j, i) not in counts), dtype=np.int64
    )


def _finish(vertices, triangles, tag_fn):
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    boundary = _extract_boundary(triangles)
    mids = 0.5 * (vertices[boundary[:, 0]] + vertices[boundary[:, 1]])
    tags = np.array([tag_fn(m) for m in mids], dtype=np.int64)
    normals = _edge_normals(vertices, boundary)
    outlet_normals = {}
    for k in set(tags.tolist()):
        if k == WALL:
            continue
        nk = normals[tags == k]
        outlet_normals[int(k)] = tuple(np.mean(nk, axis=0))
    mesh = Mesh(vertices, triangles, boundary, tags, outlet_normals)
    return mesh.validate()


def build_channel(length, height, nx, ny):
    """Structured crossed-triangle grid on [0,L] x [0,H].

    Outlet 1 is the x=0 face (normal (-1,0)), outlet 2 the x=L face
    (normal (1,0)); the y=0 and y=H faces are walls.  Diagonals alternate
    per cell so the Taylor-Hood pair sees no degenerate patches.
    """
    if not (length > 0 and height > 0):
        raise InvalidParameterError("channel dimensions must be positive")
    if not (int(nx) == nx and int(ny) == ny and nx >= 1 and ny >= 1):
        raise InvalidParameterError("cell counts must be integers >= 1")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    xg, yg = np.meshgrid(xs, ys)
    vertices = np.column_stack((xg.ravel(), yg.ravel()))

    def vid(i, j):
        return j * (nx + 1) + i

    triangles = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                triangles += [(a, b, c), (a, c, d)]
            else:
                triangles += [(a, b, d), (b, c, d)]

    tol = GEOM_TOL * max(length, height)

    def tag(mid):
        if abs(mid[0]) < tol:
            return 1
        if abs(mid[0] - length) < tol:
            return 2
        return WALL

    return _finish(vertices, triangles, tag)


def build_bifurcation(
    trunk_length,
    trunk_width,
    branch_length,
    branch_width,
    half_angle_deg,
    resolution=2,
):
    """Symmetric Y geometry: one trunk, two branches at +-half_angle.

    Outlet 1 is the trunk inlet (x=0), outlets 2 and 3 the upper and lower
    branch ends.  The trunk is a structured grid; each branch is a
    transfinitely mapped strip attached to one half of the trunk's right
    edge, so the mesh is watertight and the branch ends are flat.
    """
    if min(trunk_length, trunk_width, branch_length, branch_width) <= 0:
        raise InvalidParameterError("bifurcation dimensions must be positive")
    if not (0.0 < half_angle_deg < 90.0):
        raise InvalidParameterError("half angle must lie in (0, 90) degrees")
    if not (int(resolution) == resolution and resolution >= 1):
        raise InvalidParameterError("resolution must be an integer >= 1")
    r = int(resolution)
    alpha = math.radians(half_angle_deg)
    d = np.array([math.cos(alpha), math.sin(alpha)])
    u = np.array([-math.sin(alpha), math.cos(alpha)])

    # branch quad corners (upper branch); A->B is the attached trunk half-edge
    A = np.array([trunk_length, 0.0])
    B = np.array([trunk_length, trunk_width / 2.0])
    C = 0.5 * (A + B) + branch_length * d
    A2 = C - 0.5 * branch_width * u
    B2 = C + 0.5 * branch_width * u
    if A2[1] < -GEOM_TOL * branch_width:
        raise GeometryError("branches overlap across the symmetry axis")

    ny = 2 * r
    h = trunk_width / ny
    nx = max(1, round(trunk_length / h))
    ns = max(1, round(branch_length / (branch_width / r)))

    vertices = []
    index = {}

    def node(key, xy):
        if key not in index:
            index[key] = len(vertices)
            vertices.append((float(xy[0]), float(xy[1])))
        return index[key]

    # trunk grid, symmetric about y = 0
    for j in range(ny + 1):
        for i in range(nx + 1):
            y = (j - r) * h
            node(("t", i, j), (i * trunk_length / nx, y))

    def branch_point(s, t, sign):
        p = (1 - s) * (A + t * (B - A)) + s * (A2 + t * (B2 - A2))
        return (p[0], sign * p[1])

    # branch grids; s=0 column reuses trunk right-edge nodes
    for sign, name in ((1.0, "u"), (-1.0, "l")):
        for si in range(ns + 1):
            for ti in range(r + 1):
                s, t = si / ns, ti / r
                if si == 0:
                    j = r + ti if sign > 0 else r - ti
                    key = ("t", nx, j)
                else:
                    key = (name, si, ti)
                node(key, branch_point(s, t, sign))

    triangles = []

    def quad(a, b, c, dd, parity):
        # corners in CCW order
        if parity % 2 == 0:
            triangles.extend([(a, b, c), (a, c, dd)])
        else:
            triangles.extend([(a, b, dd), (b, c, dd)])

    for j in range(ny):
        for i in range(nx):
            quad(
                index[("t", i, j)],
                index[("t", i + 1, j)],
                index[("t", i + 1, j + 1)],
                index[("t", i, j + 1)],
                i + j,
            )

    def bkey(name, si, ti, sign):
        if si == 0:
            j = r + ti if sign > 0 else r - ti
            return ("t", nx, j)
        return (name, si, ti)

    for sign, name in ((1.0, "u"), (-1.0, "l")):
        for si in range(ns):
            for ti in range(r):
                a = index[bkey(name, si, ti, sign)]
                b = index[bkey(name, si + 1, ti, sign)]
                c = index[bkey(name, si + 1, ti + 1, sign)]
                dd = index[bkey(name, si, ti + 1, sign)]
                if sign < 0:
                    a, b, c, dd = dd, c, b, a  # restore CCW after mirroring
                quad(a, b, c, dd, si + ti)

    scale = max(trunk_length, branch_length)
    tol = 100 * GEOM_TOL * scale
    out2_p, out2_n = A2.copy(), d.copy()
    out3_p = np.array([A2[0], -A2[1]])
    out3_n = np.array([d[0], -d[1]])

    def tag(mid):
        if abs(mid[0]) < tol:
            return 1
        if abs((mid - out2_p) @ out2_n) < tol and mid[1] > 0:
            return 2
        if abs((mid - out3_p) @ out3_n) < tol and mid[1] < 0:
            return 3
        return WALL

    return _finish(np.array(vertices), triangles, tag)


def refine_uniform(mesh):
    """Split every triangle into four via edge midpoints; tags inherited."""
    nv = mesh.num_vertices
    vertices = [tuple(p) for p in mesh.vertices.tolist()]
    midpoint = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        if key not in midpoint:
            midpoint[key] = len(vertices)
            p = 0.5 * (mesh.vertices[i] + mesh.vertices[j])
            vertices.append((float(p[0]), float(p[1])))
        return midpoint[key]

    triangles = []
    for a, b, c in mesh.triangles.tolist():
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        triangles.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])

    old_tag = {
        (min(i, j), max(i, j)): t
        for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())
    }

    parent_edge = {v: k for k, v in midpoint.items()}

    vertices = np.asarray(vertices)
    triangles = np.asarray(triangles, dtype=np.int64)
    boundary = _extract_boundary(triangles)
    tags = []
    for i, j in boundary.tolist():
        # exactly one endpoint of a refined boundary edge is an old midpoint
        m = i if i >= nv else j
        tags.append(old_tag[parent_edge[m]])
    tags = np.asarray(tags, dtype=np.int64)
    normals = _edge_normals(vertices, boundary)
    outlet_normals = {}
    for k in set(tags.tolist()):
        if k != WALL:
            outlet_normals[int(k)] = tuple(np.mean(normals[tags == k], axis=0))
    return Mesh(vertices, triangles, boundary, tags, outlet_normals).validate()


# ---------------------------------------------------------------------------
# plain-text mesh format:
#   mesh2d <nv> <nt> <nb>
#   nv lines "x y", nt lines "i j k" (0-based, CCW), nb lines "i j TAG"
# with TAG either "wall" or "outlet:<k>".  Floats are written with repr so
# read/write round-trips bit-exactly.
# ---------------------------------------------------------------------------


def write_mesh(mesh, stream):
    stream.write(
        f"mesh2d {mesh.num_vertices} {mesh.num_triangles} {len(mesh.boundary_edges)}\n"
    )
    for x, y in mesh.vertices.tolist():
        stream.write(f"{x!r} {y!r}\n")
    for a, b, c in mesh.triangles.tolist():
        stream.write(f"{a} {b} {c}\n")
    for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist()):
        tag = "wall" if t == WALL else f"outlet:{t}"
        stream.write(f"{i} {j} {tag}\n")


def read_mesh(stream):
    header = stream.readline().split()
    if len(header) != 4 or header[0] != "mesh2d":
        raise MeshFormatError("expected header 'mesh2d <nv> <nt> <nb>'")
    try:
        nv, nt, nb = (int(s) for s in header[1:])
    except ValueError as exc:
        raise MeshFormatError("non-integer counts in header") from exc
    try:
        vertices = np.array(
            [[float(s) for s in stream.readline().split()] for _ in range(nv)]
        )
        triangles = np.array(
            [[int(s) for s in stream.readline().split()] for _ in range(nt)],
            dtype=np.int64,
        )
        edges, tags = [], []
        for _ in range(nb):
            i, j, tag = stream.readline().split()
            edges.append((int(i), int(j)))
            if tag == "wall":
                tags.append(WALL)
            elif tag.startswith("outlet:"):
                tags.append(int(tag.split(":")[1]))
            else:
                raise MeshFormatError(f"unknown boundary tag {tag!r}")
    except (ValueError, IndexError) as exc:
        raise MeshFormatError("malformed mesh2d body") from exc
    if vertices.shape != (nv, 2) or triangles.shape != (nt, 3):
        raise MeshFormatError("malformed mesh2d body")
    edges = np.asarray(edges, dtype=np.int64).reshape(nb, 2)
    tags = np.asarray(tags, dtype=np.int64)
    normals = _edge_normals(vertices, edges) if nb else np.zeros((0, 2))
    outlet_normals = {
        int(k): tuple(np.mean(normals[tags == k], axis=0))
        for k in set(tags.tolist())
        if k != WALL
    }
    return Mesh(vertices, triangles, edges, tags, outlet_normals).validate()
