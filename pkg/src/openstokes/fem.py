"""Taylor-Hood (P2 velocity / P1 pressure) discretization.

Velocity dofs live at vertices and edge midpoints, two interleaved
components per node (dof = 2*node + component); pressure dofs at
vertices.  Assembly produces the operators of the time-dependent weak
problem: mass M, stiffness K, pressure-divergence coupling B, per-outlet
normal-trace mass G_k and flux functional b_k, plus boundary loads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import kernels, reference
from .mesh import WALL


class TaylorHoodSpace:
    """Dof maps and cached element data for one mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        nv = mesh.num_vertices

        edge_index = {}
        for a, b, c in mesh.triangles.tolist():
            for i, j in ((b, c), (c, a), (a, b)):
                key = (min(i, j), max(i, j))
                if key not in edge_index:
                    edge_index[key] = len(edge_index)
        self.edge_index = edge_index
        self.num_edges = len(edge_index)
        self.num_vnodes = nv + self.num_edges
        self.num_vdofs = 2 * self.num_vnodes
        self.num_pdofs = nv

        # element connectivity in local P2 order: vertices, then midpoints
        # of edges (1,2), (2,0), (0,1)
        conn = np.empty((mesh.num_triangles, 6), dtype=np.int64)
        for t, (a, b, c) in enumerate(mesh.triangles.tolist()):
            conn[t, 0:3] = (a, b, c)
            conn[t, 3] = nv + edge_index[(min(b, c), max(b, c))]
            conn[t, 4] = nv + edge_index[(min(c, a), max(c, a))]
            conn[t, 5] = nv + edge_index[(min(a, b), max(a, b))]
        self.conn = conn

        coords = np.empty((self.num_vnodes, 2))
        coords[:nv] = mesh.vertices
        for (i, j), e in edge_index.items():
            coords[nv + e] = 0.5 * (mesh.vertices[i] + mesh.vertices[j])
        self.node_coords = coords

        # boundary edge records: (n0, n1, mid, tag, length, normal, tri)
        pair_to_tri = {}
        for t, (a, b, c) in enumerate(mesh.triangles.tolist()):
            for i, j in ((a, b), (b, c), (c, a)):
                pair_to_tri[(min(i, j), max(i, j))] = t
        records = []
        for (i, j), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist()):
            key = (min(i, j), max(i, j))
            mid = nv + edge_index[key]
            d = mesh.vertices[j] - mesh.vertices[i]
            length = float(np.hypot(d[0], d[1]))
            normal = np.array([d[1], -d[0]]) / length
            records.append((i, j, mid, int(tag), length, normal, pair_to_tri[key]))
        self.boundary = records

        wall_nodes = sorted(
            {n for (i, j, m, tag, *_ ) in records if tag == WALL for n in (i, j, m)}
        )
        self.wall_nodes = np.array(wall_nodes, dtype=np.int64)
        self.constrained_dofs = np.sort(
            np.concatenate([2 * self.wall_nodes, 2 * self.wall_nodes + 1])
        ) if len(wall_nodes) else np.empty(0, dtype=np.int64)
        mask = np.ones(self.num_vdofs, dtype=bool)
        mask[self.constrained_dofs] = False
        self.free_dofs = np.nonzero(mask)[0]

    # interleaved velocity dofs per element, matching the kernel layout
    @property
    def element_vdofs(self):
        vd = 2 * self.conn[:, :, None] + np.array([0, 1])
        return vd.reshape(-1, 12)

    def interpolate(self, fn, t=0.0):
        """Nodal interpolant of a vector field fn(xy, t) -> (n, 2)."""
        vals = np.asarray(fn(self.node_coords, t), dtype=np.float64)
        return vals.reshape(self.num_vdofs)

    def scatter(self, vfree):
        """Embed a free-dof vector into the full dof vector (walls zero)."""
        full = np.zeros(self.num_vdofs)
        full[self.free_dofs] = vfree
        return full

    def element_geometry(self, points):
        """Mapped quadrature data for a reference rule.

        Returns (xq, detj, grads): physical points (nt, nq, 2), |det J|
        (nt,), and physical P2 gradients (nt, nq, 6, 2).
        """
        tri = self.mesh.triangles
        corner = self.mesh.vertices[tri]
        j = np.stack(
            [corner[:, 1] - corner[:, 0], corner[:, 2] - corner[:, 0]], axis=2
        )
        detj = j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]
        invjt = np.empty_like(j)
        invjt[:, 0, 0] = j[:, 1, 1]
        invjt[:, 0, 1] = -j[:, 1, 0]
        invjt[:, 1, 0] = -j[:, 0, 1]
        invjt[:, 1, 1] = j[:, 0, 0]
        invjt /= detj[:, None, None]
        xq = corner[:, None, 0, :] + np.einsum("qr,trs->tqs", points, j.transpose(0, 2, 1))
        grads = np.einsum("tab,qib->tqia", invjt, reference.p2_grad(points))
        return xq, detj, grads


@dataclass
class Operators:
    """Assembled matrices/vectors; `free` is None before constraint."""

    space: TaylorHoodSpace
    M: sp.csr_matrix
    K: sp.csr_matrix
    B: sp.csr_matrix
    G: dict
    b: dict
    c: dict
    free: np.ndarray | None = None

    @property
    def outlet_ids(self):
        return sorted(self.G)


def _local_matrices(space):
    corner = space.mesh.vertices[space.mesh.triangles]
    return kernels.tri_local_matrices(
        corner,
        reference.p2_shape(reference.TRI_POINTS_4),
        reference.p2_grad(reference.TRI_POINTS_4),
        reference.p1_shape(reference.TRI_POINTS_4),
        reference.TRI_WEIGHTS_4,
    )


def _vector_expand(loc):
    """Scalar local (nt,6,6) -> block per component (nt,12,12)."""
    nt = loc.shape[0]
    out = np.zeros((nt, 12, 12))
    out[:, 0::2, 0::2] = loc
    out[:, 1::2, 1::2] = loc
    return out


def _coo(rows, cols, vals, shape):
    return sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape
    ).tocsr()


def _assemble_vector_op(space, loc):
    vd = space.element_vdofs
    big = _vector_expand(loc)
    rows = np.repeat(vd, 12, axis=1)
    cols = np.tile(vd, (1, 12))
    return _coo(rows, cols, big, (space.num_vdofs, space.num_vdofs))


def assemble_mass(space):
    mloc, _, _ = _local_matrices(space)
    return _assemble_vector_op(space, mloc)


def assemble_stiffness(space):
    _, kloc, _ = _local_matrices(space)
    return _assemble_vector_op(space, kloc)


def assemble_divergence(space):
    """B with B[q, vdof] = integral of q * div(v)."""
    _, _, bloc = _local_matrices(space)
    vd = space.element_vdofs
    pd = space.conn[:, :3]
    rows = np.repeat(pd, 12, axis=1)
    cols = np.tile(vd, (1, 3))
    return _coo(rows, cols, bloc, (space.num_pdofs, space.num_vdofs))


def _edge_quadrature():
    s = reference.EDGE_POINTS_3
    return s, reference.EDGE_WEIGHTS_3, reference.p2_edge_shape(s)


def _outlet_edges(space, k):
    edges = [rec for rec in space.boundary if rec[3] == k]
    if not edges:
        raise KeyError(f"no boundary edges tagged outlet {k}")
    return edges


def assemble_outlet_normal_mass(space, k):
    """G_k with v^T G_k w = integral over Gamma_k of (v.n)(w.n)."""
    s, w, shape = _edge_quadrature()
    emass = np.einsum("q,qa,qb->ab", w, shape, shape)
    rows, cols, vals = [], [], []
    for i, j, m, _tag, length, n, _tri in _outlet_edges(space, k):
        nodes = np.array([i, j, m])
        loc = length * emass
        for a in range(3):
            for b in range(3):
                for ca in range(2):
                    for cb in range(2):
                        rows.append(2 * nodes[a] + ca)
                        cols.append(2 * nodes[b] + cb)
                        vals.append(n[ca] * n[cb] * loc[a, b])
    return sp.coo_matrix(
        (vals, (rows, cols)), shape=(space.num_vdofs, space.num_vdofs)
    ).tocsr()


def assemble_outlet_source(space, k):
    """b_k with b_k . v = integral over Gamma_k of v.n (the flux)."""
    s, w, shape = _edge_quadrature()
    wi = w @ shape  # exact: (1/6, 1/6, 2/3)
    vec = np.zeros(space.num_vdofs)
    for i, j, m, _tag, length, n, _tri in _outlet_edges(space, k):
        for a, node in enumerate((i, j, m)):
            vec[2 * node] += n[0] * length * wi[a]
            vec[2 * node + 1] += n[1] * length * wi[a]
    return vec


def assemble_outlet_scalar_load(space, k, fn, t=0.0):
    """Load vector for a pointwise boundary datum: integral of s(x,t) (w.n)."""
    s, w, shape = _edge_quadrature()
    vec = np.zeros(space.num_vdofs)
    verts = space.mesh.vertices
    for i, j, m, _tag, length, n, _tri in _outlet_edges(space, k):
        xq = np.outer(1 - s, verts[i]) + np.outer(s, verts[j])
        sval = np.asarray(fn(xq, t), dtype=np.float64)
        wi = (w * sval) @ shape
        for a, node in enumerate((i, j, m)):
            vec[2 * node] += n[0] * length * wi[a]
            vec[2 * node + 1] += n[1] * length * wi[a]
    return vec


def assemble_pressure_boundary(space, k):
    """c_k with c_k . p = integral over Gamma_k of p (P1 trace, exact)."""
    vec = np.zeros(space.num_pdofs)
    for i, j, _m, _tag, length, _n, _tri in _outlet_edges(space, k):
        vec[i] += 0.5 * length
        vec[j] += 0.5 * length
    return vec


def assemble_load(space, f, t=0.0):
    """F with F . w = integral of f(x,t) . w, degree-6 quadrature."""
    pts, wts = reference.TRI_POINTS_6, reference.TRI_WEIGHTS_6
    xq, detj, _ = space.element_geometry(pts)
    phi = reference.p2_shape(pts)
    fv = np.asarray(f(xq.reshape(-1, 2), t), dtype=np.float64).reshape(
        xq.shape[0], xq.shape[1], 2
    )
    floc = np.einsum("q,qi,tqc,t->tic", wts, phi, fv, detj)
    vec = np.zeros(space.num_vdofs)
    np.add.at(vec, (2 * space.conn[:, :, None] + np.array([0, 1])).ravel(), floc.ravel())
    return vec


def assemble_operators(space, outlet_ids=None):
    """One-shot assembly of every constant operator of the weak problem."""
    if outlet_ids is None:
        outlet_ids = space.mesh.outlet_ids
    mloc, kloc, bloc = _local_matrices(space)
    M = _assemble_vector_op(space, mloc)
    K = _assemble_vector_op(space, kloc)
    vd = space.element_vdofs
    pd = space.conn[:, :3]
    B = _coo(
        np.repeat(pd, 12, axis=1),
        np.tile(vd, (1, 3)),
        bloc,
        (space.num_pdofs, space.num_vdofs),
    )
    G = {k: assemble_outlet_normal_mass(space, k) for k in outlet_ids}
    b = {k: assemble_outlet_source(space, k) for k in outlet_ids}
    c = {k: assemble_pressure_boundary(space, k) for k in outlet_ids}
    return Operators(space, M, K, B, G, b, c)


def apply_noslip(ops):
    """Symmetric elimination of the wall velocity dofs."""
    if ops.free is not None:
        return ops
    free = ops.space.free_dofs
    return replace(
        ops,
        M=ops.M[free][:, free],
        K=ops.K[free][:, free],
        B=ops.B[:, free],
        G={k: g[free][:, free] for k, g in ops.G.items()},
        b={k: v[free] for k, v in ops.b.items()},
        free=free,
    )


def export_matrix_market(matrix, path):
    """Write a sparse matrix in Matrix Market coordinate text format."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(matrix))
