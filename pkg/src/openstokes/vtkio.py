"""Legacy-VTK ASCII writer for field snapshots.

Unstructured grid of triangles with point data at the mesh vertices:
vector field `velocity` and scalar field `pressure`.
"""

from __future__ import annotations


def write_vtk_snapshot(space, v_full, p, stream, title="snapshot"):
    mesh = space.mesh
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    stream.write("# vtk DataFile Version 3.0\n")
    stream.write(f"{title}\n")
    stream.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
    stream.write(f"POINTS {nv} double\n")
    for x, y in mesh.vertices.tolist():
        stream.write(f"{x!r} {y!r} 0.0\n")
    stream.write(f"CELLS {nt} {4 * nt}\n")
    for a, b, c in mesh.triangles.tolist():
        stream.write(f"3 {a} {b} {c}\n")
    stream.write(f"CELL_TYPES {nt}\n")
    stream.write("5\n" * nt)
    stream.write(f"POINT_DATA {nv}\n")
    stream.write("VECTORS velocity double\n")
    for i in range(nv):
        stream.write(f"{v_full[2 * i]!r} {v_full[2 * i + 1]!r} 0.0\n")
    stream.write("SCALARS pressure double\nLOOKUP_TABLE default\n")
    for i in range(nv):
        stream.write(f"{p[i]!r}\n")
