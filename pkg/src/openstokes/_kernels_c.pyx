# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels; contract identical to `_kernels_py`."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def tri_local_matrices(coords, phi, dphi, psi, weights):
    cdef double[:, :, ::1] xy = np.ascontiguousarray(coords, dtype=np.float64)
    cdef double[:, ::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[:, :, ::1] dph = np.ascontiguousarray(dphi, dtype=np.float64)
    cdef double[:, ::1] ps = np.ascontiguousarray(psi, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)

    cdef Py_ssize_t nt = xy.shape[0]
    cdef Py_ssize_t nq = w.shape[0]

    mloc_np = np.zeros((nt, 6, 6))
    kloc_np = np.zeros((nt, 6, 6))
    bloc_np = np.zeros((nt, 3, 12))
    cdef double[:, :, ::1] mloc = mloc_np
    cdef double[:, :, ::1] kloc = kloc_np
    cdef double[:, :, ::1] bloc = bloc_np

    cdef double j11, j12, j21, j22, det, a11, a12, a21, a22
    cdef double gx[6]
    cdef double gy[6]
    cdef double wq, s
    cdef Py_ssize_t t, q, i, j, p

    for t in range(nt):
        j11 = xy[t, 1, 0] - xy[t, 0, 0]
        j21 = xy[t, 1, 1] - xy[t, 0, 1]
        j12 = xy[t, 2, 0] - xy[t, 0, 0]
        j22 = xy[t, 2, 1] - xy[t, 0, 1]
        det = j11 * j22 - j12 * j21
        # rows of inv(J)^T
        a11 = j22 / det
        a12 = -j21 / det
        a21 = -j12 / det
        a22 = j11 / det

        for q in range(nq):
            wq = w[q] * det
            for i in range(6):
                gx[i] = a11 * dph[q, i, 0] + a12 * dph[q, i, 1]
                gy[i] = a21 * dph[q, i, 0] + a22 * dph[q, i, 1]
            for i in range(6):
                for j in range(6):
                    mloc[t, i, j] += wq * ph[q, i] * ph[q, j]
                    kloc[t, i, j] += wq * (gx[i] * gx[j] + gy[i] * gy[j])
            for p in range(3):
                s = wq * ps[q, p]
                for i in range(6):
                    bloc[t, p, 2 * i] += s * gx[i]
                    bloc[t, p, 2 * i + 1] += s * gy[i]

    return mloc_np, kloc_np, bloc_np
