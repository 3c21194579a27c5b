"""Pure-numpy element kernels: fallback when the compiled core is absent.

Same contract as the compiled module `_kernels_c`: given element corner
coordinates and tabulated shape data, return the stacked local matrices

    Mloc (nt, 6, 6)   P2 scalar mass
    Kloc (nt, 6, 6)   P2 scalar grad-grad stiffness
    Bloc (nt, 3, 12)  P1 x (vector P2 divergence), velocity dofs interleaved
"""

import numpy as np


def tri_local_matrices(coords, phi, dphi, psi, weights):
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    nt = coords.shape[0]

    j11 = coords[:, 1, 0] - coords[:, 0, 0]
    j21 = coords[:, 1, 1] - coords[:, 0, 1]
    j12 = coords[:, 2, 0] - coords[:, 0, 0]
    j22 = coords[:, 2, 1] - coords[:, 0, 1]
    det = j11 * j22 - j12 * j21

    # inv(J)^T rows, scaled later by 1/det
    invjt = np.empty((nt, 2, 2))
    invjt[:, 0, 0] = j22
    invjt[:, 0, 1] = -j21
    invjt[:, 1, 0] = -j12
    invjt[:, 1, 1] = j11
    invjt /= det[:, None, None]

    # physical gradients: (nt, nq, 6, 2)
    grads = np.einsum("tab,qib->tqia", invjt, dphi)

    mref = np.einsum("q,qi,qj->ij", weights, phi, phi)
    mloc = det[:, None, None] * mref

    kloc = np.einsum("q,tqia,tqja,t->tij", weights, grads, grads, det)

    # Bloc[t, p, 2 i + c] = det * sum_q w psi_p dphi_i/dx_c
    btmp = np.einsum("q,qp,tqic,t->tpic", weights, psi, grads, det)
    bloc = btmp.reshape(nt, 3, 12)
    return mloc, kloc, bloc
