"""Reduction to an ODE system on a discretely divergence-free basis.

The basis spans (a subspace of) ker B restricted to the unconstrained
velocity dofs, orthonormalized in the surrogate inner product
S = K + M + sum_k gamma_k G_k.  The reduced mass matrix combines the
volumetric mass with the gamma-weighted boundary trace masses and is
symmetric positive definite for admissible bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, NumericalBreakdownError

KERNEL_TOL = 1e-10
GRAM_TOL = 1e-10


def divfree_kernel(ops):
    """Orthonormal (Euclidean) basis of ker B on the free dofs.

    Dense QR with column pivoting on B^T; deterministic at desk scale.
    """
    bt = ops.B.toarray().T
    q, r, _ = sla.qr(bt, mode="full", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(bt.shape) * np.finfo(float).eps * (diag[0] if len(diag) else 1.0)
    rank = int(np.sum(diag > tol))
    return q[:, rank:]


def surrogate_metric(ops, gammas):
    """S = K + M + sum_k gamma_k G_k on the free dofs."""
    s = ops.K + ops.M
    for k, g in gammas.items():
        s = s + g * ops.G[k]
    return s


@dataclass
class ReducedBasis:
    """Columns of W are coefficient vectors, orthonormal in `metric`."""

    W: np.ndarray
    metric: object

    @property
    def m(self):
        return self.W.shape[1]


def _mgs(columns, metric):
    """Modified Gram-Schmidt in a given SPD metric, one re-orth pass."""
    w = np.array(columns, dtype=float, copy=True)
    for _pass in range(2):
        for i in range(w.shape[1]):
            for j in range(i):
                w[:, i] -= (w[:, j] @ (metric @ w[:, i])) * w[:, j]
            nrm = np.sqrt(w[:, i] @ (metric @ w[:, i]))
            if nrm <= 0 or not np.isfinite(nrm):
                raise NumericalBreakdownError("zero column during orthonormalization")
            w[:, i] /= nrm
    return w


def compute_divfree_basis(ops, m, gammas, rng=None):
    """m-column basis of ker B, orthonormal in the surrogate metric.

    With `rng` given, the kernel vectors are mixed by a random coefficient
    matrix first (used by the randomized SPD checks); otherwise the
    pivoted-QR kernel columns are taken in order.
    """
    kernel = divfree_kernel(ops)
    if m > kernel.shape[1]:
        raise DimensionError(
            f"requested m={m} exceeds kernel dimension {kernel.shape[1]}"
        )
    if rng is not None:
        cols = kernel @ rng.standard_normal((kernel.shape[1], m))
    else:
        cols = kernel[:, :m]
    metric = surrogate_metric(ops, gammas)
    w = _mgs(cols, metric)

    gram = w.T @ (metric @ w)
    gram_dev = np.max(np.abs(gram - np.eye(m)))
    if gram_dev > 1e-8:
        raise NumericalBreakdownError(f"orthogonality loss {gram_dev:.2e}")
    div = np.max(np.abs(ops.B @ w), initial=0.0)
    if div > KERNEL_TOL:
        raise NumericalBreakdownError(f"basis leaves ker B by {div:.2e}")
    return ReducedBasis(w, metric)


def assemble_Mm(basis, ops, gammas):
    """Reduced mass: W^T (M + sum_k gamma_k G_k) W, symmetrized."""
    mg = ops.M + sum(g * ops.G[k] for k, g in gammas.items())
    mm = basis.W.T @ (mg @ basis.W)
    return 0.5 * (mm + mm.T)


def assemble_Am(basis, ops, nu, lams):
    """Reduced stiffness + resistance: W^T (nu K + sum_k lambda_k G_k) W."""
    al = nu * ops.K + sum(l * ops.G[k] for k, l in lams.items())
    am = basis.W.T @ (al @ basis.W)
    return 0.5 * (am + am.T)


def project_initial_data(basis, v0_free):
    """Coefficients of v0 in the orthonormalization metric."""
    return basis.W.T @ (basis.metric @ np.asarray(v0_free))


@dataclass
class ReducedSystem:
    """M_m dg/dt + A_m g = r(t) with initial coefficients g0."""

    Mm: np.ndarray
    Am: np.ndarray
    load: object  # callable t -> (m,) vector
    g0: np.ndarray


def build_reduced_system(basis, ops, nu, specs, forcing=None, v0_free=None):
    """Assemble the reduced ODE system for a set of outlet specs."""
    from . import fem

    gammas = {s.k: s.gamma for s in specs}
    lams = {s.k: s.lam for s in specs}
    mm = assemble_Mm(basis, ops, gammas)
    am = assemble_Am(basis, ops, nu, lams)

    def load(t):
        if forcing is not None:
            vec = fem.assemble_load(ops.space, forcing, t)[ops.free]
        else:
            vec = np.zeros(basis.W.shape[0])
        for s in specs:
            vec = vec - s.signal.value(t) * ops.b[s.k]
        return basis.W.T @ vec

    g0 = (
        project_initial_data(basis, v0_free)
        if v0_free is not None
        else np.zeros(basis.m)
    )
    return ReducedSystem(mm, am, load, g0)


def integrate_reduced(system, dt, T, theta=1.0):
    """theta-scheme for the reduced ODE; returns (times, G) with G rows g^n."""
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    n = max(1, round(T / dt))
    try:
        lhs = sla.lu_factor(system.Mm / dt + theta * system.Am)
    except (ValueError, sla.LinAlgError) as exc:
        raise NumericalBreakdownError(f"reduced system factorization failed: {exc}") from exc
    times = dt * np.arange(n + 1)
    g = np.array(system.g0, dtype=float)
    out = np.empty((n + 1, len(g)))
    out[0] = g
    r_old = system.load(times[0])
    for i in range(n):
        r_new = system.load(times[i + 1])
        rhs = (
            system.Mm @ g / dt
            - (1.0 - theta) * (system.Am @ g)
            + theta * r_new
            + (1.0 - theta) * r_old
        )
        g = sla.lu_solve(lhs, rhs)
        out[i + 1] = g
        r_old = r_new
    return times, out
