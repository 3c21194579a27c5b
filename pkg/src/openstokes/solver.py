"""Velocity-pressure time stepper for the open-dissipative Stokes problem.

The discrete momentum equation couples the gamma-augmented mass matrix
M_g = M + sum_k gamma_k G_k with the lambda-augmented stiffness
A_l = nu K + sum_k lambda_k G_k; each theta-scheme step solves the
saddle-point system

    [M_g/dt + theta A_l,  B^T] [v]   [rhs]
    [B,                    0 ] [q] = [ 0 ]

with a direct sparse factorization reused across steps.  The physical
pressure is -q (the divergence constraint enters the momentum equation
as -B^T p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .errors import InvalidParameterError, SingularSystemError

DIV_TOL = 1e-10


class SaddleFactorization:
    """Direct factorization of a saddle-point block system."""

    def __init__(self, matrix, residual_tol=1e-10):
        self.matrix = matrix.tocsc()
        self.residual_tol = residual_tol
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise SingularSystemError(f"saddle-point factorization failed: {exc}") from exc

    def solve(self, rhs):
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("factorization produced non-finite solution")
        nrm = np.linalg.norm(rhs)
        if nrm > 0:
            res = np.linalg.norm(self.matrix @ x - rhs) / nrm
            if res > self.residual_tol:
                raise SingularSystemError(f"solve residual {res:.2e} above tolerance")
        return x


def factorize_saddle(a_block, b_block, pin_pressure=False):
    """Factorize [[A, B^T], [B, 0]]; pin one pressure dof on request.

    Without outlets the pressure has a constant null mode; `pin_pressure`
    replaces the last pressure equation by p_0 = 0.
    """
    n_v = a_block.shape[0]
    n_p = b_block.shape[0]
    system = sp.bmat([[a_block, b_block.T], [b_block, None]], format="lil")
    if pin_pressure:
        system.rows[n_v] = [n_v]
        system.data[n_v] = [1.0]
    return SaddleFactorization(system.tocsc())


@dataclass
class Trajectory:
    """Recorded time series of one run: coefficients per accepted step."""

    times: np.ndarray
    V: np.ndarray  # (n+1, n_free) velocity coefficients
    P: np.ndarray  # (n+1, n_pressure)
    theta: float
    dt: float


class StokesSolver:
    """Owns the constrained operators and physics of one scenario.

    `forcing` is a callable f(xy, t) -> (n, 2) or None; `boundary_data`
    optionally maps outlet id to a pointwise boundary datum s(xy, t),
    overriding the outlet signals (used by manufactured-solution studies).
    """

    def __init__(self, ops, nu, specs, forcing=None, boundary_data=None):
        if ops.free is None:
            ops = fem.apply_noslip(ops)
        if not nu > 0:
            raise InvalidParameterError("viscosity positivity violated (nu must be > 0)")
        self.ops = ops
        self.space = ops.space
        self.nu = float(nu)
        self.specs = {s.k: s for s in specs}
        if sorted(self.specs) != ops.outlet_ids:
            raise InvalidParameterError("outlet specs do not match mesh outlets")
        self.forcing = forcing
        self.boundary_data = boundary_data

        self.M_gamma = ops.M + sum(s.gamma * ops.G[s.k] for s in specs)
        self.A_lambda = self.nu * ops.K + sum(s.lam * ops.G[s.k] for s in specs)
        self._fact_cache = {}

    # -- right-hand side ---------------------------------------------------

    def load(self, t):
        """F(t) - sum_k (S_k, w . n_k) restricted to free dofs."""
        if self.forcing is not None:
            vec = fem.assemble_load(self.space, self.forcing, t)[self.ops.free]
        else:
            vec = np.zeros(len(self.ops.free))
        for k, spec in self.specs.items():
            if self.boundary_data is not None and k in self.boundary_data:
                bd = fem.assemble_outlet_scalar_load(
                    self.space, k, self.boundary_data[k], t
                )
                vec -= bd[self.ops.free]
            else:
                vec -= spec.signal.value(t) * self.ops.b[k]
        return vec

    # -- linear algebra ----------------------------------------------------

    def _factorization(self, key, a_block):
        if key not in self._fact_cache:
            self._fact_cache[key] = factorize_saddle(
                a_block, self.ops.B, pin_pressure=not self.specs
            )
        return self._fact_cache[key]

    def _saddle_solve(self, fact, rhs_v):
        n_v = len(self.ops.free)
        sol = fact.solve(np.concatenate([rhs_v, np.zeros(self.ops.B.shape[0])]))
        v, q = sol[:n_v], sol[n_v:]
        div = self.ops.B @ v
        if np.max(np.abs(div), initial=0.0) > DIV_TOL * max(1.0, np.linalg.norm(v)):
            raise SingularSystemError("divergence constraint violated after solve")
        return v, -q

    # -- operations --------------------------------------------------------

    def project_divfree(self, v_full):
        """M-orthogonal projection of an initial field onto ker B."""
        v_free = np.asarray(v_full)[self.ops.free]
        fact = self._factorization("proj", self.ops.M)
        v, _ = self._saddle_solve(fact, self.ops.M @ v_free)
        return v

    def solve_steady(self, t=0.0):
        """Drop v_t and gamma terms: A_lambda v + B^T p = load, B v = 0."""
        fact = self._factorization("steady", self.A_lambda)
        return self._saddle_solve(fact, self.load(t))

    def step_theta(self, v, t, dt, theta):
        """One theta-scheme step from time t; returns (v_next, p_next)."""
        a_block = self.M_gamma / dt + theta * self.A_lambda
        fact = self._factorization(("step", dt, theta), a_block)
        rhs = (
            self.M_gamma @ v / dt
            - (1.0 - theta) * (self.A_lambda @ v)
            + theta * self.load(t + dt)
            + (1.0 - theta) * self.load(t)
        )
        return self._saddle_solve(fact, rhs)

    def run(self, v0_full, dt, T, theta=1.0):
        """Integrate from a (projected) initial field; record every step."""
        if dt <= 0 or T <= 0:
            raise InvalidParameterError("dt and T must be positive")
        if not 0.5 <= theta <= 1.0:
            raise InvalidParameterError("theta must lie in [1/2, 1]")
        n = max(1, round(T / dt))
        v = self.project_divfree(v0_full)
        V = np.empty((n + 1, len(v)))
        P = np.zeros((n + 1, self.ops.B.shape[0]))
        V[0] = v
        times = dt * np.arange(n + 1)
        for i in range(n):
            v, p = self.step_theta(v, times[i], dt, theta)
            V[i + 1] = v
            P[i + 1] = p
        # initial pressure is not defined by the scheme; reuse first step's
        P[0] = P[1]
        return Trajectory(times, V, P, theta, dt)
