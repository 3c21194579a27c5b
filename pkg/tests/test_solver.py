import math

import numpy as np
import pytest
import scipy.sparse as sp

from openstokes import fem, galerkin, mesh, monitors, outlets, solver
from openstokes.errors import InvalidParameterError, SingularSystemError

from conftest import make_specs


def test_steady_pressure_drop_drives_flux(ops_2x1):
    specs = make_specs(levels=(1.0, 0.0))
    stk = solver.StokesSolver(ops_2x1, 0.5, specs)
    v, p = stk.solve_steady()
    assert np.max(np.abs(ops_2x1.B @ v)) < 1e-12
    # flow enters at the high-pressure face (1) and leaves at the low one (2)
    q1 = float(ops_2x1.b[1] @ v)
    q2 = float(ops_2x1.b[2] @ v)
    assert q1 < 0 < q2
    assert q1 + q2 == pytest.approx(0.0, abs=1e-12)
    # the computed pressure sits between the two far-field levels
    assert 0.0 < float(np.mean(p)) < 1.0


def test_steady_superposition(ops_2x1):
    stk1 = solver.StokesSolver(ops_2x1, 0.5, make_specs(levels=(1.0, 0.0)))
    stk2 = solver.StokesSolver(ops_2x1, 0.5, make_specs(levels=(2.0, 0.0)))
    v1, p1 = stk1.solve_steady()
    v2, p2 = stk2.solve_steady()
    assert np.max(np.abs(v2 - 2.0 * v1)) < 1e-10 * max(1.0, np.max(np.abs(v2)))
    assert np.max(np.abs(p2 - 2.0 * p1)) < 1e-10 * max(1.0, np.max(np.abs(p2)))


def test_run_is_deterministic(ops_2x1):
    specs = make_specs(levels=(1.0, 0.0))
    stk = solver.StokesSolver(ops_2x1, 0.5, specs)
    v0 = np.zeros(ops_2x1.space.num_vdofs)
    t1 = stk.run(v0, 0.1, 0.5)
    t2 = stk.run(v0, 0.1, 0.5)
    assert np.array_equal(t1.V, t2.V)
    assert np.array_equal(t1.P, t2.P)


def test_projection_is_divergence_free_and_idempotent(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 1.0, make_specs())
    rng = np.random.default_rng(11)
    raw = np.zeros(ops_2x1.space.num_vdofs)
    raw[ops_2x1.free] = rng.standard_normal(len(ops_2x1.free))
    v = stk.project_divfree(raw)
    assert np.max(np.abs(ops_2x1.B @ v)) < 1e-10
    again = stk.project_divfree(ops_2x1.space.scatter(v))
    assert np.max(np.abs(again - v)) < 1e-9 * max(1.0, np.max(np.abs(v)))


def test_trajectory_shapes_and_final_time(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 1.0, make_specs())
    traj = stk.run(np.zeros(ops_2x1.space.num_vdofs), 0.25, 1.0)
    assert traj.times.shape == (5,)
    assert traj.times[-1] == pytest.approx(1.0)
    assert traj.V.shape == (5, len(ops_2x1.free))
    assert traj.P.shape == (5, ops_2x1.space.num_pdofs)


def test_all_wall_cavity_needs_pressure_pinning():
    m = mesh.build_channel(1.0, 1.0, 3, 3).all_wall()
    space = fem.TaylorHoodSpace(m)
    ops = fem.apply_noslip(fem.assemble_operators(space))
    stk = solver.StokesSolver(ops, 1.0, [])
    f = fem.assemble_load(
        space, lambda xy, t: np.column_stack([np.sin(xy[:, 1]), np.cos(xy[:, 0])])
    )[ops.free]
    fact = stk._factorization("steady", stk.A_lambda)
    v, p = stk._saddle_solve(fact, f)
    assert np.all(np.isfinite(v)) and np.all(np.isfinite(p))
    # without pinning the constant pressure mode is in the null space
    system = sp.bmat([[stk.A_lambda, ops.B.T], [ops.B, None]], format="csr")
    null = np.concatenate([np.zeros(len(ops.free)), np.ones(ops.B.shape[0])])
    assert np.max(np.abs(system @ null)) < 1e-12


def test_saddle_factorization_rejects_singular():
    a = sp.csr_matrix(np.zeros((2, 2)))
    b = sp.csr_matrix(np.zeros((1, 2)))
    with pytest.raises(SingularSystemError):
        fact = solver.factorize_saddle(a, b)
        fact.solve(np.array([1.0, 0.0, 0.0]))


def test_invalid_stepping_arguments(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 1.0, make_specs())
    v0 = np.zeros(ops_2x1.space.num_vdofs)
    with pytest.raises(InvalidParameterError):
        stk.run(v0, -0.1, 1.0)
    with pytest.raises(InvalidParameterError):
        stk.run(v0, 0.1, 1.0, theta=0.25)
    with pytest.raises(InvalidParameterError):
        solver.StokesSolver(ops_2x1, 0.0, make_specs())


def test_spec_mismatch_rejected(ops_2x1):
    with pytest.raises(InvalidParameterError):
        solver.StokesSolver(
            ops_2x1, 1.0, [outlets.OutletSpec(1, 1.0, 0.1, outlets.Constant(0.0))]
        )


def test_backward_euler_first_order_on_dt_halving(ops_2x1):
    # against a fine-step reference the velocity error should roughly halve
    specs = [
        outlets.OutletSpec(1, 1.0, 0.1, outlets.Sinusoid(1.0, 3.0)),
        outlets.OutletSpec(2, 1.0, 0.1, outlets.Constant(0.0)),
    ]
    stk = solver.StokesSolver(ops_2x1, 0.5, specs)
    v0 = np.zeros(ops_2x1.space.num_vdofs)
    ref = stk.run(v0, 0.3 / 64, 0.3).V[-1]
    errs = []
    for dt in (0.1, 0.05, 0.025):
        e = stk.run(v0, dt, 0.3).V[-1] - ref
        errs.append(math.sqrt(float(e @ (ops_2x1.M @ e))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(0.8 < o < 1.3 for o in orders)
