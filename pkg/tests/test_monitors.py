import io
import math

import numpy as np
import pytest

from openstokes import fem, mesh, monitors, outlets, solver

from conftest import make_specs


def test_energy_of_shear_field(unit_ops):
    space = unit_ops.space
    v_full = space.interpolate(
        lambda xy, t: np.column_stack([xy[:, 1] * (1 - xy[:, 1]), 0 * xy[:, 0]])
    )
    v = v_full[unit_ops.free]
    # int of (y (1 - y))^2 over the unit square is 1/30
    e0 = monitors.energy(unit_ops, v, {1: 0.0, 2: 0.0})
    assert e0 == pytest.approx(0.5 / 30.0, rel=1e-12)
    # each outlet face adds gamma/2 * int (v . n)^2 = gamma / 60
    e1 = monitors.energy(unit_ops, v, {1: 0.6, 2: 0.6})
    assert e1 - e0 == pytest.approx(2 * 0.6 / 60.0, rel=1e-10)


def test_dissipation_matches_quadratic_forms(unit_ops):
    rng = np.random.default_rng(2)
    v = rng.standard_normal(len(unit_ops.free))
    nu, lams = 0.7, {1: 2.0, 2: 3.0}
    expect = nu * float(v @ (unit_ops.K @ v))
    expect += sum(l * float(v @ (unit_ops.G[k] @ v)) for k, l in lams.items())
    assert monitors.dissipation(unit_ops, v, nu, lams) == pytest.approx(expect, rel=1e-13)


def test_monitor_csv_layout(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 0.5, make_specs(levels=(1.0, 0.0)))
    traj = stk.run(np.zeros(ops_2x1.space.num_vdofs), 0.1, 0.5)
    records = monitors.trajectory_monitors(traj, stk)
    assert len(records) == len(traj.times)
    buf = io.StringIO()
    monitors.write_monitor_csv(records, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,E,D,power,Q_1,Q_2,pbar_1,pbar_2,r_1,r_2"
    assert len(lines) == 1 + len(records)
    # serialization round-trips through repr exactly
    first = lines[1].split(",")
    assert float(first[0]) == traj.times[0]


def test_mass_conservation_along_trajectory(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 0.5, make_specs(levels=(1.0, 0.0)))
    traj = stk.run(np.zeros(ops_2x1.space.num_vdofs), 0.05, 1.0)
    for rec in monitors.trajectory_monitors(traj, stk):
        assert abs(rec.Q[1] + rec.Q[2]) < 1e-12


def test_energy_balance_identity_for_backward_euler(ops_2x1):
    stk = solver.StokesSolver(ops_2x1, 0.5, make_specs(levels=(1.0, 0.0)))
    traj = stk.run(np.zeros(ops_2x1.space.num_vdofs), 0.1, 1.0)
    report = monitors.energy_balance_report(traj, stk)
    assert report.passed


def test_manufactured_fields_are_consistent():
    case = monitors.ManufacturedChannel(2.0, 1.0, 0.5, make_specs())
    rng = np.random.default_rng(5)
    xy = np.column_stack([rng.uniform(0.1, 1.9, 20), rng.uniform(0.1, 0.9, 20)])
    t = 0.37
    # divergence-free: trace of the velocity gradient vanishes
    g = case.velocity_grad(xy, t)
    assert np.max(np.abs(g[:, 0, 0] + g[:, 1, 1])) < 1e-13
    # gradient matches central differences of the velocity
    h = 1e-6
    for j in range(2):
        dxy = np.zeros_like(xy)
        dxy[:, j] = h
        fd = (case.velocity(xy + dxy, t) - case.velocity(xy - dxy, t)) / (2 * h)
        assert np.max(np.abs(fd - g[:, :, j])) < 1e-7
    # time derivative matches central differences, too
    fdt = (case.velocity(xy, t + h) - case.velocity(xy, t - h)) / (2 * h)
    assert np.max(np.abs(fdt - case.velocity_t(xy, t))) < 1e-7
    # no-slip holds on the walls
    wall = np.column_stack([np.linspace(0, 2, 11), np.zeros(11)])
    assert np.max(np.abs(case.velocity(wall, t))) < 1e-14


def test_manufactured_forcing_matches_momentum_residual():
    case = monitors.ManufacturedChannel(2.0, 1.0, 0.5, make_specs())
    xy = np.column_stack([np.linspace(0.2, 1.8, 9), np.linspace(0.1, 0.9, 9)])
    t = 0.8
    h = 1e-5
    lap = np.zeros((len(xy), 2))
    for j in range(2):
        dxy = np.zeros_like(xy)
        dxy[:, j] = h
        lap += (
            case.velocity(xy + dxy, t) - 2 * case.velocity(xy, t) + case.velocity(xy - dxy, t)
        ) / h**2
    dp = np.column_stack([
        (case.pressure(xy + np.array([h, 0.0]), t) - case.pressure(xy - np.array([h, 0.0]), t)) / (2 * h),
        (case.pressure(xy + np.array([0.0, h]), t) - case.pressure(xy - np.array([0.0, h]), t)) / (2 * h),
    ])
    residual = case.velocity_t(xy, t) - case.nu * lap + dp - case.forcing(xy, t)
    assert np.max(np.abs(residual)) < 1e-5


def test_error_norms_vanish_for_p2_exact_field():
    m = mesh.build_channel(2.0, 1.0, 4, 2)
    space = fem.TaylorHoodSpace(m)
    case = monitors.ManufacturedChannel(
        2.0, 1.0, 1.0, make_specs(),
        a=(lambda t: 1.0, lambda t: 0.0),
        b=(lambda t: 0.0, lambda t: 0.0),
    )
    v = space.interpolate(case.velocity, 0.0)
    l2, h1 = monitors.velocity_error_norms(space, v, case.velocity, case.velocity_grad)
    assert l2 < 1e-14
    assert h1 < 1e-13


def test_eoc_table_orders():
    table = monitors.EOCTable(labels=[0.2, 0.1, 0.05])
    table.errors["e"] = [8.0, 2.0, 0.5]
    assert table.orders("e") == [2.0, 2.0]
    buf = io.StringIO()
    table.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "level,label,e"
    assert lines[-1].startswith("orders_e,")


def test_spatial_study_reaches_expected_orders():
    table = monitors.spatial_convergence_study(levels=3, base=(4, 4))
    assert table.orders("velocity_l2")[-1] > 2.7
    assert table.orders("velocity_h1")[-1] > 1.8


def test_zero_data_uniqueness_small_case():
    m = mesh.build_channel(1.0, 1.0, 3, 3)
    dev = monitors.zero_data_uniqueness_test(m, 1.0, make_specs(), dt=0.1, T=0.5)
    assert dev < 1e-7
