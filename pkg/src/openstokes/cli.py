"""Command-line entry point: scenario orchestration and file output.

Subcommands: run, steady, reduced, converge, lumped, compare.  Every
subcommand takes a scenario config file; artifacts land in --out.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fem, galerkin, kernels, lumped, monitors, solver
from .errors import ConfigError
from .vtkio import write_vtk_snapshot


def _load(path):
    cfg = cfgmod.load_config(path)
    text = cfgmod.serialize_config(cfg)
    digest = hashlib.sha256(text.encode()).hexdigest()
    return cfg, digest


def _setup(cfg):
    msh = cfg.build_mesh()
    space = fem.TaylorHoodSpace(msh)
    ops = fem.apply_noslip(fem.assemble_operators(space))
    stk = solver.StokesSolver(ops, cfg.nu, cfg.outlet_specs, forcing=cfg.forcing())
    return msh, space, ops, stk


def _mesh_stats(msh, space):
    return {
        "vertices": msh.num_vertices,
        "triangles": msh.num_triangles,
        "velocity_dofs": space.num_vdofs,
        "pressure_dofs": space.num_pdofs,
        "constrained_dofs": int(len(space.constrained_dofs)),
        "outlets": {str(k): msh.outlet_length(k) for k in msh.outlet_ids},
    }


def _write_manifest(outdir, payload):
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(cfg, digest, outdir, seed, quiet):
    msh, space, ops, stk = _setup(cfg)
    v0 = stk.project_divfree(cfg.initial_field(space))
    traj = stk.run(space.scatter(v0), cfg.dt, cfg.T, theta=cfg.theta)
    records = monitors.trajectory_monitors(traj, stk)
    with open(outdir / "monitors.csv", "w") as fh:
        monitors.write_monitor_csv(records, fh)

    if cfg.vtk_interval > 0:
        for i in range(0, len(traj.times), cfg.vtk_interval):
            with open(outdir / f"snapshot_{i:06d}.vtk", "w") as fh:
                write_vtk_snapshot(
                    space,
                    space.scatter(traj.V[i]),
                    traj.P[i],
                    fh,
                    title=f"t={traj.times[i]!r}",
                )

    report = monitors.energy_balance_report(traj, stk, records)
    mass = max(abs(sum(rec.Q.values())) for rec in records)
    vel_scale = max(float(np.linalg.norm(v)) for v in traj.V)
    div = max(float(np.max(np.abs(ops.B @ v), initial=0.0)) for v in traj.V)

    manifest = {
        "config_sha256": digest,
        "seed": seed,
        "kernel_backend": kernels.BACKEND,
        "mesh": _mesh_stats(msh, space),
        "verdicts": {
            "energy_monotone": report.energy_monotone,
            "energy_inequality": report.passed,
            "max_mass_residual": mass,
            "max_divergence": div,
            "velocity_scale": vel_scale,
        },
    }

    if cfg.solver_path in ("reduced", "both"):
        deviation = _run_reduced(cfg, space, ops, stk, outdir)
        manifest["reduced"] = deviation
    _write_manifest(outdir, manifest)
    if not quiet:
        print(f"run complete: {len(traj.times) - 1} steps, "
              f"energy_monotone={report.energy_monotone}, "
              f"energy_inequality={report.passed}")
    return 0


def _run_reduced(cfg, space, ops, stk, outdir):
    gammas = {s.k: s.gamma for s in cfg.outlet_specs}
    m = cfg.reduced_m or galerkin.divfree_kernel(ops).shape[1]
    basis = galerkin.compute_divfree_basis(ops, m, gammas)
    v0 = stk.project_divfree(cfg.initial_field(space))
    rsys = galerkin.build_reduced_system(
        basis, ops, cfg.nu, cfg.outlet_specs, forcing=cfg.forcing(), v0_free=v0
    )
    times, g = galerkin.integrate_reduced(rsys, cfg.dt, cfg.T, theta=cfg.theta)
    with open(outdir / "reduced_trajectory.csv", "w") as fh:
        fh.write("t," + ",".join(f"g_{i + 1}" for i in range(basis.m)) + "\n")
        for t, row in zip(times, g):
            fh.write(",".join(repr(x) for x in (t, *row)) + "\n")
    np.savetxt(outdir / "reduced_Mm.txt", rsys.Mm)
    np.savetxt(outdir / "reduced_Am.txt", rsys.Am)
    return {"m": basis.m}


def cmd_steady(cfg, digest, outdir, seed, quiet):
    msh, space, ops, stk = _setup(cfg)
    v, p = stk.solve_steady()
    with open(outdir / "steady.vtk", "w") as fh:
        write_vtk_snapshot(space, space.scatter(v), p, fh, title="steady")
    fluxes = {str(k): monitors.flux(ops, v, k) for k in ops.outlet_ids}
    pbar = {
        str(k): float(ops.c[k] @ p) / msh.outlet_length(k) for k in ops.outlet_ids
    }
    _write_manifest(
        outdir,
        {"config_sha256": digest, "mesh": _mesh_stats(msh, space),
         "fluxes": fluxes, "average_pressures": pbar},
    )
    if not quiet:
        print("steady fluxes: " + ", ".join(f"Q_{k}={q!r}" for k, q in fluxes.items()))
    return 0


def cmd_reduced(cfg, digest, outdir, seed, quiet):
    msh, space, ops, stk = _setup(cfg)
    info = _run_reduced(cfg, space, ops, stk, outdir)
    _write_manifest(
        outdir,
        {"config_sha256": digest, "mesh": _mesh_stats(msh, space), "reduced": info},
    )
    if not quiet:
        print(f"reduced run complete (m={info['m']})")
    return 0


def _expectations():
    with resources.files("openstokes.data").joinpath("eoc_expectations.json").open() as fh:
        return json.load(fh)


def cmd_converge(cfg, digest, outdir, seed, quiet):
    exp = _expectations()
    spec = cfg.converge_spec
    failures = []

    spatial = monitors.spatial_convergence_study(levels=spec["spatial_levels"])
    with open(outdir / "spatial_eoc.csv", "w") as fh:
        spatial.write_csv(fh)
    if spec["spatial_levels"] >= 2:
        for name, threshold in exp["spatial"].items():
            order = spatial.orders(name)[-1]
            if order < threshold:
                failures.append(
                    f"spatial {name}: order {order:.3f} < {threshold} at level "
                    f"{spec['spatial_levels'] - 1}"
                )

    theta = spec["temporal_theta"]
    temporal = monitors.temporal_convergence_study(
        dts=tuple(spec["temporal_dts"]), theta=theta
    )
    with open(outdir / "temporal_eoc.csv", "w") as fh:
        temporal.write_csv(fh)
    if len(spec["temporal_dts"]) >= 2:
        threshold = exp["temporal"][f"theta_{theta}"]
        order = temporal.orders("velocity_m_norm")[-1]
        if order < threshold:
            failures.append(
                f"temporal velocity_m_norm: order {order:.3f} < {threshold} at level "
                f"{len(spec['temporal_dts']) - 1}"
            )

    _write_manifest(
        outdir,
        {"config_sha256": digest, "expectations_version": exp["version"],
         "failures": failures},
    )
    for msg in failures:
        print(f"FAIL {msg}", file=sys.stderr)
    if not quiet and not failures:
        print("convergence orders within expectations")
    return 1 if failures else 0


def cmd_lumped(cfg, digest, outdir, seed, quiet):
    net = cfg.lumped_network()
    times, eq, tq = lumped.transient_fluxes(net, cfg.dt, cfg.T)
    with open(outdir / "lumped_fluxes.csv", "w") as fh:
        header = ["t"] + [f"edge_{i}" for i in range(eq.shape[1])] + [
            f"terminal_{t.k}" for t in net.terminals
        ]
        fh.write(",".join(header) + "\n")
        for i, t in enumerate(times):
            fh.write(",".join(repr(x) for x in (t, *eq[i], *tq[i])) + "\n")
    _write_manifest(outdir, {"config_sha256": digest, "steps": len(times) - 1})
    if not quiet:
        print(f"lumped run complete ({len(times) - 1} steps)")
    return 0


def cmd_compare(cfg, digest, outdir, seed, quiet):
    msh, space, ops, stk = _setup(cfg)
    v, _p = stk.solve_steady()
    fem_fluxes = {k: monitors.flux(ops, v, k) for k in ops.outlet_ids}

    net = cfg.lumped_network()
    _pn, _eq, tq = lumped.steady_fluxes(net)
    lumped_fluxes = {t.k: float(q) for t, q in zip(net.terminals, tq)}

    rows = {}
    for k in sorted(fem_fluxes):
        fq, lq = fem_fluxes[k], lumped_fluxes[k]
        denom = max(abs(lq), 1e-30)
        rows[str(k)] = {
            "fem_flux": fq,
            "lumped_flux": lq,
            "relative_deviation": abs(fq - lq) / denom,
        }
    _write_manifest(
        outdir, {"config_sha256": digest, "mesh": _mesh_stats(msh, space), "fluxes": rows}
    )
    if not quiet:
        for k, row in rows.items():
            print(
                f"outlet {k}: fem={row['fem_flux']:.6g} lumped={row['lumped_flux']:.6g} "
                f"dev={row['relative_deviation']:.3%}"
            )
    return 0


_COMMANDS = {
    "run": cmd_run,
    "steady": cmd_steady,
    "reduced": cmd_reduced,
    "converge": cmd_converge,
    "lumped": cmd_lumped,
    "compare": cmd_compare,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="openstokes")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", type=Path)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg, digest = _load(args.config)
    except ConfigError as exc:
        print("configuration rejected:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg, digest, args.out, args.seed, args.quiet)
    except Exception as exc:  # solver failures get a diagnostic file
        with open(args.out / "diagnostic.txt", "w") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
