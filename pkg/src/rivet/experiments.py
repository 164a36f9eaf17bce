"""Execute a :class:`~rivet.config.RunConfig` and write its output files."""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from . import toy
from .config import RunConfig
from .emdriver import Trajectory, run_em, write_trajectory_csv
from .errors import SolverError

log = logging.getLogger("rivet")


def emit_force_displacement(path, u_bar, F):
    """Write ``u_bar,F`` rows, one per accepted step (header only if empty)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u_bar", "F"])
        for a, b in zip(u_bar, F):
            w.writerow(["%.15g" % a, "%.15g" % b])


def build_fem_problem(cfg: RunConfig, mesh=None):
    """Mesh and :class:`PhaseFieldProblem` described by a FEM config."""
    from .fem2d.problem import Dirichlet, Linear, Neumann, NewtonControls, PhaseFieldProblem
    mesh = mesh if mesh is not None else cfg.mesh.build()
    ld = cfg.loading
    bcs = [Dirichlet(name, comp) for name, comp in cfg.supports]
    bcs.append(Dirichlet(ld.node_set, ld.component, Linear(ld.u_max, ld.T)))
    neumann = [Neumann(name, tr) for name, tr in cfg.tractions]
    prob = PhaseFieldProblem(mesh, cfg.material, bcs, neumann, norm=cfg.norm, alcfg=cfg.auglag,
                             newton=NewtonControls(**cfg.newton), load_set=ld.node_set)
    return mesh, prob


def run_fem(cfg: RunConfig):
    from .fem2d.vtk import write_vtk
    out = cfg.output_dir
    mesh, prob = build_fem_problem(cfg)
    log.info("mesh: %d nodes, %d elements; rho = %g, norm %s", mesh.n_nodes,
             mesh.n_elements, cfg.em.rho, cfg.norm.label)
    out.mkdir(parents=True, exist_ok=True)
    vtk_dir = out / "vtk"
    if cfg.vtk and cfg.snapshot_every:
        vtk_dir.mkdir(exist_ok=True)
    partial = Trajectory(rho=cfg.em.rho)

    def step_done(rec, state):
        partial.records.append(rec)
        if cfg.vtk and rec.snapshot is not None:
            u, z = rec.snapshot
            write_vtk(vtk_dir / f"step_{rec.step:06d}.vtk", mesh, u, z, f"step {rec.step} t {rec.t:.10g}")
            rec.snapshot = None  # keep memory flat on long runs
        if rec.step % 10 == 0:
            log.info("step %d  t = %.6g  dt = %.3g  F = %.6g", rec.step, rec.t, rec.dt,
                     rec.observables.get("F", np.nan))

    u0, z0 = prob.initial_state()
    try:
        traj = run_em(prob, cfg.em, u0, z0, callback=step_done)
    except SolverError:
        _write_fem_outputs(out, partial)
        raise
    _write_fem_outputs(out, traj)
    if cfg.vtk:
        write_vtk(out / "final.vtk", mesh, traj.final.u, traj.final.z, "final state")
    return traj


def _write_fem_outputs(out, traj):
    write_trajectory_csv(traj, out / "trajectory.csv")
    if traj.records:
        u_bar, F = traj.observable("u_bar"), traj.observable("F")
    else:
        u_bar = F = []
    emit_force_displacement(out / "force-displacement.csv", u_bar, F)


def run_toy(cfg: RunConfig):
    o = cfg.toy
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    kind = cfg.experiment
    if kind == "toy-am":
        traj = toy.run_toy_am(o.z0, o.dt, o.n_am, o.t_end, o.load)
    elif kind == "toy-em":
        traj = toy.run_toy_em(o.z0, o.rho, o.t_end, o.n_am, o.load)
    elif kind == "toy-global":
        traj = toy.run_toy_global(o.z0, o.dt, o.t_end, o.load)
    else:
        traj = toy.viscous_oracle(o.z0, o.epsilon, o.dt, o.t_end, o.load)
    toy.write_toy_trajectory(traj, out / "toy-trajectory.csv")
    if kind == "toy-em":
        smap = toy.stable_set_scan((0.0, o.t_end), toy.Z_BRACKET, (o.stable_set_dt, o.stable_set_dz))
        toy.write_stable_set(smap, out / "stable-set.csv")
        t_jump = o.reduced_energy_t
        if t_jump is None:
            blocks = toy.frozen_blocks(traj.dt)
            t_jump = float(traj.t[blocks[-1][0]]) if blocks else o.t_end
        toy.write_reduced_energy(t_jump, out / "reduced-energy.csv")
    return traj


def run_snap(cfg: RunConfig):
    o = cfg.snap
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    sched = toy.LinearSchedule(o.F0, o.rate)
    if o.variant == "em":
        traj = toy.run_snap_em(sched, o.rho, o.u0, o.t_end)
    elif o.variant == "local":
        traj = toy.run_snap_local(sched, o.dt, o.u0, o.t_end)
    else:
        traj = toy.run_snap_global(sched, o.dt, o.u0, o.t_end)
    toy.write_snap_trajectory(traj, out / "snap-trajectory.csv")
    return traj


def run(cfg: RunConfig):
    """Dispatch on ``cfg.experiment``; returns the trajectory object."""
    if cfg.experiment == "fem":
        return run_fem(cfg)
    if cfg.experiment == "snap":
        return run_snap(cfg)
    return run_toy(cfg)


def declared_outputs(cfg: RunConfig):
    """Files a successful run of ``cfg`` is guaranteed to write."""
    d = Path(cfg.output_dir)
    if cfg.experiment == "fem":
        names = ["trajectory.csv", "force-displacement.csv"] + (["final.vtk"] if cfg.vtk else [])
    elif cfg.experiment == "snap":
        names = ["snap-trajectory.csv"]
    elif cfg.experiment == "toy-em":
        names = ["toy-trajectory.csv", "stable-set.csv", "reduced-energy.csv"]
    else:
        names = ["toy-trajectory.csv"]
    return [d / n for n in names]
