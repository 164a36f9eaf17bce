"""Coarse compact-tension-like fracture run through the arc-length driver.

Run with ``python3 demos/ct_preset.py [rho]`` (about a minute at the
default rho = 0.01).  Writes nothing; prints the force peak and the
longest run of zero-time steps, where the crack grows brutally.
"""
import sys
import time

from rivet import toy
from rivet.config import preset_config
from rivet.emdriver import run_em
from rivet.experiments import build_fem_problem


def main(rho=0.01):
    cfg = preset_config("ct", rho=rho)
    cfg.em.snapshot_every = 0
    mesh, prob = build_fem_problem(cfg)
    print(f"{mesh.n_elements} elements, {mesh.n_nodes} nodes, rho = {rho}")
    t0 = time.perf_counter()
    traj = run_em(prob, cfg.em, *prob.initial_state())
    F, u = traj.observable("F"), traj.observable("u_bar")
    k = F.argmax()
    blocks = toy.frozen_blocks(traj.column("dt"), tol=1e-6)
    a, b = max(blocks, key=lambda ab: ab[1] - ab[0])
    print(f"{len(traj)} steps in {time.perf_counter() - t0:.0f}s; peak F = {F[k]:.4f} at u = {u[k]:.4f}")
    print(f"longest frozen block: steps {a}-{b} at u = {u[a]:.4f}, F {F[a]:.3f} -> {F[b]:.3f}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 0.01)
