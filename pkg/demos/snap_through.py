"""Snap-through of the two-bar truss under a slowly increasing load.

Run with ``python3 demos/snap_through.py``.  Plain Newton from the previous
state needs many iterations at the fold; the arc-length scheme instead
takes zero-time steps of size rho across the snap.
"""
from rivet import toy


def main():
    uc, Fc = toy.snap_fold()
    print(f"fold of the near branch: u = {uc:.4f}, F = {Fc:.4f}")
    em = toy.run_snap_em(rho=0.01)
    loc = toy.run_snap_local(dt=0.01)
    gl = toy.run_snap_global(dt=0.01)
    (b0, b1), = toy.frozen_blocks(em.dt)
    print(f"arc-length: {b1 - b0 + 1} zero-time steps at F = {em.F[b0]:.5f}, "
          f"u {em.u[b0 - 1]:.3f} -> {em.u[b1 + 1]:.3f}, max Newton {em.newton_iters.max()}")
    k = int(loc.newton_iters.argmax())
    print(f"local Newton: max {loc.newton_iters.max()} iterations at F = {loc.F[k]:.4f}")
    j = int((gl.u > 1).argmax())
    print(f"global minimisation: snaps at F = {gl.F[j]:.4f}")


if __name__ == "__main__":
    main()
