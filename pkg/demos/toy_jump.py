"""Three schemes on the two-variable model problem.

Run with ``python3 demos/toy_jump.py``.  The arc-length scheme freezes time
while z drops to the nearest stable state.  Alternate minimisation jumps at
nearly the same moment but overshoots to the global minimiser, and global
minimisation leaves the initial state immediately.
"""
from rivet import toy


def main():
    em = toy.run_toy_em(z0=33.5, rho=1e-3, t_end=2.0)
    am = toy.run_toy_am(z0=33.5, dt=1e-3, t_end=2.0)
    gl = toy.run_toy_global(z0=33.5, dt=1e-3, t_end=2.0)

    first, last = toy.frozen_blocks(em.dt)[-1]
    t_star = em.t[first]
    print(f"arc-length: {len(em)} steps, jump at t = {t_star:.5f}")
    print(f"  z {em.z[first - 1]:.4f} -> {em.z[last + 1]:.4f} over {last - first + 2} frozen steps")
    j = am.jump()
    print(f"alternate minimisation: jump at t = {am.t[j]:.3f}, z {am.z[j - 1]:.4f} -> {am.z[j]:.4f}")
    print(f"global minimisation: z = {gl.z[0]:.4f} already at t = 0")

    smap = toy.stable_set_scan((0.0, 2.0), (-20.0, 40.0), (0.05, 0.5))
    print(f"stable set scan: {smap.flags.shape} grid, {100 * smap.flags.mean():.1f}% stable")


if __name__ == "__main__":
    main()
