"""Finite-dimensional model problems.

Two systems are provided:

* a separately quadratic energy ``F(t, u1, u2, z)`` whose reduced energy has
  two branches of locally stable states, used to compare alternate
  minimisation, the arc-length scheme, global minimisation and a viscous
  regularisation;
* a two-bar truss under a dead load ``F`` whose energy
  ``(1/sqrt2) (sqrt((1-u)^2+1) - sqrt2)^2 - F u`` snaps through once the load
  passes a fold.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .emdriver import EMConfig, SolveInfo, run_em

Z_BRACKET = (-40.0, 40.0)
U_BRACKET = (-1.0, 3.0)
GRID_POINTS = 100_001


# ----------------------------------------------------------------------------
# separately quadratic energy


def toy_energy(t, u1, u2, z, load=True):
    """Energy of the model problem; ``load=False`` drops the ``-2000 t u2`` term."""
    e = (58 * (z + 14) ** 2 + u1**2 * (60 * (z + 2) ** 2 + 76) + u1 * (-4 * (z - 16) ** 2 - 8)
         + u2**2 * (15 * (z - 33) ** 2 + 100) + 25 * u2 * (z - 20) ** 2)
    return e - 2000 * t * u2 if load else e


def toy_u_min(t, z, load=True):
    """Closed-form minimiser ``(u1, u2)`` of the energy at fixed ``(t, z)``."""
    u1 = (4 * (z - 16) ** 2 + 8) / (2 * (60 * (z + 2) ** 2 + 76))
    drive = 2000 * t if load else 0.0
    u2 = (drive - 25 * (z - 20) ** 2) / (2 * (15 * (z - 33) ** 2 + 100))
    return u1, u2


def toy_energy_dz(t, u1, u2, z):
    """Partial derivative of the energy in ``z`` at fixed ``u``."""
    return (116 * (z + 14) + 120 * u1**2 * (z + 2) - 8 * u1 * (z - 16)
            + 30 * u2**2 * (z - 33) + 50 * u2 * (z - 20))


def z_vertex(u1, u2):
    """Unconstrained minimiser of the energy in ``z`` (a parabola) at fixed ``u``."""
    a = 58 + 60 * u1**2 - 4 * u1 + 15 * u2**2 + 25 * u2
    b = 58 * 28 + 240 * u1**2 + 128 * u1 - 990 * u2**2 - 1000 * u2
    return -b / (2 * a)


def reduced_energy(t, z, load=True):
    u1, u2 = toy_u_min(t, z, load)
    return toy_energy(t, u1, u2, z, load)


def reduced_energy_dz(t, z, load=True):
    """Central difference of the reduced energy, ``h = 1e-6 max(1, |z|)``."""
    h = 1e-6 * np.maximum(1.0, np.abs(z))
    return (reduced_energy(t, z + h, load) - reduced_energy(t, z - h, load)) / (2 * h)


def reduced_energy_dz_exact(t, z, load=True):
    """Envelope form ``dF/dz`` at ``u = u_min(t, z)``."""
    u1, u2 = toy_u_min(t, z, load)
    return toy_energy_dz(t, u1, u2, z)


@dataclass
class StableSetMap:
    t: np.ndarray
    z: np.ndarray
    flags: np.ndarray  # shape (len(t), len(z)); True where locally stable
    dt: float
    dz: float


def stable_set_scan(t_range, z_range, resolution):
    """Flag ``(t, z)`` samples with ``dF_red/dz <= 0`` as locally stable.

    ``resolution`` is a grid spacing or a pair ``(dt, dz)``.
    """
    dt, dz = (resolution, resolution) if np.isscalar(resolution) else resolution
    if not (dt > 0 and dz > 0):
        raise ValueError("resolution must be positive")
    ts = np.arange(t_range[0], t_range[1] + 0.5 * dt, dt)
    zs = np.arange(z_range[0], z_range[1] + 0.5 * dz, dz)
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    flags = reduced_energy_dz_exact(T, Z) <= 0.0
    return StableSetMap(ts, zs, flags, dt, dz)


@dataclass
class ToyTrajectory:
    """Accepted states; ``dt[i]`` is the increment from step ``i`` to ``i+1``."""

    t: np.ndarray
    z: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    dt: np.ndarray
    scheme: str = ""

    @property
    def F_red(self):
        return reduced_energy(self.t, self.z)

    @property
    def energy(self):
        return toy_energy(self.t, self.u1, self.u2, self.z)

    def __len__(self):
        return len(self.t)

    def jump(self, threshold=0.5):
        """Index ``i`` of the first step with ``z[i-1] - z[i] > threshold``, or None.

        For the arc-length scheme use :func:`frozen_blocks` instead; there a
        jump is a run of zero-time steps.
        """
        d = -np.diff(self.z)
        idx = np.where(d > threshold)[0]
        return int(idx[0] + 1) if idx.size else None


def frozen_blocks(dt, tol=1e-12, min_len=1):
    """Maximal runs ``(first, last)`` of indices with ``dt <= tol``."""
    zero = np.where(np.asarray(dt) <= tol)[0]
    if not zero.size:
        return []
    cuts = np.where(np.diff(zero) != 1)[0] + 1
    return [(int(b[0]), int(b[-1])) for b in np.split(zero, cuts) if len(b) >= min_len]


def _finish(ts, zs, dts, scheme, load=True):
    t = np.array(ts)
    z = np.array(zs)
    u1, u2 = toy_u_min(t, z, load)
    return ToyTrajectory(t, z, u1, u2, np.array(dts), scheme)


def run_toy_am(z0=33.5, dt=1e-3, n_am=20, t_end=2.0, load=True):
    """Alternate minimisation on a uniform time grid.

    Each step does ``n_am`` exact passes: ``u`` in closed form, then ``z`` as
    the parabola vertex clipped to ``z <= z_prev``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(np.floor(t_end / dt + 1e-9)) + 1
    ts = np.arange(n) * dt
    zs = np.empty(n)
    z = float(z0)
    for i, t in enumerate(ts):
        zp = z
        for _ in range(n_am):
            u1, u2 = toy_u_min(t, z, load)
            z = min(z_vertex(u1, u2), zp)
        zs[i] = z
    return _finish(ts, zs, np.full(n, dt), "am", load)


class ToyProblem:
    """The model energy as an incremental problem for the generic driver.

    ``u = (u1, u2)`` and ``z`` is a length-one array; the increment norm is
    ``|dz|``, so the z-step is the parabola vertex clipped to
    ``[z_prev - rho, z_prev]``.
    """

    def __init__(self, load=True):
        self.load = load

    def solve_u(self, t, u, z):
        return np.array(toy_u_min(t, z[0], self.load)), SolveInfo(newton_iters=1)

    def solve_z(self, t, u, z, z_prev, rho):
        zp = z_prev[0]
        zn = min(max(z_vertex(u[0], u[1]), zp - rho), zp)
        return np.array([zn]), SolveInfo(newton_iters=1, outer_iters=0)

    def residual_u_norm(self, t, u, z):
        u1s, u2s = toy_u_min(t, z[0], self.load)
        zz = z[0]
        g1 = 2 * (u[0] - u1s) * (60 * (zz + 2) ** 2 + 76)
        g2 = 2 * (u[1] - u2s) * (15 * (zz - 33) ** 2 + 100)
        return float(np.hypot(g1, g2))

    def increment_norm(self, dz):
        return float(abs(dz[0]))

    def energy(self, t, u, z):
        return float(toy_energy(t, u[0], u[1], z[0], self.load))

    def dissipation(self, z, z_prev):
        # the model has a pure irreversibility constraint, no rate cost
        return 0.0


def run_toy_em(z0=33.5, rho=1e-3, t_end=2.0, n_am=20, load=True):
    """Arc-length scheme through :func:`rivet.emdriver.run_em`."""
    u0 = np.array(toy_u_min(0.0, z0, load))
    cfg = EMConfig(rho=rho, t_end=t_end, fixed_sweeps=n_am, max_steps=10_000_000)
    zs, u1, u2 = [], [], []

    def keep(rec, state):
        zs.append(state.z[0])
        u1.append(state.u[0])
        u2.append(state.u[1])

    traj = run_em(ToyProblem(load), cfg, u0, np.array([float(z0)]), callback=keep)
    return ToyTrajectory(traj.column("t"), np.array(zs), np.array(u1), np.array(u2),
                         traj.column("dt"), "em")


def _grid(bracket, n=GRID_POINTS):
    return np.linspace(bracket[0], bracket[1], n)


def _global_min_below(t, z_cap, load=True, bracket=Z_BRACKET):
    """Global minimiser of ``F_red(t, .)`` on ``[bracket[0], z_cap]``."""
    zs = _grid((bracket[0], z_cap))
    f = reduced_energy(t, zs, load)
    k = int(np.argmin(f))
    lo, hi = zs[max(k - 1, 0)], zs[min(k + 1, len(zs) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: reduced_energy(t, x, load), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun <= f[k]:
            return float(res.x)
    return float(zs[k])


def run_toy_global(z0=33.5, dt=1e-3, t_end=2.0, load=True, bracket=Z_BRACKET):
    """Incremental global minimisation of ``F_red`` under ``z <= z_prev``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(np.floor(t_end / dt + 1e-9)) + 1
    ts = np.arange(n) * dt
    zs = np.empty(n)
    z = float(z0)
    for i, t in enumerate(ts):
        zc = _global_min_below(t, z, load, bracket)
        if reduced_energy(t, zc, load) < reduced_energy(t, z, load):
            z = zc
        zs[i] = z
    return _finish(ts, zs, np.full(n, dt), "global", load)


def _first_local_min_below(fun_dz, z_prev, lower, h=1e-3, chunk=2000):
    """Largest ``z <= z_prev`` where ``fun_dz`` changes sign from + to - going down.

    Marches downward from ``z_prev`` on a grid of spacing ``h`` and polishes
    the first sign change with Brent's method; returns ``lower`` if none.
    """
    if fun_dz(z_prev) <= 0.0:
        return z_prev
    top = z_prev
    while top > lower:
        zs = top - h * np.arange(1, chunk + 1)
        zs = zs[zs >= lower]
        if not zs.size:
            break
        d = fun_dz(zs)
        neg = np.where(d <= 0.0)[0]
        if neg.size:
            k = neg[0]
            hi = top if k == 0 else zs[k - 1]
            return float(brentq(fun_dz, zs[k], hi, xtol=1e-13, rtol=1e-14))
        top = zs[-1]
    return lower


def viscous_oracle(z0=33.5, epsilon=1e-2, dt=1e-4, t_end=1.4, load=True, t_start=0.0):
    """Implicit Euler for the viscous regularisation with ``z' <= 0``.

    Each step minimises ``F_red(t, z) + eps/(2 dt) (z - z_prev)^2`` over
    ``z <= z_prev``, taking the first local minimiser met when moving down
    from ``z_prev`` (the one reached by the viscous flow).
    """
    if not (epsilon > 0 and dt > 0):
        raise ValueError("epsilon and dt must be positive")
    n = int(np.floor((t_end - t_start) / dt + 1e-9)) + 1
    ts = t_start + np.arange(n) * dt
    zs = np.empty(n)
    z = float(z0)
    visc = epsilon / dt
    for i, t in enumerate(ts):
        zp = z
        z = _first_local_min_below(
            lambda x: reduced_energy_dz_exact(t, x, load) + visc * (x - zp), zp, Z_BRACKET[0])
        zs[i] = z
    return _finish(ts, zs, np.full(n, dt), "viscous", load)


# ----------------------------------------------------------------------------
# snap-through truss


def snap_energy(u, F):
    return (np.sqrt((1 - u) ** 2 + 1) - np.sqrt(2.0)) ** 2 / np.sqrt(2.0) - F * u


def snap_energy_du(u, F):
    s = np.sqrt((1 - u) ** 2 + 1)
    return -np.sqrt(2.0) * (s - np.sqrt(2.0)) * (1 - u) / s - F


def snap_energy_du2(u, F):
    s = np.sqrt((1 - u) ** 2 + 1)
    w = 1 - u
    return np.sqrt(2.0) * (w * w / (s * s) + (s - np.sqrt(2.0)) / s ** 3)


@dataclass(frozen=True)
class LinearSchedule:
    """Dead load ``F(t) = F0 + rate t``."""

    F0: float = -0.1
    rate: float = 0.25

    def __call__(self, t):
        return self.F0 + self.rate * t


@dataclass
class SnapTrajectory:
    t: np.ndarray
    u: np.ndarray
    F: np.ndarray
    newton_iters: np.ndarray
    diverged: np.ndarray
    dt: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scheme: str = ""

    def __len__(self):
        return len(self.t)


def snap_fold():
    """Fold point ``(u_c, F_c)`` of the near branch: ``dF/du = 0`` and ``d2F/du2 = 0``.

    On the equilibrium path ``F = -sqrt2 (s - sqrt2)(1 - u)/s`` the critical
    load is where the tangent stiffness vanishes.
    """
    uc = brentq(lambda u: snap_energy_du2(u, 0.0), 0.0, 1.0, xtol=1e-15)
    Fc = snap_energy_du(uc, 0.0)  # dF/du = dW/du - F = 0
    return float(uc), float(Fc)


def _bounded_newton(F, x0, lo, hi, tol=1e-12, max_it=50):
    """Newton on ``snap_energy(., F)`` restricted to ``[lo, hi]``.

    Where the curvature is not positive the step goes to the bound in the
    descent direction; every step is backtracked on the energy.  Returns the
    point and the number of Newton iterations.
    """
    x = float(x0)
    e = snap_energy(x, F)
    for it in range(1, max_it + 1):
        g = snap_energy_du(x, F)
        if (x <= lo and g > 0) or (x >= hi and g < 0) or abs(g) <= tol:
            return x, it
        h = snap_energy_du2(x, F)
        target = x - g / h if h > 0 else (lo if g > 0 else hi)
        xn = min(max(target, lo), hi)
        en = snap_energy(xn, F)
        s = 1.0
        while en > e + 1e-15 and s > 1e-12:
            s *= 0.5
            xn = x + s * (min(max(target, lo), hi) - x)
            en = snap_energy(xn, F)
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn, it
        x, e = xn, en
    return x, max_it


def snap_start(schedule):
    """Equilibrium on the near branch at ``F(0)``, the default initial state."""
    return _safeguarded_newton(schedule(0.0), 0.0)[0]


def run_snap_em(schedule=None, rho=0.01, u0=None, t_end=2.0, max_steps=100_000):
    """Arc-length scheme: ``u_j`` minimises the energy at load ``F(t_{j-1})``
    over ``|u - u_{j-1}| <= rho``; then ``t_j = t_{j-1} + rho - |u_j - u_{j-1}|``.

    ``u0=None`` starts from :func:`snap_start`.
    """
    schedule = schedule or LinearSchedule()
    t = 0.0
    u = snap_start(schedule) if u0 is None else float(u0)
    ts, us, Fs, its, dts = [], [], [], [], []
    while t <= t_end and len(ts) < max_steps:
        F = schedule(t)
        un, it = _bounded_newton(F, u, u - rho, u + rho)
        du = min(abs(un - u), rho)
        ts.append(t)
        us.append(un)
        Fs.append(F)
        its.append(it)
        dts.append(rho - du)
        t, u = t + (rho - du), un
    n = len(ts)
    return SnapTrajectory(np.array(ts), np.array(us), np.array(Fs), np.array(its),
                          np.zeros(n, bool), np.array(dts), "em")


def _safeguarded_newton(F, x0, tol=1e-10, max_it=500):
    """Plain Newton from ``x0`` with an energy check.

    A step that is not a descent step (non-positive curvature or energy
    increase) is replaced by a unit gradient step, halved until the energy
    decreases.  Returns ``(x, iterations, diverged)``.
    """
    x = float(x0)
    e = snap_energy(x, F)
    for it in range(1, max_it + 1):
        g = snap_energy_du(x, F)
        if abs(g) <= tol:
            return x, it, False
        h = snap_energy_du2(x, F)
        xn = x - g / h if h > 0 else x - g
        en = snap_energy(xn, F)
        slack = 1e-14 * max(1.0, abs(e))
        if h <= 0 or en > e + slack:
            s = 1.0
            xn = x - s * g
            en = snap_energy(xn, F)
            while en > e + slack and s > 1e-12:
                s *= 0.5
                xn = x - s * g
                en = snap_energy(xn, F)
        if abs(xn - x) <= 1e-15 * max(1.0, abs(x)):
            return xn, it, False
        x, e = xn, en
    return x, max_it, True


def run_snap_local(schedule=None, dt=0.01, u0=None, t_end=2.0, max_it=500):
    """Uniform steps; unconstrained safeguarded Newton from the previous ``u``."""
    schedule = schedule or LinearSchedule()
    u0 = snap_start(schedule) if u0 is None else u0
    n = int(np.floor(t_end / dt + 1e-9)) + 1
    ts = np.arange(n) * dt
    us, its, div = np.empty(n), np.empty(n, int), np.zeros(n, bool)
    u = float(u0)
    for i, t in enumerate(ts):
        u, its[i], div[i] = _safeguarded_newton(schedule(t), u, max_it=max_it)
        us[i] = u
    return SnapTrajectory(ts, us, schedule(ts), its, div, np.full(n, dt), "local")


def snap_global_min(F, bracket=U_BRACKET):
    us = _grid(bracket)
    f = snap_energy(us, F)
    k = int(np.argmin(f))
    x, _ = _bounded_newton(F, us[k], us[max(k - 1, 0)], us[min(k + 1, len(us) - 1)])
    return x if snap_energy(x, F) <= f[k] else float(us[k])


def run_snap_global(schedule=None, dt=0.01, u0=None, t_end=2.0):
    """Dense-grid global minimiser at every load (``u0`` is irrelevant)."""
    schedule = schedule or LinearSchedule()
    n = int(np.floor(t_end / dt + 1e-9)) + 1
    ts = np.arange(n) * dt
    us = np.array([snap_global_min(schedule(t)) for t in ts])
    return SnapTrajectory(ts, us, schedule(ts), np.ones(n, int), np.zeros(n, bool),
                          np.full(n, dt), "global")


def newton_iteration_census(trajectory):
    """Per-step Newton counts of a snap run (divergent steps count as the cap)."""
    return np.asarray(trajectory.newton_iters, dtype=int)


# ----------------------------------------------------------------------------
# CSV output


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(v) if isinstance(v, (int, np.integer, bool, np.bool_)) else "%.15g" % v
                        for v in row])


def write_toy_trajectory(traj: ToyTrajectory, path):
    F = traj.F_red
    _write(path, ["step", "t", "z", "u1", "u2", "F_red"],
           ((i, traj.t[i], traj.z[i], traj.u1[i], traj.u2[i], F[i]) for i in range(len(traj))))


def write_stable_set(smap: StableSetMap, path):
    T, Z = np.meshgrid(smap.t, smap.z, indexing="ij")
    _write(path, ["t", "z", "flag"],
           zip(T.ravel(), Z.ravel(), smap.flags.ravel().astype(int)))


def write_snap_trajectory(traj: SnapTrajectory, path):
    _write(path, ["step", "t", "u", "F", "newton_iters"],
           ((i, traj.t[i], traj.u[i], traj.F[i], int(traj.newton_iters[i]))
            for i in range(len(traj))))


def write_reduced_energy(t, path, bracket=Z_BRACKET, n=4001):
    zs = np.linspace(bracket[0], bracket[1], n)
    _write(path, ["z", "F_red"], zip(zs, reduced_energy(t, zs)))
