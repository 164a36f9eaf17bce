"""Time-adaptive local minimisation with an arc-length constraint.

Each step minimises alternately in the equilibrium variable ``u`` and the
internal variable ``z``; the z-minimisation is constrained by
irreversibility ``z <= z_prev`` and the ball ``||z - z_prev|| <= rho``.  The
unused part of the ball becomes the time increment,
``t_next = t + rho - ||z - z_prev||``, so a step that exhausts the ball
leaves the time unchanged.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Any, Protocol, runtime_checkable

import numpy as np

from .errors import ConstraintViolationError, NonConvergenceError, SolverError


@dataclass
class EMConfig:
    """Driver controls.

    Attributes
    ----------
    rho : float
        Arc-length parameter, in units of the chosen norm.
    t_end : float
        Final time; the loop runs while ``t <= t_end``.
    stag_tol : float
        Tolerance on the equilibrium residual after the z-solve.
    max_am_iters : int
        Cap on alternate-minimisation sweeps per step.
    max_steps : int
        Cap on the number of steps.
    fixed_sweeps : int, optional
        Run exactly this many sweeps per step instead of testing
        ``stag_tol`` (used by the toy problems).
    snapshot_every : int
        Keep a state copy every k-th step and at every zero-time step
        (0 disables snapshots).
    """

    rho: float
    t_end: float
    stag_tol: float = 1e-6
    max_am_iters: int = 200
    max_steps: int = 100000
    fixed_sweeps: int | None = None
    snapshot_every: int = 0

    def __post_init__(self):
        bad = []
        if not self.rho > 0:
            bad.append("rho must be positive")
        if not self.t_end > 0:
            bad.append("t_end must be positive")
        if not self.stag_tol > 0:
            bad.append("stag_tol must be positive")
        if self.max_am_iters < 1 or self.max_steps < 1:
            bad.append("iteration caps must be >= 1")
        if self.fixed_sweeps is not None and self.fixed_sweeps < 1:
            bad.append("fixed_sweeps must be >= 1")
        if self.snapshot_every < 0:
            bad.append("snapshot_every must be >= 0")
        if bad:
            raise ValueError("; ".join(bad))


@dataclass
class EvolutionState:
    u: np.ndarray
    z: np.ndarray
    t: float
    j: int = 0

    def copy(self):
        return EvolutionState(np.array(self.u, copy=True), np.array(self.z, copy=True), self.t, self.j)


@dataclass
class SolveInfo:
    """Iteration counts reported by a sub-solve."""

    newton_iters: int = 0
    outer_iters: int = 0


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    dz_norm: float
    am_sweeps: int
    newton_max: int
    auglag_iters: int
    energy: float
    dissipation_increment: float
    residual: float = 0.0
    observables: dict = field(default_factory=dict)
    snapshot: Any = None


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    final: EvolutionState | None = None
    rho: float = 0.0

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def observable(self, name):
        return np.array([r.observables[name] for r in self.records])

    @property
    def snapshots(self):
        return [(r.step, r.snapshot) for r in self.records if r.snapshot is not None]


@runtime_checkable
class IncrementalProblem(Protocol):
    """What the driver needs from a concrete problem.

    ``solve_u`` minimises in ``u`` at fixed ``z``; ``solve_z`` minimises in
    ``z`` at fixed ``u`` subject to ``z <= z_prev`` and
    ``increment_norm(z - z_prev) <= rho``.  Both return the new value and a
    :class:`SolveInfo`.
    """

    def solve_u(self, t, u, z) -> tuple[np.ndarray, SolveInfo]: ...

    def solve_z(self, t, u, z, z_prev, rho) -> tuple[np.ndarray, SolveInfo]: ...

    def residual_u_norm(self, t, u, z) -> float: ...

    def increment_norm(self, dz) -> float: ...

    def energy(self, t, u, z) -> float: ...

    def dissipation(self, z, z_prev) -> float: ...


def time_update(t_j, rho, dz_norm, t_end=None, tol=1e-9):
    """``t_j + rho - dz_norm`` with ``dz_norm`` clamped to ``[0, rho]``.

    A norm above ``rho (1 + tol)`` means the constrained solve failed and
    raises :class:`ConstraintViolationError`.  If ``t_end`` is given the
    result is additionally capped there (never below ``t_j``).
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if dz_norm > rho * (1.0 + tol):
        raise ConstraintViolationError(
            f"increment norm {dz_norm:.12g} exceeds rho = {rho:.12g}")
    d = min(max(dz_norm, 0.0), rho)
    t = t_j + (rho - d)
    if t_end is not None:
        t = max(t_j, min(t, t_end))
    return t


def am_sweep(problem, t, state: EvolutionState, prev_z, rho):
    """One pass: equilibrium at fixed z, then the constrained z-solve.

    Returns the new state and ``(newton_u, newton_z, outer)`` counts.
    """
    try:
        u, iu = problem.solve_u(t, state.u, state.z)
    except SolverError as exc:
        exc.stage = getattr(exc, "stage", None) or "u"
        raise
    try:
        z, iz = problem.solve_z(t, u, state.z, prev_z, rho)
    except SolverError as exc:
        exc.stage = getattr(exc, "stage", None) or "z"
        raise
    return EvolutionState(u, z, state.t, state.j), (iu.newton_iters, iz.newton_iters, iz.outer_iters)


def _snapshot_due(cfg, j, dt):
    if cfg.snapshot_every <= 0:
        return False
    return j % cfg.snapshot_every == 0 or dt <= 1e-12 * cfg.rho


def run_em(problem, config: EMConfig, u0, z0, callback=None):
    """Run the scheme from ``t = 0`` until ``t > t_end`` or ``max_steps``.

    Each record holds the time ``t`` at which the step was solved and the
    increment ``dt = rho - ||z_j - z_{j-1}||`` to the next time.
    ``callback(record, state)`` is called after every accepted step.
    """
    cfg = config
    state = EvolutionState(np.array(u0, dtype=float, copy=True),
                           np.array(z0, dtype=float, copy=True), 0.0, 0)
    traj = Trajectory(rho=cfg.rho)
    observe = getattr(problem, "observe", None)
    while state.t <= cfg.t_end and state.j < cfg.max_steps:
        j = state.j + 1
        t = state.t
        z_prev = state.z.copy()
        cur = EvolutionState(state.u, state.z, t, j)
        sweeps = 0
        newton_max = 0
        outer = 0
        res_hist = []
        while True:
            try:
                cur, (nu, nz, no) = am_sweep(problem, t, cur, z_prev, cfg.rho)
            except SolverError as exc:
                exc.step = j
                raise
            sweeps += 1
            newton_max = max(newton_max, nu, nz)
            outer = max(outer, no)
            if cfg.fixed_sweeps is not None:
                if sweeps >= cfg.fixed_sweeps:
                    res = problem.residual_u_norm(t, cur.u, cur.z)
                    break
                continue
            res = problem.residual_u_norm(t, cur.u, cur.z)
            res_hist.append(res)
            if res <= cfg.stag_tol:
                break
            if sweeps >= cfg.max_am_iters:
                raise NonConvergenceError(
                    f"staggered loop did not converge in {cfg.max_am_iters} sweeps at step {j} "
                    f"(t = {t:.6g}, residual {res:.3e})", res_hist, step=j, stage="staggered")
        dz = problem.increment_norm(cur.z - z_prev)
        t_next = time_update(t, cfg.rho, dz)
        dz_c = min(max(dz, 0.0), cfg.rho)
        rec = StepRecord(step=j, t=t, dt=t_next - t, dz_norm=dz_c, am_sweeps=sweeps,
                         newton_max=newton_max, auglag_iters=outer,
                         energy=problem.energy(t, cur.u, cur.z),
                         dissipation_increment=problem.dissipation(cur.z, z_prev),
                         residual=res)
        if observe is not None:
            rec.observables = dict(observe(t, cur.u, cur.z))
        if _snapshot_due(cfg, j, rec.dt):
            rec.snapshot = (np.array(cur.u, copy=True), np.array(cur.z, copy=True))
        traj.records.append(rec)
        state = EvolutionState(cur.u, cur.z, t_next, j)
        if callback is not None:
            callback(rec, state)
    traj.final = state
    return traj


CSV_HEADER = ["step", "t", "dt", "dz_norm", "am_sweeps", "newton_max", "auglag_iters",
              "energy", "dissipation_increment"]


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.15g" % v


def write_trajectory_csv(traj: Trajectory, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in traj.records:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
