"""Phase-field fracture as an incremental problem for :func:`rivet.emdriver.run_em`."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import auglag, norms
from ..emdriver import EMConfig, SolveInfo, StepRecord, run_em
from ..errors import InputError, NonConvergenceError
from .assembly import (ZSubproblem, dissipation_increment, edge_loads, internal_force,
                       phase_field_system, total_energy)
from .material import MaterialParams
from .mesh import Mesh
from .solvers import newton_solve_u, newton_solve_z


@dataclass(frozen=True)
class Linear:
    """Amplitude ``u_max * t / T``."""

    u_max: float
    T: float

    def __call__(self, t):
        return self.u_max * t / self.T


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, t):
        return self.value


@dataclass
class Dirichlet:
    node_set: str
    component: int
    amplitude: Callable = field(default_factory=Constant)


@dataclass
class Neumann:
    edge_set: str
    traction: tuple
    scale: Callable = field(default_factory=lambda: Constant(1.0))


@dataclass
class NewtonControls:
    tol_rel: float = 1e-8
    atol: float = 1e-12
    max_it: int = 100


class PhaseFieldProblem:
    """Plane-strain phase-field fracture with the augmented-Lagrangian z-solve.

    Parameters
    ----------
    mesh : Mesh
    params : MaterialParams
    dirichlet : list of Dirichlet
    neumann : list of Neumann, optional
    norm : NormSpec
        Norm of the arc-length ball.
    alcfg : AugLagConfig
        ``alpha1_init`` and ``alpha2_init`` are multiplied by stiffness
        scales of ``K_I``: the mean diagonal for the nodal family and
        ``1^T K_I 1 / |Omega|^(2/q)`` for the ball.
    load_set : str, optional
        Dirichlet set whose amplitude and reaction are reported by
        :meth:`observe` as ``u_bar`` and ``F``.
    """

    def __init__(self, mesh: Mesh, params: MaterialParams, dirichlet, neumann=(),
                 norm=None, alcfg=None, newton=None, load_set=None):
        self.mesh = mesh
        self.params = params
        self.dirichlet = list(dirichlet)
        self.neumann = list(neumann)
        self.norm = norm or norms.NormSpec()
        self.alcfg = alcfg or auglag.AugLagConfig()
        self.newton = newton or NewtonControls()
        n = mesh.n_nodes
        dofs, owners = [], []
        for k, bc in enumerate(self.dirichlet):
            if bc.component not in (0, 1):
                raise InputError(f"Dirichlet component must be 0 or 1, got {bc.component}")
            ids = mesh.node_set(bc.node_set)
            dofs.append(2 * ids + bc.component)
            owners.append(np.full(len(ids), k))
        if dofs:
            dofs, owners = np.concatenate(dofs), np.concatenate(owners)
            # a dof listed twice keeps its last condition
            _, last = np.unique(dofs[::-1], return_index=True)
            keep = len(dofs) - 1 - last
            self.fixed, self._owner = dofs[keep], owners[keep]
        else:
            self.fixed, self._owner = np.zeros(0, int), np.zeros(0, int)
        self.free = np.setdiff1d(np.arange(2 * n), self.fixed)
        self._edge_f = [edge_loads(mesh, nb.edge_set, nb.traction) for nb in self.neumann]
        self.load_set = load_set
        if load_set is not None:
            match = [bc for bc in self.dirichlet if bc.node_set == load_set]
            if not match:
                raise InputError(f"load set {load_set!r} has no Dirichlet condition")
            self._load_bc = match[-1]
        self.last_outer = 0

    # -- boundary data -------------------------------------------------------

    def prescribed(self, t):
        amp = np.array([bc.amplitude(t) for bc in self.dirichlet]) if self.dirichlet else np.zeros(0)
        return amp[self._owner] if len(self._owner) else np.zeros(0)

    def external_force(self, t):
        f = np.zeros(2 * self.mesh.n_nodes)
        for nb, fe in zip(self.neumann, self._edge_f):
            f += nb.scale(t) * fe
        return f

    def impose(self, t, u):
        u = np.array(u, dtype=float, copy=True)
        u[self.fixed] = self.prescribed(t)
        return u

    def initial_state(self):
        return np.zeros(2 * self.mesh.n_nodes), np.ones(self.mesh.n_nodes)

    # -- IncrementalProblem ----------------------------------------------------

    def solve_u(self, t, u, z):
        nc = self.newton
        u, it, _ = newton_solve_u(self.mesh, self.impose(t, u), z, self.params, self.fixed,
                                  self.external_force(t), nc.tol_rel, nc.atol, nc.max_it)
        return u, SolveInfo(newton_iters=it)

    def residual_u(self, t, u, z):
        r = internal_force(self.mesh, u, z, self.params) - self.external_force(t)
        return r[self.free]

    def residual_u_norm(self, t, u, z):
        return float(np.linalg.norm(self.residual_u(t, u, z)))

    def increment_norm(self, dz):
        return float(norms.norm_value(dz, self.mesh, self.norm))

    def energy(self, t, u, z):
        return total_energy(self.mesh, u, z, self.params, self.external_force(t))

    def dissipation(self, z, z_prev):
        return dissipation_increment(z, z_prev, self.params, self.mesh)

    def penalty_scales(self, K_I):
        q = self.norm.exponent
        a1 = float(np.mean(K_I.diagonal()))
        a2 = float(K_I.sum()) / self.mesh.area ** (2.0 / q)
        return self.alcfg.alpha1_init * a1, self.alcfg.alpha2_init * a2

    def solve_z(self, t, u, z, z_prev, rho):
        """Augmented-Lagrangian loop around the phase-field Newton solver.

        Multipliers start at zero and penalties at their initial values; the
        loop stops once feasibility and complementarity hold for the updated
        multipliers.  The result is finally projected onto the admissible set,
        which moves it by at most the feasibility tolerances.
        """
        cfg, nc = self.alcfg, self.newton
        system = phase_field_system(self.mesh, u, self.params)
        a1, a2 = self.penalty_scales(system[0])
        st = auglag.AugLagState.fresh(self.mesh.n_nodes, a1, a2)
        z = np.array(z, dtype=float, copy=True)
        prev1 = np.full(self.mesh.n_nodes, np.inf)
        prev2 = np.inf
        newton_max = 0
        tols = [cfg.kkt_tol_feas, cfg.kkt_tol_feas_global * rho]
        hist = []
        for k in range(1, cfg.max_outer + 1):
            sub = ZSubproblem(self.mesh, u, z_prev, self.params, st, self.norm, rho, system)
            z, it, _ = newton_solve_z(sub, z, nc.tol_rel, nc.atol, nc.max_it)
            newton_max = max(newton_max, it)
            c = z - z_prev
            g = self.increment_norm(c) - rho
            lam1 = auglag.hestenes_powell(st.lambda1, st.alpha1, c)
            lam2 = auglag.hestenes_powell(st.lambda2, st.alpha2, g)
            hist.append(max(float(np.max(c)), g))
            if auglag.kkt_satisfied([c, g], [lam1, lam2], cfg, tols):
                break
            v1 = np.abs(np.maximum(c, -st.lambda1 / st.alpha1))
            v2 = abs(max(g, -st.lambda2 / st.alpha2))
            st = auglag.AugLagState(lam1, auglag.penalty_update(st.alpha1, v1, prev1, cfg),
                                    lam2, auglag.penalty_update(st.alpha2, v2, prev2, cfg), k)
            prev1, prev2 = v1, v2
        else:
            raise NonConvergenceError(
                f"augmented Lagrangian loop did not reach a KKT point in {cfg.max_outer} "
                "outer iterations", hist, stage="auglag")
        z = np.minimum(z, z_prev)
        nrm = self.increment_norm(z - z_prev)
        if nrm > rho:
            z = z_prev + (z - z_prev) * (rho / nrm)
        self.last_outer = k
        return z, SolveInfo(newton_iters=newton_max, outer_iters=k)

    def observe(self, t, u, z):
        if self.load_set is None:
            return {}
        bc = self._load_bc
        ids = self.mesh.node_set(bc.node_set)
        f = internal_force(self.mesh, u, z, self.params)
        return {"u_bar": float(bc.amplitude(t)),
                "F": float(np.sum(f[2 * ids + bc.component]))}


def fem_time_step(problem: PhaseFieldProblem, state, cfg: EMConfig):
    """Advance one accepted step from ``state`` (an EvolutionState).

    Returns the new state (with the updated time) and its StepRecord.
    """
    one = EMConfig(rho=cfg.rho, t_end=max(state.t, cfg.t_end) + cfg.rho, stag_tol=cfg.stag_tol,
                   max_am_iters=cfg.max_am_iters, max_steps=1, fixed_sweeps=cfg.fixed_sweeps)
    traj = run_em(_Shifted(problem, state.t), one, state.u, state.z)
    rec: StepRecord = traj.records[0]
    rec.step = state.j + 1
    rec.t += state.t
    new = traj.final
    new.t += state.t
    new.j = state.j + 1
    return new, rec


class _Shifted:
    """View of a problem with its time axis shifted by ``t0``."""

    def __init__(self, inner, t0):
        self.inner, self.t0 = inner, t0

    def solve_u(self, t, u, z):
        return self.inner.solve_u(t + self.t0, u, z)

    def solve_z(self, t, u, z, z_prev, rho):
        return self.inner.solve_z(t + self.t0, u, z, z_prev, rho)

    def residual_u_norm(self, t, u, z):
        return self.inner.residual_u_norm(t + self.t0, u, z)

    def increment_norm(self, dz):
        return self.inner.increment_norm(dz)

    def energy(self, t, u, z):
        return self.inner.energy(t + self.t0, u, z)

    def dissipation(self, z, z_prev):
        return self.inner.dissipation(z, z_prev)

    def observe(self, t, u, z):
        return self.inner.observe(t + self.t0, u, z)
