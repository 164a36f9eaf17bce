"""Element loops for the displacement and phase-field subproblems.

Displacements are stored interleaved, ``u[2a] = ux``, ``u[2a+1] = uy``.
All functions act on full vectors; Dirichlet elimination happens in the
solvers.  The phase-field residual is split into

* ``r_I``: the first variation of the bulk and surface energy,
  linear in ``z`` at fixed ``u``: ``r_I = K_I z - f0``;
* ``r_II``: nodal irreversibility penalty, diagonal;
* ``r_III``: the global ball constraint (see :mod:`rivet.norms`).
"""
from __future__ import annotations

import numpy as np

from .. import auglag, norms
from .material import _parts, tangent_uu


def strains(mesh, u):
    """Voigt strains per element group, each of shape (ne, nq, 3)."""
    return [(g.B @ u[g.vdofs][:, None, :, None])[..., 0] for g in mesh.groups]


def psi_plus(mesh, u, params):
    """Tensile energy density at quadrature points, one (ne, nq) array per group."""
    return [_parts(eps, params)[0] for eps in strains(mesh, u)]


def bulk_energy(mesh, u, z, params):
    total = 0.0
    for g, eps in zip(mesh.groups, strains(mesh, u)):
        pp, pm, *_ = _parts(eps, params)
        zq = g.values(z)
        total += float(np.sum(g.w * ((zq**2 + params.k) * pp + pm)))
    return total


def surface_energy(mesh, z, params):
    """``gc/(2l) int (1-z)^2 + l^2 |grad z|^2``."""
    total = 0.0
    for g in mesh.groups:
        zq = g.values(z)
        gz = g.gradients(z)
        total += float(np.sum(g.w * ((1 - zq) ** 2 + params.l**2 * np.sum(gz**2, -1))))
    return 0.5 * params.gc / params.l * total


def total_energy(mesh, u, z, params, f_ext=None):
    """Stored energy plus surface energy minus the work of ``f_ext``."""
    e = bulk_energy(mesh, u, z, params) + surface_energy(mesh, z, params)
    if f_ext is not None:
        e -= float(f_ext @ u)
    return e


def internal_force(mesh, u, z, params):
    f = np.zeros(2 * mesh.n_nodes)
    for g, eps in zip(mesh.groups, strains(mesh, u)):
        _, _, sp_, sm_, _ = _parts(eps, params)
        gz = g.values(z) ** 2 + params.k
        sig = gz[..., None] * sp_ + sm_
        fe = ((g.w[..., None] * sig)[:, :, None, :] @ g.B).sum(axis=1)[:, 0, :]
        np.add.at(f, g.vdofs, fe)
    return f


def stiffness_uu(mesh, u, z, params):
    blocks = []
    for g, eps in zip(mesh.groups, strains(mesh, u)):
        C = tangent_uu(eps, g.values(z), params) * g.w[..., None, None]
        BtCB = np.swapaxes(g.B, -1, -2) @ C @ g.B
        blocks.append(BtCB.sum(axis=1))
    return mesh.vector_pattern.assemble(blocks)


def edge_loads(mesh, edge_set, traction):
    """Consistent nodal forces of a constant traction on an edge set."""
    f = np.zeros(2 * mesh.n_nodes)
    edges = mesh.edge_set(edge_set)
    if not len(edges):
        return f
    tr = np.asarray(traction, dtype=float)
    length = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    for end in (0, 1):
        for c in (0, 1):
            np.add.at(f, 2 * edges[:, end] + c, 0.5 * length * tr[c])
    return f


# ----------------------------------------------------------------------------
# phase field


def phase_field_system(mesh, u, params):
    """``K_I`` and ``f0`` such that ``r_I(z) = K_I z - f0``."""
    gc, l = params.gc, params.l
    blocks = []
    for g, pp in zip(mesh.groups, psi_plus(mesh, u, params)):
        blocks.append(g.mass_blocks(g.w * (2 * pp + gc / l)) + gc * l * g.GG)
    K = mesh.scalar_pattern.assemble(blocks)
    f0 = np.zeros(mesh.n_nodes)
    for g in mesh.groups:
        np.add.at(f0, g.conn, gc / l * (g.w @ g.N))
    return K, f0


def lumped_area(mesh):
    a = np.zeros(mesh.n_nodes)
    for g in mesh.groups:
        np.add.at(a, g.conn, g.w @ g.N)
    return a


class ZSubproblem:
    """Augmented Lagrangian in ``z`` at fixed ``u`` and fixed multipliers.

    Provides the merit value, residual and tangent pieces used by the
    phase-field Newton solver.  ``K_I`` and ``f0`` are computed once since
    ``u`` does not change during the z-solve.
    """

    def __init__(self, mesh, u, z_prev, params, state, norm_spec, rho, system=None):
        self.mesh = mesh
        self.z_prev = np.asarray(z_prev, dtype=float)
        self.state = state
        self.spec = norm_spec
        self.rho = rho
        self.K_I, self.f0 = system if system is not None else phase_field_system(mesh, u, params)

    def merit(self, z):
        c = z - self.z_prev
        s = self.state
        val = 0.5 * z @ (self.K_I @ z) - self.f0 @ z
        val += float(np.sum(auglag.penalty_terms(c, s.lambda1, s.alpha1)[0]))
        val += norms.surrogate_value(c, self.mesh, self.spec, s.lambda2, s.alpha2, self.rho)
        return val

    def pieces(self, z):
        """Residual, sparse tangent and the rank-one data ``(b, fz)``."""
        c = z - self.z_prev
        s = self.state
        _, d1, d2 = auglag.penalty_terms(c, s.lambda1, s.alpha1)
        nq = norms.quantities(c, self.mesh, self.spec, s.lambda2, s.alpha2, self.rho)
        r = self.K_I @ z - self.f0 + d1 + nq.residual
        pat = self.mesh.scalar_pattern
        vals = self.K_I.data + nq.ksp_scale * nq.W_data
        vals[pat.diagonal_slots] += d2
        return r, pat.matrix(vals), nq.b, nq.fz, nq

    def residual(self, z):
        return self.pieces(z)[0]


def residual_z(mesh, u, z, z_prev, params, state, norm_spec, rho):
    """Full phase-field residual ``r_I + r_II + r_III``."""
    return ZSubproblem(mesh, u, z_prev, params, state, norm_spec, rho).residual(z)


def assemble_Kzz_sparse(mesh, u, z, z_prev, params, state, norm_spec, rho):
    """Sparse part ``K_I + K_II + K_III_sparse`` of the phase-field tangent."""
    return ZSubproblem(mesh, u, z_prev, params, state, norm_spec, rho).pieces(z)[1]


def augmented_lagrangian(mesh, u, z, z_prev, params, state, norm_spec, rho):
    """Total energy plus both penalty families (``f_ext`` omitted)."""
    c = z - z_prev
    val = total_energy(mesh, u, z, params)
    val += float(np.sum(auglag.penalty_terms(c, state.lambda1, state.alpha1)[0]))
    val += norms.surrogate_value(c, mesh, norm_spec, state.lambda2, state.alpha2, rho)
    return val


# ----------------------------------------------------------------------------
# diagnostics


def reaction_force(mesh, u, z, params, node_set, component=0):
    """Sum of internal-force components over a node set."""
    ids = mesh.node_set(node_set)
    f = internal_force(mesh, u, z, params)
    return float(np.sum(f[2 * ids + component]))


def dissipation_increment(z, z_prev, params, mesh):
    """``-(gc/l) int (z - z_prev)``, nonnegative for admissible steps."""
    dz = np.asarray(z, float) - np.asarray(z_prev, float)
    return 0.0 - params.gc / params.l * float(lumped_area(mesh) @ dz)
