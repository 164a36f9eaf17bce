"""Arc-length norms of the phase-field increment and their derivatives.

The ball constraint is written as a composition ``g = S**(1/q) - rho`` with
an integral ``S`` over the mesh (``q = p`` for L_p, ``q = 2`` for H1).  The
penalty ``L2(g)`` then contributes

* a residual ``r = m * dg/dS * fz`` with ``m = max(0, lam2 + alpha2 g)`` and
  ``fz = dS/dz`` (one entry per node),
* a rank-one tangent ``b * fz fz^T``,
* a sparse tangent ``ksp_scale * W`` with ``W`` the Hessian of ``S`` up to a
  constant factor.

Increments are integrated as ``|dz|**p``; on admissible iterates
(``dz <= 0``) this is ``(z_prev - z)**p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormSpec:
    kind: str = "lp"
    p: int = 4
    s_floor: float | None = None

    def __post_init__(self):
        if self.kind not in ("lp", "h1"):
            raise ValueError(f"norm kind must be 'lp' or 'h1', got {self.kind!r}")
        if self.kind == "lp" and (int(self.p) != self.p or self.p < 2):
            raise ValueError("L_p norm needs an integer p >= 2")
        if self.s_floor is not None and not self.s_floor > 0:
            raise ValueError("s_floor must be positive")

    @property
    def exponent(self):
        return int(self.p) if self.kind == "lp" else 2

    def floor(self, rho):
        if self.s_floor is not None:
            return self.s_floor
        return (1e-8 * rho) ** self.exponent

    @property
    def label(self):
        return f"L{int(self.p)}" if self.kind == "lp" else "H1"


@dataclass
class NormQuantities:
    S: float
    g: float
    b: float
    fz: np.ndarray
    ksp_scale: float
    r_scale: float
    W_data: np.ndarray | None = None  # CSR data on the mesh's scalar pattern
    pattern: object = None
    regularized: bool = False

    @property
    def residual(self):
        """Residual contribution ``r_scale * fz``."""
        return self.r_scale * self.fz

    @property
    def W(self):
        """Sparse matrix multiplied by ``ksp_scale`` in the tangent."""
        return self.pattern.matrix(self.W_data)

    def tangent_sparse(self):
        return self.pattern.matrix(self.ksp_scale * self.W_data)


def _lp_integrals(dz, mesh, p, need_w=True):
    S = 0.0
    fz = np.zeros(mesh.n_nodes)
    blocks = []
    for grp in mesh.groups:
        v = grp.values(dz)
        av = np.abs(v)
        S += float(np.sum(grp.w * av**p))
        dens = grp.w * p * av ** (p - 1) * np.sign(v)
        np.add.at(fz, grp.conn, dens @ grp.N)
        if need_w:
            blocks.append(grp.mass_blocks(grp.w * av ** (p - 2)))
    W = mesh.scalar_pattern.values(blocks) if need_w else None
    return S, fz, W


def _h1_integrals(dz, mesh, need_w=True):
    S = 0.0
    fz = np.zeros(mesh.n_nodes)
    blocks = []
    for grp in mesh.groups:
        v = grp.values(dz)
        gv = grp.gradients(dz)
        S += float(np.sum(grp.w * (v**2 + np.sum(gv**2, axis=-1))))
        fe = 2 * ((grp.w * v) @ grp.N + np.einsum("eab,eb->ea", grp.GG, dz[grp.conn]))
        np.add.at(fz, grp.conn, fe)
        if need_w:
            blocks.append(grp.mass_blocks(grp.w) + grp.GG)
    W = mesh.scalar_pattern.values(blocks) if need_w else None
    return S, fz, W


def norm_value(dz, mesh, spec: NormSpec):
    """Norm of a nodal increment field by element quadrature."""
    dz = np.asarray(dz, dtype=float)
    if spec.kind == "lp":
        S, _, _ = _lp_integrals(dz, mesh, spec.exponent, need_w=False)
        return S ** (1.0 / spec.exponent)
    S, _, _ = _h1_integrals(dz, mesh, need_w=False)
    return np.sqrt(S)


def _assemble(S, fz, W, q, lambda2, alpha2, rho, s_floor, w_factor, pattern):
    g = S ** (1.0 / q) - rho
    arg = lambda2 + alpha2 * g
    m = max(0.0, arg)
    heav = 1.0 if arg >= 0.0 else 0.0
    Se = max(S, s_floor)
    regularized = S < s_floor and (m > 0.0 or heav > 0.0)
    dg = Se ** (1.0 / q - 1.0) / q
    d2g = (1.0 - q) / q**2 * Se ** (1.0 / q - 2.0)
    b = m * d2g + alpha2 * heav * dg**2
    r_scale = m * dg
    return NormQuantities(S=S, g=g, b=b, fz=fz, ksp_scale=r_scale * w_factor,
                          r_scale=r_scale, W_data=W, pattern=pattern, regularized=regularized)


def lp_quantities(dz, mesh, p, lambda2, alpha2, rho, s_floor=None):
    """Ball-constraint quantities for the L_p norm.

    ``b = [(1-p) S^((1-2p)/p) m + alpha2 S^((2-2p)/p) H] / p^2`` and
    ``ksp_scale = (p-1) m S^((1-p)/p)`` multiplying ``int |dz|^(p-2) N_A N_B``.
    """
    p = int(p)
    if s_floor is None:
        s_floor = (1e-8 * rho) ** p
    S, fz, W = _lp_integrals(np.asarray(dz, float), mesh, p)
    # d2S/dz2 = p (p-1) W, and r_scale = m dg/dS
    return _assemble(S, fz, W, p, lambda2, alpha2, rho, s_floor, p * (p - 1),
                     mesh.scalar_pattern)


def h1_quantities(dz, mesh, lambda2, alpha2, rho, s_floor=None):
    """Ball-constraint quantities for the H1 norm.

    ``b = [alpha2 S^-1 H - S^(-3/2) m] / 4`` (the chain rule gives the minus
    sign on the multiplier term) and ``ksp_scale = m S^(-1/2)`` multiplying
    ``int N_A N_B + grad N_A . grad N_B``.
    """
    if s_floor is None:
        s_floor = (1e-8 * rho) ** 2
    S, fz, W = _h1_integrals(np.asarray(dz, float), mesh)
    return _assemble(S, fz, W, 2, lambda2, alpha2, rho, s_floor, 2.0, mesh.scalar_pattern)


def quantities(dz, mesh, spec: NormSpec, lambda2, alpha2, rho):
    if spec.kind == "lp":
        return lp_quantities(dz, mesh, spec.exponent, lambda2, alpha2, rho, spec.floor(rho))
    return h1_quantities(dz, mesh, lambda2, alpha2, rho, spec.floor(rho))


def surrogate_value(dz, mesh, spec: NormSpec, lambda2, alpha2, rho):
    """``L2(g(dz))``; the scalar whose gradient and Hessian the quantities give."""
    g = norm_value(dz, mesh, spec) - rho
    act = max(0.0, lambda2 + alpha2 * g)
    return (act**2 - lambda2**2) / (2 * alpha2)
