"""Plane-strain phase-field material with a spectral tension/compression split.

Strains and stresses are handled in Voigt form: strains as
``[exx, eyy, 2 exy]`` and stresses as ``[sxx, syy, sxy]``, so that the
stress is the gradient of the energy density with respect to the strain
vector and the tangent is symmetric.  All functions broadcast over leading
axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EYE_V = np.array([1.0, 1.0, 0.0])
# maps engineering-shear strain to the tensor (stress-like) Voigt layout
_S_ENG = np.diag([1.0, 1.0, 0.5])


@dataclass(frozen=True)
class MaterialParams:
    """Elastic and fracture parameters (N, mm)."""

    E: float
    nu: float
    gc: float
    l: float
    k: float = 1e-6

    def __post_init__(self):
        bad = []
        if not self.E > 0:
            bad.append("E must be positive")
        if not 0 <= self.nu < 0.5:
            bad.append("nu must lie in [0, 0.5)")
        if not self.gc > 0:
            bad.append("gc must be positive")
        if not self.l > 0:
            bad.append("l must be positive")
        if not 0 <= self.k < 1:
            bad.append("k must lie in [0, 1)")
        if bad:
            raise ValueError("; ".join(bad))

    @property
    def lame_lambda(self):
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def lame_mu(self):
        return self.E / (2 * (1 + self.nu))


@dataclass
class SpectralSplit:
    eps_plus: np.ndarray
    eps_minus: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray


def _as_voigt(eps):
    eps = np.asarray(eps, dtype=float)
    if eps.shape[-2:] == (2, 2):
        return np.stack([eps[..., 0, 0], eps[..., 1, 1], eps[..., 0, 1] + eps[..., 1, 0]], axis=-1)
    return eps


def _eig2(ev):
    """Eigenvalues (descending) and projector vectors of a Voigt strain.

    Returns ``e1, e2`` and ``m1, m2`` with ``m_i = [n_x^2, n_y^2, n_x n_y]``
    (the projector n_i x n_i in stress-like Voigt layout).
    """
    a, b, c = ev[..., 0], ev[..., 1], 0.5 * ev[..., 2]
    mean = 0.5 * (a + b)
    rad = np.hypot(0.5 * (a - b), c)
    theta = 0.5 * np.arctan2(2 * c, a - b)
    cs, sn = np.cos(theta), np.sin(theta)
    m1 = np.stack([cs * cs, sn * sn, cs * sn], axis=-1)
    m2 = np.stack([sn * sn, cs * cs, -cs * sn], axis=-1)
    return mean + rad, mean - rad, m1, m2, cs, sn


def spectral_split(eps):
    """Split a symmetric 2x2 strain into positive and negative parts.

    Accepts a 2x2 tensor (or a stack of them).  ``eps_plus`` and
    ``eps_minus`` are returned as 2x2 tensors.
    """
    eps = np.asarray(eps, dtype=float)
    e1, e2, m1, m2, cs, sn = _eig2(_as_voigt(eps))

    def tens(m):
        return np.stack([np.stack([m[..., 0], m[..., 2]], -1),
                         np.stack([m[..., 2], m[..., 1]], -1)], -2)

    M1, M2 = tens(m1), tens(m2)
    p1, p2 = np.maximum(e1, 0.0), np.maximum(e2, 0.0)
    n1, n2 = np.minimum(e1, 0.0), np.minimum(e2, 0.0)
    plus = p1[..., None, None] * M1 + p2[..., None, None] * M2
    minus = n1[..., None, None] * M1 + n2[..., None, None] * M2
    vecs = np.stack([np.stack([cs, sn], -1), np.stack([-sn, cs], -1)], -1)
    return SpectralSplit(plus, minus, np.stack([e1, e2], -1), vecs)


def _parts(ev, params):
    lam, mu = params.lame_lambda, params.lame_mu
    e1, e2, m1, m2, _, _ = _eig2(ev)
    tr = e1 + e2
    trp, trm = np.maximum(tr, 0.0), np.minimum(tr, 0.0)
    p1, p2 = np.maximum(e1, 0.0), np.maximum(e2, 0.0)
    n1, n2 = np.minimum(e1, 0.0), np.minimum(e2, 0.0)
    psi_p = 0.5 * lam * trp**2 + mu * (p1**2 + p2**2)
    psi_m = 0.5 * lam * trm**2 + mu * (n1**2 + n2**2)
    sig_p = lam * trp[..., None] * _EYE_V + 2 * mu * (p1[..., None] * m1 + p2[..., None] * m2)
    sig_m = lam * trm[..., None] * _EYE_V + 2 * mu * (n1[..., None] * m1 + n2[..., None] * m2)
    return psi_p, psi_m, sig_p, sig_m, (e1, e2, m1, m2, tr)


def energy_density(eps, z, params):
    """``(psi0_plus, psi0_minus, psi_total)`` with psi_total = (z^2+k) psi+ + psi-."""
    psi_p, psi_m, *_ = _parts(_as_voigt(eps), params)
    z = np.asarray(z, dtype=float)
    return psi_p, psi_m, (z**2 + params.k) * psi_p + psi_m


def stress(eps, z, params):
    """Voigt stress ``[sxx, syy, sxy]``."""
    _, _, sig_p, sig_m, _ = _parts(_as_voigt(eps), params)
    g = np.asarray(z, dtype=float) ** 2 + params.k
    return g[..., None] * sig_p + sig_m


def _plus_projector(e1, e2, m1, m2):
    """Derivative of eps_plus w.r.t. the Voigt strain, (..., 3, 3)."""
    gap = e1 - e2
    close = np.abs(gap) < 1e-8 * np.maximum(1.0, np.abs(e1) + np.abs(e2))
    a1 = np.where(close, e1 + 1e-8, e1)
    a2 = np.where(close, e2 - 1e-8, e2)
    theta = (np.maximum(a1, 0.0) - np.maximum(a2, 0.0)) / (a1 - a2)
    h1 = (a1 > 0).astype(float)
    h2 = (a2 > 0).astype(float)
    mm1 = m1[..., :, None] * m1[..., None, :]
    mm2 = m2[..., :, None] * m2[..., None, :]
    return (h1[..., None, None] * mm1 + h2[..., None, None] * mm2
            + theta[..., None, None] * (_S_ENG - mm1 - mm2))


def tangent_uu(eps, z, params):
    """Consistent tangent ``d stress / d eps`` as a 3x3 Voigt matrix."""
    lam, mu = params.lame_lambda, params.lame_mu
    ev = _as_voigt(eps)
    e1, e2, m1, m2, _, _ = _eig2(ev)
    tr = e1 + e2
    Pp = _plus_projector(e1, e2, m1, m2)
    Pm = _S_ENG - Pp
    hp = (tr > 0).astype(float)[..., None, None]
    one = np.outer(_EYE_V, _EYE_V)
    Cp = lam * hp * one + 2 * mu * Pp
    Cm = lam * (1 - hp) * one + 2 * mu * Pm
    g = np.asarray(z, dtype=float) ** 2 + params.k
    return g[..., None, None] * Cp + Cm


def hooke_matrix(params):
    lam, mu = params.lame_lambda, params.lame_mu
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])
