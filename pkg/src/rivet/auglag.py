"""Augmented Lagrangian terms for the two inequality families of the z-problem.

The nodal family enforces irreversibility ``z_A - z_prev_A <= 0`` and the
global family the arc-length ball ``g(z) = ||z - z_prev|| - rho <= 0``.  Both
use the same scalar penalty function

    L(c; lam, alpha) = ((max(0, lam + alpha c))**2 - lam**2) / (2 alpha)

whose first derivative is ``max(0, lam + alpha c)`` and whose (Newton)
second derivative is ``alpha * H(lam + alpha c)`` with ``H(0) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AugLagConfig:
    """Multiplier-method controls.

    ``alpha1_init`` and ``alpha2_init`` are used verbatim by the scalar
    helpers here; the phase-field solver multiplies them by a stiffness scale
    of the problem before use.
    """

    alpha1_init: float = 10.0
    alpha2_init: float = 10.0
    growth: float = 10.0
    sufficient_decrease: float = 0.25
    kkt_tol_feas: float = 1e-10
    kkt_tol_feas_global: float = 1e-8  # relative to rho
    kkt_tol_comp: float = 1e-8
    max_outer: int = 30
    alpha_max: float = 1e12

    def __post_init__(self):
        bad = []
        for name in ("alpha1_init", "alpha2_init", "kkt_tol_feas",
                     "kkt_tol_feas_global", "kkt_tol_comp", "alpha_max"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be positive")
        if not self.growth > 1:
            bad.append("growth must exceed 1")
        if not 0 < self.sufficient_decrease < 1:
            bad.append("sufficient_decrease must lie in (0, 1)")
        if self.max_outer < 1:
            bad.append("max_outer must be >= 1")
        if bad:
            raise ValueError("; ".join(bad))


@dataclass
class AugLagState:
    """Multipliers and penalties for one constrained z-solve."""

    lambda1: np.ndarray
    alpha1: np.ndarray
    lambda2: float = 0.0
    alpha2: float = 1.0
    outer_iter: int = 0

    @classmethod
    def fresh(cls, n, alpha1, alpha2):
        """Zero multipliers with uniform nodal penalty, as at the start of a sweep."""
        return cls(lambda1=np.zeros(n), alpha1=np.full(n, float(alpha1)),
                   lambda2=0.0, alpha2=float(alpha2))

    def copy(self):
        return AugLagState(self.lambda1.copy(), self.alpha1.copy(),
                           self.lambda2, self.alpha2, self.outer_iter)


def _check_alpha(alpha):
    if np.any(np.asarray(alpha) <= 0):
        raise ValueError("penalty parameter must be positive")


def penalty_terms(c, lam, alpha):
    """Value, first and second derivative of the penalty function in ``c``.

    Works elementwise on arrays.  The second derivative uses ``H(0) = 1`` so
    it is the right derivative at the kink.
    """
    _check_alpha(alpha)
    c = np.asarray(c, dtype=float)
    lam = np.asarray(lam, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    arg = lam + alpha * c
    act = np.maximum(0.0, arg)
    value = (act**2 - lam**2) / (2.0 * alpha)
    d2 = np.where(arg >= 0.0, alpha, 0.0)
    return value, act, d2


def nodal_term(c, lam, alpha):
    """Irreversibility penalty of one node, ``c = z_A - z_prev_A``.

    Returns ``(value, d_dc, d2_dc2)``; scalars in, floats out.
    """
    v, d1, d2 = penalty_terms(c, lam, alpha)
    return float(v), float(d1), float(d2)


def global_term(g, lambda2, alpha2):
    """Arc-length ball penalty for the constraint value ``g``."""
    v, d1, d2 = penalty_terms(g, lambda2, alpha2)
    return float(v), float(d1), float(d2)


def hestenes_powell(lam, alpha, c):
    """Multiplier update ``max(0, lam + alpha c)``; vectorised."""
    out = np.maximum(0.0, np.asarray(lam, dtype=float) + np.asarray(alpha) * np.asarray(c))
    return float(out) if np.ndim(out) == 0 else out


def penalty_update(alpha, violation, prev_violation, cfg: AugLagConfig):
    """Grow the penalty where the violation did not shrink enough.

    ``alpha * growth`` if ``violation > sufficient_decrease * prev_violation``,
    otherwise unchanged; never above ``cfg.alpha_max``.
    """
    alpha = np.asarray(alpha, dtype=float)
    grow = np.asarray(violation) > cfg.sufficient_decrease * np.asarray(prev_violation)
    out = np.minimum(np.where(grow, alpha * cfg.growth, alpha), cfg.alpha_max)
    # an alpha already above the cap stays where it is
    out = np.where(alpha >= cfg.alpha_max, alpha, out)
    return float(out) if out.ndim == 0 else out


def kkt_satisfied(c_all, lambdas, cfg: AugLagConfig, feas_tols=None):
    """Feasibility and complementary slackness check.

    Parameters
    ----------
    c_all : sequence of array_like
        Constraint values, one entry per constraint family.
    lambdas : sequence of array_like
        Matching multipliers (non-negative).
    feas_tols : sequence of float, optional
        Per-family feasibility tolerance; defaults to ``cfg.kkt_tol_feas``.
    """
    if feas_tols is None:
        feas_tols = [cfg.kkt_tol_feas] * len(c_all)
    for c, lam, tol in zip(c_all, lambdas, feas_tols):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if c.size and np.max(c) > tol:
            return False
        if c.size and np.max(np.abs(lam * c)) > cfg.kkt_tol_comp:
            return False
    return True


def augmented_value(objective, c_nodal, lambda1, alpha1, g, lambda2, alpha2):
    """``objective + sum_A L1_A + L2``, the merit minimised by the z-solve."""
    v1, _, _ = penalty_terms(c_nodal, lambda1, alpha1)
    v2, _, _ = penalty_terms(g, lambda2, alpha2)
    return float(objective + np.sum(v1) + float(v2))
