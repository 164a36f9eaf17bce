"""Sparse SPD solves, the Sherman-Morrison update and the two Newton solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NonConvergenceError, RankOneSingularityError, SolverError
from .assembly import internal_force, stiffness_uu, total_energy

REL_RESIDUAL = 1e-10


class SPDFactor:
    """Sparse LU of a symmetric positive definite matrix.

    The factorisation runs in symmetric mode without off-diagonal pivoting, so
    a nonpositive pivot on the diagonal of ``U`` means the input is not SPD.
    Solves are followed by iterative refinement until the residual meets
    ``REL_RESIDUAL`` relative to the right-hand side.
    """

    def __init__(self, K):
        K = sp.csc_matrix(K)
        if K.shape[0] != K.shape[1]:
            raise SolverError("matrix is not square")
        self.K = K
        self.n = K.shape[0]
        if self.n == 0:
            self._lu = None
            return
        try:
            self._lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                 options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SolverError(f"sparse factorisation failed: {exc}") from exc
        d = self._lu.U.diagonal()
        if not np.all(d > 0) or not np.all(np.isfinite(d)):
            raise SolverError("matrix is not symmetric positive definite "
                              f"(smallest pivot {float(np.min(d)):.3e})")

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self.n == 0:
            return rhs.copy()
        x = self._lu.solve(rhs)
        nb = np.linalg.norm(rhs)
        for _ in range(4):
            res = rhs - self.K @ x
            if np.linalg.norm(res) <= REL_RESIDUAL * nb:
                return x
            x = x + self._lu.solve(res)
        if np.linalg.norm(rhs - self.K @ x) <= REL_RESIDUAL * nb:
            return x
        raise SolverError("sparse solve did not reach the residual bound "
                          f"({np.linalg.norm(rhs - self.K @ x) / nb:.3e} relative)")


def solve_sparse_spd(K, rhs):
    """Solve ``K x = rhs`` for SPD ``K`` with ``||K x - rhs|| <= 1e-10 ||rhs||``."""
    return SPDFactor(K).solve(rhs)


def sherman_morrison_solve(Ksp, b, fz, rz, factor=None):
    """Solve ``(Ksp + b fz fz^T) dz = rz`` with two sparse solves.

    ``factor`` may be a prepared :class:`SPDFactor` of ``Ksp``.
    """
    fac = factor if factor is not None else SPDFactor(Ksp)
    y = fac.solve(rz)
    if b == 0.0 or not np.any(fz):
        return y
    x = fac.solve(fz)
    denom = 1.0 + b * float(fz @ x)
    if abs(denom) < 1e-12:
        raise RankOneSingularityError(f"Sherman-Morrison denominator {denom:.3e}")
    return y - x * (b * float(fz @ y) / denom)


@dataclass
class NewtonResult:
    x: np.ndarray
    iters: int
    history: list


def _line_search(x, d, r, m0, merit):
    """Backtracking on ``merit`` along ``x - s d``; returns the accepted point."""
    slope = float(r @ d)
    slack = 1e-12 * max(1.0, abs(m0))
    s = 1.0
    for _ in range(30):
        xn = x - s * d
        mn = merit(xn)
        if np.isfinite(mn) and mn <= m0 - 1e-4 * s * slope + slack:
            return xn, s
        s *= 0.5
    return None, 0.0


def newton(x0, evaluate, merit, tol_rel=1e-8, atol=1e-12, max_it=25, stage="newton"):
    """Damped Newton for a convex merit function.

    ``evaluate(x)`` returns ``(r, solve)`` where ``r`` is the gradient of the
    merit and ``solve()`` returns the Newton direction ``K^-1 r``.  The
    iteration count is the number of linear solves; at least one is done.
    Converged when ``||r|| <= max(tol_rel ||r0||, atol)`` or when the update
    falls below round-off relative to ``x``.
    """
    x = np.array(x0, dtype=float)
    r, solve = evaluate(x)
    r0 = np.linalg.norm(r)
    tol = max(tol_rel * r0, atol)
    hist = [r0]
    it = 0
    m0 = merit(x)
    while True:
        if it >= max_it:
            raise NonConvergenceError(
                f"{stage} Newton did not converge in {max_it} iterations "
                f"(residual {hist[-1]:.3e}, target {tol:.3e})", hist, stage=stage)
        d = solve()
        it += 1
        xn, s = _line_search(x, d, r, m0, merit)
        if xn is None:
            # merit flat to round-off: accept the full step if it does not hurt r
            xn = x - d
            rn, _ = evaluate(xn)
            if np.linalg.norm(rn) > hist[-1]:
                if hist[-1] <= 1e3 * tol:
                    return NewtonResult(x, it, hist)
                raise NonConvergenceError(
                    f"{stage} line search failed (residual {hist[-1]:.3e})", hist, stage=stage)
            s = 1.0
        step = s * np.linalg.norm(d)
        x = xn
        m0 = merit(x)
        r, solve = evaluate(x)
        hist.append(np.linalg.norm(r))
        if hist[-1] <= tol or step <= 1e-14 * max(1.0, np.linalg.norm(x)):
            return NewtonResult(x, it, hist)


def newton_solve_u(mesh, u, z, params, fixed, f_ext=None, tol_rel=1e-8, atol=1e-12, max_it=25):
    """Equilibrium at fixed ``z``; ``u`` carries the prescribed values on ``fixed``.

    Returns ``(u, iters, history)``.
    """
    n = 2 * mesh.n_nodes
    free = np.setdiff1d(np.arange(n), fixed)
    fe = np.zeros(n) if f_ext is None else f_ext
    base = np.array(u, dtype=float)

    def full(xf):
        v = base.copy()
        v[free] = xf
        return v

    def merit(xf):
        return total_energy(mesh, full(xf), z, params, fe)

    def evaluate(xf):
        v = full(xf)
        r = (internal_force(mesh, v, z, params) - fe)[free]

        def solve():
            K = stiffness_uu(mesh, v, z, params)[free][:, free]
            return solve_sparse_spd(K, r)
        return r, solve

    res = newton(base[free], evaluate, merit, tol_rel, atol, max_it, stage="u")
    return full(res.x), res.iters, res.history


def newton_solve_z(sub, z0, tol_rel=1e-8, atol=1e-12, max_it=25):
    """Minimise the phase-field augmented Lagrangian ``sub`` (a ZSubproblem).

    Each iteration uses one factorisation of the sparse tangent and the
    Sherman-Morrison combination for the rank-one part.
    """

    def evaluate(z):
        r, Ksp, b, fz, _ = sub.pieces(z)

        def solve():
            return sherman_morrison_solve(Ksp, b, fz, r)
        return r, solve

    res = newton(z0, evaluate, sub.merit, tol_rel, atol, max_it, stage="z")
    return res.x, res.iters, res.history
