"""Distance between force-displacement curves."""
from __future__ import annotations

import numpy as np


def _one_sided(pa, pb, chunk=256):
    best = np.full(len(pa), np.inf)
    if len(pb) == 1:
        return np.linalg.norm(pa - pb[0], axis=1)
    p, d = pb[:-1], np.diff(pb, axis=0)
    L = np.einsum("ij,ij->i", d, d)
    L[L == 0] = 1.0
    for i in range(0, len(pa), chunk):
        x = pa[i:i + chunk, None, :]
        s = np.clip(np.einsum("asj,sj->as", x - p, d) / L, 0.0, 1.0)
        dist = np.linalg.norm(x - (p + s[..., None] * d), axis=-1)
        best[i:i + chunk] = dist.min(axis=1)
    return best


def graph_distance(u_a, F_a, u_b, F_b):
    """Symmetric Hausdorff distance between two polylines ``(u, F)``.

    Both curves are scaled by the common maxima of ``|u|`` and ``|F|`` first,
    so the result is a relative error.  Unlike a sup-norm of ``F(u)`` it
    stays small when a near-vertical load drop sits at slightly shifted
    displacements in the two runs.
    """
    a = np.column_stack([u_a, F_a]).astype(float)
    b = np.column_stack([u_b, F_b]).astype(float)
    if not (len(a) and len(b)):
        raise ValueError("curves must be non-empty")
    scale = np.maximum(np.abs(np.vstack([a, b])).max(axis=0), np.finfo(float).tiny)
    a, b = a / scale, b / scale
    return float(max(_one_sided(a, b).max(), _one_sided(b, a).max()))


def sup_difference(u_a, F_a, u_b, F_b, n=2001):
    """Sup of ``|F_a(u) - F_b(u)| / max|F|`` by interpolation on the common range."""
    hi = min(np.max(u_a), np.max(u_b))
    lo = max(np.min(u_a), np.min(u_b))
    uq = np.linspace(lo, hi, n)
    scale = max(np.abs(F_a).max(), np.abs(F_b).max())
    return float(np.max(np.abs(np.interp(uq, u_a, F_a) - np.interp(uq, u_b, F_b))) / scale)
