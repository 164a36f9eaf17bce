"""2D meshes of bilinear quadrilaterals and linear triangles.

Node numbering inside an element is counter-clockwise.  Each element type
is integrated with a single rule for every term (2x2 Gauss for quad4, the
3-point interior rule for tri3) so energies, residuals and norm integrals
are mutually consistent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..errors import InputError

_G = 1.0 / np.sqrt(3.0)
QUAD_POINTS = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
QUAD_WEIGHTS = np.ones(4)
TRI_POINTS = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
TRI_WEIGHTS = np.full(3, 1 / 6)


def quad4_shape(xi):
    """Shape functions and reference gradients at points ``xi`` (nq, 2)."""
    x, y = xi[:, 0], xi[:, 1]
    N = 0.25 * np.stack([(1 - x) * (1 - y), (1 + x) * (1 - y),
                         (1 + x) * (1 + y), (1 - x) * (1 + y)], axis=1)
    dN = 0.25 * np.stack([
        np.stack([-(1 - y), -(1 - x)], axis=1),
        np.stack([(1 - y), -(1 + x)], axis=1),
        np.stack([(1 + y), (1 + x)], axis=1),
        np.stack([-(1 + y), (1 - x)], axis=1),
    ], axis=1)
    return N, dN


def tri3_shape(xi):
    x, y = xi[:, 0], xi[:, 1]
    N = np.stack([1 - x - y, x, y], axis=1)
    dN = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]),
                         (xi.shape[0], 3, 2)).copy()
    return N, dN


@dataclass
class ElementGroup:
    """Quadrature data for all elements of one type.

    Attributes
    ----------
    conn : (ne, nen) int array
    N : (nq, nen) shape functions at quadrature points
    dN : (ne, nq, nen, 2) physical gradients
    w : (ne, nq) quadrature weight times Jacobian determinant
    ids : (ne,) element ids from the input
    """

    kind: str
    conn: np.ndarray
    N: np.ndarray
    dN: np.ndarray
    w: np.ndarray
    ids: np.ndarray

    @property
    def nen(self):
        return self.conn.shape[1]

    def values(self, nodal):
        """Interpolate a nodal scalar field to quadrature points, (ne, nq)."""
        return nodal[self.conn] @ self.N.T

    def gradients(self, nodal):
        """Gradient of a nodal scalar field at quadrature points, (ne, nq, 2)."""
        return np.einsum("eqad,ea->eqd", self.dN, nodal[self.conn])

    @cached_property
    def B(self):
        """Voigt strain operator (ne, nq, 3, 2*nen) for [exx, eyy, 2exy]."""
        ne, nq, nen, _ = self.dN.shape
        B = np.zeros((ne, nq, 3, 2 * nen))
        B[:, :, 0, 0::2] = self.dN[..., 0]
        B[:, :, 1, 1::2] = self.dN[..., 1]
        B[:, :, 2, 0::2] = self.dN[..., 1]
        B[:, :, 2, 1::2] = self.dN[..., 0]
        return B

    @cached_property
    def NN(self):
        """Products ``N_a N_b`` at quadrature points, (nq, nen*nen)."""
        return np.einsum("qa,qb->qab", self.N, self.N).reshape(self.N.shape[0], -1)

    @cached_property
    def GG(self):
        """``w grad N_a . grad N_b`` summed over quadrature points, (ne, nen, nen)."""
        return np.einsum("eq,eqad,eqbd->eab", self.w, self.dN, self.dN, optimize=True)

    def mass_blocks(self, coef):
        """Element blocks of ``int coef N_a N_b`` for quadrature weights ``coef`` (ne, nq)."""
        nen = self.nen
        return (coef @ self.NN).reshape(-1, nen, nen)

    @cached_property
    def vdofs(self):
        c = self.conn
        return np.stack([2 * c, 2 * c + 1], axis=2).reshape(c.shape[0], -1)


class SparsePattern:
    """Fixed COO pattern summed into CSR by precomputed index maps."""

    def __init__(self, blocks, n):
        rows = np.concatenate([np.repeat(d, d.shape[1], axis=1).ravel() for d in blocks])
        cols = np.concatenate([np.tile(d, (1, d.shape[1])).ravel() for d in blocks])
        self.n = n
        key = rows.astype(np.int64) * n + cols
        uniq, self._slot = np.unique(key, return_inverse=True)
        r, c = np.divmod(uniq, n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        self.indptr = np.cumsum(indptr)
        self.indices = c
        self.nnz = uniq.size

    def values(self, blocks):
        """Summed CSR data array for the element blocks."""
        data = np.concatenate([b.reshape(-1) for b in blocks])
        return np.bincount(self._slot, weights=data, minlength=self.nnz)

    def matrix(self, vals):
        return sp.csr_matrix((vals, self.indices, self.indptr), shape=(self.n, self.n))

    def assemble(self, blocks):
        """Sum element blocks (list of (ne, k, k) arrays) into a CSR matrix."""
        return self.matrix(self.values(blocks))

    @cached_property
    def diagonal_slots(self):
        """Position of each diagonal entry in the CSR data array."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        slots = np.full(self.n, -1)
        hit = rows == self.indices
        slots[rows[hit]] = np.where(hit)[0]
        return slots


@dataclass
class Mesh:
    """Nodes, quad4/tri3 connectivity and named node sets.

    Edge sets used for tractions are derived from node sets: an element edge
    belongs to a set when both of its end nodes do.
    """

    nodes: np.ndarray
    quads: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), dtype=int))
    tris: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=int))
    node_sets: dict = field(default_factory=dict)
    quad_ids: np.ndarray | None = None
    tri_ids: np.ndarray | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.quads = np.asarray(self.quads, dtype=int).reshape(-1, 4)
        self.tris = np.asarray(self.tris, dtype=int).reshape(-1, 3)
        self.node_sets = {k: np.asarray(v, dtype=int) for k, v in self.node_sets.items()}
        if self.quad_ids is None:
            self.quad_ids = np.arange(len(self.quads))
        if self.tri_ids is None:
            self.tri_ids = np.arange(len(self.quads), len(self.quads) + len(self.tris))
        self.validate()

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return len(self.quads) + len(self.tris)

    def validate(self):
        n = self.n_nodes
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise InputError("nodes must be an (n, 2) array")
        for name, conn in (("quad4", self.quads), ("tri3", self.tris)):
            if conn.size and (conn.min() < 0 or conn.max() >= n):
                raise InputError(f"{name} connectivity references a missing node")
        for name, ids in self.node_sets.items():
            if ids.size and (ids.min() < 0 or ids.max() >= n):
                raise InputError(f"node set {name!r} references a missing node")
        for g in self.groups:
            bad = np.where(np.any(g.w <= 0.0, axis=1))[0]
            if bad.size:
                raise InputError(
                    f"degenerate or inverted {g.kind} element id {int(g.ids[bad[0]])} "
                    "(non-positive Jacobian)")

    @cached_property
    def groups(self):
        out = []
        for kind, conn, ids, pts, wts, shape in (
                ("quad4", self.quads, self.quad_ids, QUAD_POINTS, QUAD_WEIGHTS, quad4_shape),
                ("tri3", self.tris, self.tri_ids, TRI_POINTS, TRI_WEIGHTS, tri3_shape)):
            if not len(conn):
                continue
            N, dNref = shape(pts)
            X = self.nodes[conn]                                  # (ne, nen, 2)
            J = np.einsum("ead,qai->eqdi", X, dNref)              # dx_d/dxi_i
            det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
            safe = np.where(det == 0.0, 1.0, det)
            Jinv = np.empty_like(J)
            Jinv[..., 0, 0] = J[..., 1, 1] / safe
            Jinv[..., 1, 1] = J[..., 0, 0] / safe
            Jinv[..., 0, 1] = -J[..., 0, 1] / safe
            Jinv[..., 1, 0] = -J[..., 1, 0] / safe
            dN = np.einsum("qai,eqid->eqad", dNref, Jinv)
            out.append(ElementGroup(kind, conn, N, dN, det * wts[None, :], np.asarray(ids)))
        return out

    @cached_property
    def area(self):
        return float(sum(g.w.sum() for g in self.groups))

    @cached_property
    def scalar_pattern(self):
        return SparsePattern([g.conn for g in self.groups], self.n_nodes)

    @cached_property
    def vector_pattern(self):
        return SparsePattern([g.vdofs for g in self.groups], 2 * self.n_nodes)

    def node_set(self, name):
        try:
            return self.node_sets[name]
        except KeyError:
            raise InputError(f"unknown node set {name!r}") from None

    @cached_property
    def boundary_edges(self):
        """Edges used by exactly one element, as (m, 2) node pairs."""
        edges = []
        for conn in (self.quads, self.tris):
            if len(conn):
                k = conn.shape[1]
                for a in range(k):
                    edges.append(np.stack([conn[:, a], conn[:, (a + 1) % k]], axis=1))
        if not edges:
            return np.zeros((0, 2), dtype=int)
        e = np.concatenate(edges)
        key = np.sort(e, axis=1)
        uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return e[cnt[inv.ravel()] == 1]

    def edge_set(self, name):
        """Boundary edges whose two nodes both lie in node set ``name``."""
        ids = set(self.node_set(name).tolist())
        e = self.boundary_edges
        mask = np.array([a in ids and b in ids for a, b in e], dtype=bool)
        return e[mask] if len(e) else e


# ----------------------------------------------------------------------------
# plain-text mesh format


def load_mesh(path):
    """Read the ``N``/``E``/``S`` line format.

    ``N <id> <x> <y>``, ``E <id> quad4|tri3 <n1> ...`` and
    ``S <name> <id> ...``; ``#`` starts a comment.  Ids are arbitrary
    integers and are remapped to contiguous indices.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read mesh file {path}: {exc}") from exc
    node_ids, coords = [], []
    elems = []
    sets = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "N":
                if len(tok) != 4:
                    raise ValueError("expected N <id> <x> <y>")
                node_ids.append(int(tok[1]))
                coords.append((float(tok[2]), float(tok[3])))
            elif tok[0] == "E":
                kind = tok[2]
                nen = {"quad4": 4, "tri3": 3}.get(kind)
                if nen is None:
                    raise ValueError(f"unknown element type {kind!r}")
                if len(tok) != 3 + nen:
                    raise ValueError(f"{kind} needs {nen} nodes")
                elems.append((int(tok[1]), kind, [int(t) for t in tok[3:]]))
            elif tok[0] == "S":
                if len(tok) < 2:
                    raise ValueError("expected S <name> <ids...>")
                sets.setdefault(tok[1], []).extend(int(t) for t in tok[2:])
            else:
                raise ValueError(f"unknown record {tok[0]!r}")
        except (ValueError, IndexError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    if len(set(node_ids)) != len(node_ids):
        raise InputError(f"{path}: duplicate node ids")
    index = {nid: i for i, nid in enumerate(node_ids)}

    def remap(ids, what):
        try:
            return [index[i] for i in ids]
        except KeyError as exc:
            raise InputError(f"{path}: {what} references unknown node {exc.args[0]}") from None

    quads, qids, tris, tids = [], [], [], []
    for eid, kind, conn in elems:
        if kind == "quad4":
            quads.append(remap(conn, f"element {eid}"))
            qids.append(eid)
        else:
            tris.append(remap(conn, f"element {eid}"))
            tids.append(eid)
    node_sets = {k: np.array(remap(v, f"set {k}"), dtype=int) for k, v in sets.items()}
    return Mesh(np.array(coords).reshape(-1, 2), np.array(quads, dtype=int).reshape(-1, 4),
                np.array(tris, dtype=int).reshape(-1, 3), node_sets,
                np.array(qids, dtype=int), np.array(tids, dtype=int))


def save_mesh(mesh, path):
    lines = [f"N {i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    for eid, conn in zip(mesh.quad_ids, mesh.quads):
        lines.append(f"E {eid} quad4 " + " ".join(map(str, conn)))
    for eid, conn in zip(mesh.tri_ids, mesh.tris):
        lines.append(f"E {eid} tri3 " + " ".join(map(str, conn)))
    for name, ids in mesh.node_sets.items():
        lines.append(f"S {name} " + " ".join(map(str, ids)))
    Path(path).write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# generators


def rectangle(xs, ys):
    """Tensor-product quad mesh on the grid lines ``xs`` x ``ys``.

    Node sets ``left``, ``right``, ``bottom``, ``top`` are attached.
    """
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange(nx * ny).reshape(ny, nx)
    quads = np.stack([idx[:-1, :-1], idx[:-1, 1:], idx[1:, 1:], idx[1:, :-1]], axis=2).reshape(-1, 4)
    sets = {"left": idx[:, 0], "right": idx[:, -1], "bottom": idx[0, :], "top": idx[-1, :]}
    return Mesh(nodes, quads, node_sets=sets)


def _graded(a, b, h_a, h_b):
    """Grid from a to b whose spacing varies geometrically from h_a to h_b."""
    L = b - a
    if np.isclose(h_a, h_b):
        n = max(1, int(round(L / h_a)))
        return np.linspace(a, b, n + 1)
    # number of cells with a geometric ratio r
    n = max(1, int(round(2 * L / (h_a + h_b))))
    r = (h_b / h_a) ** (1.0 / max(n - 1, 1))
    h = h_a * r ** np.arange(n)
    h *= L / h.sum()
    return np.concatenate([[a], a + np.cumsum(h)])


def ct_like_mesh(width=1.0, height=1.0, notch=0.5, h_fine=0.02, h_coarse=0.08,
                 band=0.1):
    """Notched square loaded in opening mode (a compact-tension stand-in).

    A straight slit runs from the middle of the top edge down to depth
    ``notch``; nodes on the slit are duplicated so its faces separate.  The
    ligament below the slit is refined to ``h_fine`` inside a vertical band of
    half-width ``band``.  Sets: ``left``, ``right``, ``bottom``, ``top``,
    ``anchor`` (bottom-left corner), ``tip``.
    """
    xc = 0.5 * width
    xs = np.concatenate([
        _graded(0.0, xc - band, h_coarse, h_fine)[:-1],
        np.linspace(xc - band, xc + band, int(round(2 * band / h_fine)) + 1)[:-1],
        xc + band + (xc - band) - _graded(0.0, xc - band, h_coarse, h_fine)[::-1],
    ])
    y_tip = height - notch
    h_lig = 1.25 * h_fine
    ys = np.concatenate([
        np.linspace(0.0, y_tip, int(round(y_tip / h_lig)) + 1)[:-1],
        _graded(y_tip, height, h_lig, 2.5 * h_coarse),
    ])
    m = rectangle(xs, ys)
    nodes, quads = m.nodes.copy(), m.quads.copy()
    nx = len(xs)
    ix = int(np.argmin(np.abs(xs - xc)))
    slit_rows = np.where(ys > y_tip + 1e-12)[0]
    slit = slit_rows * nx + ix
    dup = np.arange(len(nodes), len(nodes) + len(slit))
    nodes = np.vstack([nodes, nodes[slit]])
    remap = dict(zip(slit.tolist(), dup.tolist()))
    centroid_x = nodes[quads].mean(axis=1)[:, 0]
    right_side = centroid_x > xc
    for e in np.where(right_side)[0]:
        quads[e] = [remap.get(int(a), int(a)) for a in quads[e]]
    sets = dict(m.node_sets)
    top = sets["top"]
    sets["top"] = np.concatenate([top, dup[-1:]])
    sets["anchor"] = np.array([0])
    sets["tip"] = np.array([ix + nx * int(np.where(np.isclose(ys, y_tip))[0][0])])
    return Mesh(nodes, quads, node_sets=sets)


def l_shape_mesh(size=500.0, h=19.23):
    """L-shaped panel: ``[0,L]x[0,L/2]`` joined with ``[0,L/2]x[L/2,L]``.

    The re-entrant corner sits at ``(L/2, L/2)``.  Sets: ``bottom`` (clamped
    in the presets), ``load`` (node nearest ``(0.94 L, L/2)`` on the upper
    face of the lower arm), ``corner``.
    """
    n = max(2, int(round(size / h)))
    n += n % 2
    xs = np.linspace(0.0, size, n + 1)
    m = rectangle(xs, xs)
    half = size / 2
    cent = m.nodes[m.quads].mean(axis=1)
    keep = ~((cent[:, 0] > half) & (cent[:, 1] > half))
    quads = m.quads[keep]
    used = np.unique(quads)
    new = -np.ones(len(m.nodes), dtype=int)
    new[used] = np.arange(len(used))
    nodes = m.nodes[used]
    quads = new[quads]
    bottom = np.where(np.isclose(nodes[:, 1], 0.0))[0]
    upper_arm = np.where(np.isclose(nodes[:, 1], half) & (nodes[:, 0] >= half))[0]
    target = np.array([0.94 * size, half])
    load = upper_arm[np.argmin(np.linalg.norm(nodes[upper_arm] - target, axis=1))]
    corner = np.where(np.isclose(nodes[:, 0], half) & np.isclose(nodes[:, 1], half))[0]
    return Mesh(nodes, quads, node_sets={"bottom": bottom, "load": np.array([load]),
                                         "corner": corner})
