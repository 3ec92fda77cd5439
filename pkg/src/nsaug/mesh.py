"""Triangular meshes with tagged boundary facets.

ASCII file layout::

    nodes <nv> triangles <nt> facets <nf>
    x y                       (nv lines)
    i j k                     (nt lines, 0-based)
    i j tag                   (nf lines)

Blank lines and lines starting with ``#`` are ignored.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ParseError, TopologyError

__all__ = [
    "Mesh",
    "read_mesh",
    "write_mesh",
    "rectangle_mesh",
    "unit_square_mesh",
    "cavity_mesh",
    "cylinder_mesh",
    "CYLINDER_TAGS",
    "CAVITY_TAGS",
]

CYLINDER_TAGS = {"inlet": 1, "outlet": 2, "sym": 3, "cyl_wall": 4, "jet1": 5, "jet2": 6}
CAVITY_TAGS = {"lid": 1, "jet1": 2, "jet2": 3, "jet3": 4, "outlet": 5, "wall": 6}

_LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming 2D triangulation.

    Attributes
    ----------
    nodes : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    facets : (nf, 2) int array of boundary edges
    facet_tags : (nf,) int array
    tag_names : dict mapping a name to its integer tag (optional)
    """

    nodes: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    tag_names: dict = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.ascontiguousarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "triangles", np.ascontiguousarray(self.triangles, dtype=np.int64))
        object.__setattr__(
            self, "facets", np.ascontiguousarray(self.facets, dtype=np.int64).reshape(-1, 2)
        )
        object.__setattr__(self, "facet_tags", np.asarray(self.facet_tags, dtype=np.int64).ravel())
        if self.tag_names is None:
            object.__setattr__(self, "tag_names", {})

    @property
    def nv(self):
        return self.nodes.shape[0]

    @property
    def nt(self):
        return self.triangles.shape[0]

    @cached_property
    def signed_areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def _edge_data(self):
        tri_edges = np.sort(self.triangles[:, _LOCAL_EDGES], axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(
            tri_edges, axis=0, return_inverse=True, return_counts=True
        )
        return edges, inverse.reshape(-1, 3), counts

    @property
    def edges(self):
        """Unique edges as sorted vertex pairs, shape (ne, 2)."""
        return self._edge_data[0]

    @property
    def cell_edges(self):
        """Edge index of local edges (0-1, 1-2, 2-0) per triangle, shape (nt, 3)."""
        return self._edge_data[1]

    @property
    def boundary_edges(self):
        edges, _, counts = self._edge_data
        return edges[counts == 1]

    def edge_index(self, pairs):
        """Map vertex pairs (any order) to edge indices; -1 where absent."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
        edges = self.edges
        key_e = edges[:, 0] * self.nv + edges[:, 1]
        key_p = pairs[:, 0] * self.nv + pairs[:, 1]
        pos = np.searchsorted(key_e, key_p)
        pos = np.clip(pos, 0, len(key_e) - 1)
        return np.where(key_e[pos] == key_p, pos, -1)

    @cached_property
    def facet_cells(self):
        """For each facet: (triangle index, local edge index 0..2)."""
        eidx = self.edge_index(self.facets)
        flat = self.cell_edges.ravel()
        order = np.argsort(flat, kind="stable")
        pos = np.searchsorted(flat[order], eidx)
        hit = order[pos]
        return np.column_stack([hit // 3, hit % 3])

    def facets_with(self, tags):
        """Indices of facets carrying any of ``tags`` (int, name, or iterable)."""
        from .errors import UnknownTag

        if isinstance(tags, (int, np.integer, str)):
            tags = [tags]
        ids = []
        for t in tags:
            if isinstance(t, str):
                if t not in self.tag_names:
                    raise UnknownTag(t)
                t = self.tag_names[t]
            if not np.any(self.facet_tags == t):
                raise UnknownTag(t)
            ids.append(int(t))
        return np.flatnonzero(np.isin(self.facet_tags, ids))

    def validate(self):
        """Check index ranges, orientation and facet/boundary consistency."""
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= self.nv):
            raise TopologyError("triangle references a node out of range")
        if self.facets.size and (self.facets.min() < 0 or self.facets.max() >= self.nv):
            raise TopologyError("facet references a node out of range")
        if np.any(self.signed_areas <= 0):
            raise TopologyError("degenerate or clockwise triangle")
        if len(self.facets):
            eidx = self.edge_index(self.facets)
            if np.any(eidx < 0):
                raise TopologyError("facet is not an edge of the triangulation")
            if np.any(self._edge_data[2][eidx] != 1):
                raise TopologyError("facet is an interior edge")
        return self

    def oriented(self):
        """Copy with all triangles made counter-clockwise."""
        tri = self.triangles.copy()
        neg = self.signed_areas < 0
        tri[neg] = tri[neg][:, [0, 2, 1]]
        return Mesh(self.nodes, tri, self.facets, self.facet_tags, dict(self.tag_names))


def read_mesh(path):
    """Parse the ASCII mesh format; orientation is fixed up if needed."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty mesh file")
    head = lines[0].split()
    if len(head) != 6 or head[0::2] != ["nodes", "triangles", "facets"]:
        raise ParseError(f"bad header: {lines[0]!r}")
    try:
        nv, nt, nf = (int(v) for v in head[1::2])
    except ValueError as exc:
        raise ParseError(f"bad header counts: {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != nv + nt + nf:
        raise ParseError(f"expected {nv + nt + nf} data lines, found {len(body)}")

    def rows(chunk, width, conv, what):
        out = []
        for ln in chunk:
            parts = ln.split()
            if len(parts) != width:
                raise ParseError(f"malformed {what} line: {ln!r}")
            try:
                out.append([conv(v) for v in parts])
            except ValueError as exc:
                raise ParseError(f"malformed {what} line: {ln!r}") from exc
        return out

    nodes = np.array(rows(body[:nv], 2, float, "node"), dtype=float).reshape(-1, 2)
    tris = np.array(rows(body[nv : nv + nt], 3, int, "triangle"), dtype=np.int64).reshape(-1, 3)
    fac = np.array(rows(body[nv + nt :], 3, int, "facet"), dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= nv):
        raise TopologyError("triangle references a node out of range")
    if fac.size and (fac[:, :2].min() < 0 or fac[:, :2].max() >= nv):
        raise TopologyError("facet references a node out of range")
    mesh = Mesh(nodes, tris, fac[:, :2], fac[:, 2]).oriented()
    return mesh.validate()


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"nodes {mesh.nv} triangles {mesh.nt} facets {len(mesh.facets)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        for (i, j), t in zip(mesh.facets, mesh.facet_tags):
            fh.write(f"{i} {j} {t}\n")


def _tag_boundary(nodes, triangles, tagger, tag_names):
    mesh = Mesh(nodes, triangles, np.zeros((0, 2), int), np.zeros(0, int)).oriented()
    bnd = mesh.boundary_edges
    tags = tagger(nodes[bnd[:, 0]], nodes[bnd[:, 1]])
    return Mesh(mesh.nodes, mesh.triangles, bnd, tags, dict(tag_names)).validate()


def _grid_triangles(nx, ny, offset=0):
    """Two triangles per cell of an (nx+1) x (ny+1) node grid, row-major in x."""
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    n00 = offset + j * (nx + 1) + i
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1
    t1 = np.stack([n00, n10, n11], axis=-1).reshape(-1, 3)
    t2 = np.stack([n00, n11, n01], axis=-1).reshape(-1, 3)
    return np.concatenate([t1, t2])


def rectangle_mesh(xs, ys, tagger=None, tag_names=None):
    """Structured triangulation of the tensor grid ``xs`` x ``ys``.

    Without a ``tagger``, boundary facets get tags 1 (y = ymin), 2 (x = xmax),
    3 (y = ymax), 4 (x = xmin).
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    tris = _grid_triangles(len(xs) - 1, len(ys) - 1)
    if tagger is None:
        x0, x1, y0, y1 = xs[0], xs[-1], ys[0], ys[-1]

        def tagger(a, b):
            m = 0.5 * (a + b)
            tol = 1e-12 * max(x1 - x0, y1 - y0)
            t = np.zeros(len(m), dtype=np.int64)
            t[np.abs(m[:, 0] - x0) < tol] = 4
            t[np.abs(m[:, 1] - y1) < tol] = 3
            t[np.abs(m[:, 0] - x1) < tol] = 2
            t[np.abs(m[:, 1] - y0) < tol] = 1
            return t

        tag_names = tag_names or {"bottom": 1, "right": 2, "top": 3, "left": 4}
    return _tag_boundary(nodes, tris, tagger, tag_names or {})


def unit_square_mesh(n):
    """Uniform n x n square grid on [0,1]^2 with 2 n^2 triangles."""
    t = np.linspace(0.0, 1.0, n + 1)
    return rectangle_mesh(t, t)


def _segments(breaks, counts):
    pts = [np.linspace(a, b, n + 1)[:-1] for a, b, n in zip(breaks[:-1], breaks[1:], counts)]
    return np.concatenate(pts + [[breaks[-1]]])


def cavity_mesh(level=0):
    """Unit-square cavity mesh with nodes on every boundary-data breakpoint.

    Breakpoints x = 0.06, 0.94 (lid ramps) and y = 0.12, 0.88 (jet ends) are
    mesh lines; each piece is uniform.
    """
    s = 1.0 + 0.5 * level
    xs = _segments([0.0, 0.06, 0.94, 1.0], [max(2, round(3 * s)), round(38 * s), max(2, round(3 * s))])
    ys = _segments([0.0, 0.12, 0.88, 1.0], [max(2, round(5 * s)), round(32 * s), max(2, round(5 * s))])
    T = CAVITY_TAGS

    def tagger(a, b):
        m = 0.5 * (a + b)
        x, y = m[:, 0], m[:, 1]
        tol = 1e-12
        t = np.full(len(m), T["wall"], dtype=np.int64)
        left = np.abs(x) < tol
        right = np.abs(x - 1.0) < tol
        t[np.abs(y - 1.0) < tol] = T["lid"]
        t[left & (y > 0.88)] = T["jet1"]
        t[right & (y > 0.88)] = T["jet2"]
        t[right & (y < 0.12)] = T["jet3"]
        t[left & (y < 0.12)] = T["outlet"]
        return t

    return rectangle_mesh(xs, ys, tagger, T)


def _graded(length, h0, n):
    """Offsets 0 < o_1 < ... < o_n = length with first step h0, geometric growth."""
    if n * h0 >= length:
        q = 1.0
        if n * h0 > length * (1 + 1e-12):
            q = brentq(lambda r: h0 * (1 - r**n) / (1 - r) - length, 1e-6, 1 - 1e-12)
    else:
        q = brentq(lambda r: h0 * (r**n - 1) / (r - 1) - length, 1 + 1e-12, 10.0)
    steps = h0 * q ** np.arange(n) if q != 1.0 else np.full(n, length / n)
    off = np.cumsum(steps)
    off[-1] = length
    return off


def cylinder_mesh(level=0):
    """Channel [0, 30.5] x [0, 16] minus the disc of radius 0.5 at (8, 8).

    An O-grid surrounds the cylinder inside the square [6.5, 9.5]^2; the rest
    of the channel is a tensor-product grid graded away from that square.
    Jet arcs (25 degrees wide, centred at 90 and 270 degrees) start and end
    exactly at mesh nodes.
    """
    s = 1.0 + 0.5 * level
    cx = cy = 8.0
    R, a = 0.5, 1.5
    half_jet = np.deg2rad(12.5)
    n_side, n_jet = round(5 * s), round(4 * s)
    n_q = 2 * n_side + n_jet
    n_rad = round(12 * s)

    top = np.concatenate(
        [
            np.linspace(np.pi / 4, np.pi / 2 - half_jet, n_side + 1)[:-1],
            np.linspace(np.pi / 2 - half_jet, np.pi / 2 + half_jet, n_jet + 1)[:-1],
            np.linspace(np.pi / 2 + half_jet, 3 * np.pi / 4, n_side + 1)[:-1],
        ]
    )
    right = np.linspace(-np.pi / 4, np.pi / 4, n_q + 1)[:-1]
    theta = np.concatenate([right, top, right + np.pi, top + np.pi])

    # square-side coordinates, offsets from the centre; endpoints exact
    side_top = a * np.cos(np.concatenate([top, [3 * np.pi / 4]])) / np.sin(
        np.concatenate([top, [3 * np.pi / 4]])
    )
    side_top[0], side_top[-1] = a, -a
    side_right = a * np.tan(np.concatenate([right, [np.pi / 4]]))
    side_right[0], side_right[-1] = -a, a

    sq = np.empty((len(theta), 2))
    nq = n_q
    sq[:nq] = np.column_stack([np.full(nq, a), side_right[:-1]])
    sq[nq : 2 * nq] = np.column_stack([side_top[:-1], np.full(nq, a)])
    sq[2 * nq : 3 * nq] = np.column_stack([np.full(nq, -a), -side_right[:-1]])
    sq[3 * nq :] = np.column_stack([-side_top[:-1], np.full(nq, -a)])

    circ = R * np.column_stack([np.cos(theta), np.sin(theta)])
    dtheta = np.min(np.diff(np.concatenate([theta, [theta[0] + 2 * np.pi]])))
    frac = np.concatenate([[0.0], _graded(1.0, R * dtheta / (a - R), n_rad)])
    ring = circ[None, :, :] + frac[:, None, None] * (sq - circ)[None, :, :]
    o_nodes = ring.reshape(-1, 2) + [cx, cy]
    nth = len(theta)
    k, j = np.meshgrid(np.arange(nth), np.arange(n_rad), indexing="ij")
    n00 = j * nth + k
    n10 = j * nth + (k + 1) % nth
    n01 = n00 + nth
    n11 = n10 + nth
    o_tris = np.concatenate(
        [np.stack([n00, n10, n11], -1).reshape(-1, 3), np.stack([n00, n11, n01], -1).reshape(-1, 3)]
    )

    centre_x = np.sort(side_top)
    centre_y = np.sort(side_right)
    hx = centre_x[1] - centre_x[0]
    hy = centre_y[1] - centre_y[0]
    n_left, n_right, n_tb = round(8 * s), round(26 * s), round(9 * s)
    xs = np.concatenate(
        [
            (cx - a) - _graded(cx - a, hx, n_left)[::-1],
            cx + centre_x,
            (cx + a) + _graded(30.5 - cx - a, hx, n_right),
        ]
    )
    ys = np.concatenate(
        [(cy - a) - _graded(cy - a, hy, n_tb)[::-1], cy + centre_y, (cy + a) + _graded(16.0 - cy - a, hy, n_tb)]
    )
    xs[0], ys[0] = 0.0, 0.0
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    t_nodes = np.column_stack([X.ravel(), Y.ravel()])
    t_tris = _grid_triangles(len(xs) - 1, len(ys) - 1)
    cen = t_nodes[t_tris].mean(axis=1)
    inside = (np.abs(cen[:, 0] - cx) < a) & (np.abs(cen[:, 1] - cy) < a)
    t_tris = t_tris[~inside]

    all_nodes = np.concatenate([o_nodes, t_nodes])
    all_tris = np.concatenate([o_tris, t_tris + len(o_nodes)])
    # merge coincident nodes by a rounded key but keep the exact coordinates
    _, first, inv = np.unique(np.round(all_nodes, 10), axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    uniq = all_nodes[first]
    used = np.unique(inv[all_tris])
    remap = np.full(len(uniq), -1)
    remap[used] = np.arange(len(used))
    nodes = uniq[used]
    tris = remap[inv[all_tris]]

    T = CYLINDER_TAGS

    def tagger(p, q):
        m = 0.5 * (p + q)
        t = np.zeros(len(m), dtype=np.int64)
        t[np.abs(m[:, 0]) < 1e-9] = T["inlet"]
        t[np.abs(m[:, 0] - 30.5) < 1e-9] = T["outlet"]
        t[(np.abs(m[:, 1]) < 1e-9) | (np.abs(m[:, 1] - 16.0) < 1e-9)] = T["sym"]
        rp = np.hypot(p[:, 0] - cx, p[:, 1] - cy)
        rq = np.hypot(q[:, 0] - cx, q[:, 1] - cy)
        on_cyl = (np.abs(rp - R) < 1e-9) & (np.abs(rq - R) < 1e-9)
        ang = np.mod(np.arctan2(m[:, 1] - cy, m[:, 0] - cx), 2 * np.pi)
        t[on_cyl] = T["cyl_wall"]
        t[on_cyl & (np.abs(ang - np.pi / 2) < half_jet)] = T["jet1"]
        t[on_cyl & (np.abs(ang - 3 * np.pi / 2) < half_jet)] = T["jet2"]
        if np.any(t == 0):
            raise TopologyError("untagged boundary facet in cylinder mesh")
        return t

    return _tag_boundary(nodes, tris, tagger, T)
