"""Crack-conforming triangulations: data model, file I/O, validation, and
red refinement with curve snapping.

A crack mesh is an ordinary triangle mesh whose crack is a *slit*: every
crack vertex except the tip exists twice, once per face, at identical
coordinates.  Triangles on the upper side reference the upper copies and
triangles on the lower side the lower copies, so the faces can open
independently.  Boundary edges carry string markers; the two crack faces are
marked ``crack_upper`` and ``crack_lower`` and each face's edges form a chain
from the tip to the mouth.

File format (``sifmesh 1``)::

    sifmesh 1
    nodes N
    x y                 (N lines)
    triangles M
    i j k tag           (M lines, counterclockwise)
    edges E
    i j marker          (E lines)
    tip i
    pairs P
    i_upper i_lower     (P lines)

Indices are 0-based; ``#`` starts a comment anywhere on a line.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import CrackCurve

EDGE_MARKERS = (
    "outer_left", "outer_right", "outer_top", "outer_bottom",
    "symmetry", "crack_upper", "crack_lower",
)
CRACK_MARKERS = ("crack_upper", "crack_lower")


class MeshError(Exception):
    """Raised for malformed mesh files or inconsistent mesh topology."""


@dataclass
class CrackMesh:
    nodes: np.ndarray          # (N, 2) float
    triangles: np.ndarray      # (M, 3) int, counterclockwise
    tri_tags: np.ndarray       # (M,) int
    edges: np.ndarray          # (E, 2) int
    edge_markers: list         # E marker strings
    tip: int
    pairs: np.ndarray          # (P, 2) int, columns upper/lower

    def copy(self):
        return replace(
            self,
            nodes=self.nodes.copy(),
            triangles=self.triangles.copy(),
            tri_tags=self.tri_tags.copy(),
            edges=self.edges.copy(),
            edge_markers=list(self.edge_markers),
            pairs=self.pairs.copy(),
        )

    # -- derived topology -------------------------------------------------

    def crack_chain(self, side):
        """Ordered node list tip -> mouth along one face (side +1/-1)."""
        marker = "crack_upper" if side > 0 else "crack_lower"
        adj = {}
        for (a, b), m in zip(self.edges, self.edge_markers):
            if m == marker:
                adj.setdefault(int(a), []).append(int(b))
                adj.setdefault(int(b), []).append(int(a))
        if not adj:
            raise MeshError(f"mesh has no {marker} edges")
        if self.tip not in adj:
            raise MeshError(f"{marker} chain does not reach the tip")
        chain = [self.tip]
        prev = None
        while True:
            nxt = [n for n in adj[chain[-1]] if n != prev]
            if len(nxt) == 0:
                break
            if len(nxt) > 1:
                raise MeshError(f"{marker} edges branch at node {chain[-1]}")
            prev = chain[-1]
            chain.append(nxt[0])
        if len(chain) != len(adj):
            raise MeshError(f"{marker} edges are not a single chain")
        return chain

    def node_side(self):
        """Per-node face membership: +1 upper copy, -1 lower copy, 0 bulk/tip."""
        side = np.zeros(len(self.nodes), dtype=int)
        side[self.pairs[:, 0]] = +1
        side[self.pairs[:, 1]] = -1
        return side

    def triangle_side(self):
        """Per-triangle face adjacency: +1 touches upper copies, -1 lower, 0 neither."""
        ns = self.node_side()
        ts = ns[self.triangles]
        out = np.zeros(len(self.triangles), dtype=int)
        out[np.any(ts > 0, axis=1)] = +1
        out[np.any(ts < 0, axis=1)] = -1
        both = np.any(ts > 0, axis=1) & np.any(ts < 0, axis=1)
        if np.any(both):
            raise MeshError("triangle references both upper and lower crack copies")
        return out

    def boundary_edge_triangle(self):
        """Map from sorted boundary edge (a, b) to (triangle index, local edge)."""
        owner = {}
        for t, tri in enumerate(self.triangles):
            for loc, (a, b) in enumerate(((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))):
                key = (min(int(a), int(b)), max(int(a), int(b)))
                owner.setdefault(key, []).append((t, loc))
        return owner

    def h_max(self):
        v = self.nodes[self.triangles]
        e = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
        return float(np.max(np.linalg.norm(e, axis=2)))


# ---------------------------------------------------------------------------
# file I/O


def _tokens(path):
    """Token stream with line numbers, comments stripped."""
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield ln, line.split()


def load_mesh(path) -> CrackMesh:
    """Load a ``sifmesh 1`` file; malformed input raises MeshError with the
    offending line number."""
    stream = _tokens(path)

    def need(what):
        try:
            return next(stream)
        except StopIteration:
            raise MeshError(f"{path}: unexpected end of file while reading {what}") from None

    ln, tok = need("header")
    if tok != ["sifmesh", "1"]:
        raise MeshError(f"{path}:{ln}: expected header 'sifmesh 1'")

    def section(name, width, cast):
        ln, tok = need(f"'{name}' count")
        if len(tok) != 2 or tok[0] != name:
            raise MeshError(f"{path}:{ln}: expected '{name} <count>'")
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshError(f"{path}:{ln}: bad count {tok[1]!r}") from None
        rows = []
        for _ in range(count):
            ln, tok = need(f"{name} entry")
            if len(tok) != width:
                raise MeshError(f"{path}:{ln}: expected {width} fields, got {len(tok)}")
            try:
                rows.append([cast[i](tok[i]) for i in range(width)])
            except ValueError:
                raise MeshError(f"{path}:{ln}: bad value in {name} entry") from None
        return rows

    nodes = np.array(section("nodes", 2, [float, float]), dtype=float).reshape(-1, 2)
    tri_rows = section("triangles", 4, [int, int, int, int])
    triangles = np.array([r[:3] for r in tri_rows], dtype=int).reshape(-1, 3)
    tri_tags = np.array([r[3] for r in tri_rows], dtype=int)
    edge_rows = section("edges", 3, [int, int, str])
    edges = np.array([r[:2] for r in edge_rows], dtype=int).reshape(-1, 2)
    edge_markers = [r[2] for r in edge_rows]
    ln, tok = need("tip")
    if len(tok) != 2 or tok[0] != "tip":
        raise MeshError(f"{path}:{ln}: expected 'tip <index>'")
    tip = int(tok[1])
    pair_rows = section("pairs", 2, [int, int])
    pairs = np.array(pair_rows, dtype=int).reshape(-1, 2)
    try:
        ln, tok = next(stream)
    except StopIteration:
        pass
    else:
        raise MeshError(f"{path}:{ln}: trailing content after mesh sections")

    mesh = CrackMesh(nodes, triangles, tri_tags, edges, edge_markers, tip, pairs)
    validate_mesh(mesh)
    return mesh


def save_mesh(mesh: CrackMesh, path):
    with open(path, "w") as f:
        f.write("sifmesh 1\n")
        f.write(f"nodes {len(mesh.nodes)}\n")
        for x, y in mesh.nodes:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"triangles {len(mesh.triangles)}\n")
        for (i, j, k), tag in zip(mesh.triangles, mesh.tri_tags):
            f.write(f"{i} {j} {k} {tag}\n")
        f.write(f"edges {len(mesh.edges)}\n")
        for (i, j), m in zip(mesh.edges, mesh.edge_markers):
            f.write(f"{i} {j} {m}\n")
        f.write(f"tip {mesh.tip}\n")
        f.write(f"pairs {len(mesh.pairs)}\n")
        for i, j in mesh.pairs:
            f.write(f"{i} {j}\n")


def load_template(name) -> CrackMesh:
    """Load one of the shipped template meshes (``arc`` or ``power``)."""
    ref = importlib.resources.files("sifkit") / "templates" / f"{name}.sifmesh"
    with importlib.resources.as_file(ref) as p:
        return load_mesh(p)


# ---------------------------------------------------------------------------
# validation


def validate_mesh(mesh: CrackMesh, curve: CrackCurve = None, tol=1e-12):
    """Topological (and, with a curve, geometric) consistency checks.

    Raises MeshError on the first violation.  With ``curve`` the crack-face
    vertices must sit on the curve to within ``tol`` (absolute 1e-3 rejects
    grossly off-curve nodes even without a curve, via pair coincidence).
    """
    n = len(mesh.nodes)
    if np.any(mesh.triangles < 0) or np.any(mesh.triangles >= n):
        raise MeshError("triangle references node out of range")
    if np.any(mesh.edges < 0) or np.any(mesh.edges >= n):
        raise MeshError("edge references node out of range")
    if not 0 <= mesh.tip < n:
        raise MeshError("tip index out of range")
    if len(mesh.edges) != len(mesh.edge_markers):
        raise MeshError("edge/marker count mismatch")
    for m in mesh.edge_markers:
        if m not in EDGE_MARKERS:
            raise MeshError(f"unknown edge marker {m!r}")

    v = mesh.nodes[mesh.triangles]
    area2 = ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
             - (v[:, 1, 1] - v[:, 0, 1]) * (v[:, 2, 0] - v[:, 0, 0]))
    bad = np.nonzero(area2 <= 0.0)[0]
    if bad.size:
        raise MeshError(f"triangle {bad[0]} is not counterclockwise (or degenerate)")

    # every marked edge must be a boundary edge of exactly one triangle, and
    # every triangle edge used once (boundary) must be marked
    owner = mesh.boundary_edge_triangle()
    marked = {}
    for idx, ((a, b), m) in enumerate(zip(mesh.edges, mesh.edge_markers)):
        key = (min(int(a), int(b)), max(int(a), int(b)))
        if key in marked:
            raise MeshError(f"edge {key} marked twice")
        marked[key] = m
        if key not in owner:
            raise MeshError(f"marked edge {key} is not an edge of any triangle")
        if len(owner[key]) != 1:
            raise MeshError(f"marked edge {key} is shared by two triangles")
    for key, tris in owner.items():
        if len(tris) == 1 and key not in marked:
            raise MeshError(f"boundary edge {key} has no marker")
        if len(tris) > 2:
            raise MeshError(f"edge {key} appears in more than two triangles")

    # crack pairing
    if np.any(mesh.pairs == mesh.tip):
        raise MeshError("tip node must not be duplicated into a pair")
    pu, pl = mesh.pairs[:, 0], mesh.pairs[:, 1]
    if len(np.unique(np.concatenate([pu, pl]))) != 2 * len(mesh.pairs):
        raise MeshError("pair lists overlap")
    if not np.allclose(mesh.nodes[pu], mesh.nodes[pl], atol=1e-3):
        raise MeshError("paired crack nodes do not coincide")
    if not np.allclose(mesh.nodes[pu], mesh.nodes[pl], atol=tol):
        raise MeshError("paired crack nodes coincide only loosely")

    up = mesh.crack_chain(+1)
    lo = mesh.crack_chain(-1)
    if len(up) != len(lo):
        raise MeshError("crack face chains have different lengths")
    upper_set = {int(i) for i in pu}
    lower_set = {int(i) for i in pl}
    if set(up[1:]) != upper_set:
        raise MeshError("upper chain nodes do not match the pair list")
    if set(lo[1:]) != lower_set:
        raise MeshError("lower chain nodes do not match the pair list")
    pair_of = {int(a): int(b) for a, b in mesh.pairs}
    for a, b in zip(up[1:], lo[1:]):
        if pair_of[int(a)] != int(b):
            raise MeshError("face chains walk through unpaired nodes")

    mesh.triangle_side()  # raises if a triangle mixes sides

    if curve is not None:
        for node in up[1:]:
            r = np.linalg.norm(mesh.nodes[node] - curve.tip)
            p = curve.chord_point(min(r, curve.chord_limit))
            if np.linalg.norm(mesh.nodes[node] - p) > tol * max(1.0, r):
                raise MeshError(f"crack node {node} is off the curve")
        if np.linalg.norm(mesh.nodes[mesh.tip] - curve.tip) > tol:
            raise MeshError("mesh tip does not coincide with the curve tip")
        rs = np.linalg.norm(mesh.nodes[up] - curve.tip, axis=1)
        if np.any(np.diff(rs) <= 0):
            raise MeshError("crack chain is not monotone in chord distance")


# ---------------------------------------------------------------------------
# refinement


def refine(mesh: CrackMesh, curve: CrackCurve = None) -> CrackMesh:
    """Red (1-to-4) refinement.

    Each triangle is split through its edge midpoints; every marked edge
    splits into two edges with the inherited marker.  With a curve, the new
    crack-face midpoints are snapped onto the curve at the mean chord radius
    of their endpoints and duplicated into upper/lower copies.
    """
    nodes = [p for p in mesh.nodes]
    pair_of = {int(a): int(b) for a, b in mesh.pairs}
    pair_of.update({int(b): int(a) for a, b in mesh.pairs})
    chain_up = mesh.crack_chain(+1)
    chain_lo = mesh.crack_chain(-1)
    crack_edges_up = {tuple(sorted((int(a), int(b))))
                      for a, b in zip(chain_up[:-1], chain_up[1:])}
    crack_edges_lo = {tuple(sorted((int(a), int(b))))
                      for a, b in zip(chain_lo[:-1], chain_lo[1:])}

    new_pairs = []
    midpoint = {}

    def snap_point(a, b):
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        if curve is None:
            return 0.5 * (pa + pb)
        ra = np.linalg.norm(pa - curve.tip)
        rb = np.linalg.norm(pb - curve.tip)
        return curve.chord_point(0.5 * (ra + rb))

    def edge_mid(a, b):
        a, b = int(a), int(b)
        key = (min(a, b), max(a, b))
        if key in midpoint:
            return midpoint[key]
        if key in crack_edges_up:
            p = snap_point(*key)
            iu = len(nodes)
            nodes.append(p)
            il = len(nodes)
            nodes.append(p.copy())
            # register the twin on the matching lower edge
            twin = tuple(sorted((pair_of.get(key[0], key[0]), pair_of.get(key[1], key[1]))))
            midpoint[key] = iu
            midpoint[twin] = il
            new_pairs.append((iu, il))
            return iu
        if key in crack_edges_lo:
            # reached before its upper twin: create both through the twin
            twin = tuple(sorted((pair_of.get(key[0], key[0]), pair_of.get(key[1], key[1]))))
            edge_mid(*twin)
            return midpoint[key]
        i = len(nodes)
        nodes.append(0.5 * (np.asarray(mesh.nodes[a]) + np.asarray(mesh.nodes[b])))
        midpoint[key] = i
        return i

    new_tris = []
    new_tags = []
    for (a, b, c), tag in zip(mesh.triangles, mesh.tri_tags):
        mab = edge_mid(a, b)
        mbc = edge_mid(b, c)
        mca = edge_mid(c, a)
        new_tris.extend([(a, mab, mca), (b, mbc, mab), (c, mca, mbc), (mab, mbc, mca)])
        new_tags.extend([tag] * 4)

    new_edges = []
    new_markers = []
    for (a, b), m in zip(mesh.edges, mesh.edge_markers):
        mid = edge_mid(a, b)
        new_edges.extend([(int(a), mid), (mid, int(b))])
        new_markers.extend([m, m])

    out = CrackMesh(
        nodes=np.array(nodes, dtype=float),
        triangles=np.array(new_tris, dtype=int),
        tri_tags=np.array(new_tags, dtype=int),
        edges=np.array(new_edges, dtype=int),
        edge_markers=new_markers,
        tip=mesh.tip,
        pairs=np.vstack([mesh.pairs, np.array(new_pairs, dtype=int)])
        if new_pairs else mesh.pairs.copy(),
    )
    validate_mesh(out, curve)
    return out


def crack_polyline_deviation(mesh: CrackMesh, curve: CrackCurve, samples=16):
    """Max distance from the upper-face polyline to the exact curve."""
    chain = mesh.crack_chain(+1)
    worst = 0.0
    ts = np.linspace(0.0, 1.0, samples)
    for a, b in zip(chain[:-1], chain[1:]):
        pa, pb = mesh.nodes[a], mesh.nodes[b]
        seg = pa[None, :] * (1 - ts)[:, None] + pb[None, :] * ts[:, None]
        r = np.linalg.norm(seg - curve.tip, axis=1)
        r = np.clip(r, 0.0, curve.chord_limit)
        on_curve = curve.chord_point(r)
        worst = max(worst, float(np.max(np.linalg.norm(seg - on_curve, axis=1))))
    return worst
