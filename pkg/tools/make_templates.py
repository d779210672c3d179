#!/usr/bin/env python3
"""Generate the shipped coarse template meshes (run once; outputs committed).

Strategy: hand-placed boundary, crack, and interior points; scipy Delaunay;
verify every required boundary/crack segment appears as a triangulation edge;
cut the crack slit by duplicating non-tip crack nodes and rewiring lower-side
triangles; derive boundary edges from the cut triangulation and mark them
geometrically; validate; write.
"""

import pathlib
import sys

import numpy as np
from scipy.spatial import Delaunay

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from sifkit.geometry import ArcCrack, CubicCrack, extended_polar  # noqa: E402
from sifkit.meshing import (  # noqa: E402
    CrackMesh,
    crack_polyline_deviation,
    refine,
    save_mesh,
    validate_mesh,
)

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "sifkit" / "templates"


def dedupe(points, tol=1e-9):
    out = []
    for p in points:
        if not any(np.linalg.norm(np.asarray(p) - np.asarray(q)) < tol for q in out):
            out.append(tuple(p))
    return out


def min_curve_distance(p, curve, n=400):
    rs = np.linspace(1e-6, curve.chord_limit, n)
    pts = curve.chord_point(rs)
    return float(np.min(np.linalg.norm(pts - np.asarray(p), axis=1)))


def build(curve, crack_pts, domain, interior_spacing, crack_clear, tip_ring,
          boundary_pts, symmetry_left):
    (x0, x1), (y0, y1) = domain
    pts = list(boundary_pts) + list(crack_pts)

    # interior grid, cleared away from the crack and the tip ring
    xs = np.arange(x0 + interior_spacing, x1 - 1e-9, interior_spacing)
    ys = np.arange(y0 + interior_spacing, y1 - 1e-9, interior_spacing)
    for x in xs:
        for y in ys:
            p = (x, y)
            if min_curve_distance(p, curve) < crack_clear:
                continue
            if np.linalg.norm(np.asarray(p) - curve.tip) < tip_ring * 1.45:
                continue
            pts.append(p)

    # ring of points around the tip for a well-shaped fan
    for ang in np.linspace(0.0, 2.0 * np.pi, 9)[:-1]:
        p = curve.tip + tip_ring * np.array([np.cos(ang), np.sin(ang)])
        if not (x0 + 1e-9 < p[0] < x1 - 1e-9 and y0 + 1e-9 < p[1] < y1 - 1e-9):
            continue
        if min_curve_distance(p, curve) < 0.55 * tip_ring:
            continue
        pts.append(tuple(p))

    pts = dedupe(pts)
    pts_arr = np.array(pts, dtype=float)
    tri = Delaunay(pts_arr)
    simplices = tri.simplices.copy()

    # orient counterclockwise
    v = pts_arr[simplices]
    area2 = ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
             - (v[:, 1, 1] - v[:, 0, 1]) * (v[:, 2, 0] - v[:, 0, 0]))
    flip = area2 < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]

    edge_set = set()
    for s in simplices:
        for a, b in ((s[0], s[1]), (s[1], s[2]), (s[2], s[0])):
            edge_set.add((min(a, b), max(a, b)))

    def node_id(p):
        d = np.linalg.norm(pts_arr - np.asarray(p), axis=1)
        i = int(np.argmin(d))
        assert d[i] < 1e-9, f"point {p} not found"
        return i

    crack_ids = [node_id(p) for p in crack_pts]
    for a, b in zip(crack_ids[:-1], crack_ids[1:]):
        assert (min(a, b), max(a, b)) in edge_set, \
            f"crack segment {pts_arr[a]} -> {pts_arr[b]} not a Delaunay edge"

    # --- cut the slit ---------------------------------------------------
    tip_id = crack_ids[0]
    dup_ids = crack_ids[1:]              # interior crack nodes and the mouth
    nodes = [tuple(p) for p in pts_arr]
    lower_copy = {}
    for i in dup_ids:
        lower_copy[i] = len(nodes)
        nodes.append(tuple(pts_arr[i]))

    def tri_side(s):
        c = pts_arr[list(s)].mean(axis=0)
        r, th = extended_polar(curve, c)
        phi = th + curve.secant_angle(r)
        return 1 if phi >= 0 else -1

    new_simplices = []
    for s in simplices:
        s = [int(a) for a in s]
        if any(a in lower_copy for a in s):
            if tri_side(s) < 0:
                s = [lower_copy.get(a, a) for a in s]
        new_simplices.append(s)
    new_simplices = np.array(new_simplices, dtype=int)

    # --- boundary edges of the cut mesh --------------------------------
    count = {}
    for s in new_simplices:
        for a, b in ((s[0], s[1]), (s[1], s[2]), (s[2], s[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    boundary = [k for k, c in count.items() if c == 1]

    nodes_arr = np.array(nodes, dtype=float)
    upper_set = set(dup_ids)
    lower_set = set(lower_copy.values())

    def marker_for(a, b):
        pa, pb = nodes_arr[a], nodes_arr[b]
        on_crack = {a, b} <= (upper_set | {tip_id}) or {a, b} <= (lower_set | {tip_id})
        if on_crack and not (abs(pa[0] - pb[0]) < 1e-12 and
                             (abs(pa[0] - x0) < 1e-12 or abs(pa[0] - x1) < 1e-12)):
            if {a, b} & lower_set:
                return "crack_lower"
            return "crack_upper"
        if abs(pa[0] - x0) < 1e-12 and abs(pb[0] - x0) < 1e-12:
            return "symmetry" if symmetry_left else "outer_left"
        if abs(pa[0] - x1) < 1e-12 and abs(pb[0] - x1) < 1e-12:
            return "outer_right"
        if abs(pa[1] - y0) < 1e-12 and abs(pb[1] - y0) < 1e-12:
            return "outer_bottom"
        if abs(pa[1] - y1) < 1e-12 and abs(pb[1] - y1) < 1e-12:
            return "outer_top"
        raise AssertionError(f"unclassifiable boundary edge {pa} {pb}")

    edges = []
    markers = []
    for a, b in boundary:
        edges.append((a, b))
        markers.append(marker_for(a, b))

    pairs = np.array([[i, lower_copy[i]] for i in dup_ids], dtype=int)
    mesh = CrackMesh(
        nodes=nodes_arr,
        triangles=new_simplices,
        tri_tags=np.zeros(len(new_simplices), dtype=int),
        edges=np.array(edges, dtype=int),
        edge_markers=markers,
        tip=tip_id,
        pairs=pairs,
    )
    validate_mesh(mesh, curve)
    return mesh


def quality(mesh):
    v = mesh.nodes[mesh.triangles]
    angles = []
    for t in v:
        for i in range(3):
            a = t[(i + 1) % 3] - t[i]
            b = t[(i + 2) % 3] - t[i]
            angles.append(np.degrees(np.arccos(
                np.clip(a @ b / np.linalg.norm(a) / np.linalg.norm(b), -1, 1))))
    return min(angles), max(angles)


def make_arc():
    curve = ArcCrack(center=(0.0, 0.0), radius=1.0, tip_angle=0.0,
                     orientation=-1, alpha=0.5 * np.pi)
    domain = ((0.0, 2.0), (-1.5, 0.5))
    angles = np.deg2rad(np.linspace(0.0, -90.0, 9))
    crack_pts = [(np.cos(a), np.sin(a)) for a in angles]
    boundary = []
    for y in np.arange(-1.5, 0.5 + 1e-9, 0.25):
        boundary.append((0.0, y))
        boundary.append((2.0, y))
    for x in np.arange(0.25, 2.0 - 1e-9, 0.25):
        boundary.append((x, -1.5))
        boundary.append((x, 0.5))
    mesh = build(curve, crack_pts, domain, interior_spacing=0.25, crack_clear=0.14,
                 tip_ring=0.18, boundary_pts=boundary, symmetry_left=True)
    return curve, mesh


def make_power():
    curve = CubicCrack()
    domain = ((0.0, 2.0), (-0.25, 1.75))
    xs = [0.0, 0.175, 0.35, 0.475, 0.6, 0.7, 0.8, 0.855, 0.91, 0.955, 1.0]
    crack_pts = [(x, x ** 3) for x in xs[::-1]]   # tip first
    boundary = []
    for y in [-0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75]:
        boundary.append((0.0, y))
    for y in np.arange(-0.25, 1.75 + 1e-9, 0.25):
        boundary.append((2.0, y))
    for x in np.arange(0.25, 2.0 - 1e-9, 0.25):
        boundary.append((x, -0.25))
        boundary.append((x, 1.75))
    mesh = build(curve, crack_pts, domain, interior_spacing=0.25, crack_clear=0.14,
                 tip_ring=0.18, boundary_pts=boundary, symmetry_left=False)
    return curve, mesh


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (curve, mesh) in [("arc", make_arc()), ("power", make_power())]:
        amin, amax = quality(mesh)
        print(f"{name}: {len(mesh.nodes)} nodes, {len(mesh.triangles)} tris, "
              f"h={mesh.h_max():.3f}, angles [{amin:.1f}, {amax:.1f}]")
        dev = crack_polyline_deviation(mesh, curve)
        m = mesh
        for lvl in range(1, 4):
            m = refine(m, curve)
            d = crack_polyline_deviation(m, curve)
            print(f"  refine {lvl}: {len(m.triangles)} tris, h={m.h_max():.4f}, "
                  f"crack dev {d:.2e} (ratio {dev / d:.2f})")
            dev = d
        save_mesh(mesh, OUT / f"{name}.sifmesh")
        print(f"  wrote {OUT / f'{name}.sifmesh'}")


if __name__ == "__main__":
    main()
