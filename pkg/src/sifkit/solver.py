"""Continuous-Galerkin P1/P2 elasticity on crack-slit meshes.

Displacements are vector nodal fields; the slit topology (duplicated face
nodes) makes the crack faces independent without any special dof handling.
For quadratic elements the mid-edge unknowns are keyed by sorted vertex-id
pairs, so the two geometrically coincident crack faces get distinct mid-edge
dofs automatically.

Boundary conditions are assigned per edge marker:

* ``Dirichlet(func)``   -- both displacement components prescribed,
* ``Traction(func)``    -- surface load integrated against the basis,
* ``SymmetryNormal()``  -- zero normal displacement on an axis-aligned edge.

A Dirichlet callable may optionally accept a second ``side`` argument.  It is
needed when a constrained edge chain ends at the crack mouth: the two mouth
copies share coordinates but carry different one-sided limits of a
discontinuous boundary field, so the value cannot be recovered from the
position alone.  ``side`` is the face side (+1/-1) for duplicated nodes and
``None`` elsewhere.

Crack faces are always natural: the face load callable receives
``(side, r, normal, x)`` with ``r`` the chord distance of the quadrature
point from the tip (for loads parameterized along the exact face, i.e. the
constant-radius projection of the point), ``normal`` the outward unit normal
of the mesh face edge carrying the load, and ``x`` the quadrature points
themselves for loads that are restrictions of an ambient stress field.
Providers should use the discrete ``normal``/``x`` when the load comes from
a field: sampling the field at the projected curve point with the exact
normal instead makes the applied load inconsistent with the polyline faces
the elements actually see, which visibly pollutes coarse-level gradient
errors.
"""

import inspect
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elasticity import Material
from .meshing import CRACK_MARKERS, CrackMesh
from .quadrature import edge_rule, triangle_rule

__all__ = [
    "Dirichlet", "Traction", "SymmetryNormal", "ElasticityProblem",
    "FemSpace", "DiscreteSolution", "SolverError", "assemble_stiffness",
    "assemble_and_solve", "error_interior", "error_crackface",
]


class SolverError(Exception):
    """Assembly or linear-solve failure."""


def _accepts_side(fn):
    """True if a Dirichlet callable takes a second positional argument."""
    try:
        sig = inspect.signature(fn)
    except (TypeError, ValueError):
        return False
    pos = [p for p in sig.parameters.values()
           if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)]
    return len(pos) >= 2


# ---------------------------------------------------------------------------
# boundary conditions


@dataclass
class Dirichlet:
    func: Callable  # x (..., 2) -> (..., 2), optionally (x, side)


@dataclass
class Traction:
    func: Callable  # x (..., 2) -> (..., 2)


@dataclass
class SymmetryNormal:
    """u . n = 0 on an axis-aligned edge; the axis is detected from geometry."""


@dataclass
class ElasticityProblem:
    mesh: CrackMesh
    material: Material
    bcs: dict                      # marker -> Dirichlet | Traction | SymmetryNormal
    body_force: Optional[Callable] = None        # x (..., 2) -> (..., 2)
    crack_traction: Optional[Callable] = None    # (side, r (q,), normal (2,), x (q, 2)) -> (q, 2)
    point_constraints: list = field(default_factory=list)  # (node, comp, value)


# ---------------------------------------------------------------------------
# reference elements (barycentric)


def _ref_shapes(order, bary):
    """Shape values and reference-coordinate gradients at barycentric points.

    Returns (N, dN) with shapes (q, nloc) and (q, nloc, 2); the reference
    coordinates are (xi, eta) with vertices (0,0), (1,0), (0,1) so that
    lambda = (1 - xi - eta, xi, eta).
    """
    bary = np.asarray(bary, dtype=float)
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    d0 = np.array([-1.0, -1.0])
    d1 = np.array([1.0, 0.0])
    d2 = np.array([0.0, 1.0])
    if order == 1:
        N = np.stack([l0, l1, l2], axis=1)
        dN = np.broadcast_to(np.stack([d0, d1, d2]), (len(bary), 3, 2)).copy()
        return N, dN
    if order == 2:
        N = np.stack([
            l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
            4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
        ], axis=1)
        dN = np.empty((len(bary), 6, 2))
        dN[:, 0] = (4 * l0 - 1)[:, None] * d0
        dN[:, 1] = (4 * l1 - 1)[:, None] * d1
        dN[:, 2] = (4 * l2 - 1)[:, None] * d2
        dN[:, 3] = 4 * (l1[:, None] * d0 + l0[:, None] * d1)
        dN[:, 4] = 4 * (l2[:, None] * d1 + l1[:, None] * d2)
        dN[:, 5] = 4 * (l0[:, None] * d2 + l2[:, None] * d0)
        return N, dN
    raise ValueError(f"unsupported element order {order}")


def _edge_shapes(order, t):
    """Restriction of the basis to an edge, parametrised by t in [0, 1].

    Dof order: first endpoint, second endpoint, then (P2) the midpoint.
    """
    t = np.asarray(t, dtype=float)
    if order == 1:
        return np.stack([1 - t, t], axis=1)
    return np.stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)], axis=1)


# ---------------------------------------------------------------------------
# dof management


class FemSpace:
    """Scalar dof numbering for P1/P2 on a crack mesh.

    Vector dofs interleave components: global index = 2 * scalar + component.
    """

    def __init__(self, mesh: CrackMesh, order: int):
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        self.mesh = mesh
        self.order = order
        nodes = mesh.nodes
        if order == 1:
            self.cell_dofs = mesh.triangles.astype(int).copy()
            self.dof_coords = nodes.copy()
            self.edge_mid = {}
        else:
            edge_mid = {}
            coords = [p for p in nodes]
            rows = []
            for tri in mesh.triangles:
                mids = []
                for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                    key = (min(int(a), int(b)), max(int(a), int(b)))
                    if key not in edge_mid:
                        edge_mid[key] = len(coords)
                        coords.append(0.5 * (nodes[key[0]] + nodes[key[1]]))
                    mids.append(edge_mid[key])
                rows.append([int(tri[0]), int(tri[1]), int(tri[2]), *mids])
            self.cell_dofs = np.array(rows, dtype=int)
            self.dof_coords = np.array(coords)
            self.edge_mid = edge_mid
        self.n_scalar = len(self.dof_coords)
        self.nloc = self.cell_dofs.shape[1]

        # affine geometry: J columns are the edge vectors, x = v0 + J xi
        v = nodes[mesh.triangles]
        J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        inv[:, 1, 1] = J[:, 0, 0]
        inv /= det[:, None, None]
        self.v0 = v[:, 0]
        self.jac = J
        self.jac_det = det
        self.jac_inv = inv

    def edge_scalar_dofs(self, a, b):
        """Scalar dofs supported on boundary edge (a, b), endpoint order kept."""
        a, b = int(a), int(b)
        if self.order == 1:
            return [a, b]
        return [a, b, self.edge_mid[(min(a, b), max(a, b))]]

    def physical_gradients(self, bary, elems=None):
        """Physical shape gradients (m, q, nloc, 2) at barycentric points."""
        _, dN = _ref_shapes(self.order, bary)
        inv = self.jac_inv if elems is None else self.jac_inv[elems]
        return np.einsum("qak,mkj->mqaj", dN, inv)

    def reference_coords(self, elems, points):
        """Barycentric coordinates of physical points in the given elements."""
        d = np.asarray(points, dtype=float) - self.v0[elems]
        xi = np.einsum("qkj,qj->qk", self.jac_inv[elems], d)
        return np.stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]], axis=1)


# ---------------------------------------------------------------------------
# solution field


@dataclass
class DiscreteSolution:
    space: FemSpace
    u: np.ndarray               # (n_scalar, 2) nodal displacements
    material: Material

    def displacement_at(self, elems, points):
        elems = np.atleast_1d(np.asarray(elems, dtype=int))
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        bary = self.space.reference_coords(elems, pts)
        N, _ = _ref_shapes(self.space.order, bary)
        ue = self.u[self.space.cell_dofs[elems]]
        return np.einsum("qa,qai->qi", N, ue)

    def beta_at(self, elems, points):
        """Displacement gradient beta_ij = du_i/dx_j at points inside elems."""
        elems = np.atleast_1d(np.asarray(elems, dtype=int))
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        bary = self.space.reference_coords(elems, pts)
        _, dN = _ref_shapes(self.space.order, bary)
        g = np.einsum("qak,qkj->qaj", dN, self.space.jac_inv[elems])
        ue = self.u[self.space.cell_dofs[elems]]
        return np.einsum("qai,qaj->qij", ue, g)


# ---------------------------------------------------------------------------
# assembly


def _volume_rule(order, override=None):
    degree = 2 * (order - 1) + 2 if override is None else override
    return triangle_rule(degree)


def _classify_symmetry_axis(mesh, marker):
    """Constrained component for an axis-aligned symmetry edge set."""
    ids = [i for i, m in enumerate(mesh.edge_markers) if m == marker]
    p = mesh.nodes[mesh.edges[ids]]
    dx = np.abs(p[:, 1, 0] - p[:, 0, 0]).max()
    dy = np.abs(p[:, 1, 1] - p[:, 0, 1]).max()
    if dx < 1e-12 and dy > 0:
        return 0                      # vertical edge: normal along x
    if dy < 1e-12 and dx > 0:
        return 1
    raise SolverError(f"symmetry edges '{marker}' are not axis-aligned")


def _global_dofs(space):
    gdof = (2 * space.cell_dofs[:, :, None] + np.arange(2)[None, None, :])
    return gdof.reshape(len(space.mesh.triangles), 2 * space.nloc)


def assemble_stiffness(space: FemSpace, material: Material, volume_degree=None):
    """Global stiffness matrix (CSR, 2 dofs per scalar unknown, interleaved)."""
    lam, mu = material.lam_eff, material.mu
    bary, w = _volume_rule(space.order, volume_degree)
    det = space.jac_det
    G = space.physical_gradients(bary)

    t_lam = np.einsum("q,m,mqai,mqbj->maibj", w, det, G, G)
    t_dot = np.einsum("q,m,mqap,mqbp->mab", w, det, G, G)
    t_cross = np.einsum("q,m,mqaj,mqbi->maibj", w, det, G, G)
    ke = lam * t_lam + mu * t_cross
    ke[:, :, 0, :, 0] += mu * t_dot
    ke[:, :, 1, :, 1] += mu * t_dot

    n = space.n_scalar
    nloc = space.nloc
    gdof = _global_dofs(space)
    rows = np.repeat(gdof, 2 * nloc, axis=1).ravel()
    cols = np.tile(gdof, (1, 2 * nloc)).ravel()
    m = len(space.mesh.triangles)
    return sp.coo_matrix((ke.reshape(m, -1).ravel(), (rows, cols)),
                         shape=(2 * n, 2 * n)).tocsr()


def assemble_and_solve(problem: ElasticityProblem, order: int,
                       volume_degree=None, edge_points=4) -> DiscreteSolution:
    mesh = problem.mesh
    mat = problem.material
    space = FemSpace(mesh, order)

    K = assemble_stiffness(space, mat, volume_degree)
    bary, w = _volume_rule(order, volume_degree)
    det = space.jac_det
    n = space.n_scalar
    nloc = space.nloc
    gdof = _global_dofs(space)

    f = np.zeros(2 * n)
    if problem.body_force is not None:
        N, _ = _ref_shapes(order, bary)
        x = space.v0[:, None, :] + np.einsum("mij,qj->mqi", space.jac, bary[:, 1:])
        b = np.asarray(problem.body_force(x), dtype=float)
        fe = np.einsum("q,m,qa,mqi->mai", w, det, N, b)
        np.add.at(f, gdof.reshape(-1, nloc, 2).ravel(), fe.ravel())

    # boundary integrals ----------------------------------------------------
    tq, tw = edge_rule(edge_points)
    Ne = _edge_shapes(order, tq)
    tip_xy = mesh.nodes[mesh.tip]
    owner = mesh.boundary_edge_triangle() if problem.crack_traction else None
    for (a, b), marker in zip(mesh.edges, mesh.edge_markers):
        if marker in CRACK_MARKERS:
            load = problem.crack_traction
            if load is None:
                continue
            pa, pb = mesh.nodes[int(a)], mesh.nodes[int(b)]
            xg = pa[None, :] * (1 - tq)[:, None] + pb[None, :] * tq[:, None]
            r = np.linalg.norm(xg - tip_xy, axis=1)
            side = +1 if marker == "crack_upper" else -1
            # outward unit normal of this face edge, oriented by the owning
            # triangle's counterclockwise traversal
            t, loc = owner[(min(int(a), int(b)), max(int(a), int(b)))][0]
            tri = mesh.triangles[t]
            d = mesh.nodes[tri[(loc + 1) % 3]] - mesh.nodes[tri[loc]]
            nvec = np.array([d[1], -d[0]]) / np.linalg.norm(d)
            tbar = np.asarray(load(side, r, nvec, xg), dtype=float)
        else:
            bc = problem.bcs.get(marker)
            if not isinstance(bc, Traction):
                continue
            pa, pb = mesh.nodes[int(a)], mesh.nodes[int(b)]
            xg = pa[None, :] * (1 - tq)[:, None] + pb[None, :] * tq[:, None]
            tbar = np.asarray(bc.func(xg), dtype=float)
        ell = np.linalg.norm(pb - pa)
        fd = np.einsum("q,qa,qi->ai", tw * ell, Ne, tbar)
        for loc, dof in enumerate(space.edge_scalar_dofs(a, b)):
            f[2 * dof:2 * dof + 2] += fd[loc]

    # essential constraints -------------------------------------------------
    fixed = {}

    def constrain(dof, comp, value):
        key = 2 * dof + comp
        if key in fixed and abs(fixed[key] - value) > 1e-9 * (1 + abs(value)):
            raise SolverError(f"conflicting Dirichlet values at dof {key}")
        fixed[key] = value

    for marker, bc in problem.bcs.items():
        if isinstance(bc, Traction):
            continue
        ids = [i for i, m in enumerate(mesh.edge_markers) if m == marker]
        if not ids:
            raise SolverError(f"marker {marker!r} not present in mesh")
        if isinstance(bc, SymmetryNormal):
            comp = _classify_symmetry_axis(mesh, marker)
            for i in ids:
                for dof in space.edge_scalar_dofs(*mesh.edges[i]):
                    constrain(dof, comp, 0.0)
        elif isinstance(bc, Dirichlet):
            wants_side = _accepts_side(bc.func)
            node_side = mesh.node_side() if wants_side else None
            for i in ids:
                for dof in space.edge_scalar_dofs(*mesh.edges[i]):
                    if wants_side:
                        s = int(node_side[dof]) if dof < len(mesh.nodes) else 0
                        val = bc.func(space.dof_coords[dof], s if s else None)
                    else:
                        val = bc.func(space.dof_coords[dof])
                    val = np.asarray(val, dtype=float)
                    constrain(dof, 0, float(val[0]))
                    constrain(dof, 1, float(val[1]))
        else:
            raise SolverError(f"unsupported boundary condition {bc!r}")
    for node, comp, value in problem.point_constraints:
        constrain(int(node), int(comp), float(value))
    if not fixed:
        raise SolverError("problem has no essential constraints; stiffness is singular")

    fixed_idx = np.array(sorted(fixed), dtype=int)
    fixed_val = np.array([fixed[i] for i in fixed_idx])
    free = np.setdiff1d(np.arange(2 * n), fixed_idx)

    rhs = f[free] - K[free][:, fixed_idx] @ fixed_val
    Kff = K[free][:, free].tocsc()
    u_free = spla.spsolve(Kff, rhs)
    if not np.all(np.isfinite(u_free)):
        raise SolverError("linear solver returned non-finite values")

    resid = np.linalg.norm(Kff @ u_free - rhs)
    scale = max(np.linalg.norm(rhs), np.linalg.norm(Kff @ u_free), 1e-300)
    if resid > 1e-12 * scale:
        raise SolverError(f"linear solve residual {resid / scale:.3e} exceeds 1e-12")

    u = np.empty(2 * n)
    u[free] = u_free
    u[fixed_idx] = fixed_val
    return DiscreteSolution(space=space, u=u.reshape(n, 2), material=mat)


# ---------------------------------------------------------------------------
# error measures


def error_interior(sol: DiscreteSolution, exact_beta, degree=4):
    """L2 norm of beta_h - beta_exact over the bulk.

    ``exact_beta(points, side)`` must accept a side hint (+1, -1, or None)
    used to disambiguate points in elements touching a crack face.
    """
    space = sol.space
    mesh = space.mesh
    bary, w = triangle_rule(degree)
    x = space.v0[:, None, :] + np.einsum("mij,qj->mqi", space.jac, bary[:, 1:])
    m, q = x.shape[:2]
    elems = np.repeat(np.arange(m), q)
    bh = sol.beta_at(elems, x.reshape(-1, 2)).reshape(m, q, 2, 2)

    be = np.empty_like(bh)
    tri_side = mesh.triangle_side()
    for side in (-1, 0, 1):
        sel = tri_side == side
        if not np.any(sel):
            continue
        hint = None if side == 0 else side
        be[sel] = exact_beta(x[sel].reshape(-1, 2), hint).reshape(-1, q, 2, 2)

    diff2 = np.sum((bh - be) ** 2, axis=(2, 3))
    total = np.einsum("q,m,mq->", w, space.jac_det, diff2)
    return float(np.sqrt(total))


def error_crackface(sol: DiscreteSolution, exact_face, npoints=4):
    """Tip-weighted face error ||sqrt(r) (beta_h - beta_exact)|| on both faces.

    ``exact_face(r, side)`` evaluates the exact gradient on the face at chord
    distance r; the sqrt(r) weight makes the norm finite despite the r^(-1/2)
    behaviour of the exact field.
    """
    space = sol.space
    mesh = space.mesh
    owner = mesh.boundary_edge_triangle()
    tq, tw = edge_rule(npoints)
    tip_xy = mesh.nodes[mesh.tip]
    total = 0.0
    for (a, b), marker in zip(mesh.edges, mesh.edge_markers):
        if marker not in CRACK_MARKERS:
            continue
        side = +1 if marker == "crack_upper" else -1
        key = (min(int(a), int(b)), max(int(a), int(b)))
        (tri, _), = owner[key]
        pa, pb = mesh.nodes[int(a)], mesh.nodes[int(b)]
        xg = pa[None, :] * (1 - tq)[:, None] + pb[None, :] * tq[:, None]
        r = np.linalg.norm(xg - tip_xy, axis=1)
        bh = sol.beta_at(np.full(len(tq), tri), xg)
        be = exact_face(r, side)
        diff2 = np.sum((bh - be) ** 2, axis=(1, 2))
        ell = np.linalg.norm(pb - pa)
        total += float(np.sum(tw * ell * r * diff2))
    return float(np.sqrt(total))
