"""Discrete interaction integral and stress-intensity-factor extraction.

The functional pairs a computed displacement gradient with a singular
auxiliary field over a tip-centred ball of radius rho.  Three variant
simplifications are supported, named by (material-variation kind, auxiliary
flavor):

* ``uni_dfc``  -- constant-direction variation, equilibrated auxiliary field.
  Boundary term: full interaction flux on the crack faces.  The gradient
  volume term vanishes identically inside the cutoff plateau and may be
  skipped there.
* ``tan_dfc``  -- crack-tangential variation, equilibrated auxiliary field.
  Boundary term: flux without the energy-density piece (the variation is
  orthogonal to the face normals).
* ``tan_tf``   -- crack-tangential variation, face-traction-free auxiliary
  field.  Boundary term: only the applied-load piece; the volume source needs
  the auxiliary derivatives.

All variants share the applied-traction face term, which is integrated on the
exact curve with the singularity-removing radial map; the remaining face
terms use plain Gauss points on the mesh's face polyline with the exact-curve
normal at equal chord radius.  The functional divided by the material's
energy-release compliance gives one stress intensity factor per auxiliary
mode.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .elasticity import (
    Material,
    interaction_momentum,
    interaction_source,
    mutual_energy,
    stress,
)
from .fields import AuxiliaryField
from .geometry import CrackCurve
from .meshing import CRACK_MARKERS, CrackMesh
from .quadrature import edge_rule, singular_edge_quadrature, triangle_rule
from .variation import MaterialVariation, RadialCutoff

__all__ = [
    "Loads", "Pairing", "IntegrationPlan", "discrete_interaction",
    "compute_sif", "rho_sweep", "VARIANTS", "default_rho",
]

VARIANTS = ("uni_dfc", "tan_dfc", "tan_tf")


def default_rho(curve: CrackCurve) -> float:
    """Support radius used when none is requested explicitly."""
    return min(0.5, 0.9 * curve.rho_max)


@dataclass
class Loads:
    """Problem loads entering the functional: body force and face traction.

    ``body_force(x)`` maps (..., 2) points to (..., 2) values;
    ``face_traction(side, r)`` gives the applied traction on a face at chord
    distance r from the tip.  Either may be None for zero.
    """
    body_force: Optional[Callable] = None
    face_traction: Optional[Callable] = None

    def body(self, x):
        if self.body_force is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.asarray(self.body_force(x), dtype=float)


@dataclass
class Pairing:
    """A variant/mode/radius choice; builds the matching field pair."""
    variant: str
    rho: float
    mode: str
    rho_inner: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.mode not in ("I", "II"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def cutoff(self):
        inner = self.rho / 4.0 if self.rho_inner is None else self.rho_inner
        return RadialCutoff(rho=self.rho, rho_inner=inner)

    def build(self, curve: CrackCurve, material: Material):
        if self.rho > curve.rho_max + 1e-12:
            raise ValueError(f"rho={self.rho} exceeds curve rho_max={curve.rho_max}")
        flavor = "tf" if self.variant == "tan_tf" else "dfc"
        kind = "uni" if self.variant == "uni_dfc" else "tan"
        aux = AuxiliaryField(flavor=flavor, mode=self.mode, curve=curve,
                             mat=material)
        mv = MaterialVariation(kind=kind, curve=curve, cutoff=self.cutoff())
        return aux, mv


# ---------------------------------------------------------------------------
# integration plans


@dataclass
class IntegrationPlan:
    """Frozen quadrature data for one (mesh or dense) evaluation of the
    functional at a given support radius."""
    curve: CrackCurve
    rho: float
    # volume: flattened points grouped per element (or per dense cell)
    vol_x: np.ndarray          # (P, 2)
    vol_w: np.ndarray          # (P,)
    vol_side: np.ndarray       # (P,) hints in {-1, 0, +1}
    vol_skip: np.ndarray       # (P,) True where the plateau skip may apply
    # crack-face points for the mesh-data terms
    face_x: np.ndarray         # (F, 2)
    face_w: np.ndarray         # (F,)
    face_r: np.ndarray         # (F,)
    face_n: np.ndarray         # (F, 2) exact-curve normals at equal radius
    face_side: np.ndarray      # (F,)
    # element ids for FEM evaluation; None when fields are supplied directly
    vol_elem: Optional[np.ndarray] = None
    face_elem: Optional[np.ndarray] = None
    edge_points: int = 10
    panels: int = 4

    @classmethod
    def from_mesh(cls, mesh: CrackMesh, curve: CrackCurve, rho,
                  volume_degree=4, edge_points=4):
        tip = mesh.nodes[mesh.tip]
        radii = np.linalg.norm(mesh.nodes - tip, axis=1)
        inside = radii[mesh.triangles] < rho
        kset = np.sort(np.nonzero(np.any(inside, axis=1))[0])
        if kset.size == 0:
            raise ValueError("no element has a vertex inside the support ball")

        bary, w = triangle_rule(volume_degree)
        v = mesh.nodes[mesh.triangles[kset]]
        J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        x = v[:, 0][:, None, :] + np.einsum("mij,qj->mqi", J, bary[:, 1:])
        wv = w[None, :] * det[:, None]
        side = mesh.triangle_side()[kset]
        skip = np.all(radii[mesh.triangles[kset]] < rho / 4.0, axis=1)

        m, q = x.shape[:2]
        vol_x = x.reshape(-1, 2)
        if np.min(np.linalg.norm(vol_x - tip, axis=1)) <= 1e-14:
            raise ValueError("volume quadrature point coincides with the tip")

        # crack-face edges reaching into the ball
        tq, tw = edge_rule(edge_points)
        owner = mesh.boundary_edge_triangle()
        fx, fw, fr, fn, fs, fe = [], [], [], [], [], []
        for (a, b), marker in zip(mesh.edges, mesh.edge_markers):
            if marker not in CRACK_MARKERS:
                continue
            pa, pb = mesh.nodes[int(a)], mesh.nodes[int(b)]
            if min(np.linalg.norm(pa - tip), np.linalg.norm(pb - tip)) >= rho:
                continue
            s = +1 if marker == "crack_upper" else -1
            key = (min(int(a), int(b)), max(int(a), int(b)))
            (tri, _), = owner[key]
            xg = pa[None, :] * (1 - tq)[:, None] + pb[None, :] * tq[:, None]
            r = np.linalg.norm(xg - tip, axis=1)
            r = np.minimum(r, curve.chord_limit)
            _, g2 = curve.frame(r)
            fx.append(xg)
            fw.append(tw * np.linalg.norm(pb - pa))
            fr.append(r)
            fn.append(-s * g2)
            fs.append(np.full(len(tq), s))
            fe.append(np.full(len(tq), tri))
        return cls(
            curve=curve, rho=float(rho),
            vol_x=vol_x, vol_w=wv.reshape(-1),
            vol_side=np.repeat(side, q),
            vol_skip=np.repeat(skip, q),
            vol_elem=np.repeat(kset, q),
            face_x=np.concatenate(fx) if fx else np.zeros((0, 2)),
            face_w=np.concatenate(fw) if fw else np.zeros(0),
            face_r=np.concatenate(fr) if fr else np.zeros(0),
            face_n=np.concatenate(fn) if fn else np.zeros((0, 2)),
            face_side=np.concatenate(fs).astype(int) if fs else np.zeros(0, dtype=int),
            face_elem=np.concatenate(fe).astype(int) if fe else np.zeros(0, dtype=int),
            edge_points=edge_points,
        )

    @classmethod
    def dense(cls, curve: CrackCurve, rho, cutoff: RadialCutoff,
              n_radial=96, n_angular=128, edge_points=12, panels=6):
        """Mesh-free slit-polar quadrature for oracle (exact-field) inputs.

        Radial substitution r = rho s^2 concentrates points at the tip and
        removes the square-root singularity; the angular measure is exact for
        the bent-slit coordinates (dV = r dr dphi).
        """
        gs, gw = np.polynomial.legendre.leggauss(n_radial)
        s = 0.5 * (gs + 1.0)
        ws = 0.5 * gw
        r = rho * s ** 2
        dr = 2.0 * rho * s * ws
        ga, gwa = np.polynomial.legendre.leggauss(n_angular)
        phi = np.pi * ga
        wphi = np.pi * gwa

        g1, g2 = curve.frame(0.0)
        zeta = curve.secant_angle(r)
        R, PHI = np.meshgrid(r, phi, indexing="ij")
        WR, WPHI = np.meshgrid(dr, wphi, indexing="ij")
        TH = PHI - zeta[:, None]
        x = (curve.tip[None, None, :]
             + R[..., None] * (np.cos(TH)[..., None] * g1[None, None, :]
                               + np.sin(TH)[..., None] * g2[None, None, :]))
        w = WR * WPHI * R
        sidep = np.where(PHI >= 0.0, 1, -1)
        fx, fw, fr, fn, fs = _dense_face_points(curve, rho, cutoff,
                                                edge_points, panels)
        return cls(
            curve=curve, rho=float(rho),
            vol_x=x.reshape(-1, 2), vol_w=w.reshape(-1),
            vol_side=sidep.reshape(-1),
            vol_skip=(R < cutoff.rho_inner).reshape(-1),
            vol_elem=None,
            face_x=fx, face_w=fw, face_r=fr, face_n=fn, face_side=fs,
            face_elem=None,
            edge_points=edge_points, panels=panels,
        )


def _dense_face_points(curve, rho, cutoff: RadialCutoff, npoints, panels):
    """Warped Gauss points along both exact faces, weights including the
    curve's arclength factor."""
    from .quadrature import radius_warp

    warp_s, warp_sprime = radius_warp(cutoff)
    gs, gw = np.polynomial.legendre.leggauss(npoints)
    breaks = np.concatenate([
        np.linspace(0.0, cutoff.rho_inner, panels + 1),
        np.linspace(cutoff.rho_inner, rho, panels + 1)[1:],
    ])
    rt, wt = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        rt.append(0.5 * (b - a) * gs + 0.5 * (a + b))
        wt.append(0.5 * (b - a) * gw)
    rt = np.concatenate(rt)
    wt = np.concatenate(wt)
    s_val, s_prime = warp_s(rt), warp_sprime(rt)
    speed = np.linalg.norm(curve.chord_velocity(s_val), axis=-1)
    w = wt * s_prime * speed

    xs, ws_, rs, ns, ss = [], [], [], [], []
    for side in (1, -1):
        _, g2 = curve.frame(s_val)
        xs.append(curve.chord_point(s_val))
        ws_.append(w)
        rs.append(s_val)
        ns.append(-side * g2)
        ss.append(np.full(len(s_val), side))
    return (np.concatenate(xs), np.concatenate(ws_), np.concatenate(rs),
            np.concatenate(ns), np.concatenate(ss).astype(int))


# ---------------------------------------------------------------------------
# functional evaluation


def _beta_by_side(source, x, sides, elems):
    """Evaluate the computed field at points carrying side hints.

    ``source`` is a DiscreteSolution (element ids supplied) or a callable
    ``f(points, side)`` for oracle inputs.
    """
    if elems is not None and hasattr(source, "beta_at"):
        return source.beta_at(elems, x)
    out = np.empty(x.shape[:-1] + (2, 2))
    for s in (-1, 0, 1):
        sel = sides == s
        if not np.any(sel):
            continue
        out[sel] = source(x[sel], None if s == 0 else int(s))
    return out


def _aux_by_side(method, x, sides):
    out = np.empty(x.shape[:-1] + (2, 2))
    for s in (-1, 0, 1):
        sel = sides == s
        if not np.any(sel):
            continue
        out[sel] = method(x[sel], None if s == 0 else int(s))
    return out


def discrete_interaction(sol, aux: AuxiliaryField, mv: MaterialVariation,
                         plan: IntegrationPlan, loads: Loads = None,
                         skip_inner: bool = True) -> float:
    """Evaluate the interaction functional for one (variant, mode) pairing.

    The variant is inferred from the (aux flavor, variation kind) pair; see
    the module docstring for the per-variant terms.
    """
    if loads is None:
        loads = Loads()
    mat = aux.mat
    variant = {
        ("dfc", "uni"): "uni_dfc",
        ("dfc", "tan"): "tan_dfc",
        ("tf", "tan"): "tan_tf",
    }.get((aux.flavor, mv.kind))
    if variant is None:
        raise ValueError(
            f"unsupported pairing: aux flavor {aux.flavor!r} with "
            f"variation kind {mv.kind!r}")

    # --- volume term ----------------------------------------------------
    x = plan.vol_x
    w = plan.vol_w
    beta_h = _beta_by_side(sol, x, plan.vol_side, plan.vol_elem)
    beta_aux = _aux_by_side(aux.beta, x, plan.vol_side)
    sig_bar = interaction_momentum(beta_h, beta_aux, mat)
    grad_dg = mv.gradient(x)
    term_grad = np.einsum("...ij,...ij->...", sig_bar, grad_dg)
    if variant == "uni_dfc" and skip_inner:
        term_grad = np.where(plan.vol_skip, 0.0, term_grad)

    dgamma = mv.value(x)
    b = loads.body(x)
    if variant == "tan_tf":
        gb, gsig, divs = _aux_derivs_by_side(aux, x, plan.vol_side)
        sigma_h = stress(beta_h, mat)
        lam_bar = interaction_source(beta_h, sigma_h, beta_aux, gb, gsig,
                                     divs, b)
    else:
        lam_bar = np.einsum("...ki,...k->...i", beta_aux, b)
    term_src = np.einsum("...i,...i->...", dgamma, lam_bar)
    vol = float(np.sum(w * (term_grad + term_src)))

    # --- face terms with mesh data --------------------------------------
    bnd = 0.0
    if variant != "tan_tf" and plan.face_x.shape[0]:
        xf = plan.face_x
        rf = plan.face_r
        beta_hf = _beta_by_side(sol, xf, plan.face_side, plan.face_elem)
        sig_auxf = np.empty_like(beta_hf)
        beta_auxf = np.empty_like(beta_hf)
        for s in (-1, 1):
            sel = plan.face_side == s
            if not np.any(sel):
                continue
            sig_auxf[sel] = aux.face_stress(rf[sel], s)
            beta_auxf[sel] = aux.face_beta(rf[sel], s)
        dgf = mv.value_at_radius(rf)
        tn = np.einsum("...ji,...jk,...k->...i", beta_hf, sig_auxf, plan.face_n)
        contrib = -np.einsum("...i,...i->...", dgf, tn)
        if variant == "uni_dfc":
            wbar = mutual_energy(beta_hf, beta_auxf, mat)
            contrib = contrib + wbar * np.einsum("...i,...i->...",
                                                 dgf, plan.face_n)
        bnd += float(np.sum(plan.face_w * contrib))

    # --- applied-traction face term (singular, on the exact curve) ------
    if loads.face_traction is not None:
        for s in (1, -1):
            def integrand(r, s=s):
                r = np.atleast_1d(r)
                tbar = np.asarray(loads.face_traction(s, r), dtype=float)
                ba = aux.face_beta(r, s)
                dg = mv.value_at_radius(r)
                return -np.einsum("...i,...ji,...j->...", dg, ba, tbar)
            bnd += singular_edge_quadrature(
                plan.rho, mv.cutoff, plan.curve, integrand,
                panels=plan.panels, npoints=max(plan.edge_points, 10))

    return bnd - vol


def _aux_derivs_by_side(aux, x, sides):
    gb = np.empty(x.shape[:-1] + (2, 2, 2))
    gs = np.empty_like(gb)
    dv = np.empty(x.shape[:-1] + (2,))
    for s in (-1, 0, 1):
        sel = sides == s
        if not np.any(sel):
            continue
        gb[sel], gs[sel], dv[sel] = aux.derivatives(x[sel],
                                                    None if s == 0 else int(s))
    return gb, gs, dv


# ---------------------------------------------------------------------------
# SIF extraction


def compute_sif(sol, curve: CrackCurve, material: Material, variant: str,
                rho, loads: Loads = None, plan: IntegrationPlan = None,
                rho_inner=None, volume_degree=4, edge_points=4,
                skip_inner=True):
    """Mode I/II stress intensity factors via the interaction functional.

    ``sol`` is a DiscreteSolution, or a callable ``beta(points, side)`` when
    a dense plan is supplied.
    """
    eta = material.sif_compliance
    if plan is None:
        if not hasattr(sol, "space"):
            raise ValueError("a dense plan is required for oracle inputs")
        plan = IntegrationPlan.from_mesh(sol.space.mesh, curve, rho,
                                         volume_degree=volume_degree,
                                         edge_points=edge_points)
    out = []
    for mode in ("I", "II"):
        pairing = Pairing(variant=variant, rho=rho, mode=mode,
                          rho_inner=rho_inner)
        aux, mv = pairing.build(curve, material)
        val = discrete_interaction(sol, aux, mv, plan, loads,
                                   skip_inner=skip_inner)
        out.append(val / eta)
    return float(out[0]), float(out[1])


def rho_sweep(sol, curve: CrackCurve, material: Material, variant: str,
              rhos, loads: Loads = None, plans: dict = None, **kw):
    """SIFs across a list of support radii: [(rho, K_I, K_II), ...]."""
    results = []
    for rho in rhos:
        plan = None if plans is None else plans.get(rho)
        k1, k2 = compute_sif(sol, curve, material, variant, rho, loads,
                             plan=plan, **kw)
        results.append((float(rho), k1, k2))
    return results
