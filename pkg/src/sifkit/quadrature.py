"""Quadrature rules: symmetric triangle rules, Gauss edge rules, and the
warped rule for weakly singular crack-face integrands.

Triangle rules are stated in barycentric coordinates with weights summing to
the reference measure 1/2.  Edge rules live on [0, 1] with weights summing
to 1.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import CrackCurve
from .variation import RadialCutoff


def _sym3(a):
    """The three permutations of barycentric (1-2a, a, a)."""
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _sym6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _build_triangle_rules():
    rules = {}
    rules[1] = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))

    pts = _sym3(1 / 6)
    rules[2] = (np.array(pts), np.full(3, 1 / 3))

    pts = [(1 / 3, 1 / 3, 1 / 3)] + _sym3(0.2)
    rules[3] = (np.array(pts), np.array([-27 / 48] + [25 / 48] * 3))

    a1, w1 = 0.445948490915965, 0.223381589678011
    a2, w2 = 0.091576213509771, 0.109951743655322
    pts = _sym3(a1) + _sym3(a2)
    rules[4] = (np.array(pts), np.array([w1] * 3 + [w2] * 3))

    s15 = np.sqrt(15.0)
    a1 = (6.0 + s15) / 21.0
    a2 = (6.0 - s15) / 21.0
    w0 = 9.0 / 40.0
    w1 = (155.0 + s15) / 1200.0
    w2 = (155.0 - s15) / 1200.0
    pts = [(1 / 3, 1 / 3, 1 / 3)] + _sym3(a1) + _sym3(a2)
    rules[5] = (np.array(pts), np.array([w0] + [w1] * 3 + [w2] * 3))

    a1, w1 = 0.063089014491502, 0.050844906370207
    a2, w2 = 0.249286745170910, 0.116786275726379
    a3, b3 = 0.310352451033785, 0.053145049844816
    w3 = 0.082851075618374
    pts = _sym3(a1) + _sym3(a2) + _sym6(a3, b3)
    rules[6] = (np.array(pts), np.array([w1] * 3 + [w2] * 3 + [w3] * 6))

    # weights above sum to 1; normalize to the reference measure 1/2
    return {deg: (p, 0.5 * w) for deg, (p, w) in rules.items()}


_TRIANGLE_RULES = _build_triangle_rules()


def triangle_rule(degree: int):
    """Symmetric rule exact to the given total degree on the unit triangle.

    Returns (points, weights): barycentric points (n, 3), weights (n,)
    summing to 1/2.
    """
    if degree not in _TRIANGLE_RULES:
        raise ValueError(f"triangle rules cover degrees 1..6, got {degree}")
    p, w = _TRIANGLE_RULES[degree]
    return p.copy(), w.copy()


def edge_rule(npoints: int):
    """Gauss-Legendre rule on [0, 1]; exact to degree 2 npoints - 1."""
    if not 1 <= npoints <= 16:
        raise ValueError(f"edge rules cover 1..16 points, got {npoints}")
    x, w = leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


def map_triangle_points(bary, verts):
    """Barycentric (n, 3) to physical points against verts (..., 3, 2)."""
    return np.einsum("qb,...bi->...qi", np.asarray(bary), np.asarray(verts))


def triangle_area(verts):
    """Signed area; positive for counterclockwise vertex order."""
    verts = np.asarray(verts, dtype=float)
    a = verts[..., 1, :] - verts[..., 0, :]
    b = verts[..., 2, :] - verts[..., 0, :]
    return 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])


# ---------------------------------------------------------------------------
# weakly singular edge rule


def radius_warp(cutoff: RadialCutoff):
    """The radial warp s(r) = (r^2/rho - r) q(r) + r and its derivative.

    The warp fixes 0 and rho, behaves like r^2/rho near the tip (which turns
    half-integer powers of the integration variable into integer powers), and
    reduces to the identity where the cutoff has left off.
    """
    rho = cutoff.rho

    def s(r):
        r = np.asarray(r, dtype=float)
        q = np.asarray(cutoff.value(r))
        return (r * r / rho - r) * q + r

    def sprime(r):
        r = np.asarray(r, dtype=float)
        q = np.asarray(cutoff.value(r))
        qp = np.asarray(cutoff.slope(r))
        return (2.0 * r / rho - 1.0) * q + (r * r / rho - r) * qp + 1.0

    return s, sprime


def singular_edge_quadrature(rho: float, cutoff: RadialCutoff, curve: CrackCurve,
                             integrand, panels: int = 4, npoints: int = 10) -> float:
    """Integrate integrand(r) |curve velocity(r)| dr over (0, rho) where the
    integrand may blow up like r^(-1/2) at the tip.

    Gauss points are laid on composite panels of [0, rho_inner] and
    [rho_inner, rho] and pushed through the radial warp; the warp's Jacobian
    makes the half-power singularity invisible to the rule.  ``integrand`` may
    be scalar->scalar or vectorized over arrays.
    """
    if abs(rho - cutoff.rho) > 1e-12 * max(1.0, rho):
        raise ValueError("rho must match the cutoff support")
    s, sp = radius_warp(cutoff)
    xg, wg = leggauss(npoints)
    xg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    total = 0.0
    for lo, hi in _panel_bounds(cutoff.rho_inner, rho, panels):
        rt = lo + (hi - lo) * xg
        w = (hi - lo) * wg
        rmap = s(rt)
        jac = sp(rt)
        vel = curve.chord_velocity(rmap)
        speed = np.sqrt(np.einsum("...i,...i->...", vel, vel))
        vals = _eval_maybe_vectorized(integrand, rmap)
        total += float(np.sum(vals * speed * jac * w))
    return total


def _panel_bounds(rho_inner, rho, panels):
    bounds = []
    for piece_lo, piece_hi in [(0.0, rho_inner), (rho_inner, rho)]:
        edges = np.linspace(piece_lo, piece_hi, panels + 1)
        bounds.extend(zip(edges[:-1], edges[1:]))
    return bounds


def _eval_maybe_vectorized(fn, r):
    try:
        out = np.asarray(fn(r), dtype=float)
        if out.shape == r.shape:
            return out
    except Exception:
        pass
    return np.array([float(fn(ri)) for ri in r])
