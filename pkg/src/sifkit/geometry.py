"""Chord-parameterized crack curves and tip-centered slit coordinates.

A crack is a simple C^2 curve from its tip into the material.  Everything here
is parameterized by the *chord distance* r = |x - tip|: ``chord_point(r)``
returns the unique crack point at chord distance r (injectivity is guaranteed
up to ``chord_limit``, the chord distance of the far end, called the mouth).

Frames and angles:

- ``g1(r)`` is the unit vector opposite the curve velocity at chord r (at the
  tip it points in the direction of prospective crack extension), ``g2(r)`` is
  g1 rotated +90 degrees; the pair is orthonormal and right-handed.
- ``secant_angle(r)`` is the angle between the tip tangent and the secant from
  the tip to ``chord_point(r)``, signed positive when the crack bends toward
  +g2(0).  It vanishes like O(r) at the tip.
- ``extended_polar(curve, x)`` gives (r, theta) where theta is the polar angle
  measured from g1(0) with the branch cut placed exactly on the crack: the
  admissible range is [-pi - zeta(r), pi - zeta(r)] and the two crack faces
  sit at its endpoints.  ``angle_map_phi`` shifts theta by the secant angle so
  the faces land at exactly +-pi.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

_CHORD_TOL = 1e-13


def rot90(v):
    """Rotate vectors (+90 degrees, counterclockwise): (x, y) -> (-y, x)."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def _wrap_pi(a):
    """Wrap angles into (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    out = np.mod(-a + np.pi, 2.0 * np.pi)
    return np.pi - out


class CrackCurve:
    """Base class; subclasses provide chord_point/velocity/accel and bounds.

    ``rho_max`` bounds the admissible interaction radius; ``chord_limit`` is
    the chord distance of the mouth (>= rho_max).  Secant-angle queries beyond
    ``chord_limit`` freeze at the mouth value, which places the branch cut of
    tip-centered fields on the crack inside the domain and on a straight ray
    beyond the mouth.
    """

    tip: np.ndarray
    rho_max: float
    chord_limit: float

    # -- subclass surface ------------------------------------------------

    def chord_point(self, r):
        raise NotImplementedError

    def chord_velocity(self, r):
        """d(chord_point)/dr, shape (..., 2).  |velocity| >= 1, == 1 at r=0."""
        raise NotImplementedError

    def chord_accel(self, r):
        """d^2(chord_point)/dr^2, shape (..., 2)."""
        raise NotImplementedError

    # -- generic machinery ----------------------------------------------

    def _check_radius(self, r, limit):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0):
            raise ValueError("negative chord distance")
        if np.any(r > limit * (1.0 + 1e-12)):
            raise ValueError(
                f"chord distance {float(np.max(r)):.6g} exceeds limit {limit:.6g}")
        return r

    def tip_tangent(self):
        """Unit curve velocity at the tip (equals -g1(0))."""
        v = self.chord_velocity(0.0)
        return v / np.linalg.norm(v)

    def frame(self, r):
        """Orthonormal right-handed frame (g1, g2) at chord distance r."""
        v = self.chord_velocity(r)
        g1 = -v / np.linalg.norm(v, axis=-1, keepdims=True)
        return g1, rot90(g1)

    def frame_rate(self, r):
        """(dg1/dr, dg2/dr)."""
        v = self.chord_velocity(r)
        a = self.chord_accel(r)
        n2 = np.einsum("...i,...i->...", v, v)
        va = np.einsum("...i,...i->...", v, a)
        g1p = -a / np.sqrt(n2)[..., None] + (va / n2 ** 1.5)[..., None] * v
        return g1p, rot90(g1p)

    def secant_angle(self, r):
        """Signed angle between tip tangent and tip-to-crack secant."""
        scalar = np.isscalar(r) or np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_radius(r, np.inf)
        rc = np.minimum(r, self.chord_limit)
        out = np.zeros_like(rc)
        mask = rc > 1e-14 * max(1.0, self.chord_limit)
        if np.any(mask):
            rm = rc[mask]
            u = (self.chord_point(rm) - self.tip) / rm[..., None]
            t0 = self.tip_tangent()
            cross = u[..., 0] * t0[1] - u[..., 1] * t0[0]
            dot = u[..., 0] * t0[0] + u[..., 1] * t0[1]
            out[mask] = np.arctan2(cross, dot)
        return float(out[0]) if scalar else out

    def secant_angle_rate(self, r):
        """d(secant_angle)/dr; frozen to zero beyond the mouth chord."""
        scalar = np.isscalar(r) or np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_radius(r, np.inf)
        out = np.zeros_like(r)
        inside = r < self.chord_limit * (1.0 - 1e-12)
        small = r <= 1e-6 * self.rho_max
        m = inside & ~small
        if np.any(m):
            rm = r[m]
            u = (self.chord_point(rm) - self.tip) / rm[..., None]
            up = (self.chord_velocity(rm) - u) / rm[..., None]
            t0 = self.tip_tangent()
            c = u[..., 0] * t0[1] - u[..., 1] * t0[0]
            d = u[..., 0] * t0[0] + u[..., 1] * t0[1]
            cp = up[..., 0] * t0[1] - up[..., 1] * t0[0]
            dp = up[..., 0] * t0[0] + up[..., 1] * t0[1]
            out[m] = (cp * d - dp * c) / (c * c + d * d)
        m0 = inside & small
        if np.any(m0):
            # limit value: half the cross product of tip tangent and chord accel
            a0 = self.chord_accel(0.0)
            t0 = self.tip_tangent()
            out[m0] = -0.5 * (t0[0] * a0[1] - t0[1] * a0[0])
        return float(out[0]) if scalar else out


class StraightCrack(CrackCurve):
    """Straight crack: tip plus r times a fixed unit direction (toward the mouth)."""

    def __init__(self, tip=(0.0, 0.0), direction=(-1.0, 0.0), length=1.0):
        self.tip = np.asarray(tip, dtype=float)
        d = np.asarray(direction, dtype=float)
        self.direction = d / np.linalg.norm(d)
        self.rho_max = float(length)
        self.chord_limit = float(length)

    def chord_point(self, r):
        r = self._check_radius(r, self.chord_limit)
        return self.tip + np.asarray(r)[..., None] * self.direction

    def chord_velocity(self, r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(self.direction, r.shape + (2,)).copy()

    def chord_accel(self, r):
        r = np.asarray(r, dtype=float)
        return np.zeros(r.shape + (2,))

    def secant_angle(self, r):
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        return float(z) if z.ndim == 0 else z

    def secant_angle_rate(self, r):
        return self.secant_angle(r)

    def frame_rate(self, r):
        r = np.asarray(r, dtype=float)
        z = np.zeros(r.shape + (2,))
        return z, z.copy()


class ArcCrack(CrackCurve):
    """Circular-arc crack.

    Parameters
    ----------
    center, radius : circle data.
    tip_angle : polar angle of the tip on the circle.
    orientation : +1 if the crack sweeps counterclockwise from the tip, -1 if
        clockwise.
    alpha : angular extent of the crack (tip to mouth), 0 < alpha < pi.
    """

    def __init__(self, center, radius, tip_angle, orientation, alpha):
        if not (0.0 < alpha < np.pi):
            raise ValueError("angular extent alpha must lie in (0, pi)")
        if orientation not in (1, -1, 1.0, -1.0):
            raise ValueError("orientation must be +1 or -1")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.tip_angle = float(tip_angle)
        self.orientation = float(orientation)
        self.alpha = float(alpha)
        self.tip = self.center + self.radius * np.array(
            [np.cos(self.tip_angle), np.sin(self.tip_angle)])
        self.chord_limit = 2.0 * self.radius * np.sin(0.5 * self.alpha)
        self.rho_max = self.chord_limit

    def _central(self, r):
        """Central angle swept between tip and the point at chord r."""
        return 2.0 * np.arcsin(np.clip(np.asarray(r, dtype=float) / (2.0 * self.radius), 0.0, 1.0))

    def _point_angle(self, r):
        return self.tip_angle + self.orientation * self._central(r)

    def chord_point(self, r):
        r = self._check_radius(r, self.chord_limit)
        a = self._point_angle(r)
        return self.center + self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def chord_velocity(self, r):
        r = np.asarray(r, dtype=float)
        a = self._point_angle(r)
        ch = np.sqrt(np.maximum(1.0 - (r / (2.0 * self.radius)) ** 2, 1e-300))
        fac = self.orientation / ch
        return np.stack([-np.sin(a), np.cos(a)], axis=-1) * fac[..., None]

    def chord_accel(self, r):
        r = np.asarray(r, dtype=float)
        a = self._point_angle(r)
        ch2 = np.maximum(1.0 - (r / (2.0 * self.radius)) ** 2, 1e-300)
        ch = np.sqrt(ch2)
        nu_p = 1.0 / (self.radius * ch)
        nu_pp = r / (4.0 * self.radius ** 3 * ch ** 3)
        u = np.stack([np.cos(a), np.sin(a)], axis=-1)
        up = np.stack([-np.sin(a), np.cos(a)], axis=-1)
        return (-u * (self.radius * (self.orientation * nu_p) ** 2)[..., None]
                + up * (self.orientation * self.radius * nu_pp)[..., None])

    def secant_angle(self, r):
        r = np.asarray(r, dtype=float)
        rc = np.minimum(r, self.chord_limit)
        out = -self.orientation * np.arcsin(np.clip(rc / (2.0 * self.radius), 0.0, 1.0))
        return float(out) if out.ndim == 0 else out

    def secant_angle_rate(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(
            r < self.chord_limit * (1.0 - 1e-12),
            -self.orientation / np.sqrt(np.maximum(4.0 * self.radius ** 2 - r * r, 1e-300)),
            0.0,
        )
        return float(out) if out.ndim == 0 else out


class CubicCrack(CrackCurve):
    """Cubic benchmark crack: graph of y = x^3 for x in [0, 1].

    Tip at (1, 1), mouth at (0, 0).  Chord queries solve for the graph
    parameter with a safeguarded scalar root finder.
    """

    def __init__(self):
        self.tip = np.array([1.0, 1.0])
        self.chord_limit = float(np.sqrt(2.0))
        self.rho_max = self.chord_limit - 1e-3

    @staticmethod
    def _p(s):
        s = np.asarray(s, dtype=float)
        return np.stack([s, s ** 3], axis=-1)

    @staticmethod
    def _pp(s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.ones_like(s), 3.0 * s ** 2], axis=-1)

    @staticmethod
    def _ppp(s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.zeros_like(s), 6.0 * s], axis=-1)

    def _chord_of_param(self, s):
        d = self._p(s) - self.tip
        return np.sqrt(np.einsum("...i,...i->...", d, d))

    def _param_of_chord(self, r):
        """Graph parameter s with |P(s) - tip| = r.

        Vectorized safeguarded Newton on the (strictly decreasing) chord
        function; the slope is bounded away from zero, so convergence is
        quadratic from the linearized tip guess.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        tiny = r <= 1e-15
        s = np.clip(1.0 - r / np.sqrt(10.0), 0.0, 1.0)
        lo = np.zeros_like(r)
        hi = np.ones_like(r)
        tol = 1e-15 * np.maximum(1.0, r)
        for _ in range(100):
            d = self._p(s) - self.tip
            chord = np.sqrt(np.einsum("...i,...i->...", d, d))
            g = chord - r
            done = np.abs(g) <= tol
            if np.all(done | tiny):
                break
            lo = np.where(g > 0, s, lo)        # chord decreases in s
            hi = np.where(g < 0, s, hi)
            slope = np.einsum("...i,...i->...", d, self._pp(s)) / np.maximum(chord, 1e-300)
            with np.errstate(invalid="ignore", divide="ignore"):
                step = np.where(done, 0.0, g / np.where(slope == 0.0, 1.0, slope))
            cand = s - step
            bad = (cand <= lo) | (cand >= hi) | (slope == 0.0)
            s = np.where(done, s, np.where(bad, 0.5 * (lo + hi), cand))
        out = np.where(tiny, 1.0, s)
        return out

    def chord_point(self, r):
        scalar = np.isscalar(r) or np.ndim(r) == 0
        r = self._check_radius(np.atleast_1d(np.asarray(r, dtype=float)), self.chord_limit)
        p = self._p(self._param_of_chord(r))
        # polish: the rootdistance must satisfy the chord identity to 1e-13
        d = p - self.tip
        got = np.sqrt(np.einsum("...i,...i->...", d, d))
        if np.any(np.abs(got - r) > _CHORD_TOL * np.maximum(1.0, r)):
            raise RuntimeError("chord root-finder failed to converge")
        return p[0] if scalar else p

    def _vel_accel(self, r):
        scalar = np.isscalar(r) or np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        s = self._param_of_chord(r)
        pp = self._pp(s)
        ppp = self._ppp(s)
        norm_pp = np.sqrt(np.einsum("...i,...i->...", pp, pp))
        tiny = r <= 1e-9
        # u = dr/ds; at the tip the limit is -|P'(1)|
        d = self._p(s) - self.tip
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(tiny, -norm_pp, np.einsum("...i,...i->...", d, pp) / np.where(tiny, 1.0, r))
            up = np.where(
                tiny,
                # limit of du/ds at the tip: d/ds[(d . P')/r]; expanding about
                # s=1 gives -(P'.P'')/|P'|
                -np.einsum("...i,...i->...", pp, ppp) / norm_pp,
                (norm_pp ** 2 + np.einsum("...i,...i->...", d, ppp) - u * u)
                / np.where(tiny, 1.0, r),
            )
        ds_dr = 1.0 / u
        d2s_dr2 = -up / u ** 3
        vel = pp * ds_dr[..., None]
        acc = ppp * (ds_dr ** 2)[..., None] + pp * d2s_dr2[..., None]
        if scalar:
            return vel[0], acc[0]
        return vel, acc

    def chord_velocity(self, r):
        return self._vel_accel(r)[0]

    def chord_accel(self, r):
        return self._vel_accel(r)[1]


# ---------------------------------------------------------------------------
# tip-centered slit coordinates


def extended_polar(curve: CrackCurve, x, side=None):
    """Tip-centered polar coordinates with the branch cut on the crack.

    Parameters
    ----------
    curve : CrackCurve
    x : (..., 2) points; the tip itself is rejected.
    side : None, scalar, or array broadcastable to the leading shape, with
        values +1 (point belongs to upper-face material), -1 (lower), 0/None
        (no hint).  The hint disambiguates points whose straight-element
        geometry puts them marginally across the exact curve.

    Returns
    -------
    (r, theta) with theta in [-pi - zeta(r), pi - zeta(r)] up to the hinted
    continuation band.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    d = x - curve.tip
    r = np.sqrt(np.einsum("...i,...i->...", d, d))
    if np.any(r < 1e-300):
        raise ValueError("extended polar coordinates are undefined at the tip")
    g1, g2 = curve.frame(0.0)
    theta_raw = np.arctan2(d @ g2, d @ g1)
    zeta = curve.secant_angle(r)
    phi = _wrap_pi(theta_raw + zeta)
    if side is not None:
        side = np.broadcast_to(np.asarray(side), phi.shape)
        up = (side > 0) & (phi < -0.5 * np.pi)
        lo = (side < 0) & (phi > 0.5 * np.pi)
        phi = phi + 2.0 * np.pi * up - 2.0 * np.pi * lo
    theta = phi - zeta
    if scalar:
        return float(r[0]), float(theta[0])
    return r, theta


def angle_map_phi(curve: CrackCurve, r, theta):
    """Shifted angle phi = theta + zeta(r); the crack faces sit at +-pi."""
    return np.asarray(theta, dtype=float) + curve.secant_angle(r)


def face_theta(curve: CrackCurve, r, side):
    """Extended angle of a crack face at chord distance r (side = +-1)."""
    return np.asarray(side, dtype=float) * np.pi - curve.secant_angle(r)


def project_constant_radius(curve: CrackCurve, x):
    """Project a point onto the crack at equal chord distance from the tip."""
    x = np.asarray(x, dtype=float)
    d = x - curve.tip
    r = np.sqrt(np.einsum("...i,...i->...", d, d))
    return curve.chord_point(r)
