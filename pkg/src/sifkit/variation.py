"""Radial cutoff and the two admissible material-variation directions.

The cutoff is 1 on [0, rho_inner], eases to 0 on [rho_inner, rho] through the
C^2 quintic 1 - (10 t^3 - 15 t^4 + 6 t^5), and vanishes beyond.  A material
variation is the cutoff times a direction field:

- ``uni``: the fixed tip extension direction g1(0) everywhere;
- ``tan``: the curve-following direction g1(r), which keeps the variation
  tangent to the crack on both faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CrackCurve

VARIATION_KINDS = ("uni", "tan")


@dataclass(frozen=True)
class RadialCutoff:
    """C^2 plateau-and-quintic cutoff supported on [0, rho]."""

    rho: float
    rho_inner: float = field(default=None)  # defaults to rho / 4

    def __post_init__(self):
        if self.rho_inner is None:
            object.__setattr__(self, "rho_inner", 0.25 * self.rho)
        if not (0.0 < self.rho_inner < self.rho):
            raise ValueError("need 0 < rho_inner < rho")

    def _t(self, r):
        return (np.asarray(r, dtype=float) - self.rho_inner) / (self.rho - self.rho_inner)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip(self._t(r), 0.0, 1.0)
        out = 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
        return out if out.ndim else float(out)

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        t = self._t(r)
        mid = (t > 0.0) & (t < 1.0)
        tm = np.where(mid, t, 0.0)
        out = np.where(mid, -30.0 * tm * tm * (1.0 - tm) ** 2 / (self.rho - self.rho_inner), 0.0)
        return out if out.ndim else float(out)

    def curvature(self, r):
        r = np.asarray(r, dtype=float)
        t = self._t(r)
        mid = (t > 0.0) & (t < 1.0)
        tm = np.where(mid, t, 0.0)
        out = np.where(
            mid,
            -60.0 * tm * (1.0 - tm) * (1.0 - 2.0 * tm) / (self.rho - self.rho_inner) ** 2,
            0.0,
        )
        return out if out.ndim else float(out)


class MaterialVariation:
    """Cutoff times direction field, with its spatial gradient.

    ``value`` and ``gradient`` take points of shape (..., 2); the tip itself
    evaluates to the direction g1(0) with no radial part in the gradient.
    """

    def __init__(self, kind: str, curve: CrackCurve, cutoff: RadialCutoff):
        if kind not in VARIATION_KINDS:
            raise ValueError(f"kind must be one of {VARIATION_KINDS}")
        self.kind = kind
        self.curve = curve
        self.cutoff = cutoff

    def _radius_dir(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.curve.tip
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        safe = np.maximum(r, 1e-300)
        e_r = d / safe[..., None]
        return r, e_r

    def direction(self, r):
        """The direction field at chord radius r (g1(0) or g1(r))."""
        if self.kind == "uni":
            g1, _ = self.curve.frame(0.0)
            r = np.asarray(r, dtype=float)
            return np.broadcast_to(g1, r.shape + (2,)).copy()
        rc = np.minimum(np.asarray(r, dtype=float), self.curve.chord_limit)
        g1, _ = self.curve.frame(rc)
        return g1

    def direction_rate(self, r):
        """d(direction)/dr."""
        r = np.asarray(r, dtype=float)
        if self.kind == "uni":
            return np.zeros(r.shape + (2,))
        rc = np.minimum(r, self.curve.chord_limit)
        g1p, _ = self.curve.frame_rate(rc)
        return np.where((r < self.curve.chord_limit)[..., None], g1p, 0.0)

    def value(self, x):
        r, _ = self._radius_dir(x)
        q = np.asarray(self.cutoff.value(r))
        return q[..., None] * self.direction(r)

    def value_at_radius(self, r):
        """Variation on a crack face (depends on position only through r)."""
        q = np.asarray(self.cutoff.value(r))
        return q[..., None] * self.direction(np.asarray(r, dtype=float))

    def gradient(self, x):
        """Spatial gradient, out[..., i, j] = d(value_i)/dx_j."""
        r, e_r = self._radius_dir(x)
        q = np.asarray(self.cutoff.value(r))
        qp = np.asarray(self.cutoff.slope(r))
        radial = qp[..., None] * self.direction(r) + q[..., None] * self.direction_rate(r)
        out = np.einsum("...i,...j->...ij", radial, e_r)
        # at the tip the radial direction is undefined but the prefactor
        # (q' = 0, direction_rate bounded, q = 1) keeps the tip-fan gradients
        # finite; zero the ill-defined dyad exactly at r = 0
        tipmask = r < 1e-300
        if np.any(tipmask):
            out = np.where(tipmask[..., None, None], 0.0, out)
        return out
