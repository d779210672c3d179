"""Near-tip reference fields and their two curved-crack extensions.

The straight-crack (rectilinear) mode I / mode II fields are the classical
inverse-square-root asymptotics.  Displacement gradients are tabulated in the
local frame; stresses are *always* derived from gradients through the
constitutive law, which guarantees consistency of the normalization, the
traction-free faces, and the plane-state constants.

Two extensions to a curved crack are provided, both expressed at a point x
through the tip-centered slit coordinates (r, theta):

- ``dfc`` (divergence-free, compatible): the rectilinear field evaluated at
  the extended angle and expressed on the *tip* frame.  It remains an exact
  equilibrium state (it is just the straight-crack field with a bent branch
  cut), but its tractions on the curved faces do not vanish.
- ``tf`` (traction-free): components evaluated at the face-aligned angle
  phi = theta + zeta(r) and transported onto the moving frame (g1(r), g2(r)).
  Its tractions vanish on the curved faces, but it is neither
  divergence-free nor compatible.

On a straight crack the two extensions coincide.
"""

from __future__ import annotations

import numpy as np

from .elasticity import Material
from .geometry import CrackCurve, extended_polar, face_theta, rot90

MODES = ("I", "II")
FLAVORS = ("dfc", "tf")

_COS, _SIN = 0, 1

# Each displacement-gradient component in the local frame has the form
#     sign * trig((psi)/2) * (a cos psi + b cos 2 psi + c0 + ck * kolosov)
# all divided by 4 mu sqrt(2 pi r).  Rows index the displacement component,
# columns the differentiation direction.
_GRAD_TABLE = {
    "I": [
        [(_COS, +1.0, -1.0, +1.0, -1.0, +1.0), (_SIN, +1.0, +1.0, +1.0, +1.0, +1.0)],
        [(_SIN, +1.0, +1.0, +1.0, -1.0, -1.0), (_COS, +1.0, +1.0, -1.0, -1.0, +1.0)],
    ],
    "II": [
        [(_SIN, -1.0, +1.0, +1.0, +1.0, +1.0), (_COS, +1.0, -1.0, +1.0, +3.0, +1.0)],
        [(_COS, +1.0, -1.0, +1.0, +1.0, -1.0), (_SIN, +1.0, +1.0, +1.0, +3.0, -1.0)],
    ],
}

# Displacement components: sign * trig(psi/2) * (a cos psi + c0 + ck kolosov),
# scaled by sqrt(r / 2 pi) / (2 mu).
_DISP_TABLE = {
    "I": [(_COS, +1.0, -1.0, 0.0, +1.0), (_SIN, +1.0, -1.0, 0.0, +1.0)],
    "II": [(_SIN, +1.0, +1.0, +2.0, +1.0), (_COS, +1.0, -1.0, +2.0, -1.0)],
}


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be 'I' or 'II', got {mode!r}")


def _angular_matrix(mode, psi, kolosov, derivative=False):
    """The 2x2 angular factor of the displacement gradient, vectorized.

    Returns shape psi.shape + (2, 2); with ``derivative`` the entries are
    differentiated in psi.
    """
    psi = np.asarray(psi, dtype=float)
    half = 0.5 * psi
    c, s = np.cos(half), np.sin(half)
    cp, c2p = np.cos(psi), np.cos(2.0 * psi)
    sp, s2p = np.sin(psi), np.sin(2.0 * psi)
    out = np.empty(psi.shape + (2, 2))
    for i in range(2):
        for j in range(2):
            kind, sign, a, b, c0, ck = _GRAD_TABLE[mode][i][j]
            poly = a * cp + b * c2p + c0 + ck * kolosov
            trig = c if kind == _COS else s
            if not derivative:
                out[..., i, j] = sign * trig * poly
            else:
                dtrig = -0.5 * s if kind == _COS else 0.5 * c
                dpoly = -a * sp - 2.0 * b * s2p
                out[..., i, j] = sign * (dtrig * poly + trig * dpoly)
    return out


def _angular_stress(mode, psi, mat: Material, derivative=False):
    """Angular factor of the stress: constitutive law applied to the angular
    gradient matrix (the radial scaling of both differs only by the factor
    1/(4 mu) absorbed here: sigma = T(psi) / sqrt(2 pi r))."""
    w = _angular_matrix(mode, psi, mat.kolosov, derivative)
    sym = 0.5 * (w + np.swapaxes(w, -1, -2))
    tr = np.trace(sym, axis1=-2, axis2=-1)
    t = mat.lam_eff * tr[..., None, None] * np.eye(2) + 2.0 * mat.mu * sym
    return t / (4.0 * mat.mu)


def _radial_guard(r, scale):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 1e-12 * max(1.0, scale)):
        raise ValueError("near-tip fields are singular: radius too small or nonpositive")
    return r


def williams_gradient(mode, r, psi, mat: Material):
    """Displacement gradient of the unit-SIF rectilinear near-tip field.

    Components are in the local frame (extension direction, normal), evaluated
    at polar angle psi; shape broadcast of r/psi plus (2, 2).
    """
    _check_mode(mode)
    r = _radial_guard(r, 1.0)
    w = _angular_matrix(mode, psi, mat.kolosov)
    scale = 1.0 / (4.0 * mat.mu * np.sqrt(2.0 * np.pi * r))
    return scale[..., None, None] * w if np.ndim(scale) else scale * w


def williams_stress(mode, r, psi, mat: Material):
    """Stress of the unit-SIF rectilinear field (constitutive route)."""
    _check_mode(mode)
    r = _radial_guard(r, 1.0)
    t = _angular_stress(mode, psi, mat)
    scale = 1.0 / np.sqrt(2.0 * np.pi * r)
    return scale[..., None, None] * t if np.ndim(scale) else scale * t


def williams_displacement(mode, r, psi, mat: Material):
    """Displacement of the unit-SIF rectilinear field, local-frame components."""
    _check_mode(mode)
    r = np.asarray(r, dtype=float)
    psi = np.asarray(psi, dtype=float)
    half = 0.5 * psi
    trigs = {_COS: np.cos(half), _SIN: np.sin(half)}
    cp = np.cos(psi)
    out = np.empty(np.broadcast_shapes(r.shape, psi.shape) + (2,))
    for i in range(2):
        kind, sign, a, c0, ck = _DISP_TABLE[mode][i]
        out[..., i] = sign * trigs[kind] * (a * cp + c0 + ck * mat.kolosov)
    return np.sqrt(r / (2.0 * np.pi))[..., None] / (2.0 * mat.mu) * out


class AuxiliaryField:
    """One unit-SIF auxiliary field on a curved crack.

    Parameters
    ----------
    flavor : "dfc" or "tf"
    mode : "I" or "II"
    curve : CrackCurve
    mat : Material

    Point evaluators take arrays of shape (N, 2) (or a single point) plus an
    optional side hint; face evaluators take chord radii and a face side.
    """

    def __init__(self, flavor, mode, curve: CrackCurve, mat: Material):
        if flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}")
        _check_mode(mode)
        self.flavor = flavor
        self.mode = mode
        self.curve = curve
        self.mat = mat

    # -- coordinate plumbing --------------------------------------------

    def _polar(self, x, side):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        x = np.atleast_2d(x)
        r, theta = extended_polar(self.curve, x, side)
        _radial_guard(r, self.curve.rho_max)
        if self.flavor == "tf" and np.any(r > self.curve.rho_max * (1.0 + 1e-12)):
            raise ValueError("traction-free extension is defined only within rho_max")
        return r, theta, scalar

    def _tf_pack(self, r):
        """Geometry arrays for the moving-frame transport at radii r."""
        c = self.curve
        zeta = c.secant_angle(r)
        zeta_p = c.secant_angle_rate(r)
        g1, g2 = c.frame(r)
        g1p, g2p = c.frame_rate(r)
        Q = np.stack([g1, g2], axis=-1)       # columns are the frame vectors
        Qp = np.stack([g1p, g2p], axis=-1)
        return zeta, zeta_p, Q, Qp

    # -- values ----------------------------------------------------------

    def beta(self, x, side=None):
        """Displacement gradient at points x (global components)."""
        r, theta, scalar = self._polar(x, side)
        out = self._value(r, theta, stress=False)
        return out[0] if scalar else out

    def stress_field(self, x, side=None):
        """Stress at points x (global components)."""
        r, theta, scalar = self._polar(x, side)
        out = self._value(r, theta, stress=True)
        return out[0] if scalar else out

    def face_beta(self, r, side):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = face_theta(self.curve, r, side)
        return self._value(r, theta, stress=False)

    def face_stress(self, r, side):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = face_theta(self.curve, r, side)
        return self._value(r, theta, stress=True)

    def _value(self, r, theta, stress):
        mat = self.mat
        if self.flavor == "dfc":
            psi = theta
            g1, g2 = self.curve.frame(0.0)
            Q = np.stack([g1, g2], axis=-1)
            if stress:
                loc = _angular_stress(self.mode, psi, mat) / np.sqrt(2 * np.pi * r)[..., None, None]
            else:
                loc = _angular_matrix(self.mode, psi, mat.kolosov) \
                    / (4 * mat.mu * np.sqrt(2 * np.pi * r))[..., None, None]
            return np.einsum("pi,...ij,qj->...pq", Q, loc, Q)
        zeta, _, Q, _ = self._tf_pack(r)
        psi = theta + zeta
        if stress:
            loc = _angular_stress(self.mode, psi, mat) / np.sqrt(2 * np.pi * r)[..., None, None]
        else:
            loc = _angular_matrix(self.mode, psi, mat.kolosov) \
                / (4 * mat.mu * np.sqrt(2 * np.pi * r))[..., None, None]
        return np.einsum("...pi,...ij,...qj->...pq", Q, loc, Q)

    # -- displacement (dfc only; used for manufactured boundary data) ----

    def displacement(self, x, side=None):
        """Displacement field of the dfc extension (global components)."""
        if self.flavor != "dfc":
            raise ValueError("displacement is provided for the dfc extension only")
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        x = np.atleast_2d(x)
        r, theta = extended_polar(self.curve, x, side)
        u_loc = williams_displacement(self.mode, r, theta, self.mat)
        g1, g2 = self.curve.frame(0.0)
        Q = np.stack([g1, g2], axis=-1)
        out = np.einsum("pi,...i->...p", Q, u_loc)
        return out[0] if scalar else out

    # -- derivatives ------------------------------------------------------

    def derivatives(self, x, side=None):
        """(grad_beta, grad_sigma, div_sigma) at points x.

        grad_beta[..., i, j, k] = d beta_ij / dx_k, etc.  For the dfc flavor
        the divergence is exactly zero and is returned as exact zeros.
        """
        r, theta, scalar = self._polar(x, side)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - self.curve.tip
        e_r = d / r[..., None]
        e_t = rot90(e_r)
        grad_r = e_r                       # d r / dx
        grad_th = e_t / r[..., None]       # d theta_raw / dx (= d theta, dfc)

        if self.flavor == "dfc":
            gb = self._dfc_grad(r, theta, grad_r, grad_th, stress=False)
            gs = self._dfc_grad(r, theta, grad_r, grad_th, stress=True)
            div = np.zeros(r.shape + (2,))
        else:
            gb = self._tf_grad(r, theta, grad_r, grad_th, stress=False)
            gs = self._tf_grad(r, theta, grad_r, grad_th, stress=True)
            div = np.einsum("...ikk->...i", gs)
        if scalar:
            return gb[0], gs[0], div[0]
        return gb, gs, div

    def _local_polar_derivs(self, r, psi, stress):
        """Local-frame angular matrix M, dM/dr, dM/dpsi at (r, psi)."""
        mat = self.mat
        if stress:
            ang = _angular_stress(self.mode, psi, mat)
            ang_p = _angular_stress(self.mode, psi, mat, derivative=True)
            scale = 1.0 / np.sqrt(2.0 * np.pi * r)
        else:
            ang = _angular_matrix(self.mode, psi, mat.kolosov)
            ang_p = _angular_matrix(self.mode, psi, mat.kolosov, derivative=True)
            scale = 1.0 / (4.0 * mat.mu * np.sqrt(2.0 * np.pi * r))
        scale = scale[..., None, None]
        M = scale * ang
        dM_dr = -0.5 * M / r[..., None, None]
        dM_dpsi = scale * ang_p
        return M, dM_dr, dM_dpsi

    def _dfc_grad(self, r, theta, grad_r, grad_th, stress):
        M, dMr, dMp = self._local_polar_derivs(r, theta, stress)
        g1, g2 = self.curve.frame(0.0)
        Q = np.stack([g1, g2], axis=-1)
        dMr = np.einsum("pi,...ij,qj->...pq", Q, dMr, Q)
        dMp = np.einsum("pi,...ij,qj->...pq", Q, dMp, Q)
        return (dMr[..., None] * grad_r[..., None, None, :]
                + dMp[..., None] * grad_th[..., None, None, :])

    def _tf_grad(self, r, theta, grad_r, grad_th, stress):
        zeta, zeta_p, Q, Qp = self._tf_pack(r)
        psi = theta + zeta
        M, dMr, dMp = self._local_polar_derivs(r, psi, stress)
        # chain rule: psi varies with r through zeta, and with theta directly
        comp_r = dMr + zeta_p[..., None, None] * dMp
        glob = lambda A: np.einsum("...pi,...ij,...qj->...pq", Q, A, Q)
        val_r = glob(comp_r) \
            + np.einsum("...pi,...ij,...qj->...pq", Qp, M, Q) \
            + np.einsum("...pi,...ij,...qj->...pq", Q, M, Qp)
        val_t = glob(dMp)
        return (val_r[..., None] * grad_r[..., None, None, :]
                + val_t[..., None] * grad_th[..., None, None, :])


def aux_derivatives(flavor, mode, curve, x, mat, side=None):
    """Functional wrapper over :meth:`AuxiliaryField.derivatives`."""
    return AuxiliaryField(flavor, mode, curve, mat).derivatives(x, side)
