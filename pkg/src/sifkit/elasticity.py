"""Plane linear elasticity: material constants and pointwise tensor algebra.

Conventions used throughout the package:

- ``beta`` is the displacement gradient, ``beta[i, j] = du_i / dx_j``.
- Third-order arrays ("Ten3") index as ``grad_beta[i, j, k] = d beta_ij / dx_k``.
- All functions broadcast over leading axes, so a batch of N points can be
  processed as arrays of shape ``(N, 2, 2)`` etc.

The constitutive law is isotropic plane strain or plane stress, written with
the effective first parameter ``lam_eff`` so both plane states share one code
path:

    sigma(beta) = lam_eff * tr(sym beta) * I + 2 mu * sym beta
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EYE2 = np.eye(2)


@dataclass(frozen=True)
class Material:
    """Isotropic plane elastic material.

    Parameters
    ----------
    lam, mu : float
        Lame constants of the bulk (3D) material.
    plane : str
        Either ``"strain"`` or ``"stress"``.
    """

    lam: float
    mu: float
    plane: str = "strain"

    def __post_init__(self):
        if self.plane not in ("strain", "stress"):
            raise ValueError(f"plane must be 'strain' or 'stress', got {self.plane!r}")
        if self.mu <= 0.0:
            raise ValueError("shear modulus mu must be positive")

    @classmethod
    def from_engineering(cls, young: float, poisson: float, plane: str = "strain") -> "Material":
        lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
        mu = young / (2.0 * (1.0 + poisson))
        return cls(lam=lam, mu=mu, plane=plane)

    @property
    def lam_eff(self) -> float:
        """Effective first Lame parameter of the 2D law."""
        if self.plane == "strain":
            return self.lam
        return 2.0 * self.lam * self.mu / (self.lam + 2.0 * self.mu)

    @property
    def poisson_eff(self) -> float:
        """Poisson ratio associated with ``lam_eff`` (equals nu in plane strain)."""
        le = self.lam_eff
        return le / (2.0 * (le + self.mu))

    @property
    def kolosov(self) -> float:
        """Kolosov constant of the plane state: 3 - 4 nu_eff.

        Evaluates to 3 - 4 nu in plane strain and (3 - nu)/(1 + nu) in plane
        stress.  This is the unique value for which the near-tip fields built
        in :mod:`sifkit.fields` have traction-free faces and the standard
        normalization.
        """
        return 3.0 - 4.0 * self.poisson_eff

    @property
    def sif_compliance(self) -> float:
        """Factor eta relating the interaction functional to SIF products.

        For true and auxiliary SIF pairs, functional = eta * (KIa KIb + KIIa KIIb).
        Equals (lam+2mu)/(2mu(lam+mu)) in plane strain, i.e. 2(1-nu^2)/E.
        """
        le = self.lam_eff
        return (le + 2.0 * self.mu) / (2.0 * self.mu * (le + self.mu))

    @property
    def young(self) -> float:
        return self.mu * (3.0 * self.lam + 2.0 * self.mu) / (self.lam + self.mu)

    @property
    def poisson(self) -> float:
        return self.lam / (2.0 * (self.lam + self.mu))


def stress(beta, mat: Material):
    """Stress from a displacement gradient; symmetrizes internally.

    beta : (..., 2, 2) -> sigma : (..., 2, 2)
    """
    beta = np.asarray(beta, dtype=float)
    sym = 0.5 * (beta + np.swapaxes(beta, -1, -2))
    tr = np.trace(sym, axis1=-2, axis2=-1)
    return mat.lam_eff * tr[..., None, None] * _EYE2 + 2.0 * mat.mu * sym


def mutual_energy(beta_a, beta_b, mat: Material):
    """Mutual strain energy density sigma(beta_a) : beta_b (symmetric in a, b)."""
    sig_a = stress(beta_a, mat)
    return np.einsum("...ij,...ij->...", sig_a, np.asarray(beta_b, dtype=float))


def interaction_momentum(beta_a, beta_b, mat: Material):
    """Two-field momentum tensor driving the interaction volume term.

    S_ij = sigma(a):b delta_ij - beta_a_ki sigma_b_kj - beta_b_ki sigma_a_kj
    """
    beta_a = np.asarray(beta_a, dtype=float)
    beta_b = np.asarray(beta_b, dtype=float)
    sig_a = stress(beta_a, mat)
    sig_b = stress(beta_b, mat)
    w = np.einsum("...ij,...ij->...", sig_a, beta_b)
    out = w[..., None, None] * _EYE2
    out = out - np.einsum("...ki,...kj->...ij", beta_a, sig_b)
    out = out - np.einsum("...ki,...kj->...ij", beta_b, sig_a)
    return out


def eshelby_momentum(beta, mat: Material):
    """Classical energy-momentum tensor, equal to half the two-field one at a=b."""
    beta = np.asarray(beta, dtype=float)
    sig = stress(beta, mat)
    w = 0.5 * np.einsum("...ij,...ij->...", sig, beta)
    return w[..., None, None] * _EYE2 - np.einsum("...ki,...kj->...ij", beta, sig)


def interaction_flux(beta_a, beta_b, normal, traction, mat: Material):
    """Boundary flux of the interaction functional on a surface with prescribed
    traction.

    t_i = w n_i - beta_a_ji sigma_b_jk n_k - beta_b_ji tbar_j

    Parameters
    ----------
    beta_a : (..., 2, 2)
        Field whose traction on the surface is prescribed (the "true" field).
    beta_b : (..., 2, 2)
        The paired (auxiliary) field.
    normal : (..., 2)
        Outward unit normal (caller guarantees |n| = 1).
    traction : (..., 2)
        Prescribed traction of field ``a`` on the surface.
    """
    beta_a = np.asarray(beta_a, dtype=float)
    beta_b = np.asarray(beta_b, dtype=float)
    normal = np.asarray(normal, dtype=float)
    traction = np.asarray(traction, dtype=float)
    sig_b = stress(beta_b, mat)
    w = np.einsum("...ij,...ij->...", stress(beta_a, mat), beta_b)
    out = w[..., None] * normal
    out = out - np.einsum("...ji,...jk,...k->...i", beta_a, sig_b, normal)
    out = out - np.einsum("...ji,...j->...i", beta_b, traction)
    return out


def interaction_source(beta_a, sigma_a, beta_b, grad_beta_b, grad_sigma_b,
                       div_sigma_b, body_force):
    """Volume co-vector multiplying the material variation after integration
    by parts.

    l_i = beta_a_mn d_i sigma_b_mn - sigma_a_kj d_j beta_b_ki
          - beta_a_ki (div sigma_b)_k + beta_b_ki b_k

    ``grad_sigma_b[m, n, i] = d sigma_b_mn / dx_i`` and likewise for
    ``grad_beta_b``.
    """
    beta_a = np.asarray(beta_a, dtype=float)
    sigma_a = np.asarray(sigma_a, dtype=float)
    beta_b = np.asarray(beta_b, dtype=float)
    grad_beta_b = np.asarray(grad_beta_b, dtype=float)
    grad_sigma_b = np.asarray(grad_sigma_b, dtype=float)
    div_sigma_b = np.asarray(div_sigma_b, dtype=float)
    body_force = np.asarray(body_force, dtype=float)
    out = np.einsum("...mn,...mni->...i", beta_a, grad_sigma_b)
    out = out - np.einsum("...kj,...kij->...i", sigma_a, grad_beta_b)
    out = out - np.einsum("...ki,...k->...i", beta_a, div_sigma_b)
    out = out + np.einsum("...ki,...k->...i", beta_b, body_force)
    return out
