"""Tensor algebra unit and property tests.

The reference implementations here are deliberately written as plain index
loops so the einsum-based library code is checked against an independent
formulation.
"""

import numpy as np
import pytest

from sifkit.elasticity import (
    Material,
    eshelby_momentum,
    interaction_flux,
    interaction_momentum,
    interaction_source,
    mutual_energy,
    stress,
)

rng = np.random.default_rng(20260823)


def loop_stress(beta, mat):
    sym = 0.5 * (beta + beta.T)
    sig = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            sig[i, j] = 2.0 * mat.mu * sym[i, j]
            if i == j:
                sig[i, j] += mat.lam_eff * (sym[0, 0] + sym[1, 1])
    return sig


def loop_momentum(beta_a, beta_b, mat):
    sig_a = loop_stress(beta_a, mat)
    sig_b = loop_stress(beta_b, mat)
    w = sum(sig_a[i, j] * beta_b[i, j] for i in range(2) for j in range(2))
    out = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            out[i, j] = w * (i == j)
            for k in range(2):
                out[i, j] -= beta_a[k, i] * sig_b[k, j] + beta_b[k, i] * sig_a[k, j]
    return out


def loop_flux(beta_a, beta_b, n, tbar, mat):
    sig_b = loop_stress(beta_b, mat)
    w = sum(loop_stress(beta_a, mat)[i, j] * beta_b[i, j] for i in range(2) for j in range(2))
    out = np.zeros(2)
    for i in range(2):
        out[i] = w * n[i]
        for j in range(2):
            out[i] -= beta_b[j, i] * tbar[j]
            for k in range(2):
                out[i] -= beta_a[j, i] * sig_b[j, k] * n[k]
    return out


def loop_source(beta_a, sigma_a, beta_b, gb, gs, div_s, b):
    out = np.zeros(2)
    for i in range(2):
        for m in range(2):
            for n in range(2):
                out[i] += beta_a[m, n] * gs[m, n, i]
        for k in range(2):
            for j in range(2):
                out[i] -= sigma_a[k, j] * gb[k, i, j]
            out[i] -= beta_a[k, i] * div_s[k]
            out[i] += beta_b[k, i] * b[k]
    return out


MATS = [
    Material(lam=1.0, mu=1.0, plane="strain"),
    Material(lam=1.0, mu=1.0, plane="stress"),
    Material.from_engineering(1000.0, 0.2, "strain"),
    Material.from_engineering(73.0, 0.33, "stress"),
]


def test_identity_gradient_plane_strain():
    # beta = I with lam = mu = 1 in plane strain gives sigma = diag(4, 4)
    mat = Material(lam=1.0, mu=1.0, plane="strain")
    sig = stress(np.eye(2), mat)
    assert np.allclose(sig, 4.0 * np.eye(2), atol=1e-15)


def test_from_engineering_roundtrip():
    mat = Material.from_engineering(1000.0, 0.2, "strain")
    assert mat.young == pytest.approx(1000.0, rel=1e-14)
    assert mat.poisson == pytest.approx(0.2, rel=1e-14)
    assert mat.mu == pytest.approx(1250.0 / 3.0, rel=1e-14)
    assert mat.lam == pytest.approx(2500.0 / 9.0, rel=1e-14)


@pytest.mark.parametrize("mat", MATS)
def test_stress_matches_loop_reference(mat):
    for _ in range(20):
        beta = rng.normal(size=(2, 2))
        assert np.allclose(stress(beta, mat), loop_stress(beta, mat), atol=1e-12)


@pytest.mark.parametrize("mat", MATS)
def test_stress_symmetrizes(mat):
    beta = rng.normal(size=(2, 2))
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(stress(beta, mat), stress(beta + 3.0 * skew, mat), atol=1e-12)
    sig = stress(beta, mat)
    assert abs(sig[0, 1] - sig[1, 0]) < 1e-15


@pytest.mark.parametrize("mat", MATS)
def test_mutual_energy_symmetry(mat):
    for _ in range(20):
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2))
        assert mutual_energy(a, b, mat) == pytest.approx(mutual_energy(b, a, mat), abs=1e-12)


@pytest.mark.parametrize("mat", MATS)
def test_momentum_matches_loop_and_symmetry(mat):
    for _ in range(20):
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2))
        s_ab = interaction_momentum(a, b, mat)
        assert np.allclose(s_ab, loop_momentum(a, b, mat), atol=1e-12)
        # symmetric under swapping the two fields
        assert np.allclose(s_ab, interaction_momentum(b, a, mat), atol=1e-12)


@pytest.mark.parametrize("mat", MATS)
def test_momentum_bilinearity(mat):
    a1 = rng.normal(size=(2, 2))
    a2 = rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2))
    c1, c2 = 0.7, -1.3
    lhs = interaction_momentum(c1 * a1 + c2 * a2, b, mat)
    rhs = c1 * interaction_momentum(a1, b, mat) + c2 * interaction_momentum(a2, b, mat)
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("mat", MATS)
def test_eshelby_is_half_diagonal_momentum(mat):
    for _ in range(10):
        beta = rng.normal(size=(2, 2))
        direct = 0.5 * mutual_energy(beta, beta, mat) * np.eye(2) \
            - beta.T @ stress(beta, mat)
        assert np.allclose(eshelby_momentum(beta, mat), direct, atol=1e-12)
        assert np.allclose(eshelby_momentum(beta, mat),
                           0.5 * interaction_momentum(beta, beta, mat), atol=1e-12)


@pytest.mark.parametrize("mat", MATS)
def test_flux_matches_loop_reference(mat):
    for _ in range(20):
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2))
        n = rng.normal(size=2)
        n /= np.linalg.norm(n)
        tbar = rng.normal(size=2)
        assert np.allclose(interaction_flux(a, b, n, tbar, mat),
                           loop_flux(a, b, n, tbar, mat), atol=1e-12)


def test_source_matches_loop_reference():
    for _ in range(20):
        a = rng.normal(size=(2, 2))
        sa = rng.normal(size=(2, 2))
        bb = rng.normal(size=(2, 2))
        gb = rng.normal(size=(2, 2, 2))
        gs = rng.normal(size=(2, 2, 2))
        div_s = rng.normal(size=2)
        bf = rng.normal(size=2)
        got = interaction_source(a, sa, bb, gb, gs, div_s, bf)
        assert np.allclose(got, loop_source(a, sa, bb, gb, gs, div_s, bf), atol=1e-12)


def test_batched_evaluation_matches_pointwise():
    mat = MATS[2]
    betas = rng.normal(size=(7, 2, 2))
    sig = stress(betas, mat)
    for i in range(7):
        assert np.allclose(sig[i], stress(betas[i], mat), atol=1e-14)
    mom = interaction_momentum(betas, betas[::-1], mat)
    for i in range(7):
        assert np.allclose(mom[i], interaction_momentum(betas[i], betas[6 - i], mat), atol=1e-14)


@pytest.mark.parametrize("young,poisson", [(1000.0, 0.2), (73.0, 0.33), (1.0, 0.45)])
def test_sif_compliance_identities(young, poisson):
    # plane strain: eta = 2 (1 - nu^2) / E
    m = Material.from_engineering(young, poisson, "strain")
    assert m.sif_compliance == pytest.approx(2.0 * (1.0 - poisson ** 2) / young, rel=1e-12)
    assert m.kolosov == pytest.approx(3.0 - 4.0 * poisson, rel=1e-12)
    # plane stress: eta = 2 / E, kolosov = (3 - nu)/(1 + nu)
    m = Material.from_engineering(young, poisson, "stress")
    assert m.sif_compliance == pytest.approx(2.0 / young, rel=1e-12)
    assert m.kolosov == pytest.approx((3.0 - poisson) / (1.0 + poisson), rel=1e-12)
    lam, mu = m.lam, m.mu
    assert m.sif_compliance == pytest.approx(2.0 * (lam + mu) / (mu * (3.0 * lam + 2.0 * mu)),
                                             rel=1e-12)


def test_plane_state_guard():
    with pytest.raises(ValueError):
        Material(lam=1.0, mu=1.0, plane="axisym")
