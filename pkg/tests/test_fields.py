"""Near-tip field tests: tables, normalization, and the two curved extensions.

The gradient tables are checked against finite differences of the
displacement table (an independent statement of the same field), stresses are
checked against the classical printed mode-I angular functions, and the
curved-crack extensions are checked against their defining properties
(equilibrium for one, face tractions for the other).
"""

import numpy as np
import pytest

from sifkit.elasticity import Material, stress
from sifkit.fields import (
    AuxiliaryField,
    williams_displacement,
    williams_gradient,
    williams_stress,
)
from sifkit.geometry import ArcCrack, CubicCrack, StraightCrack

rng = np.random.default_rng(1905)

MAT = Material.from_engineering(1000.0, 0.2, "strain")
MAT_ALT = Material(lam=0.7, mu=0.9, plane="stress")


def bench_arc():
    return ArcCrack(center=(0.0, 0.0), radius=1.0, tip_angle=0.0,
                    orientation=-1, alpha=0.5 * np.pi)


CURVED = [bench_arc(), CubicCrack()]


# ---------------------------------------------------------------------------
# rectilinear tables


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("mat", [MAT, MAT_ALT])
def test_gradient_table_is_gradient_of_displacement(mode, mat):
    # place a straight crack so local frame == global frame, then finite
    # difference the displacement table in cartesian coordinates
    h = 1e-7
    for r in [0.3, 1.1]:
        for th in np.linspace(-2.9, 2.9, 11):
            x = np.array([r * np.cos(th), r * np.sin(th)])

            def u(p):
                rr = np.hypot(p[0], p[1])
                tt = np.arctan2(p[1], p[0])
                return williams_displacement(mode, rr, tt, mat)

            grad_fd = np.empty((2, 2))
            for j in range(2):
                dx = np.zeros(2)
                dx[j] = h
                grad_fd[:, j] = (u(x + dx) - u(x - dx)) / (2 * h)
            grad = williams_gradient(mode, r, th, mat)
            assert np.allclose(grad, grad_fd, atol=2e-6 * max(1.0, 1.0 / mat.mu))


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("mat", [MAT, MAT_ALT])
def test_stress_is_constitutive_image_of_gradient(mode, mat):
    for r in [0.05, 0.8]:
        th = rng.uniform(-3.0, 3.0)
        sig = williams_stress(mode, r, th, mat)
        assert np.allclose(sig, stress(williams_gradient(mode, r, th, mat), mat),
                           rtol=1e-13, atol=1e-16)


def test_mode_I_normalization_ahead_of_tip():
    for r in [1e-3, 0.1, 2.0]:
        sig = williams_stress("I", r, 0.0, MAT)
        scale = 1.0 / np.sqrt(2.0 * np.pi * r)
        assert sig[0, 0] == pytest.approx(scale, rel=1e-13)
        assert sig[1, 1] == pytest.approx(scale, rel=1e-13)
        assert abs(sig[0, 1]) < 1e-14 * scale


def test_mode_II_normalization_ahead_of_tip():
    for r in [1e-3, 0.1, 2.0]:
        sig = williams_stress("II", r, 0.0, MAT)
        scale = 1.0 / np.sqrt(2.0 * np.pi * r)
        assert sig[0, 1] == pytest.approx(scale, rel=1e-13)
        assert abs(sig[1, 1]) < 1e-14 * scale


@pytest.mark.parametrize("mat", [MAT, MAT_ALT])
def test_mode_I_angular_stress_matches_classical_functions(mat):
    # the classical mode-I angular factors; the mode-II column is checked
    # through the constitutive route plus the face/normalization identities
    for r in [0.2, 1.7]:
        for th in np.linspace(-3.1, 3.1, 13):
            sig = williams_stress("I", r, th, mat)
            c, s = np.cos(0.5 * th), np.sin(0.5 * th)
            s3 = np.sin(1.5 * th)
            c3 = np.cos(1.5 * th)
            scale = 1.0 / np.sqrt(2.0 * np.pi * r)
            assert sig[0, 0] == pytest.approx(scale * c * (1.0 - s * s3), abs=3e-14 * scale)
            assert sig[1, 1] == pytest.approx(scale * c * (1.0 + s * s3), abs=3e-14 * scale)
            assert sig[0, 1] == pytest.approx(scale * s * c * c3, abs=3e-14 * scale)


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("mat", [MAT, MAT_ALT])
def test_faces_traction_free(mode, mat):
    # on both faces of the rectilinear crack the traction sigma . e2 vanishes
    for th in [np.pi, -np.pi]:
        for r in [1e-2, 0.5]:
            sig = williams_stress(mode, r, th, mat)
            scale = 1.0 / np.sqrt(2.0 * np.pi * r)
            assert np.max(np.abs(sig @ np.array([0.0, 1.0]))) < 1e-13 * scale


@pytest.mark.parametrize("mode", ["I", "II"])
def test_gradient_quarter_scaling(mode):
    th = 0.77
    g1 = williams_gradient(mode, 0.3, th, MAT)
    g4 = williams_gradient(mode, 1.2, th, MAT)
    assert np.allclose(g4, 0.5 * g1, rtol=1e-13)


def test_mode_I_gradient_ahead_of_tip_value():
    # at psi = 0 the mode-I gradient is (kolosov - 1)/(4 mu sqrt(2 pi r)) I
    r = 0.42
    g = williams_gradient("I", r, 0.0, MAT)
    expect = (MAT.kolosov - 1.0) / (4.0 * MAT.mu * np.sqrt(2.0 * np.pi * r)) * np.eye(2)
    assert np.allclose(g, expect, rtol=1e-13)


def test_radius_guard():
    with pytest.raises(ValueError):
        williams_gradient("I", 0.0, 0.0, MAT)
    with pytest.raises(ValueError):
        williams_stress("II", -0.1, 0.0, MAT)


# ---------------------------------------------------------------------------
# curved extensions


def sample_annulus(curve, n, rlo, rhi, thlo=-np.pi, thhi=np.pi, seed=7):
    gen = np.random.default_rng(seed)
    g1, g2 = curve.frame(0.0)
    rs = gen.uniform(rlo, rhi, n)
    ths = gen.uniform(thlo + 0.05, thhi - 0.05, n) - curve.secant_angle(rs)
    return curve.tip + rs[:, None] * (np.cos(ths)[:, None] * g1 + np.sin(ths)[:, None] * g2)


@pytest.mark.parametrize("flavor", ["dfc", "tf"])
@pytest.mark.parametrize("mode", ["I", "II"])
def test_extensions_reduce_to_rectilinear_on_straight_crack(flavor, mode):
    line = StraightCrack(tip=(0.2, -0.1), direction=(-2.0, 1.0), length=2.0)
    aux = AuxiliaryField(flavor, mode, line, MAT)
    g1, g2 = line.frame(0.0)
    Q = np.stack([g1, g2], axis=-1)
    pts = sample_annulus(line, 16, 0.1, 1.5)
    r = np.linalg.norm(pts - line.tip, axis=1)
    d = pts - line.tip
    th = np.arctan2(d @ g2, d @ g1)
    expect = np.einsum("pi,nij,qj->npq", Q, williams_gradient(mode, r, th, MAT), Q)
    assert np.allclose(aux.beta(pts), expect, atol=1e-13)


@pytest.mark.parametrize("flavor", ["dfc", "tf"])
@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_stress_field_is_constitutive_image(flavor, mode, curve):
    aux = AuxiliaryField(flavor, mode, curve, MAT)
    pts = sample_annulus(curve, 12, 0.1 * curve.rho_max, 0.9 * curve.rho_max)
    assert np.allclose(aux.stress_field(pts), stress(aux.beta(pts), MAT),
                       rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_tf_faces_traction_free(mode, curve):
    aux = AuxiliaryField("tf", mode, curve, MAT)
    rs = np.linspace(0.02, 0.95, 32) * curve.rho_max
    for side in (+1, -1):
        sig = aux.face_stress(rs, side)
        _, g2 = curve.frame(rs)
        n = -side * g2
        tr = np.einsum("nij,nj->ni", sig, n)
        scale = np.linalg.norm(sig, axis=(1, 2))
        assert np.max(np.linalg.norm(tr, axis=1) / scale) < 1e-10


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_tf_face_round_trip(mode, curve):
    # evaluating at a physical point on a face (with the side hint) must
    # reproduce the dedicated face evaluator
    aux = AuxiliaryField("tf", mode, curve, MAT)
    rs = np.linspace(0.1, 0.9, 9) * curve.rho_max
    for side in (+1, -1):
        pts = curve.chord_point(rs)
        direct = aux.face_beta(rs, side)
        hinted = aux.beta(pts, side=side)
        assert np.allclose(direct, hinted, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_dfc_divergence_free(mode, curve):
    # the dfc field is an exact equilibrium state: finite-difference the
    # stress divergence at 32 interior points
    aux = AuxiliaryField("dfc", mode, curve, MAT)
    pts = sample_annulus(curve, 32, 0.15 * curve.rho_max, 0.8 * curve.rho_max,
                         thlo=-0.85 * np.pi, thhi=0.85 * np.pi)
    h = 1e-6
    for x in pts:
        div = np.zeros(2)
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = h
            ds = (aux.stress_field(x + dx) - aux.stress_field(x - dx)) / (2 * h)
            div += ds[:, k]
        scale = np.linalg.norm(aux.stress_field(x)) / np.linalg.norm(x - curve.tip)
        assert np.linalg.norm(div) < 1e-5 * max(scale, 1.0)
    # and the analytic divergence is returned as exact zeros
    _, _, divs = aux.derivatives(pts)
    assert np.all(divs == 0.0)


@pytest.mark.parametrize("flavor", ["dfc", "tf"])
@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_derivatives_match_finite_differences(flavor, mode, curve):
    aux = AuxiliaryField(flavor, mode, curve, MAT_ALT)
    pts = sample_annulus(curve, 10, 0.2 * curve.rho_max, 0.7 * curve.rho_max,
                         thlo=-0.8 * np.pi, thhi=0.8 * np.pi, seed=3)
    gb, gs, div = aux.derivatives(pts)
    for n, x in enumerate(pts):
        r = np.linalg.norm(x - curve.tip)
        h = 1e-6 * r
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = h
            fd_b = (aux.beta(x + dx) - aux.beta(x - dx)) / (2 * h)
            fd_s = (aux.stress_field(x + dx) - aux.stress_field(x - dx)) / (2 * h)
            scale_b = max(np.max(np.abs(gb[n])), 1.0)
            scale_s = max(np.max(np.abs(gs[n])), 1.0)
            assert np.allclose(gb[n, :, :, k], fd_b, atol=1e-5 * scale_b)
            assert np.allclose(gs[n, :, :, k], fd_s, atol=1e-5 * scale_s)
    if flavor == "tf":
        # divergence must be consistent with the stress gradient trace
        assert np.allclose(div, np.einsum("nikk->ni", gs), atol=1e-14)


@pytest.mark.parametrize("flavor", ["dfc", "tf"])
@pytest.mark.parametrize("mode", ["I", "II"])
@pytest.mark.parametrize("curve", CURVED)
def test_unit_sif_normalization(flavor, mode, curve):
    # sqrt(2 pi r) sigma : g_i(0) x g_2(0) ahead of the tip converges to the
    # unit SIF of the matching mode and zero for the other
    r = 1e-6 * curve.rho_max
    aux = AuxiliaryField(flavor, mode, curve, MAT)
    g1, g2 = curve.frame(0.0)
    x = curve.tip + r * g1
    sig = aux.stress_field(x)
    kI = np.sqrt(2.0 * np.pi * r) * (g2 @ sig @ g2)
    kII = np.sqrt(2.0 * np.pi * r) * (g1 @ sig @ g2)
    expect = {"I": (1.0, 0.0), "II": (0.0, 1.0)}[mode]
    assert kI == pytest.approx(expect[0], abs=1e-3)
    assert kII == pytest.approx(expect[1], abs=1e-3)


@pytest.mark.parametrize("mode,expect_slope", [("I", 2.0), ("II", 1.0)])
def test_dfc_face_traction_decay(mode, expect_slope):
    # scaled by the field strength sqrt(2 pi r), the dfc face traction is
    # O(r): slope 1 in mode II; in mode I the whole angular stress vanishes
    # on the faces, so the residual is one order better (slope 2)
    curve = bench_arc()
    aux = AuxiliaryField("dfc", mode, curve, MAT)
    rs = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    resid = []
    for r in rs:
        sig = aux.face_stress(np.array([r]), +1)[0]
        _, g2 = curve.frame(r)
        resid.append(np.sqrt(2.0 * np.pi * r) * np.linalg.norm(sig @ (-g2)))
    slope = np.polyfit(np.log(rs), np.log(resid), 1)[0]
    assert slope == pytest.approx(expect_slope, abs=0.1)


@pytest.mark.parametrize("mode", ["I", "II"])
def test_extensions_agree_at_tiny_radius(mode):
    # both extensions collapse onto the rectilinear field as r -> 0
    curve = bench_arc()
    dfc = AuxiliaryField("dfc", mode, curve, MAT)
    tf = AuxiliaryField("tf", mode, curve, MAT)
    r = 1e-6 * curve.rho_max
    g1, g2 = curve.frame(0.0)
    for th in [-2.0, 0.0, 1.4]:
        x = curve.tip + r * (np.cos(th) * g1 + np.sin(th) * g2)
        a, b = dfc.beta(x), tf.beta(x)
        # the two extensions differ by O(r) relative to the field scale
        assert np.max(np.abs(a - b)) < 1e-4 * np.max(np.abs(a))


def test_tf_rejects_radius_beyond_bound():
    curve = CubicCrack()
    aux = AuxiliaryField("tf", "I", curve, MAT)
    x = curve.tip + np.array([0.0, 1.2 * curve.rho_max])
    with pytest.raises(ValueError):
        aux.beta(x)


def test_tip_evaluation_rejected():
    aux = AuxiliaryField("dfc", "I", bench_arc(), MAT)
    with pytest.raises(ValueError):
        aux.beta(np.array([1.0, 0.0]))
