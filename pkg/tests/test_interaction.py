"""Interaction-functional tests against exact-field (oracle) inputs.

The FEM never enters here: known strain fields with known factor pairs are
pushed through the functional on dense slit-polar quadrature, so any failure
points at the functional itself, not at a discretization.
"""

import numpy as np
import pytest

from sifkit.bench import ManufacturedProblem, default_material, power_curve
from sifkit.elasticity import stress
from sifkit.fields import AuxiliaryField
from sifkit.geometry import StraightCrack
from sifkit.interaction import (
    IntegrationPlan,
    Loads,
    Pairing,
    compute_sif,
    default_rho,
    discrete_interaction,
    rho_sweep,
)
from sifkit.meshing import load_template, refine

MAT = default_material()
VARIANTS = ("uni_dfc", "tan_dfc", "tan_tf")
RHO = 0.5


def dense_plan(curve, variant, rho=RHO):
    return IntegrationPlan.dense(curve, rho, Pairing(variant, rho, "I").cutoff())


@pytest.fixture(scope="module")
def power_oracle():
    """Manufactured power-crack problem plus one dense plan per variant."""
    mp = ManufacturedProblem(power_curve())
    plans = {v: dense_plan(mp.curve, v) for v in VARIANTS}
    return mp, plans


def zero_beta(x, side=None):
    return np.zeros(np.asarray(x).shape[:-1] + (2, 2))


# ---------------------------------------------------------------------------
# pairing bookkeeping


def test_unknown_variant_rejected():
    with pytest.raises(ValueError, match="variant"):
        Pairing(variant="tf_uni", rho=RHO, mode="I")


def test_unknown_mode_rejected():
    with pytest.raises(ValueError, match="mode"):
        Pairing(variant="uni_dfc", rho=RHO, mode="III")


def test_rho_beyond_curve_limit_rejected():
    curve = power_curve()
    with pytest.raises(ValueError, match="rho"):
        Pairing(variant="uni_dfc", rho=10.0 * curve.rho_max,
                mode="I").build(curve, MAT)


def test_mismatched_field_pair_rejected(power_oracle):
    mp, plans = power_oracle
    aux = AuxiliaryField(flavor="tf", mode="I", curve=mp.curve, mat=MAT)
    _, mv = Pairing("uni_dfc", RHO, "I").build(mp.curve, MAT)
    with pytest.raises(ValueError, match="pairing"):
        discrete_interaction(zero_beta, aux, mv, plans["uni_dfc"], Loads())


def test_callable_input_needs_dense_plan(power_oracle):
    mp, _ = power_oracle
    with pytest.raises(ValueError, match="plan"):
        compute_sif(mp.beta_exact, mp.curve, MAT, "uni_dfc", RHO,
                    loads=mp.loads())


def test_default_rho_matches_benchmark_setup():
    assert default_rho(power_curve()) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# plan construction


def test_mesh_plan_takes_every_element_touching_the_ball():
    mesh = load_template("power")
    mesh = refine(mesh, power_curve())
    plan = IntegrationPlan.from_mesh(mesh, power_curve(), RHO)
    tip = mesh.nodes[mesh.tip]
    rad = np.linalg.norm(mesh.nodes - tip, axis=1)
    inside = rad[mesh.triangles] < RHO
    expected = set(np.nonzero(inside.any(axis=1))[0])
    assert set(plan.vol_elem) == expected
    # the fully-inner skip flag marks exactly the all-vertex-inside elements
    skip_elems = set(np.asarray(plan.vol_elem)[plan.vol_skip])
    assert skip_elems == set(np.nonzero((rad[mesh.triangles]
                                         < 0.25 * RHO).all(axis=1))[0])


@pytest.mark.parametrize("make", ["mesh", "dense"])
def test_plan_points_stay_off_the_tip(make):
    curve = power_curve()
    if make == "mesh":
        plan = IntegrationPlan.from_mesh(load_template("power"), curve, RHO)
    else:
        plan = dense_plan(curve, "uni_dfc")
    tip = curve.tip
    assert np.min(np.linalg.norm(plan.vol_x - tip, axis=1)) > 1e-8
    assert np.min(plan.face_r) > 1e-8


# ---------------------------------------------------------------------------
# functional identities


@pytest.mark.parametrize("variant", VARIANTS)
def test_zero_state_gives_zero(power_oracle, variant):
    mp, plans = power_oracle
    aux, mv = Pairing(variant, RHO, "I").build(mp.curve, MAT)
    val = discrete_interaction(zero_beta, aux, mv, plans[variant], Loads())
    assert val == 0.0


@pytest.mark.parametrize("variant", VARIANTS)
def test_affine_in_the_input_field(power_oracle, variant):
    mp, plans = power_oracle
    aux, mv = Pairing(variant, RHO, "I").build(mp.curve, MAT)
    args = (aux, mv, plans[variant], mp.loads())

    def b1(x, side=None):
        return mp._aux["I"].beta(x, side)

    def b2(x, side=None):
        return mp._aux["II"].beta(x, side) + mp.beta_bounded(x)

    def b12(x, side=None):
        return b1(x, side) + b2(x, side)

    lhs = discrete_interaction(b12, *args) + discrete_interaction(zero_beta, *args)
    rhs = discrete_interaction(b1, *args) + discrete_interaction(b2, *args)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_repeated_evaluation_is_bitwise_stable(power_oracle):
    mp, plans = power_oracle
    a = compute_sif(mp.beta_exact, mp.curve, MAT, "tan_dfc", RHO,
                    loads=mp.loads(), plan=plans["tan_dfc"])
    b = compute_sif(mp.beta_exact, mp.curve, MAT, "tan_dfc", RHO,
                    loads=mp.loads(), plan=plans["tan_dfc"])
    assert a == b


def test_inner_skip_is_a_no_op_for_constant_direction(power_oracle):
    # inside the inner radius the cutoff is identically 1, so the constant
    # advance direction has a vanishing gradient there
    mp, plans = power_oracle
    on = compute_sif(mp.beta_exact, mp.curve, MAT, "uni_dfc", RHO,
                     loads=mp.loads(), plan=plans["uni_dfc"], skip_inner=True)
    off = compute_sif(mp.beta_exact, mp.curve, MAT, "uni_dfc", RHO,
                      loads=mp.loads(), plan=plans["uni_dfc"], skip_inner=False)
    assert abs(on[0] - off[0]) <= 1e-12
    assert abs(on[1] - off[1]) <= 1e-12


# ---------------------------------------------------------------------------
# oracle extraction


@pytest.mark.parametrize("variant", VARIANTS)
def test_oracle_recovers_unit_factors(power_oracle, variant):
    # the manufactured field has factors exactly (1, 1)
    mp, plans = power_oracle
    k1, k2 = compute_sif(mp.beta_exact, mp.curve, MAT, variant, RHO,
                         loads=mp.loads(), plan=plans[variant])
    assert abs(k1 - 1.0) < 1e-3    # observed ~1e-7
    assert abs(k2 - 1.0) < 1e-3


@pytest.mark.parametrize("variant", VARIANTS)
def test_oracle_recovers_a_mixed_combination(power_oracle, variant):
    # 2*(mode I field) - 0.5*(mode II field): equilibrated without body
    # force, but the curved faces stay loaded
    mp, plans = power_oracle
    curve = mp.curve
    cI, cII = 2.0, -0.5

    def beta(x, side=None):
        return (cI * mp._aux["I"].beta(x, side)
                + cII * mp._aux["II"].beta(x, side))

    def face_traction(side, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        rc = np.minimum(r, curve.chord_limit)
        face = (cI * mp._aux["I"].face_beta(r, side)
                + cII * mp._aux["II"].face_beta(r, side))
        _, g2 = curve.frame(rc)
        n = -float(side) * g2
        return np.einsum("...ij,...j->...i", stress(face, MAT), n)

    loads = Loads(face_traction=face_traction)
    k1, k2 = compute_sif(beta, curve, MAT, variant, RHO, loads=loads,
                         plan=plans[variant])
    assert abs(k1 - cI) < 1e-3 * abs(cI)
    assert abs(k2 - cII) < 1e-3 * abs(cII)


@pytest.mark.parametrize("variant", VARIANTS)
def test_smooth_additions_do_not_move_the_factors(power_oracle, variant):
    # add one more copy of the bounded field, with its loads kept consistent:
    # the factors belong to the singular part alone
    mp, plans = power_oracle
    curve = mp.curve

    def beta2(x, side=None):
        return mp.beta_exact(x, side) + mp.beta_bounded(x)

    def body2(x):
        return 2.0 * mp.body_force(x)

    def face_traction2(side, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        rc = np.minimum(r, curve.chord_limit)
        x = curve.chord_point(rc)
        sig = stress(mp.face_beta(r, side) + mp.beta_bounded(x), MAT)
        _, g2 = curve.frame(rc)
        n = -float(side) * g2
        return np.einsum("...ij,...j->...i", sig, n)

    base = compute_sif(mp.beta_exact, curve, MAT, variant, RHO,
                       loads=mp.loads(), plan=plans[variant])
    moved = compute_sif(beta2, curve, MAT, variant, RHO,
                        loads=Loads(body_force=body2,
                                    face_traction=face_traction2),
                        plan=plans[variant])
    assert abs(moved[0] - base[0]) <= 1e-3 * abs(base[0])
    assert abs(moved[1] - base[1]) <= 1e-3 * abs(base[1])


def test_straight_crack_collapses_the_variants():
    # with a straight crack the tangent is constant and the secant angle
    # vanishes, so all three pairings reduce to the same functional
    curve = StraightCrack(tip=(0.0, 0.0), direction=(-1.0, 0.0), length=2.0)
    will = AuxiliaryField(flavor="dfc", mode="I", curve=curve, mat=MAT)
    got = {}
    for v in VARIANTS:
        plan = dense_plan(curve, v)
        got[v] = compute_sif(will.beta, curve, MAT, v, RHO, loads=Loads(),
                             plan=plan)
    k1 = [got[v][0] for v in VARIANTS]
    k2 = [got[v][1] for v in VARIANTS]
    assert max(k1) - min(k1) <= 1e-6
    assert max(abs(k) for k in k2) <= 1e-9
    assert all(abs(k - 1.0) < 1e-6 for k in k1)


# ---------------------------------------------------------------------------
# support-radius sweeps


def test_single_rho_sweep_matches_compute_sif(power_oracle):
    mp, plans = power_oracle
    direct = compute_sif(mp.beta_exact, mp.curve, MAT, "tan_dfc", RHO,
                         loads=mp.loads(), plan=plans["tan_dfc"])
    rows = rho_sweep(mp.beta_exact, mp.curve, MAT, "tan_dfc", [RHO],
                     loads=mp.loads(), plans={RHO: plans["tan_dfc"]})
    assert rows == [(RHO, direct[0], direct[1])]


@pytest.mark.parametrize("variant", VARIANTS)
def test_oracle_sweep_is_flat(power_oracle, variant):
    mp, _ = power_oracle
    rhos = [f * RHO for f in (0.7, 0.775, 0.85, 0.925, 1.0)]
    plans = {r: dense_plan(mp.curve, variant, r) for r in rhos}
    rows = rho_sweep(mp.beta_exact, mp.curve, MAT, variant, rhos,
                     loads=mp.loads(), plans=plans)
    for col in (1, 2):
        ks = np.array([row[col] for row in rows])
        assert (ks.max() - ks.min()) <= 1e-3 * abs(ks.mean())  # observed ~1e-8


# ---------------------------------------------------------------------------
# discrete (FEM) input smoke test


def test_discrete_input_on_a_coarse_mesh():
    from sifkit.solver import assemble_and_solve
    mp = ManufacturedProblem(power_curve())
    mesh = load_template("power")
    for _ in range(2):
        mesh = refine(mesh, mp.curve)
    sol = assemble_and_solve(mp.elasticity_problem(mesh), order=1)
    for variant in VARIANTS:
        k1, k2 = compute_sif(sol, mp.curve, MAT, variant, RHO,
                             loads=mp.loads())
        assert abs(k1 - 1.0) < 0.05
        assert abs(k2 - 1.0) < 0.05
