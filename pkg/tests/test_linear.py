"""Surjection rates, operator norms, and perturbation checks for matrices.

Singular-value pins are hand-derived closed forms (symmetric eigenvalues,
shear 1 + sqrt(2) and sqrt(2) - 1); nothing here calls an external SVD.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from almostreg.linear import (
    DenseMatrix,
    NormSpec,
    euclidean_space,
    harte_check,
    injectivity_bound,
    jacobi_column_norms,
    open_set_check,
    opnorm,
    singular_values,
    sur_lipschitz_check,
    sur_modulus,
)

DIAG31 = DenseMatrix.from_rows([[3.0, 0.0], [0.0, 1.0]])
WIDE = DenseMatrix.from_rows([[1.0, 1.0]])
SHEAR = DenseMatrix.from_rows([[1.0, 2.0], [0.0, 1.0]])
SUP2 = NormSpec("sup", 2)
ONE2 = NormSpec("one", 2)


def test_jacobi_hand_derived_two_by_two():
    sym = np.array([[3.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose(jacobi_column_norms(sym), [4.0, 2.0],
                               atol=1e-12)
    np.testing.assert_allclose(singular_values(SHEAR),
                               [1.0 + math.sqrt(2.0), math.sqrt(2.0) - 1.0],
                               atol=1e-12)
    np.testing.assert_allclose(jacobi_column_norms(np.array([[3.0], [4.0]])),
                               [5.0], atol=1e-15)


def test_sur_svd_route_pins():
    ident = DenseMatrix.from_rows([[1.0, 0.0], [0.0, 1.0]])
    assert sur_modulus(ident).estimate == pytest.approx(1.0, abs=1e-12)
    assert sur_modulus(DIAG31).estimate == pytest.approx(1.0, abs=1e-12)
    assert sur_modulus(WIDE).estimate == pytest.approx(math.sqrt(2.0),
                                                       abs=1e-12)
    rankdef = DenseMatrix.from_rows([[1.0, 1.0], [1.0, 1.0]])
    assert sur_modulus(rankdef).estimate == 0.0
    tall = DenseMatrix.from_rows([[1.0], [1.0]])
    assert sur_modulus(tall).estimate == 0.0  # more rows than columns


def test_sur_grid_route_brackets_svd_value():
    for m, exact in ((DIAG31, 1.0), (WIDE, math.sqrt(2.0))):
        rep = sur_modulus(m, method="grid", mesh_count=3600)
        assert rep.estimate == pytest.approx(exact, abs=1e-4)
        assert rep.lower <= exact <= float(rep.upper)
        assert rep.grid_resolution == pytest.approx(2.0 * math.pi / 3600)


def test_sur_polyhedral_pins():
    tri = DenseMatrix.from_rows([[1.0, 1.0], [0.0, 1.0]])
    rep = sur_modulus(tri, SUP2, SUP2, method="grid")
    # optimum sits at the dual functional (1/2, -1/2), hit exactly by the mesh
    assert rep.estimate == pytest.approx(0.5, abs=1e-12)
    assert rep.lower <= 0.5 <= float(rep.upper)
    assert not rep.resolution_limited
    ident = DenseMatrix.from_rows([[1.0, 0.0], [0.0, 1.0]])
    assert sur_modulus(ident, ONE2, SUP2,
                       method="grid").estimate == pytest.approx(0.5, abs=1e-12)
    assert sur_modulus(ident, SUP2, ONE2,
                       method="grid").estimate == pytest.approx(1.0, abs=1e-12)


def test_sur_method_guards():
    with pytest.raises(ValueError, match="unknown method"):
        sur_modulus(DIAG31, method="qr")
    with pytest.raises(ValueError, match="euclidean norms only"):
        sur_modulus(DIAG31, SUP2, SUP2, method="svd")


def test_opnorm_pins():
    assert opnorm(DIAG31) == pytest.approx(3.0, abs=1e-12)
    tri = DenseMatrix.from_rows([[1.0, 1.0], [0.0, 1.0]])
    assert opnorm(tri, SUP2, SUP2) == pytest.approx(2.0, abs=1e-12)
    assert opnorm(SHEAR) == pytest.approx(1.0 + math.sqrt(2.0), abs=1e-9)


def test_injectivity_bound_pins():
    assert injectivity_bound(DIAG31) == pytest.approx(1.0, abs=1e-12)
    assert injectivity_bound(WIDE) == 0.0  # wide operators have a kernel
    ident = DenseMatrix.from_rows([[1.0, 0.0], [0.0, 1.0]])
    assert injectivity_bound(ident, SUP2, SUP2) == pytest.approx(1.0,
                                                                 abs=1e-12)


def test_harte_three_outcomes():
    skipped = harte_check(DenseMatrix.from_rows([[1.0, 1.0], [1.0, 1.0]]))
    assert skipped.skipped and skipped.passed
    assert "rank below row count" in skipped.reason
    applied = harte_check(DIAG31)
    assert applied.passed and not applied.skipped
    data = dict(applied.data)
    assert data["alpha"] == pytest.approx(1.0, abs=1e-9)
    assert data["sur"] >= data["alpha"] - 1e-9
    vacuous = harte_check(WIDE)
    assert vacuous.passed and not vacuous.skipped
    assert "hypothesis empty" in vacuous.reason


def test_sur_lipschitz_check():
    other = DenseMatrix.from_rows([[3.0, 0.0], [0.0, 1.2]])
    rep = sur_lipschitz_check(DIAG31, other)
    assert rep.passed
    data = dict(rep.data)
    assert data["sur_a"] == pytest.approx(1.0, abs=1e-9)
    assert data["sur_b"] == pytest.approx(1.2, abs=1e-9)
    assert data["opnorm_diff"] == pytest.approx(0.2, abs=1e-9)
    with pytest.raises(ValueError, match="shape"):
        sur_lipschitz_check(DIAG31, WIDE)


def test_open_set_check_deterministic_and_positive():
    a = open_set_check(DIAG31, samples=20, seed=3)
    b = open_set_check(DIAG31, samples=20, seed=3)
    assert a.passed and b.passed
    assert dict(a.data)["worst"] == dict(b.data)["worst"]
    assert dict(a.data)["worst"] == pytest.approx(0.3245756585622466,
                                                  abs=1e-12)
    rankdef = DenseMatrix.from_rows([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError, match="positive base rate"):
        open_set_check(rankdef)


def test_rotation_invariance_of_euclidean_quantities():
    theta = 0.7
    q = np.array([[math.cos(theta), -math.sin(theta)],
                  [math.sin(theta), math.cos(theta)]])
    rotated = DenseMatrix.from_rows((q @ SHEAR.as_array()).tolist())
    assert sur_modulus(rotated).estimate == pytest.approx(
        sur_modulus(SHEAR).estimate, abs=1e-9)
    assert opnorm(rotated) == pytest.approx(opnorm(SHEAR), abs=1e-9)


def test_matrix_and_norm_validation():
    with pytest.raises(ValueError, match="ragged"):
        DenseMatrix.from_rows([[1.0, 2.0], [3.0]])
    with pytest.raises(ValueError, match="finite"):
        DenseMatrix.from_rows([[math.inf]])
    with pytest.raises(ValueError, match="entry count"):
        DenseMatrix(2, 2, (1.0, 2.0))
    with pytest.raises(ValueError, match="dimensions must be positive"):
        DenseMatrix(0, 1, ())
    with pytest.raises(ValueError, match="unknown norm kind"):
        NormSpec("taxicab", 2)
    with pytest.raises(ValueError, match="at least 1"):
        NormSpec("sup", 0)
    with pytest.raises(ValueError, match="domain norm dimension"):
        opnorm(DIAG31, euclidean_space(3))
    with pytest.raises(ValueError, match="codomain norm dimension"):
        opnorm(DIAG31, euclidean_space(2), euclidean_space(3))


def test_mesh_dimension_limits():
    wide4 = DenseMatrix.from_rows([[1.0, 0.0, 0.0, 0.0]])
    with pytest.raises(NotImplementedError, match="dimensions 1-3"):
        sur_modulus(wide4, method="grid")
    cube = DenseMatrix.from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                                  [0.0, 0.0, 1.0]])
    with pytest.raises(NotImplementedError, match="dimensions 1-2"):
        opnorm(cube, NormSpec("sup", 3), NormSpec("sup", 3))


def test_three_dim_euclidean_mesh_route():
    cube = DenseMatrix.from_rows([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                                  [0.0, 0.0, 1.0]])
    assert opnorm(cube) == pytest.approx(2.0, abs=1e-12)
    rep = sur_modulus(cube, method="grid", mesh_count=20000)
    assert rep.estimate == pytest.approx(1.0, abs=0.05)


@st.composite
def matrices_2x2(draw):
    vals = [draw(st.floats(-5.0, 5.0)) for _ in range(4)]
    return DenseMatrix.from_rows([[vals[0], vals[1]], [vals[2], vals[3]]])


@settings(max_examples=60, deadline=None)
@given(m=matrices_2x2(), factor=st.floats(0.1, 4.0))
def test_sur_homogeneous_and_below_opnorm(m, factor):
    rep = sur_modulus(m)
    assert rep.estimate <= opnorm(m) + 1e-9
    scaled = sur_modulus(m.scaled(factor))
    assert scaled.estimate == pytest.approx(factor * rep.estimate,
                                            abs=1e-8, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(m=matrices_2x2())
def test_sur_matches_dual_grid_route(m):
    svd_val = sur_modulus(m).estimate
    grid_val = sur_modulus(m, method="grid", mesh_count=3600).estimate
    assert grid_val == pytest.approx(svd_val, abs=2e-3 * (1.0 + opnorm(m)))
