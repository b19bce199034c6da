"""Rate stability under single-valued and set-valued perturbations."""
from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from almostreg.perturb import (
    BetaInterval,
    PerturbationInstance,
    admissible_beta_interval,
    estimate_lip,
    global_rate_view,
    graves_check,
    lg_setvalued_check,
    lg_single_check,
    lg_sumstable_check,
    minkowski_sum_map,
    perturbed_map,
    sum_stability_check,
)
from almostreg.regularity import SampledMap
from almostreg.spaces import PointCloud

DOM = PointCloud.from_grid(-1.0, 1.0, 0.02)
F_2X = SampledMap.from_function(DOM, lambda p: (2.0 * p[0],))
H_SIN = SampledMap.from_function(DOM, lambda p: (0.3 * math.sin(p[0]),))
REF3 = ((0.0,), (0.0,), (0.0,))


def h_sin(p):
    return (0.3 * math.sin(p[0]),)


def test_estimate_lip_callable_frozen():
    est = estimate_lip(h_sin, (0.0,), 0.5, DOM)
    assert est.value == pytest.approx(0.29998000039999617, abs=1e-12)
    assert est.radius == 0.5
    a, b = est.witness_pair
    assert max(abs(a[0]), abs(b[0])) <= 0.5


def test_estimate_lip_aubin_matches_callable_on_function():
    est = estimate_lip(H_SIN, (0.0,), 0.5, anchor=(0.0,))
    assert est.value == pytest.approx(0.29998000039999617, abs=1e-12)


def test_estimate_lip_validation():
    with pytest.raises(ValueError, match="point cloud"):
        estimate_lip(h_sin, (0.0,), 0.5)
    with pytest.raises(ValueError, match="degenerate cloud"):
        estimate_lip(h_sin, (0.0,), 1e-6, DOM)
    with pytest.raises(ValueError, match="anchor"):
        estimate_lip(H_SIN, (0.0,), 0.5)
    with pytest.raises(KeyError, match="anchor value"):
        estimate_lip(H_SIN, (0.0,), 0.5, anchor=(7.0,))


def test_perturbed_map_shifts_values():
    dom = PointCloud(((0.0,), (1.0,)))
    base = SampledMap.from_function(dom, lambda p: (2.0 * p[0],))
    shifted = perturbed_map(base, lambda p: (1.0,))
    assert shifted.pairs == (((0.0,), (1.0,)), ((1.0,), (3.0,)))
    with pytest.raises(ValueError, match="dimension"):
        perturbed_map(base, lambda p: (1.0, 2.0))


def test_minkowski_sum_map_hand_checked():
    dom = PointCloud(((0.0,), (1.0,)))
    f = SampledMap.from_branches(dom, [lambda p: (p[0],),
                                       lambda p: (p[0] + 1.0,)])
    g = SampledMap.from_function(dom, lambda p: (10.0,))
    s = minkowski_sum_map(f, g)
    assert set(s.image_of((0.0,))) == {(10.0,), (11.0,)}
    assert set(s.image_of((1.0,))) == {(11.0,), (12.0,)}
    other = SampledMap.from_function(PointCloud(((5.0,),)), lambda p: (0.0,))
    with pytest.raises(ValueError, match="same domain"):
        minkowski_sum_map(f, other)
    # near-duplicate values collapse under a positive dedup tolerance
    close = SampledMap.from_branches(dom, [lambda p: (0.0,),
                                           lambda p: (1e-15,)])
    assert len(minkowski_sum_map(g, close, dedup_tol=1e-12).image_of((0.0,))) == 1


def test_instance_validation():
    with pytest.raises(ValueError, match="reference value"):
        PerturbationInstance(F=F_2X, ref=((0.0,), (0.5,)))
    with pytest.raises(ValueError, match="w_bar"):
        PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,)), H=H_SIN)
    with pytest.raises(ValueError, match="w_bar"):
        PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,), (0.5,)), H=H_SIN)
    with pytest.raises(ValueError, match="ell < c < c_prime"):
        PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,)),
                             constants=dict(c=1.0, c_prime=2.0, ell=1.5))


def test_lg_single_frozen():
    inst = PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,)), h=h_sin)
    rep = lg_single_check(inst)
    assert rep.passed and not rep.inconclusive
    assert rep.lower == pytest.approx(2.2478638679538108, abs=1e-9)
    assert rep.bound == pytest.approx(1.5020211993984742, abs=1e-9)
    assert rep.tol == pytest.approx(0.1979988000126659, abs=1e-12)
    detail = dict(rep.details)
    assert detail["sur_base_lower"] == pytest.approx(2.0, abs=1e-6)
    assert detail["lip"] == pytest.approx(0.29998000039999617, abs=1e-12)
    with pytest.raises(ValueError, match="no single-valued"):
        lg_single_check(PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,))))


def test_graves_applied_frozen():
    rep = graves_check(lambda p: (2.0 * p[0],),
                       lambda p: (2.0 * p[0] + 0.02 * math.sin(p[0]),),
                       (0.0,), 0.5, DOM)
    assert rep.status == "applied"
    assert rep.passed
    assert rep.lip_sequence == pytest.approx((0.019998666693333052,) * 3)
    assert rep.sur_f_lower == pytest.approx(2.0, abs=1e-6)
    assert rep.sur_g_lower == pytest.approx(2.016701384590072, abs=1e-9)
    assert abs(rep.sur_f_lower - rep.sur_g_lower) <= rep.tol


def test_graves_skipped_when_difference_is_steep():
    rep = graves_check(lambda p: (2.0 * p[0],), lambda p: (p[0],),
                       (0.0,), 0.5, DOM)
    assert rep.status == "skipped"
    assert rep.passed is None
    assert rep.sur_f_lower is None


def test_sum_stability_frozen():
    rep = sum_stability_check(F_2X, H_SIN, REF3)
    assert rep.verdict
    expected = ((1.0, 1.1438276615812608), (0.5, 0.5971241655676466),
                (0.25, 0.32186293439327096))
    for (xi, beta, ok), (exp_xi, exp_beta) in zip(rep.entries, expected):
        assert xi == exp_xi
        assert beta == pytest.approx(exp_beta, abs=1e-9)
        assert ok
    with pytest.raises(ValueError, match="z_bar"):
        sum_stability_check(F_2X, H_SIN, ((0.0,), (0.5,), (0.0,)))
    with pytest.raises(ValueError, match="w_bar"):
        sum_stability_check(F_2X, H_SIN, ((0.0,), (0.0,), (0.5,)))


def test_sum_stability_detects_far_branch_leak():
    # a constant far-branch sum lands near the reference value but never
    # splits into near components
    dom = PointCloud.from_grid(-1.0, 1.0, 0.1)
    f = SampledMap.from_branches(dom, [lambda p: (round(2.0 * p[0], 12),),
                                       lambda p: (10.01,)])
    g = SampledMap.from_branches(dom, [lambda p: (0.0,),
                                       lambda p: (-10.0,)])
    rep = sum_stability_check(f, g, REF3)
    assert not rep.verdict
    assert all(not ok for _, _, ok in rep.entries)
    with pytest.raises(ValueError, match="not sum-stable"):
        lg_sumstable_check(f, g, REF3)


def test_lg_sumstable_frozen():
    rep = lg_sumstable_check(F_2X, H_SIN, REF3)
    assert rep.passed and not rep.inconclusive
    assert rep.lower == pytest.approx(2.2478638679538108, abs=1e-9)
    assert rep.bound == pytest.approx(1.5020211993984742, abs=1e-9)


def test_lg_setvalued_full_pass():
    inst = PerturbationInstance(
        F=F_2X, ref=REF3, H=H_SIN,
        constants=dict(c=1.2, c_prime=1.5, ell=0.4, a=0.3, b=0.3, r=0.15,
                       delta=0.05))
    rep = lg_setvalued_check(inst)
    assert rep.passed
    assert rep.premise_a.passed and rep.premise_b.passed and rep.premise_c.passed
    assert rep.conclusion is not None and rep.conclusion.passed
    assert not rep.reading_sensitive
    consts = dict(rep.constants)
    assert consts["lambda"] == pytest.approx((1.5 - 1.2) / 3.0)
    assert consts["alpha"] == pytest.approx(1.0 / 3.0)
    assert consts["c_minus_ell_alpha"] < 1.0
    assert (rep.premise_a.checked, rep.premise_b.checked,
            rep.premise_c.checked, rep.conclusion.checked) == (45, 3481, 13, 30)


def test_lg_setvalued_validation():
    good = dict(c=1.2, c_prime=1.5, ell=0.4, a=0.3, b=0.3, r=0.15, delta=0.05)
    with pytest.raises(ValueError, match="no set-valued"):
        lg_setvalued_check(PerturbationInstance(F=F_2X, ref=((0.0,), (0.0,)),
                                                constants=good))
    partial = {k: v for k, v in good.items() if k != "r"}
    inst = PerturbationInstance(F=F_2X, ref=REF3, H=H_SIN, constants=partial)
    with pytest.raises(ValueError, match="missing constants: r"):
        lg_setvalued_check(inst)


def test_admissible_beta_interval_closed_form():
    # c=2, ell=1: a-side gives 10/5 = 2, b-side gives 19/9 > 2
    bi = admissible_beta_interval(2.0, 1.0, 1.0, 10.0, 20.0)
    assert bi.upper == 2.0
    assert not bi.empty
    assert bi.contains(1.0) and not bi.contains(2.0) and not bi.contains(0.0)
    assert bi.recheck(2.0, 1.0, 1.0, 10.0, 20.0)
    empty = admissible_beta_interval(2.0, 1.0, 25.0, 10.0, 20.0)
    assert empty.empty and empty.upper == 0.0
    assert not empty.contains(0.5)
    assert empty.recheck(2.0, 1.0, 25.0, 10.0, 20.0)
    with pytest.raises(ValueError, match="ell < c"):
        admissible_beta_interval(1.0, 2.0, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError, match="positive"):
        admissible_beta_interval(2.0, 1.0, 0.1, 0.0, 1.0)


@given(c=st.floats(0.2, 10.0), gap=st.floats(0.01, 5.0),
       diam=st.floats(0.0, 10.0), a=st.floats(0.1, 50.0),
       b=st.floats(0.1, 50.0))
def test_beta_interval_midpoint_always_rechecks(c, gap, diam, a, b):
    ell = max(0.0, c - gap)
    bi = admissible_beta_interval(c, ell, diam, a, b)
    assert bi.recheck(c, ell, diam, a, b)
    if not bi.empty:
        assert bi.contains(0.5 * bi.upper)


def test_global_rate_view():
    assert global_rate_view(0.5, 1.0) == pytest.approx(1.0)
    assert global_rate_view(2.0, 0.0) == 2.0
    with pytest.raises(ValueError, match="kappa"):
        global_rate_view(0.0, 1.0)
    with pytest.raises(ValueError, match="kappa \\* ell"):
        global_rate_view(1.0, 1.0)


def test_beta_interval_contains_is_open():
    bi = BetaInterval(upper=1.0, empty=False)
    assert bi.contains(0.999)
    assert not bi.contains(1.0)
