"""End-to-end acceptance gate: ten criteria, one printed verdict line each.

Every criterion re-derives its expected behavior with independent loops or
closed forms; engine internals are never trusted as their own oracle.
"""
from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np

from almostreg.ekeland import (
    Objective,
    generate_trace,
    two_constant_point,
    verify_trace,
    weak_point,
)
from almostreg.ioffe import (
    PairRegion,
    check_criterion,
    descent_solve,
    newton_oracle,
    scalar_map,
    shrink_beta,
)
from almostreg.linear import DenseMatrix, opnorm, sur_modulus
from almostreg.perturb import (
    PerturbationInstance,
    admissible_beta_interval,
    lg_setvalued_check,
    lg_single_check,
)
from almostreg.regularity import (
    ModulusSearchConfig,
    RegularityInstance,
    SampledMap,
    check_openness,
    equivalence_suite,
    estimate_modulus,
    verify_product_laws,
)
from almostreg.scenarios import emit_report, run_suite
from almostreg.spaces import (
    DirectionSet,
    PointCloud,
    directional_gauge,
    euclidean_premetric,
)

REPO = Path(__file__).resolve().parents[1]


def verdict(number: int, ok: bool, description: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number}: {status} — {description}")


def random_descent_instance(rng, use_cone: bool):
    n = int(rng.integers(3, 51))
    xs = rng.permutation(np.round(np.arange(-5.0, 5.0, 0.01), 10))[:n]
    cloud = PointCloud(tuple((float(x),) for x in xs))
    values = rng.uniform(0.05, 4.0, n)
    objective = Objective.from_table(cloud, values.tolist())
    space = (directional_gauge(DirectionSet(((1.0,),))) if use_cone
             else euclidean_premetric())
    start = cloud.points[int(np.argmax(values))]
    return cloud, space, objective, start, values


def test_acceptance_01_trace_chain_law():
    budget = 10.0
    start_time = time.perf_counter()
    rng = np.random.default_rng(77)
    failures = []
    for i in range(200):
        cloud, space, objective, start, _ = random_descent_instance(
            rng, use_cone=i % 2 == 1)
        trace = generate_trace(cloud, space, objective, start)
        vals = {p: float(objective(p)) for p in cloud.points}
        pts = trace.points
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if not vals[pts[b]] + float(space(pts[b], pts[a])) < vals[pts[a]]:
                    failures.append(("chain", i, pts[a], pts[b]))
        phi0 = vals[start]
        for frac in (0.5, 0.1, 0.01):
            eps = frac * phi0
            ver = verify_trace(trace, cloud, space, objective, eps)
            if ver.stationary_index is None or not ver.chain_ok:
                failures.append(("cutoff-missing", i, frac))
                continue
            for pos in range(ver.stationary_index - 1, len(pts)):
                uk = pts[pos]
                for q in cloud.points:
                    if not vals[q] + float(space(q, uk)) > vals[uk] - eps:
                        failures.append(("cutoff-invalid", i, frac, pos))
    elapsed = time.perf_counter() - start_time
    ok = not failures and elapsed < budget
    verdict(1, ok, "descent traces obey the strict chain law and admit "
                   f"stationary cutoffs on 200 instances in {elapsed:.2f}s")
    assert not failures, failures[:5]
    assert elapsed < budget, f"runtime {elapsed:.2f}s exceeded {budget}s"


def test_acceptance_02_weak_point_stationarity():
    rng = np.random.default_rng(77)
    failures = []
    draws = 0
    for i in range(200):
        cloud, space, objective, start, values = random_descent_instance(
            rng, use_cone=i % 2 == 1)
        vals = {p: float(objective(p)) for p in cloud.points}
        u, cert = weak_point(cloud, space, objective, start)
        if not (cert.descent_ok and cert.stationarity_ok):
            failures.append(("certificate", i))
        for q in cloud.points:
            if not vals[q] + float(space(q, u)) >= vals[u]:
                failures.append(("stationarity", i, q))
        if draws < 50:
            low = float(values.min())
            delta = (vals[start] - low) * (1.0 + float(rng.uniform(0.0, 1.0)))
            r = float(rng.uniform(0.1, 2.0))
            res = two_constant_point(cloud, space, objective, start, delta, r)
            if not res.radius_ok:
                failures.append(("radius-flag", i))
            if not float(space(res.point, start)) <= r + float(space(start, start)):
                failures.append(("radius-bound", i))
            draws += 1
    ok = not failures and draws == 50
    verdict(2, ok, "terminal points are exactly stationary on 200 instances "
                   "and the two-constant radius bound holds on 50 draws")
    assert draws == 50
    assert not failures, failures[:5]


def test_acceptance_03_equivalence_loop():
    rng = np.random.default_rng(20260814)
    disagreements = []
    side_misses = []
    pass_sides = 0
    for i in range(30):
        kind = i % 3
        if kind == 0:
            s = float(rng.uniform(0.5, 3.0)) * (1.0 if rng.random() < 0.5 else -1.0)
            b = float(rng.uniform(-0.2, 0.2))
            dom = PointCloud.from_grid(-1.0, 1.0, 0.05)
            m = SampledMap.from_function(dom,
                                         lambda p: (round(s * p[0] + b, 12),))
            lo_rate, hi_rate = abs(s), abs(s)
        elif kind == 1:
            s1, s2 = (float(rng.uniform(0.5, 3.0)) for _ in range(2))
            dom = PointCloud.from_grid(-1.0, 1.0, 0.05)
            m = SampledMap.from_function(
                dom,
                lambda p: (round(s1 * p[0] if p[0] < 0 else s2 * p[0], 12),))
            lo_rate, hi_rate = min(s1, s2), max(s1, s2)
        else:
            a = float(rng.uniform(0.3, 2.0))
            dom = PointCloud.from_grid(-0.5, 0.5, 0.025)
            m = SampledMap.from_function(
                dom, lambda p: (round(p[0] ** 3 + a * p[0], 12),))
            lo_rate, hi_rate = a, a + 0.75
        for c, expected in ((0.5 * lo_rate, True), (2.0 * hi_rate, False)):
            inst = RegularityInstance(mapping=m, region_x=m.domain.points,
                                      region_y=m.codomain.points, gamma=0.5,
                                      constant=c)
            eq = equivalence_suite(inst)
            if not eq.agree:
                disagreements.append((i, kind, c))
            if eq.openness.passed is not expected:
                side_misses.append((i, kind, c, expected))
            pass_sides += int(eq.openness.passed)
    ok = not disagreements and not side_misses and pass_sides == 30
    verdict(3, ok, "openness, distance-estimate, and inverse checks agree on "
                   "both sides of the rate for 30 instances")
    assert not disagreements, disagreements
    assert not side_misses, side_misses
    assert pass_sides == 30


def test_acceptance_04_product_laws():
    budget = 60.0
    start_time = time.perf_counter()
    dom = PointCloud.from_grid(-1.0, 1.0, 0.01)
    maps = (
        SampledMap.from_function(dom, lambda p: (2.0 * p[0],)),
        SampledMap.from_function(dom,
                                 lambda p: (p[0] + 0.3 * math.sin(p[0]),)),
        SampledMap.from_branches(dom, [lambda p: (1.5 * p[0],),
                                       lambda p: (1.5 * p[0] + 10.0,)]),
    )
    ref = ((0.0,), (0.0,))
    cfg = ModulusSearchConfig()
    failures = []
    for m in maps:
        for a, b in (("sur", "reg"), ("popen", "subreg"), ("lopen", "semireg")):
            law = verify_product_laws(estimate_modulus(m, ref, a, cfg),
                                      estimate_modulus(m, ref, b, cfg))
            if not law.verdict:
                failures.append((a, b, law.interval_low,
                                 float(law.interval_high)))
            if not (law.interval_low <= 1.05
                    and float(law.interval_high) >= 0.95):
                failures.append(("window", a, b))
    elapsed = time.perf_counter() - start_time
    ok = not failures and elapsed < budget
    verdict(4, ok, "paired modulus brackets multiply to one within 0.05 at "
                   f"step 0.01 for three maps in {elapsed:.2f}s")
    assert not failures, failures
    assert elapsed < budget, f"runtime {elapsed:.2f}s exceeded {budget}s"


def test_acceptance_05_criterion_implies_openness():
    rng = np.random.default_rng(20260814)
    failures = []
    both_passed = 0
    instances = []
    for i in range(30):
        s = float(rng.uniform(0.6, 3.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        dom = PointCloud.from_grid(-1.0, 1.0, 0.05)
        m = SampledMap.from_function(dom, lambda p: (round(s * p[0], 12),))
        instances.append((m, 0.7 * abs(s), True))
    cube_dom = PointCloud.from_grid(-0.5, 0.5, 0.05)
    cube = SampledMap.from_function(cube_dom,
                                    lambda p: (round(p[0] ** 3, 12),))
    instances.append((cube, 1.0, False))
    for idx, (m, c, expected) in enumerate(instances):
        region = PairRegion.product(m.domain.points, m.codomain.points)
        crit = check_criterion(m, region, c, 0.5)
        open_rep = check_openness(RegularityInstance(
            mapping=m, region_x=m.domain.points,
            region_y=m.codomain.points, gamma=0.5, constant=c))
        if crit.passed and not open_rep.passed:
            failures.append(("implication", idx))
        if crit.passed is not expected or open_rep.passed is not expected:
            failures.append(("verdict", idx, crit.passed, open_rep.passed))
        if crit.passed and open_rep.passed:
            both_passed += 1
    ok = not failures and both_passed == 30
    verdict(5, ok, "improvement criterion and openness verdicts match: 30 "
                   "affine instances pass, the flat cubic fails both")
    assert not failures, failures
    assert both_passed == 30


def test_acceptance_06_descent_solver():
    budget = 1.0
    start_time = time.perf_counter()
    c = 1.5
    rep = descent_solve(scalar_map(lambda x: 2.0 * x), (0.0,), (0.8,), c,
                        1e-12, newton_oracle(lambda x: 2.0 * x, lambda x: 2.0))
    elapsed = time.perf_counter() - start_time
    failures = []
    if not rep.residuals[-1] < 1e-9:
        failures.append(("residual", rep.residuals[-1]))
    radius = 0.8 / c + 1e-12
    for p in rep.points:
        if abs(p[0]) > radius:
            failures.append(("radius", p))
    for j in range(len(rep.points)):
        for k in range(j + 1, len(rep.points)):
            d = math.dist(rep.points[j], rep.points[k])
            if not c * d <= rep.residuals[j] - rep.residuals[k]:
                failures.append(("pairwise", j, k))
    ok = not failures and elapsed < budget
    verdict(6, ok, "validated descent reaches the target inside the "
                   f"predicted radius in {elapsed*1000:.0f}ms")
    assert not failures, failures
    assert elapsed < budget


def test_acceptance_07_rate_stability():
    rng = np.random.default_rng(5150)
    dom = PointCloud.from_grid(-1.0, 1.0, 0.02)
    failures = []
    for i in range(20):
        s = float(rng.uniform(0.5, 3.0)) * (1.0 if rng.random() < 0.5 else -1.0)
        base = SampledMap.from_function(dom,
                                        lambda p: (round(s * p[0], 12),))
        which = i % 3
        if which == 0:
            h = lambda p: (0.3 * math.sin(p[0]),)
        elif which == 1:
            h = lambda p: (0.2 * p[0] * p[0],)
        else:
            h = lambda p: (-0.25 * s * p[0],)
        rep = lg_single_check(PerturbationInstance(F=base,
                                                   ref=((0.0,), (0.0,)), h=h))
        if not rep.passed:
            failures.append((i, s, which, rep.lower, rep.bound))
    fine = PointCloud.from_grid(-1.0, 1.0, 0.01)
    two_x = SampledMap.from_function(fine, lambda p: (2.0 * p[0],))
    eq = lg_single_check(PerturbationInstance(F=two_x, ref=((0.0,), (0.0,)),
                                              h=lambda p: (-0.5 * p[0],)))
    equality_val = dict(eq.details)["sur_perturbed_lower"]
    if abs(equality_val - 1.5) > 0.02:
        failures.append(("equality", equality_val))
    ok = not failures
    verdict(7, ok, "perturbed openness rate stays above base rate minus the "
                   "perturbation rate on 20 instances; slope-shrink case "
                   f"lands at {equality_val:.4f}")
    assert not failures, failures


def test_acceptance_08_constants_fidelity():
    failures = []
    if shrink_beta(1.0, 1.0, 1.0, 1.0) != 0.5:
        failures.append("shrink_beta")
    if admissible_beta_interval(2.0, 1.0, 1.0, 10.0, 20.0).upper != 2.0:
        failures.append("beta-interval-upper")
    dom = PointCloud.from_grid(-1.0, 1.0, 0.02)
    F = SampledMap.from_function(dom, lambda p: (2.0 * p[0],))
    H = SampledMap.from_function(dom, lambda p: (0.3 * math.sin(p[0]),))
    settings = (
        dict(c=1.2, c_prime=1.5, ell=0.4, a=0.3, b=0.3, r=0.15, delta=0.05),
        dict(c=1.0, c_prime=2.0, ell=0.2, a=0.25, b=0.25, r=0.1, delta=0.05),
    )
    for consts in settings:
        rep = lg_setvalued_check(PerturbationInstance(
            F=F, ref=((0.0,), (0.0,), (0.0,)), H=H, constants=consts))
        got = dict(rep.constants)
        c, cp, ell = consts["c"], consts["c_prime"], consts["ell"]
        if abs(got["lambda"] - (cp - c) / (2.0 * cp)) > 1e-15:
            failures.append(("lambda", consts))
        if abs(got["alpha"] - 1.0 / (2.0 * cp)) > 1e-15:
            failures.append(("alpha", consts))
        if not 0.0 < got["lambda"] < 1.0:
            failures.append(("lambda-range", consts))
        if not 0.0 < got["c_minus_ell_alpha"] < 1.0:
            failures.append(("contraction-range", consts))
        if abs(got["c_minus_ell_alpha"] - (c - ell) * got["alpha"]) > 1e-15:
            failures.append(("contraction-value", consts))
    ok = not failures
    verdict(8, ok, "derived constants reproduce their closed forms exactly "
                   "and stay in range on every set-valued stability run")
    assert not failures, failures


def test_acceptance_09_linear_moduli():
    budget = 30.0
    start_time = time.perf_counter()
    failures = []
    ident = DenseMatrix.from_rows([[1.0, 0.0], [0.0, 1.0]])
    if abs(sur_modulus(ident).estimate - 1.0) > 1e-12:
        failures.append("identity")
    diag = DenseMatrix.from_rows([[3.0, 0.0], [0.0, 1.0]])
    svd_val = sur_modulus(diag).estimate
    grid_val = sur_modulus(diag, method="grid", mesh_count=3600).estimate
    if abs(svd_val - 1.0) > 1e-12 or abs(svd_val - grid_val) > 1e-4:
        failures.append(("diag", svd_val, grid_val))
    wide = DenseMatrix.from_rows([[1.0, 1.0]])
    if abs(sur_modulus(wide).estimate - math.sqrt(2.0)) > 1e-4:
        failures.append("wide")
    rng = np.random.default_rng(99)
    for i in range(500):
        a = DenseMatrix.from_rows(rng.uniform(-3, 3, (3, 3)).tolist())
        b = DenseMatrix.from_rows(rng.uniform(-3, 3, (3, 3)).tolist())
        sa = sur_modulus(a).estimate
        sb = sur_modulus(b).estimate
        if abs(sa - sb) > opnorm(a.minus(b)) + 1e-8:
            failures.append(("lipschitz", i))
        t = float(rng.uniform(0.1, 4.0))
        if abs(sur_modulus(a.scaled(t)).estimate - t * sa) > 1e-8 * (1.0 + t * sa):
            failures.append(("homogeneity", i))
        if sa > opnorm(a) + 1e-8:
            failures.append(("opnorm", i))
    elapsed = time.perf_counter() - start_time
    ok = not failures and elapsed < budget
    verdict(9, ok, "matrix rate pins, rate-lipschitz law, homogeneity, and "
                   f"the opnorm bound hold on 500 draws in {elapsed:.2f}s")
    assert not failures, failures[:5]
    assert elapsed < budget, f"runtime {elapsed:.2f}s exceeded {budget}s"


def test_acceptance_10_deterministic_reports():
    paths = sorted((REPO / "scenarios").glob("*.json"))
    first = emit_report(run_suite(paths, seed=0), format="machine")
    second = emit_report(run_suite(paths, seed=0), format="machine")
    ok = bool(paths) and first == second
    verdict(10, ok, "the full scenario suite run twice with one seed emits "
                    "byte-identical machine reports")
    assert paths
    assert first == second
