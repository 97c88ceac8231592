"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line; they are printed in the
terminal summary (see ``conftest.py``) and when the module is run as a
script: ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from optprice import (
    ConstraintSet,
    CouplingInstance,
    DiscreteMeasure,
    ExtendedPotential,
    FiniteSpace,
    LipschitzConstraint,
    NotCyclicallyMonotone,
    PricingProblem,
    Relation,
    alpha_envelope,
    alpha_fulldomain,
    c_transform,
    check_cyclic_monotone,
    check_duality,
    check_n_monotone_permutations,
    constrained_lipschitz,
    cycle_sum,
    distance_constraint_slack,
    dual_constraints,
    gamma_envelope,
    gamma_fulldomain,
    is_lipschitz,
    is_member,
    mcshane,
    metric_from_graph,
    price_bounds,
    rockafellar,
    solve_kantorovich,
    whitney,
)
from optprice.metric import FiniteMetric
from oracles import (
    brute_force_transport,
    example2,
    example2_pricing,
    h_p,
    random_constraints,
    random_coupling,
    random_graph_metric_edges,
    transport_vertices,
)

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}")
    assert ok, detail


def test_criterion_01_example2_end_to_end():
    xs, cost, mu, nu = example2(100, grid="midpoints")
    t0 = time.perf_counter()
    res = solve_kantorovich(mu, nu, cost)
    elapsed = time.perf_counter() - t0
    f = ExtendedPotential(cost.space_x, np.abs(xs))
    g = ExtendedPotential(cost.space_y, np.zeros(2))
    rep = check_duality(res.with_duals(f, g))
    ok = (abs(res.primal_value + 1.25) <= 1e-9 and abs(rep.dual_value + 1.25) <= 1e-9
          and rep.feasibility_violations == 0 and elapsed < 1.0)
    record(1, "Two-segment market end-to-end", ok,
           f"primal={res.primal_value:.15g} total={rep.dual_value:.15g} "
           f"violations={rep.feasibility_violations} time={elapsed:.3f}s")


def test_criterion_02_example2_corridor():
    t0 = time.perf_counter()
    xs, res, cons = example2_pricing(100, grid="interval")
    corridor = price_bounds(PricingProblem(res, cons))
    elapsed = time.perf_counter() - t0
    left = xs < 0
    err_a = np.max(np.abs(corridor.alpha_price.values[left] - (-xs[left] - 2)))
    err_g = np.max(np.abs(corridor.gamma_price.values[left] - (-xs[left] + 2)))
    ad, gd = corridor.alpha_dual.values, corridor.gamma_dual.values  # Y = (-1, 1)
    err_d = max(abs(ad[1] - 2), abs(gd[1] + 2), abs(ad[0]), abs(gd[0]))
    ok = err_a <= 1e-8 and err_g <= 1e-8 and err_d <= 1e-8 and elapsed < 5.0
    record(2, "Two-segment market corridor", ok,
           f"|alpha+x+2|={err_a:.2e} |gamma+x-2|={err_g:.2e} duals err={err_d:.2e} time={elapsed:.3f}s")


def test_criterion_03_membership_boundary():
    xs, res, cons = example2_pricing(100, grid="interval")
    inst = res.cost.negated()
    members = {p: is_member(ExtendedPotential(res.cost.space_x, h_p(xs, p)), inst, cons) for p in (-2, -1, 0, 1, 2)}
    outsiders = {p: is_member(ExtendedPotential(res.cost.space_x, h_p(xs, p)), inst, cons) for p in (-2.5, 2.5, 3)}
    ok = all(v.is_member for v in members.values()) and all(
        not v.is_member and v.first_failed == 2 for v in outsiders.values())
    detail = ", ".join(f"p={p}:{'member' if v else v.diagnosis}" for p, v in {**members, **outsiders}.items())
    record(3, "Membership boundary", ok, detail)


def _marginals(n):
    ws = [Fraction(k, 4) for k in range(1, 5)]
    return [v for v in itertools.product(ws, repeat=n) if sum(v) == 1]


def test_criterion_04_solver_oracle():
    rng = np.random.default_rng(4)
    vertex_cache = {}
    checked = mismatches = 0
    worst_gap = 0.0
    for n in (2, 3):
        pairs = [(a, b) for a in _marginals(n) for b in _marginals(n)]
        for a, b in pairs:
            vertex_cache[(a, b)] = transport_vertices(a, b)
        for t in range(1000):
            a, b = pairs[t % len(pairs)]
            cost = rng.integers(-3, 4, size=(n, n))
            inst = CouplingInstance(FiniteSpace.range(n), FiniteSpace.range(n), cost.astype(float))
            mu = DiscreteMeasure(inst.space_x, [float(v) for v in a])
            nu = DiscreteMeasure(inst.space_y, [float(v) for v in b])
            res = solve_kantorovich(mu, nu, inst)
            exact = brute_force_transport(vertex_cache[(a, b)], cost.tolist())
            mismatches += Fraction(res.primal_value) != exact
            worst_gap = max(worst_gap, check_duality(res).gap)
            checked += 1
    ok = mismatches == 0 and worst_gap <= 1e-8 and checked == 2000
    record(4, "Solver oracle", ok, f"instances={checked} mismatches={mismatches} worst gap={worst_gap:.2e}")


def test_criterion_05_monotonicity_equivalence():
    rng = np.random.default_rng(5)
    disagreements = monotone = 0
    for trial in range(500):
        n, m = rng.integers(1, 6, size=2)
        inst = random_coupling(rng, int(n), int(m), integer=bool(trial % 2))
        cells = [(i, j) for i in range(n) for j in range(m)]
        k = int(rng.integers(1, min(6, len(cells)) + 1))
        rel = Relation(tuple(cells[i] for i in rng.choice(len(cells), size=k, replace=False)))
        a = check_cyclic_monotone(rel, inst)
        b = check_n_monotone_permutations(rel, inst, n_max=6)
        disagreements += a.is_monotone != b.is_monotone
        monotone += a.is_monotone
    ok = disagreements == 0
    record(5, "Monotonicity equivalence", ok,
           f"relations=500 monotone={monotone} discrepancies={disagreements}")


def test_criterion_06_envelope_duality():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(200):
        n, m = rng.integers(1, 9, size=2)
        inst = random_coupling(rng, int(n), int(m))
        _, cons = random_constraints(rng, inst)
        alpha, gamma = alpha_envelope(inst, cons), gamma_envelope(inst, cons)
        dual_inst, dual_cons = dual_constraints(inst, cons)
        alpha_d, gamma_d = alpha_envelope(dual_inst, dual_cons), gamma_envelope(dual_inst, dual_cons)
        worst = max(worst,
                    np.max(np.abs(c_transform(alpha, inst, side="x").values - gamma_d.values)),
                    np.max(np.abs(c_transform(gamma, inst, side="x").values - alpha_d.values)))
    record(6, "Envelope duality", worst <= 1e-8, f"instances=200 worst deviation={worst:.2e}")


def test_criterion_07_full_domain_closed_forms():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n, m = rng.integers(1, 9, size=2)
        inst = random_coupling(rng, int(n), int(m), integer=bool(rng.integers(2)))
        h0, cons = random_constraints(rng, inst)
        full = ConstraintSet.from_potential(cons.rel, cons.rel.domain, h0)
        worst = max(worst,
                    np.max(np.abs(alpha_envelope(inst, full).values - alpha_fulldomain(inst, full).values)),
                    np.max(np.abs(gamma_envelope(inst, full).values - gamma_fulldomain(inst, full).values)))
    record(7, "Full-domain closed forms", worst <= 1e-9, f"instances=200 worst deviation={worst:.2e}")


def test_criterion_08_rockafellar_normalization():
    rng = np.random.default_rng(8)
    anchored = raised = invalid = 0
    nonzero = 0
    for trial in range(300):
        n, m = rng.integers(1, 7, size=2)
        inst = random_coupling(rng, int(n), int(m), integer=bool(trial % 2))
        cells = [(i, j) for i in range(n) for j in range(m)]
        k = int(rng.integers(1, min(6, len(cells)) + 1))
        rel = Relation(tuple(cells[i] for i in rng.choice(len(cells), size=k, replace=False)))
        for s in rel.domain:
            try:
                r = rockafellar(inst, rel, s)
            except NotCyclicallyMonotone as exc:
                raised += 1
                w = exc.witness
                if not (w and all(p in rel for p in w) and cycle_sum(w, inst.coupling) < -1e-9):
                    invalid += 1
                if check_n_monotone_permutations(rel, inst, 6).is_monotone:
                    invalid += 1
                break
            anchored += 1
            nonzero += r.values[s] != 0.0
        else:
            if not check_cyclic_monotone(rel, inst).is_monotone:
                invalid += 1
    ok = nonzero == 0 and invalid == 0 and raised > 0 and anchored > 0
    record(8, "Rockafellar normalization", ok,
           f"anchored={anchored} R(s)!=0: {nonzero} raised={raised} invalid witnesses={invalid}")


def test_criterion_09_mcshane_whitney():
    rng = np.random.default_rng(9)
    failures = 0
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 13))
        d = metric_from_graph(random_graph_metric_edges(rng, n), n)
        size = int(rng.integers(1, n + 1))
        S = sorted(rng.choice(n, size=size, replace=False).tolist())
        # max of 1-Lipschitz cones v_a - d(., a) is 1-Lipschitz for any v
        anchors = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        heights = rng.normal(scale=3, size=len(anchors))
        f = (heights[None, :] - d.dist[np.ix_(S, anchors)]).max(axis=1)
        lo, hi = mcshane(S, f, d), whitney(S, f, d)
        ok = (np.all(lo.values <= hi.values + 1e-12) and is_lipschitz(lo.values, d) and is_lipschitz(hi.values, d)
              and np.array_equal(lo.values[S], f) and np.array_equal(hi.values[S], f))
        env = constrained_lipschitz(LipschitzConstraint(Relation.identity(S), S, f), d)
        dev = max(np.max(np.abs(env.alpha.values - lo.values)), np.max(np.abs(env.gamma.values - hi.values)))
        worst = max(worst, dev)
        failures += not ok or dev > 1e-9
    record(9, "McShane-Whitney", failures == 0, f"metrics=200 failures={failures} worst deviation={worst:.2e}")


def test_criterion_10_constrained_hand_case():
    d = FiniteMetric.from_points([0, 1, 2, 3])
    cons = LipschitzConstraint(Relation(((0, 1),)), (0,), [0.0])
    env = constrained_lipschitz(cons, d)
    slack_a = distance_constraint_slack(env.alpha, cons.rel, d)
    slack_g = distance_constraint_slack(env.gamma, cons.rel, d)
    ok = (env.alpha.values[3] == -1.0 and env.gamma.values[3] == 3.0
          and slack_a.size == 4 and np.all(slack_a >= 0) and np.all(slack_g >= 0))
    record(10, "Constrained extension hand case", ok,
           f"alpha(3)={env.alpha.values[3]:g} gamma(3)={env.gamma.values[3]:g} "
           f"min slack alpha={slack_a.min():g} gamma={slack_g.min():g}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
