"""Acceptance suite A1-A9.

Each criterion runs at its full size and tolerance and records one PASS/FAIL
line; the lines are printed in the pytest terminal summary (and directly when
this file is run as a script).
"""

import math
import random
import time

import pytest

from dyntree import GINI, INFO, VARIANCE, ExampleMultiset, Maintainer, greedy_build, make_example
from dyntree.bench import NAIVE_SEPARATION, RATIO_BOUND, BenchConfig, bench_scaling
from dyntree.core import LabelStats, relative_edit_distance
from dyntree.delayed import DelayApx, TauModel
from dyntree.gains import conditional_gain, label_variance, smoothness_bound
from dyntree.oracles import (FeasibilityParams, RoundAudit, brute_force_best_split,
                             check_feasibility, check_gain_approx, check_height,
                             reference_greedy, structures_match)
from dyntree.rules import Split, ThresholdRule, balancedness_gamma, evaluate
from dyntree.splits import EQ, LT, SplitRule, best_split
from dyntree.streams import base_set, generate, update_tail
from dyntree.tree import DecisionTree, Node

from helpers import random_instance, random_set

RESULTS = []


def record(name, ok, detail):
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------- A1
def test_a1_split_search_matches_brute_force():
    rng = random.Random(1001)
    t0 = time.perf_counter()
    bad = []
    for i in range(1000):
        S, real = random_instance(rng, n_max=200, d_max=5)
        kind = VARIANCE(1.0) if real else rng.choice([GINI, INFO])
        got, want = best_split(S, kind), brute_force_best_split(S, kind)
        if (got is None) != (want is None):
            bad.append(i)
        elif got is not None and (abs(got.gain - want.gain) > 1e-9 or got.rule != want.rule):
            bad.append(i)
        # the threshold rule must split exactly when the exhaustive best reaches alpha
        alpha = rng.choice([0.001, 0.01, 0.05, 0.2])
        out = evaluate(ThresholdRule(kind, alpha), S)
        should = want is not None and want.gain >= alpha
        if isinstance(out, Split) != should or (should and out.rule != want.rule):
            bad.append(i)
    dt = time.perf_counter() - t0
    ok = not bad and dt <= 60
    record("A1", ok, f"1000 instances, {len(bad)} mismatches, {dt:.1f}s (limit 60s)")
    assert ok


# ---------------------------------------------------------------- A2
def _edited(rng, S, k, d, real, c, grid):
    T = S.copy()
    for _ in range(k):
        if len(T) and rng.random() < 0.5:
            T.remove(rng.choice(list(T.items()))[0])
        else:
            y = round(rng.uniform(-c, c), 3) if real else rng.randrange(4)
            T.add(make_example([rng.randrange(grid) for _ in range(d)], y))
    return T


def test_a2_smoothness():
    rng = random.Random(2002)
    kinds = [GINI, INFO, VARIANCE(1.0)]
    trials = violations = 0
    worst = {k.name: 0.0 for k in kinds}
    while trials < 12000:
        kind = kinds[trials % 3]
        n = rng.randint(2, 80)
        d = rng.randint(1, 3)
        grid = rng.choice([3, 6, 12])
        S = random_set(rng, n, d, classes=rng.randint(2, 4), real=kind.regression,
                       grid=grid, c=kind.c)
        T = _edited(rng, S, rng.randint(0, n // 2), d, kind.regression, kind.c, grid)
        if len(T) == 0:
            continue
        eta = relative_edit_distance(S, T)
        if eta > 0.5:
            continue
        trials += 1
        sigma = SplitRule(rng.randrange(d), float(rng.randrange(grid)), rng.choice([LT, EQ]))
        diff = abs(conditional_gain(kind, S, sigma) - conditional_gain(kind, T, sigma))
        bound = smoothness_bound(kind, eta, max(len(S), len(T)))
        if diff > bound + 1e-12:
            violations += 1
        if bound > 0:
            worst[kind.name] = max(worst[kind.name], diff / bound)
    ok = violations == 0
    record("A2", ok, f"{trials} triples (ED* <= 0.5), {violations} violations, "
                     f"worst |dG|/bound " + ", ".join(f"{k}={v:.3f}" for k, v in worst.items()))
    assert ok


# ---------------------------------------------------------------- A3
def test_a3_balancedness():
    rng = random.Random(3003)
    kinds = [GINI, INFO, VARIANCE(1.0)]
    splits = violations = 0
    tight = 1.0
    while splits < 1200:
        kind = rng.choice(kinds)
        n = rng.randint(2, 150)
        S = random_set(rng, n, rng.randint(1, 3), classes=rng.randint(2, 4),
                       real=kind.regression, grid=rng.choice([3, 8, 30]), c=kind.c)
        alpha = rng.choice([0.01, 0.03, 0.1, 0.3])
        out = evaluate(ThresholdRule(kind, alpha), S)
        if not isinstance(out, Split):
            continue
        splits += 1
        one = sum(c for ex, c in S.items() if out.rule(ex.x))
        frac = min(one, n - one) / n
        gamma = balancedness_gamma(kind, alpha, n)
        if frac < gamma - 1e-12:
            violations += 1
        tight = min(tight, frac / gamma)
    ok = violations == 0
    record("A3", ok, f"{splits} splitting sets, {violations} violations, "
                     f"min side/gamma = {tight:.2f}")
    assert ok


# ---------------------------------------------------------------- A4
A4_RUNS = [("clusters", GINI), ("checkerboard", GINI), ("hot-leaf", GINI),
           ("regression", VARIANCE(1.0))]


@pytest.mark.slow
@pytest.mark.parametrize("gen,kind", A4_RUNS, ids=[g for g, _ in A4_RUNS])
def test_a4_dynamic_feasibility(gen, kind):
    alpha = beta = 0.3
    st = generate(gen, 5000, seed=4004)
    p = FeasibilityParams(alpha, beta, kind, n_max=max(2, st.max_active()))
    m = Maintainer(ThresholdRule.for_feasibility(kind, alpha), p.epsilon, st.header.d,
                   record_applies=False)
    t0 = time.perf_counter()
    bad = 0
    first = None
    for i, u in enumerate(st.requests, 1):
        m.apply(u)
        v = check_feasibility(m.tree, m.active, p)
        if v:
            bad += 1
            first = first or (i, v[0])
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt <= 600
    record(f"A4[{gen}/{kind.name}]", ok,
           f"5000 updates, eps={p.epsilon:.5f}, checked after each, {bad} infeasible states, "
           f"height {m.height()}, {dt:.0f}s (limit 600s)" + (f", first {first}" if first else ""))
    assert ok


# ---------------------------------------------------------------- A5
@pytest.mark.slow
def test_a5_worst_case_scaling():
    doc = bench_scaling(BenchConfig(gain=GINI, alpha=0.3, beta=0.3, epsilon=0.1, seed=0))
    s = doc["summary"]
    naive_hot = s["hot-leaf"]["naive_ratio"]
    ratios = {g: v["ratio"] for g, v in s.items()}
    viol = sum(r["budget_violations"] for r in doc["runs"])
    ok = all(r <= RATIO_BOUND for r in ratios.values()) and naive_hot > NAIVE_SEPARATION \
        and viol == 0
    record("A5", ok, "max-ops ratio 8192/1024: "
           + ", ".join(f"{g}={r:.2f}" for g, r in ratios.items())
           + f" (bound {RATIO_BOUND}); naive hot-leaf ratio {naive_hot:.2f} "
           f"(must exceed {NAIVE_SEPARATION}); budget violations {viol}")
    assert ok


# ---------------------------------------------------------------- A6
@pytest.mark.slow
def test_a6_delayed_rebuild_invariants():
    rng = random.Random(6006)
    audit = RoundAudit(exact=True)
    windows = over = runs = 0
    for trial in range(400):
        gen = rng.choice(["clusters", "checkerboard", "regression"])
        n = int(2 ** rng.uniform(3, 11))
        kind = VARIANCE(1.0) if gen == "regression" else rng.choice([GINI, INFO])
        dec = rng.choice([1, 3, 6])
        S = base_set(gen, n, seed=trial, decimals=dec)
        rule = ThresholdRule(kind, rng.choice([0.005, 0.02, 0.05, 0.15]))
        h = greedy_build(rule, S).height
        inst = DelayApx(rule, rng.choice([0.02, 0.05, 0.1, 0.25, 0.5, 0.9]), n, S.items(), d=2,
                        height_hint=h + 2, audit=audit)
        for u in update_tail(gen, S, inst.pulls_needed, seed=trial + 1, decimals=dec):
            inst.feed(u)
        runs += 1
        windows += len(inst.budget.windows)
        over += sum(1 for w in inst.budget.windows if w > inst.tau)
    # instances created inside the maintainer as well
    m_viol = 0
    for gen in ("clusters", "hot-leaf"):
        m = Maintainer(ThresholdRule.for_feasibility(GINI, 0.3), 0.2, 2, audit=audit)
        m.run(generate(gen, 1500, seed=66).requests)
        m_viol += len(m.stats.budget_violations)
    ok = not audit.failures and over == 0 and m_viol == 0
    record("A6", ok, f"{runs} standalone runs + 2 maintainer streams, {audit.boundaries} round "
                     f"boundaries, {len(audit.failures)} counter/stored-set failures, "
                     f"{windows} standalone windows with {over} over tau, "
                     f"{m_viol} maintainer budget violations")
    assert ok


# ---------------------------------------------------------------- A7
@pytest.mark.slow
def test_a7_greedy_matches_reference():
    rng = random.Random(7007)
    bad = 0
    for _ in range(500):
        n = int(2 ** rng.uniform(0, math.log2(2000)))
        real = rng.random() < 0.3
        kind = VARIANCE(1.0) if real else rng.choice([GINI, INFO])
        S = random_set(rng, n, rng.randint(1, 4), classes=rng.randint(1, 4), real=real,
                       grid=rng.choice([4, 16, 64]))
        rule = ThresholdRule(kind, rng.choice([0.001, 0.01, 0.05]),
                             k_star=rng.choice([0, 0, 5]), h_star=rng.choice([None, None, 2]))
        if not structures_match(greedy_build(rule, S).root, reference_greedy(rule, S)):
            bad += 1
    ok = bad == 0
    record("A7", ok, f"500 instances (n <= 2000), {bad} structural differences")
    assert ok


# ---------------------------------------------------------------- A8
def test_a8_variance_identity():
    rng = random.Random(8008)
    worst = 0.0
    bad = 0
    for _ in range(1000):
        k = rng.randint(1, 60)
        scale = 10 ** rng.uniform(-3, 3)
        ys = [rng.uniform(-scale, scale) for _ in range(k)]
        if rng.random() < 0.3:
            ys = [round(y, 1) for y in ys]
        moment = label_variance(LabelStats.of(ys))
        pair = math.fsum((a - b) ** 2 for a in ys for b in ys) / (k * k)
        rel = abs(moment - pair) / max(abs(pair), 1e-300) if pair else abs(moment)
        worst = max(worst, rel)
        if rel > 1e-9:
            bad += 1
    ok = bad == 0
    record("A8", ok, f"1000 label sets, {bad} beyond 1e-9 relative, worst {worst:.2e}")
    assert ok


# ---------------------------------------------------------------- A9
def _stump(rule, left, right):
    root = Node()
    root.split = rule
    root.left, root.right = Node(parent=root), Node(parent=root)
    root.left.label, root.right.label = left, right
    root.height = 1
    return DecisionTree(root, 1)


def test_a9_negative_controls():
    S = ExampleMultiset([make_example([float(i)], int(i >= 10)) for i in range(20)])
    p = FeasibilityParams(0.3, 0.3, GINI)
    leaf = Node()
    leaf.label = 0
    fixtures = {}
    fixtures["feasibility: high-gain leaf"] = bool(check_feasibility(DecisionTree(leaf, 1), S, p))
    fixtures["feasibility: suboptimal split"] = bool(
        check_feasibility(_stump(SplitRule(0, 2.0, LT), 0, 0), S, p))
    fixtures["feasibility: non-mode leaf label"] = bool(
        check_feasibility(_stump(SplitRule(0, 10.0, LT), 1, 1), S, p))
    fixtures["gain-approx: wrong feature"] = bool(
        check_gain_approx(_stump(SplitRule(0, 3.0, LT), 0, 1), S, GINI, 0.001))
    chain = Node()
    v = chain
    for i in range(19):
        v.split = SplitRule(0, float(i), EQ)
        v.left, v.right = Node(parent=v), Node(parent=v)
        v.right.label = int(i >= 10)
        v = v.left
    v.label = 1
    fixtures["height: one-example peels"] = bool(check_height(DecisionTree(chain, 1), S, 0.2, 0.0))
    # round audit: a stored set that drifted from S + U
    base = base_set("clusters", 64, seed=9)
    audit = RoundAudit()

    def tamper(inst, i):
        if i == 1:
            inst.root.data.add(make_example([9.0, 9.0], 1))
        audit(inst, i)

    inst = DelayApx(ThresholdRule(GINI, 0.05), 0.25, 64, base.items(), d=2, audit=tamper)
    for u in update_tail("clusters", base, inst.pulls_needed, seed=10):
        try:
            inst.feed(u)
        except Exception:
            break
    fixtures["round audit: tampered stored set"] = bool(audit.failures)
    # budget: tau forced to 1
    inst = DelayApx(ThresholdRule(GINI, 0.05), 0.25, 64, base.items(), d=2,
                    tau_model=TauModel(override=1))
    for u in update_tail("clusters", base, inst.pulls_needed, seed=10):
        inst.feed(u)
    fixtures["budget: tau = 1"] = bool(inst.budget.violations)
    rejected = [k for k, v in fixtures.items() if v]
    ok = len(rejected) == len(fixtures) and len(fixtures) >= 3
    record("A9", ok, f"{len(rejected)}/{len(fixtures)} constructed fixtures rejected"
           + ("" if ok else f"; accepted: {[k for k, v in fixtures.items() if not v]}"))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
