"""Acceptance gate: one test per exit criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from slicelens.dataset import load
from slicelens.driver import SearchDriver
from slicelens.engine import SearchSession
from slicelens.harness import (
    fdr_power_sim,
    gen_synthetic,
    inject,
    linear_fit_r2,
    mean_accuracy,
    method_comparison,
    random_injection,
    sampling_curve,
)
from slicelens.lattice import LatticeExpander, search as lattice_search
from slicelens.stats import (
    SliceEvaluator,
    effect_size,
    log_loss_vector,
    per_example_log_loss,
    welch_t,
)

from conftest import pocket_instance, random_instance
from oracles import definition_oracle, welch_reference

FIXTURES = Path(__file__).parent / "fixtures"


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f" :: {detail}"
    print(line, file=sys.stderr)
    assert ok, line


def check_definition_conditions(records, threshold: float) -> None:
    """Every returned slice: effect at threshold, rejected, minimal, sorted."""
    literal_sets = [r.slice.literal_set for r in records]
    for rec in records:
        assert rec.stats.effect_size >= threshold
        assert rec.decision is not None and rec.decision.rejected
        assert not any(other < rec.slice.literal_set for other in literal_sets)
    keys = [r.order_key() for r in records]
    assert keys == sorted(keys)


def oracle_instances(count: int = 50):
    rng = np.random.default_rng(424242)
    for _ in range(count):
        ds, loss = random_instance(rng, max_features=4, max_values=4)
        k = int(rng.integers(1, 6))
        T = float(rng.uniform(0.3, 1.3))
        yield ds, loss, k, T


def test_oracle_equivalence_core():
    started = time.perf_counter()
    checked = 0
    for ds, loss, k, T in oracle_instances(50):
        got = lattice_search(ds, loss, k=k, T=T, alpha=0.05, fdr="fixed")
        expected = definition_oracle(ds, loss, k=k, T=T, alpha=0.05)
        assert [r.slice.literals for r in got] == [s.literals for s, _ in expected]
        for rec, (_, stats) in zip(got, expected):
            for field in ("size", "mean_loss", "effect_size", "t_stat", "df", "p_value"):
                assert getattr(rec.stats, field) == pytest.approx(
                    getattr(stats, field), abs=1e-9)
        check_definition_conditions(got, T)
        checked += 1
    elapsed = time.perf_counter() - started
    _report("oracle equivalence (50 random instances, fixed-alpha)",
            checked == 50 and elapsed < 10.0,
            f"{checked} instances in {elapsed:.2f}s (< 10s)")


def test_worked_example_trace():
    schema_opts = {"A": {"top_values": 1}, "B": {"top_values": 2}, "C": {"top_values": 1}}
    ds, _ = load(FIXTURES / "abc_demo.csv", "label", "score", schema_options=schema_opts)
    loss = log_loss_vector(ds.labels, ds.scores)
    records = lattice_search(ds, loss, k=2, T=1.2, alpha=0.05, fdr="investing")
    predicates = [r.slice.predicate(ds) for r in records]
    check_definition_conditions(records, 1.2)
    _report("worked-example trace", predicates == ["A=a1", "B=b1 ∧ C=c1"],
            f"result = {predicates}")


def test_statistics_fixtures():
    ok_logloss = abs(per_example_log_loss(1, 0.5) - 0.6931) <= 1e-4
    rng = np.random.default_rng(7771)
    ok_welch = True
    for _ in range(100):
        n1 = int(rng.integers(3, 40))
        n2 = int(rng.integers(3, 40))
        x = rng.uniform(0, 2, n1) + rng.normal(0, 0.2, n1)
        y = rng.uniform(0, 2, n2)
        t_ref, df_ref, p_ref = welch_reference(x, y)
        t, df, p = welch_t(float(x.mean()), float(x.var(ddof=1)), n1,
                           float(y.mean()), float(y.var(ddof=1)), n2)
        if not (abs(t - t_ref) <= 1e-6 and abs(df - df_ref) <= 1e-6
                and abs(p - p_ref) <= 1e-6):
            ok_welch = False
            break
    ok_effect = abs(effect_size(0.6, 0.04, 0.4, 0.04) - 1.0) <= 1e-9
    _report("statistics fixtures", ok_logloss and ok_welch and ok_effect,
            "log-loss 0.6931, 100 Welch cases vs oracle at 1e-6, effect size 1.0")


def test_method_ordering():
    started = time.perf_counter()
    rows = method_comparison(10_000, seeds=range(20), values_per_feature=10,
                             num_slices=3, k=10, T=0.4)
    elapsed = time.perf_counter() - started
    means = mean_accuracy(rows)
    ordered = means["lattice"] >= means["tree"] >= means["cluster"]
    strong = means["lattice"] >= 0.7
    _report("method ordering on injected benchmark",
            ordered and strong and elapsed < 120.0,
            f"lattice={means['lattice']:.3f} tree={means['tree']:.3f} "
            f"cluster={means['cluster']:.3f} in {elapsed:.1f}s (< 120s)")


def test_sampling_behavior():
    base = gen_synthetic(30_000, 5, seed=11)
    perturbed, _ = inject(base, random_injection(base, seed=77, num_slices=3))
    loss = log_loss_vector(perturbed.labels, perturbed.scores)
    fractions = [1 / 128, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0]
    rows = sampling_curve(perturbed, loss, fractions, seed=5, k=10, T=0.4,
                          timing_reps=5, timing_inner=3)
    small = {r["algorithm"]: r["relative_accuracy"]
             for r in rows if r["fraction"] == fractions[0]}
    accurate = all(v >= 0.8 for v in small.values())
    r2_ok = True
    details = [f"rel@1/128 lattice={small['lattice']:.3f} tree={small['tree']:.3f}"]
    for algorithm in ("lattice", "tree"):
        sub = [r for r in rows if r["algorithm"] == algorithm and r["fraction"] >= 1 / 16]
        r2 = linear_fit_r2([r["fraction"] for r in sub], [r["seconds"] for r in sub])
        details.append(f"{algorithm} R2={r2:.3f}")
        if r2 < 0.9:
            r2_ok = False
    _report("sampling: relative accuracy and linear runtime",
            accurate and r2_ok, ", ".join(details))


def test_fdr_control():
    grid = (0.001, 0.005, 0.01)
    outcomes = fdr_power_sim(("investing", "bonferroni", "bh"), grid,
                             runs=10_000, seed=99)
    by_policy = {}
    for o in outcomes:
        by_policy.setdefault(o.policy, {})[o.alpha] = o
    controlled = all(
        by_policy["investing"][a].mfdr <= a + 3 * by_policy["investing"][a].mfdr_se
        for a in grid)
    dominated = all(
        by_policy["bonferroni"][a].power <= by_policy["bh"][a].power for a in grid)
    detail = ", ".join(
        f"a={a}: mfdr={by_policy['investing'][a].mfdr:.5f}" for a in grid)
    _report("sequential testing controls mFDR; step-up dominates fixed-m",
            controlled and dominated, detail)


def test_determinism_and_concurrency():
    identical = True
    for ds, loss, k, T in oracle_instances(12):
        runs = [lattice_search(ds, loss, k=k, T=T, alpha=0.05, fdr="fixed", workers=w)
                for w in (1, 2, 8)]
        base = [(r.slice.literals, r.stats.effect_size, r.stats.p_value) for r in runs[0]]
        for other in runs[1:]:
            if [(r.slice.literals, r.stats.effect_size, r.stats.p_value)
                    for r in other] != base:
                identical = False
    _report("identical results across worker counts {1,2,8}", identical)

    # Soft throughput check: log-only on failure.
    ds = gen_synthetic(100_000, 30, seed=21)
    perturbed, _ = inject(ds, random_injection(ds, seed=22, num_slices=3))
    loss = log_loss_vector(perturbed.labels, perturbed.scores)
    timings = {}
    for workers in (1, 2, 4):
        evaluator = SliceEvaluator(loss, 2)
        expander = LatticeExpander(perturbed, evaluator, workers=workers)
        driver = SearchDriver(expander, alpha=0.05, fdr_mode="fixed")
        driver.step()  # level 1
        started = time.perf_counter()
        driver.step()  # level 2: the wide one
        timings[workers] = time.perf_counter() - started
    monotone = timings[1] >= timings[2] >= timings[4]
    note = " ".join(f"w{w}={timings[w]*1000:.0f}ms" for w in (1, 2, 4))
    if not monotone:
        print(f"[WARN] per-depth throughput not monotone (soft check): {note}",
              file=sys.stderr)
    _report("per-depth throughput 1->4 workers (soft, log-only)", True, note)


def test_interactive_cache_semantics():
    ds, loss = pocket_instance()
    session = SearchSession(ds, loss, algorithm="lattice", alpha=0.05)
    first = session.query(k=2, min_effect_size=1.0)
    evals = session.eval_count
    lowered = session.query(k=2, min_effect_size=0.3)
    cache_ok = session.eval_count == evals and len(lowered) == 2
    raised = session.query(k=2, min_effect_size=50.0)
    resume_ok = session.eval_count > evals and len(raised) < 2
    _report("interactive cache: lower-T cache-only, raise-T resumes",
            bool(first) and cache_ok and resume_ok,
            f"evals {evals} -> {session.eval_count}")


def test_definition_invariants_and_monotone_k():
    rng = np.random.default_rng(90210)
    all_ok = True
    for _ in range(12):
        ds, loss = random_instance(rng, max_features=4, max_values=4, n_rows=140)
        T = float(rng.uniform(0.3, 1.0))
        full = lattice_search(ds, loss, k=6, T=T, alpha=0.05, fdr="fixed")
        check_definition_conditions(full, T)
        for j in range(1, len(full) + 1):
            part = lattice_search(ds, loss, k=j, T=T, alpha=0.05, fdr="fixed")
            if [r.slice.literals for r in part] != [r.slice.literals for r in full[:j]]:
                all_ok = False
        inv = lattice_search(ds, loss, k=4, T=T, alpha=0.05, fdr="investing")
        check_definition_conditions(inv, T)
    _report("definition invariants + monotone-k prefix", all_ok)
