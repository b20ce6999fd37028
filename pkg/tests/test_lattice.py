import numpy as np
import pytest

from slicelens.dataset import DataError, Literal, Slice, root_slice, slice_members
from slicelens.driver import ProblematicIndex
from slicelens.lattice import LatticeExpander, SearchDriver, expand_slices, search
from slicelens.stats import LossVector, SliceEvaluator

from conftest import make_dataset, random_instance
from oracles import definition_oracle


def abc_dataset():
    """Features A, B, C whose literal-generating values are {a1}, {b1, b2}, {c1}.

    A and C carry a rare-value OTHER bucket so their single named value
    still selects a proper subset of the rows.
    """
    from slicelens.dataset import CATEGORICAL, OTHER, Dataset, FeatureSchema

    def bucketed(name, value):
        return FeatureSchema(name=name, kind=CATEGORICAL,
                             values=(value, OTHER), other_index=1)

    schemas = [
        bucketed("A", "a1"),
        FeatureSchema(name="B", kind=CATEGORICAL, values=("b1", "b2")),
        bucketed("C", "c1"),
    ]
    columns = [
        np.array([0, 0, 0, 0, 0, 0, 1, 1]),
        np.array([0, 1, 0, 1, 0, 1, 0, 1]),
        np.array([0, 0, 0, 0, 1, 1, 0, 1]),
    ]
    labels = np.zeros(8, dtype=np.int8)
    scores = np.full(8, 0.5)
    return Dataset(schemas, columns, labels, scores)


def predicates(dataset, slices):
    return [s.predicate(dataset) for s in slices]


class TestExpandSlices:
    def test_root_expansion(self):
        ds = abc_dataset()
        out = expand_slices([root_slice(ds)], 1, None, ds)
        assert predicates(ds, out) == ["A=a1", "B=b1", "B=b2", "C=c1"]

    def test_subsumption_pruning_after_problematic_slice(self):
        ds = abc_dataset()
        level1 = expand_slices([root_slice(ds)], 1, None, ds)
        problematic = ProblematicIndex([frozenset([Literal("A", "=", 0)])])
        non_problematic = [s for s in level1 if s.predicate(ds) != "A=a1"]
        out = expand_slices(non_problematic, 2, problematic, ds)
        assert predicates(ds, out) == ["B=b1 ∧ C=c1", "B=b2 ∧ C=c1"]

    def test_duplicate_paths_collapse_to_one_slice(self):
        ds = abc_dataset()
        b1 = slice_members(ds, [Literal("B", "=", 0)])
        c1 = slice_members(ds, [Literal("C", "=", 0)])
        out = expand_slices([b1, c1], 2, None, ds)
        combined = [s for s in out if s.num_literals == 2 and
                    {l.feature for l in s.literals} == {"B", "C"}]
        assert len([s for s in combined if s.literals[0].value == 0]) == 1

    def test_empty_member_slices_excluded(self):
        ds = make_dataset({
            "A": (("a1", "a2"), [0, 0, 0, 1]),
            "B": (("b1", "b2"), [0, 0, 0, 0]),
        })
        out = expand_slices([root_slice(ds)], 1, None, ds)
        # B=b2 never occurs, so it is not a candidate.
        assert predicates(ds, out) == ["A=a1", "A=a2", "B=b1"]

    def test_level_precondition(self):
        ds = abc_dataset()
        with pytest.raises(DataError):
            expand_slices([root_slice(ds)], 2, None, ds)


class TestSearch:
    def test_threshold_above_everything_returns_empty(self, rng):
        ds, loss = random_instance(rng)
        assert search(ds, loss, k=3, T=1e9, alpha=0.05, fdr="fixed") == []

    def test_matches_definition_oracle_on_small_instances(self, rng):
        for _ in range(15):
            ds, loss = random_instance(rng)
            k = int(rng.integers(1, 5))
            T = float(rng.uniform(0.3, 1.2))
            got = search(ds, loss, k=k, T=T, alpha=0.05, fdr="fixed")
            expected = definition_oracle(ds, loss, k=k, T=T, alpha=0.05)
            assert [r.slice.literals for r in got] == [s.literals for s, _ in expected]
            for rec, (_, stats) in zip(got, expected):
                assert rec.stats.effect_size == pytest.approx(stats.effect_size, abs=1e-9)
                assert rec.stats.p_value == pytest.approx(stats.p_value, abs=1e-9)

    def test_identical_results_across_worker_counts(self, rng):
        ds, loss = random_instance(rng, n_rows=200)
        runs = [search(ds, loss, k=4, T=0.5, alpha=0.05, fdr="fixed", workers=w)
                for w in (1, 2, 8)]
        baseline = [(r.slice.literals, r.stats.effect_size) for r in runs[0]]
        for other in runs[1:]:
            assert [(r.slice.literals, r.stats.effect_size) for r in other] == baseline

    def test_monotone_k_prefix(self, rng):
        ds, loss = random_instance(rng, n_rows=150)
        full = search(ds, loss, k=6, T=0.4, alpha=0.05, fdr="fixed")
        for j in range(1, len(full) + 1):
            part = search(ds, loss, k=j, T=0.4, alpha=0.05, fdr="fixed")
            assert [r.slice.literals for r in part] == \
                [r.slice.literals for r in full[:j]]

    def test_results_are_canonically_sorted(self, rng):
        ds, loss = random_instance(rng, n_rows=180)
        results = search(ds, loss, k=8, T=0.3, alpha=0.05, fdr="fixed")
        keys = [r.order_key() for r in results]
        assert keys == sorted(keys)

    def test_returned_slices_satisfy_all_conditions(self, rng):
        ds, loss = random_instance(rng, n_rows=160)
        T = 0.5
        results = search(ds, loss, k=5, T=T, alpha=0.05, fdr="investing")
        literal_sets = [r.slice.literal_set for r in results]
        for rec in results:
            assert rec.stats.effect_size >= T
            assert rec.decision is not None and rec.decision.rejected
            assert not any(other < rec.slice.literal_set for other in literal_sets)

    def test_investing_spends_wealth_in_order(self, rng):
        ds, loss = random_instance(rng, n_rows=160)
        expander = LatticeExpander(ds, SliceEvaluator(loss, 2))
        driver = SearchDriver(expander, alpha=0.05, fdr_mode="investing")
        driver.query(5, 0.4)
        state = driver.ai_state
        # Every recorded decision matches replaying the wealth ledger.
        from slicelens.fdr import AlphaInvestingState, ai_test
        replay = AlphaInvestingState.start(0.05)
        for decision in state.decisions:
            rejected, replay = ai_test(replay, decision.p_value)
            assert rejected == decision.rejected
        assert replay.wealth == pytest.approx(state.wealth, abs=1e-12)

    def test_parameter_validation(self, rng):
        ds, loss = random_instance(rng)
        with pytest.raises(DataError):
            search(ds, loss, k=0)
        with pytest.raises(DataError):
            search(ds, loss, k=1, T=0.0)
        with pytest.raises(DataError):
            search(ds, loss, k=1, T=0.5, alpha=1.5)
