import numpy as np
import pytest

from slicelens.dataset import Literal
from slicelens.stats import log_loss_vector
from slicelens.tree import TreeExpander, best_split, misclassified_indicator, search
from slicelens.driver import ProblematicIndex, SearchDriver
from slicelens.stats import SliceEvaluator

from conftest import make_dataset


def tree_instance(rng, n=200, pockets=2):
    """Labels predicted correctly except inside a few feature-value pockets."""
    cols = {
        "A": (("a0", "a1", "a2"), rng.integers(0, 3, n)),
        "B": (("b0", "b1"), rng.integers(0, 2, n)),
        "C": (("c0", "c1", "c2", "c3"), rng.integers(0, 4, n)),
    }
    labels = rng.integers(0, 2, n).astype(np.int8)
    scores = labels.astype(np.float64)
    for _ in range(pockets):
        name = ("A", "B", "C")[int(rng.integers(0, 3))]
        values, col = cols[name]
        value = int(rng.integers(0, len(values)))
        hit = np.asarray(col) == value
        scores[hit] = 1.0 - labels[hit]
    ds = make_dataset(cols, labels=labels, scores=scores)
    return ds, log_loss_vector(ds.labels, ds.scores)


class TestBestSplit:
    def test_pure_node_has_no_split(self):
        ds = make_dataset({"A": (("x", "y"), [0, 1, 0, 1])})
        target = np.zeros(4, dtype=np.int8)
        assert best_split(np.arange(4), ds, target, min_leaf=1) is None

    def test_perfect_separator_chosen_with_zero_child_impurity(self):
        ds = make_dataset({
            "A": (("x", "y"), [0, 0, 0, 1, 1, 1]),
            "B": (("u", "w"), [0, 1, 0, 1, 0, 1]),
        })
        target = np.array([1, 1, 1, 0, 0, 0], dtype=np.int8)
        choice = best_split(np.arange(6), ds, target, min_leaf=1)
        assert choice.feature == "A"
        assert choice.left == Literal("A", "=", 0)
        assert choice.impurity == pytest.approx(0.0, abs=1e-12)

    def test_equal_impurity_tie_breaks_on_predicate_string(self):
        # A and B are identical columns, so four splits tie exactly;
        # exhaustive scoring by hand gives weighted Gini 2/9 for each.
        ds = make_dataset({
            "A": (("x", "y"), [0, 0, 0, 1, 1, 1]),
            "B": (("u", "w"), [0, 0, 0, 1, 1, 1]),
        })
        target = np.array([1, 1, 0, 0, 0, 0], dtype=np.int8)
        choice = best_split(np.arange(6), ds, target, min_leaf=1)
        assert choice.impurity == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert choice.left == Literal("A", "=", 0)

    def test_min_leaf_blocks_unbalanced_splits(self):
        ds = make_dataset({"A": (("x", "y"), [0, 1, 1, 1, 1, 1])})
        target = np.array([1, 0, 0, 0, 0, 0], dtype=np.int8)
        assert best_split(np.arange(6), ds, target, min_leaf=2) is None

    def test_no_split_without_impurity_reduction(self):
        # Target independent of the only feature: any split keeps p = 1/2.
        ds = make_dataset({"A": (("x", "y"), [0, 1, 0, 1])})
        target = np.array([1, 1, 0, 0], dtype=np.int8)
        assert best_split(np.arange(4), ds, target, min_leaf=1) is None


class TestManualTrace:
    def test_level_wise_growth_matches_hand_computation(self):
        ds = make_dataset({
            "A": (("a0", "a1"), [0, 0, 0, 0, 1, 1, 1, 1]),
            "B": (("b0", "b1"), [0, 1, 0, 1, 0, 1, 0, 1]),
        })
        target = np.array([1, 1, 1, 0, 0, 0, 0, 0], dtype=np.int8)
        choice = best_split(np.arange(8), ds, target, min_leaf=1)
        assert choice.left == Literal("A", "=", 0)
        assert choice.impurity == pytest.approx(0.1875, abs=1e-12)
        left_members = np.flatnonzero(ds.column("A") == 0)
        second = best_split(left_members, ds, target, min_leaf=1)
        assert second.left == Literal("B", "=", 0)
        assert second.impurity == pytest.approx(0.25, abs=1e-12)
        right_members = np.flatnonzero(ds.column("A") == 1)
        assert best_split(right_members, ds, target, min_leaf=1) is None


class TestTreeSearch:
    def test_single_pocket_found_at_level_one(self, rng):
        n = 120
        col = rng.integers(0, 3, n)
        labels = rng.integers(0, 2, n).astype(np.int8)
        scores = labels.astype(np.float64)
        hit = col == 1
        scores[hit] = 1.0 - labels[hit]
        ds = make_dataset({"A": (("a0", "a1", "a2"), col)}, labels=labels, scores=scores)
        loss = log_loss_vector(ds.labels, ds.scores)
        results = search(ds, loss, k=1, T=0.4, alpha=0.05, min_leaf=5)
        assert len(results) == 1
        assert results[0].slice.predicate(ds) == "A=a1"

    def test_returned_slices_pairwise_disjoint(self, rng):
        for _ in range(8):
            ds, loss = tree_instance(rng)
            results = search(ds, loss, k=6, T=0.3, alpha=0.05, min_leaf=5)
            for i, a in enumerate(results):
                for b in results[i + 1:]:
                    assert np.intersect1d(a.slice.members, b.slice.members).size == 0

    def test_conditions_hold_on_results(self, rng):
        ds, loss = tree_instance(rng)
        T = 0.4
        results = search(ds, loss, k=5, T=T, alpha=0.05, min_leaf=5)
        for rec in results:
            assert rec.stats.effect_size >= T
            assert rec.decision.rejected

    def test_reproducible_across_runs_and_workers(self, rng):
        ds, loss = tree_instance(rng)
        runs = [search(ds, loss, k=5, T=0.3, alpha=0.05, min_leaf=5, workers=w)
                for w in (1, 1, 4)]
        keys = [[r.slice.literals for r in run] for run in runs]
        assert keys[0] == keys[1] == keys[2]

    def test_misclassified_indicator(self):
        ds = make_dataset({"A": (("x", "y"), [0, 1, 0, 1])},
                          labels=np.array([1, 0, 0, 1]),
                          scores=np.array([0.9, 0.2, 0.7, 0.4]))
        assert misclassified_indicator(ds).tolist() == [0, 0, 1, 1]

    def test_problematic_leaves_are_not_split_further(self, rng):
        ds, loss = tree_instance(rng, n=300, pockets=1)
        evaluator = SliceEvaluator(loss, 2)
        expander = TreeExpander(ds, evaluator, min_leaf=5)
        driver = SearchDriver(expander, alpha=0.05, fdr_mode="investing")
        results = driver.query(2, 0.3)
        if results:
            found = results[0].slice.literal_set
            deeper = [r for r in driver.records
                      if found < r.slice.literal_set and r.depth > results[0].depth]
            assert deeper == []
