"""Decision-tree slice search over the misclassified-example indicator.

The tree grows level by level, CART style: each splittable leaf gets
the equality/threshold split minimizing weighted Gini impurity of the
misclassification target. Every level's new leaves become candidate
slices and go through the same effect-size filter and significance
testing as the lattice. Leaves found problematic are not split further,
so returned slices are pairwise disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import CATEGORICAL, DataError, Dataset, Literal, Slice
from .driver import ProblematicIndex, SearchDriver, SliceRecord, run_ordered
from .stats import LossVector, SliceEvaluator, SliceStats

DEFAULT_MIN_LEAF = 10
DEFAULT_MAX_DEPTH = 12

GINI_EPS = 1e-12


def gini(positive: float, total: float) -> float:
    if total <= 0:
        return 0.0
    p = positive / total
    return 2.0 * p * (1.0 - p)


@dataclass(frozen=True)
class SplitChoice:
    """Winning split of one node: complementary left/right literals."""

    feature: str
    left: Literal
    right: Literal
    impurity: float


@dataclass
class TreeNode:
    """One tree node; children (when present) partition the members."""

    members: np.ndarray
    depth: int
    path_literals: tuple[Literal, ...] = ()
    split: Optional[SplitChoice] = None
    children: list = field(default_factory=list)

    @property
    def literal_set(self) -> frozenset:
        return frozenset(self.path_literals)


def misclassified_indicator(dataset: Dataset) -> np.ndarray:
    """1 where thresholding the score at 0.5 contradicts the label."""
    predicted = (dataset.scores >= 0.5).astype(np.int8)
    return (predicted != dataset.labels).astype(np.int8)


def best_split(members: np.ndarray, dataset: Dataset, target: np.ndarray,
               min_leaf: int = DEFAULT_MIN_LEAF) -> Optional[SplitChoice]:
    """Split minimizing weighted child Gini impurity of the target.

    Categorical features contribute value-equality tests, numeric
    features bin-boundary thresholds. Returns None when the node is
    pure, no split reduces impurity, or every split would leave a child
    below min_leaf. Equal-impurity ties go to the lexicographically
    smaller left-literal string.
    """
    m = int(members.size)
    if m < 2 * min_leaf:
        return None
    tgt = target[members].astype(np.float64)
    total_pos = float(tgt.sum())
    parent = gini(total_pos, m)
    if parent <= 0.0:
        return None
    best: Optional[tuple[float, str, SplitChoice]] = None
    for schema in dataset.schemas:
        if schema.degenerate:
            continue
        col = dataset.column(schema.name)[members]
        counts = np.bincount(col, minlength=schema.domain_size).astype(np.float64)
        pos = np.bincount(col, weights=tgt, minlength=schema.domain_size)
        if schema.kind == CATEGORICAL:
            candidates = [
                (counts[v], pos[v], Literal(schema.name, "=", v), Literal(schema.name, "!=", v))
                for v in schema.literal_value_indices()
            ]
        else:
            cum_counts = np.cumsum(counts)
            cum_pos = np.cumsum(pos)
            candidates = [
                (cum_counts[j - 1], cum_pos[j - 1],
                 Literal(schema.name, "<", j), Literal(schema.name, ">=", j))
                for j in schema.threshold_indices()
            ]
        for n_left, pos_left, left, right in candidates:
            n_right = m - n_left
            if n_left < min_leaf or n_right < min_leaf:
                continue
            weighted = (n_left * gini(pos_left, n_left)
                        + n_right * gini(total_pos - pos_left, n_right)) / m
            tie_key = left.display(schema)
            if best is None or (weighted, tie_key) < (best[0], best[1]):
                best = (weighted, tie_key, SplitChoice(schema.name, left, right, weighted))
    if best is None or best[0] >= parent - GINI_EPS:
        return None
    return best[2]


class TreeExpander:
    """Grows the tree one level per batch; new leaves are the candidates."""

    def __init__(self, dataset: Dataset, evaluator: SliceEvaluator, *,
                 workers: int = 1, max_depth: int = DEFAULT_MAX_DEPTH,
                 min_leaf: int = DEFAULT_MIN_LEAF):
        self.dataset = dataset
        self.evaluator = evaluator
        self.workers = max(int(workers), 1)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.depth = 0
        self._target = misclassified_indicator(dataset)
        self.root = TreeNode(members=np.arange(dataset.n, dtype=np.int64), depth=0)
        self._frontier: list[TreeNode] = [self.root]

    def hypothesis_count(self) -> int:
        total = 1
        for schema in self.dataset.schemas:
            total *= 1 + len(schema.literal_value_indices())
        return total - 1

    def next_batch(self, problematic: ProblematicIndex) -> list[tuple[Slice, SliceStats]]:
        if self.depth >= self.max_depth or not self._frontier:
            return []
        self.depth += 1
        children: list[TreeNode] = []
        for node in self._frontier:
            if node.path_literals and problematic.contains(node.literal_set):
                continue
            choice = best_split(node.members, self.dataset, self._target, self.min_leaf)
            if choice is None:
                continue
            node.split = choice
            col = self.dataset.column(choice.feature)[node.members]
            if choice.left.op == "=":
                mask = col == choice.left.value
            else:
                mask = col < choice.left.value
            for literal, selector in ((choice.left, mask), (choice.right, ~mask)):
                child = TreeNode(
                    members=node.members[selector],
                    depth=self.depth,
                    path_literals=(*node.path_literals, literal),
                )
                node.children.append(child)
                children.append(child)
        self._frontier = children
        if not children:
            return []
        evaluator = self.evaluator

        def job(node: TreeNode):
            return Slice(node.path_literals, node.members), evaluator.evaluate(node.members)

        return run_ordered([lambda nd=nd: job(nd) for nd in children], self.workers)


def search(dataset: Dataset, loss: LossVector, k: int = 10, T: float = 0.4,
           alpha: float = 0.05, *, fdr: str = "investing", workers: int = 1,
           min_size: int = 2, max_depth: int = DEFAULT_MAX_DEPTH,
           min_leaf: int = DEFAULT_MIN_LEAF, payout: Optional[float] = None,
           evaluator: Optional[SliceEvaluator] = None) -> list[SliceRecord]:
    """One-shot decision-tree search returning up to k ranked slice records."""
    if k < 1:
        raise DataError("k must be >= 1")
    if not (T > 0):
        raise DataError("effect size threshold must be positive")
    if not (0.0 < alpha < 1.0):
        raise DataError("alpha must be in (0, 1)")
    evaluator = evaluator or SliceEvaluator(loss, min_size)
    expander = TreeExpander(dataset, evaluator, workers=workers,
                            max_depth=max_depth, min_leaf=min_leaf)
    driver = SearchDriver(expander, alpha=alpha, fdr_mode=fdr, payout=payout)
    return driver.query(k, T)
