"""Breadth-first top-k search over the lattice of equality-literal slices.

Candidates grow one literal per level. A level's candidates are
effect-size evaluated (in parallel when workers > 1), then significance
tested in canonical order by the shared driver; slices subsumed by an
already-problematic slice are pruned at expansion, which is what makes
returned slices minimal. Expansion continues from the non-problematic
slices of the previous level and stops when k results are found or no
candidate remains.
"""

from __future__ import annotations

from typing import Iterable, Optional, Union

from .dataset import DataError, Dataset, Literal, Slice, canonical_literals, root_slice
from .driver import (
    ProblematicIndex,
    SearchDriver,
    SliceRecord,
    ordering_key,
    run_ordered,
    slice_token,
)
from .stats import LossVector, SliceEvaluator, SliceStats

__all__ = ["LatticeExpander", "expand_slices", "search", "ordering_key", "slice_token"]


def _as_index(problematic: Union[ProblematicIndex, Iterable[frozenset], None]) -> ProblematicIndex:
    if problematic is None:
        return ProblematicIndex()
    if isinstance(problematic, ProblematicIndex):
        return problematic
    return ProblematicIndex(problematic)


def _candidate_descriptors(base_slices, level, problematic, dataset):
    """Deduplicated (literals, base_members, feature, value) tuples for one level."""
    seen: set = set()
    out = []
    for base in base_slices:
        if base.num_literals != level - 1:
            raise DataError("base slices must have exactly level-1 literals")
        used = {l.feature for l in base.literals}
        for schema in dataset.schemas:
            if schema.name in used:
                continue
            for value in schema.literal_value_indices():
                lits = canonical_literals((*base.literals, Literal(schema.name, "=", value)))
                if lits in seen:
                    continue
                seen.add(lits)
                if problematic.subsumes(frozenset(lits)):
                    continue
                out.append((lits, base.members, schema.name, value))
    return out


def expand_slices(base_slices: Iterable[Slice], level: int,
                  problematic: Union[ProblematicIndex, Iterable[frozenset], None],
                  dataset: Dataset) -> list[Slice]:
    """All level-literal children of the base slices.

    Children add one equality literal over an unused feature, are
    deduplicated by canonical literal set, pruned when subsumed by a
    problematic slice, and dropped when empty.
    """
    index = _as_index(problematic)
    out = []
    for lits, base_members, feature, value in _candidate_descriptors(
            list(base_slices), level, index, dataset):
        members = base_members[dataset.column(feature)[base_members] == value]
        if members.size:
            out.append(Slice(lits, members))
    return out


class LatticeExpander:
    """Produces one lattice level per batch; holds the expandable frontier."""

    def __init__(self, dataset: Dataset, evaluator: SliceEvaluator, *,
                 workers: int = 1, max_depth: Optional[int] = None):
        self.dataset = dataset
        self.evaluator = evaluator
        self.workers = max(int(workers), 1)
        self.max_depth = len(dataset.schemas) if max_depth is None else max_depth
        self.depth = 0
        self._prev: list[Slice] = [root_slice(dataset)]

    def hypothesis_count(self) -> int:
        total = 1
        for schema in self.dataset.schemas:
            total *= 1 + len(schema.literal_value_indices())
        return total - 1

    def next_batch(self, problematic: ProblematicIndex) -> list[tuple[Slice, SliceStats]]:
        if self.depth >= self.max_depth or not self._prev:
            return []
        self.depth += 1
        if self.depth == 1:
            base = self._prev
        else:
            base = [s for s in self._prev if not problematic.contains(s.literal_set)]
        descriptors = _candidate_descriptors(base, self.depth, problematic, self.dataset)
        dataset = self.dataset
        evaluator = self.evaluator

        def job(desc):
            lits, base_members, feature, value = desc
            members = base_members[dataset.column(feature)[base_members] == value]
            if members.size == 0:
                return None
            return Slice(lits, members), evaluator.evaluate(members)

        results = run_ordered([lambda d=d: job(d) for d in descriptors], self.workers)
        batch = [r for r in results if r is not None]
        self._prev = [slc for slc, _ in batch]
        return batch


def search(dataset: Dataset, loss: LossVector, k: int = 10, T: float = 0.4,
           alpha: float = 0.05, *, fdr: str = "investing", workers: int = 1,
           min_size: int = 2, max_depth: Optional[int] = None,
           payout: Optional[float] = None,
           evaluator: Optional[SliceEvaluator] = None) -> list[SliceRecord]:
    """One-shot lattice search returning up to k ranked slice records."""
    if k < 1:
        raise DataError("k must be >= 1")
    if not (T > 0):
        raise DataError("effect size threshold must be positive")
    if not (0.0 < alpha < 1.0):
        raise DataError("alpha must be in (0, 1)")
    evaluator = evaluator or SliceEvaluator(loss, min_size)
    expander = LatticeExpander(dataset, evaluator, workers=workers, max_depth=max_depth)
    driver = SearchDriver(expander, alpha=alpha, fdr_mode=fdr, payout=payout)
    return driver.query(k, T)
