"""Shared top-k search core: candidate ordering, significance flow, caching.

All search strategies feed evaluated candidate slices into one driver,
which owns the explored cache, the sequential significance state, and
the result view. A result view walks the explored slices in canonical
order, tests untested qualifying slices exactly once, and enforces
minimality: a slice is skipped when a strict subset of its literals
already qualifies. Because every statistic is cached at evaluation
time, re-querying with a lower effect-size threshold never recomputes
statistics; raising the threshold resumes expansion from the stored
frontier.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Protocol

from .dataset import Slice
from .fdr import AlphaInvestingState, Decision, FdrError, ai_test, benjamini_hochberg
from .stats import SliceEvaluator, SliceStats

FDR_MODES = ("investing", "fixed", "bonferroni", "bh")


def ordering_key(num_literals: int, size: int, effect: float, token, degenerate: bool = False):
    """Sort key for the canonical slice order.

    Fewer literals first, then larger slices, then larger effect sizes,
    then a deterministic predicate token. Degenerate/non-finite effect
    sizes order last among slices of equal literal count and size.
    """
    phi = effect if (not degenerate and math.isfinite(effect)) else -math.inf
    return (num_literals, -size, -phi, token)


def slice_token(s: Slice) -> tuple:
    return (tuple((l.feature, l.op, l.value) for l in s.literals), s.tag)


@dataclass
class SliceRecord:
    """One explored slice: statistics cached forever, decision set at most once."""

    index: int
    slice: Slice
    stats: SliceStats
    depth: int
    decision: Optional[Decision] = None

    @property
    def problematic(self) -> bool:
        return self.decision is not None and self.decision.rejected

    def order_key(self):
        return ordering_key(
            self.slice.num_literals,
            self.stats.size,
            self.stats.effect_size,
            slice_token(self.slice),
            self.stats.degenerate,
        )


class ProblematicIndex:
    """Literal sets of slices already found problematic, for subsumption pruning."""

    def __init__(self, sets: Iterable[frozenset] = ()):
        self.sets: list[frozenset] = []
        self._keys: set[frozenset] = set()
        for s in sets:
            self.add(s)

    def add(self, literal_set: frozenset) -> None:
        if literal_set not in self._keys:
            self._keys.add(literal_set)
            self.sets.append(literal_set)

    def contains(self, literal_set: frozenset) -> bool:
        return literal_set in self._keys

    def subsumes(self, literal_set: frozenset) -> bool:
        """True when some problematic literal set is a subset of the given one."""
        return any(s <= literal_set and s != literal_set for s in self.sets)


def run_ordered(tasks: list[Callable], workers: int) -> list:
    """Run thunks, preserving input order; workers > 1 uses a thread pool.

    Tasks are dealt round-robin into one stripe per worker so each
    thread gets a balanced share with minimal submission overhead.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    workers = min(workers, len(tasks))

    def stripe(offset: int) -> list:
        return [fn() for fn in tasks[offset::workers]]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        stripes = list(pool.map(stripe, range(workers)))
    out = [None] * len(tasks)
    for offset, results in enumerate(stripes):
        out[offset::workers] = results
    return out


class Expander(Protocol):
    depth: int

    def next_batch(self, problematic: ProblematicIndex) -> list[tuple[Slice, SliceStats]]:
        """Evaluate and return the next level of candidates; [] when exhausted."""

    def hypothesis_count(self) -> int:
        """Size of the hypothesis universe (for Bonferroni)."""


class SearchDriver:
    """Owns explored slices, decisions and wealth for one search session."""

    def __init__(self, expander: Expander, *, alpha: float = 0.05,
                 fdr_mode: str = "investing", payout: Optional[float] = None):
        if fdr_mode not in FDR_MODES:
            raise FdrError(f"unknown fdr mode {fdr_mode!r}")
        self.expander = expander
        self.alpha = alpha
        self.fdr_mode = fdr_mode
        self.records: list[SliceRecord] = []
        self.by_key: dict = {}
        self.exhausted = False
        self.ai_state = AlphaInvestingState.start(alpha, payout) if fdr_mode == "investing" else None
        self._problematic = ProblematicIndex()

    # -- state ---------------------------------------------------------------

    @property
    def evaluator(self) -> SliceEvaluator:
        return self.expander.evaluator

    @property
    def eval_count(self) -> int:
        return self.evaluator.eval_count

    @property
    def wealth(self) -> float:
        return self.ai_state.wealth if self.ai_state is not None else math.inf

    @property
    def problematic_index(self) -> ProblematicIndex:
        return self._problematic

    def _wealth_dead(self) -> bool:
        return self.fdr_mode == "investing" and self.ai_state.wealth <= 0.0

    # -- expansion -----------------------------------------------------------

    def step(self) -> bool:
        """Expand and evaluate one more level; False once exhausted."""
        if self.exhausted:
            return False
        batch = self.expander.next_batch(self._problematic)
        if not batch:
            self.exhausted = True
            return False
        for slc, stats in batch:
            key = slc.key
            if key in self.by_key:
                raise RuntimeError(f"duplicate slice emitted by expander: {key}")
            rec = SliceRecord(index=len(self.records), slice=slc, stats=stats,
                              depth=self.expander.depth)
            self.records.append(rec)
            self.by_key[key] = rec
        return True

    # -- significance --------------------------------------------------------

    def _test(self, rec: SliceRecord) -> None:
        p = rec.stats.p_value
        if self.fdr_mode == "investing":
            rejected, self.ai_state = ai_test(self.ai_state, p)
            rec.decision = self.ai_state.decisions[-1]
        elif self.fdr_mode == "fixed":
            rec.decision = Decision(p_value=p, alpha_spent=self.alpha, rejected=p <= self.alpha)
        elif self.fdr_mode == "bonferroni":
            m = max(self.expander.hypothesis_count(), 1)
            thr = self.alpha / m
            rec.decision = Decision(p_value=p, alpha_spent=thr, rejected=p <= thr)
        else:
            raise RuntimeError("bh decisions are made in batches")
        if rec.decision.rejected:
            self._problematic.add(rec.slice.literal_set)

    def _test_batch_bh(self, recs: list[SliceRecord]) -> None:
        ps = [r.stats.p_value for r in recs]
        for rec, rejected in zip(recs, benjamini_hochberg(ps, self.alpha)):
            rec.decision = Decision(p_value=rec.stats.p_value, alpha_spent=self.alpha,
                                    rejected=rejected)
            if rejected:
                self._problematic.add(rec.slice.literal_set)

    # -- views ---------------------------------------------------------------

    def _qualifies(self, rec: SliceRecord, threshold: float) -> bool:
        st = rec.stats
        return (
            st.testable
            and not st.degenerate
            and math.isfinite(st.effect_size)
            and st.effect_size >= threshold
        )

    def walk(self, k: int, threshold: float) -> list[SliceRecord]:
        """Top-k qualifying rejected slices from the cache, testing on demand."""
        qualifying = sorted(
            (r for r in self.records if self._qualifies(r, threshold)),
            key=SliceRecord.order_key,
        )
        if self.fdr_mode == "bh":
            untested = [r for r in qualifying if r.decision is None]
            if untested:
                self._test_batch_bh(untested)
        results: list[SliceRecord] = []
        minimal: list[frozenset] = []
        for rec in qualifying:
            lits = rec.slice.literal_set
            if any(s < lits for s in minimal):
                continue
            if rec.decision is None:
                self._test(rec)
            if rec.decision.rejected:
                results.append(rec)
                minimal.append(lits)
                if len(results) >= k:
                    break
        return results

    def view(self, k: int, threshold: float) -> tuple[list[SliceRecord], bool]:
        """Cache-only view plus a flag saying whether more search could help."""
        if k <= 0:
            return [], True
        results = self.walk(k, threshold)
        complete = len(results) >= k or self.exhausted or self._wealth_dead()
        return results, complete

    def query(self, k: int, threshold: float) -> list[SliceRecord]:
        """Drive the search until k results, exhaustion, or spent wealth."""
        if k <= 0:
            return []
        while True:
            results, complete = self.view(k, threshold)
            if complete:
                return results
            self.step()
