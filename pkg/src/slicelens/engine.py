"""Interactive search sessions: algorithm selection, caching, re-query semantics.

A session materializes every slice its searcher has explored. Lowering
the effect-size threshold re-ranks from that cache alone (zero new
statistic evaluations); raising it, or asking for more results than the
cache can supply, resumes the underlying search from its frontier.
Wealth never resets within a session and a slice is significance-tested
at most once.
"""

from __future__ import annotations

import pickle
from typing import Optional

import numpy as np

from .cluster import ClusterExpander
from .dataset import DataError, Dataset
from .driver import SearchDriver, SliceRecord
from .fdr import AlphaInvestingState
from .lattice import LatticeExpander
from .stats import LossVector, SliceEvaluator, loss_vector_for
from .tree import DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF, TreeExpander

ALGORITHMS = ("lattice", "tree", "cluster")


class SessionError(ValueError):
    """Raised for invalid session operations (unknown slice, bad algorithm)."""


class SearchSession:
    """One dataset + one search algorithm + cached exploration state."""

    def __init__(self, dataset: Dataset, loss: Optional[LossVector] = None, *,
                 algorithm: str = "lattice", alpha: float = 0.05,
                 payout: Optional[float] = None, fdr: str = "investing",
                 workers: int = 1, min_size: int = 2,
                 max_depth: Optional[int] = None, min_leaf: int = DEFAULT_MIN_LEAF,
                 num_clusters: int = 10, seed: int = 0, loss_kind: str = "log_loss"):
        if algorithm not in ALGORITHMS:
            raise SessionError(f"unknown algorithm {algorithm!r}")
        if not (0.0 < alpha < 1.0):
            raise SessionError("alpha must be in (0, 1)")
        self.dataset = dataset
        self.loss = loss if loss is not None else loss_vector_for(dataset, loss_kind)
        if self.loss.n != dataset.n:
            raise SessionError("loss vector length must match the dataset")
        self.algorithm = algorithm
        evaluator = SliceEvaluator(self.loss, min_size)
        if algorithm == "lattice":
            expander = LatticeExpander(dataset, evaluator, workers=workers,
                                       max_depth=max_depth)
        elif algorithm == "tree":
            expander = TreeExpander(dataset, evaluator, workers=workers,
                                    max_depth=DEFAULT_MAX_DEPTH if max_depth is None else max_depth,
                                    min_leaf=min_leaf)
        else:
            expander = ClusterExpander(dataset, evaluator, num_clusters=num_clusters,
                                       seed=seed, workers=workers)
        self.driver = SearchDriver(expander, alpha=alpha, fdr_mode=fdr, payout=payout)
        self.params = {
            "algorithm": algorithm, "alpha": alpha, "fdr": fdr, "workers": workers,
            "min_size": min_size, "seed": seed, "loss_kind": self.loss.kind,
        }
        self.last_query: Optional[tuple[int, float]] = None

    # -- state ----------------------------------------------------------------

    @property
    def eval_count(self) -> int:
        return self.driver.eval_count

    @property
    def wealth_state(self) -> Optional[AlphaInvestingState]:
        return self.driver.ai_state

    @property
    def exhausted(self) -> bool:
        return self.driver.exhausted

    @property
    def explored_count(self) -> int:
        return len(self.driver.records)

    def prime(self) -> None:
        """Evaluate the first level so early queries answer from cache."""
        self.driver.step()

    # -- queries ----------------------------------------------------------------

    def query(self, k: int, min_effect_size: float) -> list[dict]:
        """Blocking top-k query; resumes the search when the cache is short."""
        records = self.driver.query(k, min_effect_size)
        self.last_query = (k, min_effect_size)
        return [self.describe(rec, rank) for rank, rec in enumerate(records, start=1)]

    def query_records(self, k: int, min_effect_size: float) -> list[SliceRecord]:
        records = self.driver.query(k, min_effect_size)
        self.last_query = (k, min_effect_size)
        return records

    def cached_query(self, k: int, min_effect_size: float) -> tuple[list[dict], bool]:
        """Cache-only view; the flag reports whether the answer is complete."""
        records, complete = self.driver.view(k, min_effect_size)
        self.last_query = (k, min_effect_size)
        views = [self.describe(rec, rank) for rank, rec in enumerate(records, start=1)]
        return views, complete

    def continue_step(self) -> bool:
        return self.driver.step()

    # -- description ----------------------------------------------------------

    @staticmethod
    def slice_id(record: SliceRecord) -> str:
        return f"s{record.index:06d}"

    def record_by_id(self, slice_id: str) -> SliceRecord:
        if slice_id.startswith("s"):
            try:
                index = int(slice_id[1:])
            except ValueError:
                raise SessionError(f"unknown slice id {slice_id!r}") from None
            if 0 <= index < len(self.driver.records):
                return self.driver.records[index]
        raise SessionError(f"unknown slice id {slice_id!r}")

    def describe(self, record: SliceRecord, rank: Optional[int] = None) -> dict:
        st = record.stats
        dec = record.decision
        out = {
            "id": self.slice_id(record),
            "predicate": record.slice.predicate(self.dataset),
            "interpretable": not record.slice.tag,
            "literals": [
                {
                    "feature": l.feature,
                    "op": l.op,
                    "value": l.value,
                    "display": l.display(self.dataset.schema(l.feature)),
                }
                for l in record.slice.literals
            ],
            "num_literals": record.slice.num_literals,
            "size": st.size,
            "effect_size": st.effect_size,
            "metric": st.mean_loss,
            "counterpart_metric": st.counterpart_mean,
            "t_stat": st.t_stat,
            "df": st.df,
            "p_value": st.p_value,
            "alpha_spent": dec.alpha_spent if dec else None,
            "rejected": dec.rejected if dec else None,
            "depth": record.depth,
        }
        if rank is not None:
            out["rank"] = rank
        return out

    def drill_down(self, slice_id: str, limit: int) -> list[dict]:
        """Up to ``limit`` member rows with label, score and per-example loss."""
        if limit < 0:
            raise SessionError("limit must be >= 0")
        record = self.record_by_id(slice_id)
        rows = []
        for idx in record.slice.members[:limit]:
            i = int(idx)
            rows.append({
                "index": i,
                "label": int(self.dataset.labels[i]),
                "score": float(self.dataset.scores[i]),
                "loss": float(self.loss.values[i]),
                "features": self.dataset.row_display(i),
            })
        return rows

    # -- persistence ------------------------------------------------------------

    def save(self, path) -> None:
        """Snapshot the whole session (dataset, cache, wealth) to one file."""
        with open(path, "wb") as fh:
            pickle.dump(self, fh)

    @staticmethod
    def load(path) -> "SearchSession":
        with open(path, "rb") as fh:
            session = pickle.load(fh)
        if not isinstance(session, SearchSession):
            raise SessionError("snapshot does not contain a search session")
        return session
