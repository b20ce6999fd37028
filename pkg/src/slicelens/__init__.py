"""slicelens: find large, interpretable, statistically significant data slices
where a model underperforms.

The library consumes a validation table with a binary label column and a
model score column, discretizes features, and searches the lattice of
feature-value conjunctions (or a decision tree, or a clustering
baseline) for slices whose loss is significantly higher than the rest
of the data, under sequential false-discovery control.
"""

from .dataset import (
    DataError,
    Dataset,
    FeatureSchema,
    IngestionReport,
    Literal,
    Slice,
    bucket_rare_values,
    discretize,
    load,
    sample,
    slice_members,
)
from .driver import SearchDriver, SliceRecord, ordering_key
from .engine import SearchSession, SessionError
from .fdr import (
    AlphaInvestingState,
    ai_test,
    benjamini_hochberg,
    bonferroni,
    mfdr,
)
from .stats import (
    LossVector,
    SliceEvaluator,
    SliceStats,
    StatsError,
    effect_size,
    log_loss_vector,
    per_example_log_loss,
    slice_loss,
    welch_t,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaInvestingState",
    "DataError",
    "Dataset",
    "FeatureSchema",
    "IngestionReport",
    "Literal",
    "LossVector",
    "SearchDriver",
    "SearchSession",
    "SessionError",
    "Slice",
    "SliceEvaluator",
    "SliceRecord",
    "SliceStats",
    "StatsError",
    "ai_test",
    "benjamini_hochberg",
    "bonferroni",
    "bucket_rare_values",
    "discretize",
    "effect_size",
    "load",
    "log_loss_vector",
    "mfdr",
    "ordering_key",
    "per_example_log_loss",
    "sample",
    "slice_loss",
    "slice_members",
    "welch_t",
    "__version__",
]
