"""Per-example losses, slice aggregates, Welch's t-test, and effect size.

A slice is always compared against its counterpart (the rest of the
dataset). The effect size is the sqrt(2)-scaled standardized
mean-loss difference; the one-sided Welch test asks whether the slice's
mean loss exceeds the counterpart's.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

LOG_EPS = 1e-15

DEFAULT_MIN_SIZE = 2


class StatsError(ValueError):
    """Raised when a statistic's preconditions are violated."""


@dataclass(frozen=True)
class LossVector:
    """Per-example non-negative losses; one value per dataset row."""

    values: np.ndarray
    kind: str  # "log_loss" or "generic_score"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not np.isfinite(vals).all():
            raise StatsError("losses must be finite")
        if vals.size and vals.min() < 0:
            raise StatsError("losses must be non-negative")

    @property
    def n(self) -> int:
        return int(self.values.size)


def per_example_log_loss(label: int, score: float) -> float:
    """Binary log loss of one prediction, with probabilities clamped away from 0/1."""
    if label not in (0, 1):
        raise StatsError("label must be 0 or 1")
    if not (0.0 <= score <= 1.0):
        raise StatsError("score must be in [0, 1]")
    p = min(max(score, LOG_EPS), 1.0 - LOG_EPS)
    return -(label * math.log(p) + (1 - label) * math.log(1.0 - p))


def log_loss_vector(labels: np.ndarray, scores: np.ndarray) -> LossVector:
    labels = np.asarray(labels, dtype=np.float64)
    p = np.clip(np.asarray(scores, dtype=np.float64), LOG_EPS, 1.0 - LOG_EPS)
    vals = -(labels * np.log(p) + (1.0 - labels) * np.log1p(-p))
    return LossVector(vals, "log_loss")


def generic_loss_vector(scores: np.ndarray) -> LossVector:
    return LossVector(np.asarray(scores, dtype=np.float64), "generic_score")


def loss_vector_for(dataset, kind: str = "log_loss") -> LossVector:
    if kind == "log_loss":
        return log_loss_vector(dataset.labels, dataset.scores)
    if kind == "generic_score":
        return generic_loss_vector(dataset.scores)
    raise StatsError(f"unknown loss kind {kind!r}")


def slice_loss(loss: Union[LossVector, np.ndarray], members: np.ndarray) -> tuple[float, float]:
    """Mean and sample variance (n-1 denominator) of the member losses."""
    values = loss.values if isinstance(loss, LossVector) else np.asarray(loss, dtype=np.float64)
    members = np.asarray(members)
    m = members.size
    if m == 0:
        raise StatsError("empty slice")
    x = values[members]
    mean = float(x.mean())
    var = float(x.var(ddof=1)) if m > 1 else 0.0
    return mean, var


def effect_size(mean_s: float, var_s: float, mean_c: float, var_c: float) -> float:
    """sqrt(2)-scaled standardized mean difference of slice vs counterpart.

    With zero pooled variance the result is a signed infinity sentinel
    (0.0 for equal means): the slice is perfectly separated and cannot
    be tested, but is still worth surfacing.
    """
    pooled = var_s + var_c
    diff = mean_s - mean_c
    if pooled <= 0.0:
        if diff == 0.0:
            return 0.0
        return math.inf if diff > 0 else -math.inf
    return math.sqrt(2.0) * diff / math.sqrt(pooled)


def student_t_sf(t: float, df: float) -> float:
    """Upper-tail probability of Student's t via the regularized incomplete beta."""
    if df <= 0 or math.isnan(t) or math.isnan(df):
        return math.nan
    x = df / (df + t * t)
    half = 0.5 * float(special.betainc(df / 2.0, 0.5, x))
    return half if t >= 0 else 1.0 - half


def welch_t(mean_s: float, var_s: float, n_s: int, mean_c: float, var_c: float, n_c: int,
            *, min_size: int = DEFAULT_MIN_SIZE) -> tuple[float, float, float]:
    """Welch's t statistic, Welch-Satterthwaite df, and one-sided p-value.

    Tests the alternative that the slice's mean loss exceeds the
    counterpart's, so p is the upper-tail probability at t.
    """
    if n_s < min_size or n_c < min_size:
        raise StatsError(f"both sides need at least {min_size} examples")
    if var_s <= 0.0 and var_c <= 0.0:
        raise StatsError("degenerate: both variances are zero")
    a = var_s / n_s
    b = var_c / n_c
    se = math.sqrt(a + b)
    t = (mean_s - mean_c) / se
    df = (a + b) ** 2 / (
        (a * a / (n_s - 1) if n_s > 1 else 0.0) + (b * b / (n_c - 1) if n_c > 1 else 0.0)
    )
    return t, df, student_t_sf(t, df)


@dataclass(frozen=True)
class SliceStats:
    """Aggregates of one slice against its counterpart."""

    size: int
    mean_loss: float
    var_loss: float
    counterpart_size: int
    counterpart_mean: float
    counterpart_var: float
    effect_size: float
    t_stat: float
    df: float
    p_value: float
    degenerate: bool
    testable: bool

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "mean_loss": self.mean_loss,
            "var_loss": self.var_loss,
            "counterpart_size": self.counterpart_size,
            "counterpart_mean": self.counterpart_mean,
            "counterpart_var": self.counterpart_var,
            "effect_size": self.effect_size,
            "t_stat": self.t_stat,
            "df": self.df,
            "p_value": self.p_value,
            "degenerate": self.degenerate,
            "testable": self.testable,
        }


class SliceEvaluator:
    """Computes SliceStats from cached totals; counts every evaluation.

    Counterpart aggregates come from (total - slice) sums, so one
    evaluation costs O(|slice|) regardless of dataset size. The
    evaluation counter backs the interactive cache guarantees: serving
    a query purely from cached statistics must not move it.
    """

    def __init__(self, loss: LossVector, min_size: int = DEFAULT_MIN_SIZE):
        self.loss = loss
        self.min_size = min_size
        values = loss.values
        self._n = values.size
        self._total_sum = float(values.sum())
        self._total_sumsq = float(np.dot(values, values))
        self.eval_count = 0
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self._n

    def evaluate(self, members: np.ndarray) -> SliceStats:
        members = np.asarray(members)
        m = int(members.size)
        if m == 0:
            raise StatsError("empty slice")
        nc = self._n - m
        x = self.loss.values[members]
        s = float(x.sum())
        ss = float(np.dot(x, x))
        mean_s = s / m
        var_s = max((ss - s * s / m) / (m - 1), 0.0) if m > 1 else 0.0
        if nc > 0:
            cs = self._total_sum - s
            css = self._total_sumsq - ss
            mean_c = cs / nc
            var_c = max((css - cs * cs / nc) / (nc - 1), 0.0) if nc > 1 else 0.0
            phi = effect_size(mean_s, var_s, mean_c, var_c)
            degenerate = (var_s + var_c) <= 0.0
        else:
            mean_c = math.nan
            var_c = math.nan
            phi = math.nan
            degenerate = True
        testable = (
            nc > 0
            and m >= self.min_size
            and nc >= self.min_size
            and (var_s > 0.0 or var_c > 0.0)
        )
        if testable:
            t, df, p = welch_t(mean_s, var_s, m, mean_c, var_c, nc, min_size=self.min_size)
        else:
            t = df = p = math.nan
        with self._lock:
            self.eval_count += 1
        return SliceStats(
            size=m,
            mean_loss=mean_s,
            var_loss=var_s,
            counterpart_size=nc,
            counterpart_mean=mean_c,
            counterpart_var=var_c,
            effect_size=phi,
            t_stat=t,
            df=df,
            p_value=p,
            degenerate=degenerate,
            testable=testable,
        )
