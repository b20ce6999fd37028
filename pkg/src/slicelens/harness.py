"""Benchmark harness: synthetic data with injected bad slices, union-based
accuracy, sampling curves, and a false-discovery simulation.

The synthetic generator produces two discretized features whose labels
follow a frozen, perfectly-predictable parity rule; the "model" score is
that rule, so the base loss is ~0. Injection flips labels inside chosen
slices, which is the worst possible perturbation for the frozen model
and gives a known ground truth to score search methods against.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import cluster as cluster_mod
from . import lattice as lattice_mod
from . import tree as tree_mod
from .dataset import (
    CATEGORICAL,
    DataError,
    Dataset,
    FeatureSchema,
    Literal,
    evaluate_predicate,
    sample,
    slice_members,
)
from .fdr import ai_step, benjamini_hochberg, bonferroni
from .stats import LossVector, log_loss_vector

FDR_POLICIES = ("investing", "bonferroni", "bh")


def gen_synthetic(n: int, values_per_feature: int, seed: int) -> Dataset:
    """Two-feature dataset, perfectly classified by the frozen parity rule."""
    if values_per_feature < 2:
        raise DataError("values_per_feature must be >= 2")
    if n < 4:
        raise DataError("n must be >= 4")
    rng = np.random.default_rng(seed)
    v = values_per_feature
    f1 = rng.integers(0, v, size=n).astype(np.int32)
    f2 = rng.integers(0, v, size=n).astype(np.int32)
    labels = ((f1 + f2) % 2).astype(np.int8)
    scores = labels.astype(np.float64)
    schemas = [
        FeatureSchema(name="F1", kind=CATEGORICAL, values=tuple(f"v{i}" for i in range(v))),
        FeatureSchema(name="F2", kind=CATEGORICAL, values=tuple(f"v{i}" for i in range(v))),
    ]
    return Dataset(schemas, [f1, f2], labels, scores)


@dataclass(frozen=True)
class InjectionSpec:
    """Slices whose labels get flipped, each member independently."""

    slices: tuple[tuple[Literal, ...], ...]
    flip_probability: float = 0.5
    seed: int = 0


def random_injection(dataset: Dataset, seed: int, num_slices: int = 3,
                     flip_probability: float = 0.5) -> InjectionSpec:
    """Pick slices cycling the three shapes: F1=A, F2=B, F1=A and F2=B."""
    rng = np.random.default_rng(seed)
    v1 = len(dataset.schema("F1").values)
    v2 = len(dataset.schema("F2").values)
    chosen = []
    seen = set()
    form = 0
    while len(chosen) < num_slices:
        if form % 3 == 0:
            lits = (Literal("F1", "=", int(rng.integers(0, v1))),)
        elif form % 3 == 1:
            lits = (Literal("F2", "=", int(rng.integers(0, v2))),)
        else:
            lits = (Literal("F1", "=", int(rng.integers(0, v1))),
                    Literal("F2", "=", int(rng.integers(0, v2))))
        form += 1
        if lits in seen:
            continue
        seen.add(lits)
        chosen.append(lits)
    return InjectionSpec(slices=tuple(chosen), flip_probability=flip_probability, seed=seed)


def inject(dataset: Dataset, spec: InjectionSpec) -> tuple[Dataset, np.ndarray]:
    """Flip labels inside the spec's slices; returns (dataset', truth union)."""
    rng = np.random.default_rng(spec.seed)
    union_mask = np.zeros(dataset.n, dtype=bool)
    labels = dataset.labels.copy()
    for literals in spec.slices:
        members = slice_members(dataset, literals).members
        union_mask[members] = True
    union = np.flatnonzero(union_mask)
    flips = rng.random(union.size) < spec.flip_probability
    flipped = union[flips]
    labels[flipped] = 1 - labels[flipped]
    perturbed = Dataset(dataset.schemas, dataset.columns, labels, dataset.scores)
    return perturbed, union


def _as_union(slices_or_members) -> np.ndarray:
    arrays = []
    for item in slices_or_members:
        members = getattr(item, "members", None)
        if members is None:
            members = getattr(getattr(item, "slice", None), "members", item)
        arrays.append(np.asarray(members, dtype=np.int64))
    if not arrays:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(arrays))


def union_accuracy(found, truth) -> tuple[float, float, float]:
    """Precision/recall/accuracy of the union of found slices vs the truth union.

    Accuracy is the harmonic mean; an empty union on either side scores 0.
    """
    found_union = _as_union(found) if not isinstance(found, np.ndarray) else np.unique(found)
    truth_union = _as_union(truth) if not isinstance(truth, np.ndarray) else np.unique(truth)
    overlap = np.intersect1d(found_union, truth_union, assume_unique=True).size
    precision = overlap / found_union.size if found_union.size else 0.0
    recall = overlap / truth_union.size if truth_union.size else 0.0
    accuracy = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, accuracy


# -- method comparison ---------------------------------------------------------


def run_method(method: str, dataset: Dataset, loss: LossVector, *, k: int, T: float,
               alpha: float = 0.05, seed: int = 0, workers: int = 1,
               fdr: str = "investing", min_leaf: int = 10) -> list[np.ndarray]:
    """Member arrays of the slices each search method recommends."""
    if method == "lattice":
        records = lattice_mod.search(dataset, loss, k=k, T=T, alpha=alpha,
                                     fdr=fdr, workers=workers)
        return [r.slice.members for r in records]
    if method == "tree":
        records = tree_mod.search(dataset, loss, k=k, T=T, alpha=alpha,
                                  fdr=fdr, workers=workers, min_leaf=min_leaf)
        return [r.slice.members for r in records]
    if method == "cluster":
        clusters = cluster_mod.cluster_slices(dataset, loss, num_clusters=k, T=T, seed=seed)
        return [c.slice.members for c in clusters if c.flagged]
    raise DataError(f"unknown method {method!r}")


def method_comparison(n: int, seeds: Iterable[int], *, values_per_feature: int = 10,
                      num_slices: int = 3, k: int = 10, T: float = 0.4,
                      alpha: float = 0.05, workers: int = 1) -> list[dict]:
    """Accuracy of lattice/tree/cluster search on the injected benchmark."""
    rows = []
    for seed in seeds:
        base = gen_synthetic(n, values_per_feature, seed)
        spec = random_injection(base, seed=seed + 1_000_003, num_slices=num_slices)
        perturbed, truth = inject(base, spec)
        loss = log_loss_vector(perturbed.labels, perturbed.scores)
        for method in ("lattice", "tree", "cluster"):
            found = run_method(method, perturbed, loss, k=k, T=T, alpha=alpha,
                               seed=seed, workers=workers)
            precision, recall, accuracy = union_accuracy(found, truth)
            rows.append({
                "method": method, "seed": seed, "n": n,
                "precision": precision, "recall": recall, "accuracy": accuracy,
                "found": len(found),
            })
    return rows


def mean_accuracy(rows: Sequence[dict]) -> dict[str, float]:
    out: dict[str, list[float]] = {}
    for row in rows:
        out.setdefault(row["method"], []).append(row["accuracy"])
    return {method: float(np.mean(vals)) for method, vals in out.items()}


# -- sampling curve --------------------------------------------------------------


def sampling_curve(dataset: Dataset, loss: LossVector, fractions: Sequence[float],
                   seed: int, *, k: int = 10, T: float = 0.4, alpha: float = 0.05,
                   algorithms: Sequence[str] = ("lattice", "tree"),
                   timing_reps: int = 3, timing_inner: int = 1) -> list[dict]:
    """Relative accuracy and runtime of each algorithm per sample fraction.

    A sampled run's slices are materialized back on the full dataset and
    compared, union to union, against the full run's slices. The runtime
    is the best of timing_reps measurements, each averaging timing_inner
    back-to-back searches, which keeps the numbers stable at
    millisecond scales.
    """
    rows = []
    for algorithm in algorithms:
        full_records = _search_records(algorithm, dataset, loss, k, T, alpha)
        full_union = _as_union([r.slice for r in full_records])
        for fraction in fractions:
            sampled = sample(dataset, fraction, seed)
            sampled_loss = log_loss_vector(sampled.labels, sampled.scores)
            times = []
            records = []
            for _ in range(timing_reps):
                start = time.perf_counter()
                for _ in range(timing_inner):
                    records = _search_records(algorithm, sampled, sampled_loss, k, T, alpha)
                times.append((time.perf_counter() - start) / timing_inner)
            materialized = [evaluate_predicate(dataset, r.slice.literals) for r in records]
            _, _, rel = union_accuracy(materialized, full_union)
            rows.append({
                "algorithm": algorithm,
                "fraction": fraction,
                "relative_accuracy": rel,
                "seconds": float(min(times)),
                "found": len(records),
            })
    return rows


def _search_records(algorithm, dataset, loss, k, T, alpha):
    if algorithm == "lattice":
        return lattice_mod.search(dataset, loss, k=k, T=T, alpha=alpha)
    if algorithm == "tree":
        return tree_mod.search(dataset, loss, k=k, T=T, alpha=alpha)
    raise DataError(f"unknown algorithm {algorithm!r}")


def linear_fit_r2(x: Sequence[float], y: Sequence[float]) -> float:
    """R-squared of an ordinary least squares line through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


# -- false discovery simulation ---------------------------------------------------


@dataclass
class PolicyOutcome:
    policy: str
    alpha: float
    runs: int
    mfdr: float
    mfdr_se: float
    power: float


def fdr_power_sim(policies: Sequence[str], alpha_grid: Sequence[float], runs: int,
                  seed: int, *, stream_len: int = 100,
                  alt_fraction: float = 0.2, alt_beta: float = 0.1) -> list[PolicyOutcome]:
    """Monte-Carlo FDR/power comparison on a null/alternative p-value mixture.

    Each run draws a stream of stream_len hypotheses: the first
    alt_fraction are true effects with p ~ Beta(alt_beta, 1) (skewed
    small), the rest are true nulls with uniform p. Alternatives lead
    the stream, mirroring an exploration order that fronts the most
    promising hypotheses. mFDR is estimated as sum(V)/sum(R) with a
    delta-method standard error.
    """
    for policy in policies:
        if policy not in FDR_POLICIES:
            raise DataError(f"unknown policy {policy!r}")
    n_alt = int(round(stream_len * alt_fraction))
    out = []
    for alpha in alpha_grid:
        rng = np.random.default_rng(seed)
        stats = {p: {"v": [], "r": [], "power": []} for p in policies}
        for _ in range(runs):
            p_alt = rng.random(n_alt) ** (1.0 / alt_beta)
            p_null = rng.random(stream_len - n_alt)
            stream = np.concatenate([p_alt, p_null])
            is_null = np.concatenate([np.zeros(n_alt, bool), np.ones(stream_len - n_alt, bool)])
            for policy in policies:
                rejected = _apply_policy(policy, stream, alpha)
                v = int((rejected & is_null).sum())
                r = int(rejected.sum())
                stats[policy]["v"].append(v)
                stats[policy]["r"].append(r)
                stats[policy]["power"].append(
                    float(rejected[:n_alt].sum()) / n_alt if n_alt else 0.0)
        for policy in policies:
            v = np.asarray(stats[policy]["v"], dtype=np.float64)
            r = np.asarray(stats[policy]["r"], dtype=np.float64)
            mfdr_hat, se = _ratio_estimate(v, r)
            out.append(PolicyOutcome(policy=policy, alpha=alpha, runs=runs,
                                     mfdr=mfdr_hat, mfdr_se=se,
                                     power=float(np.mean(stats[policy]["power"]))))
    return out


def _apply_policy(policy: str, stream: np.ndarray, alpha: float) -> np.ndarray:
    if policy == "investing":
        rejected = np.zeros(stream.size, dtype=bool)
        wealth = alpha
        for i, p in enumerate(stream):
            hit, _, wealth = ai_step(wealth, alpha, float(p))
            rejected[i] = hit
            if wealth <= 0.0:
                break
        return rejected
    if policy == "bonferroni":
        return np.asarray(bonferroni(stream.tolist(), alpha, m=stream.size), dtype=bool)
    if policy == "bh":
        return np.asarray(benjamini_hochberg(stream.tolist(), alpha), dtype=bool)
    raise DataError(f"unknown policy {policy!r}")


def _ratio_estimate(v: np.ndarray, r: np.ndarray) -> tuple[float, float]:
    """sum(v)/sum(r) with a delta-method standard error (0/0 -> 0)."""
    n = v.size
    r_bar = float(r.mean())
    if r_bar == 0.0:
        return 0.0, 0.0
    v_bar = float(v.mean())
    theta = v_bar / r_bar
    var_v = float(v.var(ddof=1)) if n > 1 else 0.0
    var_r = float(r.var(ddof=1)) if n > 1 else 0.0
    cov = float(np.cov(v, r, ddof=1)[0, 1]) if n > 1 else 0.0
    var_theta = (var_v - 2 * theta * cov + theta * theta * var_r) / (r_bar * r_bar * n)
    return theta, math.sqrt(max(var_theta, 0.0))
