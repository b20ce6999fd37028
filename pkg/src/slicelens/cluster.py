"""Clustering baseline: treat k-means clusters as arbitrary, non-interpretable slices.

Exists for comparison only. Clusters carry no predicate, so they cannot
be described to a user the way literal slices can; reports mark them
accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import CATEGORICAL, DataError, Dataset, Slice
from .driver import ProblematicIndex
from .stats import LossVector, SliceEvaluator, SliceStats


def encode(dataset: Dataset, use_pca: bool = False, dims: Optional[int] = None) -> np.ndarray:
    """One-hot categorical + min-max scaled numeric (bin ordinal) encoding."""
    blocks = []
    for schema in dataset.schemas:
        col = dataset.column(schema.name)
        if schema.kind == CATEGORICAL:
            width = schema.domain_size
            block = np.zeros((dataset.n, width))
            block[np.arange(dataset.n), col] = 1.0
        else:
            hi = max(schema.domain_size - 1, 1)
            block = (col / hi).reshape(-1, 1)
        blocks.append(block)
    X = np.hstack(blocks) if blocks else np.zeros((dataset.n, 0))
    if use_pca:
        X = pca_project(X, X.shape[1] if dims is None else dims)
    return X


def pca_project(X: np.ndarray, dims: int) -> np.ndarray:
    """Project onto the top principal components; zero-variance directions drop out."""
    if dims > X.shape[1]:
        raise DataError("dims must not exceed the encoded width")
    centered = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    keep = s > max(s[0] if s.size else 0.0, 1.0) * 1e-12
    components = vt[keep][:dims]
    return centered @ components.T


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_path: list[float]
    dropped: int = 0


def kmeans(X: np.ndarray, num_clusters: int, seed: int, max_iter: int = 100) -> KMeansResult:
    """Seeded k-means++ initialization and Lloyd iteration.

    An empty cluster is re-seeded to the farthest point once; if it
    empties again it is dropped.
    """
    n = X.shape[0]
    if num_clusters < 1:
        raise DataError("num_clusters must be >= 1")
    num_clusters = min(num_clusters, n)
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, num_clusters, rng)
    reseeded = np.zeros(len(centroids), dtype=bool)
    labels = np.zeros(n, dtype=np.int64)
    inertia_path: list[float] = []
    dropped = 0
    for _ in range(max_iter):
        d2 = _sq_dists(X, centroids)
        new_labels = np.argmin(d2, axis=1)
        inertia_path.append(float(d2[np.arange(n), new_labels].sum()))
        sizes = np.bincount(new_labels, minlength=len(centroids))
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            # Re-seeding is not a Lloyd step; keep the inertia path clean.
            inertia_path.pop()
            fixable = [c for c in empty if not reseeded[c]]
            if fixable:
                far = np.argmax(d2[np.arange(n), new_labels])
                centroids = centroids.copy()
                centroids[fixable[0]] = X[far]
                reseeded[fixable[0]] = True
                continue
            keep = sizes > 0
            dropped += int((~keep).sum())
            centroids = centroids[keep]
            reseeded = reseeded[keep]
            continue
        if np.array_equal(new_labels, labels) and len(inertia_path) > 1:
            labels = new_labels
            break
        labels = new_labels
        for c in range(len(centroids)):
            centroids[c] = X[labels == c].mean(axis=0)
    return KMeansResult(labels=labels, centroids=centroids,
                        inertia_path=inertia_path, dropped=dropped)


def _plus_plus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = _sq_dists(X, centroids[:1]).ravel()
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i] = X[rng.integers(n)]
        else:
            centroids[i] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, _sq_dists(X, centroids[i:i + 1]).ravel())
    return centroids


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (
        (X * X).sum(axis=1)[:, None]
        + (C * C).sum(axis=1)[None, :]
        - 2.0 * (X @ C.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


@dataclass
class ClusterSlice:
    """One evaluated cluster; flagged when its effect size reaches the threshold."""

    index: int
    centroid: np.ndarray
    slice: Slice
    stats: SliceStats
    flagged: bool


def cluster_slices(dataset: Dataset, loss: LossVector, num_clusters: int, T: float,
                   seed: int, *, use_pca: bool = False, dims: Optional[int] = None,
                   min_size: int = 2,
                   evaluator: Optional[SliceEvaluator] = None) -> list[ClusterSlice]:
    """Cluster the encoded dataset and evaluate every cluster against its counterpart."""
    evaluator = evaluator or SliceEvaluator(loss, min_size)
    X = encode(dataset, use_pca=use_pca, dims=dims)
    result = kmeans(X, num_clusters, seed)
    out = []
    for c in range(len(result.centroids)):
        members = np.flatnonzero(result.labels == c)
        slc = Slice((), members, tag=f"cluster:{c}")
        stats = evaluator.evaluate(members)
        phi = stats.effect_size
        flagged = stats.counterpart_size > 0 and np.isfinite(phi) and phi >= T
        out.append(ClusterSlice(index=c, centroid=result.centroids[c],
                                slice=slc, stats=stats, flagged=flagged))
    return out


class ClusterExpander:
    """One-shot expander: the cluster set is fixed when the session starts."""

    def __init__(self, dataset: Dataset, evaluator: SliceEvaluator, *,
                 num_clusters: int, seed: int = 0, use_pca: bool = False,
                 dims: Optional[int] = None, workers: int = 1):
        self.dataset = dataset
        self.evaluator = evaluator
        self.num_clusters = num_clusters
        self.seed = seed
        self.use_pca = use_pca
        self.dims = dims
        self.depth = 0

    def hypothesis_count(self) -> int:
        return self.num_clusters

    def next_batch(self, problematic: ProblematicIndex) -> list[tuple[Slice, SliceStats]]:
        if self.depth >= 1:
            return []
        self.depth = 1
        X = encode(self.dataset, use_pca=self.use_pca, dims=self.dims)
        result = kmeans(X, self.num_clusters, self.seed)
        batch = []
        for c in range(len(result.centroids)):
            members = np.flatnonzero(result.labels == c)
            slc = Slice((), members, tag=f"cluster:{c}")
            batch.append((slc, self.evaluator.evaluate(members)))
        return batch
