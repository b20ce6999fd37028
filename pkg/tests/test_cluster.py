import numpy as np
import pytest

from slicelens.cluster import ClusterExpander, cluster_slices, encode, kmeans, pca_project
from slicelens.dataset import DataError, Dataset, FeatureSchema
from slicelens.stats import LossVector, SliceEvaluator

from conftest import make_dataset


def mixed_dataset():
    schemas = [
        FeatureSchema(name="cat", kind="categorical", values=("a", "b", "c")),
        FeatureSchema(name="num", kind="numeric", values=("[0,5)", "[5,10]"),
                      boundaries=(5.0,), span=(0.0, 10.0)),
    ]
    columns = [np.array([0, 1, 2, 0]), np.array([0, 1, 0, 1])]
    return Dataset(schemas, columns, np.zeros(4, dtype=np.int8), np.full(4, 0.5))


class TestEncode:
    def test_one_hot_width(self):
        X = encode(mixed_dataset())
        assert X.shape == (4, 4)

    def test_without_pca_is_identity_encoding(self):
        ds = mixed_dataset()
        X = encode(ds, use_pca=False)
        assert X[0].tolist() == [1.0, 0.0, 0.0, 0.0]
        assert X[1].tolist() == [0.0, 1.0, 0.0, 1.0]

    def test_pca_drops_zero_variance_component(self):
        # Rank-1 data plus one constant column; the eigen-decomposition
        # oracle says exactly one nonzero covariance eigenvalue.
        X = np.array([[1, 2, 5], [2, 4, 5], [3, 6, 5], [4, 8, 5], [5, 10, 5]], float)
        cov = np.cov(X.T)
        eigenvalues = np.sort(np.linalg.eigvalsh(cov))[::-1]
        nonzero = int((eigenvalues > 1e-9).sum())
        assert nonzero == 1
        projected = pca_project(X, dims=3)
        assert projected.shape[1] == nonzero
        assert projected.var(ddof=1) == pytest.approx(eigenvalues[0], rel=1e-9)

    def test_pca_dims_validated(self):
        X = np.ones((4, 2))
        with pytest.raises(DataError):
            pca_project(X, dims=3)


class TestKMeans:
    def blobs(self, rng, n=20):
        a = rng.normal(0.0, 0.05, size=(n // 2, 2))
        b = rng.normal(5.0, 0.05, size=(n // 2, 2))
        return np.vstack([a, b])

    def test_recovers_well_separated_blobs(self, rng):
        X = self.blobs(rng)
        result = kmeans(X, 2, seed=1)
        # Brute-force nearest-centroid check over every point.
        for i, x in enumerate(X):
            dists = ((result.centroids - x) ** 2).sum(axis=1)
            assert result.labels[i] == np.argmin(dists)
        first, second = result.labels[:10], result.labels[10:]
        assert len(set(first.tolist())) == 1
        assert len(set(second.tolist())) == 1
        assert first[0] != second[0]

    def test_fixed_seed_reproducible(self, rng):
        X = self.blobs(rng, n=40)
        r1 = kmeans(X, 4, seed=9)
        r2 = kmeans(X, 4, seed=9)
        assert np.array_equal(r1.labels, r2.labels)

    def test_objective_non_increasing(self, rng):
        X = rng.uniform(0, 1, size=(200, 5))
        result = kmeans(X, 6, seed=3)
        path = result.inertia_path
        assert all(a >= b - 1e-9 for a, b in zip(path, path[1:]))

    def test_num_clusters_validated(self):
        with pytest.raises(DataError):
            kmeans(np.ones((5, 2)), 0, seed=0)


class TestClusterSlices:
    def test_partition(self, rng):
        ds = make_dataset({
            "A": (("a", "b", "c"), rng.integers(0, 3, 60)),
            "B": (("x", "y"), rng.integers(0, 2, 60)),
        })
        loss = LossVector(rng.uniform(0, 1, 60), "generic_score")
        clusters = cluster_slices(ds, loss, num_clusters=4, T=0.4, seed=5)
        all_members = np.concatenate([c.slice.members for c in clusters])
        assert np.array_equal(np.sort(all_members), np.arange(60))

    def test_single_cluster_is_degenerate(self, rng):
        ds = make_dataset({"A": (("a", "b"), rng.integers(0, 2, 30))})
        loss = LossVector(rng.uniform(0, 1, 30), "generic_score")
        clusters = cluster_slices(ds, loss, num_clusters=1, T=0.4, seed=0)
        assert len(clusters) == 1
        assert clusters[0].stats.degenerate
        assert not clusters[0].flagged

    def test_flagging_respects_threshold(self, rng):
        col = rng.integers(0, 2, 80)
        losses = np.where(col == 0, 2.0, 0.1) + rng.normal(0, 0.05, 80)
        ds = make_dataset({"A": (("a", "b"), col)})
        clusters = cluster_slices(ds, LossVector(np.abs(losses), "generic_score"),
                                  num_clusters=2, T=0.8, seed=2)
        flagged = [c for c in clusters if c.flagged]
        assert len(flagged) == 1
        lossy = set(np.flatnonzero(col == 0).tolist())
        assert set(flagged[0].slice.members.tolist()) == lossy

    def test_expander_is_one_shot(self, rng):
        ds = make_dataset({
            "A": (("a", "b", "c", "d"), rng.integers(0, 4, 40)),
            "B": (("x", "y", "z"), rng.integers(0, 3, 40)),
        })
        loss = LossVector(rng.uniform(0, 1, 40), "generic_score")
        expander = ClusterExpander(ds, SliceEvaluator(loss, 2), num_clusters=3, seed=1)
        from slicelens.driver import ProblematicIndex
        first = expander.next_batch(ProblematicIndex())
        assert len(first) == 3
        assert expander.next_batch(ProblematicIndex()) == []
