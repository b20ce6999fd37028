import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slicelens.dataset import CATEGORICAL, Dataset, FeatureSchema
from slicelens.stats import LossVector


def categorical_schema(name, values):
    return FeatureSchema(name=name, kind=CATEGORICAL, values=tuple(values),
                         degenerate=len(values) <= 1)


def make_dataset(columns_by_name, labels=None, scores=None):
    """Build a Dataset from {name: (values, raw_index_column)} pairs."""
    schemas = []
    cols = []
    n = None
    for name, (values, col) in columns_by_name.items():
        schemas.append(categorical_schema(name, values))
        arr = np.asarray(col, dtype=np.int32)
        cols.append(arr)
        n = arr.size
    if labels is None:
        labels = np.zeros(n, dtype=np.int8)
    if scores is None:
        scores = np.full(n, 0.5)
    return Dataset(schemas, cols, np.asarray(labels), np.asarray(scores))


def random_instance(rng, max_features=4, max_values=4, n_rows=None):
    """Random small categorical dataset plus a generic loss vector."""
    m = int(rng.integers(2, max_features + 1))
    n = int(n_rows if n_rows is not None else rng.integers(40, 160))
    columns = {}
    for j in range(m):
        v = int(rng.integers(2, max_values + 1))
        values = tuple(f"v{j}_{i}" for i in range(v))
        col = rng.integers(0, v, size=n)
        columns[f"F{j}"] = (values, col)
    losses = rng.uniform(0.0, 2.0, size=n)
    # Plant a couple of lossy pockets so some slices actually qualify.
    for _ in range(int(rng.integers(1, 3))):
        name = f"F{int(rng.integers(0, m))}"
        values, col = columns[name]
        target = int(rng.integers(0, len(values)))
        losses[np.asarray(col) == target] += rng.uniform(0.5, 2.5)
    ds = make_dataset(columns)
    return ds, LossVector(losses, "generic_score")


def pocket_instance():
    """One strong 2-literal pocket; its parent slices carry moderate signal.

    Layout (240 rows, all eight A/B/C combinations equally likely):
    rows in B=b0 and C=c0 get +3.0 loss, rows in A=a0 get +0.35, base 0.5.
    """
    n = 240
    idx = np.arange(n)
    a = (idx % 2).astype(np.int32)
    b = ((idx // 2) % 2).astype(np.int32)
    c = ((idx // 4) % 2).astype(np.int32)
    loss = 0.5 + 0.01 * (idx % 7)
    loss = loss + np.where(a == 0, 0.35, 0.0)
    loss = loss + np.where((b == 0) & (c == 0), 3.0, 0.0)
    ds = make_dataset({
        "A": (("a0", "a1"), a),
        "B": (("b0", "b1"), b),
        "C": (("c0", "c1"), c),
    })
    return ds, LossVector(loss, "generic_score")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
