"""Columnar dataset: loading, discretization, rare-value bucketing, sampling, slicing.

A Dataset is an immutable columnar table. Every feature column stores
value *indices* into its FeatureSchema domain, so slice membership is a
plain integer comparison regardless of the original column type. Slices
keep sorted index arrays into the dataset, never row copies.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

MISSING = "MISSING"
OTHER = "OTHER"

CATEGORICAL = "categorical"
NUMERIC = "numeric"

DEFAULT_BINS = 10
DEFAULT_TOP_VALUES = 50


class DataError(ValueError):
    """Raised for unloadable input or invalid dataset operations."""


def _fmt(x: float) -> str:
    return format(float(x), "g")


@dataclass(frozen=True)
class FeatureSchema:
    """Domain description for one feature.

    For categorical features ``values`` holds the kept category labels
    (most frequent first, ties broken lexicographically), optionally
    followed by an OTHER bucket for the remaining rare labels.

    For numeric features ``values`` holds bin labels derived from
    ``boundaries`` (interior cut points) over the observed ``span``;
    bins are half-open ``[lo, hi)`` except the last, which includes the
    maximum. Rows whose value could not be parsed get a trailing MISSING
    entry, ordered above every boundary.
    """

    name: str
    kind: str
    values: tuple[str, ...]
    boundaries: tuple[float, ...] = ()
    span: tuple[float, float] = (math.nan, math.nan)
    other_index: Optional[int] = None
    missing_index: Optional[int] = None
    degenerate: bool = False

    @property
    def domain_size(self) -> int:
        return len(self.values)

    def literal_value_indices(self) -> list[int]:
        """Value indices eligible for equality literals.

        The OTHER bucket is a grab-bag of rare labels, not an
        interpretable predicate, so it never generates literals.
        Degenerate features (single effective value) generate none.
        """
        if self.degenerate:
            return []
        return [i for i in range(len(self.values)) if i != self.other_index]

    def threshold_indices(self) -> list[int]:
        """Bin indices usable as numeric split thresholds (left bin edges)."""
        if self.kind != NUMERIC or self.degenerate:
            return []
        return list(range(1, len(self.boundaries) + 1))

    def boundary_value(self, index: int) -> float:
        """Left edge of bin ``index`` (valid for threshold indices)."""
        return self.boundaries[index - 1]

    def display(self, index: int) -> str:
        return self.values[index]


@dataclass(frozen=True, order=True)
class Literal:
    """One predicate atom: ``feature op value`` over domain value indices.

    ``op`` is one of ``=``, ``!=``, ``<``, ``>=``. Threshold ops compare
    bin indices, with the boundary taken as the left edge of bin
    ``value``; numeric MISSING sorts above every boundary.
    """

    feature: str
    op: str
    value: int

    def display(self, schema: FeatureSchema) -> str:
        if self.op == "=":
            return f"{self.feature}={schema.display(self.value)}"
        if self.op == "!=":
            return f"{self.feature}≠{schema.display(self.value)}"
        bound = _fmt(schema.boundary_value(self.value))
        if self.op == "<":
            return f"{self.feature}<{bound}"
        if self.op == ">=":
            return f"{self.feature}≥{bound}"
        raise DataError(f"unknown literal op {self.op!r}")


def canonical_literals(literals: Iterable[Literal]) -> tuple[Literal, ...]:
    return tuple(sorted(literals, key=lambda l: (l.feature, l.op, l.value)))


class Slice:
    """A conjunction of literals plus its member row indices."""

    __slots__ = ("literals", "members", "tag")

    def __init__(self, literals: Iterable[Literal], members: np.ndarray, tag: str = ""):
        self.literals = canonical_literals(literals)
        members = np.asarray(members, dtype=np.int64)
        members.setflags(write=False)
        self.members = members
        self.tag = tag

    @property
    def num_literals(self) -> int:
        return len(self.literals)

    @property
    def size(self) -> int:
        return int(self.members.size)

    @property
    def key(self) -> tuple:
        return (self.literals, self.tag)

    @property
    def literal_set(self) -> frozenset:
        return frozenset(self.literals)

    def predicate(self, dataset: "Dataset") -> str:
        if self.tag:
            return self.tag
        if not self.literals:
            return "(all)"
        return " ∧ ".join(l.display(dataset.schema(l.feature)) for l in self.literals)

    def __repr__(self) -> str:
        lits = ",".join(f"{l.feature}{l.op}{l.value}" for l in self.literals)
        return f"Slice([{lits or self.tag}], n={self.size})"


class Dataset:
    """Immutable columnar table of encoded features, labels and scores."""

    def __init__(self, schemas: Sequence[FeatureSchema], columns: Sequence[np.ndarray],
                 labels: np.ndarray, scores: np.ndarray):
        self.schemas = tuple(schemas)
        cols = []
        for schema, col in zip(self.schemas, columns):
            arr = np.asarray(col, dtype=np.int32)
            arr.setflags(write=False)
            cols.append(arr)
        self.columns = tuple(cols)
        self.labels = np.asarray(labels, dtype=np.int8)
        self.scores = np.asarray(scores, dtype=np.float64)
        self.labels.setflags(write=False)
        self.scores.setflags(write=False)
        self._by_name = {s.name: i for i, s in enumerate(self.schemas)}
        self._validate()

    def _validate(self) -> None:
        if len(self.schemas) != len(self.columns):
            raise DataError("schema/column count mismatch")
        n = self.labels.size
        if self.scores.size != n:
            raise DataError("labels and scores must have identical length")
        for schema, col in zip(self.schemas, self.columns):
            if col.size != n:
                raise DataError(f"column {schema.name!r} has wrong length")
            if col.size and (col.min() < 0 or col.max() >= schema.domain_size):
                raise DataError(f"column {schema.name!r} has out-of-domain value index")
        bad = ~np.isin(self.labels, (0, 1))
        if bad.any():
            raise DataError("labels must be binary (0/1)")
        if not np.isfinite(self.scores).all():
            raise DataError("scores must be finite")

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.schemas)

    def schema(self, name: str) -> FeatureSchema:
        return self.schemas[self._by_name[name]]

    def column(self, name: str) -> np.ndarray:
        return self.columns[self._by_name[name]]

    def row_display(self, index: int) -> dict:
        return {s.name: s.display(int(col[index])) for s, col in zip(self.schemas, self.columns)}


@dataclass
class IngestionReport:
    """Counts and per-feature summaries produced while loading a table."""

    rows_read: int = 0
    rows_kept: int = 0
    dropped_label: int = 0
    dropped_score: int = 0
    features: list = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return self.dropped_label + self.dropped_score

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "dropped": self.dropped,
            "dropped_label": self.dropped_label,
            "dropped_score": self.dropped_score,
            "features": list(self.features),
        }

    def summary_text(self) -> str:
        lines = [
            f"rows read: {self.rows_read}, kept: {self.rows_kept}, "
            f"dropped: {self.dropped} (label: {self.dropped_label}, score: {self.dropped_score})"
        ]
        for f in self.features:
            extra = " [degenerate]" if f["degenerate"] else ""
            lines.append(f"  {f['name']}: {f['kind']}, {f['domain_size']} values{extra}")
        return "\n".join(lines)


def discretize(raw_numeric_column: Sequence[float], num_bins: int, name: str = "") -> FeatureSchema:
    """Equi-depth (quantile) bins over a raw numeric column.

    Duplicate quantile cut points are merged and cut points that would
    leave an empty bin are dropped, so the resulting bins are strictly
    increasing, jointly cover the observed min..max, and each holds at
    least one observed value. A constant column yields a single
    degenerate bin. NaNs map to a trailing MISSING entry.
    """
    if num_bins < 2:
        raise DataError("num_bins must be >= 2")
    arr = np.asarray(raw_numeric_column, dtype=np.float64)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise DataError(f"feature {name!r} has no finite values")
    has_missing = finite.size < arr.size
    lo, hi = float(finite.min()), float(finite.max())

    if lo == hi:
        boundaries: tuple[float, ...] = ()
    else:
        qs = np.quantile(finite, [i / num_bins for i in range(1, num_bins)])
        bounds = sorted(set(float(q) for q in qs))
        distinct = np.unique(finite)
        # A cut at the minimum would leave the first bin empty; move it to
        # the next observed value instead.
        bounds = sorted({distinct[1] if b <= lo else b for b in bounds})
        bounds = [b for b in bounds if b <= hi]
        # Drop any cut point whose bin captured no observed value.
        while bounds:
            idx = np.searchsorted(bounds, finite, side="right")
            counts = np.bincount(idx, minlength=len(bounds) + 1)
            empties = np.flatnonzero(counts == 0)
            if empties.size == 0:
                break
            del bounds[int(empties[0]) - 1]
        boundaries = tuple(bounds)

    edges = [lo, *boundaries, hi]
    labels = []
    for i in range(len(boundaries) + 1):
        closer = "]" if i == len(boundaries) else ")"
        labels.append(f"[{_fmt(edges[i])},{_fmt(edges[i + 1])}{closer}")
    missing_index = None
    if has_missing:
        missing_index = len(labels)
        labels.append(MISSING)
    return FeatureSchema(
        name=name,
        kind=NUMERIC,
        values=tuple(labels),
        boundaries=boundaries,
        span=(lo, hi),
        missing_index=missing_index,
        degenerate=len(boundaries) == 0 and not has_missing,
    )


def bucket_rare_values(raw_categorical_column: Sequence, top_n: int, name: str = "") -> FeatureSchema:
    """Keep the ``top_n`` most frequent labels; the rest share one OTHER bucket.

    Frequency ties break lexicographically. Missing entries (None or
    empty string) become the MISSING label, which competes by frequency
    like any other value.
    """
    if top_n < 1:
        raise DataError("top_n must be >= 1")
    cleaned = [_clean_categorical(v) for v in raw_categorical_column]
    counts = Counter(cleaned)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [v for v, _ in ordered[:top_n]]
    rest = len(ordered) > top_n
    values = list(kept)
    other_index = None
    if rest:
        other_index = len(values)
        values.append(OTHER)
    return FeatureSchema(
        name=name,
        kind=CATEGORICAL,
        values=tuple(values),
        other_index=other_index,
        degenerate=len(values) <= 1,
    )


def _clean_categorical(v) -> str:
    if v is None:
        return MISSING
    s = str(v).strip()
    return s if s else MISSING


def encode_categorical(schema: FeatureSchema, raw_column: Sequence) -> np.ndarray:
    index = {v: i for i, v in enumerate(schema.values)}
    other = schema.other_index
    out = np.empty(len(raw_column), dtype=np.int32)
    for i, v in enumerate(raw_column):
        out[i] = index.get(_clean_categorical(v), other if other is not None else 0)
    return out


def encode_numeric(schema: FeatureSchema, raw_column: Sequence[float]) -> np.ndarray:
    arr = np.asarray(raw_column, dtype=np.float64)
    idx = np.searchsorted(np.asarray(schema.boundaries), arr, side="right").astype(np.int32)
    n_bins = len(schema.boundaries) + 1
    np.clip(idx, 0, n_bins - 1, out=idx)
    if schema.missing_index is not None:
        idx[~np.isfinite(arr)] = schema.missing_index
    elif not np.isfinite(arr).all():
        raise DataError(f"feature {schema.name!r} has missing values but no MISSING bin")
    return idx


def parse_schema_options(text_or_path: Union[str, os.PathLike]) -> dict[str, dict]:
    """Parse ``feature.key = value`` lines into per-feature option dicts.

    Recognized keys: ``kind`` (categorical|numeric), ``bins`` (int),
    ``top_values`` (int). Lines starting with ``#`` are ignored.
    """
    if isinstance(text_or_path, os.PathLike) or (
        isinstance(text_or_path, str) and "\n" not in text_or_path and os.path.exists(text_or_path)
    ):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = str(text_or_path)
    options: dict[str, dict] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"schema options line {lineno}: expected 'feature.key = value'")
        left, _, value = line.partition("=")
        left, value = left.strip(), value.strip()
        if "." not in left:
            raise DataError(f"schema options line {lineno}: key must be 'feature.key'")
        feature, _, key = left.rpartition(".")
        entry = options.setdefault(feature, {})
        if key == "kind":
            if value not in (CATEGORICAL, NUMERIC):
                raise DataError(f"schema options line {lineno}: bad kind {value!r}")
            entry["kind"] = value
        elif key in ("bins", "top_values"):
            try:
                entry[key] = int(value)
            except ValueError:
                raise DataError(f"schema options line {lineno}: {key} must be an integer") from None
        else:
            raise DataError(f"schema options line {lineno}: unknown key {key!r}")
    return options


@dataclass
class RawTable:
    """Parsed delimited table with validated label/score columns."""

    feature_names: list[str]
    feature_cells: list[list[str]]
    labels: np.ndarray
    scores: np.ndarray
    report: IngestionReport


def parse_table(source, label_column: str, score_column: str, *,
                delimiter: str = ",", loss_kind: str = "log_loss") -> RawTable:
    """Read a delimited text table, dropping rows with bad label or score."""
    close = False
    if isinstance(source, (str, os.PathLike)):
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        fh = source
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty input: header row required") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"missing label column {label_column!r}")
        if score_column not in header:
            raise DataError(f"missing score column {score_column!r}")
        label_idx = header.index(label_column)
        score_idx = header.index(score_column)
        feature_names = [h for h in header if h not in (label_column, score_column)]
        feature_idx = [i for i, h in enumerate(header) if h not in (label_column, score_column)]

        report = IngestionReport()
        labels: list[int] = []
        scores: list[float] = []
        feature_cells: list[list[str]] = [[] for _ in feature_names]
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            report.rows_read += 1
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            label = _parse_label(row[label_idx])
            if label is None:
                report.dropped_label += 1
                continue
            score = _parse_score(row[score_idx], loss_kind)
            if score is None:
                report.dropped_score += 1
                continue
            labels.append(label)
            scores.append(score)
            for j, src in enumerate(feature_idx):
                feature_cells[j].append(row[src])
        if not labels:
            raise DataError("zero surviving rows after dropping bad labels/scores")
        report.rows_kept = len(labels)
        return RawTable(feature_names, feature_cells,
                        np.asarray(labels, dtype=np.int8),
                        np.asarray(scores, dtype=np.float64), report)
    finally:
        if close:
            fh.close()


def _parse_label(cell: str) -> Optional[int]:
    s = cell.strip()
    if not s:
        return None
    try:
        v = float(s)
    except ValueError:
        return None
    if v == 0.0:
        return 0
    if v == 1.0:
        return 1
    raise DataError(f"non-binary label value {s!r}")


def _parse_score(cell: str, loss_kind: str) -> Optional[float]:
    s = cell.strip()
    if not s:
        return None
    try:
        v = float(s)
    except ValueError:
        return None
    if not math.isfinite(v):
        return None
    if loss_kind == "log_loss" and not (0.0 <= v <= 1.0):
        return None
    if loss_kind == "generic_score" and v < 0.0:
        return None
    return v


def build_dataset(table: RawTable, *, schema_options: Optional[dict] = None,
                  num_bins: int = DEFAULT_BINS, top_values: int = DEFAULT_TOP_VALUES) -> Dataset:
    """Discretize/bucket the raw feature columns of a parsed table."""
    schema_options = schema_options or {}
    schemas: list[FeatureSchema] = []
    columns: list[np.ndarray] = []
    for name, cells in zip(table.feature_names, table.feature_cells):
        opts = schema_options.get(name, {})
        kind = opts.get("kind") or _detect_kind(cells)
        if kind == NUMERIC:
            raw = np.array([_to_float(c) for c in cells], dtype=np.float64)
            schema = discretize(raw, opts.get("bins", num_bins), name=name)
            col = encode_numeric(schema, raw)
        else:
            schema = bucket_rare_values(cells, opts.get("top_values", top_values), name=name)
            col = encode_categorical(schema, cells)
        schemas.append(schema)
        columns.append(col)
    ds = Dataset(schemas, columns, table.labels, table.scores)
    table.report.features = [
        {
            "name": s.name,
            "kind": s.kind,
            "domain_size": s.domain_size,
            "degenerate": s.degenerate,
            "has_other": s.other_index is not None,
            "has_missing": s.missing_index is not None
            or (s.kind == CATEGORICAL and MISSING in s.values),
        }
        for s in schemas
    ]
    return ds


def _detect_kind(cells: Sequence[str]) -> str:
    saw_value = False
    for c in cells:
        s = c.strip()
        if not s:
            continue
        saw_value = True
        try:
            float(s)
        except ValueError:
            return CATEGORICAL
    return NUMERIC if saw_value else CATEGORICAL


def _to_float(cell: str) -> float:
    s = cell.strip()
    if not s:
        return math.nan
    try:
        return float(s)
    except ValueError:
        return math.nan


def load(source, label_column: str, score_column: str, *, delimiter: str = ",",
         schema_options: Optional[dict] = None, num_bins: int = DEFAULT_BINS,
         top_values: int = DEFAULT_TOP_VALUES,
         loss_kind: str = "log_loss") -> tuple[Dataset, IngestionReport]:
    """Load a delimited text table into a Dataset plus an ingestion report."""
    table = parse_table(source, label_column, score_column,
                        delimiter=delimiter, loss_kind=loss_kind)
    ds = build_dataset(table, schema_options=schema_options,
                       num_bins=num_bins, top_values=top_values)
    return ds, table.report


def sample(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Uniform sample without replacement; schemas (and bins) are preserved."""
    if not (0.0 < fraction <= 1.0):
        raise DataError("fraction must be in (0, 1]")
    n = dataset.n
    size = int(round(fraction * n))
    if size <= 0:
        raise DataError("sample of size 0")
    if size >= n:
        return dataset
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=size, replace=False))
    return Dataset(
        dataset.schemas,
        [col[chosen] for col in dataset.columns],
        dataset.labels[chosen],
        dataset.scores[chosen],
    )


def literal_mask(dataset: Dataset, literal: Literal) -> np.ndarray:
    col = dataset.column(literal.feature)
    if literal.op == "=":
        return col == literal.value
    if literal.op == "!=":
        return col != literal.value
    if literal.op == "<":
        return col < literal.value
    if literal.op == ">=":
        return col >= literal.value
    raise DataError(f"unknown literal op {literal.op!r}")


def slice_members(dataset: Dataset, literals: Iterable[Literal]) -> Slice:
    """Evaluate a conjunction of equality/threshold literals by column scans."""
    literals = tuple(literals)
    features = [l.feature for l in literals]
    if len(set(features)) != len(features):
        raise DataError("duplicate feature in literals")
    return Slice(literals, evaluate_predicate(dataset, literals))


def evaluate_predicate(dataset: Dataset, literals: Iterable[Literal]) -> np.ndarray:
    """Member indices of a conjunction; repeated features are allowed here
    (tree paths may constrain the same numeric feature twice)."""
    mask = np.ones(dataset.n, dtype=bool)
    for lit in literals:
        mask &= literal_mask(dataset, lit)
    return np.flatnonzero(mask)


def root_slice(dataset: Dataset) -> Slice:
    return Slice((), np.arange(dataset.n, dtype=np.int64))
