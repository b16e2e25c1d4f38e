"""Dataset ingestion, one-hot encoding, stratified splitting, z-score
normalization, and a distance-based class-separability score.

CSV dialect: comma delimiter, first row is the header, UTF-8. An empty cell
or a '?' is treated as missing and drops the whole row; the drop count is
kept on the table so ingest reports can surface it.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .numkernel import RngState, rng_derive

__all__ = [
    "COLUMN_KINDS",
    "Dataset",
    "FoldPlan",
    "NormStats",
    "RawTable",
    "Schema",
    "apply_zscore",
    "encode",
    "fit_zscore",
    "gdv",
    "infer_schema",
    "invert_zscore",
    "load_csv",
    "stratified_holdout",
    "stratified_kfold",
]

COLUMN_KINDS = ("numeric", "categorical", "binary", "target")
MISSING_TOKENS = ("", "?")


@dataclass(frozen=True)
class Schema:
    """Column-name -> kind mapping with exactly one target column."""

    kinds: dict[str, str]

    def __post_init__(self):
        bad = {c: k for c, k in self.kinds.items() if k not in COLUMN_KINDS}
        if bad:
            raise DataError(f"unknown column kinds: {bad}")
        targets = [c for c, k in self.kinds.items() if k == "target"]
        if len(targets) != 1:
            raise DataError(f"schema must declare exactly one target column, found {targets}")

    @property
    def target_column(self) -> str:
        return next(c for c, k in self.kinds.items() if k == "target")

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(self.kinds)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "Schema":
        path = Path(path)
        if not path.exists():
            raise DataError(f"schema file not found: {path}")
        try:
            kinds = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataError(f"schema file {path} is not valid JSON: {e}") from e
        if not isinstance(kinds, dict):
            raise DataError(f"schema file {path} must hold a JSON object")
        return cls(dict(kinds))

    def to_json_file(self, path: str | Path):
        Path(path).write_text(json.dumps(self.kinds, indent=2) + "\n", encoding="utf-8")


@dataclass
class RawTable:
    """Typed columns straight from disk; numeric cells parsed, the rest kept as text."""

    columns: tuple[str, ...]
    rows: list[list]
    n_dropped_missing: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix plus integer class labels."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    feature_names: tuple[str, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y row counts differ")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise DataError("class index out of range")

    @property
    def n_samples(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    def with_features(self, X: np.ndarray) -> "Dataset":
        return Dataset(X, self.y, self.n_classes, self.feature_names, self.class_labels)


@dataclass(frozen=True)
class FoldPlan:
    """k disjoint test folds covering the dataset, each with a (train, val, test) triple."""

    k: int
    splits: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]

    @property
    def test_folds(self) -> tuple[np.ndarray, ...]:
        return tuple(s[2] for s in self.splits)


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean and population standard deviation from training rows only."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray  # boolean mask of features with zero spread


def load_csv(path: str | Path, schema: Schema) -> RawTable:
    """Read a CSV into typed columns; rows with missing cells are dropped and counted."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = tuple(h.strip() for h in header)
        if set(header) != set(schema.columns):
            raise DataError(
                f"{path}: header {list(header)} does not match schema columns "
                f"{list(schema.columns)}"
            )
        rows: list[list] = []
        n_dropped = 0
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(raw)}")
            cells = [c.strip() for c in raw]
            if any(c in MISSING_TOKENS for c in cells):
                n_dropped += 1
                continue
            row: list = []
            for name, cell in zip(header, cells):
                if schema.kinds[name] == "numeric":
                    try:
                        row.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}:{lineno}: non-numeric value {cell!r} in numeric "
                            f"column {name!r}"
                        ) from None
                else:
                    row.append(cell)
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no instances")
    return RawTable(columns=header, rows=rows, n_dropped_missing=n_dropped)


def infer_schema(path: str | Path, target: str | None = None) -> Schema:
    """Best-effort schema: all-parseable columns become numeric, two-valued ones
    binary, the rest categorical; the target defaults to the last column."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        values: dict[str, set] = {h: set() for h in header}
        numeric_ok = {h: True for h in header}
        for raw in reader:
            for name, cell in zip(header, raw):
                cell = cell.strip()
                if cell in MISSING_TOKENS:
                    continue
                values[name].add(cell)
                if numeric_ok[name]:
                    try:
                        float(cell)
                    except ValueError:
                        numeric_ok[name] = False
    target = target if target is not None else header[-1]
    if target not in header:
        raise DataError(f"target column {target!r} not in header")
    kinds: dict[str, str] = {}
    for name in header:
        if name == target:
            kinds[name] = "target"
        elif numeric_ok[name]:
            kinds[name] = "numeric"
        elif len(values[name]) <= 2:
            kinds[name] = "binary"
        else:
            kinds[name] = "categorical"
    return Schema(kinds)


def encode(raw: RawTable, schema: Schema) -> Dataset:
    """One-hot encode categorical and binary columns; numeric columns pass through.

    Category values and class labels are mapped in sorted order so the encoding
    is deterministic regardless of row order.
    """
    target_col = schema.target_column
    target_values = raw.column(target_col)
    class_labels = tuple(sorted(set(map(str, target_values))))
    if len(class_labels) < 2:
        raise DataError("target column must have at least 2 classes")
    class_index = {c: i for i, c in enumerate(class_labels)}
    y = np.array([class_index[str(v)] for v in target_values], dtype=np.intp)

    blocks: list[np.ndarray] = []
    names: list[str] = []
    for name in raw.columns:
        kind = schema.kinds[name]
        if kind == "target":
            continue
        col = raw.column(name)
        if kind == "numeric":
            blocks.append(np.asarray(col, dtype=np.float64)[:, None])
            names.append(name)
        else:
            levels = sorted(set(map(str, col)))
            level_index = {v: j for j, v in enumerate(levels)}
            block = np.zeros((len(col), len(levels)), dtype=np.float64)
            for i, v in enumerate(col):
                block[i, level_index[str(v)]] = 1.0
            blocks.append(block)
            names.extend(f"{name}={v}" for v in levels)
    if not blocks:
        raise DataError("no feature columns in schema")
    X = np.concatenate(blocks, axis=1)
    return Dataset(
        X=X,
        y=y,
        n_classes=len(class_labels),
        feature_names=tuple(names),
        class_labels=class_labels,
    )


def _class_indices(labels: np.ndarray) -> list[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == c) for c in np.unique(labels)]


def stratified_holdout(
    train_indices: np.ndarray,
    labels: np.ndarray,
    fraction: float = 0.15,
    rng: RngState | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (train, validation) preserving class proportions.

    Per-class validation counts follow the largest-remainder rule against the
    global target round(fraction * n), with at least one validation sample per
    class of size >= 2. A single-member class stays in training (warned).
    labels must be aligned with train_indices (labels[i] labels train_indices[i]).
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"holdout fraction must be in (0, 1), got {fraction}")
    if rng is None:
        rng = RngState(0)
    train_indices = np.asarray(train_indices)
    labels = np.asarray(labels)
    if labels.shape != train_indices.shape:
        raise ValueError("labels must align with train_indices")
    n = train_indices.size
    target_total = int(np.floor(fraction * n + 0.5))

    groups = _class_indices(labels)
    sizes = np.array([g.size for g in groups])
    shares = fraction * sizes
    counts = np.floor(shares).astype(int)
    remainders = shares - counts
    # Hand out the remaining slots by largest fractional remainder.
    short = target_total - int(counts.sum())
    if short > 0:
        order = np.argsort(-remainders, kind="stable")
        for j in order[:short]:
            counts[j] += 1
    # Minimum one validation sample for any class that can spare it; never
    # empty a class out of training.
    for j, g in enumerate(groups):
        if g.size >= 2:
            counts[j] = min(max(counts[j], 1), g.size - 1)
        else:
            counts[j] = 0
            warnings.warn(
                "single-member class kept in training; validation cannot represent it",
                stacklevel=2,
            )

    val_pos: list[np.ndarray] = []
    train_pos: list[np.ndarray] = []
    for j, g in enumerate(groups):
        perm = g[rng.generator.permutation(g.size)]
        val_pos.append(perm[: counts[j]])
        train_pos.append(perm[counts[j] :])
    val_sel = np.sort(np.concatenate(val_pos)) if val_pos else np.array([], dtype=np.intp)
    train_sel = np.sort(np.concatenate(train_pos))
    return train_indices[train_sel], train_indices[val_sel]


def stratified_kfold(
    ds: Dataset, k: int, rng: RngState, val_fraction: float = 0.15
) -> FoldPlan:
    """Stratified k-fold plan with a per-fold stratified validation holdout.

    Test folds partition the dataset with per-class counts within one sample
    of n_c / k. Each fold's remaining indices are split into train and
    validation with `stratified_holdout`.
    """
    if k < 2:
        raise ValueError("k must be >= 2 (k=1 leaves no held-out test fold)")
    counts = np.bincount(ds.y, minlength=ds.n_classes)
    thin = [int(c) for c in np.flatnonzero(counts < k)]
    if thin:
        raise DataError(
            f"insufficient class support: classes {thin} have fewer than k={k} members"
        )

    fold_members: list[list[np.ndarray]] = [[] for _ in range(k)]
    for g in _class_indices(ds.y):
        perm = g[rng.generator.permutation(g.size)]
        base, extra = divmod(perm.size, k)
        start = 0
        for i in range(k):
            size = base + (1 if i < extra else 0)
            fold_members[i].append(perm[start : start + size])
            start += size

    splits = []
    all_idx = np.arange(ds.n_samples)
    for i in range(k):
        test_idx = np.sort(np.concatenate(fold_members[i]))
        rest = np.setdiff1d(all_idx, test_idx, assume_unique=True)
        train_idx, val_idx = stratified_holdout(
            rest, ds.y[rest], val_fraction, rng_derive(rng, f"holdout-{i}")
        )
        splits.append((train_idx, val_idx, test_idx))
    return FoldPlan(k=k, splits=tuple(splits))


def fit_zscore(ds: Dataset, train_indices: np.ndarray) -> NormStats:
    """Per-feature mean and population std computed on the training rows only."""
    train_indices = np.asarray(train_indices)
    if train_indices.size == 0:
        raise ValueError("empty train index set")
    Xt = ds.X[train_indices]
    mean = Xt.mean(axis=0)
    std = Xt.std(axis=0)  # population (1/N) form
    return NormStats(mean=mean, std=std, degenerate=std == 0.0)


def apply_zscore(ds: Dataset, stats: NormStats) -> Dataset:
    """Standardize features with previously fitted stats; degenerate features map to 0."""
    safe_std = np.where(stats.degenerate, 1.0, stats.std)
    Xz = (ds.X - stats.mean) / safe_std
    if stats.degenerate.any():
        Xz[:, stats.degenerate] = 0.0
    return ds.with_features(Xz)


def invert_zscore(X: np.ndarray, stats: NormStats) -> np.ndarray:
    """Undo `apply_zscore` for non-degenerate features (degenerate ones are lost)."""
    safe_std = np.where(stats.degenerate, 1.0, stats.std)
    return X * safe_std + stats.mean


def _mean_pairwise_distance(a: np.ndarray, b: np.ndarray | None = None) -> float:
    """Mean Euclidean distance: within a (unordered distinct pairs) or across a x b."""
    if b is None:
        n = a.shape[0]
        if n < 2:
            return 0.0
        diffs = a[:, None, :] - a[None, :, :]
        d = np.sqrt(np.sum(diffs * diffs, axis=2))
        iu = np.triu_indices(n, k=1)
        return float(d[iu].mean())
    diffs = a[:, None, :] - b[None, :, :]
    d = np.sqrt(np.sum(diffs * diffs, axis=2))
    return float(d.mean())


def gdv(ds: Dataset) -> float:
    """Generalized discrimination value (Schilling et al. 2021); more negative
    means more linearly separable classes.

    Features are z-scored (population std) and scaled by 0.5, then
    GDV = (1/sqrt(d)) * [mean intra-class distance - mean inter-class distance],
    with the intra term averaged over classes and the inter term over class pairs.
    """
    if ds.n_classes < 2:
        raise DataError("gdv requires at least 2 classes")
    counts = np.bincount(ds.y, minlength=ds.n_classes)
    if (counts == 0).any():
        raise DataError("gdv requires at least one sample per class")

    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    safe = np.where(std == 0.0, 1.0, std)
    Z = 0.5 * ((ds.X - mean) / safe)
    Z[:, std == 0.0] = 0.0

    groups = [Z[ds.y == c] for c in range(ds.n_classes)]
    n_groups = len(groups)
    intra = float(np.mean([_mean_pairwise_distance(g) for g in groups]))
    inter_terms = [
        _mean_pairwise_distance(groups[a], groups[b])
        for a in range(n_groups)
        for b in range(a + 1, n_groups)
    ]
    inter = float(np.mean(inter_terms))
    return float((intra - inter) / np.sqrt(ds.n_features))
