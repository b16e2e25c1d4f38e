"""Small dataset generators: Gaussian-blob classification tasks for smoke
experiments, plus writers for the tiny public-domain tables shipped in data/.

The balance-scale table is rule-generated (all 5^4 weight/distance
combinations, class decided by comparing left and right torque), which
reproduces the classic 625-row benchmark exactly without any download.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .datapipe import Dataset, Schema
from .numkernel import RngState

__all__ = [
    "balance_scale_rows",
    "balance_scale_schema",
    "blob_dataset",
    "blob_schema",
    "blob_table",
    "weather_nominal_rows",
    "weather_nominal_schema",
    "write_blob_files",
    "write_csv",
    "write_sample_tables",
]


def blob_dataset(
    n_samples: int,
    n_features: int = 4,
    n_classes: int = 2,
    separation: float = 3.0,
    seed: int = 0,
) -> Dataset:
    """Gaussian blobs with unit within-class spread; `separation` scales the
    distance between class centers (0 means fully overlapping classes)."""
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    rng = RngState(seed)
    centers = rng.normal((n_classes, n_features))
    norms = np.sqrt(np.sum(centers * centers, axis=1, keepdims=True))
    centers = separation * centers / np.maximum(norms, 1e-9)
    y = np.arange(n_samples) % n_classes
    X = centers[y] + rng.normal((n_samples, n_features))
    perm = rng.generator.permutation(n_samples)
    return Dataset(
        X=X[perm],
        y=y[perm].astype(np.intp),
        n_classes=n_classes,
        feature_names=tuple(f"x{j}" for j in range(n_features)),
        class_labels=tuple(f"c{c}" for c in range(n_classes)),
    )


def blob_table(
    n_samples: int,
    n_features: int = 4,
    n_classes: int = 2,
    separation: float = 3.0,
    seed: int = 0,
) -> tuple[list[str], list[list[str]]]:
    """The same blobs as CSV-ready (header, rows) with a trailing target column."""
    ds = blob_dataset(n_samples, n_features, n_classes, separation, seed)
    header = [f"x{j}" for j in range(n_features)] + ["class"]
    rows = []
    for i in range(ds.n_samples):
        rows.append([f"{v:.6f}" for v in ds.X[i]] + [ds.class_labels[ds.y[i]]])
    return header, rows


def blob_schema(n_features: int = 4) -> Schema:
    kinds = {f"x{j}": "numeric" for j in range(n_features)}
    kinds["class"] = "target"
    return Schema(kinds)


def balance_scale_rows() -> tuple[list[str], list[list[str]]]:
    """All 625 balance-scale instances: class L/B/R by left vs right torque."""
    header = ["class", "left_weight", "left_distance", "right_weight", "right_distance"]
    rows = []
    for lw in range(1, 6):
        for ld in range(1, 6):
            for rw in range(1, 6):
                for rd in range(1, 6):
                    left, right = lw * ld, rw * rd
                    cls = "B" if left == right else ("L" if left > right else "R")
                    rows.append([cls, str(lw), str(ld), str(rw), str(rd)])
    return header, rows


def balance_scale_schema() -> Schema:
    return Schema(
        {
            "class": "target",
            "left_weight": "numeric",
            "left_distance": "numeric",
            "right_weight": "numeric",
            "right_distance": "numeric",
        }
    )


def weather_nominal_rows() -> tuple[list[str], list[list[str]]]:
    """The 14-row play/don't-play weather table (all nominal attributes)."""
    header = ["outlook", "temperature", "humidity", "windy", "play"]
    rows = [
        ["sunny", "hot", "high", "false", "no"],
        ["sunny", "hot", "high", "true", "no"],
        ["overcast", "hot", "high", "false", "yes"],
        ["rainy", "mild", "high", "false", "yes"],
        ["rainy", "cool", "normal", "false", "yes"],
        ["rainy", "cool", "normal", "true", "no"],
        ["overcast", "cool", "normal", "true", "yes"],
        ["sunny", "mild", "high", "false", "no"],
        ["sunny", "cool", "normal", "false", "yes"],
        ["rainy", "mild", "normal", "false", "yes"],
        ["sunny", "mild", "normal", "true", "yes"],
        ["overcast", "mild", "high", "true", "yes"],
        ["overcast", "hot", "normal", "false", "yes"],
        ["rainy", "mild", "high", "true", "no"],
    ]
    return header, rows


def weather_nominal_schema() -> Schema:
    return Schema(
        {
            "outlook": "categorical",
            "temperature": "categorical",
            "humidity": "binary",
            "windy": "binary",
            "play": "target",
        }
    )


def write_csv(path: str | Path, header: list[str], rows: list[list[str]]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_blob_files(
    csv_path: str | Path,
    schema_path: str | Path,
    n_samples: int,
    n_features: int = 4,
    n_classes: int = 2,
    separation: float = 3.0,
    seed: int = 0,
):
    header, rows = blob_table(n_samples, n_features, n_classes, separation, seed)
    write_csv(csv_path, header, rows)
    blob_schema(n_features).to_json_file(schema_path)


def write_sample_tables(data_dir: str | Path):
    """Regenerate the shipped sample tables and their schema files."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    header, rows = balance_scale_rows()
    write_csv(data_dir / "balance_scale.csv", header, rows)
    balance_scale_schema().to_json_file(data_dir / "balance_scale.schema.json")
    header, rows = weather_nominal_rows()
    write_csv(data_dir / "weather_nominal.csv", header, rows)
    weather_nominal_schema().to_json_file(data_dir / "weather_nominal.schema.json")
