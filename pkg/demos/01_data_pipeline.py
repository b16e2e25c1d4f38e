"""Walk a raw CSV through the full data pipeline.

Loads the tiny nominal weather table, one-hot encodes it, builds a stratified
fold plan on a synthetic task, fits z-score stats on training rows only, and
scores class separability. Run from the repository root:

    python demos/01_data_pipeline.py
"""

from pathlib import Path

import numpy as np

from valsel.datapipe import (
    Schema,
    apply_zscore,
    encode,
    fit_zscore,
    gdv,
    load_csv,
    stratified_kfold,
)
from valsel.numkernel import RngState
from valsel.sampledata import blob_dataset

DATA = Path(__file__).resolve().parent.parent / "data"

# --- one-hot encoding of a nominal table -----------------------------------
schema = Schema.from_json_file(DATA / "weather_nominal.schema.json")
table = load_csv(DATA / "weather_nominal.csv", schema)
weather = encode(table, schema)
print(f"weather: {len(table)} rows -> {weather.n_features} indicator features")
print("  features:", ", ".join(weather.feature_names))
print("  classes:", weather.class_labels)

# --- stratified folds + train-only normalization ---------------------------
blobs = blob_dataset(200, n_features=3, n_classes=2, separation=2.5, seed=0)
plan = stratified_kfold(blobs, k=10, rng=RngState(42), val_fraction=0.15)
train_idx, val_idx, test_idx = plan.splits[0]
print(f"\nfold 0 of 10: train={train_idx.size} val={val_idx.size} test={test_idx.size}")

stats = fit_zscore(blobs, train_idx)
normalized = apply_zscore(blobs, stats)
train_mean = normalized.X[train_idx].mean(axis=0)
test_mean = normalized.X[test_idx].mean(axis=0)
print("train feature means after z-score:", np.round(train_mean, 12))
print("test feature means after z-score: ", np.round(test_mean, 3), "(not exactly 0: no leakage)")

# --- class separability -----------------------------------------------------
for sep in (0.0, 1.0, 3.0, 8.0):
    ds = blob_dataset(300, n_features=2, n_classes=2, separation=sep, seed=1)
    print(f"separation {sep:>3}: separability score {gdv(ds):+.4f} (more negative = easier)")
