"""A small but complete crossed experiment, end to end.

Two synthetic tasks, three capacity ratios, all three training losses, all
four validation criteria, three stopping regimes. Writes trajectories and
reports under ./demo_experiment/ and prints the acceptance table. Takes
around a minute; delete the output directory to re-run from scratch (or keep
it and enjoy --resume semantics via the library call).

    python demos/05_small_experiment.py
"""

import json
from pathlib import Path

from valsel.harness import (
    ExperimentConfig,
    analyze_run_dir,
    directional_findings,
    emit_report,
    run_experiment,
)
from valsel.sampledata import write_blob_files

root = Path("demo_experiment")
root.mkdir(exist_ok=True)
write_blob_files(root / "easy.csv", root / "easy.schema.json",
                 240, n_features=3, n_classes=2, separation=3.0, seed=11)
write_blob_files(root / "hard.csv", root / "hard.schema.json",
                 240, n_features=3, n_classes=2, separation=0.8, seed=12)

cfg = ExperimentConfig.from_dict(
    {
        "datasets": [
            {"id": "easy", "data": "easy.csv", "schema": "easy.schema.json"},
            {"id": "hard", "data": "hard.csv", "schema": "hard.schema.json"},
        ],
        "k_folds": 10,
        "ratio_grid": [0.5, 1.0, 5.0],
        "train_losses": ["ce", "closs", "poly1"],
        "max_epochs": 150,
        "seed": 3,
        "workers": 2,
        "output_dir": str(root / "out"),
    },
    base_dir=str(root),
)

counts = run_experiment(cfg, resume=True)
print("runs:", json.dumps(counts))

bundle, _ = analyze_run_dir(root / "out")
paths = emit_report(bundle, root / "out" / "reports")
print("reports:", ", ".join(p.name for p in paths))
print(f"datasets by increasing separability: {bundle.dataset_order}\n")

print(f"{'loss':<8}{'regime':<10}{'ce':>8}{'closs':>8}{'poly1':>8}{'acc':>8}")
for row in bundle.acceptance_rows:
    print(f"{row['train_loss']:<8}{row['regime']:<10}"
          f"{row['ce_percent']:>8.1f}{row['closs_percent']:>8.1f}"
          f"{row['poly1_percent']:>8.1f}{row['accuracy_percent']:>8.1f}")

holds = all(f["holds"] for f in directional_findings(bundle))
print(f"\naccuracy criterion <= best loss criterion in every cell: {holds}")
