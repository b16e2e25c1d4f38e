"""Train one shallow network and replay every checkpoint-selection rule.

Trains a ratio-sized single-hidden-layer ReLU net on overlapping Gaussian
blobs, then shows which epoch each (criterion, regime) rule picks and how far
each pick falls from the best test accuracy seen during training.

    python demos/03_train_and_select.py
"""

from valsel.criteria import LossSpec
from valsel.datapipe import apply_zscore, fit_zscore, stratified_kfold
from valsel.numkernel import RngState
from valsel.sampledata import blob_dataset
from valsel.selector import crossed_selection, standard_rules, test_optimal
from valsel.shallownet import (
    ModelConfig,
    Split,
    TrainConfig,
    hidden_size_for_ratio,
    run_training,
)

ds = blob_dataset(360, n_features=4, n_classes=2, separation=1.2, seed=9)
plan = stratified_kfold(ds, k=10, rng=RngState(1))
train_idx, val_idx, test_idx = plan.splits[0]
stats = fit_zscore(ds, train_idx)
z = apply_zscore(ds, stats)
split = Split(z.X[train_idx], z.y[train_idx], z.X[val_idx], z.y[val_idx],
              z.X[test_idx], z.y[test_idx])

ratio = 1.0
hidden = hidden_size_for_ratio(ratio, ds.n_features, ds.n_classes, train_idx.size)
mc = ModelConfig(ds.n_features, hidden, ds.n_classes)
print(f"model: {ds.n_features}-{hidden}-{ds.n_classes} "
      f"({mc.param_count} params for {train_idx.size} training samples, r={ratio})")

tc = TrainConfig(lr=0.01, batch_size=64, max_epochs=600, seed=5)
traj = run_training(split, LossSpec("ce"), mc, tc)
opt_epoch, opt_acc = test_optimal(traj)
print(f"trained {traj.n_epochs} epochs; test-optimal epoch {opt_epoch} "
      f"with accuracy {opt_acc:.3f}\n")

print(f"{'criterion':<10} {'regime':<9} {'epoch':>6} {'halt':>6} {'test acc':>9} {'regret':>8}")
for rule, res in zip(standard_rules((10, 50)), crossed_selection(traj, standard_rules((10, 50)))):
    halt = res.halt_epoch if res.halt_epoch is not None else "-"
    print(f"{rule.criterion:<10} {rule.regime:<9} {res.selected_epoch:>6} "
          f"{str(halt):>6} {res.selected_test_acc:>9.3f} {res.regret:>8.3f}")
