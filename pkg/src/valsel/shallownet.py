"""Single-hidden-layer ReLU classifiers sized by a parameter-to-sample ratio,
trained with plain minibatch SGD, emitting a per-epoch metric trajectory.

The training loop never looks at validation or test data: held-out sets are
only ever passed to full-batch evaluation at the end of each epoch, and the
optional perfect-fit stop reads training accuracy alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import LossSpec, accuracy, evaluate_all, loss_value_grad, softmax
from .errors import DivergenceError
from .numkernel import RngState, shuffled_indices
from .selector import Trajectory

__all__ = [
    "DEFAULT_RATIO_GRID",
    "ModelConfig",
    "Params",
    "Split",
    "TrainConfig",
    "forward",
    "hidden_size_for_ratio",
    "init_params",
    "run_training",
    "train_epoch",
]

# Capacity grid spanning under- to over-parameterized regimes (r = params / samples).
DEFAULT_RATIO_GRID = (0.3, 0.5, 0.7, 0.8, 1.0, 1.2, 5.0, 10.0, 50.0)


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    hidden: int
    n_classes: int

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden < 1 or self.n_classes < 2:
            raise ValueError("need input_dim >= 1, hidden >= 1, n_classes >= 2")

    @property
    def param_count(self) -> int:
        return (self.input_dim + 1) * self.hidden + (self.hidden + 1) * self.n_classes

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "n_classes": self.n_classes,
        }


@dataclass(frozen=True)
class TrainConfig:
    """SGD settings; the perfect-fit stop ends a run after `perfect_fit_epochs`
    consecutive epochs at training accuracy 1.0."""

    lr: float = 0.01
    batch_size: int = 64
    max_epochs: int = 20_000
    seed: int = 0
    perfect_fit_stop: bool = True
    perfect_fit_epochs: int = 10

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.perfect_fit_epochs < 1:
            raise ValueError("batch_size, max_epochs, perfect_fit_epochs must be >= 1")


@dataclass
class Params:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def copy(self) -> "Params":
        return Params(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def all_finite(self) -> bool:
        return bool(
            np.isfinite(self.W1).all()
            and np.isfinite(self.b1).all()
            and np.isfinite(self.W2).all()
            and np.isfinite(self.b2).all()
        )


@dataclass(frozen=True)
class Split:
    """Disjoint train/val/test arrays, already normalized with train-only stats."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def hidden_size_for_ratio(r: float, input_dim: int, n_classes: int, n_train: int) -> int:
    """Hidden width whose parameter count lands closest to r * n_train (ties -> smaller)."""
    if r <= 0:
        raise ValueError("ratio must be > 0")
    if input_dim < 1 or n_classes < 1 or n_train < 1:
        raise ValueError("input_dim, n_classes, n_train must be >= 1")
    target = r * n_train
    per_unit = input_dim + 1 + n_classes

    def count(h: int) -> int:
        return (input_dim + 1) * h + (h + 1) * n_classes

    h_real = (target - n_classes) / per_unit
    candidates = sorted({max(1, int(np.floor(h_real))), max(1, int(np.ceil(h_real)))})
    return min(candidates, key=lambda h: (abs(count(h) - target), h))


def init_params(cfg: ModelConfig, rng: RngState) -> Params:
    """He-style normal initialization: Var(W1)=2/d, Var(W2)=2/H, zero biases."""
    W1 = rng.normal((cfg.input_dim, cfg.hidden), scale=np.sqrt(2.0 / cfg.input_dim))
    W2 = rng.normal((cfg.hidden, cfg.n_classes), scale=np.sqrt(2.0 / cfg.hidden))
    return Params(
        W1=W1,
        b1=np.zeros(cfg.hidden),
        W2=W2,
        b2=np.zeros(cfg.n_classes),
    )


def _forward_cached(p: Params, X: np.ndarray, epoch: int = 0):
    # Overflow here is the divergence signal, not a warning condition.
    with np.errstate(over="ignore", invalid="ignore"):
        z1 = X @ p.W1 + p.b1
        h = np.maximum(z1, 0.0)
        logits = h @ p.W2 + p.b2
    if not np.isfinite(logits).all():
        raise DivergenceError(epoch, "non-finite activations")
    return z1, h, logits


def forward(p: Params, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits and softmax probabilities for a batch."""
    _, _, logits = _forward_cached(p, X)
    return logits, softmax(logits)


def train_epoch(
    p: Params,
    X: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    tc: TrainConfig,
    rng: RngState,
    epoch: int = 0,
) -> Params:
    """One SGD pass over a fresh shuffle; the final partial minibatch is included.

    The loss gradient is taken with respect to the logits and backpropagated
    through the linear layers and the ReLU (subgradient 0 at 0).
    """
    n = X.shape[0]
    order = shuffled_indices(rng, n)
    lr = tc.lr
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, tc.batch_size):
            idx = order[start : start + tc.batch_size]
            Xb = X[idx]
            yb = y[idx]
            z1, h, logits = _forward_cached(p, Xb, epoch)
            probs = softmax(logits)
            _, g_logits = loss_value_grad(loss, probs, yb)
            g_h = g_logits @ p.W2.T
            g_h[z1 <= 0.0] = 0.0
            p.W2 -= lr * (h.T @ g_logits)
            p.b2 -= lr * g_logits.sum(axis=0)
            p.W1 -= lr * (Xb.T @ g_h)
            p.b1 -= lr * g_h.sum(axis=0)
    if not p.all_finite():
        raise DivergenceError(epoch, "non-finite parameter")
    return p


def run_training(
    split: Split,
    loss: LossSpec,
    mc: ModelConfig,
    tc: TrainConfig,
    metric_specs: tuple[LossSpec, ...] | None = None,
    dataset_id: str | None = None,
    fold: int | None = None,
    ratio: float | None = None,
    return_params: bool = False,
):
    """Train for up to tc.max_epochs, recording all validation criteria, the
    test-side metrics, and training accuracy at the end of every epoch.

    Divergence propagates as DivergenceError. Returns the Trajectory, or
    (Trajectory, Params) when return_params is set.
    """
    root = RngState(tc.seed)
    p = init_params(mc, root.derive("init"))
    shuffle_rng = root.derive("shuffle")

    cols: dict[str, list[float]] = {
        k: []
        for k in (
            "val_ce",
            "val_closs",
            "val_poly1",
            "val_acc",
            "test_ce",
            "test_closs",
            "test_poly1",
            "test_acc",
            "train_acc",
        )
    }
    perfect_streak = 0
    for epoch in range(1, tc.max_epochs + 1):
        train_epoch(p, split.X_train, split.y_train, loss, tc, shuffle_rng, epoch)

        _, train_probs = forward(p, split.X_train)
        train_acc = accuracy(train_probs, split.y_train)
        _, val_probs = forward(p, split.X_val)
        val_m = evaluate_all(val_probs, split.y_val, metric_specs)
        _, test_probs = forward(p, split.X_test)
        test_m = evaluate_all(test_probs, split.y_test, metric_specs)

        cols["val_ce"].append(val_m.ce)
        cols["val_closs"].append(val_m.closs)
        cols["val_poly1"].append(val_m.poly1)
        cols["val_acc"].append(val_m.acc)
        cols["test_ce"].append(test_m.ce)
        cols["test_closs"].append(test_m.closs)
        cols["test_poly1"].append(test_m.poly1)
        cols["test_acc"].append(test_m.acc)
        cols["train_acc"].append(train_acc)

        if tc.perfect_fit_stop:
            perfect_streak = perfect_streak + 1 if train_acc == 1.0 else 0
            if perfect_streak >= tc.perfect_fit_epochs:
                break

    traj = Trajectory(
        **{k: np.asarray(v, dtype=np.float64) for k, v in cols.items()},
        dataset_id=dataset_id,
        fold=fold,
        train_loss=loss,
        ratio=ratio,
        seed=tc.seed,
    )
    return (traj, p) if return_params else traj
