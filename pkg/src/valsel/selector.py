"""Trajectory analysis: post-hoc checkpoint selection, early stopping with
patience, and the test-optimal benchmark.

Selection operates purely on recorded per-epoch scalars; no weights are kept,
so any rule can be replayed offline from a persisted trajectory.

Improvement is strict everywhere: a tie with the best value so far counts as
a non-improving epoch, so plateaus can trigger a patience stop. All ties in
arg-selection break toward the earliest epoch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import LossSpec

__all__ = [
    "CRITERIA",
    "SelectionResult",
    "SelectionRule",
    "Trajectory",
    "crossed_selection",
    "early_stop_select",
    "post_hoc_select",
    "standard_rules",
    "test_optimal",
]

# Validation criteria a rule can monitor. Loss criteria improve downward,
# accuracy improves upward.
CRITERIA = ("val_ce", "val_closs", "val_poly1", "val_acc")
_HIGHER_IS_BETTER = {"val_ce": False, "val_closs": False, "val_poly1": False, "val_acc": True}


@dataclass(frozen=True)
class Trajectory:
    """Per-epoch record of one training run (epochs are contiguous from 1).

    Validation carries all four criteria; the test side carries the same four
    so the test-optimal benchmark and crossed analyses need nothing else.
    """

    val_ce: np.ndarray
    val_closs: np.ndarray
    val_poly1: np.ndarray
    val_acc: np.ndarray
    test_ce: np.ndarray
    test_closs: np.ndarray
    test_poly1: np.ndarray
    test_acc: np.ndarray
    train_acc: np.ndarray
    dataset_id: str | None = None
    fold: int | None = None
    train_loss: LossSpec | None = None
    ratio: float | None = None
    seed: int | None = None

    def __post_init__(self):
        n = self.val_ce.shape[0]
        if n < 1:
            raise ValueError("trajectory must contain at least one epoch")
        for name in (
            "val_closs",
            "val_poly1",
            "val_acc",
            "test_ce",
            "test_closs",
            "test_poly1",
            "test_acc",
            "train_acc",
        ):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"trajectory field {name} has mismatched length")

    @property
    def n_epochs(self) -> int:
        return int(self.val_ce.shape[0])

    def criterion_values(self, criterion: str) -> np.ndarray:
        if criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {criterion!r}")
        return getattr(self, criterion)


@dataclass(frozen=True)
class SelectionRule:
    """A monitored criterion plus a stopping regime (patience=None is post-hoc)."""

    criterion: str
    patience: int | None = None

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1")

    @property
    def regime(self) -> str:
        return "post_hoc" if self.patience is None else f"T={self.patience}"

    @property
    def name(self) -> str:
        return f"{self.criterion}|{self.regime}"


def standard_rules(patiences: tuple[int, ...] = (10, 50)) -> tuple[SelectionRule, ...]:
    """The fully crossed rule set: every criterion under post-hoc and each patience."""
    rules = [SelectionRule(c) for c in CRITERIA]
    for t in patiences:
        rules.extend(SelectionRule(c, t) for c in CRITERIA)
    return tuple(rules)


@dataclass(frozen=True)
class SelectionResult:
    """The checkpoint a rule picked, next to the test-optimal benchmark."""

    criterion: str
    patience: int | None
    selected_epoch: int
    halt_epoch: int | None
    halted: bool
    selected_val_value: float
    selected_test_acc: float
    optimal_test_epoch: int
    optimal_test_acc: float

    @property
    def regret(self) -> float:
        return self.optimal_test_acc - self.selected_test_acc

    def selection_fields(self) -> tuple:
        """Everything but the rule identity, for field-by-field comparisons."""
        return (
            self.selected_epoch,
            self.halt_epoch,
            self.halted,
            self.selected_val_value,
            self.selected_test_acc,
            self.optimal_test_epoch,
            self.optimal_test_acc,
        )


def test_optimal(traj: Trajectory) -> tuple[int, float]:
    """Epoch of maximum test accuracy (earliest tie) and that accuracy."""
    i = int(np.argmax(traj.test_acc))
    return i + 1, float(traj.test_acc[i])


def _result(traj, criterion, patience, sel_idx, halt_epoch, halted) -> SelectionResult:
    opt_epoch, opt_acc = test_optimal(traj)
    return SelectionResult(
        criterion=criterion,
        patience=patience,
        selected_epoch=sel_idx + 1,
        halt_epoch=halt_epoch,
        halted=halted,
        selected_val_value=float(traj.criterion_values(criterion)[sel_idx]),
        selected_test_acc=float(traj.test_acc[sel_idx]),
        optimal_test_epoch=opt_epoch,
        optimal_test_acc=opt_acc,
    )


def post_hoc_select(traj: Trajectory, criterion: str) -> SelectionResult:
    """Retrospective selection over the whole trajectory."""
    values = traj.criterion_values(criterion)
    idx = int(np.argmax(values)) if _HIGHER_IS_BETTER[criterion] else int(np.argmin(values))
    return _result(traj, criterion, None, idx, None, False)


def early_stop_select(traj: Trajectory, criterion: str, patience: int) -> SelectionResult:
    """Simulated early stopping: halt at the first epoch where the best-so-far
    checkpoint has gone `patience` consecutive epochs without strict improvement.

    If the condition never fires within the trajectory, selection falls back
    to post-hoc over the full recording (halted=False).
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    values = traj.criterion_values(criterion)
    higher = _HIGHER_IS_BETTER[criterion]
    best = values[0]
    best_idx = 0
    streak = 0
    for i in range(1, values.shape[0]):
        v = values[i]
        if (v > best) if higher else (v < best):
            best, best_idx, streak = v, i, 0
        else:
            streak += 1
            if streak == patience:
                return _result(traj, criterion, patience, best_idx, i + 1, True)
    return _result(traj, criterion, patience, best_idx, None, False)


def crossed_selection(
    traj: Trajectory, rules: tuple[SelectionRule, ...]
) -> list[SelectionResult]:
    """Apply every rule to one trajectory; all results share the same benchmark."""
    out = []
    for rule in rules:
        if rule.patience is None:
            out.append(post_hoc_select(traj, rule.criterion))
        else:
            out.append(early_stop_select(traj, rule.criterion, rule.patience))
    return out
