"""Validation-criterion algebra: three classification losses, their gradients
with respect to logits, and accuracy.

All loss values are means over the batch, so gradient magnitudes do not scale
with batch size. Gradients are exact derivatives through the shared softmax
output layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LOSS_KINDS",
    "LossSpec",
    "MetricVector",
    "PROB_FLOOR",
    "accuracy",
    "ce_value_grad",
    "closs_value_grad",
    "default_specs",
    "evaluate_all",
    "loss_value_grad",
    "poly1_value_grad",
    "softmax",
]

LOSS_KINDS = ("ce", "closs", "poly1")

# Floor applied inside logarithms only; gradients use the exact softmax form.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossSpec:
    """A named training/validation loss with its hyperparameters.

    sigma and beta apply to the correntropy loss only; epsilon to Poly-1 only.
    """

    kind: str
    sigma: float = 0.5
    beta: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    def to_dict(self) -> dict:
        if self.kind == "closs":
            return {"kind": self.kind, "sigma": self.sigma, "beta": self.beta}
        if self.kind == "poly1":
            return {"kind": self.kind, "epsilon": self.epsilon}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "LossSpec":
        return cls(
            kind=d["kind"],
            sigma=float(d.get("sigma", 0.5)),
            beta=float(d.get("beta", 1.0)),
            epsilon=float(d.get("epsilon", 1.0)),
        )


def default_specs() -> tuple[LossSpec, ...]:
    return (LossSpec("ce"), LossSpec("closs"), LossSpec("poly1"))


@dataclass(frozen=True)
class MetricVector:
    """The four validation criteria evaluated on one batch."""

    ce: float
    closs: float
    poly1: float
    acc: float


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise class probabilities, computed with max-subtraction for stability."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise ValueError("softmax requires finite logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_probs_labels(probs: np.ndarray, labels: np.ndarray):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2:
        raise ValueError("probs must be 2-D (batch x classes)")
    if probs.shape[0] == 0:
        raise ValueError("empty batch")
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels must be a vector matching the batch size")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError("label out of range")
    return probs, labels.astype(np.intp)


def _onehot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    t = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    t[np.arange(labels.shape[0]), labels] = 1.0
    return t


def ce_value_grad(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits."""
    probs, labels = _check_probs_labels(probs, labels)
    n = probs.shape[0]
    p_true = probs[np.arange(n), labels]
    value = float(np.mean(-np.log(np.maximum(p_true, PROB_FLOOR))))
    grad = (probs - _onehot(labels, probs.shape[1])) / n
    return value, grad


def poly1_value_grad(
    probs: np.ndarray, labels: np.ndarray, epsilon: float = 1.0
) -> tuple[float, np.ndarray]:
    """Mean Poly-1 loss (cross-entropy plus epsilon times the true-class miss)."""
    if epsilon == 0.0:
        # Exact reduction: shares the cross-entropy code path bit for bit.
        return ce_value_grad(probs, labels)
    probs, labels = _check_probs_labels(probs, labels)
    n = probs.shape[0]
    p_true = probs[np.arange(n), labels]
    value = float(np.mean(-np.log(np.maximum(p_true, PROB_FLOOR)) + epsilon * (1.0 - p_true)))
    grad = (1.0 + epsilon * p_true)[:, None] * (probs - _onehot(labels, probs.shape[1])) / n
    return value, grad


def closs_value_grad(
    probs: np.ndarray, labels: np.ndarray, sigma: float = 0.5, beta: float = 1.0
) -> tuple[float, np.ndarray]:
    """Mean correntropy loss, one class versus the rest over {0,1} one-hot targets.

    Per sample: beta * sum_k (1 - exp(-(t_k - m_k)^2 / (2 sigma^2))). The
    gradient flows through the full softmax Jacobian.
    """
    probs, labels = _check_probs_labels(probs, labels)
    n = probs.shape[0]
    t = _onehot(labels, probs.shape[1])
    u = t - probs
    kern = np.exp(-(u * u) / (2.0 * sigma * sigma))
    value = float(np.mean(beta * np.sum(1.0 - kern, axis=1)))
    # d/dm of the per-sample term, then the softmax Jacobian, then the batch mean.
    g_m = -beta * (u / (sigma * sigma)) * kern / n
    grad = probs * (g_m - np.sum(g_m * probs, axis=1, keepdims=True))
    return value, grad


def loss_value_grad(
    spec: LossSpec, probs: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    if spec.kind == "ce":
        return ce_value_grad(probs, labels)
    if spec.kind == "poly1":
        return poly1_value_grad(probs, labels, spec.epsilon)
    return closs_value_grad(probs, labels, spec.sigma, spec.beta)


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax matches the label; ties go to the lowest class index."""
    probs, labels = _check_probs_labels(probs, labels)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def evaluate_all(
    probs: np.ndarray, labels: np.ndarray, specs: tuple[LossSpec, ...] | None = None
) -> MetricVector:
    """All four criteria on one batch in a single pass (values only, no gradients)."""
    by_kind = {s.kind: s for s in (specs if specs is not None else default_specs())}
    sigma = by_kind.get("closs", LossSpec("closs")).sigma
    beta = by_kind.get("closs", LossSpec("closs")).beta
    epsilon = by_kind.get("poly1", LossSpec("poly1")).epsilon

    probs, labels = _check_probs_labels(probs, labels)
    n = probs.shape[0]
    p_true = probs[np.arange(n), labels]
    neglog = -np.log(np.maximum(p_true, PROB_FLOOR))
    ce = float(np.mean(neglog))
    if epsilon == 0.0:
        poly1 = ce
    else:
        poly1 = float(np.mean(neglog + epsilon * (1.0 - p_true)))
    u = _onehot(labels, probs.shape[1]) - probs
    kern = np.exp(-(u * u) / (2.0 * sigma * sigma))
    closs = float(np.mean(beta * np.sum(1.0 - kern, axis=1)))
    acc = float(np.mean(np.argmax(probs, axis=1) == labels))
    return MetricVector(ce=ce, closs=closs, poly1=poly1, acc=acc)
