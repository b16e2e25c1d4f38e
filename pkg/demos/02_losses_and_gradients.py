"""Compare the three training losses on the same predictions.

Shows how cross-entropy, Poly-1, and the correntropy loss score a batch as
the predicted probability of the true class degrades, and verifies one
analytic gradient against central finite differences.

    python demos/02_losses_and_gradients.py
"""

import numpy as np

from valsel.criteria import (
    LossSpec,
    ce_value_grad,
    closs_value_grad,
    evaluate_all,
    loss_value_grad,
    poly1_value_grad,
    softmax,
)
from valsel.oracles import finite_diff_loss_grad

print(f"{'p(true class)':>14} {'ce':>8} {'poly1':>8} {'closs':>8}")
for p_true in (0.99, 0.9, 0.7, 0.5, 0.3, 0.1, 0.01):
    probs = np.array([[p_true, 1.0 - p_true]])
    labels = np.array([0])
    ce, _ = ce_value_grad(probs, labels)
    poly, _ = poly1_value_grad(probs, labels, epsilon=1.0)
    closs, _ = closs_value_grad(probs, labels, sigma=0.5, beta=1.0)
    print(f"{p_true:>14.2f} {ce:>8.4f} {poly:>8.4f} {closs:>8.4f}")

# All four validation criteria in one call, with the standard parameters.
rng = np.random.default_rng(0)
logits = rng.normal(scale=1.5, size=(128, 4))
labels = rng.integers(0, 4, size=128)
metrics = evaluate_all(softmax(logits), labels)
print(f"\nrandom batch: ce={metrics.ce:.4f} closs={metrics.closs:.4f} "
      f"poly1={metrics.poly1:.4f} acc={metrics.acc:.3f}")

# Gradient check: analytic vs central finite differences.
spec = LossSpec("closs", sigma=0.5, beta=1.0)
small = rng.normal(size=(4, 3))
small_labels = rng.integers(0, 3, size=4)
_, analytic = loss_value_grad(spec, softmax(small), small_labels)
numeric = finite_diff_loss_grad(
    lambda z: loss_value_grad(spec, softmax(z), small_labels)[0], small
)
err = np.max(np.abs(analytic - numeric)) / np.max(np.abs(numeric))
print(f"correntropy-loss gradient vs finite differences: rel err {err:.2e}")
