"""The per-group hypothesis pipeline on hand-made fold accuracies.

Three paired samples of selected vs test-optimal accuracies over 10 folds:
ties everywhere, a small noisy deficit, and a large constant deficit. The
pipeline gates on Shapiro-Wilk normality, then applies the paired one-tailed
t-test or the exact one-tailed Wilcoxon signed-rank test.

    python demos/04_hypothesis_pipeline.py
"""

import numpy as np

from valsel.stattests import PairedSample, compare_to_optimal

optimal = np.array([0.92, 0.90, 0.91, 0.93, 0.90, 0.92, 0.94, 0.91, 0.90, 0.92])

cases = {
    "ties everywhere": optimal.copy(),
    "small noisy deficit": optimal - np.array(
        [0.01, 0.02, 0.00, 0.01, 0.03, 0.01, 0.02, 0.00, 0.01, 0.02]
    ),
    "constant 0.1 deficit": optimal - 0.1,
}

for name, selected in cases.items():
    outcome = compare_to_optimal(PairedSample(selected, optimal), alpha=0.05)
    gate = "degenerate" if outcome.normality_p is None else f"{outcome.normality_p:.3f}"
    verdict = "reject H0 (selected below optimal)" if outcome.reject else "accept H0"
    print(f"{name:<22} normality p={gate:<10} -> {outcome.test_used:<8} "
          f"p={outcome.p_value:.5f}  {verdict}")
