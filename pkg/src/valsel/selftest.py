"""Fast built-in oracle suites: gradients against finite differences, the
selection simulator against a brute-force checker, and the statistical tests
against enumeration, quadrature, and frozen reference values.

Each suite returns (name, passed, detail); the CLI prints one line per suite.
"""

from __future__ import annotations

import numpy as np

from . import oracles
from .criteria import LossSpec, loss_value_grad, softmax
from .datapipe import Dataset, apply_zscore, fit_zscore, gdv
from .numkernel import RngState, matmul
from .selector import Trajectory, early_stop_select, post_hoc_select, test_optimal
from .shallownet import ModelConfig, TrainConfig, forward, init_params, train_epoch
from .stattests import (
    paired_t_one_tailed_less,
    shapiro_wilk,
    wilcoxon_signed_rank_one_tailed_less,
)

__all__ = ["run_selftest"]


def _suite_matmul(rng: np.random.Generator):
    worst = 0.0
    for _ in range(20):
        a = rng.normal(size=(4, 5))
        b = rng.normal(size=(5, 3))
        worst = max(worst, float(np.max(np.abs(matmul(a, b) - oracles.matmul_triple_loop(a, b)))))
    return worst < 1e-12, f"max abs err {worst:.2e}"


def _suite_gradients(rng: np.random.Generator):
    specs = (LossSpec("ce"), LossSpec("poly1", epsilon=1.0), LossSpec("closs", sigma=0.5, beta=1.0))
    worst = 0.0
    for spec in specs:
        for _ in range(10):
            n, k = 4, int(rng.integers(2, 6))
            logits = rng.normal(scale=2.0, size=(n, k))
            labels = rng.integers(0, k, size=n)

            def value(z):
                return loss_value_grad(spec, softmax(z), labels)[0]

            _, grad = loss_value_grad(spec, softmax(logits), labels)
            ref = oracles.finite_diff_loss_grad(value, logits)
            denom = max(float(np.max(np.abs(ref))), 1e-8)
            worst = max(worst, float(np.max(np.abs(grad - ref))) / denom)
    return worst < 1e-4, f"max rel err {worst:.2e}"


def _suite_network_gradient(rng: np.random.Generator):
    # One full-batch SGD step with lr=1 recovers the end-to-end gradient as
    # (params_before - params_after); compare against finite differences.
    worst = 0.0
    checked = 0
    for trial in range(12):
        mc = ModelConfig(3, 4, 3)
        p = init_params(mc, RngState(1000 + trial))
        X = rng.normal(size=(6, 3))
        y = rng.integers(0, 3, size=6)
        spec = LossSpec(("ce", "poly1", "closs")[trial % 3])
        z1 = X @ p.W1 + p.b1
        if np.min(np.abs(z1)) < 1e-3:
            continue  # keep clear of the ReLU kink
        before = p.copy()
        tc = TrainConfig(lr=1.0, batch_size=X.shape[0], max_epochs=1, seed=7)
        train_epoch(p, X, y, spec, tc, RngState(7))
        analytic = [
            before.W1 - p.W1,
            before.b1 - p.b1,
            before.W2 - p.W2,
            before.b2 - p.b2,
        ]

        def value():
            _, probs = forward(before, X)
            return loss_value_grad(spec, probs, y)[0]

        numeric = oracles.finite_diff_param_grads(
            value, [before.W1, before.b1, before.W2, before.b2]
        )
        for a, nref in zip(analytic, numeric):
            denom = max(float(np.max(np.abs(nref))), 1e-8)
            worst = max(worst, float(np.max(np.abs(a - nref))) / denom)
        checked += 1
    return worst < 1e-4 and checked > 0, f"max rel err {worst:.2e} over {checked} nets"


def _random_trajectory(rng: np.random.Generator, n: int) -> Trajectory:
    vals = np.round(rng.normal(size=n).cumsum() + rng.normal(scale=0.3, size=n), 2)
    acc = np.round(rng.uniform(size=n), 2)
    zeros = np.zeros(n)
    return Trajectory(
        val_ce=vals,
        val_closs=zeros,
        val_poly1=zeros,
        val_acc=acc,
        test_ce=zeros,
        test_closs=zeros,
        test_poly1=zeros,
        test_acc=np.round(rng.uniform(size=n), 2),
        train_acc=zeros,
    )


def _suite_selector(rng: np.random.Generator):
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(1, 120))
        traj = _random_trajectory(rng, n)
        for criterion, higher in (("val_ce", False), ("val_acc", True)):
            values = traj.criterion_values(criterion)
            t = int(rng.integers(1, n + 5))
            got = early_stop_select(traj, criterion, t)
            want = oracles.early_stop_brute_force(values, higher, t)
            if (got.selected_epoch, got.halt_epoch, got.halted) != want:
                mismatches += 1
            post = post_hoc_select(traj, criterion)
            if post.selected_epoch != oracles.scan_best_index(values, higher) + 1:
                mismatches += 1
            full = early_stop_select(traj, criterion, n)
            if full.selection_fields() != post.selection_fields():
                mismatches += 1
        opt = test_optimal(traj)
        if opt[0] != oracles.scan_best_index(traj.test_acc, True) + 1:
            mismatches += 1
    return mismatches == 0, f"{mismatches} mismatches over 500 trajectories"


def _suite_wilcoxon(rng: np.random.Generator):
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(3, 13))
        d = np.round(rng.normal(scale=2.0, size=m), 1)
        d = d[d != 0.0]
        if d.size < 3:
            continue
        _, p = wilcoxon_signed_rank_one_tailed_less(d, np.zeros_like(d))
        worst = max(worst, abs(p - oracles.wilcoxon_count_p(d)))
    return worst < 1e-12, f"max |dp| {worst:.2e}"


def _suite_t_test(rng: np.random.Generator):
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(3, 25))
        a = rng.normal(size=n)
        b = a + rng.normal(0.2, 1.0, size=n)
        t, p = paired_t_one_tailed_less(a, b)
        worst = max(worst, abs(p - oracles.t_cdf_quadrature(t, n - 1)))
    return worst < 1e-9, f"max |dp| {worst:.2e}"


def _suite_shapiro(_rng):
    worst = 0.0
    for vec, w_ref, p_ref in oracles.SHAPIRO_REFERENCE_CASES:
        w, p = shapiro_wilk(np.array(vec))
        worst = max(worst, abs(w - w_ref), abs(p - p_ref))
    return worst < 1e-3, f"max |dW|,|dp| {worst:.2e}"


def _suite_zscore_leakage(rng: np.random.Generator):
    X = rng.normal(size=(40, 3))
    y = np.array([0, 1] * 20)
    ds = Dataset(X, y, 2, ("a", "b", "c"), ("0", "1"))
    train_idx = np.arange(25)
    stats = fit_zscore(ds, train_idx)
    X2 = X.copy()
    X2[30:] *= 1000.0
    stats2 = fit_zscore(Dataset(X2, y, 2, ("a", "b", "c"), ("0", "1")), train_idx)
    same = np.array_equal(stats.mean, stats2.mean) and np.array_equal(stats.std, stats2.std)
    Xz = apply_zscore(ds, stats).X
    ok_mean = np.allclose(Xz[train_idx].mean(0), 0.0, atol=1e-9)
    return same and ok_mean, "train-only stats are insensitive to held-out rows"


def _suite_gdv(_rng):
    X = np.array([[-1.0], [-1.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    ds = Dataset(X, y, 2, ("x",), ("a", "b"))
    value = gdv(ds)
    return abs(value - (-1.0)) < 1e-9, f"1-D worked example gives {value:.6f}"


def run_selftest() -> list[tuple[str, bool, str]]:
    suites = (
        ("matmul vs triple loop", _suite_matmul),
        ("loss gradients vs finite differences", _suite_gradients),
        ("network gradients vs finite differences", _suite_network_gradient),
        ("selection rules vs brute force", _suite_selector),
        ("wilcoxon exact vs multiplicity counting", _suite_wilcoxon),
        ("t-test vs quadrature", _suite_t_test),
        ("shapiro-wilk vs frozen references", _suite_shapiro),
        ("z-score leakage firewall", _suite_zscore_leakage),
        ("separability score worked example", _suite_gdv),
    )
    results = []
    for name, fn in suites:
        rng = np.random.default_rng(1234)
        try:
            passed, detail = fn(rng)
        except Exception as e:  # a crashed suite is a failed suite
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        results.append((name, bool(passed), detail))
    return results
