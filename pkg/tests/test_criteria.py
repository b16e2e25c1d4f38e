import math

import numpy as np
import pytest

from valsel.criteria import (
    LossSpec,
    accuracy,
    ce_value_grad,
    closs_value_grad,
    evaluate_all,
    loss_value_grad,
    poly1_value_grad,
    softmax,
)
from valsel.oracles import finite_diff_loss_grad, softmax_naive


def _rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


class TestSoftmax:
    def test_zero_logits_uniform(self):
        p = softmax(np.zeros((2, 4)))
        np.testing.assert_allclose(p, 0.25)

    def test_large_logits_no_overflow(self):
        p = softmax(np.array([[1000.0, 0.0]]))
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p[0], [1.0, 0.0], atol=1e-12)

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(scale=3.0, size=(10, 6))
        np.testing.assert_allclose(softmax(logits), softmax_naive(logits), atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        p = softmax(rng.normal(size=(50, 7)))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            softmax(np.array([[np.inf, 0.0]]))


class TestCrossEntropy:
    def test_perfect_prediction_zero_loss(self):
        probs = np.eye(3)
        value, _ = ce_value_grad(probs, np.array([0, 1, 2]))
        assert value == 0.0

    def test_quarter_probability(self):
        probs = np.array([[0.25, 0.75]])
        value, _ = ce_value_grad(probs, np.array([0]))
        assert abs(value - 1.3862943611198906) < 1e-12  # -ln(1/4)

    def test_probability_floor_prevents_nan(self):
        probs = np.array([[0.0, 1.0]])
        value, grad = ce_value_grad(probs, np.array([0]))
        assert np.isfinite(value) and np.isfinite(grad).all()

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(scale=2.0, size=(5, 4))
        labels = rng.integers(0, 4, size=5)
        _, grad = ce_value_grad(softmax(logits), labels)
        ref = finite_diff_loss_grad(lambda z: ce_value_grad(softmax(z), labels)[0], logits)
        assert _rel_err(grad, ref) < 1e-5


class TestPoly1:
    def test_perfect_prediction_zero(self):
        value, _ = poly1_value_grad(np.eye(2), np.array([0, 1]), epsilon=1.0)
        assert value == 0.0

    def test_half_probability_epsilon_one(self):
        value, _ = poly1_value_grad(np.array([[0.5, 0.5]]), np.array([0]), epsilon=1.0)
        assert abs(value - (0.6931471805599453 + 0.5)) < 1e-12

    def test_epsilon_zero_is_bitwise_cross_entropy(self):
        rng = np.random.default_rng(3)
        probs = softmax(rng.normal(size=(8, 5)))
        labels = rng.integers(0, 5, size=8)
        v0, g0 = poly1_value_grad(probs, labels, epsilon=0.0)
        v1, g1 = ce_value_grad(probs, labels)
        assert v0 == v1
        np.testing.assert_array_equal(g0, g1)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        logits = rng.normal(scale=2.0, size=(5, 3))
        labels = rng.integers(0, 3, size=5)
        _, grad = poly1_value_grad(softmax(logits), labels, epsilon=1.0)
        ref = finite_diff_loss_grad(
            lambda z: poly1_value_grad(softmax(z), labels, epsilon=1.0)[0], logits
        )
        assert _rel_err(grad, ref) < 1e-5

    def test_poly1_at_least_ce_for_nonnegative_epsilon(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            k = int(rng.integers(2, 8))
            n = int(rng.integers(1, 12))
            probs = softmax(rng.normal(scale=2.0, size=(n, k)))
            labels = rng.integers(0, k, size=n)
            ce, _ = ce_value_grad(probs, labels)
            poly, _ = poly1_value_grad(probs, labels, epsilon=1.0)
            assert poly >= ce - 1e-15


class TestCLoss:
    def test_exact_hit_contributes_zero(self):
        value, _ = closs_value_grad(np.array([[1.0, 0.0]]), np.array([0]))
        assert value == 0.0

    def test_total_miss_value(self):
        # Both coordinates miss by 1: per-class term 1 - exp(-2) with sigma=0.5.
        value, _ = closs_value_grad(
            np.array([[0.0, 1.0]]), np.array([0]), sigma=0.5, beta=1.0
        )
        expected = 2.0 * (1.0 - math.exp(-2.0))
        assert abs(value - expected) < 1e-12
        assert abs((1.0 - math.exp(-2.0)) - 0.8646647167633873) < 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        logits = rng.normal(scale=2.0, size=(5, 4))
        labels = rng.integers(0, 4, size=5)
        _, grad = closs_value_grad(softmax(logits), labels, sigma=0.5, beta=1.0)
        ref = finite_diff_loss_grad(
            lambda z: closs_value_grad(softmax(z), labels, sigma=0.5, beta=1.0)[0], logits
        )
        assert _rel_err(grad, ref) < 1e-5

    def test_value_bounded_by_beta_times_classes(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            k = int(rng.integers(2, 9))
            beta = float(rng.uniform(0.5, 3.0))
            probs = softmax(rng.normal(scale=4.0, size=(6, k)))
            labels = rng.integers(0, k, size=6)
            value, _ = closs_value_grad(probs, labels, sigma=0.5, beta=beta)
            assert 0.0 <= value <= beta * k

    def test_scalar_kernel_penalty_increases_with_miss_distance(self):
        sigma = 0.5
        u = np.linspace(0.0, 2.0, 101)
        penalty = 1.0 - np.exp(-(u * u) / (2 * sigma * sigma))
        assert np.all(np.diff(penalty) > 0)
        np.testing.assert_allclose(
            1.0 - np.exp(-(u * u) / (2 * sigma * sigma)),
            1.0 - np.exp(-((-u) ** 2) / (2 * sigma * sigma)),
        )


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy(np.eye(3), np.array([0, 1, 2])) == 1.0

    def test_half_correct(self):
        probs = np.array([[0.9, 0.1], [0.9, 0.1]])
        assert accuracy(probs, np.array([0, 1])) == 0.5

    def test_tie_breaks_to_lowest_class_index(self):
        probs = np.array([[0.5, 0.5]])
        assert accuracy(probs, np.array([0])) == 1.0
        assert accuracy(probs, np.array([1])) == 0.0

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            accuracy(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_invariant_under_monotone_logit_transform(self):
        rng = np.random.default_rng(8)
        logits = rng.normal(size=(20, 5))
        labels = rng.integers(0, 5, size=20)
        base = accuracy(softmax(logits), labels)
        warped = accuracy(softmax(3.0 * logits + 1.0), labels)
        assert base == warped


class TestEvaluateAll:
    def test_perfect_predictions(self):
        m = evaluate_all(np.eye(4), np.array([0, 1, 2, 3]))
        assert (m.ce, m.closs, m.poly1, m.acc) == (0.0, 0.0, 0.0, 1.0)

    def test_consistent_with_individual_losses(self):
        rng = np.random.default_rng(9)
        probs = softmax(rng.normal(size=(10, 3)))
        labels = rng.integers(0, 3, size=10)
        m = evaluate_all(probs, labels)
        assert m.ce == ce_value_grad(probs, labels)[0]
        assert m.closs == closs_value_grad(probs, labels)[0]
        assert m.poly1 == poly1_value_grad(probs, labels, 1.0)[0]
        assert m.acc == accuracy(probs, labels)

    def test_respects_loss_spec_parameters(self):
        rng = np.random.default_rng(10)
        probs = softmax(rng.normal(size=(6, 3)))
        labels = rng.integers(0, 3, size=6)
        specs = (LossSpec("closs", sigma=1.5, beta=2.0), LossSpec("poly1", epsilon=0.25))
        m = evaluate_all(probs, labels, specs)
        assert m.closs == closs_value_grad(probs, labels, sigma=1.5, beta=2.0)[0]
        assert m.poly1 == poly1_value_grad(probs, labels, epsilon=0.25)[0]


class TestLossSpec:
    def test_defaults(self):
        spec = LossSpec("closs")
        assert (spec.sigma, spec.beta, spec.epsilon) == (0.5, 1.0, 1.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "nope"},
            {"kind": "closs", "sigma": 0.0},
            {"kind": "closs", "beta": -1.0},
            {"kind": "poly1", "epsilon": -0.1},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            LossSpec(**kwargs)

    def test_roundtrip(self):
        spec = LossSpec("closs", sigma=0.7, beta=2.0)
        assert LossSpec.from_dict(spec.to_dict()) == spec


def test_all_gradients_match_finite_differences_across_class_counts():
    rng = np.random.default_rng(11)
    specs = (LossSpec("ce"), LossSpec("poly1"), LossSpec("closs"))
    for k in range(2, 11):
        for spec in specs:
            logits = rng.normal(scale=2.0, size=(4, k))
            labels = rng.integers(0, k, size=4)
            _, grad = loss_value_grad(spec, softmax(logits), labels)
            ref = finite_diff_loss_grad(
                lambda z: loss_value_grad(spec, softmax(z), labels)[0], logits
            )
            assert _rel_err(grad, ref) < 1e-4
