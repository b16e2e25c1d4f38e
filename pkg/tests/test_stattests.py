import math

import numpy as np
import pytest

from valsel.errors import DegenerateDataError
from valsel.oracles import (
    SHAPIRO_REFERENCE_CASES,
    t_cdf_quadrature,
    wilcoxon_count_p,
)
from valsel.stattests import (
    GroupKey,
    PairedSample,
    acceptance_rate,
    alpha_sweep,
    compare_to_optimal,
    decide_at,
    normal_cdf,
    normal_ppf,
    paired_t_one_tailed_less,
    ratio_breakdown,
    regularized_incomplete_beta,
    shapiro_wilk,
    t_cdf,
    wilcoxon_signed_rank_one_tailed_less,
)


class TestSpecialFunctions:
    def test_normal_ppf_known_points(self):
        assert abs(normal_ppf(0.5)) < 1e-15
        assert abs(normal_ppf(0.975) - 1.959963984540054) < 1e-12
        assert abs(normal_ppf(0.025) + 1.959963984540054) < 1e-12
        assert abs(normal_ppf(0.841344746068543) - 1.0) < 1e-9

    def test_normal_ppf_roundtrips_through_cdf(self):
        for p in (1e-10, 1e-4, 0.2, 0.5, 0.9, 1 - 1e-6):
            assert abs(normal_cdf(normal_ppf(p)) - p) < 1e-12

    def test_ppf_domain(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                normal_ppf(bad)

    def test_incomplete_beta_endpoints_and_symmetry(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b, x = rng.uniform(0.5, 20), rng.uniform(0.5, 20), rng.uniform(0.01, 0.99)
            left = regularized_incomplete_beta(a, b, x)
            right = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x)
            assert abs(left - right) < 1e-12

    def test_incomplete_beta_uniform_case(self):
        # I_x(1, 1) is the identity.
        for x in (0.1, 0.37, 0.9):
            assert abs(regularized_incomplete_beta(1.0, 1.0, x) - x) < 1e-14

    def test_t_cdf_against_quadrature(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            df = int(rng.integers(1, 60))
            t = float(rng.normal(scale=3.0))
            assert abs(t_cdf(t, df) - t_cdf_quadrature(t, df)) < 1e-9

    def test_t_cdf_symmetry_is_exact(self):
        for t, df in ((1.3, 4), (0.2, 9), (5.0, 2)):
            assert t_cdf(t, df) + t_cdf(-t, df) == 1.0


class TestShapiroWilk:
    def test_normal_quantile_grid_scores_high(self):
        x = np.array([normal_ppf((i - 0.5) / 10) for i in range(1, 11)])
        w, p = shapiro_wilk(x)
        assert w > 0.95
        assert p > 0.5

    def test_heavy_outlier_rejected(self):
        w, p = shapiro_wilk([1, 1, 1, 1, 1, 1, 1, 1, 1, 100])
        assert p < 0.01

    def test_constant_input_degenerate(self):
        with pytest.raises(DegenerateDataError):
            shapiro_wilk([2.0, 2.0, 2.0, 2.0])

    @pytest.mark.parametrize("n", [2, 5001])
    def test_sample_size_bounds(self, n):
        with pytest.raises(ValueError):
            shapiro_wilk(np.arange(float(n)))

    def test_frozen_reference_values(self):
        for vec, w_ref, p_ref in SHAPIRO_REFERENCE_CASES:
            w, p = shapiro_wilk(np.array(vec))
            assert abs(w - w_ref) < 1e-6
            assert abs(p - p_ref) < 1e-6

    def test_n3_exact_formula(self):
        w, p = shapiro_wilk([0.0, 1.0, 3.0])
        assert 0.75 <= w <= 1.0
        assert 0.0 <= p <= 1.0


class TestPairedT:
    def test_symmetric_differences_give_half(self):
        a = np.array([1.0, 0.0, 1.0, 0.0])
        b = np.array([0.0, 1.0, 0.0, 1.0])
        t, p = paired_t_one_tailed_less(a, b)
        assert t == 0.0
        assert p == 0.5

    def test_all_zero_differences_accept(self):
        a = np.array([0.3, 0.4, 0.5])
        t, p = paired_t_one_tailed_less(a, a.copy())
        assert (t, p) == (0.0, 1.0)

    def test_constant_negative_shift_gives_zero_p(self):
        a = np.array([0.25, 0.5, 0.75])  # dyadic values keep d exactly constant
        t, p = paired_t_one_tailed_less(a, a + 0.5)
        assert t == -math.inf and p == 0.0

    def test_constant_positive_shift_gives_one(self):
        a = np.array([0.25, 0.5, 0.75])
        t, p = paired_t_one_tailed_less(a, a - 0.5)
        assert t == math.inf and p == 1.0

    def test_p_matches_quadrature_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(3, 25))
            a = rng.normal(size=n)
            b = a + rng.normal(0.3, 1.0, size=n)
            t, p = paired_t_one_tailed_less(a, b)
            assert abs(p - t_cdf_quadrature(t, n - 1)) < 1e-9

    def test_one_tailed_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 20))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            if np.std(a - b, ddof=1) == 0.0:
                continue
            assert abs(paired_t_one_tailed_less(a, b)[1]
                       + paired_t_one_tailed_less(b, a)[1] - 1.0) < 1e-12

    def test_unequal_lengths_rejected(self):
        with pytest.raises(ValueError):
            paired_t_one_tailed_less(np.zeros(3), np.zeros(4))


class TestWilcoxon:
    def test_all_negative_differences(self):
        w, p = wilcoxon_signed_rank_one_tailed_less(
            np.array([-1.0, -2.0, -3.0]), np.zeros(3)
        )
        assert w == 0.0
        assert p == 0.125  # one of the 2^3 sign patterns

    def test_all_positive_differences(self):
        w, p = wilcoxon_signed_rank_one_tailed_less(
            np.array([1.0, 2.0, 3.0]), np.zeros(3)
        )
        assert w == 6.0
        assert p == 1.0

    def test_zero_differences_dropped(self):
        a = np.array([0.5, 0.5, -1.0, -2.0, -3.0])
        b = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
        w, p = wilcoxon_signed_rank_one_tailed_less(a, b)
        assert w == 0.0
        assert p == 0.125

    def test_all_zero_accepts(self):
        a = np.array([0.1, 0.2, 0.3, 0.4])
        assert wilcoxon_signed_rank_one_tailed_less(a, a.copy()) == (0.0, 1.0)

    def test_too_few_nonzero_rejected(self):
        a = np.array([0.0, 0.0, 0.1, 0.0])
        with pytest.raises(ValueError, match="3 nonzero"):
            wilcoxon_signed_rank_one_tailed_less(a, np.zeros(4))

    def test_tied_magnitudes_use_average_ranks(self):
        # |d| = (1, 1, 2): tied pair shares rank 1.5; positives hold ranks
        # 1.5 and 3 -> W+ = 4.5.
        d = np.array([1.0, -1.0, 2.0])
        w, p = wilcoxon_signed_rank_one_tailed_less(d, np.zeros(3))
        assert w == 4.5
        assert abs(p - wilcoxon_count_p(d)) < 1e-12

    def test_exact_path_matches_multiplicity_counting(self):
        rng = np.random.default_rng(4)
        for _ in range(400):
            m = int(rng.integers(3, 13))
            d = np.round(rng.normal(scale=2.0, size=m), 1)
            d = d[d != 0.0]
            if d.size < 3:
                continue
            _, p = wilcoxon_signed_rank_one_tailed_less(d, np.zeros_like(d))
            assert abs(p - wilcoxon_count_p(d)) < 1e-12

    def test_normal_approximation_close_to_exact_above_cutoff(self):
        rng = np.random.default_rng(5)
        d = rng.normal(-0.3, 1.0, size=25)
        d = d[d != 0.0]
        _, p_approx = wilcoxon_signed_rank_one_tailed_less(d, np.zeros_like(d))
        p_exact = wilcoxon_count_p(d)
        assert abs(p_approx - p_exact) < 0.02


def _sample(selected, optimal, dataset="ds", ratio=1.0, loss="ce",
            criterion="val_ce", regime="post_hoc"):
    return PairedSample(
        selected=np.asarray(selected, dtype=np.float64),
        optimal=np.asarray(optimal, dtype=np.float64),
        key=GroupKey(dataset, ratio, loss, criterion, regime),
    )


class TestCompareToOptimal:
    def test_zero_regret_everywhere_accepts_with_p_one(self):
        opt = np.array([0.9, 0.8, 0.85, 0.9, 0.95])
        out = compare_to_optimal(_sample(opt.copy(), opt))
        assert not out.reject
        assert out.p_value == 1.0

    def test_constant_nonzero_deficit_routes_to_wilcoxon(self):
        opt = np.full(10, 0.9)
        out = compare_to_optimal(_sample(opt - 0.1, opt))
        assert out.normality_p is None  # constant differences: degenerate gate
        assert out.test_used == "wilcoxon"

    def test_constant_deficit_over_ten_folds_rejects(self):
        opt = np.full(10, 0.9)
        out = compare_to_optimal(_sample(opt - 0.1, opt), alpha=0.05)
        assert out.reject
        assert abs(out.p_value - 1.0 / 1024.0) < 1e-15

    def test_noisy_deficit_uses_t_when_normalish(self):
        rng = np.random.default_rng(6)
        opt = np.full(12, 0.9)
        deficit = 0.05 + 0.01 * rng.standard_normal(12)
        out = compare_to_optimal(_sample(opt - np.abs(deficit), opt), alpha=0.05)
        if out.normality_p is not None and out.normality_p > 0.05:
            assert out.test_used == "t"
        assert out.reject

    def test_selected_above_optimal_rejected_by_type(self):
        with pytest.raises(ValueError, match="above"):
            _sample([0.9, 0.9, 0.99], [0.9, 0.9, 0.9])

    def test_short_samples_rejected_by_type(self):
        with pytest.raises(ValueError, match="3 folds"):
            _sample([0.5, 0.6], [0.7, 0.7])

    def test_total_over_valid_samples(self):
        # Any valid PairedSample must produce an outcome, including awkward
        # cases with only one or two nonzero differences.
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(3, 12))
            optimal = np.round(rng.uniform(0.5, 1.0, size=n), 2)
            deficit = np.round(rng.choice([0.0, 0.0, 0.05, 0.1], size=n), 2)
            out = compare_to_optimal(_sample(optimal - deficit, optimal))
            assert 0.0 <= out.p_value <= 1.0
            assert out.reject == (out.p_value < out.alpha)

    def test_decide_at_replays_stored_decision(self):
        opt = np.full(10, 0.9)
        sel = opt - np.array([0.0, 0.01, 0.02, 0.0, 0.01, 0.03, 0.0, 0.02, 0.01, 0.02])
        out = compare_to_optimal(_sample(sel, opt), alpha=0.05)
        test_used, p, reject = decide_at(out, 0.05)
        assert (test_used, p, reject) == (out.test_used, out.p_value, out.reject)


def _outcome_set():
    """Four outcomes per criterion with controlled p-values."""
    outcomes = []
    opt = np.full(10, 0.9)
    deficits = {
        "val_ce": [0.0, 0.0, 0.01, 0.1],  # p=1, p=1, small noise, strong deficit
        "val_acc": [0.01, 0.02, 0.05, 0.1],
    }
    rng = np.random.default_rng(8)
    for criterion, dvals in deficits.items():
        for i, d in enumerate(dvals):
            noise = np.abs(rng.normal(0, 0.002, size=10))
            sel = opt - (d + noise if d > 0 else np.zeros(10))
            outcomes.append(
                compare_to_optimal(
                    _sample(sel, opt, dataset=f"ds{i}", ratio=float(i % 2),
                            criterion=criterion, regime="T=10"),
                    alpha=0.05,
                )
            )
    return outcomes


class TestAggregation:
    def test_acceptance_rate_counts(self):
        outcomes = _outcome_set()
        rows = acceptance_rate(outcomes)
        by_criterion = {r["criterion"]: r for r in rows}
        ce_row = by_criterion["val_ce"]
        assert ce_row["n_total"] == 4
        assert ce_row["percent"] == 100.0 * ce_row["n_accepted"] / 4

    def test_half_accepted_is_fifty_percent(self):
        opt = np.full(10, 0.9)
        outcomes = []
        for i, d in enumerate([0.0, 0.0, 0.2, 0.2]):
            sel = opt - d
            outcomes.append(
                compare_to_optimal(
                    _sample(sel, opt, dataset=f"d{i}", criterion="val_ce", regime="T=10")
                )
            )
        rows = acceptance_rate(outcomes)
        assert rows[0]["percent"] == 50.0

    def test_alpha_one_rejects_everything_below_one(self):
        outcomes = _outcome_set()
        rows = acceptance_rate(outcomes, alpha=1.0)
        for row in rows:
            group = [o for o in outcomes
                     if (o.key.train_loss, o.key.regime, o.key.criterion)
                     == (row["train_loss"], row["regime"], row["criterion"])]
            n_p_one = sum(1 for o in group if decide_at(o, 1.0)[1] >= 1.0)
            assert row["n_accepted"] == n_p_one

    def test_alpha_near_zero_accepts_everything(self):
        outcomes = _outcome_set()
        rows = acceptance_rate(outcomes, alpha=1e-300)
        assert all(row["percent"] == 100.0 for row in rows)

    def test_acceptance_monotone_as_alpha_decreases(self):
        # Exact for a fixed test choice (p is constant while the threshold
        # shrinks); the re-evaluated normality gate can in principle switch an
        # outcome between t and wilcoxon across levels, but none of these
        # outcomes sit in that corner.
        outcomes = _outcome_set()
        grid = (0.5, 0.2, 0.1, 0.05, 0.01, 0.001)
        rows = alpha_sweep(outcomes, grid)
        by_cell: dict = {}
        for row in rows:
            by_cell.setdefault((row["train_loss"], row["regime"], row["criterion"]),
                               []).append((row["alpha"], row["percent"]))
        for series in by_cell.values():
            series.sort(reverse=True)  # descending alpha
            pcts = [p for _, p in series]
            assert all(a <= b for a, b in zip(pcts, pcts[1:]))

    def test_fixed_test_monotonicity_is_exact(self):
        # With the test choice held fixed, a stored p against a shrinking
        # threshold can only move from reject to accept.
        outcomes = _outcome_set()
        grid = (0.5, 0.2, 0.1, 0.05, 0.01, 0.001, 1e-12)  # descending
        for o in outcomes:
            for p in (o.p_wilcoxon, o.p_t):
                if p is None:
                    continue
                accepts = [not (p < a) for a in grid]
                assert accepts == sorted(accepts)

    def test_ratio_breakdown_grouping(self):
        outcomes = _outcome_set()
        rows = ratio_breakdown(outcomes)
        ratios = {row["ratio"] for row in rows}
        assert ratios == {0.0, 1.0}
        for row in rows:
            assert 0.0 <= row["percent"] <= 100.0

    def test_aggregation_requires_keys(self):
        opt = np.full(10, 0.9)
        out = compare_to_optimal(PairedSample(opt - 0.1, opt))
        with pytest.raises(ValueError, match="keys"):
            acceptance_rate([out])
