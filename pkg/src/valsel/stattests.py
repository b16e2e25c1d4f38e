"""Paired hypothesis testing over cross-validation folds and acceptance-rate
aggregation.

The pipeline per group of folds: Shapiro-Wilk on the paired differences; if
normality is not rejected at the working level, a paired one-tailed t-test,
otherwise the one-tailed Wilcoxon signed-rank test. H1 is always "selected
mean below optimal mean".

Special functions are implemented here directly: the normal quantile uses
Wichura's AS 241 (PPND16), the Shapiro-Wilk statistic and p-value follow
Royston's AS R94, and the t CDF goes through the regularized incomplete beta
function evaluated with a Lentz continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError

__all__ = [
    "GroupKey",
    "PairedSample",
    "TestOutcome",
    "acceptance_rate",
    "alpha_sweep",
    "compare_to_optimal",
    "decide_at",
    "normal_cdf",
    "normal_ppf",
    "paired_t_one_tailed_less",
    "ratio_breakdown",
    "regularized_incomplete_beta",
    "shapiro_wilk",
    "t_cdf",
    "wilcoxon_signed_rank_one_tailed_less",
]

# Exact Wilcoxon enumeration up to this many nonzero differences (2^20 patterns).
EXACT_WILCOXON_LIMIT = 20


# ---------------------------------------------------------------------------
# special functions


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


_PPND16_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_PPND16_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_PPND16_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_PPND16_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_PPND16_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_PPND16_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratpoly(num, den, r: float) -> float:
    n = 0.0
    for c in reversed(num):
        n = n * r + c
    d = 0.0
    for c in reversed(den):
        d = d * r + c
    return n / d


def normal_ppf(p: float) -> float:
    """Standard normal quantile, AS 241 algorithm PPND16 (double precision)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _ratpoly(_PPND16_A, _PPND16_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        x = _ratpoly(_PPND16_C, _PPND16_D, r - 1.6)
    else:
        x = _ratpoly(_PPND16_E, _PPND16_F, r - 5.0)
    return -x if q < 0 else x


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Lentz's algorithm for the incomplete beta continued fraction.
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to ~1e-14, continued-fraction evaluation with the symmetry split."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_cdf(t: float, df: int) -> float:
    """CDF of Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 0.0 if t < 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t < 0 else 1.0 - tail


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston 1995, AS R94; uncensored case)

_SW_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)  # mean of g(W), n <= 11
_SW_C4 = (1.3822, -0.77857, 0.062767, -2.0322e-3)  # log sd of g(W), n <= 11
_SW_C5 = (-1.5861, -0.31082, -0.083751, 3.8915e-3)  # mean of ln(1-W), n >= 12
_SW_C6 = (-0.4803, -0.082676, 3.0302e-3)  # log sd of ln(1-W), n >= 12


def _poly(coeffs, x: float) -> float:
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _shapiro_weights(n: int) -> np.ndarray:
    m = np.array([normal_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    ssq_m = float(np.sum(m * m))
    a = m / math.sqrt(ssq_m)
    u = 1.0 / math.sqrt(n)
    if n == 3:
        s = math.sqrt(0.5)
        return np.array([-s, 0.0, s])
    a_n = a[-1] + u * _poly(_SW_C1, u)
    if n <= 5:
        phi = (ssq_m - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        mid = m[1:-1] / math.sqrt(phi)
        return np.concatenate(([-a_n], mid, [a_n]))
    a_n1 = a[-2] + u * _poly(_SW_C2, u)
    phi = (ssq_m - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2)
    mid = m[2:-2] / math.sqrt(phi)
    return np.concatenate(([-a_n, -a_n1], mid, [a_n1, a_n]))


def shapiro_wilk(x) -> tuple[float, float]:
    """Shapiro-Wilk W and upper-tail p-value for 3 <= n <= 5000.

    Raises DegenerateDataError on constant input; the pipeline treats that as
    non-normal.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    if n < 3 or n > 5000:
        raise ValueError(f"shapiro_wilk requires 3 <= n <= 5000, got {n}")
    if x[-1] == x[0]:
        raise DegenerateDataError("constant sample: Shapiro-Wilk undefined")

    a = _shapiro_weights(n)
    xc = x - x.mean()
    ssq = float(np.sum(xc * xc))
    b = float(np.sum(a * x))
    w = min(b * b / ssq, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, min(max(p, 0.0), 1.0)
    one_minus = 1.0 - w
    if one_minus <= 0.0:
        return w, 1.0
    y = math.log(one_minus)
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if y >= gamma:
            return w, 1e-99
        g = -math.log(gamma - y)
        mu = _poly(_SW_C3, float(n))
        sd = math.exp(_poly(_SW_C4, float(n)))
        z = (g - mu) / sd
    else:
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sd = math.exp(_poly(_SW_C6, ln_n))
        z = (y - mu) / sd
    return w, 1.0 - normal_cdf(z)


# ---------------------------------------------------------------------------
# paired tests


def paired_t_one_tailed_less(a, b) -> tuple[float, float]:
    """Paired t-test of H1: mean(a) < mean(b). Returns (t, p).

    All-zero differences give p = 1 by convention (no support for "less");
    zero spread with nonzero mean gives t = +-inf and p in {0, 1} by sign.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length 1-D samples with n >= 2")
    d = a - b
    if np.all(d == 0.0):
        return 0.0, 1.0
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        t = -math.inf if mean < 0 else math.inf
        return t, (0.0 if mean < 0 else 1.0)
    t = mean / (sd / math.sqrt(n))
    return t, t_cdf(t, n - 1)


def _average_ranks(v: np.ndarray) -> np.ndarray:
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _wilcoxon_less(d: np.ndarray) -> tuple[float, float]:
    """(W+, P(W+ <= observed)) for nonzero differences d; exact by sign-pattern
    enumeration up to EXACT_WILCOXON_LIMIT, normal approximation with tie and
    continuity corrections above."""
    m = d.size
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if m <= EXACT_WILCOXON_LIMIT:
        sums = np.zeros(1)
        for r in ranks:
            sums = np.concatenate([sums, sums + r])
        p = float(np.mean(sums <= w_plus + 1e-9))
        return w_plus, p
    mean = m * (m + 1) / 4.0
    var = m * (m + 1) * (2 * m + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    z = (w_plus - mean + 0.5) / math.sqrt(var)
    return w_plus, normal_cdf(z)


def wilcoxon_signed_rank_one_tailed_less(a, b) -> tuple[float, float]:
    """One-tailed Wilcoxon signed-rank test of H1: a below b. Returns (W+, p).

    Zero differences are dropped (Wilcoxon's treatment); all-zero input gives
    p = 1. Requires at least 3 nonzero differences.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need two equal-length 1-D samples")
    d = a - b
    d = d[d != 0.0]
    if d.size == 0:
        return 0.0, 1.0
    if d.size < 3:
        raise ValueError("need at least 3 nonzero differences")
    return _wilcoxon_less(d)


# ---------------------------------------------------------------------------
# the per-group pipeline


@dataclass(frozen=True)
class GroupKey:
    """Identifies one paired sample in the crossed design."""

    dataset_id: str
    ratio: float
    train_loss: str
    criterion: str
    regime: str


@dataclass(frozen=True)
class PairedSample:
    """Per-fold selected vs optimal test accuracies for one group."""

    selected: np.ndarray
    optimal: np.ndarray
    key: GroupKey | None = None

    def __post_init__(self):
        if self.selected.shape != self.optimal.shape or self.selected.ndim != 1:
            raise ValueError("selected and optimal must be equal-length vectors")
        if self.selected.size < 3:
            raise ValueError("need at least 3 folds")
        if np.any(self.selected > self.optimal + 1e-12):
            raise ValueError("selected accuracy above the per-fold optimum")

    @property
    def n(self) -> int:
        return int(self.selected.size)


@dataclass(frozen=True)
class TestOutcome:
    """Verdict for one paired sample; carries both candidate p-values so the
    normality gate can be replayed at any significance level."""

    key: GroupKey | None
    n: int
    normality_p: float | None  # None: constant differences, treated as non-normal
    test_used: str  # "t" | "wilcoxon"
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    p_t: float | None
    p_wilcoxon: float
    stat_t: float | None
    stat_wilcoxon: float


def compare_to_optimal(ps: PairedSample, alpha: float = 0.05) -> TestOutcome:
    """Run the gated pipeline on one paired sample.

    Differences are selected - optimal (never positive). All-zero differences
    mean the rule tied the optimum on every fold: accept with p = 1.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    d = ps.selected - ps.optimal
    if np.all(d == 0.0):
        return TestOutcome(
            key=ps.key,
            n=ps.n,
            normality_p=None,
            test_used="wilcoxon",
            statistic=0.0,
            p_value=1.0,
            alpha=alpha,
            reject=False,
            p_t=None,
            p_wilcoxon=1.0,
            stat_t=None,
            stat_wilcoxon=0.0,
        )
    try:
        _, normality_p = shapiro_wilk(d)
    except DegenerateDataError:
        normality_p = None
    stat_t, p_t = paired_t_one_tailed_less(ps.selected, ps.optimal)
    dz = d[d != 0.0]
    stat_w, p_w = _wilcoxon_less(dz) if dz.size else (0.0, 1.0)

    use_t = normality_p is not None and normality_p > alpha
    p = p_t if use_t else p_w
    return TestOutcome(
        key=ps.key,
        n=ps.n,
        normality_p=normality_p,
        test_used="t" if use_t else "wilcoxon",
        statistic=stat_t if use_t else stat_w,
        p_value=p,
        alpha=alpha,
        reject=p < alpha,
        p_t=p_t,
        p_wilcoxon=p_w,
        stat_t=stat_t,
        stat_wilcoxon=stat_w,
    )


def decide_at(outcome: TestOutcome, alpha: float) -> tuple[str, float, bool]:
    """Replay the normality gate and decision at another significance level."""
    use_t = (
        outcome.normality_p is not None
        and outcome.normality_p > alpha
        and outcome.p_t is not None
    )
    p = outcome.p_t if use_t else outcome.p_wilcoxon
    return ("t" if use_t else "wilcoxon"), p, p < alpha


# ---------------------------------------------------------------------------
# aggregation


def _require_keys(outcomes):
    for o in outcomes:
        if o.key is None:
            raise ValueError("aggregation requires outcomes with group keys")


def acceptance_rate(outcomes, alpha: float | None = None) -> list[dict]:
    """Percent of groups where H0 is not rejected, per (train loss, regime, criterion).

    With alpha given, decisions are replayed at that level; otherwise each
    outcome's stored decision is used.
    """
    _require_keys(outcomes)
    cells: dict[tuple, list[bool]] = {}
    for o in outcomes:
        k = (o.key.train_loss, o.key.regime, o.key.criterion)
        rejected = o.reject if alpha is None else decide_at(o, alpha)[2]
        cells.setdefault(k, []).append(not rejected)
    rows = []
    for (loss, regime, criterion) in sorted(cells):
        accepted = cells[(loss, regime, criterion)]
        rows.append(
            {
                "train_loss": loss,
                "regime": regime,
                "criterion": criterion,
                "n_accepted": int(sum(accepted)),
                "n_total": len(accepted),
                "percent": 100.0 * sum(accepted) / len(accepted),
            }
        )
    return rows


def alpha_sweep(outcomes, alphas) -> list[dict]:
    """Acceptance rates per (train loss, regime, criterion) at each alpha, with
    the normality gate re-evaluated at every level."""
    _require_keys(outcomes)
    rows = []
    for alpha in alphas:
        for row in acceptance_rate(outcomes, alpha=alpha):
            rows.append({"alpha": alpha, **row})
    return rows


def ratio_breakdown(outcomes, alpha: float | None = None) -> list[dict]:
    """Acceptance rates per (train loss, regime, criterion, capacity ratio)."""
    _require_keys(outcomes)
    cells: dict[tuple, list[bool]] = {}
    for o in outcomes:
        k = (o.key.train_loss, o.key.regime, o.key.criterion, o.key.ratio)
        rejected = o.reject if alpha is None else decide_at(o, alpha)[2]
        cells.setdefault(k, []).append(not rejected)
    rows = []
    for (loss, regime, criterion, ratio) in sorted(cells):
        accepted = cells[(loss, regime, criterion, ratio)]
        rows.append(
            {
                "train_loss": loss,
                "regime": regime,
                "criterion": criterion,
                "ratio": ratio,
                "n_accepted": int(sum(accepted)),
                "n_total": len(accepted),
                "percent": 100.0 * sum(accepted) / len(accepted),
            }
        )
    return rows
