"""valsel: which checkpoint does a validation criterion pick, and how far is
it from the test-optimal one?

The library trains single-hidden-layer ReLU classifiers sized by a
parameter-to-sample ratio, records per-epoch validation and test metrics,
replays checkpoint-selection rules (post-hoc and patience-based early
stopping, each monitoring cross-entropy, correntropy loss, Poly-1, or
accuracy) over the recorded trajectories, and compares each rule's picks
against the best test accuracy seen during training with a paired
hypothesis-testing pipeline over cross-validation folds.
"""

from .criteria import (
    LossSpec,
    MetricVector,
    accuracy,
    ce_value_grad,
    closs_value_grad,
    evaluate_all,
    poly1_value_grad,
    softmax,
)
from .datapipe import (
    Dataset,
    FoldPlan,
    NormStats,
    Schema,
    apply_zscore,
    encode,
    fit_zscore,
    gdv,
    load_csv,
    stratified_holdout,
    stratified_kfold,
)
from .errors import ConfigError, DataError, DegenerateDataError, DivergenceError
from .harness import (
    DatasetEntry,
    ExperimentConfig,
    ReportBundle,
    RunKey,
    RunRecord,
    analyze,
    analyze_run_dir,
    emit_report,
    execute_run,
    plan_runs,
    run_experiment,
)
from .numkernel import Matrix, RngState, matmul, rng_derive, shuffled_indices
from .selector import (
    CRITERIA,
    SelectionResult,
    SelectionRule,
    Trajectory,
    crossed_selection,
    early_stop_select,
    post_hoc_select,
    standard_rules,
    test_optimal,
)
from .shallownet import (
    ModelConfig,
    Params,
    Split,
    TrainConfig,
    forward,
    hidden_size_for_ratio,
    init_params,
    run_training,
    train_epoch,
)
from .stattests import (
    GroupKey,
    PairedSample,
    TestOutcome,
    acceptance_rate,
    alpha_sweep,
    compare_to_optimal,
    paired_t_one_tailed_less,
    ratio_breakdown,
    shapiro_wilk,
    wilcoxon_signed_rank_one_tailed_less,
)

__version__ = "0.1.0"
