"""Experiment orchestration: crossed design planning, run execution,
trajectory persistence, analysis, and report emission.

One run trains one model per (dataset, fold, training loss, capacity ratio)
and records the full metric trajectory; every (criterion, stopping regime)
rule is replayed afterwards from the same trajectory, so the crossed analysis
is a pure function of the persisted run files.

All randomness is derived from the root seed through labeled streams keyed by
the run components, so results do not depend on execution order or worker
count, and any run can be replayed bit-identically from (config, key).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criteria import LOSS_KINDS, LossSpec
from .datapipe import (
    Dataset,
    FoldPlan,
    Schema,
    apply_zscore,
    encode,
    fit_zscore,
    gdv,
    infer_schema,
    load_csv,
    stratified_kfold,
)
from .errors import ConfigError, DataError, DivergenceError
from .numkernel import RngState
from .selector import CRITERIA, SelectionRule, Trajectory, crossed_selection
from .shallownet import (
    DEFAULT_RATIO_GRID,
    ModelConfig,
    Split,
    TrainConfig,
    hidden_size_for_ratio,
    run_training,
)
from .stattests import (
    GroupKey,
    PairedSample,
    TestOutcome,
    acceptance_rate,
    alpha_sweep,
    compare_to_optimal,
    ratio_breakdown,
)

__all__ = [
    "DatasetEntry",
    "ExperimentConfig",
    "ReportBundle",
    "RunKey",
    "RunRecord",
    "analyze",
    "analyze_run_dir",
    "directional_findings",
    "emit_report",
    "execute_run",
    "ingest_dataset",
    "load_run_dir",
    "plan_runs",
    "read_run_record",
    "run_experiment",
    "write_run_record",
]

log = logging.getLogger("valsel")

DEFAULT_ALPHA_GRID = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
_EPOCH_FIELDS = (
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


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    data: str
    schema: str | None = None  # None: infer from the data file

    def to_dict(self) -> dict:
        return {"id": self.id, "data": self.data, "schema": self.schema}


@dataclass(frozen=True)
class ExperimentConfig:
    """The fully crossed design plan plus training and analysis settings."""

    datasets: tuple[DatasetEntry, ...]
    k_folds: int = 10
    val_fraction: float = 0.15
    ratio_grid: tuple[float, ...] = DEFAULT_RATIO_GRID
    train_losses: tuple[str, ...] = LOSS_KINDS
    criteria: tuple[str, ...] = CRITERIA
    regimes: tuple[str, ...] = ("post_hoc", "T=10", "T=50")
    lr: float = 0.01
    batch_size: int = 64
    max_epochs: int = 20_000
    perfect_fit_stop: bool = True
    perfect_fit_epochs: int = 10
    closs_sigma: float = 0.5
    closs_beta: float = 1.0
    poly1_epsilon: float = 1.0
    seed: int = 0
    output_dir: str = "experiment_out"
    workers: int = 1
    alpha: float = 0.05
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    base_dir: str | None = field(default=None, compare=False)  # path resolution only

    def validate(self):
        errors = []
        if not self.datasets:
            errors.append("datasets: at least one entry required")
        ids = [d.id for d in self.datasets]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            errors.append(f"datasets: duplicate ids {dupes}")
        if self.k_folds < 2:
            errors.append(f"k_folds: must be >= 2, got {self.k_folds}")
        if not 0.0 < self.val_fraction < 1.0:
            errors.append(f"val_fraction: must be in (0, 1), got {self.val_fraction}")
        if not self.ratio_grid or any(r <= 0 for r in self.ratio_grid):
            errors.append(f"ratio_grid: all ratios must be > 0, got {self.ratio_grid}")
        bad = [k for k in self.train_losses if k not in LOSS_KINDS]
        if bad or not self.train_losses:
            errors.append(f"train_losses: expected subset of {LOSS_KINDS}, got {self.train_losses}")
        bad = [c for c in self.criteria if c not in CRITERIA]
        if bad or not self.criteria:
            errors.append(f"criteria: expected subset of {CRITERIA}, got {self.criteria}")
        for regime in self.regimes:
            try:
                _parse_regime(regime)
            except ValueError as e:
                errors.append(f"regimes: {e}")
        if self.lr <= 0:
            errors.append(f"lr: must be > 0, got {self.lr}")
        if self.batch_size < 1:
            errors.append(f"batch_size: must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            errors.append(f"max_epochs: must be >= 1, got {self.max_epochs}")
        if self.perfect_fit_epochs < 1:
            errors.append(f"perfect_fit_epochs: must be >= 1, got {self.perfect_fit_epochs}")
        if self.closs_sigma <= 0 or self.closs_beta <= 0:
            errors.append("closs_sigma and closs_beta must be > 0")
        if self.poly1_epsilon < 0:
            errors.append("poly1_epsilon must be >= 0")
        if not 0.0 < self.alpha <= 1.0:
            errors.append(f"alpha: must be in (0, 1], got {self.alpha}")
        if any(not 0.0 < a <= 1.0 for a in self.alpha_grid):
            errors.append(f"alpha_grid: levels must be in (0, 1], got {self.alpha_grid}")
        if self.workers < 1:
            errors.append(f"workers: must be >= 1, got {self.workers}")
        if errors:
            raise ConfigError("invalid experiment config: " + "; ".join(errors))

    # -- derived pieces

    def loss_spec(self, kind: str) -> LossSpec:
        return LossSpec(
            kind,
            sigma=self.closs_sigma,
            beta=self.closs_beta,
            epsilon=self.poly1_epsilon,
        )

    def metric_specs(self) -> tuple[LossSpec, ...]:
        return tuple(self.loss_spec(k) for k in LOSS_KINDS)

    def rules(self) -> tuple[SelectionRule, ...]:
        out = []
        for regime in self.regimes:
            patience = _parse_regime(regime)
            out.extend(SelectionRule(c, patience) for c in self.criteria)
        return tuple(out)

    def report_regime_order(self) -> tuple[str, ...]:
        """Patience regimes by increasing T, post-hoc (no early stopping) last."""
        patiences = sorted(
            (r for r in self.regimes if r != "post_hoc"), key=lambda r: _parse_regime(r)
        )
        tail = ("post_hoc",) if "post_hoc" in self.regimes else ()
        return tuple(patiences) + tail

    def resolve(self, path_str: str) -> Path:
        p = Path(path_str)
        if not p.is_absolute() and self.base_dir:
            return Path(self.base_dir) / p
        return p

    # -- (de)serialization

    def to_dict(self) -> dict:
        return {
            "datasets": [d.to_dict() for d in self.datasets],
            "k_folds": self.k_folds,
            "val_fraction": self.val_fraction,
            "ratio_grid": list(self.ratio_grid),
            "train_losses": list(self.train_losses),
            "criteria": list(self.criteria),
            "regimes": list(self.regimes),
            "lr": self.lr,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "perfect_fit_stop": self.perfect_fit_stop,
            "perfect_fit_epochs": self.perfect_fit_epochs,
            "closs_sigma": self.closs_sigma,
            "closs_beta": self.closs_beta,
            "poly1_epsilon": self.poly1_epsilon,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
            "alpha": self.alpha,
            "alpha_grid": list(self.alpha_grid),
        }

    @property
    def config_hash(self) -> str:
        # output_dir and workers are execution environment, not experiment
        # identity; results must not depend on them.
        semantic = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "workers")}
        canonical = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {
            "datasets",
            "k_folds",
            "val_fraction",
            "ratio_grid",
            "train_losses",
            "criteria",
            "regimes",
            "lr",
            "batch_size",
            "max_epochs",
            "perfect_fit_stop",
            "perfect_fit_epochs",
            "closs_sigma",
            "closs_beta",
            "poly1_epsilon",
            "seed",
            "output_dir",
            "workers",
            "alpha",
            "alpha_grid",
        }
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        entries = []
        for e in d.get("datasets", []):
            if isinstance(e, str):
                entries.append(DatasetEntry(id=Path(e).stem, data=e))
            else:
                entries.append(
                    DatasetEntry(
                        id=e.get("id", Path(e["data"]).stem),
                        data=e["data"],
                        schema=e.get("schema"),
                    )
                )
        kwargs = {k: v for k, v in d.items() if k != "datasets"}
        for tuple_key in ("ratio_grid", "train_losses", "criteria", "regimes", "alpha_grid"):
            if tuple_key in kwargs:
                kwargs[tuple_key] = tuple(kwargs[tuple_key])
        cfg = cls(datasets=tuple(entries), base_dir=base_dir, **kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        return cls.from_dict(d, base_dir=str(path.parent))


def _parse_regime(regime: str) -> int | None:
    if regime == "post_hoc":
        return None
    if regime.startswith("T="):
        try:
            t = int(regime[2:])
        except ValueError:
            raise ValueError(f"bad regime {regime!r}") from None
        if t < 1:
            raise ValueError(f"patience in regime {regime!r} must be >= 1")
        return t
    raise ValueError(f"bad regime {regime!r}, expected 'post_hoc' or 'T=<int>'")


def _fmt_ratio(r: float) -> str:
    return f"{r:g}"


# ---------------------------------------------------------------------------
# planning and execution


@dataclass(frozen=True)
class RunKey:
    dataset_id: str
    fold: int
    train_loss: str
    ratio: float

    @property
    def run_id(self) -> str:
        return f"{self.dataset_id}__f{self.fold:02d}__{self.train_loss}__r{_fmt_ratio(self.ratio)}"


@dataclass
class RunRecord:
    """One persisted unit of work: a key, the trained model's shape, and the
    trajectory (None when the run diverged)."""

    key: RunKey
    model: ModelConfig | None
    trajectory: Trajectory | None
    status: str  # "ok" | "diverged"
    seed: int
    error: str | None = None
    duration_s: float | None = None


def plan_runs(cfg: ExperimentConfig) -> list[RunKey]:
    """Every (dataset, fold, training loss, ratio); rules are not part of the key."""
    cfg.validate()
    keys = []
    for entry in cfg.datasets:
        for fold in range(cfg.k_folds):
            for loss in cfg.train_losses:
                for ratio in cfg.ratio_grid:
                    keys.append(RunKey(entry.id, fold, loss, ratio))
    return keys


def _load_entry(cfg: ExperimentConfig, entry: DatasetEntry) -> Dataset:
    data_path = cfg.resolve(entry.data)
    if entry.schema is None:
        schema = infer_schema(data_path)
    else:
        schema = Schema.from_json_file(cfg.resolve(entry.schema))
    return encode(load_csv(data_path, schema), schema)


def _run_seed(cfg: ExperimentConfig, key: RunKey) -> int:
    rng = (
        RngState(cfg.seed)
        .derive(f"ds:{key.dataset_id}")
        .derive(f"fold:{key.fold}")
        .derive(f"loss:{key.train_loss}")
        .derive(f"r:{_fmt_ratio(key.ratio)}")
        .derive("train")
    )
    return rng.seed


def _fold_plan(cfg: ExperimentConfig, dataset_id: str, ds: Dataset) -> FoldPlan:
    rng = RngState(cfg.seed).derive(f"ds:{dataset_id}").derive("folds")
    return stratified_kfold(ds, cfg.k_folds, rng, cfg.val_fraction)


class _DatasetCache:
    """Per-process cache of encoded datasets and their fold plans."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.entries = {e.id: e for e in cfg.datasets}
        self._data: dict[str, tuple[Dataset, FoldPlan]] = {}

    def get(self, dataset_id: str) -> tuple[Dataset, FoldPlan]:
        if dataset_id not in self._data:
            ds = _load_entry(self.cfg, self.entries[dataset_id])
            self._data[dataset_id] = (ds, _fold_plan(self.cfg, dataset_id, ds))
        return self._data[dataset_id]


def execute_run(
    key: RunKey, cfg: ExperimentConfig, cache: _DatasetCache | None = None
) -> RunRecord:
    """fold split -> stratified holdout -> train-only z-score -> sized model ->
    training, with the seed derived from the run key."""
    cache = cache or _DatasetCache(cfg)
    ds, plan = cache.get(key.dataset_id)
    train_idx, val_idx, test_idx = plan.splits[key.fold]

    stats = fit_zscore(ds, train_idx)
    dsz = apply_zscore(ds, stats)
    split = Split(
        X_train=dsz.X[train_idx],
        y_train=dsz.y[train_idx],
        X_val=dsz.X[val_idx],
        y_val=dsz.y[val_idx],
        X_test=dsz.X[test_idx],
        y_test=dsz.y[test_idx],
    )
    hidden = hidden_size_for_ratio(key.ratio, ds.n_features, ds.n_classes, train_idx.size)
    mc = ModelConfig(ds.n_features, hidden, ds.n_classes)
    seed = _run_seed(cfg, key)
    tc = TrainConfig(
        lr=cfg.lr,
        batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs,
        seed=seed,
        perfect_fit_stop=cfg.perfect_fit_stop,
        perfect_fit_epochs=cfg.perfect_fit_epochs,
    )
    started = time.perf_counter()
    try:
        traj = run_training(
            split,
            cfg.loss_spec(key.train_loss),
            mc,
            tc,
            metric_specs=cfg.metric_specs(),
            dataset_id=key.dataset_id,
            fold=key.fold,
            ratio=key.ratio,
        )
        status, error = "ok", None
    except DivergenceError as e:
        traj, status, error = None, "diverged", str(e)
    duration = time.perf_counter() - started
    return RunRecord(
        key=key,
        model=mc,
        trajectory=traj,
        status=status,
        seed=seed,
        error=error,
        duration_s=duration,
    )


# ---------------------------------------------------------------------------
# persistence (JSONL: one header line, then one line per epoch)


def write_run_record(record: RunRecord, runs_dir: str | Path, config_hash: str) -> Path:
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    path = runs_dir / f"{record.key.run_id}.jsonl"
    header = {
        "run_key": {
            "dataset_id": record.key.dataset_id,
            "fold": record.key.fold,
            "train_loss": record.key.train_loss,
            "ratio": record.key.ratio,
        },
        "model_config": record.model.to_dict() if record.model else None,
        "seed": record.seed,
        "status": record.status,
        "error": record.error,
        "config_hash": config_hash,
    }
    lines = [json.dumps(header)]
    traj = record.trajectory
    if traj is not None:
        for i in range(traj.n_epochs):
            row = {"e": i + 1}
            for name in _EPOCH_FIELDS:
                row[name] = float(getattr(traj, name)[i])
            lines.append(json.dumps(row))
    tmp = path.with_suffix(".jsonl.tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    # Timing lives beside the trajectory so report bytes stay reproducible.
    meta = path.with_suffix(".meta.json")
    meta.write_text(json.dumps({"duration_s": record.duration_s}) + "\n", encoding="utf-8")
    return path


def read_run_record(path: str | Path, loss_params: dict | None = None) -> RunRecord:
    """Rebuild a RunRecord from a trajectory log (timing is not restored)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        epochs = [json.loads(line) for line in fh if line.strip()]
    rk = header["run_key"]
    key = RunKey(rk["dataset_id"], int(rk["fold"]), rk["train_loss"], float(rk["ratio"]))
    mc = ModelConfig(**header["model_config"]) if header.get("model_config") else None
    traj = None
    if epochs:
        cols = {name: np.array([e[name] for e in epochs], dtype=np.float64) for name in _EPOCH_FIELDS}
        spec_kwargs = dict(loss_params or {})
        traj = Trajectory(
            **cols,
            dataset_id=key.dataset_id,
            fold=key.fold,
            train_loss=LossSpec(key.train_loss, **spec_kwargs),
            ratio=key.ratio,
            seed=int(header["seed"]),
        )
    return RunRecord(
        key=key,
        model=mc,
        trajectory=traj,
        status=header["status"],
        seed=int(header["seed"]),
        error=header.get("error"),
    )


_WORKER_STATE: dict = {}


def _worker_init(cfg_dict: dict, base_dir: str | None):
    cfg = ExperimentConfig.from_dict(cfg_dict, base_dir=base_dir)
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["cache"] = _DatasetCache(cfg)


def _worker_run(key_tuple: tuple) -> tuple[str, str, float]:
    cfg = _WORKER_STATE["cfg"]
    key = RunKey(*key_tuple)
    record = execute_run(key, cfg, _WORKER_STATE["cache"])
    write_run_record(record, Path(cfg.output_dir) / "runs", cfg.config_hash)
    return key.run_id, record.status, record.duration_s or 0.0


def run_experiment(
    cfg: ExperimentConfig, workers: int | None = None, resume: bool = False
) -> dict:
    """Execute the crossed plan, persisting one JSONL trajectory per run.

    Returns counts: planned, executed, skipped_existing, ok, diverged.
    """
    cfg.validate()
    workers = cfg.workers if workers is None else workers
    out_dir = Path(cfg.output_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    # base_dir rides along (outside the hashed canonical config) so a later
    # analyze can resolve dataset paths from anywhere.
    base_dir = str(Path(cfg.base_dir).resolve()) if cfg.base_dir else os.getcwd()
    (out_dir / "config.json").write_text(
        json.dumps(
            {"config_hash": cfg.config_hash, "config": cfg.to_dict(), "base_dir": base_dir},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )

    keys = plan_runs(cfg)
    planned = len(keys)
    if resume:
        keys = [k for k in keys if not (runs_dir / f"{k.run_id}.jsonl").exists()]
    skipped = planned - len(keys)

    statuses: list[str] = []
    if workers <= 1 or len(keys) <= 1:
        cache = _DatasetCache(cfg)
        for key in keys:
            record = execute_run(key, cfg, cache)
            write_run_record(record, runs_dir, cfg.config_hash)
            statuses.append(record.status)
            log.info("run %s: %s (%.2fs)", key.run_id, record.status, record.duration_s or 0.0)
    else:
        key_tuples = [(k.dataset_id, k.fold, k.train_loss, k.ratio) for k in keys]
        ctx = multiprocessing.get_context()
        with ctx.Pool(
            processes=workers, initializer=_worker_init, initargs=(cfg.to_dict(), cfg.base_dir)
        ) as pool:
            for run_id, status, duration in pool.imap_unordered(_worker_run, key_tuples):
                statuses.append(status)
                log.info("run %s: %s (%.2fs)", run_id, status, duration)

    return {
        "planned": planned,
        "executed": len(keys),
        "skipped_existing": skipped,
        "ok": statuses.count("ok"),
        "diverged": statuses.count("diverged"),
    }


def load_run_dir(run_dir: str | Path) -> tuple[ExperimentConfig, list[RunRecord]]:
    run_dir = Path(run_dir)
    config_path = run_dir / "config.json"
    if not config_path.exists():
        raise DataError(f"no config.json under {run_dir}")
    payload = json.loads(config_path.read_text(encoding="utf-8"))
    cfg = ExperimentConfig.from_dict(payload["config"], base_dir=payload.get("base_dir"))
    loss_params_by_kind = {
        "ce": {},
        "closs": {"sigma": cfg.closs_sigma, "beta": cfg.closs_beta},
        "poly1": {"epsilon": cfg.poly1_epsilon},
    }
    records = []
    for path in sorted((run_dir / "runs").glob("*.jsonl")):
        head = json.loads(path.open(encoding="utf-8").readline())
        kind = head["run_key"]["train_loss"]
        records.append(read_run_record(path, loss_params_by_kind.get(kind, {})))
    return cfg, records


# ---------------------------------------------------------------------------
# analysis


@dataclass
class ReportBundle:
    """Everything the reports need, ordered and ready to serialize."""

    config_hash: str
    alpha: float
    dataset_order: tuple[str, ...]  # ascending linear separability
    gdv_by_dataset: dict[str, float]
    outcomes: list[TestOutcome]
    heatmap_rows: list[dict]
    acceptance_rows: list[dict]
    alpha_rows: list[dict]
    ratio_rows: list[dict]
    skipped_groups: list[dict]
    n_runs_ok: int
    n_runs_diverged: int


_CRITERION_COLUMNS = (
    ("val_ce", "ce"),
    ("val_closs", "closs"),
    ("val_poly1", "poly1"),
    ("val_acc", "accuracy"),
)


def analyze(
    records: list[RunRecord],
    cfg: ExperimentConfig,
    alpha: float | None = None,
    alpha_grid: tuple[float, ...] | None = None,
    datasets: dict[str, Dataset] | None = None,
) -> ReportBundle:
    """Crossed selection over every ok trajectory, paired tests per
    (dataset, ratio, loss, rule) across folds, then the aggregate tables.

    Groups with fewer than 3 ok folds are skipped with a notice. `datasets`
    may supply pre-encoded datasets (otherwise they are loaded through cfg)
    for the separability ordering.
    """
    alpha = cfg.alpha if alpha is None else alpha
    alpha_grid = cfg.alpha_grid if alpha_grid is None else tuple(alpha_grid)
    rules = cfg.rules()

    ok = [r for r in records if r.status == "ok" and r.trajectory is not None]
    n_diverged = sum(1 for r in records if r.status != "ok")

    groups: dict[tuple[str, str, float], list[RunRecord]] = {}
    for rec in ok:
        groups.setdefault((rec.key.dataset_id, rec.key.train_loss, rec.key.ratio), []).append(rec)

    # Separability ordering: most negative score is most separable, and rows
    # run from least to most separable.
    if datasets is None:
        cache = _DatasetCache(cfg)
        datasets = {e.id: cache.get(e.id)[0] for e in cfg.datasets}
    gdv_by_dataset = {ds_id: gdv(ds) for ds_id, ds in sorted(datasets.items())}
    seen_ids = {k[0] for k in groups}
    dataset_order = tuple(
        sorted(seen_ids, key=lambda i: (-gdv_by_dataset.get(i, 0.0), i))
    )

    outcomes: list[TestOutcome] = []
    skipped: list[dict] = []
    for (ds_id, loss, ratio) in sorted(groups, key=lambda k: (k[0], k[1], k[2])):
        recs = sorted(groups[(ds_id, loss, ratio)], key=lambda r: r.key.fold)
        if len(recs) < 3:
            skipped.append(
                {"dataset": ds_id, "train_loss": loss, "ratio": ratio, "ok_folds": len(recs)}
            )
            continue
        per_rule_selected: dict[str, list[float]] = {rule.name: [] for rule in rules}
        optimal: list[float] = []
        for rec in recs:
            results = crossed_selection(rec.trajectory, rules)
            optimal.append(results[0].optimal_test_acc)
            for rule, res in zip(rules, results):
                per_rule_selected[rule.name].append(res.selected_test_acc)
        optimal_arr = np.array(optimal)
        for rule in rules:
            key = GroupKey(ds_id, ratio, loss, rule.criterion, rule.regime)
            ps = PairedSample(
                selected=np.array(per_rule_selected[rule.name]),
                optimal=optimal_arr,
                key=key,
            )
            outcomes.append(compare_to_optimal(ps, alpha))

    heatmap_rows = _heatmap_rows(outcomes, cfg, dataset_order, gdv_by_dataset)
    acceptance_rows = _acceptance_table(outcomes, cfg)
    alpha_rows = alpha_sweep(outcomes, alpha_grid)
    ratio_rows = ratio_breakdown(outcomes, alpha=alpha)
    return ReportBundle(
        config_hash=cfg.config_hash,
        alpha=alpha,
        dataset_order=dataset_order,
        gdv_by_dataset=gdv_by_dataset,
        outcomes=outcomes,
        heatmap_rows=heatmap_rows,
        acceptance_rows=acceptance_rows,
        alpha_rows=alpha_rows,
        ratio_rows=ratio_rows,
        skipped_groups=skipped,
        n_runs_ok=len(ok),
        n_runs_diverged=n_diverged,
    )


def _heatmap_rows(outcomes, cfg, dataset_order, gdv_by_dataset) -> list[dict]:
    order_index = {ds: i for i, ds in enumerate(dataset_order)}
    regime_order = {r: i for i, r in enumerate(cfg.report_regime_order())}
    criterion_order = {c: i for i, c in enumerate(cfg.criteria)}
    loss_order = {kind: i for i, kind in enumerate(cfg.train_losses)}

    def sort_key(o):
        k = o.key
        return (
            order_index.get(k.dataset_id, 10**6),
            loss_order.get(k.train_loss, 10**6),
            regime_order.get(k.regime, 10**6),
            criterion_order.get(k.criterion, 10**6),
            k.ratio,
        )

    rows = []
    for o in sorted(outcomes, key=sort_key):
        rows.append(
            {
                "dataset": o.key.dataset_id,
                "gdv": gdv_by_dataset.get(o.key.dataset_id),
                "train_loss": o.key.train_loss,
                "regime": o.key.regime,
                "criterion": o.key.criterion,
                "ratio": o.key.ratio,
                "p_value": o.p_value,
                "reject": o.reject,
                "test_used": o.test_used,
                "n_folds": o.n,
            }
        )
    return rows


def _acceptance_table(outcomes, cfg) -> list[dict]:
    """Wide rows: one per (training loss, regime), criteria as column groups."""
    if not outcomes:
        return []
    cells = {
        (r["train_loss"], r["regime"], r["criterion"]): r for r in acceptance_rate(outcomes)
    }
    rows = []
    for loss in cfg.train_losses:
        for regime in cfg.report_regime_order():
            row: dict = {"train_loss": loss, "regime": regime}
            for criterion, column in _CRITERION_COLUMNS:
                if criterion not in cfg.criteria:
                    continue
                cell = cells.get((loss, regime, criterion))
                row[f"{column}_percent"] = None if cell is None else cell["percent"]
                row[f"{column}_n"] = 0 if cell is None else cell["n_total"]
            rows.append(row)
    return rows


def directional_findings(bundle: ReportBundle) -> list[dict]:
    """Per (training loss, regime): is the accuracy-criterion acceptance rate
    at most the best loss-criterion acceptance rate?"""
    findings = []
    for row in bundle.acceptance_rows:
        acc = row.get("accuracy_percent")
        losses = [row.get(f"{c}_percent") for c in ("ce", "closs", "poly1")]
        losses = [v for v in losses if v is not None]
        if acc is None or not losses:
            continue
        findings.append(
            {
                "train_loss": row["train_loss"],
                "regime": row["regime"],
                "accuracy_percent": acc,
                "max_loss_percent": max(losses),
                "holds": acc <= max(losses),
            }
        )
    return findings


# ---------------------------------------------------------------------------
# report emission


def _write_csv(path: Path, config_hash: str, fieldnames: list[str], rows: list[dict]):
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            out = {}
            for k in fieldnames:
                v = row.get(k)
                if isinstance(v, bool):
                    v = "true" if v else "false"
                out[k] = "" if v is None else v
            writer.writerow(out)


def emit_report(bundle: ReportBundle, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write the report files; `fmt` picks CSV matrices plus summary.json, or
    a single wide summary.json."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary = {
        "config_hash": bundle.config_hash,
        "alpha": bundle.alpha,
        "dataset_order": list(bundle.dataset_order),
        "gdv_by_dataset": bundle.gdv_by_dataset,
        "n_runs_ok": bundle.n_runs_ok,
        "n_runs_diverged": bundle.n_runs_diverged,
        "skipped_groups": bundle.skipped_groups,
        "acceptance_table": bundle.acceptance_rows,
        "alpha_sweep": bundle.alpha_rows,
        "ratio_breakdown": bundle.ratio_rows,
        "heatmap": bundle.heatmap_rows,
    }
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(summary_path)

    if fmt == "csv":
        heat_path = out_dir / "heatmap.csv"
        _write_csv(
            heat_path,
            bundle.config_hash,
            ["dataset", "gdv", "train_loss", "regime", "criterion", "ratio",
             "p_value", "reject", "test_used", "n_folds"],
            bundle.heatmap_rows,
        )
        written.append(heat_path)

        acc_fields = ["train_loss", "regime"]
        for _, column in _CRITERION_COLUMNS:
            acc_fields.extend([f"{column}_percent", f"{column}_n"])
        acc_fields = [f for f in acc_fields if any(f in row for row in bundle.acceptance_rows)] or acc_fields
        acc_path = out_dir / "acceptance.csv"
        _write_csv(acc_path, bundle.config_hash, acc_fields, bundle.acceptance_rows)
        written.append(acc_path)

        alpha_path = out_dir / "alpha_sweep.csv"
        _write_csv(
            alpha_path,
            bundle.config_hash,
            ["alpha", "train_loss", "regime", "criterion", "n_accepted", "n_total", "percent"],
            bundle.alpha_rows,
        )
        written.append(alpha_path)

        ratio_path = out_dir / "ratio_breakdown.csv"
        _write_csv(
            ratio_path,
            bundle.config_hash,
            ["train_loss", "regime", "criterion", "ratio", "n_accepted", "n_total", "percent"],
            bundle.ratio_rows,
        )
        written.append(ratio_path)
    return written


def analyze_run_dir(
    run_dir: str | Path,
    alpha: float | None = None,
    alpha_grid: tuple[float, ...] | None = None,
) -> tuple[ReportBundle, ExperimentConfig]:
    cfg, records = load_run_dir(run_dir)
    return analyze(records, cfg, alpha=alpha, alpha_grid=alpha_grid), cfg


# ---------------------------------------------------------------------------
# ingest


def ingest_dataset(
    data_path: str | Path,
    schema_path: str | Path | None = None,
    target: str | None = None,
) -> tuple[Dataset, dict]:
    """Validate, encode, and score one dataset; returns (dataset, report)."""
    if schema_path is None:
        schema = infer_schema(data_path, target=target)
    else:
        schema = Schema.from_json_file(schema_path)
    raw = load_csv(data_path, schema)
    ds = encode(raw, schema)
    counts = np.bincount(ds.y, minlength=ds.n_classes)
    report = {
        "data": str(data_path),
        "n_rows": len(raw),
        "n_rows_dropped_missing": raw.n_dropped_missing,
        "n_features_encoded": ds.n_features,
        "n_classes": ds.n_classes,
        "class_counts": {ds.class_labels[i]: int(c) for i, c in enumerate(counts)},
        "gdv": gdv(ds),
    }
    return ds, report
