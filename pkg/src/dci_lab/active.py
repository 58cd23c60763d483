"""Pool-based active-learning simulation.

One experiment: draw a held-out test set and an initial labelled set, train
a model, then repeatedly (a) draw a small random candidate batch from the
unlabelled pool, (b) move the strategy's pick into the labelled set, and
(c) at update boundaries retrain and record the test metric. Model-based
strategies score candidates with the model from the most recent boundary
(it is stale within an update); impurity-based strategies rescore against
the live labelled set, which needs no training at all.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset, PcaModel, pca_fit, pca_project
from .dci import DciParams, dci_scores
from .metrics import accuracy, auroc, rmse
from .neighbors import nearest_neighbors
from .models import (
    CLASSIFICATION,
    EnsembleConfig,
    EnsemblePrediction,
    ensemble_binary_uncertainty,
    fit_ensemble,
    knn_predict,
    max_prob_uncertainty,
    mean_std_uncertainty,
    predict,
    regression_std_uncertainty,
)

RANDOM = "random"
DCI_HIGH = "dci-high"
DCI_LOW = "dci-low"
MODEL_UNCERTAINTY = "model-uncertainty"
STRATEGY_TAGS = (RANDOM, DCI_HIGH, DCI_LOW, MODEL_UNCERTAINTY)

UNCERTAINTY_KINDS = ("eq3_binary", "regression_std", "max_prob", "mean_std")
METRICS = ("auroc", "accuracy", "rmse")

# Sub-stream constants separating the experiment's RNG consumers.
_STREAM_SPLIT = 0
_STREAM_SELECT = 1
_STREAM_MODEL = 2


@dataclass(frozen=True)
class Strategy:
    """How the next pool point is chosen.

    ``kind`` names the model-uncertainty formula and is present exactly for
    the model-uncertainty tag; ``dci_params`` is present exactly for the
    impurity tags, which may also score in a PCA feature space refit at
    each model update.
    """

    tag: str
    kind: str | None = None
    dci_params: DciParams | None = None
    feature_space: str = "raw"
    pca_components: int = 0

    def __post_init__(self) -> None:
        if self.tag not in STRATEGY_TAGS:
            raise ValueError(f"unknown strategy tag {self.tag!r}")
        if (self.kind is not None) != (self.tag == MODEL_UNCERTAINTY):
            raise ValueError("kind is required for model-uncertainty and only there")
        if self.kind is not None and self.kind not in UNCERTAINTY_KINDS:
            raise ValueError(f"unknown uncertainty kind {self.kind!r}")
        if (self.dci_params is not None) != (self.tag in (DCI_HIGH, DCI_LOW)):
            raise ValueError("dci_params is required for dci strategies and only there")
        if self.feature_space not in ("raw", "pca"):
            raise ValueError(f"unknown feature space {self.feature_space!r}")
        if self.feature_space == "pca":
            if self.tag not in (DCI_HIGH, DCI_LOW):
                raise ValueError("pca feature space applies to dci strategies only")
            if self.pca_components < 1:
                raise ValueError("pca feature space needs pca_components >= 1")

    @property
    def label(self) -> str:
        if self.tag == MODEL_UNCERTAINTY:
            return f"uncertainty-{self.kind}"
        if self.tag in (DCI_HIGH, DCI_LOW) and self.feature_space == "pca":
            return f"{self.tag}-pca{self.pca_components}"
        return self.tag


@dataclass(frozen=True)
class ModelConfig:
    """The predictor retrained at update boundaries."""

    kind: str = "ensemble"
    n_trees: int = 10
    max_depth: int | None = None
    min_leaf: int = 1
    knn_k: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("ensemble", "knn"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.n_trees < 1 or self.min_leaf < 1 or self.knn_k < 1:
            raise ValueError("model counts must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Dataset
    strategy: Strategy
    model: ModelConfig = field(default_factory=ModelConfig)
    metric: str = "accuracy"
    initial_train_size: int = 10
    additions_per_update: int = 5
    n_updates: int = 0
    n_seeds: int = 1
    candidate_batch_size: int = 5
    test_size: int = 1

    def __post_init__(self) -> None:
        ds = self.dataset
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if min(self.initial_train_size, self.candidate_batch_size, self.test_size) < 1:
            raise ValueError("sizes must be positive")
        if self.additions_per_update < 1 and self.n_updates > 0:
            raise ValueError("additions_per_update must be positive when updating")
        if self.n_updates < 0 or self.n_seeds < 1:
            raise ValueError("counts must be non-negative")
        need = self.test_size + self.initial_train_size + self.n_updates * self.additions_per_update
        if need > ds.n_rows:
            raise ValueError(
                f"schedule needs {need} rows but the dataset has {ds.n_rows}"
            )
        if self.metric == "rmse":
            if ds.is_classification:
                raise ValueError("rmse requires a numeric label")
        elif not ds.is_classification:
            raise ValueError(f"{self.metric} requires a class label")
        if self.metric == "auroc" and ds.class_count != 2:
            raise ValueError("auroc requires a binary label")
        s = self.strategy
        if s.tag == MODEL_UNCERTAINTY:
            if s.kind == "eq3_binary" and (not ds.is_classification or ds.class_count != 2):
                raise ValueError("eq3_binary requires a binary class label")
            if s.kind == "regression_std" and ds.is_classification:
                raise ValueError("regression_std requires a numeric label")
            if s.kind in ("max_prob", "mean_std") and not ds.is_classification:
                raise ValueError(f"{s.kind} requires a class label")
            if s.kind in ("eq3_binary", "regression_std", "mean_std") and self.model.kind != "ensemble":
                raise ValueError(f"{s.kind} requires the ensemble model")
            if s.kind == "mean_std" and self.model.n_trees < 2:
                raise ValueError("mean_std requires at least 2 ensemble members")

    @property
    def task(self) -> str:
        return CLASSIFICATION if self.dataset.is_classification else "regression"


@dataclass(frozen=True)
class LearningCurve:
    """Test-metric values at each labelled-set size of one seeded run."""

    points: tuple[tuple[int, float], ...]
    seed: int
    strategy: str
    metric: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple((int(s), float(v)) for s, v in self.points))
        sizes = [s for s, _ in self.points]
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("train sizes must be non-empty and strictly increasing")

    @property
    def train_sizes(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.points)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)


@dataclass(frozen=True)
class SummaryRow:
    strategy: str
    train_size: int
    mean: float
    median: float
    q25: float
    q75: float


@dataclass
class SelectionContext:
    """Everything a strategy may consult when ranking candidates.

    ``model_score`` maps candidate pool indices to uncertainties using the
    model from the last update boundary; ``labelled`` and ``proj_labelled``
    track the live labelled set, which impurity scoring follows point by
    point.
    """

    features: np.ndarray
    codes: np.ndarray
    n_classes: int
    labelled: np.ndarray
    batch_size: int
    pca: PcaModel | None = None
    proj_labelled: np.ndarray | None = None
    model_score: Callable[[np.ndarray], np.ndarray] | None = None


def _dci_candidate_scores(
    ctx: SelectionContext, strategy: Strategy, candidates: np.ndarray
) -> np.ndarray:
    params = strategy.dci_params
    if strategy.feature_space == "pca":
        ref = ctx.proj_labelled
        query = pca_project(ctx.pca, ctx.features[candidates])
    else:
        ref = ctx.features[ctx.labelled]
        query = ctx.features[candidates]
    k_eff = min(params.k, ref.shape[0])
    idx, dist = nearest_neighbors(query, ref, k_eff)
    return dci_scores(ctx.codes[ctx.labelled][idx], dist, ctx.n_classes, params)


def select_next(
    unlabelled: np.ndarray,
    strategy: Strategy,
    ctx: SelectionContext,
    rng: np.random.Generator,
) -> int:
    """Pick one unlabelled pool index.

    Draws min(batch, remaining) distinct candidates uniformly; the random
    strategy takes the first draw, the others take the arg-extreme of their
    score over the batch with ties going to the lowest pool index.
    """
    unlabelled = np.asarray(unlabelled)
    if unlabelled.size == 0:
        raise ValueError("the unlabelled pool is empty")
    m = min(ctx.batch_size, unlabelled.size)
    candidates = rng.choice(unlabelled, size=m, replace=False)
    if strategy.tag == RANDOM:
        return int(candidates[0])
    candidates = np.sort(candidates)
    if strategy.tag == MODEL_UNCERTAINTY:
        scores = np.asarray(ctx.model_score(candidates), dtype=np.float64)
    else:
        scores = _dci_candidate_scores(ctx, strategy, candidates)
    pick = int(np.argmin(scores)) if strategy.tag == DCI_LOW else int(np.argmax(scores))
    return int(candidates[pick])


def _model_seed(seed: int, update: int) -> int:
    return int(np.random.SeedSequence([seed, _STREAM_MODEL, update]).generate_state(1)[0])


class _BoundaryModel:
    """The predictor fitted at an update boundary, with its scoring closures."""

    def __init__(self, config: ExperimentConfig, train: Dataset, seed: int):
        self.config = config
        self.train = train
        if config.model.kind == "ensemble":
            self.ensemble = fit_ensemble(
                train,
                EnsembleConfig(
                    n_trees=config.model.n_trees,
                    max_depth=config.model.max_depth,
                    min_leaf=config.model.min_leaf,
                    seed=seed,
                ),
            )
        else:
            self.ensemble = None

    def _predict(self, X: np.ndarray) -> EnsemblePrediction:
        if self.ensemble is not None:
            return predict(self.ensemble, X)
        out = knn_predict(self.train, X, self.config.model.knn_k)
        out = np.asarray(out)
        task = CLASSIFICATION if self.train.is_classification else "regression"
        return EnsemblePrediction(per_member=out[None], aggregate=out, task=task)

    def uncertainty(self, X: np.ndarray) -> np.ndarray:
        pred = self._predict(X)
        kind = self.config.strategy.kind
        fn = {
            "eq3_binary": ensemble_binary_uncertainty,
            "regression_std": regression_std_uncertainty,
            "max_prob": max_prob_uncertainty,
            "mean_std": mean_std_uncertainty,
        }[kind]
        return np.asarray(fn(pred), dtype=np.float64)

    def evaluate(self, test_X: np.ndarray, test_y: np.ndarray) -> float:
        pred = self._predict(test_X)
        metric = self.config.metric
        if metric == "rmse":
            return rmse(pred.aggregate, test_y)
        if metric == "auroc":
            return auroc(pred.aggregate[:, 1], test_y)
        return accuracy(pred.aggregate.argmax(axis=1), test_y)


def _class_codes(ds: Dataset) -> tuple[np.ndarray, int]:
    # Impurity scoring always needs class ids; for a numeric label the
    # distinct values over the whole dataset act as the classes.
    if ds.is_classification:
        return ds.labels, ds.class_count
    uniques, codes = np.unique(ds.labels, return_inverse=True)
    return codes.astype(np.int64), len(uniques)


def run_experiment(config: ExperimentConfig, seed: int) -> LearningCurve:
    """One seeded simulation producing n_updates + 1 curve points."""
    ds = config.dataset
    rng_split = np.random.default_rng([seed, _STREAM_SPLIT])
    rng_select = np.random.default_rng([seed, _STREAM_SELECT])

    perm = rng_split.permutation(ds.n_rows)
    test_idx = perm[: config.test_size]
    labelled = list(perm[config.test_size : config.test_size + config.initial_train_size])
    unlabelled = np.sort(perm[config.test_size + config.initial_train_size :])

    codes, n_classes = _class_codes(ds)
    test_X = ds.features[test_idx]
    test_y = ds.labels[test_idx]
    strategy = config.strategy
    use_pca = strategy.feature_space == "pca"

    points: list[tuple[int, float]] = []
    for update in range(config.n_updates + 1):
        labelled_arr = np.asarray(labelled, dtype=np.intp)
        boundary = _BoundaryModel(config, ds.select_rows(labelled_arr), _model_seed(seed, update))
        pca = None
        proj = None
        if use_pca:
            n_comp = min(strategy.pca_components, len(labelled), ds.n_features)
            pca = pca_fit(ds.features[labelled_arr], n_comp)
            proj = pca_project(pca, ds.features[labelled_arr])
        points.append((len(labelled), boundary.evaluate(test_X, test_y)))
        if update == config.n_updates:
            break
        for _ in range(config.additions_per_update):
            ctx = SelectionContext(
                features=ds.features,
                codes=codes,
                n_classes=n_classes,
                labelled=np.asarray(labelled, dtype=np.intp),
                batch_size=config.candidate_batch_size,
                pca=pca,
                proj_labelled=proj,
                model_score=(lambda cands: boundary.uncertainty(ds.features[cands]))
                if strategy.tag == MODEL_UNCERTAINTY
                else None,
            )
            pick = select_next(unlabelled, strategy, ctx, rng_select)
            labelled.append(pick)
            unlabelled = np.delete(unlabelled, np.searchsorted(unlabelled, pick))
            if use_pca:
                proj = np.vstack([proj, pca_project(pca, ds.features[pick][None, :])])

    return LearningCurve(
        points=tuple(points), seed=seed, strategy=strategy.label, metric=config.metric
    )


def _run_one(args: tuple[ExperimentConfig, int]) -> LearningCurve:
    return run_experiment(*args)


def run_many(
    config: ExperimentConfig, base_seed: int = 0, threads: int = 1
) -> list[LearningCurve]:
    """n_seeds independent experiments with seeds base_seed, base_seed+1, ..."""
    seeds = [base_seed + i for i in range(config.n_seeds)]
    if threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_one, [(config, s) for s in seeds]))
    return [run_experiment(config, s) for s in seeds]


def aggregate(curves: Sequence[LearningCurve]) -> list[SummaryRow]:
    """Mean, median and quartiles of the metric at each train size.

    Curves are grouped by strategy label; all curves must share one train
    size schedule. Quartiles interpolate linearly between order statistics.
    """
    if not curves:
        raise ValueError("no curves to aggregate")
    schedule = curves[0].train_sizes
    for c in curves:
        if c.train_sizes != schedule:
            raise ValueError("curves have mismatched train-size schedules")
    labels = []
    for c in curves:
        if c.strategy not in labels:
            labels.append(c.strategy)
    rows: list[SummaryRow] = []
    for label in labels:
        values = np.array([c.values for c in curves if c.strategy == label])
        q25, med, q75 = np.quantile(values, [0.25, 0.5, 0.75], axis=0)
        mean = values.mean(axis=0)
        for j, size in enumerate(schedule):
            rows.append(
                SummaryRow(
                    strategy=label,
                    train_size=int(size),
                    mean=float(mean[j]),
                    median=float(med[j]),
                    q25=float(q25[j]),
                    q75=float(q75[j]),
                )
            )
    return rows


def write_curves_csv(path: str | Path, curves: Sequence[LearningCurve]) -> None:
    lines = ["strategy,seed,train_size,metric,value"]
    for c in curves:
        for size, value in c.points:
            lines.append(f"{c.strategy},{c.seed},{size},{c.metric},{format(value + 0.0, '.9g')}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_csv(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    lines = ["strategy,train_size,mean,median,q25,q75"]
    for r in rows:
        stats = ",".join(
            format(v + 0.0, ".9g") for v in (r.mean, r.median, r.q25, r.q75)
        )
        lines.append(f"{r.strategy},{r.train_size},{stats}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
