"""Leave-one-patient-out evaluation and the three experiment grids.

Every fold holds out all windows of one patient, fits the binning model,
the age-matched feature selection, and the classifier on the remaining
patients only, then predicts the held-out patient's windows sequentially.
Confusion counts are pooled over folds (micro-averaged) before computing
precision, recall, and F2. Reports are deterministic given (dataset,
config, seed) and independent of the thread count used for fold execution.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import classifiers as clf
from .dataio import Dataset
from .features import FeatureWindow, extract_all
from .metrics import f2_from_counts, f2_score
from .model import SIGNALS, feature_indices_for_modality
from .transform import apply_bins, build_selection_subsample, fit_bins, select_features
from .windowing import WindowSpec, WindowingConfig

logger = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("nb", "brf", "ee", "iforest", "random")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment arm; the defaults reproduce the main pipeline."""

    classifier: str = "nb"
    windowing: WindowingConfig = field(default_factory=WindowingConfig)
    bins: int = 15
    selection: bool = True
    selection_pool: int = 100  # non-relapse windows pooled for MI ranking
    selection_top: int = 5  # features kept per fold
    include_demographics: bool = True
    modality: str = "all"  # all | ema | one signal name
    seed: int = 0
    nb_alpha: float = 1.0
    brf_trees: int = 51
    ee_bags: int = 101
    ee_rounds: int = 10
    iforest_trees: int = 101
    iforest_subsample: int = 256
    decision_threshold: float = 0.5
    baseline_runs: int = 1000

    def __post_init__(self) -> None:
        if self.classifier not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        valid_modalities = {"all", "ema"} | {s.value for s in SIGNALS}
        if self.modality not in valid_modalities:
            raise ValueError(f"unknown modality {self.modality!r}")


@dataclass(frozen=True)
class PredictionRow:
    spec: WindowSpec
    label: int
    predicted: int
    score: float


@dataclass(frozen=True)
class FoldReport:
    patient_id: str
    tp: int
    fp: int
    fn: int
    tn: int
    train_windows: int
    train_relapse_windows: int
    selected: tuple[str, ...] | None = None
    selected_scores: tuple[float, ...] | None = None
    warning: str | None = None


@dataclass
class EvalReport:
    experiment: str
    arm: str
    classifier: str
    rows: list[PredictionRow]
    tp: float
    fp: float
    fn: float
    tn: float
    precision: float
    recall: float
    f2: float
    folds: list[FoldReport]
    config: dict
    seed: int
    metric_std: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "experiment": self.experiment,
            "arm": self.arm,
            "classifier": self.classifier,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f2": self.f2,
            "config": self.config,
            "seed": self.seed,
            "folds": [
                {
                    "patient_id": f.patient_id,
                    "tp": f.tp,
                    "fp": f.fp,
                    "fn": f.fn,
                    "tn": f.tn,
                    "train_windows": f.train_windows,
                    "train_relapse_windows": f.train_relapse_windows,
                    "selected": list(f.selected) if f.selected is not None else None,
                    "selected_scores": list(f.selected_scores)
                    if f.selected_scores is not None
                    else None,
                    "warning": f.warning,
                }
                for f in self.folds
            ],
        }
        if self.metric_std is not None:
            doc["metric_std"] = self.metric_std
        return doc


def _config_echo(config: ExperimentConfig) -> dict:
    return asdict(config)


def _fit_and_predict(
    config: ExperimentConfig,
    Xtr: np.ndarray,
    ytr: np.ndarray,
    Xte: np.ndarray,
    seed: np.random.SeedSequence,
) -> tuple[np.ndarray, np.ndarray]:
    kind = config.classifier
    if kind == "nb":
        model = clf.nb_fit(Xtr, ytr, alpha=config.nb_alpha, n_categories=config.bins)
        return clf.nb_predict_many(model, Xte)
    if kind == "brf":
        model = clf.brf_fit(
            Xtr, ytr, trees=config.brf_trees, seed=seed, decision_threshold=config.decision_threshold
        )
        return clf.brf_predict_many(model, Xte)
    if kind == "ee":
        model = clf.ee_fit(
            Xtr,
            ytr,
            bags=config.ee_bags,
            rounds=config.ee_rounds,
            seed=seed,
            decision_threshold=config.decision_threshold,
        )
        return clf.ee_predict_many(model, Xte)
    if kind == "iforest":
        model = clf.iforest_fit(
            Xtr, ytr, trees=config.iforest_trees, subsample=config.iforest_subsample, seed=seed
        )
        return clf.iforest_predict_many(model, Xte)
    raise ValueError(f"unknown classifier {kind!r}")


def _confusion(labels: np.ndarray, predicted: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(((labels == 1) & (predicted == 1)).sum())
    fp = int(((labels == 0) & (predicted == 1)).sum())
    fn = int(((labels == 1) & (predicted == 0)).sum())
    tn = int(((labels == 0) & (predicted == 0)).sum())
    return tp, fp, fn, tn


def _run_fold(
    config: ExperimentConfig,
    train: list[FeatureWindow],
    test: list[FeatureWindow],
    test_age: float,
    fold_seed: np.random.SeedSequence,
) -> tuple[list[PredictionRow], FoldReport]:
    patient_id = test[0].spec.patient_id
    ytr = np.array([w.label for w in train], dtype=np.int64)
    yte = np.array([w.label for w in test], dtype=np.int64)
    train_relapse = int(ytr.sum())
    selected_names: tuple[str, ...] | None = None
    selected_scores: tuple[float, ...] | None = None
    warning = None

    if np.unique(ytr).size < 2:
        # No second class to learn from: fall back to majority prediction.
        majority = int(np.bincount(ytr, minlength=2).argmax())
        warning = "single_class_training"
        logger.warning("fold %s: training windows are single-class; predicting majority", patient_id)
        predicted = np.full(yte.size, majority, dtype=np.int64)
        scores = np.full(yte.size, float(ytr.mean()) if ytr.size else 0.0)
    else:
        train_matrix = np.stack([w.values for w in train])
        bins = fit_bins(train_matrix, n_bins=config.bins)
        candidates = feature_indices_for_modality(config.modality, config.include_demographics)
        if config.selection:
            subsample = build_selection_subsample(train, test_age, config.selection_pool)
            selection = select_features(subsample, bins, config.selection_top, candidates)
            chosen = selection.selected
            selected_names = selection.selected_names
            selected_scores = tuple(float(selection.scores[i]) for i in chosen)
        else:
            chosen = tuple(candidates)
        Xtr = apply_bins(bins, train_matrix)[:, chosen]
        Xte = apply_bins(bins, np.stack([w.values for w in test]))[:, chosen]
        predicted, scores = _fit_and_predict(config, Xtr, ytr, Xte, fold_seed)

    rows = [
        PredictionRow(spec=w.spec, label=int(w.label), predicted=int(p), score=float(s))
        for w, p, s in zip(test, predicted, scores)
    ]
    tp, fp, fn, tn = _confusion(yte, predicted)
    report = FoldReport(
        patient_id=patient_id,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        train_windows=len(train),
        train_relapse_windows=train_relapse,
        selected=selected_names,
        selected_scores=selected_scores,
        warning=warning,
    )
    return rows, report


def run_lopo(
    dataset: Dataset,
    config: ExperimentConfig,
    threads: int = 1,
    experiment: str = "evaluate",
    arm: str | None = None,
    windows: Sequence[FeatureWindow] | None = None,
) -> EvalReport:
    """Leave-one-patient-out evaluation of one experiment arm.

    `windows` may carry precomputed feature windows (matching
    config.windowing) to share extraction across arms.
    """
    if windows is None:
        windows = extract_all(dataset, config.windowing)
    windows = list(windows)
    if sum(w.label for w in windows) == 0:
        raise ValueError("no_positive_class: dataset has no relapse-labeled windows")

    by_patient: dict[str, list[FeatureWindow]] = {}
    for w in windows:
        by_patient.setdefault(w.spec.patient_id, []).append(w)
    fold_ids = sorted(by_patient)
    ages = {p.patient_id: float(p.age) for p in dataset.patients}

    seeds = np.random.SeedSequence(config.seed).spawn(len(fold_ids) + 1)

    if config.classifier == "random":
        return _run_random_baseline(config, by_patient, fold_ids, seeds[-1], experiment, arm)

    def fold(i: int) -> tuple[list[PredictionRow], FoldReport]:
        pid = fold_ids[i]
        train = [w for w in windows if w.spec.patient_id != pid]
        return _run_fold(config, train, by_patient[pid], ages[pid], seeds[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fold, range(len(fold_ids))))
    else:
        results = [fold(i) for i in range(len(fold_ids))]

    rows: list[PredictionRow] = []
    folds: list[FoldReport] = []
    for fold_rows, fold_report in results:
        rows.extend(fold_rows)
        folds.append(fold_report)
    tp = sum(f.tp for f in folds)
    fp = sum(f.fp for f in folds)
    fn = sum(f.fn for f in folds)
    tn = sum(f.tn for f in folds)
    precision, recall, f2 = f2_from_counts(tp, fp, fn)
    return EvalReport(
        experiment=experiment,
        arm=arm or config.classifier,
        classifier=config.classifier,
        rows=rows,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        precision=precision,
        recall=recall,
        f2=f2,
        folds=folds,
        config=_config_echo(config),
        seed=config.seed,
    )


def _run_random_baseline(
    config: ExperimentConfig,
    by_patient: dict[str, list[FeatureWindow]],
    fold_ids: list[str],
    seed: np.random.SeedSequence,
    experiment: str,
    arm: str | None,
) -> EvalReport:
    """Prevalence-matched coin flips, pooled per run across folds, averaged over runs."""
    all_labels: list[int] = []
    ratios: list[float] = []
    folds: list[FoldReport] = []
    total_relapse = sum(w.label for ws in by_patient.values() for w in ws)
    total_windows = sum(len(ws) for ws in by_patient.values())
    for pid in fold_ids:
        test = by_patient[pid]
        test_relapse = sum(w.label for w in test)
        train_windows = total_windows - len(test)
        train_relapse = total_relapse - test_relapse
        prevalence = train_relapse / train_windows if train_windows else 0.0
        all_labels.extend(w.label for w in test)
        ratios.extend([prevalence] * len(test))
        folds.append(
            FoldReport(
                patient_id=pid,
                tp=0,
                fp=0,
                fn=0,
                tn=0,
                train_windows=train_windows,
                train_relapse_windows=train_relapse,
            )
        )

    rng = np.random.default_rng(seed)
    result = clf.baseline_over_runs(
        np.array(all_labels, dtype=np.int64), np.array(ratios), config.baseline_runs, rng
    )
    return EvalReport(
        experiment=experiment,
        arm=arm or "random",
        classifier="random",
        rows=[],
        tp=result.tp,
        fp=result.fp,
        fn=result.fn,
        tn=result.tn,
        precision=result.precision,
        recall=result.recall,
        f2=result.f2,
        folds=folds,
        config=_config_echo(config),
        seed=config.seed,
        metric_std={
            "precision": result.precision_std,
            "recall": result.recall_std,
            "f2": result.f2_std,
        },
    )


def run_classifier_comparison(
    dataset: Dataset, base_config: ExperimentConfig, threads: int = 1
) -> list[EvalReport]:
    """All five classifier arms on an identical pipeline; one report each."""
    windows = extract_all(dataset, base_config.windowing)
    return [
        run_lopo(
            dataset,
            replace(base_config, classifier=kind),
            threads=threads,
            experiment="compare-classifiers",
            arm=kind,
            windows=windows,
        )
        for kind in CLASSIFIER_KINDS
    ]


def run_modality_ablation(
    dataset: Dataset, base_config: ExperimentConfig, threads: int = 1
) -> list[EvalReport]:
    """One arm per signal plus an EMA arm, demographics always included,
    sorted by F2 descending."""
    windows = extract_all(dataset, base_config.windowing)
    reports = [
        run_lopo(
            dataset,
            replace(base_config, modality=modality, include_demographics=True),
            threads=threads,
            experiment="ablate-modality",
            arm=modality,
            windows=windows,
        )
        for modality in [s.value for s in SIGNALS] + ["ema"]
    ]
    reports.sort(key=lambda r: -r.f2)
    return reports


def run_selection_ablation(
    dataset: Dataset, base_config: ExperimentConfig, threads: int = 1
) -> list[EvalReport]:
    """Feature selection on/off and demographics in/out of the candidate set."""
    windows = extract_all(dataset, base_config.windowing)
    arms = [
        ("selection_with_demographics", True, True),
        ("no_feature_selection", False, True),
        ("no_demographics", True, False),
    ]
    return [
        run_lopo(
            dataset,
            replace(base_config, selection=selection, include_demographics=demographics),
            threads=threads,
            experiment="ablate-selection",
            arm=name,
            windows=windows,
        )
        for name, selection, demographics in arms
    ]


__all__ = [
    "CLASSIFIER_KINDS",
    "EvalReport",
    "ExperimentConfig",
    "FoldReport",
    "PredictionRow",
    "f2_from_counts",
    "f2_score",
    "run_classifier_comparison",
    "run_lopo",
    "run_modality_ablation",
    "run_selection_ablation",
]
