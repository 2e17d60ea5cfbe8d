"""Train-fitted categorical quantization and mutual-information selection.

Each feature is quantized into 15 equal-width bins spanning its training
range, after imputing missing values with the training mean, so no test
statistic ever leaks into the transform. Feature selection ranks candidate
features by plug-in mutual information with the label, computed on an
age-matched training subsample: all relapse windows plus the non-relapse
windows of the patients closest in age to the held-out patient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import FeatureWindow
from .model import AGE_INDEX, FEATURE_NAMES

DEFAULT_BINS = 15
DEFAULT_SUBSAMPLE_SIZE = 100  # non-relapse windows pooled for selection
DEFAULT_TOP_FEATURES = 5


@dataclass(frozen=True)
class BinningModel:
    """Per-feature imputation means and equal-width bin edges (n_bins + 1 each)."""

    impute: np.ndarray
    edges: np.ndarray
    n_bins: int = DEFAULT_BINS

    @property
    def lo(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.edges[:, -1]


@dataclass(frozen=True)
class SelectionModel:
    """Chosen feature indices (canonical order on ties) and all candidate scores."""

    selected: tuple[int, ...]
    scores: np.ndarray

    @property
    def selected_names(self) -> tuple[str, ...]:
        return tuple(FEATURE_NAMES[i] for i in self.selected)


def _as_matrix(vectors: Sequence[FeatureWindow] | Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        matrix = vectors
    else:
        rows = [v.values if isinstance(v, FeatureWindow) else v for v in vectors]
        matrix = np.stack(rows) if rows else np.empty((0, 0))
    if matrix.ndim != 2:
        raise ValueError(f"expected a matrix of feature vectors, got shape {matrix.shape}")
    return matrix.astype(float)


def fit_bins(train_vectors, n_bins: int = DEFAULT_BINS) -> BinningModel:
    """Fit imputation means and equal-width edges from training data only.

    A feature that is constant (or entirely missing) in training degenerates
    to a single category.
    """
    matrix = _as_matrix(train_vectors)
    if matrix.shape[0] == 0:
        raise ValueError("cannot fit bins on an empty training set")
    n_features = matrix.shape[1]
    impute = np.zeros(n_features)
    edges = np.zeros((n_features, n_bins + 1))
    for f in range(n_features):
        col = matrix[:, f]
        col = col[~np.isnan(col)]
        if col.size:
            impute[f] = col.mean()
            edges[f] = np.linspace(col.min(), col.max(), n_bins + 1)
        # else: all-missing feature -> impute 0, degenerate [0, 0] edges
    return BinningModel(impute=impute, edges=edges, n_bins=n_bins)


def apply_bins(model: BinningModel, vectors) -> np.ndarray:
    """Map feature vectors to categories in {0..n_bins-1}.

    Missing values are imputed with the training mean first; values outside
    the training range clamp to the extreme bins; the training maximum lands
    in the top bin. Accepts one vector or a matrix, returns the same shape.
    """
    arr = np.asarray(vectors, dtype=float)
    single = arr.ndim == 1
    matrix = arr[None, :] if single else arr
    matrix = np.where(np.isnan(matrix), model.impute, matrix)

    lo, hi = model.lo, model.hi
    width = (hi - lo) / model.n_bins
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = np.floor((matrix - lo) / width)
    raw = np.where(width > 0, raw, 0.0)
    cats = np.clip(raw, 0, model.n_bins - 1).astype(np.int64)
    return cats[0] if single else cats


def mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (nats) between two discrete columns."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise ValueError("mutual information needs at least one observation")
    n = x.size
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(joint, (xi, yi), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    outer = np.outer(px, py)
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    return max(mi, 0.0)


def build_selection_subsample(
    train_windows: Sequence[FeatureWindow],
    test_patient_age: float,
    n_nonrelapse: int = DEFAULT_SUBSAMPLE_SIZE,
) -> list[FeatureWindow]:
    """Age-matched subsample used only for feature ranking.

    Every relapse-labeled training window, plus non-relapse windows taken
    patient-by-patient in ascending |age - test age| (ties by patient id,
    then window start) until `n_nonrelapse` are collected or none remain.
    """
    if n_nonrelapse < 1:
        raise ValueError("n_nonrelapse must be >= 1")
    relapse = [w for w in train_windows if w.label == 1]
    nonrelapse = [w for w in train_windows if w.label == 0]

    def patient_key(w: FeatureWindow) -> tuple[float, str]:
        return (abs(float(w.values[AGE_INDEX]) - float(test_patient_age)), w.spec.patient_id)

    nonrelapse.sort(key=lambda w: (*patient_key(w), w.spec.feature_start))
    return relapse + nonrelapse[:n_nonrelapse]


def select_features(
    subsample: Sequence[FeatureWindow],
    bins: BinningModel,
    top: int = DEFAULT_TOP_FEATURES,
    candidates: Sequence[int] | None = None,
) -> SelectionModel:
    """Rank candidate features by mutual information with the label on the
    binned subsample and keep the top `top` (canonical order breaks ties)."""
    if not subsample:
        raise ValueError("selection_degenerate: empty subsample")
    labels = np.array([w.label for w in subsample])
    if len(set(labels.tolist())) < 2:
        raise ValueError("selection_degenerate: subsample contains a single class")

    matrix = apply_bins(bins, np.stack([w.values for w in subsample]))
    if candidates is None:
        candidates = range(matrix.shape[1])
    candidates = list(candidates)

    scores = np.full(matrix.shape[1], np.nan)
    for f in candidates:
        scores[f] = mutual_information(matrix[:, f], labels)
    ranked = sorted(candidates, key=lambda f: (-scores[f], f))
    return SelectionModel(selected=tuple(ranked[:top]), scores=scores)
