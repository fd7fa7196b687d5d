"""Estimation, prediction, classification and convergence metrics.

All aggregation is over immutable per-trial records; diverged trials are
excluded from mean curves and their count is reported separately through
:func:`convergence_success_rate`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .glm import get_family
from .lsr import reconstruct

__all__ = [
    "TrialRecord",
    "ClassificationReport",
    "normalized_tensor_error",
    "estimation_error",
    "prediction_error",
    "auc_score",
    "classification_report",
    "mean_curve_and_band",
    "convergence_success_rate",
    "early_stop_select",
]


@dataclass
class TrialRecord:
    """One solver run inside a trial ensemble.

    The series are aligned per iteration (index 0 is the initial iterate).
    ``pred_error`` holds the held-out prediction error; for classification
    experiments it is the test error driving early stopping.
    """

    algorithm: str
    trial: int
    seed: object
    loss: np.ndarray
    est_error: np.ndarray
    pred_error: np.ndarray
    elapsed_s: np.ndarray
    ortho_residual: np.ndarray = field(default=None)
    diverged: bool = False


@dataclass
class ClassificationReport:
    sensitivity: float
    specificity: float
    f1: float
    auc: float
    accuracy: float
    runtime_seconds: float = 0.0
    chosen_iteration: int = -1
    f1_degenerate: bool = False


def normalized_tensor_error(b_true, b_est):
    """``||b_true - b_est||_F^2 / ||b_true||_F^2``."""
    b_true = np.asarray(b_true, dtype=float)
    denom = float(np.sum(b_true**2))
    if denom == 0.0:
        raise ValueError("reference tensor has zero norm")
    return float(np.sum((b_true - np.asarray(b_est, dtype=float)) ** 2)) / denom


def estimation_error(truth, estimate):
    """Normalized estimation error between two LSR models, compared on the
    reconstructed tensors (the parameterization itself is not identifiable)."""
    return normalized_tensor_error(reconstruct(truth), reconstruct(estimate))


def prediction_error(family, y, yhat):
    """Family-specific held-out prediction error.

    linear:   ||yhat - y||_2^2 / ||y||_2^2
    logistic: ||yhat - y||_1 / n
    poisson:  ||log(yhat+1) - log(y+1)||_2^2 / ||log(y+1)||_2^2
    """
    family = get_family(family)
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError("prediction and reference vectors differ in length")
    if family.name == "linear":
        denom = float(np.sum(y**2))
        if denom == 0.0:
            raise ValueError("zero-norm reference responses")
        return float(np.sum((yhat - y) ** 2)) / denom
    if family.name == "logistic":
        return float(np.mean(np.abs(yhat - y)))
    if np.any(y < 0) or np.any(yhat < 0):
        raise ValueError("poisson prediction error needs nonnegative values")
    log_y = np.log1p(y)
    denom = float(np.sum(log_y**2))
    if denom == 0.0:
        raise ValueError("zero-norm reference responses")
    return float(np.sum((np.log1p(yhat) - log_y) ** 2)) / denom


def auc_score(scores, labels):
    """Area under the ROC curve via the rank statistic with midrank ties."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one sample of each class")
    ranks = rankdata(scores)
    return (float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_report(scores, labels, threshold=0.5):
    """Confusion-matrix metrics at ``threshold`` plus AUC.

    A score >= threshold predicts the positive class.  F1 with an empty
    denominator is reported as 0 with ``f1_degenerate`` set.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be binary")
    pred = scores >= threshold
    actual = labels == 1
    tp = int(np.sum(pred & actual))
    tn = int(np.sum(~pred & ~actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    sens = tp / (tp + fn) if tp + fn else 0.0
    spec = tn / (tn + fp) if tn + fp else 0.0
    degenerate = (2 * tp + fp + fn) == 0
    f1 = 0.0 if degenerate else 2 * tp / (2 * tp + fp + fn)
    return ClassificationReport(
        sensitivity=sens,
        specificity=spec,
        f1=f1,
        auc=auc_score(scores, labels),
        accuracy=(tp + tn) / labels.size,
        f1_degenerate=degenerate,
    )


def mean_curve_and_band(records, series):
    """Pointwise mean and sample standard deviation of one logged series.

    Diverged trials are dropped; ragged lengths are truncated to the shortest
    remaining trajectory.  A single surviving trial yields a zero band.
    """
    kept = [np.asarray(getattr(r, series), dtype=float) for r in records if not r.diverged]
    if not kept:
        raise ValueError("all trials diverged")
    length = min(len(v) for v in kept)
    stacked = np.stack([v[:length] for v in kept])
    mean = stacked.mean(axis=0)
    if stacked.shape[0] == 1:
        return mean, np.zeros(length)
    return mean, stacked.std(axis=0, ddof=1)


def convergence_success_rate(records):
    """Fraction of trials that finished without non-finite values."""
    if not records:
        raise ValueError("no records")
    return float(np.mean([not r.diverged for r in records]))


def early_stop_select(mean_test_error):
    """Index of the global minimum of a mean error curve (first on ties)."""
    curve = np.asarray(mean_test_error, dtype=float)
    if curve.size == 0:
        raise ValueError("empty curve")
    return int(np.argmin(curve))
