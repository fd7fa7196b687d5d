import numpy as np
import pytest
from numpy.testing import assert_allclose

from lsrtglm import (
    LsrParams,
    LsrRank,
    TrialRecord,
    auc_score,
    classification_report,
    convergence_success_rate,
    early_stop_select,
    estimation_error,
    mean_curve_and_band,
    prediction_error,
    random_ground_truth,
)


def brute_force_auc(scores, labels):
    """Pair-counting definition: wins + half ties over all pos-neg pairs."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def make_record(trial, series, diverged=False):
    arr = np.asarray(series, dtype=float)
    return TrialRecord(
        algorithm="lsrtr", trial=trial, seed=trial, loss=arr, est_error=arr,
        pred_error=arr, elapsed_s=np.zeros_like(arr), diverged=diverged,
    )


def test_estimation_error_basics(rng):
    truth = random_ground_truth((6, 7, 8), LsrRank((2, 2, 2), 2), rng)
    assert estimation_error(truth, truth) == 0.0
    zero = LsrParams(np.zeros_like(truth.core), truth.factors)
    assert estimation_error(truth, zero) == pytest.approx(1.0)
    doubled = LsrParams(2.0 * truth.core, truth.factors)
    assert estimation_error(truth, doubled) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        estimation_error(zero, truth)


def test_estimation_error_invariant_to_component_permutation(rng):
    truth = random_ground_truth((6, 7, 8), LsrRank((2, 2, 2), 3), rng)
    estimate = random_ground_truth((6, 7, 8), LsrRank((2, 2, 2), 3), rng)
    permuted = LsrParams(estimate.core, [estimate.factors[i] for i in (2, 0, 1)])
    assert estimation_error(truth, permuted) == pytest.approx(
        estimation_error(truth, estimate), rel=1e-12
    )


def test_prediction_error_zero_at_perfect_prediction(rng):
    y = np.abs(rng.standard_normal(20)) + 0.5
    for family in ("linear", "logistic", "poisson"):
        assert prediction_error(family, y, y.copy()) == pytest.approx(0.0, abs=1e-15)


def test_prediction_error_formulas():
    y = np.array([1.0, 0.0, 1.0, 0.0])
    assert prediction_error("logistic", y, 1.0 - y) == pytest.approx(1.0)
    e = np.e - 1.0
    assert prediction_error("poisson", [e, e], [0.0, 0.0]) == pytest.approx(1.0)
    assert prediction_error("linear", [1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)


def test_prediction_error_guards():
    with pytest.raises(ValueError):
        prediction_error("linear", [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        prediction_error("poisson", [1.0, -1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        prediction_error("linear", [1.0], [1.0, 2.0])


def test_auc_matches_brute_force(rng):
    for _ in range(50):
        n = int(rng.integers(5, 200))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        # quantized scores force ties through the midrank path
        scores = np.round(rng.standard_normal(n), 1)
        assert auc_score(scores, labels) == pytest.approx(
            brute_force_auc(scores, labels), abs=1e-12
        )


def test_auc_matches_sklearn(rng):
    from sklearn.metrics import roc_auc_score

    for _ in range(10):
        labels = rng.integers(0, 2, 50)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.standard_normal(50)
        assert auc_score(scores, labels) == pytest.approx(roc_auc_score(labels, scores))


def test_auc_edge_cases():
    assert auc_score([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc_score([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        auc_score([0.1, 0.2], [1, 1])


def test_classification_report_worked_example():
    # labels (1,0,1,0) with scores (0.9,0.8,0.4,0.1) at threshold 0.5:
    # predictions (1,1,0,0) give TP=1 FP=1 FN=1 TN=1; ranking pairs win 3 of 4
    rep = classification_report([0.9, 0.8, 0.4, 0.1], [1, 0, 1, 0])
    assert rep.auc == pytest.approx(0.75)
    assert rep.sensitivity == pytest.approx(0.5)
    assert rep.specificity == pytest.approx(0.5)
    assert rep.accuracy == pytest.approx(0.5)
    assert rep.f1 == pytest.approx(0.5)


def test_classification_report_matches_sklearn(rng):
    from sklearn.metrics import accuracy_score, f1_score, recall_score

    labels = rng.integers(0, 2, 120)
    labels[0], labels[1] = 0, 1
    scores = rng.random(120)
    rep = classification_report(scores, labels)
    pred = (scores >= 0.5).astype(int)
    assert rep.accuracy == pytest.approx(accuracy_score(labels, pred))
    assert rep.f1 == pytest.approx(f1_score(labels, pred))
    assert rep.sensitivity == pytest.approx(recall_score(labels, pred))


def test_classification_report_perfect_separation():
    rep = classification_report([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert rep.auc == 1.0
    assert rep.accuracy == 1.0
    assert rep.f1 == 1.0
    assert not rep.f1_degenerate


def test_classification_report_consistency(rng):
    labels = rng.integers(0, 2, 80)
    labels[:2] = [0, 1]
    scores = rng.random(80)
    rep = classification_report(scores, labels)
    pred = scores >= 0.5
    tp = np.sum(pred & (labels == 1))
    tn = np.sum(~pred & (labels == 0))
    assert rep.accuracy == pytest.approx((tp + tn) / 80)
    assert 0.0 <= rep.sensitivity <= 1.0
    assert 0.0 <= rep.specificity <= 1.0


def test_classification_report_rejects_single_class():
    with pytest.raises(ValueError):
        classification_report([0.4, 0.6], [1, 1])
    with pytest.raises(ValueError):
        classification_report([0.4, 0.6], [0, 2])


def test_mean_curve_single_trial_zero_band():
    mean, std = mean_curve_and_band([make_record(0, [3.0, 2.0, 1.0])], "loss")
    assert_allclose(mean, [3, 2, 1])
    assert_allclose(std, 0.0)


def test_mean_curve_opposite_trials_cancel():
    v = np.array([1.0, -2.0, 3.0])
    mean, _ = mean_curve_and_band([make_record(0, v), make_record(1, -v)], "loss")
    assert_allclose(mean, 0.0, atol=1e-15)


def test_mean_curve_excludes_diverged_and_truncates():
    records = [
        make_record(0, [3.0, 2.0, 1.0]),
        make_record(1, [4.0, 3.0]),
        make_record(2, [9.0, np.inf], diverged=True),
    ]
    mean, std = mean_curve_and_band(records, "loss")
    assert mean.shape == (2,)
    assert_allclose(mean, [3.5, 2.5])
    with pytest.raises(ValueError):
        mean_curve_and_band([records[2]], "loss")


def test_convergence_success_rate_counts():
    ok = [make_record(i, [1.0]) for i in range(3)]
    bad = [make_record(i, [1.0], diverged=True) for i in range(2)]
    assert convergence_success_rate(ok) == 1.0
    assert convergence_success_rate(bad) == 0.0
    assert convergence_success_rate(ok + bad) == pytest.approx(0.6)


def test_early_stop_select_rules():
    assert early_stop_select([0.5, 0.4, 0.3, 0.2]) == 3
    assert early_stop_select([0.4, 0.2, 0.3]) == 1
    assert early_stop_select([0.3, 0.2, 0.2]) == 1
    with pytest.raises(ValueError):
        early_stop_select([])
