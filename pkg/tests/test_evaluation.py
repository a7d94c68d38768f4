import math

import numpy as np
import pytest

from fogshield.evaluation import (ConfusionMatrix, accuracy, confusion_matrix, cost, cross_validate, error_summary,
                                  evaluate, mse, precision_recall_f1, rate_metrics, roc_points)

FIVE = ("Normal", "Selective Forwarding", "Black hole", "Flooding", "Gray hole")
# rows are predicted classes, columns actual classes
XGB_FULL = np.array([[25820, 168, 94, 152, 95],
                     [65, 8716, 53, 42, 34],
                     [84, 32, 17356, 75, 29],
                     [65, 48, 62, 13564, 68],
                     [39, 27, 39, 61, 11562]])
XGB_DESIGNATED = np.array([[32672, 104, 127],
                           [114, 24853, 173],
                           [106, 152, 20049]])


def binary_cm(tp, fn, fp, tn):
    return ConfusionMatrix(("Normal", "Attack"), np.array([[tn, fn], [fp, tp]]))


def test_golden_full_test_set_matrix():
    cm = ConfusionMatrix(FIVE, XGB_FULL)
    assert cm.total == 78350 and cm.correct == 77018
    assert cm.total - cm.correct == 1332
    assert accuracy(cm) == pytest.approx(0.983, abs=0.0005)


def test_golden_designated_matrix():
    cm = ConfusionMatrix(("Normal", "Flooding", "Gray hole"), XGB_DESIGNATED)
    assert cm.total == 78350 and cm.correct == 77574
    assert accuracy(cm) == pytest.approx(0.9901, abs=0.0001)
    assert (cm.total - cm.correct) / cm.total == pytest.approx(0.0099, abs=0.00005)
    p, r, _ = precision_recall_f1(cm, "Normal")
    # precision divides by the predicted-row total, recall by the actual-column total
    assert p == pytest.approx(32672 / 32903)
    assert r == pytest.approx(32672 / 32892)


def test_one_vs_rest_partitions_total():
    cm = ConfusionMatrix(FIVE, XGB_FULL)
    for c in FIVE:
        assert sum(cm.one_vs_rest(c)) == cm.total


def test_accuracy_invariant_under_relabeling():
    perm = [3, 0, 4, 1, 2]
    a = ConfusionMatrix(FIVE, XGB_FULL)
    b = ConfusionMatrix(tuple(FIVE[i] for i in perm), XGB_FULL[np.ix_(perm, perm)])
    assert accuracy(a) == accuracy(b)


def test_confusion_matrix_construction():
    cm = confusion_matrix(["A", "B", "B"], ["A", "B", "B"], ("A", "B"))
    assert cm.counts.tolist() == [[1, 0], [0, 2]] and accuracy(cm) == 1.0
    cm = confusion_matrix(["A", "B"], ["B", "A"], ("A", "B"))
    assert np.trace(cm.counts) == 0
    cm = confusion_matrix([1, 1], [0, 1], ("A", "B"))
    assert cm.counts.tolist() == [[0, 0], [1, 1]]
    with pytest.raises(ValueError):
        confusion_matrix(["A"], ["C"], ("A", "B"))
    with pytest.raises(ValueError):
        confusion_matrix(["A"], ["A", "B"], ("A", "B"))


def test_rate_metrics():
    tpr, tnr, fpr, fnr = rate_metrics(binary_cm(90, 10, 5, 95), "Attack")
    assert (tpr, fpr) == pytest.approx((0.90, 0.05))
    assert tpr + fnr == pytest.approx(1) and tnr + fpr == pytest.approx(1)
    perfect = ConfusionMatrix(("A", "B"), np.diag([4, 6]))
    assert rate_metrics(perfect, "A")[0] == 1.0 and rate_metrics(perfect, "A")[2] == 0.0


def test_undefined_metrics_are_nan_not_zero():
    cm = ConfusionMatrix(("A", "B", "C"), np.array([[3, 0, 0], [0, 2, 0], [0, 0, 0]]))
    p, r, f1 = precision_recall_f1(cm, "C")
    assert math.isnan(p) and math.isnan(r) and math.isnan(f1)
    assert math.isnan(rate_metrics(cm, "C")[0])
    report = evaluate([0, 0, 1], [0, 0, 1], ("A", "B", "C"))
    assert "undefined" in report.to_text()


def test_f1():
    cm = ConfusionMatrix(("A", "B"), np.array([[8, 2], [2, 8]]))
    p, r, f1 = precision_recall_f1(cm, "A")
    assert p == r and f1 == pytest.approx(p, abs=1e-12)
    p, r, f1 = precision_recall_f1(binary_cm(90, 10, 5, 95), "Attack")
    assert f1 == pytest.approx(2 * p * r / (p + r))


def test_mse():
    assert mse([1, 2], [1, 2]) == 0
    assert mse([1, 0], [0, 1]) == 1.0
    e, t = np.random.default_rng(0).normal(size=(2, 30))
    assert mse(3 * e, 3 * t) == pytest.approx(9 * mse(e, t))
    with pytest.raises(ValueError):
        mse([1], [1, 2])


def test_error_summary():
    E = np.eye(3)[[0, 1, 2, 0]]
    assert error_summary(E, E) == (0.0, 0.0, 0.0, 0.0)
    r = np.random.default_rng(1)
    e, t = r.normal(size=(2, 40, 2))
    mae, rmse, _, _ = error_summary(e, t)
    assert rmse ** 2 == pytest.approx(mse(e, t), abs=1e-12)
    y = r.normal(size=(25, 1))
    assert error_summary(y, np.full_like(y, y.mean()))[2] == pytest.approx(100.0, abs=1e-9)
    const = np.ones((4, 1))
    assert math.isnan(error_summary(const, const * 2)[2])


def test_cost():
    assert cost(binary_cm(90, 10, 10, 90), phi=2) == pytest.approx(0.3)
    assert cost(ConfusionMatrix(("A", "B"), np.diag([5, 5])), phi=7) == 0
    cm = binary_cm(80, 20, 15, 85)
    values = [cost(cm, phi) for phi in (0, 0.5, 1, 2, 4)]
    assert values == sorted(values)
    with pytest.raises(ZeroDivisionError):
        cost(ConfusionMatrix(("A", "B"), np.array([[5, 0], [0, 0]])))


def test_roc():
    labels = [0, 0, 1, 1]
    pts, auc = roc_points([0.1, 0.2, 0.8, 0.9], labels)
    assert auc == 1.0 and pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    assert roc_points([0.5] * 4, labels)[1] == 0.5
    assert roc_points([0.9, 0.8, 0.2, 0.1], labels)[1] == 0.0
    r = np.random.default_rng(3)
    pts, auc = roc_points(r.normal(size=200), r.integers(0, 2, 200))
    fpr, tpr = zip(*pts)
    assert list(fpr) == sorted(fpr) and list(tpr) == sorted(tpr)
    with pytest.raises(ValueError):
        roc_points([0.1, 0.2], [1, 1])


class Constant:
    def __init__(self, k):
        self.k = k

    def predict(self, X):
        return np.full(len(X), self.k)


def test_cross_validation_with_constant_predictor():
    y = np.array([0, 0, 0, 1, 1, 2, 0, 1, 0, 0])
    X = np.arange(10.0)[:, None]
    with pytest.warns(UserWarning):
        cv = cross_validate(X, y, lambda X, y: Constant(0), ("A", "B", "C"), K=5, seed=2)
    from fogshield.dataset import kfold_plan
    plan = kfold_plan(10, 5, seed=2)
    expect = [np.mean(y[plan.fold(k)[1]] == 0) for k in range(5)]
    assert [f.accuracy for f in cv.folds] == pytest.approx(expect)
    assert cv.mean.accuracy == pytest.approx(np.mean(expect), abs=1e-12)


def test_leave_one_out():
    y = np.array([0, 1, 0, 1, 0, 1])
    with pytest.warns(UserWarning):
        cv = cross_validate(np.zeros((6, 1)), y, lambda X, y: Constant(1), ("A", "B"), K=6)
    assert len(cv.folds) == 6 and cv.fold_sizes == [1] * 6
    assert cv.mean.accuracy == pytest.approx(0.5)


def test_report_outputs(tmp_path):
    y = np.array([0, 1, 2, 3, 4] * 4)
    p = y.copy()
    p[:3] = 0
    rep = evaluate(y, p, FIVE, title="demo")
    assert rep.overall["correct"] + rep.overall["incorrect"] == rep.overall["total"] == 20
    assert rep.accuracy == 18 / 20
    text = rep.to_text()
    assert "demo" in text and "Gray hole" in text
    rep.to_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "name,class,value"
    assert any(s.startswith("accuracy,") for s in lines)
