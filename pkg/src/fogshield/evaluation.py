"""Confusion matrices, detection metrics, ROC sweeps and K-fold cross-validation.

Undefined metrics (zero denominators) are NaN internally and print as
``undefined``; they are never silently turned into 0.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

UNDEFINED = "undefined"


def _div(a, b) -> float:
    return float(a) / b if b else math.nan


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[p, a]``: records of actual class ``a`` predicted as ``p``."""
    class_names: tuple
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        k = len(self.class_names)
        if c.shape != (k, k) or np.any(c < 0):
            raise ValueError("counts must be a nonnegative KxK matrix")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def index(self, cls) -> int:
        if isinstance(cls, (int, np.integer)):
            if not 0 <= cls < len(self.class_names):
                raise ValueError(f"class index {cls} out of range")
            return int(cls)
        if cls not in self.class_names:
            raise ValueError(f"unknown class {cls!r}")
        return self.class_names.index(cls)

    def one_vs_rest(self, cls) -> tuple[int, int, int, int]:
        """(TP, FP, FN, TN) treating ``cls`` as the positive class."""
        k = self.index(cls)
        tp = int(self.counts[k, k])
        fp = int(self.counts[k].sum()) - tp
        fn = int(self.counts[:, k].sum()) - tp
        return tp, fp, fn, self.total - tp - fp - fn


def confusion_matrix(predictions, labels, class_names) -> ConfusionMatrix:
    class_names = tuple(class_names)
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    lookup = {n: i for i, n in enumerate(class_names)}

    def codes(v):
        out = []
        for x in v:
            if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
                if not 0 <= x < len(class_names):
                    raise ValueError(f"class index {x} out of range")
                out.append(int(x))
            elif x in lookup:
                out.append(lookup[x])
            else:
                raise ValueError(f"unknown class {x!r}")
        return np.array(out, dtype=int)

    K = len(class_names)
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (codes(predictions), codes(labels)), 1)
    return ConfusionMatrix(class_names, counts)


def rate_metrics(cm: ConfusionMatrix, positive_class) -> tuple[float, float, float, float]:
    """(TP_r, TN_r, FP_r, FN_r) for one class against the rest."""
    tp, fp, fn, tn = cm.one_vs_rest(positive_class)
    return _div(tp, tp + fn), _div(tn, tn + fp), _div(fp, fp + tn), _div(fn, fn + tp)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return cm.correct / cm.total


def precision_recall_f1(cm: ConfusionMatrix, cls) -> tuple[float, float, float]:
    tp, fp, fn, _ = cm.one_vs_rest(cls)
    p = _div(tp, tp + fp)
    r = _div(tp, tp + fn)
    f1 = 2 * p * r / (p + r) if not (math.isnan(p) or math.isnan(r)) and p + r > 0 else math.nan
    return p, r, f1


def mse(expected, predicted) -> float:
    e = np.asarray(expected, dtype=float)
    t = np.asarray(predicted, dtype=float)
    if e.shape != t.shape:
        raise ValueError("length mismatch")
    if e.size == 0:
        raise ValueError("empty input")
    return float(np.mean((e - t) ** 2))


def error_summary(expected, predicted) -> tuple[float, float, float, float]:
    """(MAE, RMSE, RAE %, RRSE %) of predicted against expected values.

    The relative errors compare against always predicting the per-column mean
    of the expected values.
    """
    e = np.asarray(expected, dtype=float)
    t = np.asarray(predicted, dtype=float)
    if e.shape != t.shape:
        raise ValueError("shape mismatch")
    if e.size == 0:
        raise ValueError("empty input")
    err = t - e
    base = e - e.mean(axis=0)
    mae = float(np.mean(np.abs(err)))
    rmse = math.sqrt(mse(e, t))
    rae = 100 * _div(np.abs(err).sum(), np.abs(base).sum())
    ratio = _div((err ** 2).sum(), (base ** 2).sum())
    rrse = 100 * math.sqrt(ratio) if not math.isnan(ratio) else math.nan
    return mae, rmse, rae, rrse


def cost(cm: ConfusionMatrix, phi: float = 1.0, positive=None) -> float:
    """Missed-detection rate plus ``phi`` times the false-alarm rate.

    ``positive`` lists the classes counted as detections; by default every
    class except the first (the normal class).
    """
    if phi < 0:
        raise ValueError("phi must be >= 0")
    pos = [cm.index(c) for c in (positive if positive is not None else range(1, len(cm.class_names)))]
    is_pos = np.zeros(len(cm.class_names), dtype=bool)
    is_pos[pos] = True
    c = cm.counts
    tp = c[np.ix_(is_pos, is_pos)].sum()
    fn = c[np.ix_(~is_pos, is_pos)].sum()
    fp = c[np.ix_(is_pos, ~is_pos)].sum()
    tn = c[np.ix_(~is_pos, ~is_pos)].sum()
    if tp + fn == 0 or fp + tn == 0:
        raise ZeroDivisionError("cost needs both positive and negative records")
    return 1 - tp / (tp + fn) + phi * fp / (fp + tn)


def roc_points(scores, labels) -> tuple[list, float]:
    """ROC curve points (FP_r, TP_r) from a threshold sweep, and the trapezoidal AUC."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    if len(s) != len(y):
        raise ValueError("scores and labels differ in length")
    P, N = int(y.sum()), int((~y).sum())
    if P == 0 or N == 0:
        raise ValueError("ROC needs both positive and negative labels")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last = np.r_[s[1:] != s[:-1], True]   # close each run of tied scores
    fpr = np.r_[0.0, fp[last] / N]
    tpr = np.r_[0.0, tp[last] / P]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))
    return list(zip(fpr.tolist(), tpr.tolist())), auc


def _fmt(v, pct=False) -> str:
    if isinstance(v, float) and math.isnan(v):
        return UNDEFINED
    if pct:
        return f"{100 * v:.1f}"
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _nanmean(values) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return math.fsum(vals) / len(vals) if vals else math.nan


PER_CLASS = ("precision", "recall", "f1", "tp_rate", "tn_rate", "fp_rate", "fn_rate")
OVERALL = ("accuracy", "correct", "incorrect", "total", "mse", "mae", "rmse", "rae", "rrse", "cost")


@dataclass
class EvalReport:
    """Metric table of one evaluation, or the average of several."""
    class_names: tuple
    overall: dict
    per_class: dict            # class name -> {metric: value}
    confusion: ConfusionMatrix | None = None
    title: str = ""

    @property
    def accuracy(self) -> float:
        return self.overall["accuracy"]

    def mean(self, metric: str) -> float:
        """Unweighted mean over classes, skipping undefined values."""
        return _nanmean([self.per_class[c][metric] for c in self.class_names])

    def rows(self) -> list[tuple[str, str, float]]:
        out = [(m, "all", self.overall[m]) for m in OVERALL if m in self.overall]
        for c in self.class_names:
            out += [(m, c, self.per_class[c][m]) for m in PER_CLASS]
        out += [(m, "mean", self.mean(m)) for m in ("recall", "precision", "f1")]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("name", "class", "value"))
            for name, cls, v in self.rows():
                w.writerow((name, cls, UNDEFINED if isinstance(v, float) and math.isnan(v)
                            else (f"{v:.12g}" if isinstance(v, float) else v)))

    def to_text(self) -> str:
        width = max(len("Attack type"), *(len(c) for c in self.class_names)) + 2
        lines = [self.title] if self.title else []
        lines.append(f"{'Attack type':<{width}}{'Recall %':>10}{'Precision %':>13}{'F1-Score %':>12}"
                     f"{'Accuracy (%)':>14}")
        for i, c in enumerate(self.class_names):
            m = self.per_class[c]
            acc = _fmt(self.accuracy, pct=True) if i == 0 else ""
            lines.append(f"{c:<{width}}{_fmt(m['recall'], True):>10}{_fmt(m['precision'], True):>13}"
                         f"{_fmt(m['f1'], True):>12}{acc:>14}")
        lines.append(f"{'Mean':<{width}}{_fmt(self.mean('recall'), True):>10}"
                     f"{_fmt(self.mean('precision'), True):>13}{_fmt(self.mean('f1'), True):>12}")
        o = self.overall
        total = o["total"]
        lines += [
            "",
            f"{'Dataset classified Correctly':<32}{_fmt(o['correct']):>10}  {_fmt(_div(o['correct'], total), True)}%",
            f"{'Dataset classified incorrectly':<32}{_fmt(o['incorrect']):>10}  {_fmt(_div(o['incorrect'], total), True)}%",
            f"{'Mean absolute error':<32}{_fmt(o['mae']):>10}",
            f"{'Root mean squared error':<32}{_fmt(o['rmse']):>10}",
            f"{'Relative absolute error':<32}{_fmt(o['rae']):>10}",
            f"{'Root relative squared error':<32}{_fmt(o['rrse']):>10}",
            f"{'Cost':<32}{_fmt(o['cost']):>10}",
            f"{'Total number of datasets':<32}{_fmt(total):>10}",
        ]
        if self.confusion is not None:
            lines += ["", "Confusion matrix (rows = predicted, columns = actual)",
                      format_confusion(self.confusion)]
        return "\n".join(lines) + "\n"


def format_confusion(cm: ConfusionMatrix) -> str:
    w = max(len("Category"), *(len(c) for c in cm.class_names), *(len(str(v)) for v in cm.counts.ravel())) + 2
    head = f"{'Category':<{w}}" + "".join(f"{c:>{w}}" for c in cm.class_names)
    body = [f"{c:<{w}}" + "".join(f"{int(v):>{w}}" for v in row)
            for c, row in zip(cm.class_names, cm.counts)]
    return "\n".join([head] + body)


def evaluate(y_true, y_pred, class_names, phi: float = 1.0, title: str = "") -> EvalReport:
    """Full metric report of integer class predictions."""
    class_names = tuple(class_names)
    cm = confusion_matrix(np.asarray(y_pred), np.asarray(y_true), class_names)
    K = len(class_names)
    eye = np.eye(K)
    E, T = eye[np.asarray(y_true)], eye[np.asarray(y_pred)]
    mae, rmse, rae, rrse = error_summary(E, T)
    try:
        c = cost(cm, phi)
    except ZeroDivisionError:
        c = math.nan
    overall = {"accuracy": accuracy(cm), "correct": cm.correct, "incorrect": cm.total - cm.correct,
               "total": cm.total, "mse": mse(E, T), "mae": mae, "rmse": rmse, "rae": rae,
               "rrse": rrse, "cost": c}
    per_class = {}
    for k, name in enumerate(class_names):
        p, r, f1 = precision_recall_f1(cm, k)
        tpr, tnr, fpr, fnr = rate_metrics(cm, k)
        per_class[name] = {"precision": p, "recall": r, "f1": f1, "tp_rate": tpr,
                           "tn_rate": tnr, "fp_rate": fpr, "fn_rate": fnr}
    return EvalReport(class_names, overall, per_class, cm, title)


def average_reports(reports, title: str = "") -> EvalReport:
    """Arithmetic mean of every metric across reports (undefined values skipped)."""
    if not reports:
        raise ValueError("no reports to average")
    names = reports[0].class_names
    overall = {m: _nanmean([float(r.overall[m]) for r in reports]) for m in OVERALL}
    per_class = {c: {m: _nanmean([r.per_class[c][m] for r in reports]) for m in PER_CLASS}
                 for c in names}
    return EvalReport(names, overall, per_class, None, title)


@dataclass
class CrossValidation:
    folds: list
    mean: EvalReport
    fold_sizes: list = field(default_factory=list)


def cross_validate(X, y, fit, class_names, K: int = 5, seed: int = 0, phi: float = 1.0) -> CrossValidation:
    """Train on K-1 folds, evaluate on the held-out fold, average the fold reports.

    ``fit(X_train, y_train)`` must return an object with ``predict(X)``.
    """
    from .dataset import kfold_plan

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    plan = kfold_plan(len(X), K, seed)
    sizes = plan.sizes()
    if min(sizes) < len(class_names):
        warnings.warn(f"smallest fold ({min(sizes)} records) is smaller than the class count "
                      f"({len(class_names)}); some metrics will be undefined", stacklevel=2)
    folds = []
    for k in range(K):
        tr, va = plan.fold(k)
        model = fit(X[tr], y[tr])
        folds.append(evaluate(y[va], model.predict(X[va]), class_names, phi, f"fold {k + 1}/{K}"))
    return CrossValidation(folds, average_reports(folds, f"mean of {K} folds"), sizes)
