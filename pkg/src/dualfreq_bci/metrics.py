"""Evaluation: confusion-matrix indices, information transfer rate, ANOVA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_REST = 2.5
T_RULES = ("with-rest", "window-only")


class DegenerateDataError(ValueError):
    pass


@dataclass
class EvalReport:
    confusion: np.ndarray
    sensitivity: np.ndarray
    specificity: np.ndarray
    precision: np.ndarray
    class_accuracy: np.ndarray
    overall_accuracy: float
    n_classes: int
    itr_bits_per_min: float | None = None
    window_seconds: float | None = None
    trial_period_seconds: float | None = None
    t_rule: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def per_class(self) -> list[tuple[float, float, float, float]]:
        """(specificity, sensitivity, precision, accuracy) for each class."""
        return list(
            zip(
                self.specificity.tolist(),
                self.sensitivity.tolist(),
                self.precision.tolist(),
                self.class_accuracy.tolist(),
            )
        )


def confusion_and_indices(
    true_labels: Sequence[int], predicted_labels: Sequence[int], n_classes: int
) -> EvalReport:
    """One-vs-rest indices from a K x K confusion matrix (rows true, columns predicted).

    Precision is 0 for a class that is never predicted.
    """
    y = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted_labels, dtype=int)
    if y.shape != p.shape:
        raise ValueError(f"label arrays differ in length: {y.size} vs {p.size}")
    for name, arr in (("true", y), ("predicted", p)):
        bad = np.flatnonzero((arr < 0) | (arr >= n_classes))
        if bad.size:
            raise ValueError(f"{name} label {arr[bad[0]]} at position {bad[0]} is outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (y, p), 1)

    total = cm.sum()
    tp = np.diag(cm).astype(float)
    fn = cm.sum(axis=1) - tp
    fp = cm.sum(axis=0) - tp
    tn = total - tp - fn - fp

    def ratio(num, den):
        return np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den > 0)

    return EvalReport(
        confusion=cm,
        sensitivity=ratio(tp, tp + fn),
        specificity=ratio(tn, tn + fp),
        precision=ratio(tp, tp + fp),
        class_accuracy=ratio(tp + tn, np.full_like(tp, total)),
        overall_accuracy=float(tp.sum() / total) if total else 0.0,
        n_classes=n_classes,
    )


def itr(sigma: float, n_classes: int, trial_period: float) -> float:
    """Information transfer rate in bits/min.

    ``sigma log2 sigma`` is taken as 0 at ``sigma = 0`` and the
    ``(1 - sigma)`` term as 0 at ``sigma = 1``.
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"accuracy must be in [0, 1], got {sigma}")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if trial_period <= 0:
        raise ValueError("trial period must be positive")
    k = n_classes
    if sigma * k == 1.0 or sigma == 1.0 / k:
        # chance level: the three terms cancel analytically
        return 0.0
    bits = math.log2(k)
    if sigma > 0:
        bits += sigma * math.log2(sigma)
    if sigma < 1:
        bits += (1 - sigma) * math.log2((1 - sigma) / (k - 1))
    return 60.0 / trial_period * bits


def trial_period(window: float, t_rule: str = "with-rest", rest: float = DEFAULT_REST) -> float:
    if t_rule == "with-rest":
        return window + rest
    if t_rule == "window-only":
        return window
    raise ValueError(f"unknown T rule {t_rule!r}; choose from {T_RULES}")


# -- distributions ---------------------------------------------------------


def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_stat: float, dfn: float, dfd: float) -> float:
    """Upper tail P(F > f_stat) of the F distribution."""
    if f_stat <= 0:
        return 1.0
    if math.isinf(f_stat):
        return 0.0
    return betainc(dfd / 2.0, dfn / 2.0, dfd / (dfd + dfn * f_stat))


def t_sf(t_stat: float, df: float) -> float:
    """Upper tail P(T > t_stat) of Student's t distribution."""
    if math.isinf(t_stat):
        return 0.0 if t_stat > 0 else 1.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t_stat * t_stat))
    return tail if t_stat >= 0 else 1.0 - tail


def anova_oneway(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """One-way ANOVA across groups; returns ``(F, p)``."""
    arrs = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrs)
    if k < 2:
        raise DegenerateDataError("need at least two groups")
    for i, a in enumerate(arrs):
        if a.size < 2:
            raise DegenerateDataError(f"group {i} has fewer than two values")
    allv = np.concatenate(arrs)
    n = allv.size
    grand = allv.mean()
    ssb = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrs))
    ssw = float(sum(((a - a.mean()) ** 2).sum() for a in arrs))
    if ssw == 0.0:
        raise DegenerateDataError("within-group variance is zero; F is undefined")
    f_stat = (ssb / (k - 1)) / (ssw / (n - k))
    return f_stat, f_sf(f_stat, k - 1, n - k)


def paired_ttest(a: Sequence[float], b: Sequence[float], alternative: str = "greater") -> tuple[float, float]:
    """Paired t test on ``a - b``; ``alternative`` is "greater", "less" or "two-sided"."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.size < 2:
        raise DegenerateDataError("need at least two pairs")
    sd = d.std(ddof=1)
    mean = d.mean()
    if sd == 0.0:
        if mean == 0.0:
            raise DegenerateDataError("all paired differences are zero")
        t_stat = math.copysign(math.inf, mean)
    else:
        t_stat = mean / (sd / math.sqrt(d.size))
    df = d.size - 1
    if alternative == "greater":
        p = t_sf(t_stat, df)
    elif alternative == "less":
        p = t_sf(-t_stat, df)
    elif alternative == "two-sided":
        p = min(1.0, 2.0 * t_sf(abs(t_stat), df))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return float(t_stat), p
