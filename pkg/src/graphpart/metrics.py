"""Classification metrics: margin loss and macro/micro F1."""

from __future__ import annotations

import numpy as np


def margin_loss(logits_row, y: int, gamma: float = 0.0) -> int:
    """1 if the true-class logit fails to beat every other class by more
    than ``gamma`` (the comparison is non-strict), else 0."""
    row = np.asarray(logits_row, dtype=np.float64)
    if not 0 <= y < len(row):
        raise ValueError(f"label {y} out of range for {len(row)} classes")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    others = np.delete(row, y)
    if others.size == 0:
        return 0
    return int(row[y] <= gamma + others.max())


def margin_losses(logits, y, gamma=0.0) -> np.ndarray:
    """Row-wise margin loss; ``gamma`` may be a scalar or per-row array."""
    logits = np.asarray(logits, dtype=np.float64)
    y = np.asarray(y)
    rows = np.arange(len(y))
    true = logits[rows, y]
    masked = logits.copy()
    masked[rows, y] = -np.inf
    return (true <= np.asarray(gamma) + masked.max(axis=1)).astype(np.int64)


def confusion(pred, truth, num_classes: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth lengths differ")
    return np.bincount(truth * num_classes + pred, minlength=num_classes ** 2).reshape(num_classes, num_classes)


def macro_f1(pred, truth, num_classes: int) -> float:
    """Unweighted mean of per-class F1 over all ``num_classes`` classes.

    A class with no true and no predicted members scores 0.
    """
    cm = confusion(pred, truth, num_classes)
    tp = np.diag(cm).astype(np.float64)
    denom = cm.sum(axis=0) + cm.sum(axis=1)  # 2tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())


def micro_f1(pred, truth) -> float:
    """Micro-averaged F1, which for single-label prediction is accuracy."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth lengths differ")
    return float(np.mean(pred == truth)) if pred.size else 0.0
