"""Accuracy and macro-F1."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float
    macro_f1: float
    precision: np.ndarray
    recall: np.ndarray
    n_eval: int


def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def compute_metrics(y_hat, labels, mask) -> MetricsRecord:
    """Score argmax predictions of ``y_hat`` on the nodes in ``mask``.

    A class with no true and no predicted members contributes F1 = 0 to the
    macro average over all columns of ``y_hat``.
    """
    mask = np.asarray(mask)
    if mask.dtype == bool:
        mask = np.flatnonzero(mask)
    if len(mask) == 0:
        raise ContractError("cannot compute metrics on an empty node set")
    y_hat = np.asarray(y_hat)
    num_classes = y_hat.shape[1]
    y_true = np.asarray(labels)[mask]
    if (y_true < 0).any():
        raise ContractError("evaluation nodes must be labeled")
    y_pred = y_hat[mask].argmax(axis=1)
    cm = confusion_matrix(y_true, y_pred, num_classes)
    tp = np.diag(cm).astype(np.float64)
    pred_count = cm.sum(axis=0)
    true_count = cm.sum(axis=1)
    precision = np.divide(tp, pred_count, out=np.zeros_like(tp), where=pred_count > 0)
    recall = np.divide(tp, true_count, out=np.zeros_like(tp), where=true_count > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return MetricsRecord(
        accuracy=float(tp.sum() / len(mask)),
        macro_f1=float(f1.mean()),
        precision=precision,
        recall=recall,
        n_eval=len(mask),
    )
