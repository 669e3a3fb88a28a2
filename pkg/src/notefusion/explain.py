"""Discriminative-index feature importance for linear modality models."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ensemble import AVGSIG, EnsembleModel, ModalityDataset
from .errors import DataError

log = logging.getLogger(__name__)

DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class DiReport:
    modality: str
    di: np.ndarray
    order: np.ndarray
    wx_true: np.ndarray
    wx_false: np.ndarray
    feature_names: Tuple[str, ...] = ()

    def to_dict(self, k: int = DEFAULT_TOP_K) -> dict:
        return {
            "modality": self.modality,
            "di": self.di.tolist(),
            "order": self.order.tolist(),
            "wx_true": self.wx_true.tolist(),
            "wx_false": self.wx_false.tolist(),
            "top": [{"feature": n, "score": s}
                    for n, s in top_features(self, list(self.feature_names), k)],
        }


def _column_mean(X, rows) -> np.ndarray:
    return np.asarray(X[rows].mean(axis=0)).ravel()


def compute_di(X, y, theta, modality: str = "", feature_names: Sequence[str] = ()) -> DiReport:
    """DI_k = |theta_k * mean_pos_k - theta_k * mean_neg_k|, ranked descending.

    WX is kept per feature (elementwise product of weight and cohort mean);
    ties in the ranking go to the lower feature index.
    """
    y = np.asarray(y).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[1] != theta.shape[0]:
        raise DataError(f"theta has {theta.shape[0]} entries for {X.shape[1]} features")
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if pos.size == 0 or neg.size == 0:
        raise DataError(f"{modality or 'DI'}: both classes must be present")
    wx_true = theta * _column_mean(X, pos)
    wx_false = theta * _column_mean(X, neg)
    di = np.abs(wx_true - wx_false)
    order = np.lexsort((np.arange(di.shape[0]), -di))
    return DiReport(modality, di, order, wx_true, wx_false, tuple(feature_names))


def top_features(report: DiReport, names: Sequence[str], k: int = DEFAULT_TOP_K) -> List[Tuple[str, float]]:
    """First ``k`` ranked features with DI min-max normalized over all features."""
    n = report.di.shape[0]
    if len(names) != n:
        raise DataError(f"{len(names)} names for {n} features")
    if k > n:
        log.warning("top-k %d exceeds feature count %d; clamping", k, n)
        k = n
    if k <= 0:
        return []
    lo, hi = float(report.di.min()), float(report.di.max())
    span = hi - lo
    rows = []
    for idx in report.order[:k]:
        score = (float(report.di[idx]) - lo) / span if span > 0 else 0.0
        rows.append((names[idx], score))
    return rows


def explain_ensemble(model: EnsembleModel, datasets: Sequence[ModalityDataset], y,
                     feature_names: Optional[Dict[str, List[str]]] = None) -> Dict[str, object]:
    """DI report per modality, computed on that modality's available rows.

    A modality whose available rows are single-class maps to the DataError
    raised for it instead of a report; the others are still computed.
    """
    if model.kind != AVGSIG:
        raise DataError("explain needs an averaged-sigmoid model (one weight vector per modality)")
    by_name = {d.name: d for d in datasets}
    if set(by_name) != set(model.modality_order):
        raise DataError(f"datasets {sorted(by_name)} do not match model modalities "
                        f"{sorted(model.modality_order)}")
    y = np.asarray(y)
    out: Dict[str, object] = {}
    for name in model.modality_order:
        d = by_name[name]
        names = (feature_names or {}).get(name) or d.feature_names
        rows = np.flatnonzero(d.available)
        try:
            out[name] = compute_di(d.matrix[rows], y[rows], model.models[name].weights,
                                   modality=name, feature_names=names)
        except DataError as exc:
            out[name] = exc
    return out


def format_table(report: DiReport, k: int = DEFAULT_TOP_K) -> str:
    rows = top_features(report, list(report.feature_names), k)
    width = max([len("Feature")] + [len(n) for n, _ in rows])
    lines = [f"[{report.modality}]", f"{'Feature'.ljust(width)}  Score", f"{'-' * width}  ------"]
    lines += [f"{n.ljust(width)}  {s:.4f}" for n, s in rows]
    return "\n".join(lines) + "\n"
