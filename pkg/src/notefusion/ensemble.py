"""Multimodal fusion: naive concatenation vs. averaged sigmoids."""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import classifier
from .classifier import LogisticModel
from .errors import DataError

CONCAT = "concat"
AVGSIG = "avgsig"

STRUCTURED = "structured"
TFIDF = "tfidf"
LDA = "lda"


def modality_kind(name: str) -> str:
    kind = name.split(":", 1)[0]
    if kind not in (STRUCTURED, TFIDF, LDA):
        raise DataError(f"unknown modality kind in {name!r}")
    return kind


@dataclass
class ModalityDataset:
    """Feature matrix of one modality over a fixed patient ordering.

    Rows where ``available`` is false carry no meaning and must not be read
    by the averaged-sigmoid path.
    """
    name: str
    matrix: object  # ndarray or scipy.sparse matrix, (n_patients, dim)
    available: np.ndarray
    feature_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.available = np.asarray(self.available, dtype=bool)
        if self.matrix.shape[0] != self.available.shape[0]:
            raise DataError(f"{self.name}: matrix has {self.matrix.shape[0]} rows, "
                            f"mask has {self.available.shape[0]}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_patients(self) -> int:
        return self.matrix.shape[0]


def impute_modality(kind: str, d: int) -> np.ndarray:
    """Neutral placeholder for a missing modality: zeros, or uniform topics for LDA."""
    if d < 1:
        raise DataError("imputation dimension must be >= 1")
    if kind == LDA:
        return np.full(d, 1.0 / d)
    if kind in (TFIDF, STRUCTURED):
        return np.zeros(d)
    raise DataError(f"unknown modality kind {kind!r}")


@dataclass
class EnsembleModel:
    kind: str
    modality_order: List[str]
    dims: Dict[str, int]
    models: Dict[str, LogisticModel]  # concat: {"concat": model}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "modality_order": list(self.modality_order),
                "dims": dict(self.dims),
                "models": {k: m.to_dict() for k, m in self.models.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        return cls(d["kind"], list(d["modality_order"]), {k: int(v) for k, v in d["dims"].items()},
                   {k: LogisticModel.from_dict(m) for k, m in d["models"].items()})


def _check_aligned(modalities: Sequence[ModalityDataset], y) -> int:
    if not modalities:
        raise DataError("need at least one modality")
    n = modalities[0].n_patients
    for m in modalities:
        if m.n_patients != n:
            raise DataError(f"modality {m.name!r} has {m.n_patients} patients, expected {n}")
    if y is not None and len(y) != n:
        raise DataError(f"{len(y)} labels for {n} patients")
    return n


def _imputed_block(m: ModalityDataset):
    """The modality matrix with unavailable rows replaced by the placeholder."""
    fill = impute_modality(modality_kind(m.name), m.dim)
    missing = ~m.available
    if sp.issparse(m.matrix):
        keep = m.matrix.tocsr(copy=True)
        for r in np.flatnonzero(missing):
            keep.data[keep.indptr[r]:keep.indptr[r + 1]] = 0.0
        keep.eliminate_zeros()
        if not missing.any() or not fill.any():
            return keep
        patch = sp.csr_matrix(np.outer(missing.astype(float), fill))
        return (keep + patch).tocsr()
    block = np.array(m.matrix, dtype=float, copy=True)
    block[missing] = fill
    return block


def concat_matrix(modalities: Sequence[ModalityDataset]):
    blocks = [_imputed_block(m) for m in modalities]
    if any(sp.issparse(b) for b in blocks):
        return sp.hstack([sp.csr_matrix(b) for b in blocks], format="csr")
    return np.hstack(blocks)


def fit_concat(modalities: Sequence[ModalityDataset], y, lam: float = classifier.DEFAULT_LAMBDA,
               **fit_opts) -> EnsembleModel:
    _check_aligned(modalities, y)
    X = concat_matrix(modalities)
    model = classifier.fit_logreg(X, y, lam=lam, **fit_opts)
    return EnsembleModel(CONCAT, [m.name for m in modalities], {m.name: m.dim for m in modalities},
                         {CONCAT: model})


def fit_avgsig(modalities: Sequence[ModalityDataset], y, lam: float = classifier.DEFAULT_LAMBDA,
               **fit_opts) -> EnsembleModel:
    """One logistic model per modality, trained on that modality's available patients only."""
    _check_aligned(modalities, y)
    y = np.asarray(y)
    models = {}
    for m in modalities:
        rows = np.flatnonzero(m.available)
        ym = y[rows]
        if rows.size < 2 or ym.min() == ym.max():
            raise DataError(f"modality {m.name!r}: available patients must include both classes "
                            f"(got {rows.size} patients)")
        models[m.name] = classifier.fit_logreg(m.matrix[rows], ym, lam=lam, **fit_opts)
    return EnsembleModel(AVGSIG, [m.name for m in modalities], {m.name: m.dim for m in modalities},
                         models)


def predict(model: EnsembleModel, patient_features: Mapping[str, Optional[np.ndarray]]) -> float:
    """Fused probability for one patient; absent or None entries are missing modalities."""
    if model.kind == CONCAT:
        parts = []
        for name in model.modality_order:
            x = patient_features.get(name)
            if x is None:
                x = impute_modality(modality_kind(name), model.dims[name])
            parts.append(np.asarray(x, dtype=float).ravel())
        return classifier.predict_proba(model.models[CONCAT], np.concatenate(parts))
    # iterate in the model's fixed order so the mean is order-independent bit for bit
    probs = [classifier.predict_proba(model.models[name], patient_features[name])
             for name in model.modality_order
             if patient_features.get(name) is not None]
    if not probs:
        raise DataError("averaged-sigmoid prediction needs at least one present modality")
    return float(np.mean(probs))


def predict_batch(model: EnsembleModel, modalities: Sequence[ModalityDataset]) -> np.ndarray:
    by_name = {m.name: m for m in modalities}
    missing = [n for n in model.modality_order if n not in by_name]
    if missing:
        raise DataError(f"missing modality datasets: {missing}")
    ordered = [by_name[n] for n in model.modality_order]
    n = _check_aligned(ordered, None)
    if model.kind == CONCAT:
        return classifier.predict_proba_matrix(model.models[CONCAT], concat_matrix(ordered))
    total = np.zeros(n)
    count = np.zeros(n)
    for m in ordered:
        rows = np.flatnonzero(m.available)
        if rows.size:
            total[rows] += classifier.predict_proba_matrix(model.models[m.name], m.matrix[rows])
            count[rows] += 1
    if (count == 0).any():
        raise DataError(f"{int((count == 0).sum())} patient(s) have no present modality")
    return total / count
