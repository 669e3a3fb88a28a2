"""Featurization of patient records into modality datasets, methods, model files."""

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import ensemble, topicmodel, vectorspace
from ._io import dump_json, write_atomic
from ._random import LDA_FIT, LDA_INFER
from .config import FORMAT_VERSION, RunConfig
from .corpus import NOTE_TYPES, PatientRecord
from .ensemble import AVGSIG, CONCAT, EnsembleModel, ModalityDataset
from .errors import DataError
from .structured import StructuredEncoder, encode_rows, fit_structured_encoder
from .topicmodel import LdaModel
from .vectorspace import TfidfModel

MODALITY_ORDER: Tuple[str, ...] = (
    ("structured",)
    + tuple(f"tfidf:{nt}" for nt in NOTE_TYPES)
    + tuple(f"lda:{nt}" for nt in NOTE_TYPES)
)

_NOTES_TFIDF = tuple(f"tfidf:{nt}" for nt in NOTE_TYPES)
_NOTES_LDA = tuple(f"lda:{nt}" for nt in NOTE_TYPES)

# method name -> (fusion kind, modalities)
METHODS: Dict[str, Tuple[str, Tuple[str, ...]]] = {
    "structured_only": (AVGSIG, ("structured",)),
    "tfidf_lda_concat": (CONCAT, MODALITY_ORDER),
    "tfidf_lda_avgsig": (AVGSIG, MODALITY_ORDER),
    "tfidf_concat": (CONCAT, ("structured",) + _NOTES_TFIDF),
    "tfidf_avgsig": (AVGSIG, ("structured",) + _NOTES_TFIDF),
    "lda_concat": (CONCAT, ("structured",) + _NOTES_LDA),
    "lda_avgsig": (AVGSIG, ("structured",) + _NOTES_LDA),
}


def method_spec(name: str) -> Tuple[str, Tuple[str, ...]]:
    try:
        return METHODS[name]
    except KeyError:
        raise DataError(f"unknown method {name!r}; choose from {sorted(METHODS)}") from None


def id_hash(ids: Sequence[str]) -> str:
    h = hashlib.sha256()
    for pid in sorted(ids):
        h.update(pid.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class Featurizer:
    """Fitted structured encoder plus per-note-type TF-IDF and LDA models."""
    encoder: Optional[StructuredEncoder] = None
    tfidf: Dict[str, TfidfModel] = field(default_factory=dict)
    lda: Dict[str, LdaModel] = field(default_factory=dict)
    fit_sets: Dict[str, List[str]] = field(default_factory=dict)
    fold: int = 0
    seed: int = 0
    infer_iterations: int = topicmodel.DEFAULT_INFER_ITERATIONS
    _train_theta: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict, repr=False)

    @property
    def modalities(self) -> List[str]:
        present = set()
        if self.encoder is not None:
            present.add("structured")
        present.update(f"tfidf:{nt}" for nt in self.tfidf)
        present.update(f"lda:{nt}" for nt in self.lda)
        return [m for m in MODALITY_ORDER if m in present]

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder.to_dict() if self.encoder else None,
            "tfidf": {nt: m.to_dict() for nt, m in self.tfidf.items()},
            "lda": {nt: m.to_dict() for nt, m in self.lda.items()},
            "fit_set_hashes": {k: id_hash(v) for k, v in self.fit_sets.items()},
            "fold": self.fold, "seed": self.seed, "infer_iterations": self.infer_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Featurizer":
        return cls(
            encoder=StructuredEncoder.from_dict(d["encoder"]) if d.get("encoder") else None,
            tfidf={nt: TfidfModel.from_dict(m) for nt, m in d["tfidf"].items()},
            lda={nt: LdaModel.from_dict(m) for nt, m in d["lda"].items()},
            fold=int(d["fold"]), seed=int(d["seed"]), infer_iterations=int(d["infer_iterations"]),
        )

    def feature_names(self, name: str) -> List[str]:
        if name == "structured":
            return list(self.encoder.feature_names)
        kind, nt = name.split(":", 1)
        if kind == "tfidf":
            return list(self.tfidf[nt].vocabulary)
        model = self.lda[nt]
        return ["/".join(topicmodel.top_words(model, k, 3)) for k in range(model.n_topics)]

    def build(self, patients: Sequence[PatientRecord], modalities: Optional[Sequence[str]] = None
              ) -> List[ModalityDataset]:
        """Modality datasets over ``patients`` in their given order.

        Training patients reuse their final-chain LDA topic vectors; every
        other document is folded in against the frozen model.
        """
        wanted = list(modalities) if modalities is not None else self.modalities
        n = len(patients)
        out = []
        for name in wanted:
            if name == "structured":
                if self.encoder is None:
                    raise DataError("structured encoder was not fitted")
                rows = [p.structured for p in patients]
                if any(r is None for r in rows):
                    raise DataError("every patient needs a structured row")
                out.append(ModalityDataset(name, encode_rows(self.encoder, rows), np.ones(n, bool),
                                           self.feature_names(name)))
                continue
            kind, nt = name.split(":", 1)
            avail = np.array([nt in p.documents for p in patients], dtype=bool)
            docs = [p.documents.get(nt, ()) for p in patients]
            if kind == "tfidf":
                if nt not in self.tfidf:
                    raise DataError(f"TF-IDF for {nt!r} was not fitted")
                matrix = vectorspace.transform_matrix(self.tfidf[nt], docs)
            else:
                if nt not in self.lda:
                    raise DataError(f"LDA for {nt!r} was not fitted")
                matrix = self._lda_matrix(nt, patients, docs, avail)
            out.append(ModalityDataset(name, matrix, avail, self.feature_names(name)))
        return out

    def _lda_matrix(self, nt, patients, docs, avail) -> np.ndarray:
        model = self.lda[nt]
        cached = self._train_theta.get(nt, {})
        matrix = np.full((len(patients), model.n_topics), 1.0 / model.n_topics)
        todo = []
        for i, p in enumerate(patients):
            if not avail[i]:
                continue
            if p.patient_id in cached:
                matrix[i] = cached[p.patient_id]
            else:
                todo.append(i)
        if todo:
            theta = topicmodel.infer_topics_batch(
                model, [docs[i] for i in todo], iterations=self.infer_iterations, seed=self.seed,
                stream_key=(LDA_INFER, self.fold, NOTE_TYPES.index(nt)))
            matrix[todo] = theta
        return matrix


def needed_modalities(methods: Sequence[str]) -> List[str]:
    need = set()
    for m in methods:
        need.update(method_spec(m)[1])
    return [m for m in MODALITY_ORDER if m in need]


def fit_featurizer(patients: Sequence[PatientRecord], columns: Sequence[str], modalities: Sequence[str],
                   config: RunConfig, fold: int = 0) -> Featurizer:
    """Fit every requested vectorizer on ``patients`` (the training set) only."""
    feat = Featurizer(fold=fold, seed=config.seed, infer_iterations=config.lda.infer_iterations)
    ids = [p.patient_id for p in patients]
    if "structured" in modalities:
        feat.encoder = fit_structured_encoder([p.structured for p in patients], columns)
        feat.fit_sets["structured"] = ids
    for nt in NOTE_TYPES:
        have = [p for p in patients if nt in p.documents]
        if f"tfidf:{nt}" in modalities:
            if not have:
                raise DataError(f"no training patient has {nt} notes")
            feat.tfidf[nt] = vectorspace.fit_tfidf([p.documents[nt] for p in have],
                                                   min_df=config.tfidf_min_df, max_df=config.tfidf_max_df)
            feat.fit_sets[f"tfidf:{nt}"] = [p.patient_id for p in have]
        if f"lda:{nt}" in modalities:
            if not have:
                raise DataError(f"no training patient has {nt} notes")
            model, theta = topicmodel.fit_lda(
                [p.documents[nt] for p in have], n_topics=config.lda.topics,
                alpha=config.lda.resolved_alpha, beta=config.lda.beta,
                iterations=config.lda.iterations, seed=config.seed,
                stream_key=(LDA_FIT, fold, NOTE_TYPES.index(nt)))
            feat.lda[nt] = model
            feat._train_theta[nt] = {p.patient_id: theta[i] for i, p in enumerate(have)}
            feat.fit_sets[f"lda:{nt}"] = [p.patient_id for p in have]
    return feat


def fit_method(method: str, datasets: Sequence[ModalityDataset], y, config: RunConfig) -> EnsembleModel:
    kind, names = method_spec(method)
    by_name = {d.name: d for d in datasets}
    chosen = [by_name[n] for n in names]
    opts = dict(lam=config.logreg.lam, tol=config.logreg.tol, max_iter=config.logreg.max_iter)
    if kind == CONCAT:
        return ensemble.fit_concat(chosen, y, **opts)
    return ensemble.fit_avgsig(chosen, y, **opts)


@dataclass
class TrainedPipeline:
    method: str
    featurizer: Featurizer
    model: EnsembleModel
    config: RunConfig

    def to_dict(self) -> dict:
        return {"format_version": FORMAT_VERSION, "kind": "notefusion-model", "method": self.method,
                "config": self.config.to_dict(), "featurizer": self.featurizer.to_dict(),
                "ensemble": self.model.to_dict()}

    def save(self, path) -> None:
        write_atomic(path, dump_json(self.to_dict()))

    @classmethod
    def load(cls, path) -> "TrainedPipeline":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: not a model file ({exc.msg})") from None
        if d.get("kind") != "notefusion-model":
            raise DataError(f"{path}: not a model file")
        if d.get("format_version") != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported format_version {d.get('format_version')!r}")
        return cls(d["method"], Featurizer.from_dict(d["featurizer"]),
                   EnsembleModel.from_dict(d["ensemble"]), RunConfig.from_dict(d["config"]))

    def datasets(self, patients: Sequence[PatientRecord]) -> List[ModalityDataset]:
        return self.featurizer.build(patients, self.model.modality_order)

    def predict(self, patients: Sequence[PatientRecord]) -> np.ndarray:
        return ensemble.predict_batch(self.model, self.datasets(patients))


def train(corpus, method: str, config: RunConfig) -> TrainedPipeline:
    """Fit featurizers and the method's ensemble on every patient of ``corpus``."""
    _, names = method_spec(method)
    feat = fit_featurizer(corpus.patients, corpus.structured_columns, names, config, fold=0)
    datasets = feat.build(corpus.patients, names)
    model = fit_method(method, datasets, np.asarray(corpus.labels), config)
    return TrainedPipeline(method, feat, model, config)
