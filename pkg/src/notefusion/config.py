"""Resolved run configuration; embedded verbatim in every output file."""

import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from . import classifier, topicmodel
from .corpus import NOTE_TYPES

FORMAT_VERSION = 1

DEFAULT_METHODS = ("structured_only", "tfidf_lda_concat", "tfidf_lda_avgsig")


@dataclass
class LdaParams:
    topics: int = topicmodel.DEFAULT_TOPICS
    alpha: Optional[float] = None  # None -> 5 / topics
    beta: float = topicmodel.DEFAULT_BETA
    iterations: int = topicmodel.DEFAULT_TRAIN_ITERATIONS
    infer_iterations: int = topicmodel.DEFAULT_INFER_ITERATIONS

    @property
    def resolved_alpha(self) -> float:
        return topicmodel.default_alpha(self.topics) if self.alpha is None else self.alpha


@dataclass
class LogregParams:
    lam: float = classifier.DEFAULT_LAMBDA
    tol: float = classifier.DEFAULT_TOL
    max_iter: int = classifier.DEFAULT_MAX_ITER


@dataclass
class RunConfig:
    subcommand: str = ""
    data: Optional[str] = None
    out: Optional[str] = None
    model: Optional[str] = None
    methods: List[str] = field(default_factory=lambda: list(DEFAULT_METHODS))
    k_folds: int = 5
    seed: int = 0
    stratified: bool = True
    stopwords: Optional[str] = None
    apply_cutoff: bool = True
    cutoff_note_types: Tuple[str, ...] = NOTE_TYPES
    top_k: int = 10
    tfidf_min_df: int = 1
    tfidf_max_df: float = 1.0
    jobs: int = 1
    lda: LdaParams = field(default_factory=LdaParams)
    logreg: LogregParams = field(default_factory=LogregParams)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["cutoff_note_types"] = list(self.cutoff_note_types)
        d["lda"]["alpha"] = self.lda.resolved_alpha
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        lda = LdaParams(**d.pop("lda", {}))
        logreg = LogregParams(**d.pop("logreg", {}))
        if "cutoff_note_types" in d:
            d["cutoff_note_types"] = tuple(d["cutoff_note_types"])
        return cls(lda=lda, logreg=logreg, **d)
