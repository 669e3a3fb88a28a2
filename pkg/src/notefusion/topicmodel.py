"""Latent Dirichlet allocation by collapsed Gibbs sampling.

The document-topic vector of a training document is read from the final
state of the chain, (n_dk + alpha) / (N_d + K * alpha). Held-out documents
are folded in against frozen topic-word counts.
"""

import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from ._random import stream
from .errors import DataError

DEFAULT_TOPICS = 50
DEFAULT_BETA = 0.01
DEFAULT_TRAIN_ITERATIONS = 3000
DEFAULT_INFER_ITERATIONS = 200

_DEBUG = os.environ.get("NOTEFUSION_DEBUG", "").strip().lower() in {"1", "true", "yes", "on"}


def default_alpha(n_topics: int) -> float:
    return 5.0 / n_topics


@dataclass(frozen=True)
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    vocabulary: List[str]
    topic_word_counts: np.ndarray  # (K, V) int64
    train_iterations: int
    seed: int
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.vocabulary)})

    @property
    def topic_totals(self) -> np.ndarray:
        return self.topic_word_counts.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "n_topics": self.n_topics, "alpha": self.alpha, "beta": self.beta,
            "vocabulary": list(self.vocabulary),
            "topic_word_counts": self.topic_word_counts.tolist(),
            "train_iterations": self.train_iterations, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LdaModel":
        counts = np.asarray(d["topic_word_counts"], dtype=np.int64).reshape(d["n_topics"], -1)
        return cls(int(d["n_topics"]), float(d["alpha"]), float(d["beta"]), list(d["vocabulary"]),
                   counts, int(d["train_iterations"]), int(d["seed"]))


def _flatten(docs: Sequence[Sequence[str]], index: Dict[str, int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    words: List[int] = []
    doc_ids: List[int] = []
    lengths = np.zeros(len(docs), dtype=np.int64)
    for d, doc in enumerate(docs):
        ids = [index[t] for t in doc if t in index]
        words.extend(ids)
        doc_ids.extend([d] * len(ids))
        lengths[d] = len(ids)
    return np.asarray(words, dtype=np.int64), np.asarray(doc_ids, dtype=np.int64), lengths


def _theta(doc_topic: np.ndarray, lengths: np.ndarray, alpha: float) -> np.ndarray:
    k = doc_topic.shape[1]
    return (doc_topic + alpha) / (lengths[:, None] + k * alpha)


def check_counts(words, doc_ids, z, doc_topic, word_topic, topic_totals, frozen_word_topic=None) -> None:
    """Recompute every count table from the assignments and compare.

    Raises AssertionError on the first inconsistency.
    """
    n_docs, k = doc_topic.shape
    expect_dt = np.zeros_like(doc_topic)
    np.add.at(expect_dt, (doc_ids, z), 1)
    assert np.array_equal(expect_dt, doc_topic), "doc-topic counts drifted"
    lengths = np.bincount(doc_ids, minlength=n_docs)
    assert np.array_equal(doc_topic.sum(axis=1), lengths), "sum_k n_dk != N_d"
    if frozen_word_topic is None:
        expect_wt = np.zeros_like(word_topic)
        np.add.at(expect_wt, (words, z), 1)
        assert np.array_equal(expect_wt, word_topic), "topic-word counts drifted"
    else:
        assert np.array_equal(frozen_word_topic, word_topic), "frozen topic-word counts modified"
    assert np.array_equal(word_topic.sum(axis=0), topic_totals), "sum_w n_kw != n_k"
    assert (doc_topic >= 0).all() and (word_topic >= 0).all()


def fit_lda(train_docs: Sequence[Sequence[str]], n_topics: int = DEFAULT_TOPICS,
            alpha: Optional[float] = None, beta: float = DEFAULT_BETA,
            iterations: int = DEFAULT_TRAIN_ITERATIONS, seed: int = 0,
            stream_key: Tuple[int, ...] = (), check_invariants: bool = False,
            on_sweep: Optional[Callable[[int, dict], None]] = None) -> Tuple[LdaModel, np.ndarray]:
    """Train on ``train_docs``; returns the model and an (n_docs, K) theta matrix.

    ``on_sweep(iteration, state)`` is called after each sweep with the live
    count arrays, for diagnostics. With ``check_invariants`` (or
    NOTEFUSION_DEBUG=1) every count table is re-derived after every sweep.
    """
    if n_topics < 1:
        raise DataError("n_topics must be >= 1")
    if iterations < 1:
        raise DataError("iterations must be >= 1")
    alpha = default_alpha(n_topics) if alpha is None else float(alpha)
    vocabulary = sorted({t for doc in train_docs for t in doc})
    if not vocabulary:
        raise DataError("cannot fit LDA: every training document is empty")
    index = {t: i for i, t in enumerate(vocabulary)}
    words, doc_ids, lengths = _flatten(train_docs, index)
    n_vocab = len(vocabulary)

    rng = stream(seed, *stream_key)
    z = rng.integers(0, n_topics, size=words.shape[0], dtype=np.int64)
    doc_topic = np.zeros((len(train_docs), n_topics), dtype=np.int64)
    word_topic = np.zeros((n_vocab, n_topics), dtype=np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    np.add.at(word_topic, (words, z), 1)
    topic_totals = word_topic.sum(axis=0)

    check = check_invariants or _DEBUG
    vbeta = n_vocab * beta
    for it in range(iterations):
        uniforms = rng.random(words.shape[0])
        _kernels.gibbs_sweep(words, doc_ids, z, doc_topic, word_topic, topic_totals,
                             uniforms, alpha, beta, vbeta, True)
        if check:
            check_counts(words, doc_ids, z, doc_topic, word_topic, topic_totals)
        if on_sweep is not None:
            on_sweep(it, {"words": words, "doc_ids": doc_ids, "z": z, "doc_topic": doc_topic,
                          "word_topic": word_topic, "topic_totals": topic_totals})

    model = LdaModel(n_topics, alpha, float(beta), vocabulary,
                     np.ascontiguousarray(word_topic.T), iterations, int(seed))
    return model, _theta(doc_topic, lengths, alpha)


def infer_topics_batch(model: LdaModel, docs: Sequence[Sequence[str]],
                       iterations: int = DEFAULT_INFER_ITERATIONS, seed: int = 0,
                       stream_key: Tuple[int, ...] = (), check_invariants: bool = False) -> np.ndarray:
    """Fold-in inference for several documents; topic-word counts stay frozen.

    Documents never interact (their own assignments are not added to the
    topic-word table), so the batch only shares the random stream.
    """
    k = model.n_topics
    words, doc_ids, lengths = _flatten(docs, model.index)
    rng = stream(seed, *stream_key)
    z = rng.integers(0, k, size=words.shape[0], dtype=np.int64)
    doc_topic = np.zeros((len(docs), k), dtype=np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    word_topic = np.ascontiguousarray(model.topic_word_counts.T)
    topic_totals = word_topic.sum(axis=0)
    frozen = word_topic.copy() if (check_invariants or _DEBUG) else None
    vbeta = len(model.vocabulary) * model.beta
    if words.shape[0]:
        for _ in range(iterations):
            uniforms = rng.random(words.shape[0])
            _kernels.gibbs_sweep(words, doc_ids, z, doc_topic, word_topic, topic_totals,
                                 uniforms, model.alpha, model.beta, vbeta, False)
            if frozen is not None:
                check_counts(words, doc_ids, z, doc_topic, word_topic, topic_totals, frozen)
    return _theta(doc_topic, lengths, model.alpha)


def infer_topics(model: LdaModel, doc: Sequence[str], iterations: int = DEFAULT_INFER_ITERATIONS,
                 seed: int = 0) -> np.ndarray:
    return infer_topics_batch(model, [doc], iterations, seed)[0]


def top_words(model: LdaModel, topic: int, n: int) -> List[str]:
    """Highest-count words of a topic; ties go to the lexicographically smaller word."""
    if not 0 <= topic < model.n_topics:
        raise IndexError(f"topic {topic} out of range [0, {model.n_topics})")
    counts = model.topic_word_counts[topic]
    # vocabulary is sorted, so a stable sort on -count breaks ties lexicographically
    order = np.argsort(-counts, kind="stable")
    return [model.vocabulary[i] for i in order[:max(n, 0)]]
