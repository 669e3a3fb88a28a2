"""TF-IDF vectorizer: raw counts, smoothed idf, L2-normalized rows."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import DataError


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: List[str]
    idf: np.ndarray
    n_train_docs: int
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.vocabulary)})

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def to_dict(self) -> dict:
        return {"vocabulary": list(self.vocabulary), "idf": self.idf.tolist(),
                "n_train_docs": self.n_train_docs}

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfModel":
        return cls(list(d["vocabulary"]), np.asarray(d["idf"], dtype=float), int(d["n_train_docs"]))


def fit_tfidf(train_docs: Sequence[Sequence[str]], min_df: int = 1, max_df: float = 1.0) -> TfidfModel:
    """Vocabulary (sorted) and idf_t = ln((1 + N) / (1 + df_t)) + 1.

    ``min_df`` is an absolute document count, ``max_df`` a fraction of N;
    the defaults keep every token.
    """
    n = len(train_docs)
    if n == 0:
        raise DataError("cannot fit TF-IDF on zero documents")
    df = Counter()
    for doc in train_docs:
        df.update(set(doc))
    vocab = sorted(t for t, c in df.items() if c >= min_df and c <= max_df * n)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab], dtype=float)
    return TfidfModel(vocab, idf, n)


def transform_sparse(model: TfidfModel, doc: Sequence[str]) -> List[Tuple[int, float]]:
    """Sorted (index, weight) pairs of the normalized TF-IDF vector; OOV tokens ignored."""
    counts = Counter(model.index[t] for t in doc if t in model.index)
    if not counts:
        return []
    idx = np.array(sorted(counts), dtype=np.int64)
    w = np.array([counts[i] for i in idx], dtype=float) * model.idf[idx]
    w /= np.linalg.norm(w)
    return list(zip(idx.tolist(), w.tolist()))


def transform_tfidf(model: TfidfModel, doc: Sequence[str]) -> np.ndarray:
    out = np.zeros(model.dim)
    for i, v in transform_sparse(model, doc):
        out[i] = v
    return out


def transform_matrix(model: TfidfModel, docs: Sequence[Sequence[str]]) -> sp.csr_matrix:
    indptr = [0]
    indices: List[int] = []
    data: List[float] = []
    for doc in docs:
        pairs = transform_sparse(model, doc)
        indices.extend(i for i, _ in pairs)
        data.extend(v for _, v in pairs)
        indptr.append(len(indices))
    return sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64),
                          np.asarray(indptr, dtype=np.int64)), shape=(len(docs), model.dim))
