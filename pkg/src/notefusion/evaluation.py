"""Cross-validated c-statistics with normal-approximation confidence intervals."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ._random import SPLIT, stream
from .config import FORMAT_VERSION, RunConfig
from .corpus import NOTE_TYPES, Corpus
from .errors import DataError
from .pipeline import fit_featurizer, fit_method, id_hash, needed_modalities
from . import ensemble

log = logging.getLogger(__name__)

BASELINE = "structured_only"
Z95 = 1.96


def auc(scores, labels) -> float:
    """c-statistic via midranks: (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg).

    Identical to counting concordant pairs with ties worth one half.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise DataError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int(labels.shape[0] - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes")
    ranks = rankdata(scores, method="average")
    # midranks are multiples of 1/2, so this numerator is exact in float64
    credit = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return credit / (n_pos * n_neg)


def confidence_interval(values) -> Tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        raise DataError("a confidence interval needs at least 2 values")
    mean = float(v.mean())
    half = Z95 * float(v.std(ddof=1)) / math.sqrt(v.shape[0])
    return mean - half, mean + half


@dataclass(frozen=True)
class FoldPlan:
    k: int
    test_ids: Tuple[Tuple[str, ...], ...]
    seed: int
    stratified: bool

    def train_ids(self, fold: int) -> List[str]:
        held = set(self.test_ids[fold])
        return [pid for f in self.test_ids for pid in f if pid not in held]


def kfold_split(patient_ids: Sequence[str], labels: Sequence[int], k: int = 5, seed: int = 0,
                stratified: bool = True) -> FoldPlan:
    """Seeded shuffle, then round-robin fold assignment.

    With ``stratified`` the positives are dealt first and the negatives
    continue from the next fold, so class counts per fold differ by at most
    one and fold sizes by at most one.
    """
    n = len(patient_ids)
    if k < 2:
        raise DataError("k must be >= 2")
    if k > n:
        raise DataError(f"k={k} exceeds the number of patients ({n})")
    labels = np.asarray(labels)
    rng = stream(seed, SPLIT)
    idx = np.arange(n)
    if stratified:
        groups = [idx[labels == 1], idx[labels != 1]]
    else:
        groups = [idx]
    folds: List[List[int]] = [[] for _ in range(k)]
    slot = 0
    for group in groups:
        for i in rng.permutation(group):
            folds[slot].append(int(i))
            slot = (slot + 1) % k
    test_ids = tuple(tuple(patient_ids[i] for i in sorted(f)) for f in folds)
    return FoldPlan(k, test_ids, seed, stratified)


@dataclass
class MethodReport:
    method: str
    fold_cstats: List[float]
    mean: float = 0.0
    ci: Tuple[float, float] = (0.0, 0.0)
    delta: Optional[float] = None

    def to_dict(self) -> dict:
        return {"method": self.method, "fold_cstats": self.fold_cstats, "mean": self.mean,
                "ci95": list(self.ci), "delta": self.delta}


@dataclass
class FoldAudit:
    fold: int
    test_ids: List[str]
    fit_sets: Dict[str, List[str]]
    vocab_sizes: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"fold": self.fold, "n_test": len(self.test_ids), "test_hash": id_hash(self.test_ids),
                "fit_set_hashes": {k: id_hash(v) for k, v in self.fit_sets.items()},
                "fit_set_sizes": {k: len(v) for k, v in self.fit_sets.items()},
                "tfidf_vocab_sizes": self.vocab_sizes}


@dataclass
class Evaluation:
    reports: List[MethodReport]
    folds: List[FoldAudit]
    plan: FoldPlan


def _run_fold(corpus: Corpus, plan: FoldPlan, fold: int, methods: Sequence[str],
              config: RunConfig) -> Tuple[Dict[str, float], FoldAudit]:
    train_ids = plan.train_ids(fold)
    test_ids = list(plan.test_ids[fold])
    train = corpus.subset(train_ids)
    test = corpus.subset(test_ids)
    modalities = needed_modalities(methods)
    feat = fit_featurizer(train, corpus.structured_columns, modalities, config, fold=fold)
    train_sets = feat.build(train, modalities)
    test_sets = feat.build(test, modalities)
    y_train = np.array([p.label for p in train])
    y_test = np.array([p.label for p in test])
    scores = {}
    for method in methods:
        try:
            model = fit_method(method, train_sets, y_train, config)
            probs = ensemble.predict_batch(model, test_sets)
            scores[method] = auc(probs, y_test)
        except DataError as exc:
            raise DataError(f"fold {fold}, method {method}: {exc}") from None
    audit = FoldAudit(fold, test_ids, {k: list(v) for k, v in feat.fit_sets.items()},
                      {nt: m.dim for nt, m in feat.tfidf.items()})
    return scores, audit


def cross_validate(corpus: Corpus, methods: Sequence[str], config: RunConfig) -> Evaluation:
    if not methods:
        raise DataError("no methods requested")
    plan = kfold_split(corpus.ids, corpus.labels, config.k_folds, config.seed, config.stratified)
    args = [(corpus, plan, f, list(methods), config) for f in range(plan.k)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_fold, *zip(*args)))
    else:
        results = []
        for a in args:
            log.info("fold %d/%d", a[2] + 1, plan.k)
            results.append(_run_fold(*a))
    reports = []
    for method in methods:
        vals = [r[0][method] for r in results]
        rep = MethodReport(method, vals, float(np.mean(vals)))
        rep.ci = confidence_interval(vals) if len(vals) >= 2 else (rep.mean, rep.mean)
        reports.append(rep)
    base = next((r for r in reports if r.method == BASELINE), None)
    for rep in reports:
        rep.delta = rep.mean - base.mean if base is not None else None
    return Evaluation(reports, [r[1] for r in results], plan)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def format_table(reports: Sequence[MethodReport]) -> str:
    """Method | Avg. c-stats | 95% CI | Delta."""
    header = ("Method", "Avg. c-stats", "95% CI", "Delta")
    rows = [(r.method, _fmt(r.mean), f"({_fmt(r.ci[0])}, {_fmt(r.ci[1])})",
             "-" if r.delta is None else _fmt(r.delta)) for r in reports]
    widths = [max(len(header[j]), *(len(row[j]) for row in rows)) for j in range(4)]
    line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"


def report_document(result: Evaluation, config: RunConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "notefusion-evaluation",
        "config": config.to_dict(),
        "baseline": BASELINE,
        "methods": [r.to_dict() for r in result.reports],
        "folds": [f.to_dict() for f in result.folds],
        "note_types": list(NOTE_TYPES),
    }
