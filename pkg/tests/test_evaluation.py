import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from notefusion.corpus import load_data_dir
from notefusion.errors import DataError
from notefusion.evaluation import (
    FoldPlan, MethodReport, auc, confidence_interval, cross_validate, format_table, kfold_split,
)
from notefusion.pipeline import id_hash

from conftest import fast_run_config


def brute_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    credit = 0.0
    for p, q in itertools.product(pos, neg):
        credit += 1.0 if p > q else 0.5 if p == q else 0.0
    return credit / (len(pos) * len(neg))


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.5, 0.5], [1, 0]) == 0.5
    assert auc([0.8, 0.7, 0.6, 0.5], [1, 0, 1, 0]) == 0.75
    assert brute_auc([0.8, 0.7, 0.6, 0.5], [1, 0, 1, 0]) == 0.75
    with pytest.raises(DataError):
        auc([0.1, 0.2], [1, 1])


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 200), st.integers(0, 10**6))
def test_auc_equals_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = np.round(rng.normal(size=n), 1)  # rounding injects ties
    assert auc(scores, labels) == brute_auc(scores.tolist(), labels.tolist())
    assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)
    assert auc(np.exp(scores), labels) == auc(scores, labels)


def test_confidence_interval():
    lo, hi = confidence_interval([0.7] * 5)
    assert lo == pytest.approx(0.7, abs=1e-15) and hi == pytest.approx(0.7, abs=1e-15)
    lo, hi = confidence_interval([0.6, 0.7])
    s = math.sqrt(((0.6 - 0.65) ** 2 + (0.7 - 0.65) ** 2) / 1)
    half = 1.96 * s / math.sqrt(2)
    assert half == pytest.approx(0.098, abs=1e-12)
    assert (lo, hi) == (pytest.approx(0.552, abs=1e-12), pytest.approx(0.748, abs=1e-12))
    with pytest.raises(DataError):
        confidence_interval([0.5])


def test_kfold_basic():
    ids = [f"p{i}" for i in range(10)]
    plan = kfold_split(ids, [0, 1] * 5, k=5, seed=1)
    assert [len(f) for f in plan.test_ids] == [2] * 5
    assert sorted(itertools.chain(*plan.test_ids)) == sorted(ids)
    assert plan == kfold_split(ids, [0, 1] * 5, k=5, seed=1)
    assert plan != kfold_split(ids, [0, 1] * 5, k=5, seed=2)
    with pytest.raises(DataError):
        kfold_split(ids[:3], [0, 1, 0], k=5)


def test_kfold_stratified_counts():
    ids = [f"p{i:03d}" for i in range(100)]
    labels = [1] * 30 + [0] * 70
    plan = kfold_split(ids, labels, k=5, seed=3)
    lab = dict(zip(ids, labels))
    for fold in plan.test_ids:
        assert sum(lab[i] for i in fold) == 6
        assert sum(1 - lab[i] for i in fold) == 14


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(2, 6), st.integers(0, 1000), st.booleans())
def test_kfold_invariants(n, k, seed, stratified):
    if k > n:
        return
    ids = [f"x{i}" for i in range(n)]
    labels = np.random.default_rng(seed).integers(0, 2, n)
    plan = kfold_split(ids, labels, k, seed, stratified)
    sizes = [len(f) for f in plan.test_ids]
    assert max(sizes) - min(sizes) <= 1
    flat = list(itertools.chain(*plan.test_ids))
    assert len(flat) == len(set(flat)) == n
    for f in range(k):
        assert set(plan.train_ids(f)) == set(ids) - set(plan.test_ids[f])


def test_table_layout():
    reps = [MethodReport("structured_only", [0.6, 0.7], 0.65, (0.552, 0.748), 0.0),
            MethodReport("tfidf_lda_avgsig", [0.7, 0.7], 0.7, (0.7, 0.7), 0.05)]
    table = format_table(reps)
    header = [c.strip() for c in table.splitlines()[0].split("|")]
    assert header == ["Method", "Avg. c-stats", "95% CI", "Delta"]
    assert "(0.5520, 0.7480)" in table and "0.0500" in table


@pytest.fixture(scope="module")
def evaluated(small_data_dir):
    corpus = load_data_dir(small_data_dir)
    cfg = fast_run_config(k_folds=2, seed=4)
    return corpus, cross_validate(corpus, ["structured_only", "tfidf_lda_concat", "tfidf_lda_avgsig"], cfg)


def test_cross_validate_smoke(evaluated):
    corpus, result = evaluated
    assert [r.method for r in result.reports] == ["structured_only", "tfidf_lda_concat", "tfidf_lda_avgsig"]
    for r in result.reports:
        assert len(r.fold_cstats) == 2
        assert all(0 <= c <= 1 for c in r.fold_cstats)
        assert r.mean == pytest.approx(np.mean(r.fold_cstats))
        assert r.delta == pytest.approx(r.mean - result.reports[0].mean)
    assert result.reports[0].delta == 0.0


def test_leakage_canary(evaluated):
    corpus, result = evaluated
    for audit in result.folds:
        test = set(audit.test_ids)
        train = set(result.plan.train_ids(audit.fold))
        assert set(audit.fit_sets) == {"structured", "tfidf:consultations", "tfidf:progress",
                                      "tfidf:selection_conference", "lda:consultations", "lda:progress",
                                      "lda:selection_conference"}
        for name, ids in audit.fit_sets.items():
            assert not test & set(ids), name
            assert set(ids) <= train
        assert audit.to_dict()["fit_set_hashes"]["structured"] == id_hash(sorted(train))


def test_single_class_fold_names_fold_and_method(tmp_path):
    (tmp_path / "structured.csv").write_text(
        "patient_id,label,x\n" + "".join(f"p{i},{1 if i == 0 else 0},{i}\n" for i in range(8)))
    (tmp_path / "notes.jsonl").write_text("")
    corpus = load_data_dir(tmp_path)
    with pytest.raises(DataError, match=r"fold \d+, method structured_only"):
        cross_validate(corpus, ["structured_only"], fast_run_config(k_folds=2))
