import datetime as dt
import json
import re

import pytest
from hypothesis import given, strategies as st

from notefusion.corpus import (
    NOTE_TYPES, CorpusConfig, RawNote, default_stopwords, load_corpus, merge_patient_notes,
    remove_stopwords, tokenize,
)
from notefusion.errors import DataError


def test_tokenize_examples():
    assert tokenize("") == []
    assert tokenize("Kidney transplant, HbA1c=7.2") == ["kidney", "transplant", "hba", "c"]
    assert tokenize("The THE the") == ["the", "the", "the"]


@given(st.text())
def test_tokenize_idempotent(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens
    assert all(re.fullmatch(r"[a-z]+", t) for t in tokens)


def test_bundled_stopwords():
    sw = default_stopwords()
    assert len(sw) == 179
    assert {"the", "of", "and"} <= sw


def test_remove_stopwords():
    sw = default_stopwords()
    assert remove_stopwords(["the", "kidney", "of"], sw) == ["kidney"]
    assert remove_stopwords([], sw) == []
    assert remove_stopwords(["kidney"], set()) == ["kidney"]


def _note(text, date=None, pid="p1", nt="progress"):
    return RawNote(pid, nt, text, dt.date.fromisoformat(date) if date else None)


def test_merge_concatenates_in_date_order():
    notes = [_note("graft stable", "2020-01-02"), _note("renal graft", "2020-01-01")]
    assert merge_patient_notes(notes, "p1", "progress") == ("renal", "graft", "graft", "stable")


def test_merge_without_dates_keeps_input_order():
    notes = [_note("renal graft"), _note("graft stable")]
    assert merge_patient_notes(notes, "p1", "progress") == ("renal", "graft", "graft", "stable")


def test_merge_undated_notes_go_last():
    notes = [_note("undated"), _note("dated", "2020-01-05")]
    assert merge_patient_notes(notes, "p1", "progress") == ("dated", "undated")


def test_merge_cutoff_and_absent():
    cutoff = dt.date(2020, 1, 1)
    assert merge_patient_notes([_note("late", "2020-02-01")], "p1", "progress", cutoff) is None
    assert merge_patient_notes([], "p1", "progress") is None
    kept = merge_patient_notes([_note("late", "2020-02-01"), _note("nodate")], "p1", "progress", cutoff)
    assert kept == ("nodate",)


def test_merge_permutation_of_equal_dates_is_stable():
    a = _note("alpha", "2020-01-01")
    b = _note("beta", "2020-01-01")
    assert merge_patient_notes([a, b], "p1", "progress") == ("alpha", "beta")
    assert merge_patient_notes([b, a], "p1", "progress") == ("beta", "alpha")


def _write(tmp_path, rows, notes):
    s = tmp_path / "structured.csv"
    s.write_text("\n".join(rows) + "\n")
    n = tmp_path / "notes.jsonl"
    n.write_text("".join(json.dumps(x) + "\n" for x in notes))
    return s, n


def test_load_corpus_join(tmp_path):
    rows = ["patient_id,label,age,sex", "a,1,50,M", "b,0,60,F", "c,0,,F", "d,1,70,M"]
    notes = [
        {"patient_id": "a", "note_type": "progress", "text": "Graft failure"},
        {"patient_id": "b", "note_type": "consultations", "date": "2020-01-01", "text": "the diabetes"},
        {"patient_id": "c", "note_type": "selection_conference", "text": "social team needed"},
        {"patient_id": "zz", "note_type": "progress", "text": "orphan"},
    ]
    s, n = _write(tmp_path, rows, notes)
    corpus = load_corpus(s, n)
    assert len(corpus.patients) == 4
    assert sum(1 for p in corpus.patients if p.documents) == 3
    assert corpus.dropped_note_patients == 1
    assert corpus.structured_columns == ["age", "sex"]
    assert corpus.patients[2].structured == (None, "F")
    assert corpus.patients[1].documents == {"consultations": ("diabetes",)}
    assert corpus.note_types == NOTE_TYPES
    for p in corpus.patients:
        for doc in p.documents.values():
            assert all(re.fullmatch(r"[a-z]+", t) and t not in corpus.stopwords for t in doc)


def test_load_corpus_duplicate_id(tmp_path):
    s, n = _write(tmp_path, ["patient_id,label,x", "a,1,1", "a,0,2"], [])
    with pytest.raises(DataError, match="structured.csv:3.*duplicate"):
        load_corpus(s, n)


def test_load_corpus_malformed_jsonl_names_line(tmp_path):
    s, n = _write(tmp_path, ["patient_id,label,x", "a,1,1", "b,0,2"], [])
    n.write_text('{"patient_id": "a", "note_type": "progress", "text": "x"}\n{broken\n')
    with pytest.raises(DataError, match=r"notes.jsonl:2"):
        load_corpus(s, n)


@pytest.mark.parametrize("row, msg", [
    ("a,2,1", "label"),
    ("a,1", "expected 3 cells"),
    (",1,1", "empty patient_id"),
])
def test_load_corpus_bad_rows(tmp_path, row, msg):
    s, n = _write(tmp_path, ["patient_id,label,x", row], [])
    with pytest.raises(DataError, match=msg):
        load_corpus(s, n)


def test_discharge_cutoff_applied_per_note_type(tmp_path):
    rows = ["patient_id,label,discharge_date,x", "a,1,2020-01-10,1", "b,0,2020-01-10,2"]
    notes = [
        {"patient_id": "a", "note_type": "progress", "date": "2020-01-20", "text": "graft"},
        {"patient_id": "a", "note_type": "consultations", "date": "2020-01-20", "text": "graft"},
    ]
    s, n = _write(tmp_path, rows, notes)
    assert load_corpus(s, n).patients[0].documents == {}
    only_progress = CorpusConfig(cutoff_note_types=("progress",))
    assert load_corpus(s, n, only_progress).patients[0].documents == {"consultations": ("graft",)}
    off = CorpusConfig(apply_cutoff=False)
    assert set(load_corpus(s, n, off).patients[0].documents) == {"progress", "consultations"}


def test_custom_stopwords(tmp_path):
    s, n = _write(tmp_path, ["patient_id,label,x", "a,1,1", "b,0,2"],
                  [{"patient_id": "a", "note_type": "progress", "text": "the graft"}])
    sw = tmp_path / "sw.txt"
    sw.write_text("graft\n")
    corpus = load_corpus(s, n, CorpusConfig(stopwords_path=str(sw)))
    assert corpus.patients[0].documents["progress"] == ("the",)
