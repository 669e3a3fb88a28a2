import json

import numpy as np
import pytest

from notefusion import synth
from notefusion.corpus import load_data_dir, read_structured, tokenize
from notefusion.errors import DataError

from conftest import small_synth_config


def test_deterministic_bytes():
    cfg = small_synth_config(n=60, seed=8)
    assert synth.generate(cfg) == synth.generate(cfg)
    other = small_synth_config(n=60, seed=9)
    assert synth.generate(cfg) != synth.generate(other)


def test_default_shape_500():
    cfg = synth.SynthConfig(n_patients=500, seed=1)
    structured, notes = synth.generate(cfg)
    lines = structured.strip().splitlines()
    assert len(lines) == 501
    header = lines[0].split(",")
    assert header[:3] == ["patient_id", "label", "discharge_date"]
    assert len(header) - 3 == 80
    labels = np.array([int(l.split(",")[1]) for l in lines[1:]])
    # binomial(500, 0.307): mean 153.5, sd 10.3
    assert abs(labels.sum() - 500 * 0.307) <= 3 * np.sqrt(500 * 0.307 * 0.693)


def test_default_structured_expands_to_92(tmp_path):
    synth.write_dataset(synth.SynthConfig(n_patients=200, seed=2), tmp_path)
    corpus = load_data_dir(tmp_path)
    from notefusion.structured import fit_structured_encoder
    enc = fit_structured_encoder([p.structured for p in corpus.patients], corpus.structured_columns)
    assert enc.dim == 92


def test_missing_rate_binomial(tmp_path):
    cfg = synth.SynthConfig(n_patients=500, seed=4)
    cfg.notes["progress"].missing_rate = 0.3
    cfg.notes["progress"].post_discharge_rate = 0.0
    synth.write_dataset(cfg, tmp_path)
    rows = synth.describe(tmp_path)
    have = rows[2]["patients"]
    assert rows[2]["modality"] == "Progress"
    assert abs(have - 350) <= 3 * np.sqrt(500 * 0.3 * 0.7)


def test_notes_reduce_to_vocabulary_tokens(tmp_path):
    synth.write_dataset(small_synth_config(n=30, seed=5), tmp_path)
    corpus = load_data_dir(tmp_path)
    for p in corpus.patients:
        for nt, doc in p.documents.items():
            prefix = {"consultations": "zc", "progress": "zp", "selection_conference": "zs"}[nt]
            assert all(t.startswith(prefix) and len(t) == 5 for t in doc)


def test_post_discharge_notes_exist_and_are_cut(tmp_path):
    cfg = small_synth_config(n=80, seed=6, post_discharge_rate=1.0)
    synth.write_dataset(cfg, tmp_path)
    _, rows = read_structured(tmp_path / "structured.csv")
    discharge = {r["patient_id"]: r["discharge_date"].isoformat() for r in rows}
    notes = [json.loads(l) for l in (tmp_path / "notes.jsonl").read_text().splitlines()]
    late = [n for n in notes if n["date"] > discharge[n["patient_id"]]]
    assert late
    from notefusion.corpus import CorpusConfig
    kept = load_data_dir(tmp_path)
    uncut = load_data_dir(tmp_path, CorpusConfig(apply_cutoff=False))
    total = lambda c: sum(len(d) for p in c.patients for d in p.documents.values())
    assert total(kept) < total(uncut)


def test_invalid_configs():
    cfg = small_synth_config()
    cfg.notes["progress"].vocab_size = 3
    with pytest.raises(DataError):
        synth.generate(cfg)
    cfg = small_synth_config()
    cfg.positive_rate = 1.5
    with pytest.raises(DataError):
        synth.generate(cfg)


def test_config_roundtrip():
    cfg = small_synth_config(n=10)
    again = synth.SynthConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_describe_layout(tmp_path):
    synth.write_dataset(small_synth_config(n=50, seed=1), tmp_path)
    rows = synth.describe(tmp_path)
    assert [r["modality"] for r in rows] == ["Structured", "Consultations", "Progress", "Selection Conf. Ref."]
    text = synth.format_describe(rows)
    assert [c.strip() for c in text.splitlines()[0].split("|")] == ["Modality", "Patients", "Notes",
                                                                      "Common Patients"]
    assert "N.A." in text.splitlines()[2]


def test_describe_empty_notes(tmp_path):
    (tmp_path / "structured.csv").write_text("patient_id,label,x\na,1,1\n")
    (tmp_path / "notes.jsonl").write_text("")
    rows = synth.describe(tmp_path)
    assert [r["patients"] for r in rows] == [1, 0, 0, 0]
    assert [r["notes"] for r in rows[1:]] == [0, 0, 0]


def test_word_codes_avoid_stopwords():
    from notefusion.corpus import default_stopwords
    sw = default_stopwords()
    for nt in ("consultations", "progress", "selection_conference"):
        words = {synth.word(nt, i) for i in range(26 ** 3)}
        assert len(words) == 26 ** 3
        assert not words & sw
        assert all(tokenize(w) == [w] for w in list(words)[:100])
