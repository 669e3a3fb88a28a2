"""Synthetic EHR-shaped datasets with plantable class signal.

One structured table (numeric, binary and categorical predictors) and three
note types. Notes come from an LDA-style generative process: each patient's
note type has its own topic mixture, drawn from a Dirichlet whose mass on a
few "signal" topics depends on the label. After tokenization and stopword
removal a note is exactly the sequence of sampled topic words; the filler
stopwords and numbers woven into the raw text are there to be stripped.
"""

import csv
import dataclasses
import datetime as dt
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from ._io import write_atomic
from ._random import SYNTH, stream
from .config import FORMAT_VERSION
from .corpus import NOTE_TYPE_LABELS, NOTE_TYPES, NOTES_FILE, STRUCTURED_FILE, read_notes, read_structured
from .errors import DataError

_FILLER = ("the", "of", "and", "was", "with", "to", "in", "is", "for", "on", "at", "by")
_PREFIX = {"consultations": "zc", "progress": "zp", "selection_conference": "zs"}
_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_BASE_DATE = dt.date(2015, 1, 1)


@dataclass
class StructuredSynth:
    n_numeric: int = 68
    n_binary: int = 6
    n_categorical: int = 6
    levels: int = 3
    n_signal: int = 6
    signal_strength: float = 0.2
    missing_cell_rate: float = 0.01


@dataclass
class NoteSynth:
    missing_rate: float = 0.3
    notes_per_patient: Tuple[int, int] = (1, 4)
    doc_length_range: Tuple[int, int] = (20, 60)
    n_latent_topics: int = 20
    n_signal_topics: int = 4
    vocab_size: int = 2000
    signal_strength: float = 1.0
    doc_concentration: float = 0.2
    post_discharge_rate: float = 0.1


def _default_notes() -> Dict[str, NoteSynth]:
    # missing rates follow the structured-vs-notes coverage of the source cohort
    return {
        "consultations": NoteSynth(missing_rate=0.34, notes_per_patient=(1, 6), doc_length_range=(15, 45)),
        "progress": NoteSynth(missing_rate=0.31, notes_per_patient=(2, 10), doc_length_range=(8, 25)),
        "selection_conference": NoteSynth(missing_rate=0.01, notes_per_patient=(1, 2),
                                          doc_length_range=(30, 80)),
    }


@dataclass
class SynthConfig:
    n_patients: int = 500
    positive_rate: float = 0.307
    seed: int = 0
    structured: StructuredSynth = field(default_factory=StructuredSynth)
    notes: Dict[str, NoteSynth] = field(default_factory=_default_notes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        structured = StructuredSynth(**d.pop("structured", {}))
        notes = _default_notes()
        for nt, nd in d.pop("notes", {}).items():
            if nt not in NOTE_TYPES:
                raise DataError(f"unknown note type {nt!r} in synth config")
            merged = dataclasses.asdict(notes[nt])
            merged.update(nd)
            merged["notes_per_patient"] = tuple(merged["notes_per_patient"])
            merged["doc_length_range"] = tuple(merged["doc_length_range"])
            notes[nt] = NoteSynth(**merged)
        return cls(structured=structured, notes=notes, **d)

    def validate(self) -> None:
        if self.n_patients < 1:
            raise DataError("n_patients must be >= 1")
        if not 0.0 <= self.positive_rate <= 1.0:
            raise DataError("positive_rate must be in [0, 1]")
        s = self.structured
        if min(s.n_numeric, s.n_binary, s.n_categorical) < 0 or s.levels < 2:
            raise DataError("structured column counts must be >= 0 and levels >= 2")
        if s.n_signal > s.n_numeric:
            raise DataError("n_signal cannot exceed n_numeric")
        if not 0.0 <= s.missing_cell_rate < 1.0:
            raise DataError("missing_cell_rate must be in [0, 1)")
        for nt, n in self.notes.items():
            lo, hi = n.doc_length_range
            if lo < 1 or hi < lo:
                raise DataError(f"{nt}: doc_length_range must be positive and ordered")
            a, b = n.notes_per_patient
            if a < 1 or b < a:
                raise DataError(f"{nt}: notes_per_patient must be positive and ordered")
            if not 0.0 <= n.missing_rate <= 1.0 or not 0.0 <= n.post_discharge_rate <= 1.0:
                raise DataError(f"{nt}: rates must be in [0, 1]")
            if n.n_latent_topics < 1 or n.vocab_size < n.n_latent_topics:
                raise DataError(f"{nt}: vocab_size must be >= n_latent_topics >= 1")
            if n.vocab_size > 26 ** 3:
                raise DataError(f"{nt}: vocab_size above {26 ** 3} is not supported")
            if not 0 <= n.n_signal_topics <= n.n_latent_topics:
                raise DataError(f"{nt}: n_signal_topics must be within [0, n_latent_topics]")


def word(note_type: str, i: int) -> str:
    """Alphabetic token for vocabulary index ``i`` (never a stopword)."""
    a, rem = divmod(i, 26 * 26)
    b, c = divmod(rem, 26)
    return _PREFIX[note_type] + _LETTERS[a] + _LETTERS[b] + _LETTERS[c]


def topic_word_matrix(cfg: NoteSynth, rng: np.random.Generator) -> np.ndarray:
    """(topics, vocab) probabilities; each topic owns a contiguous vocabulary block."""
    k, v = cfg.n_latent_topics, cfg.vocab_size
    phi = np.full((k, v), 0.1 / v)
    bounds = np.linspace(0, v, k + 1).astype(int)
    for t in range(k):
        lo, hi = bounds[t], bounds[t + 1]
        phi[t, lo:hi] += 0.9 * rng.dirichlet(np.full(hi - lo, 0.5))
    return phi / phi.sum(axis=1, keepdims=True)


def _doc_prior(cfg: NoteSynth, label: int) -> np.ndarray:
    prior = np.full(cfg.n_latent_topics, cfg.doc_concentration)
    half = cfg.n_signal_topics // 2
    boost = np.exp(cfg.signal_strength)
    if label == 1:
        prior[:cfg.n_signal_topics - half] *= boost
    else:
        prior[cfg.n_signal_topics - half:cfg.n_signal_topics] *= boost
    return prior


def _render(tokens: List[str], rng: np.random.Generator) -> str:
    out = []
    for tok in tokens:
        r = rng.random()
        if r < 0.25:
            out.append(_FILLER[rng.integers(len(_FILLER))])
        elif r < 0.30:
            out.append(f"{rng.integers(1, 400)}/{rng.integers(1, 200)},")
        out.append(tok.capitalize() if rng.random() < 0.05 else tok)
    return " ".join(out) + "."


def _structured_table(cfg: SynthConfig, labels: np.ndarray, rng: np.random.Generator):
    s = cfg.structured
    n = labels.shape[0]
    columns: List[str] = []
    cols: List[List[str]] = []
    for j in range(s.n_numeric):
        loc, scale = rng.normal(0, 50), rng.uniform(0.1, 20)
        shift = s.signal_strength if j < s.n_signal else 0.0
        vals = loc + scale * (rng.standard_normal(n) + shift * labels)
        miss = rng.random(n) < s.missing_cell_rate
        columns.append(f"num_{j:02d}")
        cols.append(["" if m else f"{v:.4f}" for v, m in zip(vals, miss)])
    for j in range(s.n_binary):
        p = rng.uniform(0.1, 0.5)
        columns.append(f"bin_{j:02d}")
        cols.append([str(int(b)) for b in rng.random(n) < p])
    level_names = [_LETTERS[i].upper() for i in range(s.levels)]
    tilt = np.linspace(1.0, -1.0, s.levels)
    for j in range(s.n_categorical):
        base = rng.dirichlet(np.full(s.levels, 2.0))
        pos = base * np.exp(s.signal_strength * tilt)
        pos /= pos.sum()
        u = rng.random(n)
        cum_pos, cum_neg = np.cumsum(pos), np.cumsum(base)
        idx = np.where(labels == 1, np.searchsorted(cum_pos, u * cum_pos[-1], side="right"),
                       np.searchsorted(cum_neg, u * cum_neg[-1], side="right"))
        idx = np.minimum(idx, s.levels - 1)
        columns.append(f"cat_{j:02d}")
        cols.append([level_names[i] for i in idx])
    return columns, cols


def generate(config: SynthConfig) -> Tuple[str, str]:
    """Return (structured CSV text, notes JSONL text)."""
    config.validate()
    n = config.n_patients
    rng = stream(config.seed, SYNTH, 0)
    labels = (rng.random(n) < config.positive_rate).astype(int)
    ids = [f"P{i:05d}" for i in range(n)]
    discharge = [_BASE_DATE + dt.timedelta(days=int(d)) for d in rng.integers(0, 3 * 365, size=n)]

    columns, cols = _structured_table(config, labels, stream(config.seed, SYNTH, 1))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["patient_id", "label", "discharge_date"] + columns)
    for i in range(n):
        writer.writerow([ids[i], labels[i], discharge[i].isoformat()] + [c[i] for c in cols])

    lines = []
    for t, nt in enumerate(NOTE_TYPES):
        cfg = config.notes[nt]
        nrng = stream(config.seed, SYNTH, 2 + t)
        phi = topic_word_matrix(cfg, nrng)
        cum_phi = np.cumsum(phi, axis=1)
        # row t shifted by t so one searchsorted serves every topic
        stacked = (cum_phi + np.arange(cfg.n_latent_topics)[:, None]).ravel()
        vocab = [word(nt, i) for i in range(cfg.vocab_size)]
        for i in range(n):
            if nrng.random() < cfg.missing_rate:
                continue
            theta = nrng.dirichlet(_doc_prior(cfg, labels[i]))
            n_notes = int(nrng.integers(cfg.notes_per_patient[0], cfg.notes_per_patient[1] + 1))
            offsets = sorted(int(o) for o in nrng.integers(0, 365, size=n_notes))
            if nrng.random() < cfg.post_discharge_rate:
                offsets.append(-int(nrng.integers(1, 30)))
            for off in offsets:
                length = int(nrng.integers(cfg.doc_length_range[0], cfg.doc_length_range[1] + 1))
                topics = np.minimum(np.searchsorted(np.cumsum(theta), nrng.random(length) * theta.sum(),
                                                    side="right"), cfg.n_latent_topics - 1)
                u = nrng.random(length)
                flat = np.searchsorted(stacked, topics + u * cum_phi[topics, -1], side="right")
                w = np.clip(flat - topics * cfg.vocab_size, 0, cfg.vocab_size - 1)
                tokens = [vocab[j] for j in w]
                date = discharge[i] - dt.timedelta(days=off)
                lines.append(json.dumps({"patient_id": ids[i], "note_type": nt,
                                         "date": date.isoformat(), "text": _render(tokens, nrng)}))
    return buf.getvalue(), "\n".join(lines) + ("\n" if lines else "")


def write_dataset(config: SynthConfig, out_dir) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    structured, notes = generate(config)
    write_atomic(out_dir / STRUCTURED_FILE, structured)
    write_atomic(out_dir / NOTES_FILE, notes)
    meta = {"format_version": FORMAT_VERSION, "kind": "notefusion-synth", "config": config.to_dict()}
    write_atomic(out_dir / "synth_config.json", json.dumps(meta, indent=2) + "\n")
    return out_dir / STRUCTURED_FILE, out_dir / NOTES_FILE


def describe(data_dir) -> List[dict]:
    """Per-modality patient, note and common-patient counts."""
    data_dir = Path(data_dir)
    _, rows = read_structured(data_dir / STRUCTURED_FILE)
    notes = read_notes(data_dir / NOTES_FILE)
    structured_ids = {r["patient_id"] for r in rows}
    out = [{"modality": "Structured", "patients": len(structured_ids), "notes": None,
            "common_patients": len(structured_ids)}]
    for nt in NOTE_TYPES:
        of_type = [x for x in notes if x.note_type == nt]
        pids = {x.patient_id for x in of_type}
        out.append({"modality": NOTE_TYPE_LABELS[nt], "patients": len(pids), "notes": len(of_type),
                    "common_patients": len(pids & structured_ids)})
    return out


def format_describe(rows: List[dict]) -> str:
    header = ("Modality", "Patients", "Notes", "Common Patients")
    cells = [(r["modality"], f"{r['patients']:,}", "N.A." if r["notes"] is None else f"{r['notes']:,}",
              f"{r['common_patients']:,}") for r in rows]
    widths = [max(len(header[j]), *(len(c[j]) for c in cells)) for j in range(4)]

    def line(c):
        return " | ".join([c[0].ljust(widths[0])] + [x.rjust(w) for x, w in zip(c[1:], widths[1:])])

    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep] + [line(c) for c in cells]) + "\n"
