"""Loading structured rows and clinical notes into per-patient records."""

import csv
import datetime as dt
import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import DataError

log = logging.getLogger(__name__)

NOTE_TYPES: Tuple[str, ...] = ("consultations", "progress", "selection_conference")
NOTE_TYPE_LABELS = {
    "consultations": "Consultations",
    "progress": "Progress",
    "selection_conference": "Selection Conf. Ref.",
}

STRUCTURED_FILE = "structured.csv"
NOTES_FILE = "notes.jsonl"

_ALPHA_RUN = re.compile(r"[A-Za-z]+")


def default_stopwords() -> FrozenSet[str]:
    text = resources.files("notefusion").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def read_stopwords(path) -> FrozenSet[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


@dataclass(frozen=True)
class RawNote:
    patient_id: str
    note_type: str
    text: str
    date: Optional[dt.date] = None


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    label: int
    structured: Optional[Tuple[Optional[str], ...]] = None
    documents: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    discharge_date: Optional[dt.date] = None


@dataclass
class Corpus:
    patients: List[PatientRecord]
    structured_columns: List[str]
    stopwords: FrozenSet[str]
    note_types: Tuple[str, ...] = NOTE_TYPES
    dropped_note_patients: int = 0

    def __post_init__(self):
        self._index = {p.patient_id: i for i, p in enumerate(self.patients)}

    @property
    def ids(self) -> List[str]:
        return [p.patient_id for p in self.patients]

    @property
    def labels(self) -> List[int]:
        return [p.label for p in self.patients]

    def subset(self, ids: Iterable[str]) -> List[PatientRecord]:
        return [self.patients[self._index[i]] for i in ids]


@dataclass(frozen=True)
class CorpusConfig:
    stopwords_path: Optional[str] = None
    apply_cutoff: bool = True
    cutoff_note_types: Tuple[str, ...] = NOTE_TYPES


def tokenize(text: str) -> List[str]:
    """Lowercased maximal runs of ASCII letters; everything else separates tokens."""
    return [m.group(0).lower() for m in _ALPHA_RUN.finditer(text)]


def remove_stopwords(tokens: Sequence[str], stopwords) -> List[str]:
    return [t for t in tokens if t not in stopwords]


def merge_patient_notes(notes: Sequence[RawNote], patient_id: str, note_type: str,
                        cutoff: Optional[dt.date] = None,
                        stopwords: Optional[FrozenSet[str]] = None) -> Optional[Tuple[str, ...]]:
    """Merge one patient's notes of one type into a single token document.

    Notes dated after ``cutoff`` are dropped; undated notes are kept and go
    last. Returns None when no note survives, so the modality is absent
    rather than an empty document.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    kept = []
    for note in notes:
        if note.patient_id != patient_id or note.note_type != note_type:
            raise ValueError(f"note for {note.patient_id}/{note.note_type} passed "
                             f"while merging {patient_id}/{note_type}")
        if cutoff is not None and note.date is not None and note.date > cutoff:
            continue
        kept.append(note)
    if not kept:
        return None
    kept.sort(key=lambda n: (n.date is None, n.date or dt.date.min))
    # tokenized per note so runs never fuse across a note boundary
    tokens: List[str] = []
    for note in kept:
        tokens.extend(tokenize(note.text))
    return tuple(remove_stopwords(tokens, stopwords))


def _parse_date(value, where: str) -> Optional[dt.date]:
    if value in (None, ""):
        return None
    try:
        return dt.date.fromisoformat(value)
    except (TypeError, ValueError):
        raise DataError(f"{where}: invalid date {value!r}, expected YYYY-MM-DD") from None


def read_structured(path) -> Tuple[List[str], List[dict]]:
    """Parse the structured CSV into (feature columns, row dicts)."""
    path = Path(path)
    rows = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}:1: empty file, expected a header row") from None
        except csv.Error as exc:
            raise DataError(f"{path}:1: {exc}") from None
        if header[:2] != ["patient_id", "label"]:
            raise DataError(f"{path}:1: header must start with 'patient_id,label'")
        has_discharge = "discharge_date" in header
        dd_col = header.index("discharge_date") if has_discharge else -1
        feature_idx = [j for j in range(2, len(header)) if j != dd_col]
        columns = [header[j] for j in feature_idx]
        try:
            for lineno, cells in enumerate(reader, start=2):
                if not cells:
                    continue
                where = f"{path}:{lineno}"
                if len(cells) != len(header):
                    raise DataError(f"{where}: expected {len(header)} cells, got {len(cells)}")
                pid = cells[0].strip()
                if not pid:
                    raise DataError(f"{where}: empty patient_id")
                if pid in seen:
                    raise DataError(f"{where}: duplicate patient_id {pid!r}")
                seen.add(pid)
                if cells[1].strip() not in ("0", "1"):
                    raise DataError(f"{where}: label must be 0 or 1, got {cells[1]!r}")
                rows.append({
                    "patient_id": pid,
                    "label": int(cells[1]),
                    "discharge_date": _parse_date(cells[dd_col].strip(), where) if has_discharge else None,
                    "values": tuple(cells[j].strip() or None for j in feature_idx),
                })
        except csv.Error as exc:
            raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    return columns, rows


def read_notes(path) -> List[RawNote]:
    path = Path(path)
    notes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"{where}: expected a JSON object")
            pid = obj.get("patient_id")
            if not isinstance(pid, str) or not pid:
                raise DataError(f"{where}: patient_id must be a nonempty string")
            note_type = obj.get("note_type")
            if note_type not in NOTE_TYPES:
                raise DataError(f"{where}: unknown note_type {note_type!r}")
            text = obj.get("text")
            if not isinstance(text, str):
                raise DataError(f"{where}: text must be a string")
            notes.append(RawNote(pid, note_type, text, _parse_date(obj.get("date"), where)))
    return notes


def load_corpus(structured_path, notes_path, config: Optional[CorpusConfig] = None) -> Corpus:
    config = config or CorpusConfig()
    stopwords = read_stopwords(config.stopwords_path) if config.stopwords_path else default_stopwords()
    columns, rows = read_structured(structured_path)
    notes = read_notes(notes_path)

    labelled = {r["patient_id"] for r in rows}
    grouped: Dict[Tuple[str, str], List[RawNote]] = {}
    orphans = set()
    for note in notes:
        if note.patient_id not in labelled:
            orphans.add(note.patient_id)
            continue
        grouped.setdefault((note.patient_id, note.note_type), []).append(note)
    if orphans:
        log.warning("dropped notes of %d patient(s) with no structured row", len(orphans))

    patients = []
    for r in rows:
        pid = r["patient_id"]
        docs = {}
        for nt in NOTE_TYPES:
            group = grouped.get((pid, nt))
            if not group:
                continue
            cutoff = r["discharge_date"] if config.apply_cutoff and nt in config.cutoff_note_types else None
            doc = merge_patient_notes(group, pid, nt, cutoff=cutoff, stopwords=stopwords)
            if doc is not None:
                docs[nt] = doc
        patients.append(PatientRecord(pid, r["label"], r["values"], docs, r["discharge_date"]))
    return Corpus(patients, columns, stopwords, NOTE_TYPES, len(orphans))


def load_data_dir(data_dir, config: Optional[CorpusConfig] = None) -> Corpus:
    data_dir = Path(data_dir)
    return load_corpus(data_dir / STRUCTURED_FILE, data_dir / NOTES_FILE, config)
