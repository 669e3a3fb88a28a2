"""Multimodal readmission ensembles over structured data and clinical notes."""

from .corpus import Corpus, PatientRecord, RawNote, load_corpus, load_data_dir
from .errors import DataError

__version__ = "0.1.0"

__all__ = ["Corpus", "DataError", "PatientRecord", "RawNote", "load_corpus", "load_data_dir"]
