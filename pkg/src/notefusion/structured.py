"""One-hot expansion and standardization of the structured table."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
BINARY = "binary"
CATEGORICAL = "categorical"


def _to_float(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def infer_schema(columns: Sequence[str], rows: Sequence[Sequence[Optional[str]]]) -> Dict[str, str]:
    """Column kind from the non-missing cells: 0/1 -> binary, floats -> numeric."""
    kinds = {}
    for j, col in enumerate(columns):
        cells = [r[j] for r in rows if r[j] is not None]
        if not cells:
            raise DataError(f"structured column {col!r} has no non-missing values")
        parsed = [_to_float(c) for c in cells]
        if any(p is None for p in parsed):
            kinds[col] = CATEGORICAL
        elif set(parsed) <= {0.0, 1.0}:
            kinds[col] = BINARY
        else:
            kinds[col] = NUMERIC
    return kinds


@dataclass(frozen=True)
class StructuredEncoder:
    columns: List[str]
    kinds: Dict[str, str]
    levels: Dict[str, List[str]]
    fill_values: Dict[str, float]
    means: np.ndarray
    stds: np.ndarray
    feature_names: List[str]

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "kinds": dict(self.kinds),
            "levels": {k: list(v) for k, v in self.levels.items()},
            "fill_values": dict(self.fill_values),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructuredEncoder":
        return cls(d["columns"], d["kinds"], d["levels"], d["fill_values"],
                   np.asarray(d["means"], dtype=float), np.asarray(d["stds"], dtype=float),
                   d["feature_names"])


def _expand(columns, kinds, levels, fill_values, row) -> np.ndarray:
    """Raw row -> unstandardized feature vector (one-hot blocks, imputed numerics)."""
    out = []
    for j, col in enumerate(columns):
        cell = row[j]
        kind = kinds[col]
        if kind == CATEGORICAL:
            out.extend(1.0 if cell == lev else 0.0 for lev in levels[col])
            continue
        if cell is None:
            out.append(fill_values[col])
            continue
        value = _to_float(cell)
        if value is None:
            raise DataError(f"structured column {col!r}: cannot parse {cell!r} as a number")
        out.append(value)
    return np.asarray(out, dtype=float)


def fit_structured_encoder(train_rows: Sequence[Sequence[Optional[str]]], columns: Sequence[str],
                           kinds: Optional[Dict[str, str]] = None) -> StructuredEncoder:
    """Fit level lists, imputation means and standardization statistics on training rows.

    Standard deviations are population (ddof=0) values.
    """
    if len(train_rows) < 2:
        raise DataError("need at least 2 training rows to fit the structured encoder")
    columns = list(columns)
    kinds = dict(kinds) if kinds is not None else infer_schema(columns, train_rows)
    levels: Dict[str, List[str]] = {}
    fill_values: Dict[str, float] = {}
    names: List[str] = []
    for j, col in enumerate(columns):
        cells = [r[j] for r in train_rows if r[j] is not None]
        if not cells:
            raise DataError(f"structured column {col!r} has no non-missing values")
        if kinds[col] == CATEGORICAL:
            levels[col] = sorted(set(cells))
            names.extend(f"{col}={lev}" for lev in levels[col])
        else:
            parsed = [_to_float(c) for c in cells]
            bad = next((c for c, p in zip(cells, parsed) if p is None), None)
            if bad is not None:
                raise DataError(f"structured column {col!r}: cannot parse {bad!r} as a number")
            fill_values[col] = float(np.mean(parsed))
            names.append(col)

    raw = np.vstack([_expand(columns, kinds, levels, fill_values, r) for r in train_rows])
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    return StructuredEncoder(columns, kinds, levels, fill_values, means, stds, names)


def encode(encoder: StructuredEncoder, row: Sequence[Optional[str]]) -> np.ndarray:
    if len(row) != len(encoder.columns):
        raise DataError(f"structured row has {len(row)} cells, encoder expects {len(encoder.columns)}")
    x = _expand(encoder.columns, encoder.kinds, encoder.levels, encoder.fill_values, row)
    centered = x - encoder.means
    out = np.zeros_like(centered)
    nz = encoder.stds > 0
    out[nz] = centered[nz] / encoder.stds[nz]
    return out


def encode_rows(encoder: StructuredEncoder, rows) -> np.ndarray:
    if len(rows) == 0:
        return np.zeros((0, encoder.dim))
    return np.vstack([encode(encoder, r) for r in rows])
