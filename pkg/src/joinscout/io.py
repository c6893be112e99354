"""Loading delimited tabular files and normalizing their cell values.

A loaded dataset keeps every column as raw text; ``None`` marks a missing
cell.  Downstream consumers that compare cell values run them through
:func:`preprocess_value` first, which folds case, strips diacritics and
punctuation noise, and collapses whitespace.
"""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .exceptions import ParseError

#: Cell spellings treated as a missing value (compared case-insensitively).
MISSING_MARKERS = frozenset({"", "na", "null"})

# Characters that survive preprocessing, besides whitespace.
_DELETE_RE = re.compile(r"[^a-z0-9.\-_@:/\s]+")
_WHITESPACE_RE = re.compile(r"\s+")

_NUMERIC_CHARS = frozenset("0123456789.+-")
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class Column:
    """A named column of raw text cells; ``None`` marks a missing value."""

    dataset_name: str
    attribute_name: str
    cells: tuple[Optional[str], ...]


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of equally long columns from one file."""

    name: str
    columns: tuple[Column, ...]
    row_count: int

    def column(self, attribute_name: str) -> Column:
        for col in self.columns:
            if col.attribute_name == attribute_name:
                return col
        raise KeyError(attribute_name)


def _dedupe_names(names: Sequence[str]) -> list[str]:
    """Suffix repeated names with _2, _3, ... keeping first occurrences intact."""
    out: list[str] = []
    taken: set[str] = set()
    counts: Counter[str] = Counter()
    for name in names:
        counts[name] += 1
        candidate = name
        if counts[name] > 1 or candidate in taken:
            suffix = max(counts[name], 2)
            candidate = f"{name}_{suffix}"
            while candidate in taken:
                suffix += 1
                candidate = f"{name}_{suffix}"
            counts[name] = suffix
        out.append(candidate)
        taken.add(candidate)
    return out


def _as_cell(raw: str) -> Optional[str]:
    if raw.lower() in MISSING_MARKERS:
        return None
    return raw


def load_dataset(
    path: Union[str, Path],
    delimiter: str = ",",
    has_header: bool = True,
) -> Dataset:
    """Parse one delimited text file into a :class:`Dataset`.

    The dataset name is the file stem.  Header names are deduplicated with
    numeric suffixes; without a header, columns are named ``col_0``,
    ``col_1``, ...  Every row must have exactly as many fields as the
    header (or the first row when there is no header); a ragged row raises
    :class:`ParseError` naming the offending row.  Invalid UTF-8 bytes are
    replaced with U+FFFD rather than rejected.
    """
    if len(delimiter) != 1:
        raise ValueError(f"delimiter must be a single character, got {delimiter!r}")
    path = Path(path)
    with open(path, encoding="utf-8", errors="replace", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        names: Optional[list[str]] = None
        rows: list[list[Optional[str]]] = []
        width = 0
        for row_number, record in enumerate(reader, start=1):
            if not record:
                continue  # blank line, csv yields an empty record
            if names is None:
                width = len(record)
                if has_header:
                    names = _dedupe_names(record)
                    continue
                names = [f"col_{i}" for i in range(width)]
            if len(record) != width:
                raise ParseError(
                    f"{path}: row {row_number} has {len(record)} fields, expected {width}"
                )
            rows.append([_as_cell(field) for field in record])
    if names is None:
        raise ParseError(f"{path}: no header row, file is empty")
    by_column = zip(*rows) if rows else [()] * width
    columns = tuple(
        Column(path.stem, name, tuple(cells)) for name, cells in zip(names, by_column)
    )
    return Dataset(name=path.stem, columns=columns, row_count=len(rows))


def is_numeric_text(value: str) -> bool:
    """True when a cell spells a plain number (digits with ., +, - allowed)."""
    return bool(value) and all(ch in _NUMERIC_CHARS for ch in value) and any(
        ch in _DIGITS for ch in value
    )


def string_columns(dataset: Dataset, numeric_exclusion_threshold: float = 0.5) -> list[Column]:
    """Columns whose non-missing cells are mostly not purely numeric.

    A column is kept when the fraction of purely numeric cells among its
    non-missing cells is strictly below the threshold.  Columns with no
    non-missing cells are dropped: they carry nothing to join on.
    """
    if not 0.0 <= numeric_exclusion_threshold <= 1.0:
        raise ValueError("numeric_exclusion_threshold must lie in [0, 1]")
    kept = []
    for col in dataset.columns:
        total = 0
        numeric = 0
        for value, count in Counter(col.cells).items():
            if value is None:
                continue
            total += count
            if is_numeric_text(value):
                numeric += count
        if total == 0:
            continue
        if numeric / total < numeric_exclusion_threshold:
            kept.append(col)
    return kept


def preprocess_value(raw: str) -> Optional[str]:
    """Normalize one cell for comparison; returns ``None`` when nothing is left.

    Lowercases, decomposes accented characters and drops the accents,
    deletes every character outside lowercase letters, digits, whitespace
    and ``. - _ @ : /``, collapses whitespace runs to single spaces and
    trims the ends.  The function is idempotent.
    """
    text = raw if raw.isascii() else unicodedata.normalize("NFKD", raw)
    text = _DELETE_RE.sub("", text.lower())
    text = _WHITESPACE_RE.sub(" ", text).strip()
    return text if text else None


def preprocess_column(column: Column) -> Column:
    """Apply :func:`preprocess_value` to every cell of a column."""
    cache: dict[str, Optional[str]] = {}
    cells = []
    for cell in column.cells:
        if cell is None:
            cells.append(None)
            continue
        if cell not in cache:
            cache[cell] = preprocess_value(cell)
        cells.append(cache[cell])
    return Column(column.dataset_name, column.attribute_name, tuple(cells))
