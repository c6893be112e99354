"""Unary attribute profiles and binary pair features for string columns.

A profile summarizes one column through cardinalities, the shape of its
value-frequency distribution, syntactic type percentages, representative
frequent values with their phonetic codes, and string-length and
word-count statistics.  Binary features capture what a pair of profiles
says about their best possible overlap and the similarity of their names.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import ParseError, ProfilingError
from .io import Column, preprocess_value

DATA_TYPES = ("numeric", "alphabetic", "alphanumeric", "nonAlphanumeric", "datetime")
SPECIFIC_TYPES = ("phone", "email", "url", "ip", "username", "phrases", "other")

# Specific-type definitions, applied in fixed order (first match wins):
# email -> url -> ip -> phone -> username -> phrases -> other.
EMAIL_RE = re.compile(r"^[\w.+-]+@[\w-]+\.[\w.]+$", re.ASCII)
URL_RE = re.compile(r"^(?:[a-z][a-z0-9+.-]*://\S+|www\.\S+)$", re.ASCII)
IP_RE = re.compile(
    r"^(?:(?:25[0-5]|2[0-4][0-9]|1[0-9][0-9]|[1-9]?[0-9])\.){3}"
    r"(?:25[0-5]|2[0-4][0-9]|1[0-9][0-9]|[1-9]?[0-9])$"
)
USERNAME_RE = re.compile(r"^[a-z0-9._-]{3,}$", re.ASCII)
_USERNAME_MARK_RE = re.compile(r"[0-9._-]")
_PHONE_SEPARATORS = str.maketrans("", "", " ()./-")
PHRASE_MIN_WORDS = 4

_DATETIME_RES = (
    re.compile(r"^\d{4}-\d{2}-\d{2}(?:[ t]\d{1,2}:\d{2}(?::\d{2})?)?$"),
    re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$"),
    re.compile(r"^\d{1,2}:\d{2}(?::\d{2})?\s*(?:am|pm)?$"),
    re.compile(r"^\d{1,2}\s*(?:am|pm)$"),
)

_NUMERIC_CHARS = frozenset("0123456789.+-")
_DIGITS = frozenset("0123456789")

_SOUNDEX_CODES = {}
for _letters, _digit in (("bfpv", "1"), ("cgjkqsxz", "2"), ("dt", "3"),
                         ("l", "4"), ("mn", "5"), ("r", "6")):
    for _ch in _letters:
        _SOUNDEX_CODES[_ch] = _digit


@dataclass(frozen=True)
class AttributeProfile:
    """Summary statistics of one string column."""

    dataset_name: str
    attribute_name: str
    cardinality: int
    uniqueness: float
    incompleteness: float
    entropy: float
    freq_avg: float
    freq_min: float
    freq_max: float
    freq_sd: float
    octiles: tuple[float, ...]
    freq_min_pct: float
    freq_max_pct: float
    freq_sd_pct: float
    constancy: float
    frequent_words: tuple[str, ...]
    soundex_words: tuple[str, ...]
    data_type: str
    specific_type: str
    pct_data_type: Mapping[str, float]
    pct_specific_type: Mapping[str, float]
    len_longest: int
    len_shortest: int
    len_avg: float
    words_count: int
    words_avg: float
    words_min: int
    words_max: int
    words_sd: float


@dataclass(frozen=True)
class BinaryFeatures:
    """Pairwise features independent of actual value overlap."""

    best_containment: float
    flipped_containment: float
    name_distance: float


# ---------------------------------------------------------------------------
# type inference
# ---------------------------------------------------------------------------

def infer_data_type(value: str) -> str:
    """Coarse syntax category of a single cell value."""
    if not value:
        raise ValueError("cannot infer a type for an empty value")
    text = value.lower()
    if any(pattern.match(text) for pattern in _DATETIME_RES):
        return "datetime"
    if all(ch in _NUMERIC_CHARS for ch in text) and any(ch in _DIGITS for ch in text):
        return "numeric"
    has_alpha = any(ch.isalpha() for ch in text)
    has_digit = any(ch.isdigit() for ch in text)
    if has_alpha and all(ch.isalpha() or ch == " " for ch in text):
        return "alphabetic"
    if has_alpha and has_digit and all(ch.isalnum() or ch == " " for ch in text):
        return "alphanumeric"
    return "nonAlphanumeric"


def _is_phone(text: str) -> bool:
    if text.startswith("+"):
        text = text[1:]
    digits = text.translate(_PHONE_SEPARATORS)
    return digits.isdigit() and 7 <= len(digits) <= 15


def infer_specific_type(value: str) -> str:
    """Fine-grained syntax category; first match wins in a fixed order."""
    if not value:
        raise ValueError("cannot infer a type for an empty value")
    text = value.lower()
    if EMAIL_RE.match(text):
        return "email"
    if URL_RE.match(text):
        return "url"
    if IP_RE.match(text):
        return "ip"
    if _is_phone(text):
        return "phone"
    if USERNAME_RE.match(text) and _USERNAME_MARK_RE.search(text):
        return "username"
    if len(text.split()) >= PHRASE_MIN_WORDS:
        return "phrases"
    return "other"


def soundex(word: str) -> str:
    """American Soundex code: initial letter plus three digits, zero-padded.

    ``h`` and ``w`` are transparent (they do not separate duplicate codes),
    vowels separate them, and letters with no code act as vowels.
    """
    letters = [ch for ch in word.lower() if ch.isalpha()]
    if not letters:
        raise ValueError(f"cannot encode {word!r}: it contains no letters")
    code = [letters[0].upper()]
    previous = _SOUNDEX_CODES.get(letters[0])
    for ch in letters[1:]:
        if ch in "hw":
            continue
        digit = _SOUNDEX_CODES.get(ch)
        if digit is None:
            previous = None
            continue
        if digit != previous:
            code.append(digit)
            if len(code) == 4:
                break
        previous = digit
    return "".join(code).ljust(4, "0")


def levenshtein_name_distance(a: str, b: str) -> float:
    """Edit distance between two names divided by the longer length.

    Case-insensitive; insertions, deletions and substitutions all cost 1.
    """
    if not a or not b:
        raise ValueError("name distance requires two non-empty names")
    left, right = a.lower(), b.lower()
    if len(left) < len(right):
        left, right = right, left
    previous = list(range(len(right) + 1))
    for i, ch_left in enumerate(left, start=1):
        current = [i]
        for j, ch_right in enumerate(right, start=1):
            cost = 0 if ch_left == ch_right else 1
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + cost))
        previous = current
    return previous[-1] / len(left)


# ---------------------------------------------------------------------------
# profile construction
# ---------------------------------------------------------------------------

def _modal(counts: Counter, order: Sequence[str]) -> str:
    return max(order, key=lambda key: counts.get(key, 0))


def build_profile(column: Column) -> AttributeProfile:
    """Summarize one column into an :class:`AttributeProfile`.

    Cells are preprocessed first; the frequency distribution is taken over
    the distinct preprocessed values.  Raises :class:`ProfilingError` when
    the column is empty or holds nothing but missing values.
    """
    label = f"{column.dataset_name}.{column.attribute_name}"
    row_count = len(column.cells)
    if row_count == 0:
        raise ProfilingError(f"{label}: column has no cells")

    missing = 0
    counts: Counter[str] = Counter()
    for raw, n in Counter(column.cells).items():
        if raw is None:
            missing += n
            continue
        value = preprocess_value(raw)
        if value is None:
            missing += n
        else:
            counts[value] += n
    if not counts:
        raise ProfilingError(f"{label}: column has no non-missing values")

    values = list(counts.keys())
    freq = np.array([counts[v] for v in values], dtype=float)
    non_missing = float(freq.sum())
    cardinality = len(values)

    pct = freq / non_missing
    probabilities = pct
    if cardinality > 1:
        raw_entropy = float(-(probabilities * np.log(probabilities)).sum())
        entropy = min(max(raw_entropy / np.log(cardinality), 0.0), 1.0)
    else:
        entropy = 0.0

    # Nearest-rank octiles of the per-value frequency-fraction distribution.
    sorted_pct = np.sort(pct)
    octiles = tuple(
        float(sorted_pct[max((i * cardinality + 7) // 8, 1) - 1]) for i in range(1, 8)
    )

    dt_counts: Counter[str] = Counter()
    st_counts: Counter[str] = Counter()
    length = np.empty(cardinality)
    words = np.empty(cardinality)
    for idx, value in enumerate(values):
        dt_counts[infer_data_type(value)] += counts[value]
        st_counts[infer_specific_type(value)] += counts[value]
        length[idx] = len(value)
        words[idx] = len(value.split())

    frequent_words = tuple(
        value for value, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    )
    soundex_words = tuple(
        soundex(value) for value in frequent_words
        if any(ch.isalpha() for ch in value)
    )

    def weighted_avg(feature: np.ndarray) -> float:
        return float((feature * freq).sum() / non_missing)

    def weighted_sd(feature: np.ndarray) -> float:
        avg = weighted_avg(feature)
        return float(np.sqrt(((feature - avg) ** 2 * freq).sum() / non_missing))

    words_total = int((words * freq).sum())
    return AttributeProfile(
        dataset_name=column.dataset_name,
        attribute_name=column.attribute_name,
        cardinality=cardinality,
        uniqueness=cardinality / non_missing,
        incompleteness=missing / row_count,
        entropy=entropy,
        freq_avg=non_missing / cardinality,
        freq_min=float(freq.min()),
        freq_max=float(freq.max()),
        freq_sd=float(freq.std()),
        octiles=octiles,
        freq_min_pct=float(pct.min()),
        freq_max_pct=float(pct.max()),
        freq_sd_pct=float(pct.std()),
        constancy=float(freq.max()) / row_count,
        frequent_words=frequent_words,
        soundex_words=soundex_words,
        data_type=_modal(dt_counts, DATA_TYPES),
        specific_type=_modal(st_counts, SPECIFIC_TYPES),
        pct_data_type={t: dt_counts.get(t, 0) / non_missing for t in DATA_TYPES},
        pct_specific_type={t: st_counts.get(t, 0) / non_missing for t in SPECIFIC_TYPES},
        len_longest=int(length.max()),
        len_shortest=int(length.min()),
        len_avg=weighted_avg(length),
        words_count=words_total,
        words_avg=weighted_avg(words),
        words_min=int(words.min()),
        words_max=int(words.max()),
        words_sd=weighted_sd(words),
    )


def binary_features(pa: AttributeProfile, pb: AttributeProfile) -> BinaryFeatures:
    """Pair features assuming the best case, full coverage of distinct values.

    best_containment is the largest containment C(A,B) achievable given the
    two cardinalities; flipped_containment is the cardinality proportion.
    """
    if pa.cardinality < 1 or pb.cardinality < 1:
        raise ValueError("binary features require positive cardinalities")
    smaller = min(pa.cardinality, pb.cardinality)
    return BinaryFeatures(
        best_containment=smaller / pa.cardinality,
        flipped_containment=smaller / max(pa.cardinality, pb.cardinality),
        name_distance=levenshtein_name_distance(pa.attribute_name, pb.attribute_name),
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _round_floats(obj):
    """Round floats to 12 significant digits for stable serialized profiles."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {key: _round_floats(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(item) for item in obj]
    return obj


def profile_to_dict(profile: AttributeProfile) -> dict:
    return {
        "dataset_name": profile.dataset_name,
        "attribute_name": profile.attribute_name,
        "cardinality": profile.cardinality,
        "uniqueness": profile.uniqueness,
        "incompleteness": profile.incompleteness,
        "entropy": profile.entropy,
        "freq_avg": profile.freq_avg,
        "freq_min": profile.freq_min,
        "freq_max": profile.freq_max,
        "freq_sd": profile.freq_sd,
        "octiles": list(profile.octiles),
        "freq_min_pct": profile.freq_min_pct,
        "freq_max_pct": profile.freq_max_pct,
        "freq_sd_pct": profile.freq_sd_pct,
        "constancy": profile.constancy,
        "frequent_words": list(profile.frequent_words),
        "soundex_words": list(profile.soundex_words),
        "data_type": profile.data_type,
        "specific_type": profile.specific_type,
        "pct_data_type": {t: profile.pct_data_type[t] for t in DATA_TYPES},
        "pct_specific_type": {t: profile.pct_specific_type[t] for t in SPECIFIC_TYPES},
        "len_longest": profile.len_longest,
        "len_shortest": profile.len_shortest,
        "len_avg": profile.len_avg,
        "words_count": profile.words_count,
        "words_avg": profile.words_avg,
        "words_min": profile.words_min,
        "words_max": profile.words_max,
        "words_sd": profile.words_sd,
    }


def profile_from_dict(payload: dict) -> AttributeProfile:
    try:
        return AttributeProfile(
            dataset_name=payload["dataset_name"],
            attribute_name=payload["attribute_name"],
            cardinality=int(payload["cardinality"]),
            uniqueness=float(payload["uniqueness"]),
            incompleteness=float(payload["incompleteness"]),
            entropy=float(payload["entropy"]),
            freq_avg=float(payload["freq_avg"]),
            freq_min=float(payload["freq_min"]),
            freq_max=float(payload["freq_max"]),
            freq_sd=float(payload["freq_sd"]),
            octiles=tuple(float(x) for x in payload["octiles"]),
            freq_min_pct=float(payload["freq_min_pct"]),
            freq_max_pct=float(payload["freq_max_pct"]),
            freq_sd_pct=float(payload["freq_sd_pct"]),
            constancy=float(payload["constancy"]),
            frequent_words=tuple(payload["frequent_words"]),
            soundex_words=tuple(payload["soundex_words"]),
            data_type=payload["data_type"],
            specific_type=payload["specific_type"],
            pct_data_type={t: float(payload["pct_data_type"][t]) for t in DATA_TYPES},
            pct_specific_type={
                t: float(payload["pct_specific_type"][t]) for t in SPECIFIC_TYPES
            },
            len_longest=int(payload["len_longest"]),
            len_shortest=int(payload["len_shortest"]),
            len_avg=float(payload["len_avg"]),
            words_count=int(payload["words_count"]),
            words_avg=float(payload["words_avg"]),
            words_min=int(payload["words_min"]),
            words_max=int(payload["words_max"]),
            words_sd=float(payload["words_sd"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed profile payload: {exc}") from exc


def save_profiles(profiles: Sequence[AttributeProfile], path: Union[str, Path],
                  dataset_name: Optional[str] = None) -> None:
    """Write the profiles of one dataset as a JSON document."""
    if dataset_name is None:
        if not profiles:
            raise ValueError("cannot infer a dataset name from zero profiles")
        dataset_name = profiles[0].dataset_name
    payload = {
        "dataset": dataset_name,
        "attributes": [_round_floats(profile_to_dict(p)) for p in profiles],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_profiles(path: Union[str, Path]) -> list[AttributeProfile]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict) or "attributes" not in payload:
        raise ParseError(f"{path}: not a profile document (missing 'attributes')")
    return [profile_from_dict(entry) for entry in payload["attributes"]]
