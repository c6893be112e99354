"""Z-score normalization over a profile pool and pairwise distance vectors.

The distance vector layout is fixed and versioned: scale-carrying numeric
features enter as absolute differences of Z-scores, features that are
already fractions enter as absolute raw differences, categorical features
as 0/1 indicators, the top-10 value and soundex sets as Jaccard
distances, and the three pair features are appended raw.  Artifacts that
exchange vectors (stores, models) embed ``LAYOUT_VERSION`` so that
mismatched layouts fail loudly instead of silently skewing predictions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .exceptions import LayoutMismatchError
from .profiling import (
    DATA_TYPES,
    SPECIFIC_TYPES,
    AttributeProfile,
    BinaryFeatures,
    binary_features,
)

#: Features normalized with Z-scores before differencing.
NORMALIZED_FEATURES = (
    "cardinality",
    "entropy",
    "freq_avg",
    "freq_min",
    "freq_max",
    "freq_sd",
    "len_longest",
    "len_shortest",
    "len_avg",
    "words_count",
    "words_avg",
    "words_min",
    "words_max",
    "words_sd",
)

#: Fraction-valued features compared as absolute raw differences.
RAW_FEATURES = (
    "uniqueness",
    "incompleteness",
    "constancy",
    "freq_min_pct",
    "freq_max_pct",
    "freq_sd_pct",
)

VECTOR_LAYOUT = (
    tuple(f"z:{name}" for name in NORMALIZED_FEATURES)
    + tuple(f"raw:{name}" for name in RAW_FEATURES)
    + tuple(f"raw:octile_{i}" for i in range(1, 8))
    + tuple(f"raw:pct_data_type.{t}" for t in DATA_TYPES)
    + tuple(f"raw:pct_specific_type.{t}" for t in SPECIFIC_TYPES)
    + ("cat:data_type", "cat:specific_type")
    + ("set:frequent_words", "set:soundex_words")
    + ("pair:best_containment", "pair:flipped_containment", "pair:name_distance")
)

LAYOUT_VERSION = "dv1"
VECTOR_ARITY = len(VECTOR_LAYOUT)


@dataclass(frozen=True)
class NormalizationStats:
    """Population mean and SD per normalized feature over a profile pool."""

    features: tuple[str, ...]
    mean: tuple[float, ...]
    sd: tuple[float, ...]
    pool_size: int

    @property
    def constant_features(self) -> tuple[str, ...]:
        """Features with zero spread in the pool; they contribute 0 distance."""
        return tuple(f for f, s in zip(self.features, self.sd) if s == 0.0)

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "mean": list(self.mean),
            "sd": list(self.sd),
            "pool_size": self.pool_size,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NormalizationStats":
        try:
            return cls(
                features=tuple(payload["features"]),
                mean=tuple(float(x) for x in payload["mean"]),
                sd=tuple(float(x) for x in payload["sd"]),
                pool_size=int(payload["pool_size"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed normalization stats: {exc}") from exc


def compute_normalization(pool: Sequence[AttributeProfile]) -> NormalizationStats:
    """Population mean/SD of every normalized feature over the pool.

    Requires at least two profiles; a spread of zero is kept as SD 0 and
    surfaces through :attr:`NormalizationStats.constant_features`.
    """
    if len(pool) < 2:
        raise ValueError("normalization requires a pool of at least 2 profiles")
    matrix = np.array(
        [[float(getattr(p, name)) for name in NORMALIZED_FEATURES] for p in pool]
    )
    return NormalizationStats(
        features=NORMALIZED_FEATURES,
        mean=tuple(float(x) for x in matrix.mean(axis=0)),
        sd=tuple(float(x) for x in matrix.std(axis=0)),
        pool_size=len(pool),
    )


def zscore(x: float, mean: float, sd: float) -> float:
    """(x - mean) / sd, defined as 0 when the pool had no spread."""
    if sd == 0.0:
        return 0.0
    return (x - mean) / sd


def _set_distance(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return 1.0 - len(sa & sb) / union


def distance_vector(pa: AttributeProfile, pb: AttributeProfile,
                    bf: BinaryFeatures, stats: NormalizationStats) -> np.ndarray:
    """Fixed-order distance vector between two profiles under one pool."""
    if stats.features != NORMALIZED_FEATURES:
        raise LayoutMismatchError(
            "normalization stats do not cover the expected feature set; "
            f"layout {LAYOUT_VERSION} requires {len(NORMALIZED_FEATURES)} features"
        )
    out = np.empty(VECTOR_ARITY)
    pos = 0
    for name, mean, sd in zip(stats.features, stats.mean, stats.sd):
        za = zscore(float(getattr(pa, name)), mean, sd)
        zb = zscore(float(getattr(pb, name)), mean, sd)
        out[pos] = abs(za - zb)
        pos += 1
    for name in RAW_FEATURES:
        out[pos] = abs(float(getattr(pa, name)) - float(getattr(pb, name)))
        pos += 1
    for i in range(7):
        out[pos] = abs(pa.octiles[i] - pb.octiles[i])
        pos += 1
    for t in DATA_TYPES:
        out[pos] = abs(pa.pct_data_type[t] - pb.pct_data_type[t])
        pos += 1
    for t in SPECIFIC_TYPES:
        out[pos] = abs(pa.pct_specific_type[t] - pb.pct_specific_type[t])
        pos += 1
    out[pos] = 0.0 if pa.data_type == pb.data_type else 1.0
    out[pos + 1] = 0.0 if pa.specific_type == pb.specific_type else 1.0
    out[pos + 2] = _set_distance(pa.frequent_words, pb.frequent_words)
    out[pos + 3] = _set_distance(pa.soundex_words, pb.soundex_words)
    out[pos + 4] = bf.best_containment
    out[pos + 5] = bf.flipped_containment
    out[pos + 6] = bf.name_distance
    return out


class ProfilePairVectorizer(TransformerMixin, BaseEstimator):
    """Turn attribute-profile pairs into model-ready distance vectors.

    ``fit`` takes the comparison pool (a sequence of profiles) and captures
    its normalization statistics; ``transform`` takes ``(left, right)``
    profile pairs and returns one distance vector per pair.
    """

    def fit(self, X: Sequence[AttributeProfile], y=None) -> "ProfilePairVectorizer":
        self.stats_ = compute_normalization(list(X))
        self.layout_version_ = LAYOUT_VERSION
        return self

    def transform(self, X: Sequence[tuple[AttributeProfile, AttributeProfile]]) -> np.ndarray:
        if not hasattr(self, "stats_"):
            raise NotFittedError("vectorizer must be fitted on a profile pool first")
        pairs = list(X)
        out = np.empty((len(pairs), VECTOR_ARITY))
        for row, (pa, pb) in enumerate(pairs):
            out[row] = distance_vector(pa, pb, binary_features(pa, pb), self.stats_)
        return out

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(VECTOR_LAYOUT, dtype=object)
