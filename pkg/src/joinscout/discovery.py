"""Repository indexing, discovery queries, ground truth and evaluation.

The profile store is an immutable snapshot: the attribute profiles of a
repository plus the normalization statistics computed over exactly those
profiles.  Queries rank candidate attributes from other datasets by the
predicted join quality of their distance vectors.  Ground truth is
generated from the raw data with the exact set-based metrics, and the
evaluation helpers compute the usual threshold-classifier and ranking
scores against it.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .comparison import (
    LAYOUT_VERSION,
    NormalizationStats,
    compute_normalization,
    distance_vector,
)
from .exceptions import (
    IndexingError,
    LayoutMismatchError,
    ParseError,
    UnknownAttributeError,
)
from .io import Dataset, _dedupe_names, load_dataset, string_columns
from .metrics import (
    FittedParams,
    QualityScore,
    cardinality_proportion,
    containment,
    discrete_level,
    jaccard,
    load_default_params,
    truncated_normal_cdf,
    value_set,
)
from .profiling import (
    AttributeProfile,
    binary_features,
    build_profile,
    load_profiles,
    profile_from_dict,
    profile_to_dict,
)

STORE_FORMAT = "jsstore"
STORE_FORMAT_VERSION = 1

#: Strictness offsets in ground-truth column order.
_STRICTNESS_COLUMNS = (("q_relaxed", 0.0), ("q_balanced", 0.25), ("q_strict", 0.5))

GROUND_TRUTH_COLUMNS = (
    "dataset_a", "attribute_a", "dataset_b", "attribute_b",
    "containment", "jaccard", "k", "level",
    "q_relaxed", "q_balanced", "q_strict",
)

#: Discrete level (out of 4) from which a pair counts as semantically joinable.
SEMANTIC_LEVEL = 3


# ---------------------------------------------------------------------------
# profile store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileStore:
    """Immutable snapshot of profiled attributes and their pool statistics."""

    profiles: Mapping[tuple[str, str], AttributeProfile]
    stats: NormalizationStats
    layout_version: str
    store_version: int

    @classmethod
    def from_profiles(cls, profiles: Sequence[AttributeProfile],
                      store_version: int = 1) -> "ProfileStore":
        ordered = sorted(profiles, key=lambda p: (p.dataset_name, p.attribute_name))
        by_id = {(p.dataset_name, p.attribute_name): p for p in ordered}
        if len(by_id) != len(ordered):
            raise ValueError("duplicate attribute identifiers in the profile pool")
        return cls(
            profiles=by_id,
            stats=compute_normalization(ordered),
            layout_version=LAYOUT_VERSION,
            store_version=store_version,
        )

    def attribute_ids(self) -> list[tuple[str, str]]:
        return list(self.profiles.keys())

    def get(self, dataset_name: str, attribute_name: str) -> AttributeProfile:
        try:
            return self.profiles[(dataset_name, attribute_name)]
        except KeyError:
            raise UnknownAttributeError(
                f"attribute {dataset_name}.{attribute_name} is not in the store"
            ) from None

    def save(self, path: Union[str, Path]) -> None:
        payload = {
            "format": STORE_FORMAT,
            "format_version": STORE_FORMAT_VERSION,
            "store_version": self.store_version,
            "layout_version": self.layout_version,
            "normalization": self.stats.to_dict(),
            "profiles": [profile_to_dict(p) for p in self.profiles.values()],
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ProfileStore":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            if payload["format"] != STORE_FORMAT:
                raise ValueError(f"unknown format {payload['format']!r}")
            if payload["format_version"] != STORE_FORMAT_VERSION:
                raise ValueError(
                    f"unsupported format version {payload['format_version']!r}"
                )
            profiles = [profile_from_dict(entry) for entry in payload["profiles"]]
            return cls(
                profiles={(p.dataset_name, p.attribute_name): p for p in profiles},
                stats=NormalizationStats.from_dict(payload["normalization"]),
                layout_version=payload["layout_version"],
                store_version=int(payload["store_version"]),
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ParseError(f"{path}: malformed store file ({exc})") from exc


def load_pool(path: Union[str, Path]) -> ProfileStore:
    """Load a store file, or build a fresh store from a directory of profiles."""
    path = Path(path)
    if path.is_dir():
        profiles: list[AttributeProfile] = []
        for doc in sorted(path.glob("*.json")):
            profiles.extend(load_profiles(doc))
        if len(profiles) < 2:
            raise IndexingError(f"{path}: fewer than 2 profiles in directory")
        return ProfileStore.from_profiles(profiles)
    return ProfileStore.load(path)


# ---------------------------------------------------------------------------
# repository loading and indexing
# ---------------------------------------------------------------------------

def _rename_dataset(dataset: Dataset, name: str) -> Dataset:
    columns = tuple(
        dataclasses.replace(col, dataset_name=name) for col in dataset.columns
    )
    return Dataset(name=name, columns=columns, row_count=dataset.row_count)


def load_repository(
    paths: Sequence[Union[str, Path]],
    delimiter: str = ",",
    has_header: bool = True,
    max_workers: Optional[int] = None,
) -> tuple[list[Dataset], list[tuple[str, str]]]:
    """Load many delimited files, collecting per-file failures.

    Dataset names that collide (same file stem in different directories)
    get numeric suffixes in path order.  Returns the loaded datasets and a
    list of (path, message) pairs for the files that failed.
    """
    if not paths:
        raise ValueError("no input paths given")
    if len(delimiter) != 1:
        raise ValueError(f"delimiter must be a single character, got {delimiter!r}")

    def load_one(path):
        return load_dataset(path, delimiter=delimiter, has_header=has_header)

    datasets: list[Optional[Dataset]] = [None] * len(paths)
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for idx, outcome in enumerate(pool.map(_guarded(load_one), paths)):
            if isinstance(outcome, Exception):
                failures.append((str(paths[idx]), str(outcome)))
            else:
                datasets[idx] = outcome
    loaded = [d for d in datasets if d is not None]
    names = _dedupe_names([d.name for d in loaded])
    renamed = [
        dataset if name == dataset.name else _rename_dataset(dataset, name)
        for dataset, name in zip(loaded, names)
    ]
    return renamed, failures


def _guarded(fn):
    def call(arg):
        try:
            return fn(arg)
        except Exception as exc:  # noqa: BLE001 - reported per file
            return exc
    return call


def index_repository(
    paths: Sequence[Union[str, Path]],
    delimiter: str = ",",
    has_header: bool = True,
    numeric_exclusion_threshold: float = 0.5,
    max_workers: Optional[int] = None,
    base_version: int = 0,
) -> tuple[ProfileStore, list[tuple[str, str]]]:
    """Profile every string attribute of a repository into a fresh store.

    Per-file load failures and per-column profiling failures are collected
    rather than fatal; the store is built from the successes and its
    version is ``base_version + 1``.  Raises :class:`IndexingError` when
    nothing usable survives.
    """
    datasets, failures = load_repository(
        paths, delimiter=delimiter, has_header=has_header, max_workers=max_workers
    )
    if not datasets:
        raise IndexingError(
            "all input files failed to load: "
            + "; ".join(f"{p}: {m}" for p, m in failures)
        )
    columns = [
        col
        for dataset in datasets
        for col in string_columns(dataset, numeric_exclusion_threshold)
    ]
    profiles = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for col, outcome in zip(columns, pool.map(_guarded(build_profile), columns)):
            if isinstance(outcome, Exception):
                failures.append((f"{col.dataset_name}.{col.attribute_name}", str(outcome)))
            else:
                profiles.append(outcome)
    if len(profiles) < 2:
        raise IndexingError(
            "indexing needs at least 2 profilable string attributes, "
            f"got {len(profiles)}"
        )
    store = ProfileStore.from_profiles(profiles, store_version=base_version + 1)
    return store, failures


# ---------------------------------------------------------------------------
# discovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankedCandidate:
    dataset_name: str
    attribute_name: str
    score: QualityScore


@dataclass(frozen=True)
class Ranking:
    """Top candidates for one query, nonincreasing by predicted score."""

    query: tuple[str, str]
    entries: tuple[RankedCandidate, ...]

    def to_payload(self) -> list[dict]:
        return [
            {"dataset": e.dataset_name, "attribute": e.attribute_name,
             "score": e.score.value}
            for e in self.entries
        ]


def discover_by_attribute(store: ProfileStore, model, query: tuple[str, str],
                          k: int) -> Ranking:
    """Rank the top-k attributes joinable with the query attribute.

    Candidates come only from datasets other than the query's own; ties in
    predicted score break lexicographically on (dataset, attribute).
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    query = (str(query[0]), str(query[1]))
    query_profile = store.get(*query)
    if model.layout_version != store.layout_version:
        raise LayoutMismatchError(
            f"model layout {model.layout_version!r} does not match "
            f"store layout {store.layout_version!r}"
        )
    candidates = sorted(
        cid for cid in store.profiles if cid[0] != query[0]
    )
    if not candidates:
        return Ranking(query=query, entries=())
    vectors = np.vstack([
        distance_vector(
            query_profile,
            store.profiles[cid],
            binary_features(query_profile, store.profiles[cid]),
            store.stats,
        )
        for cid in candidates
    ])
    scores = model.predict(vectors)
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], candidates[i]))
    entries = tuple(
        RankedCandidate(
            dataset_name=candidates[i][0],
            attribute_name=candidates[i][1],
            score=QualityScore(value=float(scores[i]), kind="predicted"),
        )
        for i in order[:k]
    )
    return Ranking(query=query, entries=entries)


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthEntry:
    """Exact metrics for one ordered cross-dataset attribute pair."""

    dataset_a: str
    attribute_a: str
    dataset_b: str
    attribute_b: str
    containment: float
    jaccard: float
    k: float
    level: int
    q_relaxed: float
    q_balanced: float
    q_strict: float

    def quality(self, column: str) -> float:
        if column not in {"q_relaxed", "q_balanced", "q_strict"}:
            raise ValueError(f"unknown quality column {column!r}")
        return getattr(self, column)


def generate_ground_truth(
    datasets: Sequence[Dataset],
    level_count: int = 4,
    params: Optional[FittedParams] = None,
    numeric_exclusion_threshold: float = 0.5,
) -> list[GroundTruthEntry]:
    """Exact joinability metrics for all ordered cross-dataset string pairs.

    Attributes whose preprocessed value set is empty are skipped; every
    remaining ordered pair (a, b) with a and b in different datasets gets
    exact containment, Jaccard, cardinality proportion, the discrete level
    and the continuous quality at the three strictness offsets.
    """
    if params is None:
        params = load_default_params()
    sets: list[tuple[str, str, frozenset[str]]] = []
    for dataset in datasets:
        for col in string_columns(dataset, numeric_exclusion_threshold):
            values = value_set(col)
            if values:
                sets.append((col.dataset_name, col.attribute_name, values))
    sets.sort(key=lambda item: (item[0], item[1]))

    rows: list[tuple[int, int, float, float, float, int]] = []
    for i, (ds_a, attr_a, set_a) in enumerate(sets):
        for j, (ds_b, attr_b, set_b) in enumerate(sets):
            if ds_a == ds_b:
                continue
            c = containment(set_a, set_b)
            rows.append((
                i, j, c,
                jaccard(set_a, set_b),
                cardinality_proportion(set_a, set_b),
                discrete_level(c, cardinality_proportion(set_a, set_b), level_count),
            ))
    if not rows:
        return []

    c_values = np.array([r[2] for r in rows])
    k_values = np.array([r[4] for r in rows])
    qk = truncated_normal_cdf(k_values, params.mu_k, params.var_k,
                              params.lower, params.upper)
    qualities = {}
    for column, offset in _STRICTNESS_COLUMNS:
        qc = truncated_normal_cdf(c_values, params.mu_c + offset, params.var_c,
                                  params.lower, params.upper)
        qualities[column] = qc * qk

    entries = []
    for row_idx, (i, j, c, jac, kprop, level) in enumerate(rows):
        entries.append(GroundTruthEntry(
            dataset_a=sets[i][0], attribute_a=sets[i][1],
            dataset_b=sets[j][0], attribute_b=sets[j][1],
            containment=c, jaccard=jac, k=kprop, level=level,
            q_relaxed=float(qualities["q_relaxed"][row_idx]),
            q_balanced=float(qualities["q_balanced"][row_idx]),
            q_strict=float(qualities["q_strict"][row_idx]),
        ))
    return entries


def write_ground_truth(entries: Sequence[GroundTruthEntry],
                       path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(GROUND_TRUTH_COLUMNS)
        for e in entries:
            writer.writerow([
                e.dataset_a, e.attribute_a, e.dataset_b, e.attribute_b,
                repr(e.containment), repr(e.jaccard), repr(e.k), e.level,
                repr(e.q_relaxed), repr(e.q_balanced), repr(e.q_strict),
            ])


def read_ground_truth(path: Union[str, Path]) -> list[GroundTruthEntry]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ParseError(f"{path}: empty ground-truth file") from None
        if header != GROUND_TRUTH_COLUMNS:
            raise ParseError(f"{path}: unexpected ground-truth columns {header}")
        entries = []
        for record in reader:
            if len(record) != len(GROUND_TRUTH_COLUMNS):
                raise ParseError(f"{path}: ragged ground-truth record {record}")
            try:
                entries.append(GroundTruthEntry(
                    dataset_a=record[0], attribute_a=record[1],
                    dataset_b=record[2], attribute_b=record[3],
                    containment=float(record[4]), jaccard=float(record[5]),
                    k=float(record[6]), level=int(record[7]),
                    q_relaxed=float(record[8]), q_balanced=float(record[9]),
                    q_strict=float(record[10]),
                ))
            except ValueError as exc:
                raise ParseError(f"{path}: bad ground-truth record {record}: {exc}") from exc
    return entries


def vectors_and_labels(store: ProfileStore, entries: Sequence[GroundTruthEntry],
                       label: str = "q_balanced") -> tuple[np.ndarray, np.ndarray]:
    """Distance vectors and quality labels for ground-truth pairs in a store."""
    if not entries:
        raise ValueError("no ground-truth entries given")
    X = []
    y = []
    for e in entries:
        pa = store.get(e.dataset_a, e.attribute_a)
        pb = store.get(e.dataset_b, e.attribute_b)
        X.append(distance_vector(pa, pb, binary_features(pa, pb), store.stats))
        y.append(e.quality(label))
    return np.vstack(X), np.asarray(y, dtype=float)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate_threshold_classifier(
    entries: Sequence[GroundTruthEntry],
    metric: str,
    threshold: float,
    labels: Optional[Sequence[bool]] = None,
    strictness_column: str = "q_balanced",
) -> dict:
    """Precision, recall, F-score and accuracy of ``metric > threshold``.

    Labels default to the semantic rule, discrete level >= 3.  A ground
    truth with no positive labels leaves recall undefined and raises.
    """
    extractors = {
        "C": lambda e: e.containment,
        "J": lambda e: e.jaccard,
        "Q": lambda e: e.quality(strictness_column),
    }
    if metric not in extractors:
        raise ValueError(f"metric must be one of C, J, Q, got {metric!r}")
    if not entries:
        raise ValueError("no ground-truth entries given")
    if labels is None:
        labels = [e.level >= SEMANTIC_LEVEL for e in entries]
    elif len(labels) != len(entries):
        raise ValueError("labels and entries must have matching lengths")
    positives = sum(bool(l) for l in labels)
    if positives == 0:
        raise ValueError("recall is undefined: ground truth has no positive labels")
    tp = fp = tn = fn = 0
    extract = extractors[metric]
    for entry, label in zip(entries, labels):
        predicted = extract(entry) > threshold
        if predicted and label:
            tp += 1
        elif predicted:
            fp += 1
        elif label:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / positives
    f_score = (2 * precision * recall / (precision + recall)
               if precision + recall else 0.0)
    return {
        "precision": precision,
        "recall": recall,
        "f_score": f_score,
        "accuracy": (tp + tn) / len(entries),
    }


def ranking_metrics(ranking: Ranking,
                    relevant: set[tuple[str, str]]) -> dict:
    """Precision/recall measures of a ranking against a relevant-pair set.

    ``precision_at_k`` and ``recall_at_ground_truth`` use the full returned
    ranking (k = its length); ``recall_at_size_of_gt`` cuts the ranking at
    the size of the relevant set; ``precision_at_50`` looks at the top half
    (ceiling).  An empty ranking yields zeros with ``empty_ranking`` set.
    """
    if not relevant:
        raise ValueError("ranking metrics need a nonempty relevant set")
    ids = [(e.dataset_name, e.attribute_name) for e in ranking.entries]
    if not ids:
        return {
            "precision_at_k": 0.0,
            "recall_at_ground_truth": 0.0,
            "recall_at_size_of_gt": 0.0,
            "precision_at_50": 0.0,
            "empty_ranking": True,
        }
    hits = [1 if cid in relevant else 0 for cid in ids]
    k = len(ids)
    top_k_hits = sum(hits)
    gt_cut = min(len(relevant), k)
    half = math.ceil(k / 2)
    return {
        "precision_at_k": top_k_hits / k,
        "recall_at_ground_truth": top_k_hits / len(relevant),
        "recall_at_size_of_gt": sum(hits[:gt_cut]) / len(relevant),
        "precision_at_50": sum(hits[:half]) / half,
        "empty_ranking": False,
    }
