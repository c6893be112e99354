"""Command-line entry point wiring the library into reproducible workflows.

Every subcommand prints machine-parseable JSON on stdout and keeps
diagnostics on stderr.  Exit codes: 0 success, 1 partial or total I/O
failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .comparison import LAYOUT_VERSION
from .discovery import (
    ProfileStore,
    Ranking,
    RankedCandidate,
    discover_by_attribute,
    evaluate_threshold_classifier,
    generate_ground_truth,
    index_repository,
    load_pool,
    load_repository,
    ranking_metrics,
    read_ground_truth,
    vectors_and_labels,
    write_ground_truth,
)
from .exceptions import (
    IndexingError,
    JoinscoutError,
    LayoutMismatchError,
    ModelFormatError,
    ParseError,
    ProfilingError,
    TrainingDivergenceError,
    UnknownAttributeError,
)
from .io import string_columns
from .metrics import (
    FitGrid,
    QualityScore,
    STRICTNESS_OFFSETS,
    fit_distribution,
    load_default_params,
    load_params,
    save_params,
    FittedParams,
)
from .profiling import build_profile, save_profiles
from .regressor import (
    JoinQualityRegressor,
    load_model,
    load_training_corpus,
    save_model,
    save_training_corpus,
)

_IO_ERRORS = (ParseError, ProfilingError, IndexingError, ModelFormatError,
              LayoutMismatchError, TrainingDivergenceError, OSError)


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2))


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def _report_failures(failures) -> None:
    for source, message in failures:
        _diag(f"warning: {source}: {message}")


def _resolve_params(path: Optional[str]) -> FittedParams:
    if path:
        return load_params(path)
    return load_default_params()


def _resolve_query(raw: str, ids: Sequence[tuple[str, str]]):
    """Match 'dataset.attribute' against known ids; dots may appear in either."""
    if "." not in raw:
        raise ValueError(f"query {raw!r} must look like dataset.attribute")
    known = set(ids)
    matches = []
    position = raw.find(".")
    while position != -1:
        candidate = (raw[:position], raw[position + 1:])
        if candidate in known:
            matches.append(candidate)
        position = raw.find(".", position + 1)
    if len(matches) > 1:
        raise ValueError(f"query {raw!r} is ambiguous: matches {matches}")
    if not matches:
        raise UnknownAttributeError(f"query attribute {raw!r} is not in the store")
    return matches[0]


def _strictness_column(name: str) -> str:
    return {"relaxed": "q_relaxed", "balanced": "q_balanced", "strict": "q_strict"}[name]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_profile(args) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets, failures = load_repository(
        args.paths, delimiter=args.delimiter, has_header=not args.no_header,
        max_workers=args.threads,
    )
    written = []
    attribute_count = 0
    for dataset in datasets:
        profiles = []
        for col in string_columns(dataset, args.numeric_threshold):
            try:
                profiles.append(build_profile(col))
            except ProfilingError as exc:
                failures.append((f"{dataset.name}.{col.attribute_name}", str(exc)))
        if not profiles:
            failures.append((dataset.name, "no profilable string attributes"))
            continue
        path = out_dir / f"{dataset.name}.json"
        save_profiles(profiles, path, dataset_name=dataset.name)
        written.append(str(path))
        attribute_count += len(profiles)
    _report_failures(failures)
    _emit({
        "profiles_written": written,
        "datasets": len(written),
        "attributes": attribute_count,
        "failures": [{"source": s, "message": m} for s, m in failures],
    })
    if not written:
        return 1
    return 1 if failures else 0


def cmd_index(args) -> int:
    out_path = Path(args.output)
    base_version = 0
    if out_path.exists():
        try:
            base_version = ProfileStore.load(out_path).store_version
        except (ParseError, OSError):
            _diag(f"warning: existing {out_path} unreadable, restarting versions")
    store, failures = index_repository(
        args.paths, delimiter=args.delimiter, has_header=not args.no_header,
        numeric_exclusion_threshold=args.numeric_threshold,
        max_workers=args.threads, base_version=base_version,
    )
    store.save(out_path)
    _report_failures(failures)
    _emit({
        "store": str(out_path),
        "store_version": store.store_version,
        "layout_version": store.layout_version,
        "attributes": len(store.profiles),
        "failures": [{"source": s, "message": m} for s, m in failures],
    })
    return 1 if failures else 0


def cmd_discover(args) -> int:
    if args.k < 1:
        raise ValueError("-k must be a positive integer")
    store = ProfileStore.load(args.store)
    model = load_model(args.model)
    query = _resolve_query(args.query, store.attribute_ids())
    ranking = discover_by_attribute(store, model, query, args.k)
    payload = ranking.to_payload()
    if args.output:
        Path(args.output).write_text(json.dumps(payload, indent=2) + "\n",
                                     encoding="utf-8")
    _emit(payload)
    return 0


def cmd_ground_truth(args) -> int:
    datasets, failures = load_repository(
        args.paths, delimiter=args.delimiter, has_header=not args.no_header,
        max_workers=args.threads,
    )
    if not datasets:
        _report_failures(failures)
        _diag("error: all input files failed to load")
        return 1
    entries = generate_ground_truth(
        datasets, level_count=args.level_count,
        params=_resolve_params(args.params),
        numeric_exclusion_threshold=args.numeric_threshold,
    )
    write_ground_truth(entries, args.output)
    _report_failures(failures)
    _emit({
        "ground_truth": str(args.output),
        "datasets": len(datasets),
        "entries": len(entries),
        "failures": [{"source": s, "message": m} for s, m in failures],
    })
    return 1 if failures else 0


def cmd_fit_dist(args) -> int:
    entries = read_ground_truth(args.ground_truth)
    kept = [e for e in entries if e.level >= args.min_level]
    if len(kept) < 10:
        raise ValueError(
            f"need at least 10 entries with level >= {args.min_level}, got {len(kept)}"
        )
    grid = FitGrid()
    fit_c = fit_distribution([e.containment for e in kept], grid=grid, steps=args.steps)
    fit_k = fit_distribution([e.k for e in kept], grid=grid, steps=args.steps)
    params = FittedParams(mu_c=fit_c.mu, mu_k=fit_k.mu,
                          var_c=fit_c.var, var_k=fit_k.var)
    if args.output:
        save_params(params, args.output)
    _emit({
        "params": params.to_dict(),
        "entries_used": len(kept),
        "fit": {
            "c": {"mu": fit_c.mu, "sigma": fit_c.sigma,
                  "distance": fit_c.distance, "degenerate": fit_c.degenerate},
            "k": {"mu": fit_k.mu, "sigma": fit_k.sigma,
                  "distance": fit_k.distance, "degenerate": fit_k.degenerate},
        },
    })
    return 0


def cmd_train(args) -> int:
    if args.corpus:
        if args.ground_truth or args.pool:
            raise ValueError("--corpus replaces the ground-truth and pool arguments")
        X, y = load_training_corpus(args.corpus)
    else:
        if not (args.ground_truth and args.pool):
            raise ValueError("train needs a ground-truth file and a profile pool, "
                             "or --corpus")
        entries = read_ground_truth(args.ground_truth)
        store = load_pool(args.pool)
        X, y = vectors_and_labels(store, entries,
                                  label=_strictness_column(args.strictness))
    if args.corpus_out:
        save_training_corpus(X, y, args.corpus_out)
    model = JoinQualityRegressor(
        hidden_units=args.hidden_units, alpha=args.alpha,
        learning_rate=args.learning_rate, batch_size=args.batch_size,
        epochs=args.epochs, random_state=args.seed,
        layout_version=LAYOUT_VERSION,
    )
    model.fit(X, y)
    save_model(model, args.output)
    _emit({
        "model": str(args.output),
        "examples": int(X.shape[0]),
        "epochs": args.epochs,
        "final_train_mse": model.final_train_mse_,
    })
    return 0


def cmd_evaluate(args) -> int:
    entries = read_ground_truth(args.ground_truth)
    if args.mode == "threshold":
        if args.threshold is None:
            raise ValueError("--threshold is required in threshold mode")
        result = evaluate_threshold_classifier(
            entries, metric=args.metric, threshold=args.threshold,
            strictness_column=_strictness_column(args.strictness),
        )
        _emit({"mode": "threshold", "metric": args.metric,
               "threshold": args.threshold, **result})
        return 0
    if not args.ranking or not args.query:
        raise ValueError("--ranking and --query are required in ranking mode")
    query = _resolve_query(
        args.query, sorted({(e.dataset_a, e.attribute_a) for e in entries})
    )
    payload = json.loads(Path(args.ranking).read_text(encoding="utf-8"))
    if not isinstance(payload, list):
        raise ParseError(f"{args.ranking}: expected a JSON list ranking")
    try:
        ranked = tuple(
            RankedCandidate(
                dataset_name=item["dataset"], attribute_name=item["attribute"],
                score=QualityScore(value=float(item["score"]), kind="predicted"),
            )
            for item in payload
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{args.ranking}: malformed ranking entry ({exc})") from exc
    relevant = {
        (e.dataset_b, e.attribute_b)
        for e in entries
        if (e.dataset_a, e.attribute_a) == query and e.level >= args.semantic_level
    }
    result = ranking_metrics(Ranking(query=query, entries=ranked), relevant)
    _emit({"mode": "ranking",
           "query": {"dataset": query[0], "attribute": query[1]},
           "relevant": len(relevant), **result})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_load_flags(sub) -> None:
    sub.add_argument("--delimiter", default=",", help="field delimiter (default ,)")
    sub.add_argument("--no-header", action="store_true",
                     help="treat the first row as data, name columns col_0..col_N")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker pool size (default: available parallelism)")
    sub.add_argument("--numeric-threshold", type=float, default=0.5,
                     help="drop columns whose numeric-cell fraction reaches "
                          "this value (default 0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="joinscout",
        description="Discover joinable string attributes across tabular files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="write one profile JSON per dataset")
    p.add_argument("paths", nargs="+", help="delimited input files")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_load_flags(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("index", help="profile a repository into a store file")
    p.add_argument("paths", nargs="+", help="delimited input files")
    p.add_argument("-o", "--output", required=True, help="store file path")
    _add_load_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("discover", help="rank joinable candidates for a query")
    p.add_argument("--store", required=True, help="store file from 'index'")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--query", required=True, help="query as dataset.attribute")
    p.add_argument("-k", type=int, default=10, help="ranking size (default 10)")
    p.add_argument("-o", "--output", help="also write the ranking JSON here")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("ground-truth",
                       help="exact metrics for all cross-dataset string pairs")
    p.add_argument("paths", nargs="+", help="delimited input files")
    p.add_argument("-o", "--output", required=True, help="ground-truth CSV path")
    p.add_argument("--level-count", type=int, default=4,
                   help="discrete quality levels (default 4)")
    p.add_argument("--params", help="fitted-parameter JSON path "
                                    "(default: JOINSCOUT_PARAMS or packaged)")
    _add_load_flags(p)
    p.set_defaults(func=cmd_ground_truth)

    p = sub.add_parser("fit-dist",
                       help="fit truncated normal parameters to ground truth")
    p.add_argument("ground_truth", help="ground-truth CSV")
    p.add_argument("--min-level", type=int, default=1,
                   help="keep pairs with at least this discrete level (default 1)")
    p.add_argument("--steps", type=int, default=1000,
                   help="Wasserstein integration grid steps (default 1000)")
    p.add_argument("-o", "--output", help="write the fitted params JSON here")
    p.set_defaults(func=cmd_fit_dist)

    p = sub.add_parser("train", help="train the join-quality regressor")
    p.add_argument("ground_truth", nargs="?",
                   help="ground-truth CSV with quality labels")
    p.add_argument("pool", nargs="?",
                   help="store file or directory of profile documents")
    p.add_argument("--corpus", help="train from a JSONL corpus instead")
    p.add_argument("--corpus-out", help="dump the assembled JSONL corpus here")
    p.add_argument("-o", "--output", required=True, help="model file path")
    p.add_argument("--strictness", choices=sorted(STRICTNESS_OFFSETS),
                   default="balanced", help="label column (default balanced)")
    p.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden-units", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1e-4,
                   help="L2 penalty coefficient (default 1e-4)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="threshold or ranking evaluation")
    p.add_argument("ground_truth", help="ground-truth CSV")
    p.add_argument("--mode", choices=("threshold", "ranking"), default="threshold")
    p.add_argument("--metric", choices=("C", "J", "Q"), default="Q",
                   help="threshold mode: metric column (default Q)")
    p.add_argument("--threshold", type=float, help="threshold mode: cut point")
    p.add_argument("--strictness", choices=sorted(STRICTNESS_OFFSETS),
                   default="balanced", help="Q column for threshold mode")
    p.add_argument("--ranking", help="ranking mode: ranking JSON from 'discover'")
    p.add_argument("--query", help="ranking mode: query as dataset.attribute")
    p.add_argument("--semantic-level", type=int, default=3,
                   help="minimum level counted as semantically joinable (default 3)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UnknownAttributeError, ValueError) as exc:
        _diag(f"error: {exc}")
        return 2
    except _IO_ERRORS as exc:
        _diag(f"error: {exc}")
        return 1
    except JoinscoutError as exc:
        _diag(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
