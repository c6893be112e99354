"""Acceptance gate: nine end-to-end behavioral criteria.

Each criterion prints exactly one pass/fail line carrying the measured
numbers (written through the capture, so it is always visible), then
asserts its stated tolerances.  Criteria 5, 7 and 8 share one synthetic
repository, ground truth and trained model, built once per module by the
``corpus`` fixture; see ``tests/synth.py`` for the planted structure.
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from joinscout import (
    FittedParams,
    JoinQualityRegressor,
    build_profile,
    continuous_quality,
    discover_by_attribute,
    discrete_quality,
    evaluate_regression,
    evaluate_threshold_classifier,
    fit_distribution,
    generate_ground_truth,
    index_repository,
    load_dataset,
    load_repository,
    ranking_metrics,
    string_columns,
    truncated_normal_cdf,
    vectors_and_labels,
)
from joinscout.regressor import init_weights, loss_and_gradients

from tests.synth import build_repository


def _report(capsys, number: int, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"[criterion {number}] {'PASS' if ok else 'FAIL'} {name}: {detail}")


# ---------------------------------------------------------------------------
# shared synthetic corpus (criteria 5, 7 and 8)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Synthetic repository, exact ground truth and one trained model.

    The training corpus is balanced: every pair with a nonzero balanced
    quality label plus an equal-sized sample of zero-quality pairs, split
    80/20 after a seeded shuffle.
    """
    root = tmp_path_factory.mktemp("synth_corpus")
    repo = build_repository(root, seed=7)
    paths = [str(p) for p in repo.paths]
    datasets, load_failures = load_repository(paths)
    assert not load_failures
    store, index_failures = index_repository(paths)
    assert not index_failures
    entries = generate_ground_truth(datasets)

    rng = np.random.default_rng(11)
    labels = np.array([e.q_balanced for e in entries])
    nonzero = np.flatnonzero(labels > 0)
    zeros = rng.choice(np.flatnonzero(labels == 0), size=nonzero.size,
                       replace=False)
    chosen = np.concatenate([nonzero, zeros])
    rng.shuffle(chosen)
    subset = [entries[i] for i in chosen]
    X, y = vectors_and_labels(store, subset, label="q_balanced")
    n_train = int(0.8 * len(subset))

    start = time.perf_counter()
    model = JoinQualityRegressor(epochs=300, random_state=0)
    model.fit(X[:n_train], y[:n_train])
    train_seconds = time.perf_counter() - start

    return {
        "repo": repo,
        "store": store,
        "entries": entries,
        "model": model,
        "train_seconds": train_seconds,
        "X_test": X[n_train:],
        "y_test": y[n_train:],
        "n_examples": len(subset),
    }


# ---------------------------------------------------------------------------
# criterion 1: toy-table oracle
# ---------------------------------------------------------------------------

def test_criterion_1_toy_table_oracle(toy_datasets, capsys):
    start = time.perf_counter()
    entries = generate_ground_truth(toy_datasets)
    by_id = {(e.dataset_a, e.attribute_a, e.dataset_b, e.attribute_b): e
             for e in entries}
    country_x = by_id[("happiness", "Country", "population", "X")]
    schengen = by_id[("happiness", "Schengen", "stores", "Discount")]
    elapsed = time.perf_counter() - start

    ok = (country_x.containment == 0.75 and country_x.jaccard == 0.6
          and country_x.k == 1.0 and schengen.containment == 1.0
          and elapsed < 1.0)
    _report(capsys, 1, "toy-table oracle", ok,
            f"C={country_x.containment} J={country_x.jaccard} "
            f"K={country_x.k} C(Schengen,Discount)={schengen.containment} "
            f"elapsed={elapsed:.3f}s")
    assert country_x.containment == 0.75
    assert country_x.jaccard == 0.6
    assert country_x.k == 1.0
    assert schengen.containment == 1.0
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# criterion 2: discrete ranking reproduction
# ---------------------------------------------------------------------------

def test_criterion_2_ranking_reproduction(capsys):
    start = time.perf_counter()
    lower_c = discrete_quality(0.8, 0.40, 4).value
    higher_c = discrete_quality(0.95, 0.15, 4).value
    elapsed = time.perf_counter() - start

    ok = lower_c == 0.5 and higher_c == 0.25 and lower_c > higher_c and elapsed < 1.0
    _report(capsys, 2, "ranking reproduction", ok,
            f"quality(0.8,0.40)={lower_c} > quality(0.95,0.15)={higher_c} "
            f"elapsed={elapsed:.3f}s")
    assert lower_c == 0.5
    assert higher_c == 0.25
    assert lower_c > higher_c
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# criterion 3: continuous-metric property suite
# ---------------------------------------------------------------------------

def _quadrature_cdf(x: float, mu: float, sigma: float) -> float:
    def pdf(t):
        return math.exp(-0.5 * ((t - mu) / sigma) ** 2)

    total, _ = integrate.quad(pdf, 0.0, 1.0, epsabs=1e-14, limit=200)
    part, _ = integrate.quad(pdf, 0.0, x, epsabs=1e-14, limit=200)
    return part / total


def test_criterion_3_continuous_properties(capsys):
    start = time.perf_counter()
    params = FittedParams()
    cs = np.linspace(0.0, 1.0, 100)
    ks = np.linspace(0.0, 1.0, 100)
    offsets = {"relaxed": 0.0, "balanced": 0.25, "strict": 0.5}
    grid = np.empty((3, cs.size, ks.size))
    for si, offset in enumerate(offsets.values()):
        qc = truncated_normal_cdf(cs, params.mu_c + offset, params.var_c)
        qk = truncated_normal_cdf(ks, params.mu_k, params.var_k)
        grid[si] = qc[:, None] * qk[None, :]

    in_range = bool(np.all(grid >= 0.0) and np.all(grid <= 1.0))
    zero_floor = bool(np.all(grid[:, 0, :] == 0.0))
    one_ceiling = bool(np.all(grid[:, -1, -1] == 1.0))
    monotone_c = bool(np.all(np.diff(grid, axis=1) >= -1e-12))
    monotone_k = bool(np.all(np.diff(grid, axis=2) >= -1e-12))
    strictness_down = bool(np.all(np.diff(grid, axis=0) <= 1e-12))

    # the grid must be the quality function itself, not a lookalike
    rng = np.random.default_rng(0)
    consistent = True
    for _ in range(300):
        si = int(rng.integers(3))
        ci = int(rng.integers(cs.size))
        ki = int(rng.integers(ks.size))
        name = list(offsets)[si]
        score = continuous_quality(cs[ci], ks[ki], name, params=params).value
        consistent &= abs(score - grid[si, ci, ki]) <= 1e-12

    max_err = 0.0
    for _ in range(1000):
        x = float(rng.uniform(0.0, 1.0))
        mu = float(rng.uniform(-0.5, 1.0))
        sigma = float(rng.uniform(0.05, 1.0))
        got = float(truncated_normal_cdf(x, mu, sigma ** 2))
        max_err = max(max_err, abs(got - _quadrature_cdf(x, mu, sigma)))
    elapsed = time.perf_counter() - start

    ok = (in_range and zero_floor and one_ceiling and monotone_c
          and monotone_k and strictness_down and consistent
          and max_err <= 1e-9 and elapsed < 10.0)
    _report(capsys, 3, "continuous-metric properties", ok,
            f"range={in_range} Q(0,.)=0:{zero_floor} Q(1,1)=1:{one_ceiling} "
            f"monotone(C,K)=({monotone_c},{monotone_k}) "
            f"strictness-nonincreasing={strictness_down} "
            f"cdf-oracle-max-err={max_err:.2e} elapsed={elapsed:.2f}s")
    assert in_range and zero_floor and one_ceiling
    assert monotone_c and monotone_k and strictness_down
    assert consistent
    assert max_err <= 1e-9
    assert elapsed < 10.0


# ---------------------------------------------------------------------------
# criterion 4: fit recovery
# ---------------------------------------------------------------------------

def test_criterion_4_fit_recovery(capsys):
    start = time.perf_counter()
    params = FittedParams()
    errors = {}
    for name, mu, var in (("c", params.mu_c, params.var_c),
                          ("k", params.mu_k, params.var_k)):
        sigma = math.sqrt(var)
        a, b = (0.0 - mu) / sigma, (1.0 - mu) / sigma
        samples = stats.truncnorm.rvs(a, b, loc=mu, scale=sigma, size=100_000,
                                      random_state=np.random.default_rng(42))
        fit = fit_distribution(samples)
        errors[name] = (abs(fit.mu - mu), abs(fit.sigma - sigma))
    elapsed = time.perf_counter() - start

    worst = max(err for pair in errors.values() for err in pair)
    ok = worst <= 0.02 and elapsed < 60.0
    _report(capsys, 4, "fit recovery", ok,
            f"|dmu_c|={errors['c'][0]:.4f} |dsigma_c|={errors['c'][1]:.4f} "
            f"|dmu_k|={errors['k'][0]:.4f} |dsigma_k|={errors['k'][1]:.4f} "
            f"elapsed={elapsed:.1f}s")
    for dmu, dsigma in errors.values():
        assert dmu <= 0.02
        assert dsigma <= 0.02
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# criterion 5: predictor quality on the synthetic corpus
# ---------------------------------------------------------------------------

def test_criterion_5_predictor_quality(corpus, capsys):
    scores = evaluate_regression(corpus["model"], corpus["X_test"],
                                 corpus["y_test"])
    n_datasets = corpus["repo"].n_datasets
    train_seconds = corpus["train_seconds"]

    ok = (n_datasets >= 60 and scores["r2"] >= 0.7
          and scores["spearman"] >= 0.8 and scores["mse"] <= 0.05
          and train_seconds <= 300.0)
    _report(capsys, 5, "predictor quality", ok,
            f"datasets={n_datasets} examples={corpus['n_examples']} "
            f"r2={scores['r2']:.3f} spearman={scores['spearman']:.3f} "
            f"mse={scores['mse']:.4f} train={train_seconds:.1f}s")
    assert n_datasets >= 60
    assert scores["r2"] >= 0.7
    assert scores["spearman"] >= 0.8
    assert scores["mse"] <= 0.05
    assert train_seconds <= 300.0


# ---------------------------------------------------------------------------
# criterion 6: gradient correctness
# ---------------------------------------------------------------------------

def test_criterion_6_gradient_correctness(capsys):
    start = time.perf_counter()
    step = 1e-6
    worst_ratio = 0.0   # against 1e-4 relative with a 1e-7 absolute floor
    worst_rel = 0.0     # among coordinates of meaningful magnitude
    for trial in range(20):
        rng = np.random.default_rng(100 + trial)
        n_features = int(rng.integers(2, 9))
        hidden = int(rng.integers(3, 13))
        n_rows = int(rng.integers(5, 21))
        alpha = float(rng.uniform(0.0, 0.05))
        weights = init_weights(n_features, hidden, rng)
        weights["b1"] = rng.normal(0.0, 0.3, size=hidden)
        weights["b2"] = rng.normal(0.0, 0.3, size=1)
        # keep every pre-activation clear of the relu kink: the analytic
        # gradient is one-sided there and central differences straddle it
        while True:
            X = rng.normal(0.0, 1.0, size=(n_rows, n_features))
            pre_hidden = X @ weights["w1"] + weights["b1"]
            if np.min(np.abs(pre_hidden)) > 1e-4:
                break
        y = rng.uniform(0.0, 1.0, size=n_rows)
        _, grads = loss_and_gradients(weights, X, y, alpha)
        for key, matrix in weights.items():
            it = np.nditer(matrix, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = matrix[idx]
                matrix[idx] = original + step
                up, _ = loss_and_gradients(weights, X, y, alpha)
                matrix[idx] = original - step
                down, _ = loss_and_gradients(weights, X, y, alpha)
                matrix[idx] = original
                finite_diff = (up - down) / (2.0 * step)
                analytic = grads[key][idx]
                error = abs(analytic - finite_diff)
                magnitude = max(abs(analytic), abs(finite_diff))
                worst_ratio = max(worst_ratio,
                                  error / max(1e-4 * magnitude, 1e-7))
                if magnitude > 1e-3:
                    worst_rel = max(worst_rel, error / magnitude)
    elapsed = time.perf_counter() - start

    ok = worst_ratio <= 1.0 and worst_rel <= 1e-4 and elapsed < 10.0
    _report(capsys, 6, "gradient correctness", ok,
            f"networks=20 worst-rel-err={worst_rel:.2e} "
            f"worst-tolerance-ratio={worst_ratio:.3f} elapsed={elapsed:.1f}s")
    assert worst_ratio <= 1.0
    assert worst_rel <= 1e-4
    assert elapsed < 10.0


# ---------------------------------------------------------------------------
# criterion 7: threshold-study direction
# ---------------------------------------------------------------------------

def _best_f_score(values: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    best, best_threshold = -1.0, 0.0
    for threshold in np.unique(np.concatenate([[0.0], values])):
        predicted = values > threshold
        tp = int(np.sum(predicted & labels))
        if tp == 0:
            continue
        fp = int(np.sum(predicted & ~labels))
        fn = int(np.sum(~predicted & labels))
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        f_score = 2.0 * precision * recall / (precision + recall)
        if f_score > best:
            best, best_threshold = f_score, float(threshold)
    return best, best_threshold


def test_criterion_7_threshold_study_direction(corpus, capsys):
    entries = corpus["entries"]
    labels = np.array([e.level >= 3 for e in entries])
    sweeps = {
        "C": _best_f_score(np.array([e.containment for e in entries]), labels),
        "J": _best_f_score(np.array([e.jaccard for e in entries]), labels),
        "Q": _best_f_score(np.array([e.q_balanced for e in entries]), labels),
    }
    # the sweep must agree with the library classifier at its optimum
    for metric, (best_f, best_threshold) in sweeps.items():
        reported = evaluate_threshold_classifier(entries, metric, best_threshold)
        assert abs(reported["f_score"] - best_f) <= 1e-12

    f_c, f_j, f_q = sweeps["C"][0], sweeps["J"][0], sweeps["Q"][0]
    ok = f_q > f_c and f_q > f_j
    _report(capsys, 7, "threshold-study direction", ok,
            f"best-F: Q={f_q:.4f} C={f_c:.4f} J={f_j:.4f} "
            f"(pairs={len(entries)}, positives={int(labels.sum())})")
    assert f_q > f_c
    assert f_q > f_j


# ---------------------------------------------------------------------------
# criterion 8: top-k discovery
# ---------------------------------------------------------------------------

def test_criterion_8_topk_discovery(corpus, capsys):
    repo = corpus["repo"]
    relevant: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for e in corpus["entries"]:
        if e.level >= 3:
            relevant.setdefault((e.dataset_a, e.attribute_a), set()).add(
                (e.dataset_b, e.attribute_b))
    for query in repo.queries:
        assert relevant.get(query) == repo.planted_partners[query]
        assert len(repo.planted_partners[query]) == 10

    start = time.perf_counter()
    precisions = []
    for query in repo.queries:
        ranking = discover_by_attribute(corpus["store"], corpus["model"],
                                        query, k=5)
        measured = ranking_metrics(ranking, repo.planted_partners[query])
        precisions.append(measured["precision_at_k"])
    elapsed = time.perf_counter() - start
    mean_p5 = float(np.mean(precisions))

    ok = mean_p5 >= 0.8 and len(precisions) == 20 and elapsed < 30.0
    _report(capsys, 8, "top-k discovery", ok,
            f"mean P@5={mean_p5:.3f} over {len(precisions)} queries "
            f"(10 true partners each) elapsed={elapsed:.1f}s")
    assert len(precisions) == 20
    assert mean_p5 >= 0.8
    assert elapsed < 30.0


# ---------------------------------------------------------------------------
# criterion 9: profiling scalability
# ---------------------------------------------------------------------------

_SCALE_SYLLABLES = ("ba", "re", "mo", "ta", "li", "sun",
                    "ver", "kol", "dra", "fen", "gu", "sha")


def _write_scaling_file(path: Path, n_rows: int, n_cols: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    vocabularies = []
    for col in range(n_cols):
        words = {
            f"{''.join(rng.choice(_SCALE_SYLLABLES, 2))} "
            f"{''.join(rng.choice(_SCALE_SYLLABLES, 2))}{col}x{i}"
            for i in range(1500)
        }
        vocabularies.append(sorted(words))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"col_{c}" for c in range(n_cols)])
        picks = [rng.integers(0, len(vocabularies[c]), size=n_rows)
                 for c in range(n_cols)]
        for row in range(n_rows):
            writer.writerow([vocabularies[c][picks[c][row]]
                             for c in range(n_cols)])
    return path.stat().st_size / 1e6


def _profile_seconds(path: Path, repeats: int = 2) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        dataset = load_dataset(path)
        for column in string_columns(dataset):
            build_profile(column)
        best = min(best, time.perf_counter() - start)
    return best


def test_criterion_9_profiling_scalability(tmp_path, capsys):
    base_mb = _write_scaling_file(tmp_path / "base.csv", 105_000, 6, seed=1)
    rows_mb = _write_scaling_file(tmp_path / "rows4.csv", 420_000, 6, seed=2)
    wide_mb = _write_scaling_file(tmp_path / "wide2.csv", 105_000, 12, seed=3)

    _write_scaling_file(tmp_path / "warmup.csv", 2_000, 3, seed=4)
    _profile_seconds(tmp_path / "warmup.csv", repeats=1)

    base_s = _profile_seconds(tmp_path / "base.csv")
    rows_s = _profile_seconds(tmp_path / "rows4.csv")
    wide_s = _profile_seconds(tmp_path / "wide2.csv")
    rows_ratio = rows_s / base_s
    cols_ratio = wide_s / base_s

    ok = base_mb >= 10.0 and rows_ratio <= 5.0 and cols_ratio <= 2.5
    _report(capsys, 9, "profiling scalability", ok,
            f"base {base_mb:.1f}MB/{base_s:.2f}s, 4x-rows {rows_mb:.1f}MB/"
            f"{rows_s:.2f}s (x{rows_ratio:.2f} <= 5), 2x-cols {wide_mb:.1f}MB/"
            f"{wide_s:.2f}s (x{cols_ratio:.2f} <= 2.5)")
    assert base_mb >= 10.0
    assert rows_ratio <= 5.0
    assert cols_ratio <= 2.5
