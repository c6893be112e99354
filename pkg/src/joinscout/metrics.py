"""Set-overlap metrics and join-quality scores for attribute pairs.

Two families of scores are provided.  The discrete score grades a pair on
a ladder of evenly spaced levels from joint thresholds on containment and
cardinality proportion.  The continuous score multiplies two truncated
normal CDFs, one over containment and one over cardinality proportion,
with a strictness offset shifting the containment curve.  The truncated
normal parameters can be refitted to a sample of observed values by a
brute-force grid search minimizing the Wasserstein distance between the
model CDF and the empirical CDF.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import numpy as np
from scipy.special import erf

from .exceptions import ClampedValueWarning, DegenerateFitWarning, ParseError
from .io import Column, preprocess_value

#: Offset added to the containment location parameter per strictness name.
STRICTNESS_OFFSETS = {"relaxed": 0.0, "balanced": 0.25, "strict": 0.5}

SCORE_KINDS = ("discrete_level", "continuous", "predicted")


# ---------------------------------------------------------------------------
# value sets and overlap metrics
# ---------------------------------------------------------------------------

def value_set(column: Column) -> frozenset[str]:
    """Distinct preprocessed non-missing values of a column."""
    cache: dict[str, Optional[str]] = {}
    out = set()
    for cell in column.cells:
        if cell is None:
            continue
        if cell not in cache:
            cache[cell] = preprocess_value(cell)
        value = cache[cell]
        if value is not None:
            out.add(value)
    return frozenset(out)


def containment(a: frozenset[str], b: frozenset[str]) -> float:
    """Fraction of the values of ``a`` that also occur in ``b``."""
    if not a:
        raise ValueError("containment is undefined for an empty left value set")
    return len(a & b) / len(a)


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """Intersection over union of two value sets."""
    union = len(a | b)
    if union == 0:
        raise ValueError("jaccard is undefined for two empty value sets")
    return len(a & b) / union


def cardinality_proportion(a: frozenset[str], b: frozenset[str]) -> float:
    """Smaller value-set size divided by the larger one."""
    if not a or not b:
        raise ValueError("cardinality proportion is undefined for an empty value set")
    return min(len(a), len(b)) / max(len(a), len(b))


# ---------------------------------------------------------------------------
# quality scores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QualityScore:
    """A join-quality value in [0, 1] tagged with how it was produced."""

    value: float
    kind: str
    level_count: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"score value {self.value} outside [0, 1]")


def discrete_level(c: float, k: float, level_count: int = 4) -> int:
    """Highest level ``j`` with ``c >= j/L`` and ``k >= 2**-(L-j)``, else 0.

    With ``level_count=4`` the levels 1..4 read as Low, Medium, Good and
    High; with ``level_count=2`` level >= 1 reduces to the binary rule
    ``c >= 1/2 and k >= 1/2``.
    """
    if level_count < 1:
        raise ValueError("level_count must be at least 1")
    for bound, name in ((c, "c"), (k, "k")):
        if not 0.0 <= bound <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {bound}")
    best = 0
    for j in range(1, level_count + 1):
        if c >= j / level_count and k >= 2.0 ** -(level_count - j):
            best = j
    return best


def discrete_quality(c: float, k: float, level_count: int = 4) -> QualityScore:
    """Discrete join quality: the reached level divided by the level count."""
    level = discrete_level(c, k, level_count)
    return QualityScore(value=level / level_count, kind="discrete_level",
                        level_count=level_count)


# ---------------------------------------------------------------------------
# truncated normal model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedParams:
    """Location and variance of the two truncated normal score factors."""

    mu_c: float = 0.0
    mu_k: float = 0.44
    var_c: float = 0.19
    var_k: float = 0.28
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self) -> None:
        if self.var_c <= 0 or self.var_k <= 0:
            raise ValueError("variances must be positive")
        if self.lower >= self.upper:
            raise ValueError("bounds must satisfy lower < upper")

    def to_dict(self) -> dict:
        return {
            "mu_c": self.mu_c,
            "mu_k": self.mu_k,
            "var_c": self.var_c,
            "var_k": self.var_k,
            "bounds": [self.lower, self.upper],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FittedParams":
        try:
            bounds = payload["bounds"]
            return cls(
                mu_c=float(payload["mu_c"]),
                mu_k=float(payload["mu_k"]),
                var_c=float(payload["var_c"]),
                var_k=float(payload["var_k"]),
                lower=float(bounds[0]),
                upper=float(bounds[1]),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"malformed parameter payload: {exc}") from exc


def save_params(params: FittedParams, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n",
                          encoding="utf-8")


def load_params(path: Union[str, Path]) -> FittedParams:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return FittedParams.from_dict(payload)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed parameter file ({exc})") from exc


def default_params_path() -> Path:
    return Path(str(resources.files(__package__).joinpath("default_params.json")))


@lru_cache(maxsize=None)
def _packaged_params() -> FittedParams:
    return load_params(default_params_path())


def load_default_params() -> FittedParams:
    """Packaged default parameters, overridable via ``JOINSCOUT_PARAMS``."""
    override = os.environ.get("JOINSCOUT_PARAMS")
    if override:
        return load_params(override)
    return _packaged_params()


def _standard_normal_cdf(z):
    return 0.5 * (1.0 + erf(z / np.sqrt(2.0)))


def truncated_normal_cdf(x, mu: float, var: float, lower: float = 0.0,
                         upper: float = 1.0):
    """CDF of a normal(mu, var) truncated to [lower, upper].

    Accepts a scalar or an array of evaluation points.  Points outside the
    truncation interval are clamped to the nearest bound and a
    :class:`ClampedValueWarning` is emitted.
    """
    if var <= 0:
        raise ValueError("var must be positive")
    if lower >= upper:
        raise ValueError("bounds must satisfy lower < upper")
    x = np.asarray(x, dtype=float)
    if np.any(x < lower) or np.any(x > upper):
        warnings.warn("evaluation point outside the truncation interval, clamping",
                      ClampedValueWarning, stacklevel=2)
        x = np.clip(x, lower, upper)
    sigma = np.sqrt(var)
    phi_a = _standard_normal_cdf((lower - mu) / sigma)
    phi_b = _standard_normal_cdf((upper - mu) / sigma)
    mass = phi_b - phi_a
    if mass <= 0.0:
        raise ValueError(
            "the truncation interval carries no probability mass for these parameters"
        )
    out = (_standard_normal_cdf((x - mu) / sigma) - phi_a) / mass
    if out.ndim == 0:
        return float(out)
    return out


def _strictness_offset(strictness: Union[str, float]) -> float:
    if isinstance(strictness, str):
        try:
            return STRICTNESS_OFFSETS[strictness]
        except KeyError:
            raise ValueError(f"unknown strictness {strictness!r}") from None
    return float(strictness)


def continuous_quality(c: float, k: float,
                       strictness: Union[str, float] = "balanced",
                       params: Optional[FittedParams] = None) -> QualityScore:
    """Continuous join quality in [0, 1].

    The product of the containment CDF, whose location is shifted right by
    the strictness offset, and the cardinality-proportion CDF.  Larger
    offsets demand more containment for the same score.
    """
    if params is None:
        params = load_default_params()
    offset = _strictness_offset(strictness)
    qc = truncated_normal_cdf(c, params.mu_c + offset, params.var_c,
                              params.lower, params.upper)
    qk = truncated_normal_cdf(k, params.mu_k, params.var_k,
                              params.lower, params.upper)
    return QualityScore(value=float(qc * qk), kind="continuous")


# ---------------------------------------------------------------------------
# distribution fitting
# ---------------------------------------------------------------------------

def empirical_cdf(samples: Iterable[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Step CDF of a sample: fraction of observations <= x."""
    ordered = np.sort(np.asarray(list(samples), dtype=float))
    if ordered.size == 0:
        raise ValueError("empirical CDF requires at least one sample")
    if not np.all(np.isfinite(ordered)):
        raise ValueError("samples must be finite")

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(ordered, x, side="right") / ordered.size
        if out.ndim == 0:
            return float(out)
        return out

    return cdf


def wasserstein_1d(f: Callable, g: Callable, lower: float = 0.0,
                   upper: float = 1.0, steps: int = 1000) -> float:
    """Order-1 Wasserstein distance between two CDFs on a bounded interval.

    Integrates ``|f(x) - g(x)|`` with the trapezoid rule on a regular grid
    of ``steps`` intervals.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    xs = np.linspace(lower, upper, steps + 1)
    return float(np.trapezoid(np.abs(np.asarray(f(xs)) - np.asarray(g(xs))), xs))


@dataclass(frozen=True)
class FitGrid:
    """Search grid for :func:`fit_distribution` (inclusive bounds)."""

    mu_start: float = -0.5
    mu_stop: float = 1.0
    mu_step: float = 0.01
    sigma_start: float = 0.05
    sigma_stop: float = 1.0
    sigma_step: float = 0.01

    def mus(self) -> np.ndarray:
        count = int(round((self.mu_stop - self.mu_start) / self.mu_step)) + 1
        return np.round(self.mu_start + self.mu_step * np.arange(count), 10)

    def sigmas(self) -> np.ndarray:
        count = int(round((self.sigma_stop - self.sigma_start) / self.sigma_step)) + 1
        return np.round(self.sigma_start + self.sigma_step * np.arange(count), 10)


@dataclass(frozen=True)
class FitResult:
    mu: float
    sigma: float
    distance: float
    degenerate: bool = False

    @property
    def var(self) -> float:
        return self.sigma ** 2


def fit_distribution(samples: Iterable[float], grid: FitGrid = FitGrid(),
                     lower: float = 0.0, upper: float = 1.0,
                     steps: int = 1000) -> FitResult:
    """Fit a truncated normal to samples by grid search on Wasserstein distance.

    Every (mu, sigma) pair on the grid is scored by the Wasserstein
    distance between its truncated normal CDF and the empirical CDF of the
    samples; the smallest distance wins, with ties broken toward the
    smallest mu and then the smallest sigma.  A fit whose sigma lands on
    the smallest grid value is flagged degenerate, as the data is more
    peaked than the grid can express.
    """
    ordered = np.sort(np.asarray(list(samples), dtype=float))
    if ordered.size < 10:
        raise ValueError("fitting requires at least 10 samples")
    if not np.all(np.isfinite(ordered)):
        raise ValueError("samples must be finite")
    xs = np.linspace(lower, upper, steps + 1)
    edf = np.searchsorted(ordered, xs, side="right") / ordered.size

    sigmas = grid.sigmas()
    best: Optional[tuple[float, float, float]] = None
    sqrt2 = np.sqrt(2.0)
    for mu in grid.mus():
        z = (xs[None, :] - mu) / sigmas[:, None]
        za = (lower - mu) / sigmas
        zb = (upper - mu) / sigmas
        phi = 0.5 * (1.0 + erf(z / sqrt2))
        phi_a = 0.5 * (1.0 + erf(za / sqrt2))
        phi_b = 0.5 * (1.0 + erf(zb / sqrt2))
        mass = phi_b - phi_a
        # A cell whose truncated mass underflows to zero defines no CDF.
        usable = mass > 0.0
        cdfs = np.full((sigmas.size, xs.size), np.inf)
        cdfs[usable] = (phi[usable] - phi_a[usable, None]) / mass[usable, None]
        distances = np.where(
            usable, np.trapezoid(np.abs(cdfs - edf[None, :]), xs, axis=1), np.inf
        )
        idx = int(np.argmin(distances))
        if np.isfinite(distances[idx]) and (best is None or distances[idx] < best[0]):
            best = (float(distances[idx]), float(mu), float(sigmas[idx]))
    assert best is not None
    distance, mu, sigma = best
    degenerate = sigma == float(sigmas[0])
    if degenerate:
        warnings.warn("fitted sigma sits on the smallest grid value",
                      DegenerateFitWarning, stacklevel=2)
    return FitResult(mu=mu, sigma=sigma, distance=distance, degenerate=degenerate)
