"""
Monte-Carlo estimation of the error metrics.

Samples are grouped in chunks of CHUNK_SIZE. In chunk c the multiplier is drawn
from the Philox stream keyed by the seed with counter (0, c, LANE_A, 0) and the
multiplicand from counter (0, c, LANE_B, 0). Each lane is read in sample order,
so the operands of sample k depend only on (seed, k): a longer run extends a
shorter one and any number of workers reproduces the same report.
"""

from dataclasses import dataclass, field
import logging
import math
from statistics import NormalDist
import time
from typing import Any, Dict, Optional, Tuple

import numpy as np

from . import analytic
from .core import MultiplierConfig, Operand
from .distribution import InputDistribution
from .errors import ConfigError, RegimeError, WidthMismatchError
from .metrics import ErrorReport, MetricAccumulator, Method, evaluate_lanes, map_ordered, shards

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 2 ** 20
MAX_SAMPLES = 2 ** 32
CHUNK_BITS = 16
CHUNK_SIZE = 1 << CHUNK_BITS
DEFAULT_CONFIDENCE = 0.95
LANE_A = 0
LANE_B = 1


@dataclass(frozen=True)
class SamplingPlan:
    """
    How many operand pairs to draw, and from what.

    Attributes:
        sample_count: Number of (a, b) pairs, 1 <= sample_count <= 2^32
        seed: Non-negative stream key
        dist_a: Multiplier distribution (uniform when None)
        dist_b: Multiplicand distribution (uniform when None)
        confidence_level: Coverage of the reported intervals
    """
    sample_count: int = DEFAULT_SAMPLES
    seed: int = 0
    dist_a: Optional[InputDistribution] = None
    dist_b: Optional[InputDistribution] = None
    confidence_level: float = DEFAULT_CONFIDENCE

    def __post_init__(self):
        if not 1 <= self.sample_count <= MAX_SAMPLES:
            raise ConfigError(f"sample_count={self.sample_count} outside [1, {MAX_SAMPLES}]")
        if self.seed < 0:
            raise ConfigError(f"seed={self.seed} must be non-negative")
        if not 0.0 < self.confidence_level < 1.0:
            raise ConfigError(f"confidence_level={self.confidence_level} outside (0, 1)")

    @property
    def z(self) -> float:
        """Two-sided standard-normal quantile of the confidence level."""
        return NormalDist().inv_cdf(0.5 + self.confidence_level / 2.0)


@dataclass(frozen=True)
class IntervalBounds:
    """Confidence interval of one metric; method is "wilson" or "normal"."""
    lower: float
    upper: float
    method: str

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> Dict[str, Any]:
        return {"lower": self.lower, "upper": self.upper, "method": self.method}


@dataclass(frozen=True)
class MonteCarloResult:
    """
    Monte-Carlo ErrorReport with its uncertainty.

    Attributes:
        report: Estimated metrics (method MONTE_CARLO)
        intervals: Confidence interval per metric name
        standard_errors: Standard error per metric name
        sample_max_abs_ed: Largest |ED| among the samples
        sample_max_pair: Operand pair that produced it
    """
    report: ErrorReport
    intervals: Dict[str, IntervalBounds] = field(default_factory=dict)
    standard_errors: Dict[str, float] = field(default_factory=dict)
    sample_max_abs_ed: int = 0
    sample_max_pair: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "report": self.report.to_dict(),
            "intervals": {k: v.to_dict() for k, v in self.intervals.items()},
            "standard_errors": dict(self.standard_errors),
            "sample_max_abs_ed": self.sample_max_abs_ed,
            "sample_max_pair": list(self.sample_max_pair) if self.sample_max_pair else None,
        }


# ── Streams and sampling ────────────────────────────────────────────────────

def chunk_generator(seed: int, chunk: int, lane: int = LANE_A) -> np.random.Generator:
    """Random generator owning one operand lane of chunk `chunk` under `seed`."""
    # draws advance word 0; chunk and lane sit in words 1 and 2
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, chunk, lane, 0]))


def sample_values(dist: InputDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    Draw `size` operand values as datapath lanes.

    Uniform operands take the top `width` bits of raw 64-bit words; explicit
    distributions use inverse-CDF lookup.
    """
    n = dist.width
    if dist.is_uniform:
        raw = rng.bit_generator.random_raw(size) >> np.uint64(64 - n)
        if n <= 31:
            return raw.astype(np.int64)
        return raw.astype(object)
    u = rng.random(size)
    idx = np.searchsorted(dist.cdf(), u, side="right")
    return np.minimum(idx, (1 << n) - 1).astype(np.int64)


def sample_operand(dist: InputDistribution, rng: np.random.Generator) -> Operand:
    """Draw one operand from dist."""
    return Operand(int(sample_values(dist, rng, 1)[0]), dist.width)


@dataclass(frozen=True)
class ChiSquare:
    """Pearson goodness-of-fit statistic against the uniform distribution."""
    statistic: float
    dof: int

    def critical(self, alpha: float = 0.01) -> float:
        """Upper alpha quantile of chi-square(dof), Wilson-Hilferty approximation."""
        z = NormalDist().inv_cdf(1.0 - alpha)
        k = self.dof
        return k * (1.0 - 2.0 / (9.0 * k) + z * math.sqrt(2.0 / (9.0 * k))) ** 3

    def passes(self, alpha: float = 0.01) -> bool:
        return self.statistic <= self.critical(alpha)


def chi_square_uniformity(values: np.ndarray, n: int) -> ChiSquare:
    """Chi-square statistic of n-bit values against the uniform distribution."""
    values = np.asarray(values, dtype=np.int64)
    bins = 1 << n
    observed = np.bincount(values, minlength=bins).astype(np.float64)
    expected = len(values) / bins
    return ChiSquare(float(np.sum((observed - expected) ** 2) / expected), bins - 1)


# ── Intervals ───────────────────────────────────────────────────────────────

def wilson_interval(successes: float, trials: int, z: float) -> IntervalBounds:
    """Wilson score interval of a proportion."""
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return IntervalBounds(max(0.0, centre - half), min(1.0, centre + half), "wilson")


def _mean_stats(total: float, sq_total: float, count: int, z: float) -> Tuple[IntervalBounds, float]:
    mean = total / count
    var = max(0.0, sq_total / count - mean * mean)
    if count > 1:
        var *= count / (count - 1)
    se = math.sqrt(var / count)
    return IntervalBounds(mean - z * se, mean + z * se, "normal"), se


def _intervals(acc: MetricAccumulator, z: float) -> Tuple[Dict[str, IntervalBounds], Dict[str, float]]:
    count = acc.count
    intervals: Dict[str, IntervalBounds] = {}
    errors: Dict[str, float] = {}

    def proportion(name: str, hits: int) -> None:
        p = hits / count
        intervals[name] = wilson_interval(hits, count, z)
        errors[name] = math.sqrt(p * (1.0 - p) / count)

    proportion("er", acc.errors)
    for r, hits in enumerate(acc.bit_errors):
        proportion(f"ber_{r}", hits)

    intervals["med_signed"], errors["med_signed"] = _mean_stats(
        float(acc.ed_sum), acc.ed_sq_sum, count, z)
    intervals["med_abs"], errors["med_abs"] = _mean_stats(
        float(acc.abs_sum), acc.abs_sq_sum, count, z)
    intervals["mred_conventional"], errors["mred_conventional"] = _mean_stats(
        acc.rel_sum, acc.rel_sq_sum, count, z)

    denom = float(((1 << acc.n) - 1) ** 2)
    med = intervals["med_abs"]
    for name in ("nmed", "mred_global"):
        intervals[name] = IntervalBounds(med.lower / denom, med.upper / denom, "normal")
        errors[name] = errors["med_abs"] / denom
    return intervals, errors


# ── Estimation ──────────────────────────────────────────────────────────────

def _check_distribution(dist: Optional[InputDistribution], n: int) -> InputDistribution:
    if dist is None:
        return InputDistribution.uniform(n)
    if dist.width != n:
        raise WidthMismatchError(f"distribution width {dist.width} != n={n}")
    return dist


def reported_mae(cfg: MultiplierConfig, sample_max: int) -> int:
    """
    MAE to report for a sampled configuration.

    The closed form where it applies, zero for the unsegmented chain, the
    sample maximum otherwise.
    """
    if not cfg.segmented:
        return 0
    if cfg.fix_to_1:
        try:
            closed = analytic.mae_closed_form(cfg)
        except RegimeError:
            pass
        else:
            if sample_max > closed:
                logger.warning("%s: sample max |ED|=%d exceeds closed-form MAE %d",
                               cfg.label, sample_max, closed)
            else:
                logger.info("%s: sample max |ED|=%d, closed-form MAE %d",
                            cfg.label, sample_max, closed)
            return closed
    logger.warning("%s: no closed-form MAE, reporting the sample maximum %d",
                   cfg.label, sample_max)
    return sample_max


def report_monte_carlo(
    cfg: MultiplierConfig,
    plan: SamplingPlan,
    workers: int = 1,
) -> MonteCarloResult:
    """
    Estimate every metric from plan.sample_count sampled operand pairs.

    Returns the report together with Wilson intervals for ER and BER and
    normal intervals for the mean metrics.
    """
    n = cfg.n
    dist_a = _check_distribution(plan.dist_a, n)
    dist_b = _check_distribution(plan.dist_b, n)
    plan_chunks = shards(plan.sample_count, CHUNK_BITS)

    def one(chunk: Tuple[int, int]) -> MetricAccumulator:
        start, stop = chunk
        chunk_index = start >> CHUNK_BITS
        a = sample_values(dist_a, chunk_generator(plan.seed, chunk_index, LANE_A), stop - start)
        b = sample_values(dist_b, chunk_generator(plan.seed, chunk_index, LANE_B), stop - start)
        exact, approx = evaluate_lanes(cfg, a, b)
        acc = MetricAccumulator(n=n)
        acc.add(a, b, exact, approx, keys=np.arange(start, stop, dtype=np.int64))
        return acc

    logger.info("monte-carlo %s: %d samples in %d chunks, seed %d, %d workers",
                cfg.label, plan.sample_count, len(plan_chunks), plan.seed, workers)
    started = time.perf_counter()
    parts = map_ordered(one, plan_chunks, workers)
    acc = parts[0]
    for part in parts[1:]:
        acc = acc.merge(part)
    logger.info("monte-carlo %s finished in %.2fs", cfg.label, time.perf_counter() - started)

    mae = reported_mae(cfg, acc.max_abs)
    report = acc.to_report(cfg, Method.MONTE_CARLO, seed=plan.seed, mae=mae)
    intervals, errors = _intervals(acc, plan.z)
    return MonteCarloResult(
        report=report,
        intervals=intervals,
        standard_errors=errors,
        sample_max_abs_ed=acc.max_abs,
        sample_max_pair=acc.witness if acc.max_abs else None,
    )
