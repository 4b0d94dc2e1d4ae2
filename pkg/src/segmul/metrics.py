"""
Error metrics of the approximate multiplier.

Exhaustive evaluation walks all 2^(2n) operand pairs in fixed-size shards of
2^SHARD_BITS pairs. Each shard is pushed through the datapath as numpy lanes
and folded into a MetricAccumulator; accumulators merge in shard order, so a
report does not depend on how many workers evaluated the shards.

Under uniform inputs every count is an integer and every mean is one exact
integer division, which makes reports bit-identical across runs.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import json
import logging
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from . import datapath
from .core import MultiplierConfig, Product
from .distribution import InputDistribution
from .errors import CeilingError, ConfigError, WidthMismatchError

logger = logging.getLogger(__name__)

DEFAULT_EXHAUSTIVE_CEILING = 14
MAX_EXHAUSTIVE_CEILING = 16
SHARD_BITS = 20

# Lane sums stay inside int64 up to this width.
INT64_SUM_WIDTH = 16

T = TypeVar("T")
R = TypeVar("R")


class Method(Enum):
    """How an ErrorReport was obtained."""
    EXHAUSTIVE = "exhaustive"
    MONTE_CARLO = "monte_carlo"
    ESTIMATE = "estimate"


@dataclass(frozen=True)
class ErrorReport:
    """
    Error metrics of one configuration.

    Attributes:
        config: Evaluated multiplier configuration
        method: Exhaustive enumeration, Monte-Carlo sampling or estimation
        er: Probability of a wrong product
        ber: Per product bit r, probability that bit r is wrong
        mae: Maximum |ED|
        med_signed: Mean signed error distance
        med_abs: Mean absolute error distance
        nmed: med_abs normalised by (2^n - 1)^2
        mred_conventional: Mean of |ED| / max(1, exact product)
        mred_global: Mean |ED| over the global denominator (2^n - 1)^2
        sample_count: Evaluated pairs (2^(2n) when exhaustive)
        seed: Sampling seed (Monte-Carlo only)

    Estimates leave the metrics they cannot produce as None.
    """
    config: MultiplierConfig
    method: Method
    er: float
    ber: Tuple[float, ...] = ()
    mae: Optional[int] = None
    med_signed: Optional[float] = None
    med_abs: Optional[float] = None
    nmed: Optional[float] = None
    mred_conventional: Optional[float] = None
    mred_global: Optional[float] = None
    sample_count: int = 0
    seed: Optional[int] = None

    def metric_items(self) -> List[Tuple[str, Any]]:
        """(name, value) pairs in report order, skipping absent metrics."""
        items: List[Tuple[str, Any]] = [("er", self.er)]
        items.extend((f"ber_{r}", v) for r, v in enumerate(self.ber))
        for name in ("mae", "med_signed", "med_abs", "nmed",
                     "mred_conventional", "mred_global"):
            value = getattr(self, name)
            if value is not None:
                items.append((name, value))
        return items

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "method": self.method.value,
            "er": self.er,
            "ber": list(self.ber),
            "mae": self.mae,
            "med_signed": self.med_signed,
            "med_abs": self.med_abs,
            "nmed": self.nmed,
            "mred_conventional": self.mred_conventional,
            "mred_global": self.mred_global,
            "sample_count": self.sample_count,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ErrorReport":
        data = dict(data)
        data["config"] = MultiplierConfig.from_dict(data["config"])
        data["method"] = Method(data["method"])
        data["ber"] = tuple(data.get("ber", ()))
        return cls(**data)


# ── Error distance ──────────────────────────────────────────────────────────

def _check_products(p: Product, p_hat: Product) -> None:
    if p.width != p_hat.width:
        raise WidthMismatchError(f"product widths differ: {p.width} != {p_hat.width}")


def error_distance(p: Product, p_hat: Product) -> int:
    """ED = dec(p) - dec(p_hat)."""
    _check_products(p, p_hat)
    return p.value - p_hat.value


def signed_error_distance(p: Product, p_hat: Product) -> int:
    """ED as the bitwise sum of 2^r (p_r XOR p_hat_r) sgn(p_r - p_hat_r)."""
    _check_products(p, p_hat)
    ed = 0
    for r in range(p.width):
        pr, qr = p.bit(r), p_hat.bit(r)
        ed += (1 << r) * (pr ^ qr) * (pr - qr)
    return ed


# ── Accumulation ────────────────────────────────────────────────────────────

def _exact_sum(values: np.ndarray, n: int) -> int:
    if n <= INT64_SUM_WIDTH and values.dtype != object:
        return int(np.sum(values))
    return int(np.sum(values.astype(object)))


@dataclass
class MetricAccumulator:
    """
    Running sums behind an ErrorReport.

    Unweighted accumulation (uniform exhaustive, Monte-Carlo) keeps integer
    counts and integer ED sums. Weighted accumulation keeps probability mass.
    Merging is associative and commutative; the witness is the pair with the
    smallest enumeration key among those reaching the maximum |ED|.
    """
    n: int
    weighted: bool = False
    count: int = 0
    total: Any = 0
    errors: Any = 0
    bit_errors: List[Any] = field(default_factory=list)
    ed_sum: Any = 0
    abs_sum: Any = 0
    ed_sq_sum: float = 0.0
    abs_sq_sum: float = 0.0
    rel_sum: float = 0.0
    rel_sq_sum: float = 0.0
    max_abs: int = 0
    witness: Optional[Tuple[int, int]] = None
    witness_key: Optional[int] = None

    def __post_init__(self):
        if not self.bit_errors:
            zero = 0.0 if self.weighted else 0
            self.bit_errors = [zero] * (2 * self.n)
        if self.weighted:
            self.total = float(self.total)
            self.errors = float(self.errors)
            self.ed_sum = float(self.ed_sum)
            self.abs_sum = float(self.abs_sum)

    def add(
        self,
        a: np.ndarray,
        b: np.ndarray,
        exact: np.ndarray,
        approx: np.ndarray,
        weights: Optional[np.ndarray] = None,
        keys: Optional[np.ndarray] = None,
    ) -> None:
        """Fold a batch of evaluated lanes into the sums."""
        if len(a) == 0:
            return
        ed = exact - approx
        abs_ed = np.abs(ed)
        diff = exact ^ approx
        ed_f = ed.astype(np.float64)
        abs_f = abs_ed.astype(np.float64)
        rel = abs_f / np.maximum(exact.astype(np.float64), 1.0)
        self.count += int(len(a))

        if weights is None:
            self.total += int(len(a))
            self.errors += int(np.count_nonzero(diff))
            for r in range(2 * self.n):
                self.bit_errors[r] += int(np.count_nonzero((diff >> r) & 1))
            self.ed_sum += _exact_sum(ed, self.n)
            self.abs_sum += _exact_sum(abs_ed, self.n)
            self.ed_sq_sum += float(np.sum(ed_f * ed_f))
            self.abs_sq_sum += float(np.sum(abs_f * abs_f))
            self.rel_sum += float(np.sum(rel))
            self.rel_sq_sum += float(np.sum(rel * rel))
        else:
            w = np.asarray(weights, dtype=np.float64)
            wrong = diff != 0
            self.total += float(np.sum(w))
            self.errors += float(np.sum(w[wrong]))
            for r in range(2 * self.n):
                self.bit_errors[r] += float(np.sum(w[((diff >> r) & 1) != 0]))
            self.ed_sum += float(np.sum(w * ed_f))
            self.abs_sum += float(np.sum(w * abs_f))
            self.ed_sq_sum += float(np.sum(w * ed_f * ed_f))
            self.abs_sq_sum += float(np.sum(w * abs_f * abs_f))
            self.rel_sum += float(np.sum(w * rel))
            self.rel_sq_sum += float(np.sum(w * rel * rel))

        k = int(np.argmax(abs_ed))
        batch_max = int(abs_ed[k])
        if keys is None:
            key = (int(a[k]) << self.n) | int(b[k])
        else:
            key = int(keys[k])
        self._offer(batch_max, (int(a[k]), int(b[k])), key)

    def _offer(self, value: int, pair: Optional[Tuple[int, int]], key: Optional[int]) -> None:
        if pair is None:
            return
        better = value > self.max_abs or self.witness is None
        tie = value == self.max_abs and self.witness_key is not None and key < self.witness_key
        if better or tie:
            self.max_abs = value
            self.witness = pair
            self.witness_key = key

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        if other.n != self.n or other.weighted != self.weighted:
            raise ConfigError("cannot merge accumulators of different kinds")
        out = MetricAccumulator(
            n=self.n,
            weighted=self.weighted,
            count=self.count + other.count,
            total=self.total + other.total,
            errors=self.errors + other.errors,
            bit_errors=[x + y for x, y in zip(self.bit_errors, other.bit_errors)],
            ed_sum=self.ed_sum + other.ed_sum,
            abs_sum=self.abs_sum + other.abs_sum,
            ed_sq_sum=self.ed_sq_sum + other.ed_sq_sum,
            abs_sq_sum=self.abs_sq_sum + other.abs_sq_sum,
            rel_sum=self.rel_sum + other.rel_sum,
            rel_sq_sum=self.rel_sq_sum + other.rel_sq_sum,
            max_abs=self.max_abs,
            witness=self.witness,
            witness_key=self.witness_key,
        )
        out._offer(other.max_abs, other.witness, other.witness_key)
        return out

    def to_report(
        self,
        cfg: MultiplierConfig,
        method: Method,
        seed: Optional[int] = None,
        mae: Optional[int] = None,
        sample_count: Optional[int] = None,
    ) -> ErrorReport:
        """Turn the sums into an ErrorReport; mae defaults to the observed maximum."""
        if not self.total:
            raise ConfigError("no operand pairs were evaluated")
        denom = ((1 << self.n) - 1) ** 2
        nmed = self.abs_sum / (self.total * denom)
        return ErrorReport(
            config=cfg,
            method=method,
            er=self.errors / self.total,
            ber=tuple(x / self.total for x in self.bit_errors),
            mae=self.max_abs if mae is None else mae,
            med_signed=self.ed_sum / self.total,
            med_abs=self.abs_sum / self.total,
            nmed=nmed,
            mred_conventional=self.rel_sum / self.total,
            mred_global=self.abs_sum / (self.total * denom),
            sample_count=self.count if sample_count is None else sample_count,
            seed=seed,
        )


def evaluate_lanes(cfg: MultiplierConfig, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact and approximate products of operand lanes."""
    approx = datapath.run(a, b, cfg.n, cfg.split, cfg.fix_to_1).product
    return a * b, approx


# ── Sharding ────────────────────────────────────────────────────────────────

def map_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """Apply fn to every item, results in input order whatever the worker count."""
    if workers < 1:
        raise ConfigError(f"workers={workers} must be at least 1")
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def shards(total: int, bits: int = SHARD_BITS) -> List[Tuple[int, int]]:
    """Contiguous [start, stop) index ranges of at most 2^bits entries."""
    size = 1 << bits
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def operand_pairs(n: int, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.arange(start, stop, dtype=np.int64)
    return idx >> n, idx & ((1 << n) - 1)


def check_ceiling(n: int, ceiling: Optional[int] = None, allow_large: bool = False) -> int:
    """Validate an exhaustive request; returns the effective ceiling."""
    if ceiling is None:
        ceiling = MAX_EXHAUSTIVE_CEILING if allow_large else DEFAULT_EXHAUSTIVE_CEILING
    if ceiling > MAX_EXHAUSTIVE_CEILING and not allow_large:
        raise ConfigError(f"ceiling={ceiling} above {MAX_EXHAUSTIVE_CEILING} needs allow_large")
    if ceiling > MAX_EXHAUSTIVE_CEILING:
        raise ConfigError(f"ceiling={ceiling} above the hard limit {MAX_EXHAUSTIVE_CEILING}")
    if n > ceiling:
        raise CeilingError(
            f"n={n} above exhaustive ceiling {ceiling} "
            f"({1 << (2 * n)} pairs); use Monte-Carlo or raise the ceiling")
    return ceiling


def _check_distribution(dist: Optional[InputDistribution], n: int) -> InputDistribution:
    if dist is None:
        return InputDistribution.uniform(n)
    if dist.width != n:
        raise WidthMismatchError(f"distribution width {dist.width} != n={n}")
    return dist


def _pair_weights(
    dist_a: InputDistribution,
    dist_b: InputDistribution,
    a: np.ndarray,
    b: np.ndarray,
) -> Optional[np.ndarray]:
    if dist_a.is_uniform and dist_b.is_uniform:
        return None
    return dist_a.weights(a) * dist_b.weights(b)


# ── Exhaustive evaluation ───────────────────────────────────────────────────

def accumulate_exhaustive(
    cfg: MultiplierConfig,
    dist_a: Optional[InputDistribution] = None,
    dist_b: Optional[InputDistribution] = None,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    workers: int = 1,
) -> MetricAccumulator:
    """Enumerate every operand pair and return the merged accumulator."""
    n = cfg.n
    check_ceiling(n, ceiling, allow_large)
    dist_a = _check_distribution(dist_a, n)
    dist_b = _check_distribution(dist_b, n)
    weighted = not (dist_a.is_uniform and dist_b.is_uniform)
    plan = shards(1 << (2 * n))

    def one(shard: Tuple[int, int]) -> MetricAccumulator:
        a, b = operand_pairs(n, *shard)
        acc = MetricAccumulator(n=n, weighted=weighted)
        w = _pair_weights(dist_a, dist_b, a, b)
        if w is not None:
            keep = w > 0
            a, b, w = a[keep], b[keep], w[keep]
        exact, approx = evaluate_lanes(cfg, a, b)
        acc.add(a, b, exact, approx, weights=w)
        logger.debug("shard [%d, %d) done for %s", shard[0], shard[1], cfg.label)
        return acc

    logger.info("exhaustive %s: %d pairs in %d shards, %d workers",
                cfg.label, 1 << (2 * n), len(plan), workers)
    started = time.perf_counter()
    parts = map_ordered(one, plan, workers)
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    logger.info("exhaustive %s finished in %.2fs", cfg.label, time.perf_counter() - started)
    return total


def report_exhaustive(
    cfg: MultiplierConfig,
    dist_a: Optional[InputDistribution] = None,
    dist_b: Optional[InputDistribution] = None,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    workers: int = 1,
) -> ErrorReport:
    """
    Exact ErrorReport over all 2^(2n) operand pairs.

    Each pair is weighted by dist_a(a) * dist_b(b); omitted distributions are
    uniform. The MAE is the maximum |ED| over pairs of non-zero weight.

    Raises:
        CeilingError: n above the exhaustive ceiling
        WidthMismatchError: a distribution of another width
    """
    acc = accumulate_exhaustive(cfg, dist_a, dist_b, ceiling, allow_large, workers)
    report = acc.to_report(cfg, Method.EXHAUSTIVE, sample_count=1 << (2 * cfg.n))
    logger.info("exhaustive %s: er=%.6g mae=%d med_abs=%.6g",
                cfg.label, report.er, report.mae, report.med_abs)
    return report


def ber_exhaustive(cfg: MultiplierConfig, r: int, **kwargs: Any) -> float:
    """Fraction of operand pairs whose product bit r is wrong."""
    if not 0 <= r < 2 * cfg.n:
        raise ConfigError(f"bit index r={r} outside [0, {2 * cfg.n - 1}]")
    return report_exhaustive(cfg, **kwargs).ber[r]


def first_erroneous_bit(cfg: MultiplierConfig, **kwargs: Any) -> Optional[int]:
    """Lowest product bit with a non-zero BER, or None for an error-free design."""
    for r, value in enumerate(report_exhaustive(cfg, **kwargs).ber):
        if value > 0:
            return r
    return None


def mae_witness(cfg: MultiplierConfig, **kwargs: Any) -> Tuple[int, Optional[Tuple[int, int]]]:
    """Maximum |ED| and the first pair (a-major order) reaching it."""
    acc = accumulate_exhaustive(cfg, **kwargs)
    if acc.max_abs == 0:
        return 0, None
    return acc.max_abs, acc.witness


# ── Error-distance distribution ─────────────────────────────────────────────

def ed_histogram(
    cfg: MultiplierConfig,
    dist_a: Optional[InputDistribution] = None,
    dist_b: Optional[InputDistribution] = None,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    workers: int = 1,
) -> Dict[int, float]:
    """Probability of every error distance value, keyed by ED."""
    n = cfg.n
    check_ceiling(n, ceiling, allow_large)
    dist_a = _check_distribution(dist_a, n)
    dist_b = _check_distribution(dist_b, n)

    def one(shard: Tuple[int, int]) -> Dict[int, Any]:
        a, b = operand_pairs(n, *shard)
        w = _pair_weights(dist_a, dist_b, a, b)
        exact, approx = evaluate_lanes(cfg, a, b)
        values, inverse, counts = np.unique(exact - approx, return_inverse=True, return_counts=True)
        if w is None:
            return {int(v): int(c) for v, c in zip(values, counts)}
        mass = np.bincount(inverse.ravel(), weights=w, minlength=len(values))
        return {int(v): float(m) for v, m in zip(values, mass) if m > 0}

    counts: Dict[int, Any] = {}
    for part in map_ordered(one, shards(1 << (2 * n)), workers):
        for delta, c in part.items():
            counts[delta] = counts.get(delta, 0) + c

    total = sum(counts.values())
    return {delta: counts[delta] / total for delta in sorted(counts)}


def med_from_histogram(hist: Dict[int, float], absolute: bool = True) -> float:
    """MED as the sum over delta of delta * Pr(ED = delta)."""
    if absolute:
        return sum(abs(delta) * p for delta, p in hist.items())
    return sum(delta * p for delta, p in hist.items())


# ── Maximum-error event ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class MaxErrorProbability:
    """
    Two views of how often the largest error occurs.

    Attributes:
        config: Evaluated configuration
        mae: Exhaustive maximum |ED|
        achieving_fraction: Fraction of pairs with |ED| = mae (0 when mae = 0)
        event_probability: Pr[LSP carry-out in cycle n-2 and none in cycle n-1]
    """
    config: MultiplierConfig
    mae: int
    achieving_fraction: float
    event_probability: float

    @property
    def difference(self) -> float:
        return self.achieving_fraction - self.event_probability

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "mae": self.mae,
            "achieving_fraction": self.achieving_fraction,
            "event_probability": self.event_probability,
            "difference": self.difference,
        }


def lsp_carry_lanes(cfg: MultiplierConfig, a: Any, b: Any) -> List[Any]:
    """Per-cycle LSP carry-out for operand lanes (undelayed chain when degenerate)."""
    if cfg.segmented:
        return datapath.run(a, b, cfg.n, cfg.t, cfg.fix_to_1, history=True).lsp_carries
    return datapath.lsp_carry_history(a, b, cfg.n, cfg.t)


def max_error_probability(
    cfg: MultiplierConfig,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    workers: int = 1,
) -> MaxErrorProbability:
    """
    Compare the fraction of pairs reaching the MAE with the carry event that
    is claimed to produce it, under uniform inputs.
    """
    n = cfg.n
    check_ceiling(n, ceiling, allow_large)

    def one(shard: Tuple[int, int]) -> Tuple[int, int, int]:
        a, b = operand_pairs(n, *shard)
        exact, approx = evaluate_lanes(cfg, a, b)
        abs_ed = np.abs(exact - approx)
        top = int(np.max(abs_ed))
        carries = lsp_carry_lanes(cfg, a, b)
        prev = carries[n - 2] if n >= 2 else np.zeros_like(a)
        event = int(np.count_nonzero((prev == 1) & (carries[n - 1] == 0)))
        return top, int(np.count_nonzero(abs_ed == top)), event

    top, hits, events = 0, 0, 0
    for part_top, part_hits, part_events in map_ordered(one, shards(1 << (2 * n)), workers):
        if part_top > top:
            top, hits = part_top, part_hits
        elif part_top == top:
            hits += part_hits
        events += part_events

    total = 1 << (2 * n)
    result = MaxErrorProbability(
        config=cfg,
        mae=top,
        achieving_fraction=hits / total if top > 0 else 0.0,
        event_probability=events / total,
    )
    logger.info("max-error probability %s: achieving=%.6g event=%.6g difference=%.6g",
                cfg.label, result.achieving_fraction, result.event_probability,
                result.difference)
    return result
