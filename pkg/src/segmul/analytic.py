"""
Closed forms and probability estimators for the segmented multiplier.

Signal probabilities of every sum and carry bit are propagated cycle by
cycle. A node at register position i is conditioned on the a-literals
a_i, a_{i-1}, ..., a_{i-d+1} (its window, d = depth); every other input is
treated as independent. Within a cycle the shared multiplicand bit b_j is
branched on and marginalised once the cycle is complete.

The closed forms hold for n > 4 and t <= n/2 and are refused elsewhere.
"""

from dataclasses import dataclass, field
from itertools import product as assignments
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import CycleTrace, MultiplierConfig, Operand
from .distribution import InputDistribution
from .errors import CeilingError, ConfigError, RegimeError
from .metrics import (
    ErrorReport,
    Method,
    check_ceiling,
    evaluate_lanes,
    lsp_carry_lanes,
    map_ordered,
    mae_witness,
    operand_pairs,
    shards,
)

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 1
INCLUSION_EXCLUSION_CEILING = 10

# Top LSP a-bits the ER union is conditioned on.
UNION_COFACTOR_BITS = 4

Assignment = Tuple[int, ...]
NodeTable = Dict[Assignment, float]


def check_regime(cfg: MultiplierConfig) -> None:
    if cfg.n <= 4 or 2 * cfg.t > cfg.n:
        raise RegimeError(f"{cfg.label}: formula derived for n > 4 and t <= n/2 only")


def mae_closed_form(cfg: MultiplierConfig) -> int:
    """MAE with fix-to-1: 2^(n+t-1) - 2^(t+1)."""
    check_regime(cfg)
    return (1 << (cfg.n + cfg.t - 1)) - (1 << (cfg.t + 1))


# ── Probability propagation ─────────────────────────────────────────────────

def _window(i: int, depth: int, n: int) -> Tuple[int, ...]:
    return tuple(k for k in range(i, i - depth, -1) if 0 <= k < n)


def _condition(
    table: NodeTable,
    window: Sequence[int],
    given: Dict[int, int],
    a_probs: Sequence[float],
) -> float:
    """Probability of a node given some a-literals, marginalising the rest of its window."""
    total = 0.0
    for assignment, p in table.items():
        weight = 1.0
        for k, bit in zip(window, assignment):
            if k in given:
                if given[k] != bit:
                    weight = 0.0
                    break
            else:
                weight *= a_probs[k] if bit else 1.0 - a_probs[k]
        total += weight * p
    return total


def _project(
    table: NodeTable,
    src: Sequence[int],
    dst: Sequence[int],
    a_probs: Sequence[float],
) -> NodeTable:
    if tuple(src) == tuple(dst):
        return table
    return {
        asg: _condition(table, src, dict(zip(dst, asg)), a_probs)
        for asg in assignments((0, 1), repeat=len(dst))
    }


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _xor(p: float, q: float) -> float:
    return p + q - 2.0 * p * q


@dataclass(frozen=True)
class ProbabilityTable:
    """
    Estimated probabilities of S_i^j and C_i^j being 1.

    ``sums[(i, j)]`` and ``carries[(i, j)]`` map an assignment of the node's
    a-literal window (see ``window``) to the conditional probability.
    """
    n: int
    t: int
    depth: int
    segmented: bool
    a_probs: Tuple[float, ...]
    b_probs: Tuple[float, ...]
    sums: Dict[Tuple[int, int], NodeTable] = field(default_factory=dict)
    carries: Dict[Tuple[int, int], NodeTable] = field(default_factory=dict)

    def window(self, i: int) -> Tuple[int, ...]:
        return _window(i, self.depth, self.n)

    def sum_probability(self, i: int, j: int, given: Optional[Dict[int, int]] = None) -> float:
        """rho(S_i^j | given a-literals)."""
        return _condition(self.sums[(i, j)], self.window(i), given or {}, self.a_probs)

    def carry_probability(self, i: int, j: int, given: Optional[Dict[int, int]] = None) -> float:
        """rho(C_i^j | given a-literals)."""
        return _condition(self.carries[(i, j)], self.window(i), given or {}, self.a_probs)

    def complement(self, kind: str, i: int, j: int, given: Optional[Dict[int, int]] = None) -> float:
        """rho of the negated node; kind is "sum" or "carry"."""
        if kind == "sum":
            return 1.0 - self.sum_probability(i, j, given)
        if kind == "carry":
            return 1.0 - self.carry_probability(i, j, given)
        raise ConfigError(f"kind={kind!r} must be 'sum' or 'carry'")

    def lsp_carry(self, j: int) -> float:
        """rho(C_{t-1}^j)."""
        return self.carry_probability(self.t - 1, j)

    def entries(self) -> List[Tuple[str, int, int, Assignment, float]]:
        """Every stored (kind, i, j, window assignment, probability)."""
        rows = []
        for kind, store in (("sum", self.sums), ("carry", self.carries)):
            for (i, j), node in sorted(store.items(), key=lambda kv: (kv[0][1], kv[0][0])):
                rows.extend((kind, i, j, asg, p) for asg, p in node.items())
        return rows


def uniform_bit_probabilities(n: int) -> Tuple[List[float], List[float]]:
    return [0.5] * n, [0.5] * n


def bit_probabilities_of(
    dist_a: Optional[InputDistribution],
    dist_b: Optional[InputDistribution],
    n: int,
) -> Tuple[List[float], List[float]]:
    """Per-bit marginals of two operand distributions (uniform when None)."""
    a = dist_a.bit_probabilities() if dist_a is not None else [0.5] * n
    b = dist_b.bit_probabilities() if dist_b is not None else [0.5] * n
    return a, b


def propagate_probabilities(
    cfg: MultiplierConfig,
    input_bit_probs: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
    depth: int = DEFAULT_DEPTH,
) -> ProbabilityTable:
    """
    Propagate signal probabilities through all n cycles.

    Args:
        cfg: Multiplier configuration (degenerate mode propagates the
            undelayed chain)
        input_bit_probs: (rho(a_i) for i < n, rho(b_j) for j < n); uniform
            when None
        depth: a-literals each node is conditioned on

    Returns:
        ProbabilityTable for cycles 0..n-1
    """
    n, t = cfg.n, cfg.t
    if depth < 0:
        raise ConfigError(f"depth={depth} must be non-negative")
    a_probs, b_probs = input_bit_probs or uniform_bit_probabilities(n)
    a_probs, b_probs = tuple(float(p) for p in a_probs), tuple(float(p) for p in b_probs)
    if len(a_probs) != n or len(b_probs) != n:
        raise ConfigError(f"expected {n} bit probabilities per operand")
    if any(not 0.0 <= p <= 1.0 for p in a_probs + b_probs):
        raise ConfigError("bit probabilities must lie in [0, 1]")

    windows = [_window(i, depth, n) for i in range(n + 1)]

    def a_bit(i: int, asg: Assignment) -> float:
        w = windows[i]
        return float(asg[w.index(i)]) if i in w else a_probs[i]

    sums: Dict[Tuple[int, int], NodeTable] = {}
    carries: Dict[Tuple[int, int], NodeTable] = {}

    # Cycle 0: S^0 = a AND b_0, no carries.
    for i in range(n):
        sums[(i, 0)] = {asg: a_bit(i, asg) * b_probs[0]
                        for asg in assignments((0, 1), repeat=len(windows[i]))}
        carries[(i, 0)] = {asg: 0.0 for asg in assignments((0, 1), repeat=len(windows[i]))}
    sums[(n, 0)] = {asg: 0.0 for asg in assignments((0, 1), repeat=len(windows[n]))}

    for j in range(1, n):
        branches = []
        for beta in (0.0, 1.0):
            s_row: List[NodeTable] = []
            c_row: List[NodeTable] = []
            for i in range(n):
                w = windows[i]
                x = _project(sums[(i + 1, j - 1)], windows[i + 1], w, a_probs)
                if i == 0:
                    cin = None
                elif i == t and cfg.segmented:
                    cin = _project(carries[(t - 1, j - 1)], windows[t - 1], w, a_probs)
                else:
                    cin = _project(c_row[i - 1], windows[i - 1], w, a_probs)
                s_node, c_node = {}, {}
                for asg in assignments((0, 1), repeat=len(w)):
                    px = x[asg]
                    pg = a_bit(i, asg) * beta
                    pc = cin[asg] if cin is not None else 0.0
                    s_node[asg] = _clamp(_xor(_xor(px, pg), pc))
                    c_node[asg] = _clamp(px * pg + px * pc + pg * pc - 2.0 * px * pg * pc)
                s_row.append(s_node)
                c_row.append(c_node)
            s_row.append(_project(c_row[n - 1], windows[n - 1], windows[n], a_probs))
            branches.append((s_row, c_row))

        pb = b_probs[j]
        (s0, c0), (s1, c1) = branches
        for i in range(n + 1):
            sums[(i, j)] = {asg: (1.0 - pb) * s0[i][asg] + pb * s1[i][asg] for asg in s0[i]}
        for i in range(n):
            carries[(i, j)] = {asg: (1.0 - pb) * c0[i][asg] + pb * c1[i][asg] for asg in c0[i]}

    return ProbabilityTable(
        n=n, t=t, depth=depth, segmented=cfg.segmented,
        a_probs=a_probs, b_probs=b_probs, sums=sums, carries=carries,
    )


# ── Per-accumulation error ──────────────────────────────────────────────────

def _check_table(cfg: MultiplierConfig, table: ProbabilityTable) -> None:
    if (table.n, table.t) != (cfg.n, cfg.t):
        raise ConfigError(f"table built for n={table.n},t={table.t}, not {cfg.label}")


def er_accumulation(cfg: MultiplierConfig, j: int, table: ProbabilityTable) -> float:
    """
    Probability that accumulation j loses a carry at the LSP boundary.

    A carry leaves bit t-1 when it is generated there, or generated at a
    lower position k and propagated through k+1..t-1. Those events are
    disjoint, so their probabilities add; the terms of each event are taken
    as independent. Accumulation 0 never errs.
    """
    _check_table(cfg, table)
    if not 0 <= j < cfg.n:
        raise ConfigError(f"cycle j={j} outside [0, {cfg.n - 1}]")
    if j == 0 or not cfg.segmented:
        return 0.0
    t, pa = cfg.t, table.a_probs

    def generate(k: int) -> float:
        return pa[k] * table.sum_probability(k + 1, j - 1, {k: 1})

    def propagate(m: int) -> float:
        return (pa[m] * (1.0 - table.sum_probability(m + 1, j - 1, {m: 1}))
                + (1.0 - pa[m]) * table.sum_probability(m + 1, j - 1, {m: 0}))

    total = 0.0
    through = 1.0
    for k in range(t - 1, -1, -1):
        total += generate(k) * through
        through *= propagate(k)
    return _clamp(table.b_probs[j] * total)


def aer_event(trace: Sequence[CycleTrace], a: Operand, cfg: MultiplierConfig, j: int) -> bool:
    """The per-accumulation error condition evaluated on concrete trace bits."""
    if j == 0:
        return False
    t = cfg.t
    s = trace[j - 1].sum_bits
    bj = trace[j].reg_b_snapshot[0]
    ai = a.bits()
    if s[t] & ai[t - 1] & bj:
        return True
    for i in range(t - 1):
        if not s[i + 1] & ai[i] & bj:
            continue
        if all(s[l + 1] ^ (ai[l] & bj) for l in range(i + 1, t)):
            return True
    return False


def er_estimate(
    cfg: MultiplierConfig,
    table: ProbabilityTable,
    cofactor_bits: int = UNION_COFACTOR_BITS,
) -> float:
    """
    Estimated ER: the union of the per-accumulation error events.

    The union is 1 - prod(1 - p_j) over accumulations j = 1..n-1, evaluated
    separately for each assignment of the `cofactor_bits` most significant
    LSP a-bits and averaged with their probabilities. cofactor_bits=0 uses
    the table as is.
    """
    check_regime(cfg)
    _check_table(cfg, table)
    if not cfg.segmented:
        return 0.0

    def union(tab: ProbabilityTable) -> float:
        keep = 1.0
        for j in range(1, cfg.n):
            keep *= 1.0 - er_accumulation(cfg, j, tab)
        return 1.0 - keep

    bits = list(range(cfg.t - 1, max(-1, cfg.t - 1 - cofactor_bits), -1))
    if not bits:
        return _clamp(union(table))

    total = 0.0
    for asg in assignments((0, 1), repeat=len(bits)):
        weight = 1.0
        probs = list(table.a_probs)
        for k, bit in zip(bits, asg):
            weight *= probs[k] if bit else 1.0 - probs[k]
            probs[k] = float(bit)
        if weight == 0.0:
            continue
        sub = propagate_probabilities(cfg, (probs, table.b_probs), table.depth)
        total += weight * union(sub)
    return _clamp(total)


def max_error_probability_estimate(cfg: MultiplierConfig, table: ProbabilityTable) -> float:
    """rho(C_{t-1}^{n-2}) * (1 - rho(C_{t-1}^{n-1})), terms independent."""
    _check_table(cfg, table)
    return _clamp(table.lsp_carry(cfg.n - 2) * (1.0 - table.lsp_carry(cfg.n - 1)))


def report_estimate(
    cfg: MultiplierConfig,
    depth: int = DEFAULT_DEPTH,
    dist_a: Optional[InputDistribution] = None,
    dist_b: Optional[InputDistribution] = None,
) -> ErrorReport:
    """ErrorReport holding the estimated ER and the closed-form MAE."""
    check_regime(cfg)
    table = propagate_probabilities(cfg, bit_probabilities_of(dist_a, dist_b, cfg.n), depth)
    er = er_estimate(cfg, table)
    mae = mae_closed_form(cfg) if cfg.segmented else 0
    return ErrorReport(config=cfg, method=Method.ESTIMATE, er=er, mae=mae)


# ── Exhaustive checks ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class EventFrequencies:
    """
    Exhaustive frequencies of the LSP carry events under uniform inputs.

    Attributes:
        lsp_carry: Per cycle j, fraction of pairs with C_{t-1}^j = 1
        max_error_event: Fraction with C_{t-1}^{n-2} = 1 and C_{t-1}^{n-1} = 0
    """
    config: MultiplierConfig
    lsp_carry: Tuple[float, ...]
    max_error_event: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "lsp_carry": list(self.lsp_carry),
            "max_error_event": self.max_error_event,
        }


def event_frequencies(
    cfg: MultiplierConfig,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    workers: int = 1,
) -> EventFrequencies:
    n = cfg.n
    check_ceiling(n, ceiling, allow_large)

    def one(shard: Tuple[int, int]) -> Tuple[List[int], int]:
        a, b = operand_pairs(n, *shard)
        carries = lsp_carry_lanes(cfg, a, b)
        counts = [int(np.count_nonzero(c)) for c in carries]
        event = int(np.count_nonzero((carries[n - 2] == 1) & (carries[n - 1] == 0)))
        return counts, event

    counts = [0] * n
    events = 0
    for part, part_events in map_ordered(one, shards(1 << (2 * n)), workers):
        counts = [x + y for x, y in zip(counts, part)]
        events += part_events
    total = 1 << (2 * n)
    return EventFrequencies(
        config=cfg,
        lsp_carry=tuple(c / total for c in counts),
        max_error_event=events / total,
    )


@dataclass(frozen=True)
class MaeCheck:
    """Closed-form MAE against the exhaustive maximum, with the worst pair."""
    config: MultiplierConfig
    closed_form: int
    exhaustive: int
    witness: Optional[Tuple[int, int]]

    @property
    def matches(self) -> bool:
        return self.closed_form == self.exhaustive

    @property
    def excess(self) -> int:
        return self.exhaustive - self.closed_form

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "closed_form": self.closed_form,
            "exhaustive": self.exhaustive,
            "witness": list(self.witness) if self.witness else None,
            "matches": self.matches,
        }


def check_mae_closed_form(cfg: MultiplierConfig, **kwargs: Any) -> MaeCheck:
    """Compare mae_closed_form with the exhaustive maximum |ED|."""
    closed = mae_closed_form(cfg)
    worst, witness = mae_witness(cfg, **kwargs)
    result = MaeCheck(config=cfg, closed_form=closed, exhaustive=worst, witness=witness)
    if not result.matches:
        logger.warning("%s: exhaustive MAE %d differs from closed form %d, witness a=%s b=%s",
                       cfg.label, worst, closed, *(witness or (None, None)))
    return result


@dataclass(frozen=True)
class InclusionExclusionReport:
    """
    Word-error events and their intersections over all operand pairs.

    Event 0 ("msp") is an error in product bits n..2n-1, event r+1 ("p<r>")
    an error in product bit r. ``intersection_counts[mask]`` counts the pairs
    in every event whose bit is set in mask.
    """
    config: MultiplierConfig
    event_names: Tuple[str, ...]
    total_pairs: int
    error_count: int
    union_count: int
    intersection_counts: Tuple[int, ...]

    @property
    def er(self) -> float:
        return self.error_count / self.total_pairs

    @property
    def union_probability(self) -> float:
        return self.union_count / self.total_pairs

    @property
    def matches(self) -> bool:
        return self.union_count == self.error_count

    def intersection(self, *names: str) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.event_names.index(name)
        return self.intersection_counts[mask]

    def to_dict(self) -> Dict[str, Any]:
        table = {
            "&".join(self.event_names[k] for k in range(len(self.event_names)) if mask >> k & 1): count
            for mask, count in enumerate(self.intersection_counts)
            if mask and count
        }
        return {
            "config": self.config.to_dict(),
            "event_names": list(self.event_names),
            "total_pairs": self.total_pairs,
            "error_count": self.error_count,
            "union_count": self.union_count,
            "er": self.er,
            "union_probability": self.union_probability,
            "matches": self.matches,
            "intersections": table,
        }


def _superset_sums(hist: np.ndarray, k: int) -> np.ndarray:
    g = hist.astype(np.int64)
    masks = np.arange(1 << k)
    for bit in range(k):
        lower = masks[(masks >> bit) & 1 == 0]
        g[lower] += g[lower | (1 << bit)]
    return g


def inclusion_exclusion_check(cfg: MultiplierConfig, workers: int = 1) -> InclusionExclusionReport:
    """
    Recompute ER as the inclusion-exclusion sum over the event intersections.

    The union count equals the number of wrong products exactly.
    """
    n = cfg.n
    if n > INCLUSION_EXCLUSION_CEILING:
        raise CeilingError(f"n={n} above inclusion-exclusion ceiling {INCLUSION_EXCLUSION_CEILING}")
    k = n + 1
    names = ("msp",) + tuple(f"p{r}" for r in range(n))

    def one(shard: Tuple[int, int]) -> np.ndarray:
        a, b = operand_pairs(n, *shard)
        exact, approx = evaluate_lanes(cfg, a, b)
        diff = exact ^ approx
        mask = ((diff >> n) != 0).astype(np.int64)
        for r in range(n):
            mask |= ((diff >> r) & 1) << (r + 1)
        return np.bincount(mask, minlength=1 << k)

    hist = np.zeros(1 << k, dtype=np.int64)
    for part in map_ordered(one, shards(1 << (2 * n)), workers):
        hist += part

    g = _superset_sums(hist, k)
    masks = np.arange(1, 1 << k)
    sizes = np.array([bin(int(m)).count("1") for m in masks])
    signs = np.where(sizes % 2 == 1, 1, -1)
    union = int(np.sum(signs * g[1:]))
    total = 1 << (2 * n)
    errors = total - int(hist[0])

    report = InclusionExclusionReport(
        config=cfg,
        event_names=names,
        total_pairs=total,
        error_count=errors,
        union_count=union,
        intersection_counts=tuple(int(x) for x in g),
    )
    logger.info("inclusion-exclusion %s: union=%d direct=%d", cfg.label, union, errors)
    return report
