"""
Design-space sweeps, Pareto fronts and report export.

Reports are exported in a tidy long CSV, one row per metric::

    n,t,fix,method,metric,value,samples,seed

``fix`` is 1 or 0, or ``accurate`` for the unsegmented chain. Values that
are not exact integers carry 17 significant digits.
"""

import csv
from dataclasses import dataclass, field
from enum import Enum
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .analytic import DEFAULT_DEPTH, report_estimate
from .core import MAX_WIDTH, MultiplierConfig
from .errors import ConfigError
from .metrics import (
    DEFAULT_EXHAUSTIVE_CEILING,
    MAX_EXHAUSTIVE_CEILING,
    ErrorReport,
    Method,
    map_ordered,
    report_exhaustive,
)
from .montecarlo import IntervalBounds, SamplingPlan, report_monte_carlo

logger = logging.getLogger(__name__)

CSV_HEADER = ("n", "t", "fix", "method", "metric", "value", "samples", "seed")

METHODS = ("exhaustive", "mc", "estimate")


class TRule(Enum):
    """How splitting points are chosen for each width."""
    EXPLICIT = "explicit"
    ALL = "all"
    HALVED = "halved"


@dataclass(frozen=True)
class Evaluation:
    """One evaluated configuration; intervals are present for Monte-Carlo runs."""
    report: ErrorReport
    intervals: Dict[str, IntervalBounds] = field(default_factory=dict)


def evaluate(
    cfg: MultiplierConfig,
    method: str,
    plan: Optional[SamplingPlan] = None,
    ceiling: Optional[int] = None,
    allow_large: bool = False,
    depth: int = DEFAULT_DEPTH,
    workers: int = 1,
) -> Evaluation:
    """Evaluate cfg with "exhaustive", "mc" or "estimate"."""
    plan = plan or SamplingPlan()
    if method == "exhaustive":
        report = report_exhaustive(cfg, plan.dist_a, plan.dist_b, ceiling, allow_large, workers)
        return Evaluation(report)
    if method == "mc":
        result = report_monte_carlo(cfg, plan, workers)
        return Evaluation(result.report, result.intervals)
    if method == "estimate":
        return Evaluation(report_estimate(cfg, depth, plan.dist_a, plan.dist_b))
    raise ConfigError(f"method={method!r} not one of {', '.join(METHODS)}")


# ── Sweeps ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SweepSpec:
    """
    Grid of configurations to evaluate.

    Attributes:
        widths: Operand widths n
        t_rule: ALL takes t = 2..n/2, HALVED t = n/2, EXPLICIT the t_values
        t_values: Splitting points for the EXPLICIT rule
        fix_settings: Fix-to-1 settings to cross with every (n, t)
        method: Force one method; None picks exhaustive up to the ceiling
            and Monte-Carlo above it
        plan: Monte-Carlo plan (and operand distributions)
        ceiling: Exhaustive ceiling (defaults as in report_exhaustive)
        allow_large: Lift the ceiling to its hard limit
        depth: Estimator conditioning depth
    """
    widths: Tuple[int, ...]
    t_rule: TRule = TRule.ALL
    t_values: Tuple[int, ...] = ()
    fix_settings: Tuple[bool, ...] = (True,)
    method: Optional[str] = None
    plan: SamplingPlan = field(default_factory=SamplingPlan)
    ceiling: Optional[int] = None
    allow_large: bool = False
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if not self.widths:
            raise ConfigError("sweep has no widths")
        if not self.fix_settings:
            raise ConfigError("sweep has no fix-to-1 settings")
        for n in self.widths:
            if not 2 <= n <= MAX_WIDTH:
                raise ConfigError(f"n={n} outside [2, {MAX_WIDTH}]")
        if self.t_rule is TRule.EXPLICIT and not self.t_values:
            raise ConfigError("explicit t rule needs t values")
        if self.method is not None and self.method not in METHODS:
            raise ConfigError(f"method={self.method!r} not one of {', '.join(METHODS)}")

    def splits(self, n: int) -> List[int]:
        if self.t_rule is TRule.HALVED:
            return [MultiplierConfig.halved(n).t]
        if self.t_rule is TRule.ALL:
            return list(range(2, n // 2 + 1))
        for t in self.t_values:
            if not 1 <= t <= n - 1:
                raise ConfigError(f"t={t} outside [1, {n - 1}] for n={n}")
        return sorted(set(self.t_values))

    def configs(self) -> List[MultiplierConfig]:
        """All configurations, ordered by n, then t, then fix flag."""
        out = [
            MultiplierConfig(n=n, t=t, fix_to_1=fix)
            for n in sorted(set(self.widths))
            for t in self.splits(n)
            for fix in sorted(set(self.fix_settings))
        ]
        if not out:
            raise ConfigError("sweep grid is empty")
        return out

    def method_for(self, n: int) -> str:
        if self.method is not None:
            return self.method
        limit = self.ceiling
        if limit is None:
            limit = MAX_EXHAUSTIVE_CEILING if self.allow_large else DEFAULT_EXHAUSTIVE_CEILING
        return "exhaustive" if n <= limit else "mc"


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[Evaluation]:
    """Evaluate every configuration of the grid; output order follows spec.configs()."""
    configs = spec.configs()
    logger.info("sweep: %d configurations", len(configs))

    def one(cfg: MultiplierConfig) -> Evaluation:
        return evaluate(cfg, spec.method_for(cfg.n), spec.plan, spec.ceiling,
                        spec.allow_large, spec.depth)

    return map_ordered(one, configs, workers)


# ── Pareto fronts ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ParetoPoint:
    """A configuration and its (er, mae, nmed) tuple, all minimised."""
    config: MultiplierConfig
    er: float
    mae: float
    nmed: float

    @property
    def metrics(self) -> Tuple[float, float, float]:
        return (self.er, self.mae, self.nmed)

    def dominates(self, other: "ParetoPoint") -> bool:
        mine, theirs = self.metrics, other.metrics
        return all(x <= y for x, y in zip(mine, theirs)) and mine != theirs

    @classmethod
    def from_report(cls, report: ErrorReport) -> "ParetoPoint":
        if report.mae is None or report.nmed is None:
            raise ConfigError(f"{report.config.label}: report lacks mae or nmed")
        return cls(report.config, report.er, float(report.mae), report.nmed)

    def to_dict(self) -> Dict[str, Any]:
        return {"config": self.config.to_dict(), "er": self.er, "mae": self.mae, "nmed": self.nmed}


def _config_key(cfg: MultiplierConfig) -> Tuple[int, int, int, int]:
    return (cfg.n, cfg.t, int(cfg.fix_to_1), int(cfg.segmented))


def pareto_front(points: Iterable[Union[ParetoPoint, ErrorReport]]) -> List[ParetoPoint]:
    """Non-dominated points, ordered by (n, t)."""
    pts = [p if isinstance(p, ParetoPoint) else ParetoPoint.from_report(p) for p in points]
    if not pts:
        raise ConfigError("no points to compare")
    front = [p for p in pts if not any(q.dominates(p) for q in pts)]
    return sorted(front, key=lambda p: (_config_key(p.config), p.metrics))


# ── Export ──────────────────────────────────────────────────────────────────

def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if float(value).is_integer():
        return str(int(value))
    return format(value, ".17g")


def _fix_label(cfg: MultiplierConfig) -> str:
    if not cfg.segmented:
        return "accurate"
    return "1" if cfg.fix_to_1 else "0"


def reports_to_csv(
    reports: Sequence[ErrorReport],
    intervals: Optional[Sequence[Dict[str, IntervalBounds]]] = None,
) -> str:
    """
    Tidy CSV of the reports.

    When intervals are given (one mapping per report), each metric with an
    interval gains <metric>_lower and <metric>_upper rows.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for k, report in enumerate(reports):
        cfg = report.config
        seed = "" if report.seed is None else str(report.seed)
        head = [cfg.n, cfg.t, _fix_label(cfg), report.method.value]
        bounds = intervals[k] if intervals else {}
        for name, value in report.metric_items():
            writer.writerow(head + [name, format_value(value), report.sample_count, seed])
            if name in bounds:
                b = bounds[name]
                writer.writerow(head + [f"{name}_lower", format_value(b.lower), report.sample_count, seed])
                writer.writerow(head + [f"{name}_upper", format_value(b.upper), report.sample_count, seed])
    return buf.getvalue()


def reports_to_json(
    reports: Sequence[ErrorReport],
    intervals: Optional[Sequence[Dict[str, IntervalBounds]]] = None,
) -> str:
    rows = []
    for k, report in enumerate(reports):
        row = report.to_dict()
        if intervals and intervals[k]:
            row["intervals"] = {name: b.to_dict() for name, b in intervals[k].items()}
        rows.append(row)
    return json.dumps(rows, sort_keys=True, indent=2)


def _parse_number(text: str) -> Any:
    if text in ("inf", "-inf"):
        return float(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def reports_from_csv(text: str) -> List[ErrorReport]:
    """Read reports back from the tidy CSV; interval rows are skipped."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ConfigError(f"CSV header must be {','.join(CSV_HEADER)}")

    groups: Dict[Tuple[str, ...], Dict[str, Any]] = {}
    for row in reader:
        key = tuple(row[c] for c in ("n", "t", "fix", "method", "samples", "seed"))
        metric = row["metric"]
        if metric.endswith("_lower") or metric.endswith("_upper"):
            continue
        groups.setdefault(key, {})[metric] = _parse_number(row["value"])

    reports = []
    for (n, t, fix, method, samples, seed), values in groups.items():
        cfg = MultiplierConfig(
            n=int(n), t=int(t),
            fix_to_1=fix == "1",
            segmented=fix != "accurate",
        )
        ber = tuple(float(values[f"ber_{r}"]) for r in range(2 * cfg.n) if f"ber_{r}" in values)
        if "er" not in values:
            raise ConfigError(f"{cfg.label}: CSV has no er row")

        def opt(name: str) -> Optional[float]:
            return float(values[name]) if name in values else None

        reports.append(ErrorReport(
            config=cfg,
            method=Method(method),
            er=float(values["er"]),
            ber=ber,
            mae=int(values["mae"]) if "mae" in values else None,
            med_signed=opt("med_signed"),
            med_abs=opt("med_abs"),
            nmed=opt("nmed"),
            mred_conventional=opt("mred_conventional"),
            mred_global=opt("mred_global"),
            sample_count=int(samples),
            seed=int(seed) if seed else None,
        ))
    return reports


def load_reports(path: Union[str, Path]) -> List[ErrorReport]:
    """Reports from a .json export or a tidy .csv export."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        if isinstance(data, dict):
            data = [data]
        return [ErrorReport.from_dict({k: v for k, v in row.items() if k != "intervals"})
                for row in data]
    return reports_from_csv(text)
