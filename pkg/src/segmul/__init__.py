"""
segmul: accuracy-configurable sequential multiplier with segmented carry chains

Bit-accurate models of the accurate and the approximate shift-and-add
multiplier, exhaustive and Monte-Carlo error metrics, probability-propagation
estimators and an image-squaring demo.

Usage:
    from segmul import MultiplierConfig, Operand, mul_approx_sequential

    cfg = MultiplierConfig(n=4, t=2)
    p_hat = mul_approx_sequential(Operand(11, 4), Operand(13, 4), cfg)
    assert p_hat.value == 159

    # Exact metrics (n <= 14 by default)
    from segmul import report_exhaustive
    report = report_exhaustive(MultiplierConfig(n=8, t=4))
    print(report.er, report.med_abs)

    # Sampled metrics beyond the exhaustive ceiling
    from segmul import SamplingPlan, report_monte_carlo
    result = report_monte_carlo(MultiplierConfig(n=20, t=10), SamplingPlan(seed=7))
    print(result.report.er, result.intervals["er"])

Command line:
    segmul mul --n 4 --t 2 --a 11 --b 13 --trace
"""

from .errors import (
    SegmulError,
    ConfigError,
    WidthMismatchError,
    DistributionError,
    CeilingError,
    RegimeError,
    ImageFormatError,
)
from .core import (
    MAX_WIDTH,
    Operand,
    Product,
    MultiplierConfig,
    CycleTrace,
    mul_reference,
    mul_accurate_sequential,
    mul_approx_sequential,
    trace_accurate,
    trace_approx,
    product_from_trace,
    product_from_approx_trace,
    render_trace,
)
from .distribution import InputDistribution
from .metrics import (
    Method,
    ErrorReport,
    MaxErrorProbability,
    error_distance,
    signed_error_distance,
    report_exhaustive,
    ber_exhaustive,
    max_error_probability,
    first_erroneous_bit,
    mae_witness,
    ed_histogram,
    med_from_histogram,
)
from .montecarlo import (
    SamplingPlan,
    IntervalBounds,
    MonteCarloResult,
    report_monte_carlo,
    sample_operand,
)
from .analytic import (
    ProbabilityTable,
    mae_closed_form,
    propagate_probabilities,
    er_accumulation,
    er_estimate,
    max_error_probability_estimate,
    inclusion_exclusion_check,
    check_mae_closed_form,
    event_frequencies,
    aer_event,
    report_estimate,
)
from .sweep import (
    SweepSpec,
    TRule,
    ParetoPoint,
    run_sweep,
    pareto_front,
    reports_to_csv,
    reports_to_json,
)
from .imagedemo import (
    GrayImage,
    QualityScore,
    load_pgm,
    save_pgm,
    square_image,
    score,
)

__version__ = "0.1.0"
__all__ = [
    # Errors
    "SegmulError",
    "ConfigError",
    "WidthMismatchError",
    "DistributionError",
    "CeilingError",
    "RegimeError",
    "ImageFormatError",
    # Models
    "MAX_WIDTH",
    "Operand",
    "Product",
    "MultiplierConfig",
    "CycleTrace",
    "mul_reference",
    "mul_accurate_sequential",
    "mul_approx_sequential",
    "trace_accurate",
    "trace_approx",
    "product_from_trace",
    "product_from_approx_trace",
    "render_trace",
    # Metrics
    "InputDistribution",
    "Method",
    "ErrorReport",
    "MaxErrorProbability",
    "error_distance",
    "signed_error_distance",
    "report_exhaustive",
    "ber_exhaustive",
    "max_error_probability",
    "first_erroneous_bit",
    "mae_witness",
    "ed_histogram",
    "med_from_histogram",
    "SamplingPlan",
    "IntervalBounds",
    "MonteCarloResult",
    "report_monte_carlo",
    "sample_operand",
    # Estimators
    "ProbabilityTable",
    "mae_closed_form",
    "propagate_probabilities",
    "er_accumulation",
    "er_estimate",
    "max_error_probability_estimate",
    "inclusion_exclusion_check",
    "check_mae_closed_form",
    "event_frequencies",
    "aer_event",
    "report_estimate",
    # Sweeps
    "SweepSpec",
    "TRule",
    "ParetoPoint",
    "run_sweep",
    "pareto_front",
    "reports_to_csv",
    "reports_to_json",
    # Image demo
    "GrayImage",
    "QualityScore",
    "load_pgm",
    "save_pgm",
    "square_image",
    "score",
]
