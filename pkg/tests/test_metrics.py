"""Tests for segmul.metrics: error distance, exhaustive reports, MAE witness."""

import json

import numpy as np
import pytest

from segmul import (
    CeilingError,
    ConfigError,
    ErrorReport,
    InputDistribution,
    Method,
    MultiplierConfig,
    Operand,
    Product,
    WidthMismatchError,
    ber_exhaustive,
    ed_histogram,
    error_distance,
    first_erroneous_bit,
    mae_witness,
    max_error_probability,
    med_from_histogram,
    mul_approx_sequential,
    mul_reference,
    report_exhaustive,
    signed_error_distance,
)
from segmul.metrics import (
    MetricAccumulator,
    check_ceiling,
    evaluate_lanes,
    map_ordered,
    operand_pairs,
    shards,
)


def _ed(a, b, cfg):
    x, y = Operand(a, cfg.n), Operand(b, cfg.n)
    return error_distance(mul_reference(x, y), mul_approx_sequential(x, y, cfg))


# Wrong-bit counts per product bit over all 2^16 pairs, n=8, t=4, fix on.
BER_COUNTS_8_4 = [
    10613, 8657, 7720, 7289, 7190, 12173, 15606, 18417,
    19949, 20533, 20643, 15078, 8098, 3744, 1556, 480,
]


@pytest.fixture(scope="module")
def report_8_4():
    return report_exhaustive(MultiplierConfig(n=8, t=4))


# ── Error distance ──────────────────────────────────────────────────────────

class TestErrorDistance:
    def test_worked_example(self):
        assert error_distance(Product(143, 8), Product(159, 8)) == -16
        assert signed_error_distance(Product(143, 8), Product(159, 8)) == -16

    def test_zero_when_equal(self):
        assert error_distance(Product(99, 8), Product(99, 8)) == 0

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatchError):
            error_distance(Product(1, 8), Product(1, 10))
        with pytest.raises(WidthMismatchError):
            signed_error_distance(Product(1, 8), Product(1, 10))

    def test_bitwise_form_matches_subtraction(self):
        cfg = MultiplierConfig(n=6, t=3)
        for a in range(64):
            for b in range(64):
                x, y = Operand(a, 6), Operand(b, 6)
                p, p_hat = mul_reference(x, y), mul_approx_sequential(x, y, cfg)
                assert signed_error_distance(p, p_hat) == error_distance(p, p_hat)


# ── Exhaustive reports ──────────────────────────────────────────────────────

class TestReportExhaustive:
    def test_basic_shape(self, report_8_4):
        assert report_8_4.method is Method.EXHAUSTIVE
        assert report_8_4.sample_count == 1 << 16
        assert len(report_8_4.ber) == 16
        assert report_8_4.seed is None

    def test_invariants(self, report_8_4):
        r = report_8_4
        assert 0.0 < r.er <= 1.0
        assert r.er >= max(r.ber)
        assert r.med_abs >= abs(r.med_signed)
        assert r.mae >= r.med_abs
        assert r.nmed == pytest.approx(r.med_abs / 255 ** 2)
        assert r.mred_global == r.nmed
        assert r.mred_conventional >= 0.0

    def test_frozen_values(self, report_8_4):
        total = 1 << 16
        r = report_8_4
        assert r.er == 42836 / total == 0.65362548828125
        assert r.mae == 3895
        assert r.med_signed == -33802495 / total
        assert r.med_abs == 38233655 / total
        assert r.nmed == 38233655 / (total * 255 ** 2)
        assert [round(p * total) for p in r.ber] == BER_COUNTS_8_4

    def test_er_is_fraction_of_wrong_products(self, report_8_4):
        cfg = MultiplierConfig(n=8, t=4)
        a, b = operand_pairs(8, 0, 1 << 16)
        exact, approx = evaluate_lanes(cfg, a, b)
        wrong = int(np.count_nonzero(exact != approx))
        assert report_8_4.er == wrong / (1 << 16)

    def test_accurate_mode_is_error_free(self):
        r = report_exhaustive(MultiplierConfig(n=6, t=3, segmented=False))
        assert r.er == 0.0
        assert r.mae == 0
        assert r.med_abs == 0.0
        assert not any(r.ber)

    @pytest.mark.parametrize("n,t", [(6, 2), (6, 3), (8, 2), (8, 3), (8, 4)])
    def test_low_bits_exact_without_fix(self, n, t):
        r = report_exhaustive(MultiplierConfig(n=n, t=t, fix_to_1=False))
        assert all(r.ber[k] == 0.0 for k in range(t + 1))
        assert r.ber[t + 1] > 0.0

    def test_first_erroneous_bit(self):
        assert first_erroneous_bit(MultiplierConfig(n=8, t=4, fix_to_1=False)) == 5
        assert first_erroneous_bit(MultiplierConfig(n=6, t=3, segmented=False)) is None

    def test_ber_exhaustive(self, report_8_4):
        cfg = MultiplierConfig(n=8, t=4)
        assert ber_exhaustive(cfg, 9) == report_8_4.ber[9]
        assert ber_exhaustive(MultiplierConfig(n=4, t=2, fix_to_1=False), 0) == 0.0
        with pytest.raises(ConfigError):
            ber_exhaustive(cfg, 16)

    def test_fix_to_1_lowers_mean_error(self, report_8_4):
        no_fix = report_exhaustive(MultiplierConfig(n=8, t=4, fix_to_1=False))
        assert report_8_4.med_abs <= no_fix.med_abs

    def test_workers_do_not_change_report(self):
        cfg = MultiplierConfig(n=11, t=5)
        one = report_exhaustive(cfg, workers=1)
        four = report_exhaustive(cfg, workers=4)
        assert one.to_json() == four.to_json()

    def test_repeatable(self):
        cfg = MultiplierConfig(n=6, t=2, fix_to_1=False)
        assert report_exhaustive(cfg).to_json() == report_exhaustive(cfg).to_json()


class TestDistributions:
    def test_point_mass(self):
        cfg = MultiplierConfig(n=4, t=2)
        r = report_exhaustive(
            cfg,
            dist_a=InputDistribution.point_mass(4, 11),
            dist_b=InputDistribution.point_mass(4, 9),
        )
        assert r.er == 1.0
        assert r.med_signed == float(_ed(11, 9, cfg)) == -28.0
        assert r.mae == 28

    def test_point_mass_without_error(self):
        cfg = MultiplierConfig(n=4, t=2)
        r = report_exhaustive(
            cfg,
            dist_a=InputDistribution.point_mass(4, 0),
            dist_b=InputDistribution.point_mass(4, 13),
        )
        assert r.er == 0.0
        assert r.mae == 0

    def test_explicit_uniform_matches_fast_path(self):
        cfg = MultiplierConfig(n=6, t=3)
        table = InputDistribution.from_pmf(6, np.full(64, 1 / 64))
        weighted = report_exhaustive(cfg, dist_a=table, dist_b=table)
        plain = report_exhaustive(cfg)
        assert weighted.er == pytest.approx(plain.er, abs=1e-12)
        assert weighted.med_abs == pytest.approx(plain.med_abs, rel=1e-12)
        assert weighted.mae == plain.mae

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatchError):
            report_exhaustive(MultiplierConfig(n=6, t=3), dist_a=InputDistribution.uniform(5))


# ── Ceiling ─────────────────────────────────────────────────────────────────

class TestCeiling:
    def test_default_ceiling(self):
        with pytest.raises(CeilingError):
            report_exhaustive(MultiplierConfig(n=15, t=7))

    def test_allow_large_limit(self):
        assert check_ceiling(16, allow_large=True) == 16
        with pytest.raises(CeilingError):
            check_ceiling(17, allow_large=True)
        with pytest.raises(ConfigError):
            check_ceiling(10, ceiling=20)

    def test_lower_ceiling(self):
        with pytest.raises(CeilingError):
            report_exhaustive(MultiplierConfig(n=8, t=4), ceiling=6)


# ── MAE witness ─────────────────────────────────────────────────────────────

class TestMaeWitness:
    def test_witness_reproduces_mae(self):
        cfg = MultiplierConfig(n=6, t=3)
        mae, (a, b) = mae_witness(cfg)
        assert abs(_ed(a, b, cfg)) == mae

    def test_fix_to_1_can_exceed_lost_carry_bound(self):
        # 2^(n+t-1) - 2^(t+1) = 24 here; fix-to-1 on (11, 9) already gives 28.
        cfg = MultiplierConfig(n=4, t=2)
        assert _ed(11, 9, cfg) == -28
        assert mae_witness(cfg) == (45, (15, 14))
        assert _ed(15, 14, cfg) == -45

    def test_without_fix_the_lost_carry_dominates(self):
        mae, (a, b) = mae_witness(MultiplierConfig(n=8, t=4, fix_to_1=False))
        assert mae == 2 ** 11
        assert abs(_ed(a, b, MultiplierConfig(n=8, t=4, fix_to_1=False))) == mae

    def test_error_free_design(self):
        assert mae_witness(MultiplierConfig(n=5, t=2, segmented=False)) == (0, None)


# ── Histogram ───────────────────────────────────────────────────────────────

class TestHistogram:
    def test_sums_to_one(self):
        hist = ed_histogram(MultiplierConfig(n=6, t=3))
        assert sum(hist.values()) == pytest.approx(1.0)
        assert list(hist) == sorted(hist)

    def test_med_from_histogram(self):
        cfg = MultiplierConfig(n=6, t=3)
        hist = ed_histogram(cfg)
        report = report_exhaustive(cfg)
        assert med_from_histogram(hist) == pytest.approx(report.med_abs)
        assert med_from_histogram(hist, absolute=False) == pytest.approx(report.med_signed)

    def test_accurate_mode(self):
        assert ed_histogram(MultiplierConfig(n=5, t=2, segmented=False)) == {0: 1.0}


# ── Maximum-error event ─────────────────────────────────────────────────────

class TestMaxErrorProbability:
    def test_fields(self):
        result = max_error_probability(MultiplierConfig(n=6, t=3))
        assert 0.0 < result.achieving_fraction <= 1.0
        assert 0.0 <= result.event_probability <= 1.0
        assert result.difference == result.achieving_fraction - result.event_probability
        assert json.loads(json.dumps(result.to_dict()))["mae"] == result.mae

    def test_frozen_values(self):
        result = max_error_probability(MultiplierConfig(n=8, t=4))
        assert result.mae == 3895
        assert result.achieving_fraction == 1 / 65536 == 1.52587890625e-05
        assert result.event_probability == 10349 / 65536 == 0.1579132080078125
        assert result.difference == result.achieving_fraction - result.event_probability

    def test_accurate_mode(self):
        result = max_error_probability(MultiplierConfig(n=6, t=3, segmented=False))
        assert result.mae == 0
        assert result.achieving_fraction == 0.0


# ── Accumulator and sharding ────────────────────────────────────────────────

class TestAccumulator:
    def _acc(self, cfg, start, stop):
        a, b = operand_pairs(cfg.n, start, stop)
        acc = MetricAccumulator(n=cfg.n)
        acc.add(a, b, *evaluate_lanes(cfg, a, b))
        return acc

    def test_merge_order_independent(self):
        cfg = MultiplierConfig(n=6, t=3)
        left, right = self._acc(cfg, 0, 2000), self._acc(cfg, 2000, 4096)
        ab = left.merge(right).to_report(cfg, Method.EXHAUSTIVE)
        ba = right.merge(left).to_report(cfg, Method.EXHAUSTIVE)
        assert ab == ba

    def test_merge_rejects_mixed_kinds(self):
        with pytest.raises(ConfigError):
            MetricAccumulator(n=4).merge(MetricAccumulator(n=5))

    def test_empty_report(self):
        with pytest.raises(ConfigError):
            MetricAccumulator(n=4).to_report(MultiplierConfig(n=4, t=2), Method.EXHAUSTIVE)

    def test_shards_cover_range(self):
        parts = shards(10, bits=2)
        assert parts == [(0, 4), (4, 8), (8, 10)]

    def test_map_ordered(self):
        assert map_ordered(lambda x: x * x, [3, 1, 2], workers=3) == [9, 1, 4]
        with pytest.raises(ConfigError):
            map_ordered(str, [1], workers=0)


class TestReportSerialisation:
    def test_dict_round_trip(self, report_8_4):
        assert ErrorReport.from_dict(report_8_4.to_dict()) == report_8_4

    def test_metric_items_order(self, report_8_4):
        names = [name for name, _ in report_8_4.metric_items()]
        assert names[0] == "er"
        assert names[1] == "ber_0"
        assert names[-1] == "mred_global"
