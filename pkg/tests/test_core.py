"""Tests for segmul.core: operands, configs, multipliers and traces."""

import numpy as np
import pytest

from segmul import (
    ConfigError,
    MultiplierConfig,
    Operand,
    Product,
    WidthMismatchError,
    mul_accurate_sequential,
    mul_approx_sequential,
    mul_reference,
    product_from_approx_trace,
    product_from_trace,
    render_trace,
    trace_accurate,
    trace_approx,
)
from segmul import datapath
from segmul.metrics import operand_pairs, shards


def _ops(a, b, n):
    return Operand(a, n), Operand(b, n)


def _all_pairs(n):
    for a in range(1 << n):
        for b in range(1 << n):
            yield Operand(a, n), Operand(b, n)


class TestTypes:
    def test_operand_range(self):
        with pytest.raises(ConfigError):
            Operand(16, 4)
        with pytest.raises(ConfigError):
            Operand(-1, 4)
        with pytest.raises(ConfigError):
            Operand(0, 65)

    def test_operand_bits_lsb_first(self):
        assert Operand(11, 4).bits() == (1, 1, 0, 1)

    def test_product_binary(self):
        assert Product(143, 8).to_binary() == "10001111"
        assert Product(159, 8).bits()[4] == 1

    def test_config_ranges(self):
        with pytest.raises(ConfigError):
            MultiplierConfig(n=4, t=0)
        with pytest.raises(ConfigError):
            MultiplierConfig(n=4, t=4)
        with pytest.raises(ConfigError):
            MultiplierConfig(n=65, t=2)
        MultiplierConfig(n=64, t=63)

    def test_config_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            MultiplierConfig(n=8, t=9)

    def test_halved(self):
        cfg = MultiplierConfig.halved(8)
        assert cfg.t == 4
        assert cfg.fix_to_1 is True

    def test_config_round_trip(self):
        cfg = MultiplierConfig(n=8, t=3, fix_to_1=False)
        assert MultiplierConfig.from_dict(cfg.to_dict()) == cfg


class TestReference:
    def test_worked_example(self):
        assert mul_reference(*_ops(11, 13, 4)).value == 143

    def test_zero(self):
        assert mul_reference(*_ops(0, 9, 4)).value == 0

    def test_max(self):
        p = mul_reference(*_ops(15, 15, 4))
        assert p.value == 225
        assert p.width == 8

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatchError):
            mul_reference(Operand(3, 4), Operand(3, 5))


class TestAccurateSequential:
    def test_worked_example(self):
        assert mul_accurate_sequential(*_ops(11, 13, 4)).value == 143

    @pytest.mark.parametrize("n", [1, 2, 7, 16, 64])
    def test_identity(self, n):
        assert mul_accurate_sequential(*_ops(1, 1, n)).value == 1

    @pytest.mark.parametrize("n", range(1, 7))
    def test_exhaustive_scalar(self, n):
        for a, b in _all_pairs(n):
            assert mul_accurate_sequential(a, b) == mul_reference(a, b)

    @pytest.mark.parametrize("n", range(7, 13))
    def test_exhaustive_lanes(self, n):
        for start, stop in shards(1 << (2 * n)):
            a, b = operand_pairs(n, start, stop)
            assert np.array_equal(datapath.run(a, b, n).product, a * b)

    def test_wide_operands(self):
        n = 64
        a, b = (1 << 64) - 1, (1 << 63) + 12345
        assert mul_accurate_sequential(*_ops(a, b, n)).value == a * b


class TestApproxSequential:
    def test_worked_example(self):
        cfg = MultiplierConfig(n=4, t=2)
        p_hat = mul_approx_sequential(*_ops(11, 13, 4), cfg)
        assert p_hat.value == 159
        assert p_hat.to_binary() == "10011111"

    def test_fix_setting_irrelevant_for_worked_example(self):
        cfg = MultiplierConfig(n=4, t=2, fix_to_1=False)
        assert mul_approx_sequential(*_ops(11, 13, 4), cfg).value == 159

    @pytest.mark.parametrize("fix", [True, False])
    def test_zero(self, fix):
        cfg = MultiplierConfig(n=8, t=3, fix_to_1=fix)
        for b in (0, 1, 200, 255):
            assert mul_approx_sequential(*_ops(0, b, 8), cfg).value == 0

    def test_fix_to_1_fires(self):
        # a=11, b=9: the last LSP carry-out is lost, so bits 0..5 are forced.
        a, b = _ops(11, 9, 4)
        assert mul_approx_sequential(a, b, MultiplierConfig(4, 2, fix_to_1=True)).value == 127
        assert mul_approx_sequential(a, b, MultiplierConfig(4, 2, fix_to_1=False)).value == 67

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatchError):
            mul_approx_sequential(*_ops(3, 3, 5), MultiplierConfig(n=4, t=2))

    @pytest.mark.parametrize("fix", [True, False])
    def test_matches_case_equations(self, fix):
        cfg = MultiplierConfig(n=8, t=4, fix_to_1=fix)
        rng = np.random.Generator(np.random.PCG64(2024))
        for a, b in rng.integers(0, 256, size=(100, 2)):
            a, b = _ops(int(a), int(b), 8)
            expected = product_from_approx_trace(trace_approx(a, b, cfg), cfg)
            assert mul_approx_sequential(a, b, cfg) == expected

    @pytest.mark.parametrize("t", [1, 3, 5])
    def test_degenerate_split_is_accurate(self, t):
        cfg = MultiplierConfig(n=6, t=t, segmented=False)
        for a, b in _all_pairs(6):
            assert mul_approx_sequential(a, b, cfg) == mul_reference(a, b)

    @pytest.mark.parametrize("n,t", [(6, 2), (6, 3), (8, 2), (8, 3), (8, 4), (10, 5)])
    def test_low_bits_exact_without_fix(self, n, t):
        cfg = MultiplierConfig(n=n, t=t, fix_to_1=False)
        a, b = operand_pairs(n, 0, 1 << (2 * n))
        approx = datapath.run(a, b, n, t).product
        mask = (1 << (t + 1)) - 1
        assert np.array_equal(approx & mask, (a * b) & mask)
        assert cfg.split == t

    def test_no_lost_carry_means_exact(self):
        n, t = 6, 3
        a, b = operand_pairs(n, 0, 1 << (2 * n))
        run = datapath.run(a, b, n, t, fix_to_1=True, history=True)
        clean = np.logical_not(np.any(np.stack(run.lsp_carries), axis=0))
        assert np.count_nonzero(clean) > 0
        assert np.array_equal(run.product[clean], (a * b)[clean])


class TestTraces:
    def test_accurate_cycles(self):
        trace = trace_accurate(*_ops(11, 13, 4))
        assert len(trace) == 4
        assert [c.sum_value for c in trace] == [11, 5, 13, 17]
        assert product_from_trace(trace).value == 143

    def test_approx_cycles(self):
        cfg = MultiplierConfig(n=4, t=2)
        trace = trace_approx(*_ops(11, 13, 4), cfg)
        assert [c.sum_value for c in trace] == [11, 5, 9, 19]
        assert product_from_approx_trace(trace, cfg).value == 159

    def test_delayed_carry_consumed_next_cycle(self):
        cfg = MultiplierConfig(n=4, t=2)
        trace = trace_approx(*_ops(11, 13, 4), cfg)
        assert trace[2].lsp_carry_out == 1
        assert trace[3].carry_ff == 1
        assert trace[3].lsp_carry_out == 0
        assert not trace[3].fix_applied

    def test_zero_trace(self):
        for trace in (trace_accurate(*_ops(0, 0, 5)),
                      trace_approx(*_ops(0, 0, 5), MultiplierConfig(5, 2))):
            for cycle in trace:
                assert not any(cycle.sum_bits)
                assert not any(cycle.carry_bits)

    def test_register_b_sheds_multiplicand(self):
        trace = trace_accurate(*_ops(11, 13, 4))
        assert [c.reg_b_snapshot[0] for c in trace] == [1, 0, 1, 1]
        assert all(len(c.reg_b_snapshot) == 4 for c in trace)

    def test_fix_applied_only_in_last_cycle(self):
        cfg = MultiplierConfig(n=5, t=2, fix_to_1=True)
        fired = 0
        for a, b in _all_pairs(5):
            trace = trace_approx(a, b, cfg)
            assert not any(c.fix_applied for c in trace[:-1])
            assert trace[-1].fix_applied == bool(trace[-1].lsp_carry_out)
            fired += trace[-1].fix_applied
        assert fired > 0

    @pytest.mark.parametrize("t", [1, 2, 3, 4])
    @pytest.mark.parametrize("fix", [True, False])
    def test_trace_product_consistency(self, t, fix):
        cfg = MultiplierConfig(n=5, t=t, fix_to_1=fix)
        for a, b in _all_pairs(5):
            assert product_from_approx_trace(trace_approx(a, b, cfg), cfg) == \
                mul_approx_sequential(a, b, cfg)

    def test_accurate_trace_consistency(self):
        for a, b in _all_pairs(5):
            assert product_from_trace(trace_accurate(a, b)) == mul_reference(a, b)

    def test_trace_to_json(self):
        trace = trace_accurate(*_ops(3, 3, 2))
        assert '"cycle": 0' in trace[0].to_json()


class TestRender:
    def test_rows_per_cycle(self):
        cfg = MultiplierConfig(n=4, t=2)
        text = render_trace(trace_approx(*_ops(11, 13, 4), cfg), cfg)
        lines = text.splitlines()
        assert len(lines) == 4
        assert "|" in lines[0]
        assert "cout" in lines[2]
        assert "ff=1" in lines[3]

    def test_accurate_rendering_has_no_split(self):
        text = render_trace(trace_accurate(*_ops(11, 13, 4)))
        assert "|" not in text
        assert "A=01011" in text.splitlines()[0]
