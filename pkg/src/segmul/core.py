"""
segmul core - functional models of the accurate and approximate sequential
multipliers.

Two independent evaluations live here:

- ``mul_accurate_sequential`` / ``mul_approx_sequential`` clock the
  register-transfer datapath (``segmul.datapath``).
- ``trace_accurate`` / ``trace_approx`` evaluate the bit-level case equations
  for every sum bit S_i^j and carry bit C_i^j and record them per cycle.

Reassembling a product from a trace must reproduce the datapath result.
"""

from dataclasses import asdict, dataclass
import json
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import datapath
from .errors import ConfigError, WidthMismatchError

MAX_WIDTH = 64


@dataclass(frozen=True)
class Operand:
    """
    Unsigned n-bit operand.

    Attributes:
        value: Unsigned integer value
        width: Bit count n, 1 <= n <= 64
    """
    value: int
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ConfigError(f"width={self.width} outside [1, {MAX_WIDTH}]")
        if not 0 <= self.value < (1 << self.width):
            raise ConfigError(f"value={self.value} does not fit in {self.width} bits")

    def bit(self, i: int) -> int:
        return (self.value >> i) & 1

    def bits(self) -> Tuple[int, ...]:
        """Bits, least significant first."""
        return tuple(self.bit(i) for i in range(self.width))


@dataclass(frozen=True)
class Product:
    """2n-bit product."""
    value: int
    width: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.width):
            raise ConfigError(f"product {self.value} does not fit in {self.width} bits")

    def bit(self, r: int) -> int:
        return (self.value >> r) & 1

    def bits(self) -> Tuple[int, ...]:
        return tuple(self.bit(r) for r in range(self.width))

    def to_binary(self) -> str:
        return format(self.value, f"0{self.width}b")


@dataclass(frozen=True)
class MultiplierConfig:
    """
    Design point of the approximate multiplier.

    Attributes:
        n: Operand bitwidth
        t: Splitting point; the LSP adder covers bits 0..t-1
        fix_to_1: Force the n+t product LSBs to 1 when the final LSP
            carry-out would be lost
        segmented: False evaluates position t under the general case, which
            reproduces the accurate multiplier (degenerate mode)
    """
    n: int
    t: int
    fix_to_1: bool = True
    segmented: bool = True

    def __post_init__(self):
        if not 2 <= self.n <= MAX_WIDTH:
            raise ConfigError(f"n={self.n} outside [2, {MAX_WIDTH}]")
        if not 1 <= self.t <= self.n - 1:
            raise ConfigError(f"t={self.t} outside [1, {self.n - 1}]")

    @classmethod
    def halved(cls, n: int, fix_to_1: bool = True) -> "MultiplierConfig":
        """Halved-carry-chain configuration, t = n/2."""
        return cls(n=n, t=max(1, n // 2), fix_to_1=fix_to_1)

    @property
    def split(self) -> Optional[int]:
        """Splitting point seen by the datapath (None when degenerate)."""
        return self.t if self.segmented else None

    @property
    def label(self) -> str:
        mode = "fix" if self.fix_to_1 else "nofix"
        if not self.segmented:
            mode = "accurate"
        return f"n={self.n},t={self.t},{mode}"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MultiplierConfig":
        return cls(**data)


@dataclass(frozen=True)
class CycleTrace:
    """
    State of the datapath in clock cycle j.

    All bit tuples are least significant first.

    Attributes:
        cycle: Clock cycle j, 0..n-1
        sum_bits: S_i^j for i = 0..n
        carry_bits: C_i^j for i = 0..n-1
        reg_b_snapshot: Register B during the cycle (bit 0 is b_j)
        carry_ff: Carry flip-flop consumed at position t (C_{t-1}^{j-1})
        lsp_carry_out: C_{t-1}^j
        fix_applied: Fix-to-1 fired (last cycle only)
    """
    cycle: int
    sum_bits: Tuple[int, ...]
    carry_bits: Tuple[int, ...]
    reg_b_snapshot: Tuple[int, ...]
    carry_ff: int = 0
    lsp_carry_out: int = 0
    fix_applied: bool = False

    @property
    def sum_value(self) -> int:
        return sum(bit << i for i, bit in enumerate(self.sum_bits))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ── Reference and datapath multiplication ───────────────────────────────────

def _check_widths(a: Operand, b: Operand, n: Optional[int] = None) -> int:
    if a.width != b.width:
        raise WidthMismatchError(f"operand widths differ: {a.width} != {b.width}")
    if n is not None and a.width != n:
        raise WidthMismatchError(f"operand width {a.width} != configured n={n}")
    return a.width


def mul_reference(a: Operand, b: Operand) -> Product:
    """Exact integer product, the oracle for every accuracy check."""
    n = _check_widths(a, b)
    return Product(a.value * b.value, 2 * n)


def mul_accurate_sequential(a: Operand, b: Operand) -> Product:
    """Shift-and-add product with a single unsegmented carry chain."""
    n = _check_widths(a, b)
    run = datapath.run(a.value, b.value, n)
    return Product(int(run.product), 2 * n)


def mul_approx_sequential(a: Operand, b: Operand, cfg: MultiplierConfig) -> Product:
    """
    Product of the segmented-carry multiplier.

    The LSP carry-out of cycle j enters the MSP adder at position t in cycle
    j+1. With fix_to_1 enabled and a carry-out pending after the last cycle,
    the n+t least significant product bits are forced to 1.
    """
    n = _check_widths(a, b, cfg.n)
    run = datapath.run(a.value, b.value, n, cfg.split, cfg.fix_to_1)
    return Product(int(run.product), 2 * n)


# ── Bit-level case equations ────────────────────────────────────────────────

def _evaluate(
    a_bits: Sequence[int],
    b_bits: Sequence[int],
    n: int,
    t: Optional[int],
) -> List[Tuple[List[int], List[int]]]:
    """Evaluate S_i^j and C_i^j per cycle; t=None is the accurate chain."""
    cycles = []
    s_prev: List[int] = []
    c_prev: List[int] = []
    for j in range(n):
        if j == 0:
            s = [a_bits[i] & b_bits[0] for i in range(n)] + [0]
            c = [0] * n
        else:
            s = [0] * (n + 1)
            c = [0] * n
            for i in range(n):
                g = a_bits[i] & b_bits[j]
                x = s_prev[i + 1]
                if i == 0:
                    s[i] = x ^ g
                    c[i] = x & g
                    continue
                # Position t takes the carry latched in the previous cycle.
                cin = c_prev[i - 1] if i == t else c[i - 1]
                s[i] = x ^ g ^ cin
                c[i] = ((x ^ g) & cin) | (x & g)
            s[n] = c[n - 1]
        cycles.append((s, c))
        s_prev, c_prev = s, c
    return cycles


def _build_trace(
    a: Operand,
    b: Operand,
    t: Optional[int],
    carry_index: Optional[int],
    fix_to_1: bool,
) -> List[CycleTrace]:
    n = a.width
    a_bits, b_bits = a.bits(), b.bits()
    cycles = _evaluate(a_bits, b_bits, n, t)

    traces = []
    shifted_out: List[int] = []
    for j, (s, c) in enumerate(cycles):
        reg_b = list(b_bits[j:]) + shifted_out
        lsp_out = c[carry_index] if carry_index is not None else 0
        carry_ff = cycles[j - 1][1][t - 1] if (t is not None and j > 0) else 0
        traces.append(CycleTrace(
            cycle=j,
            sum_bits=tuple(s),
            carry_bits=tuple(c),
            reg_b_snapshot=tuple(reg_b),
            carry_ff=carry_ff,
            lsp_carry_out=lsp_out,
            fix_applied=bool(fix_to_1 and t is not None and j == n - 1 and lsp_out),
        ))
        shifted_out = shifted_out + [s[0]]
    return traces


def trace_accurate(a: Operand, b: Operand) -> List[CycleTrace]:
    """Per-cycle sums and carries of the accurate multiplier."""
    _check_widths(a, b)
    return _build_trace(a, b, None, None, False)


def trace_approx(a: Operand, b: Operand, cfg: MultiplierConfig) -> List[CycleTrace]:
    """
    Per-cycle sums and carries of the approximate multiplier.

    In degenerate mode the carry out of position t-1 is still reported as
    lsp_carry_out, but it is consumed in the same cycle and never delayed.
    """
    _check_widths(a, b, cfg.n)
    return _build_trace(a, b, cfg.split, cfg.t - 1, cfg.fix_to_1)


def product_from_trace(trace: Sequence[CycleTrace]) -> Product:
    """Reassemble the product: p_r = S_0^r for r < n-1, S_{r-n+1}^{n-1} above."""
    n = len(trace)
    value = 0
    for r in range(n - 1):
        value |= trace[r].sum_bits[0] << r
    for i, bit in enumerate(trace[-1].sum_bits):
        value |= bit << (n - 1 + i)
    return Product(value, 2 * n)


def product_from_approx_trace(trace: Sequence[CycleTrace], cfg: MultiplierConfig) -> Product:
    """Reassemble the approximate product, applying the fix-to-1 case split."""
    product = product_from_trace(trace)
    if trace[-1].fix_applied:
        return Product(product.value | ((1 << (cfg.n + cfg.t)) - 1), product.width)
    return product


def render_trace(trace: Sequence[CycleTrace], cfg: Optional[MultiplierConfig] = None) -> str:
    """
    Render the trace as rows: cycle, carry flip-flop, register A, register B.

    Register A is printed most significant bit first and split at the LSP
    boundary when a config is given.
    """
    lines = []
    for ct in trace:
        bits = "".join(str(x) for x in reversed(ct.sum_bits))
        if cfg is not None and cfg.segmented:
            cut = len(bits) - cfg.t
            bits = f"{bits[:cut]}|{bits[cut:]}"
        reg_b = "".join(str(x) for x in reversed(ct.reg_b_snapshot))
        flags = []
        if ct.lsp_carry_out:
            flags.append("cout")
        if ct.fix_applied:
            flags.append("fix")
        lines.append(f"{ct.cycle:>3}  ff={ct.carry_ff}  A={bits}  B={reg_b}  {' '.join(flags)}".rstrip())
    return "\n".join(lines)
