"""
Register-transfer model of the sequential multiplier.

One clock cycle adds the partial product ``a AND b_j`` to register A shifted
right by one. In segmented mode the adder is cut at position ``t``: the LSP
adder (bits ``0..t-1``) never receives a carry-in, its carry-out is latched in
the carry flip-flop and enters the MSP adder (bits ``t..n-1``) one cycle later.
Register B sheds one multiplicand bit per cycle and receives the sum LSB.

The kernel is written against plain integer operators so the same code runs on
Python ints (any width up to 64 bits) and on numpy lanes, which is how the
exhaustive and Monte-Carlo evaluators push millions of operand pairs through it.
"""

from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np

# Widest operand for which int64 lanes hold the full 2n-bit product.
INT64_LANE_WIDTH = 31


@dataclass
class DatapathRun:
    """
    Result of one pass through the datapath.

    Attributes:
        product: Assembled 2n-bit product (int or lane array)
        lsp_carries: LSP carry-out per cycle, index j (history runs only)
        sums: Accumulated (n+1)-bit sum word S^j per cycle (history runs only)
        fixed: Lanes where fix-to-1 fired (int or lane array of 0/1)
    """
    product: Any
    lsp_carries: List[Any] = field(default_factory=list)
    sums: List[Any] = field(default_factory=list)
    fixed: Any = 0


def as_lanes(values: Any, n: int) -> np.ndarray:
    """Pack operand values into lanes wide enough for n-bit operands."""
    if n <= INT64_LANE_WIDTH:
        return np.asarray(values, dtype=np.int64)
    return np.asarray([int(v) for v in np.ravel(values)], dtype=object)


def run(
    a: Any,
    b: Any,
    n: int,
    t: Optional[int] = None,
    fix_to_1: bool = False,
    history: bool = False,
) -> DatapathRun:
    """
    Clock the multiplier through its n cycles.

    Args:
        a: Multiplier (int or lanes)
        b: Multiplicand (int or lanes, same shape as a)
        n: Operand width
        t: Splitting point; None evaluates one unsegmented carry chain
        fix_to_1: Force the n+t LSBs to 1 when the last LSP carry-out is lost
        history: Keep per-cycle sums and LSP carry-outs

    Returns:
        DatapathRun with the product and, if requested, the cycle history
    """
    zero = a & 0
    mask_t = (1 << t) - 1 if t is not None else 0

    # Cycle 0: register A cleared, S^0 = a AND b_0, no carries.
    reg_b = b
    acc = a * (reg_b & 1)
    carry_ff = zero

    out = DatapathRun(product=zero)
    if history:
        out.sums.append(acc)
        out.lsp_carries.append(zero)

    for _ in range(1, n):
        reg_b = (reg_b >> 1) | ((acc & 1) << (n - 1))
        x = acc >> 1
        pp = a * (reg_b & 1)

        if t is None:
            acc = x + pp
            carry_out = zero
        else:
            low = (x & mask_t) + (pp & mask_t)
            carry_out = low >> t
            high = (x >> t) + (pp >> t) + carry_ff
            acc = (low & mask_t) | (high << t)
            carry_ff = carry_out

        if history:
            out.sums.append(acc)
            out.lsp_carries.append(carry_out)

    product = (acc << (n - 1)) | (reg_b >> 1)

    if t is not None and fix_to_1:
        product = product | (((1 << (n + t)) - 1) * carry_ff)
        out.fixed = carry_ff

    out.product = product
    return out


def lsp_carry_history(a: Any, b: Any, n: int, t: int) -> List[Any]:
    """
    Per-cycle carry-out of bit position t-1, without any delay.

    Evaluates the unsegmented chain and reports the carry leaving position
    t-1 each cycle. Used for the degenerate (accurate) configuration, where
    that carry exists but is consumed in the same cycle.
    """
    zero = a & 0
    mask_t = (1 << t) - 1
    reg_b = b
    acc = a * (reg_b & 1)
    carries = [zero]
    for _ in range(1, n):
        reg_b = (reg_b >> 1) | ((acc & 1) << (n - 1))
        x = acc >> 1
        pp = a * (reg_b & 1)
        carries.append(((x & mask_t) + (pp & mask_t)) >> t)
        acc = x + pp
    return carries
