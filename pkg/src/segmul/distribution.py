"""
Operand distributions.

File format (plain text)::

    n=<width>
    <probability of value 0>
    <probability of value 1>
    ...                      (2^n lines)

A file is rejected unless its probabilities sum to 1 within 1e-9.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import DistributionError

PMF_TOLERANCE = 1e-9

# Explicit tables beyond this width do not fit a desk machine.
MAX_TABLE_WIDTH = 24


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """
    Probability mass function over n-bit operand values.

    ``pmf`` is None for the uniform distribution, which every evaluator
    handles on an exact integer fast path.
    """
    width: int
    pmf: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.width < 1:
            raise DistributionError(f"width={self.width} must be positive")
        if self.pmf is None:
            return
        if self.width > MAX_TABLE_WIDTH:
            raise DistributionError(
                f"explicit pmf for width={self.width} exceeds {MAX_TABLE_WIDTH} bits")
        pmf = np.array(self.pmf, dtype=np.float64)
        if pmf.shape != (1 << self.width,):
            raise DistributionError(
                f"pmf has {pmf.size} entries, expected 2^{self.width}={1 << self.width}")
        if not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise DistributionError("pmf entries must be finite and non-negative")
        total = float(np.sum(pmf))
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise DistributionError(f"pmf sums to {total!r}, not 1")
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def uniform(cls, width: int) -> "InputDistribution":
        return cls(width)

    @classmethod
    def point_mass(cls, width: int, value: int) -> "InputDistribution":
        if not 0 <= value < (1 << width):
            raise DistributionError(f"value={value} does not fit in {width} bits")
        pmf = np.zeros(1 << width)
        pmf[value] = 1.0
        return cls(width, pmf)

    @classmethod
    def from_pmf(cls, width: int, values: Sequence[float]) -> "InputDistribution":
        return cls(width, np.asarray(values, dtype=np.float64))

    @property
    def is_uniform(self) -> bool:
        return self.pmf is None

    def probability(self, value: int) -> float:
        if not 0 <= value < (1 << self.width):
            return 0.0
        if self.pmf is None:
            return 2.0 ** -self.width
        return float(self.pmf[value])

    def weights(self, values: np.ndarray) -> np.ndarray:
        """Probabilities of the given operand values, as float64."""
        if self.pmf is None:
            return np.full(np.shape(values), 2.0 ** -self.width)
        return self.pmf[np.asarray(values, dtype=np.int64)]

    def cdf(self) -> np.ndarray:
        if self.pmf is None:
            raise DistributionError("uniform distribution has no explicit cdf")
        cdf = np.cumsum(self.pmf)
        cdf[-1] = 1.0
        return cdf

    def bit_probabilities(self) -> List[float]:
        """Marginal probability that each operand bit is 1, LSB first."""
        if self.pmf is None:
            return [0.5] * self.width
        values = np.arange(1 << self.width, dtype=np.int64)
        return [float(np.sum(self.pmf[((values >> i) & 1) == 1])) for i in range(self.width)]

    # ── File format ─────────────────────────────────────────────────────────

    @classmethod
    def load(cls, path: Union[str, Path]) -> "InputDistribution":
        """Read a distribution file."""
        lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or not lines[0].startswith("n="):
            raise DistributionError(f"{path}: first line must be 'n=<width>'")
        try:
            width = int(lines[0][2:])
            values = [float(ln) for ln in lines[1:]]
        except ValueError as e:
            raise DistributionError(f"{path}: {e}") from None
        return cls.from_pmf(width, values)

    def save(self, path: Union[str, Path]) -> None:
        """Write the distribution in the file format above."""
        size = 1 << self.width
        if self.pmf is None and self.width > MAX_TABLE_WIDTH:
            raise DistributionError(f"width={self.width} too wide for an explicit file")
        pmf = self.pmf if self.pmf is not None else np.full(size, 2.0 ** -self.width)
        body = "\n".join(repr(float(p)) for p in pmf)
        Path(path).write_text(f"n={self.width}\n{body}\n", encoding="utf-8")

    def __repr__(self) -> str:
        kind = "uniform" if self.pmf is None else "table"
        return f"InputDistribution(width={self.width}, {kind})"
