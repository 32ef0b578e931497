"""Container for Monte Carlo point estimates with a 95% interval."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

Z95 = 1.96


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A replication average and its 95% confidence half-width.

    ``log_value`` is carried separately because several estimators here
    (powers of the Laplace transform) routinely fall below 1e-300.
    """

    value: float
    half_width: float
    log_value: float
    R: int
    seed: Optional[int] = None
    degenerate: bool = False

    @property
    def std_error(self) -> float:
        return self.half_width / Z95

    @property
    def rel_err(self) -> float:
        if self.value == 0.0:
            return math.inf
        return self.half_width / self.value

    def contains(self, target: float, k: float = 1.0) -> bool:
        """True if ``target`` lies within ``k`` half-widths of the estimate."""
        return abs(self.value - target) <= k * self.half_width

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "half_width": self.half_width,
            "log_value": self.log_value,
            "R": self.R,
            "seed": self.seed,
        }
