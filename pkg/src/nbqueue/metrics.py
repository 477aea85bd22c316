"""Result container shared by every engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

METHODS = ("spitzer", "pollaczek", "roots", "markov", "montecarlo", "classical", "robust")


@dataclass(frozen=True)
class StationaryMetrics:
    """Stationary mean, variance and empty-queue probability of the queue.

    ``err`` maps field names to estimated absolute errors; a field the method
    cannot provide is ``None`` and has no entry in ``err``. ``info`` holds
    method-specific diagnostics (truncation points, node counts, CIs, ...).
    """

    mean: float
    variance: Optional[float]
    p0: float
    method: str
    err: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")

    @property
    def sd(self) -> Optional[float]:
        if self.variance is None:
            return None
        return math.sqrt(max(self.variance, 0.0))

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "mean": self.mean,
            "variance": self.variance,
            "sd": self.sd,
            "p0": self.p0,
            "err": dict(self.err),
            "info": dict(self.info),
        }
