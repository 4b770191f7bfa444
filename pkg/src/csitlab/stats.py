"""Counting helpers for Monte Carlo estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.stats import binomtest


@dataclass(frozen=True)
class Proportion:
    count: int
    trials: int

    @property
    def value(self) -> float:
        return self.count / self.trials if self.trials else float("nan")

    def wilson(self, confidence: float = 0.95) -> tuple[float, float]:
        ci = binomtest(self.count, self.trials).proportion_ci(
            confidence_level=confidence, method="wilson"
        )
        lo, hi = float(ci.low), float(ci.high)
        # guard against round-off putting the point estimate outside
        return min(lo, self.value), max(hi, self.value)

    def stderr(self, p: float | None = None) -> float:
        p = self.value if p is None else p
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def __add__(self, other: "Proportion") -> "Proportion":
        return Proportion(self.count + other.count, self.trials + other.trials)


def within_sigma(p_hat: Proportion, p_true: float, k: float = 3.0) -> bool:
    """True when the empirical rate lies within ``k`` binomial sigmas of ``p_true``.

    When ``p_true`` is zero only an empirical count of zero agrees.
    """
    sigma = math.sqrt(max(p_true * (1.0 - p_true), 0.0) / p_hat.trials)
    return abs(p_hat.value - p_true) <= k * sigma + 1e-15
