"""Random streams, fading-gain laws and the per-band channel y = h x + n.

Complex samples are plain Python/numpy complex numbers; gains are unit
variance, noise is circularly symmetric with E|n|^2 = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

__all__ = [
    "RngStream",
    "Rayleigh",
    "ExponentialTail",
    "PolynomialTail",
    "FadingTail",
    "CsitQuality",
    "sample_gain_squared",
    "sample_noise",
    "sample_gain_components",
    "apply_channel",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Address of a reproducible random stream.

    The stream is a Philox counter-based generator keyed by ``(seed, stream_id)``,
    so distinct ids give independent streams and the same pair always
    replays the same sequence, whatever process asks for it.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class Rayleigh:
    """|h|^2 ~ Exponential(1)."""

    def survival(self, x):
        return np.exp(-np.maximum(x, 0.0))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.standard_exponential(size)

    def threshold(self, w: float) -> float:
        return math.log(w) - math.log(2.0 * math.log(w))

    def capacity_ref(self, power: float, bandwidth: float) -> float:
        return power * math.log(bandwidth)


@dataclass(frozen=True)
class ExponentialTail:
    """|h|^2 ~ Exponential with the given mean (tail exp(-x/mean))."""

    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise DomainError(f"mean must be positive, got {self.mean}")

    def survival(self, x):
        return np.exp(-np.maximum(x, 0.0) / self.mean)

    def sample(self, rng: np.random.Generator, size=None):
        return self.mean * rng.standard_exponential(size)

    def threshold(self, w: float) -> float:
        # keeps P(|h|^2 >= threshold) = 2 ln w / w, as for unit-mean Rayleigh
        return self.mean * Rayleigh().threshold(w)

    def capacity_ref(self, power: float, bandwidth: float) -> float:
        return self.mean * power * math.log(bandwidth)


@dataclass(frozen=True)
class PolynomialTail:
    """Pareto law P(|h|^2 >= x) = x**(-tail_exponent) for x >= 1."""

    tail_exponent: float

    def __post_init__(self):
        if not self.tail_exponent > 0:
            raise DomainError(f"tail_exponent must be positive, got {self.tail_exponent}")

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 1.0, 1.0, np.maximum(x, 1.0) ** -self.tail_exponent)

    def sample(self, rng: np.random.Generator, size=None):
        u = 1.0 - rng.random(size)  # uniform on (0, 1]
        return u ** (-1.0 / self.tail_exponent)

    def threshold(self, w: float) -> float:
        # w * threshold**(-n) = 2 ln w, same crossing probability as Rayleigh
        return (w / (2.0 * math.log(w))) ** (1.0 / self.tail_exponent)

    def capacity_ref(self, power: float, bandwidth: float) -> float:
        return power * bandwidth ** (1.0 / (self.tail_exponent + 1.0))


FadingTail = Union[Rayleigh, ExponentialTail, PolynomialTail]


@dataclass(frozen=True)
class CsitQuality:
    """Transmitter knows g where h = g + f, Var g = beta, Var f = 1 - beta."""

    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def perfect(self) -> bool:
        return self.beta == 1.0


def sample_gain_squared(tail: FadingTail, rng: np.random.Generator, size=None):
    """Draw |h|^2 from the given tail family."""
    return tail.sample(rng, size)


def sample_noise(rng: np.random.Generator, size=None):
    """Circularly symmetric complex Gaussian with unit variance."""
    scale = math.sqrt(0.5)
    re = rng.normal(0.0, scale, size)
    im = rng.normal(0.0, scale, size)
    return re + 1j * im


def sample_gain_components(csit: CsitQuality, rng: np.random.Generator, size=None):
    """Return ``(g, f)``: the transmitter-known part and the unknown error of h.

    Both are complex Gaussian; g has variance beta and f has variance 1 - beta.
    """
    g = math.sqrt(csit.beta) * sample_noise(rng, size)
    f = math.sqrt(1.0 - csit.beta) * sample_noise(rng, size)
    return g, f


def apply_channel(x, h, n):
    return h * x + n
