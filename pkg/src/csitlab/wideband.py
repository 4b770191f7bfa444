"""Threshold-selection orthogonal code for a wideband fading channel.

One bandwidth piece of ``w`` bands carries one of ``T`` messages. Message
``j`` puts its whole energy ``lam`` at time ``j`` on the first band whose
gain clears the threshold; the receiver picks the time with the largest
band-averaged energy and never sees a gain.

Indices are zero-based throughout: "message 1" of the analysis is time 0,
and the band chosen for ``[0.1, 3.0, 5.0]`` is band 1.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    CsitQuality,
    FadingTail,
    Rayleigh,
    RngStream,
    apply_channel,
    sample_gain_components,
    sample_gain_squared,
    sample_noise,
)
from .errors import DomainError, InfeasibleError, TieError
from .stats import Proportion

BATCH_SIZE = 8192


class Outcome(enum.Enum):
    CORRECT = "correct"
    TYPE_I = "type1"
    TYPE_II = "type2"


def threshold(w: float) -> float:
    """Selection threshold ln w - ln(2 ln w) for unit-mean exponential gains."""
    if not (w >= 2 and 2.0 * math.log(w) < w):
        raise DomainError(f"threshold needs w >= 2 and 2 ln w < w, got w={w}")
    return math.log(w) - math.log(2.0 * math.log(w))


@dataclass(frozen=True)
class WidebandParams:
    """Parameters of one piece of the wideband code.

    ``K``, ``delta`` and ``lam`` default to round(ln w), eps*T/w and
    T*(P/K)/delta.  ``lam`` is an energy budget per codeword; all of it is
    sent in a single (band, time) slot.
    """

    w: int
    T: int
    P: float = 1.0
    epsilon: float = 0.01
    K: int | None = None
    delta: float | None = None
    lam: float | None = None
    tail: FadingTail = field(default_factory=Rayleigh)
    csit: CsitQuality = field(default_factory=CsitQuality)

    def __post_init__(self):
        if self.w < 2:
            raise DomainError(f"w must be >= 2, got {self.w}")
        if self.T < 1:
            raise DomainError(f"T must be >= 1, got {self.T}")
        if not (self.P > 0 and self.epsilon > 0):
            raise DomainError("P and epsilon must be positive")
        if self.K is None:
            object.__setattr__(self, "K", max(1, round(math.log(self.w))))
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")
        if self.delta is None:
            object.__setattr__(self, "delta", self.epsilon * self.T / self.w)
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta}")
        if self.lam is None:
            object.__setattr__(self, "lam", self.T * self.p / self.delta)
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if not self.csit.perfect and not isinstance(self.tail, Rayleigh):
            raise DomainError("noisy CSIT is defined for Rayleigh fading only")

    @property
    def p(self) -> float:
        """Power per piece."""
        return self.P / self.K

    @property
    def bandwidth(self) -> int:
        return self.w * self.K

    @property
    def phi(self) -> float:
        return threshold(self.w)

    @property
    def selection_threshold(self) -> float:
        """Threshold applied to the transmitter-known gain |g|^2."""
        return self.csit.beta * self.tail.threshold(self.w)


def first_crossing(gains, thr: float):
    """Index of the first entry along the last axis with ``gain >= thr``; -1 if none."""
    hit = np.asarray(gains) >= thr
    idx = hit.argmax(axis=-1)
    return np.where(hit.any(axis=-1), idx, -1)


def encode(j: int, gains_at_j, params: WidebandParams) -> int | None:
    """Band that carries message ``j``, or ``None`` for a type-I failure.

    ``gains_at_j`` are the squared gains the transmitter knows at time ``j``
    (|g|^2 under noisy CSIT).
    """
    if not 0 <= j < params.T:
        raise DomainError(f"message index {j} outside [0, {params.T})")
    band = int(first_crossing(gains_at_j, params.selection_threshold))
    return None if band < 0 else band


def codeword(j: int, band: int | None, params: WidebandParams) -> np.ndarray:
    """The ``w x T`` input matrix: sqrt(lam) at (band, j), zero elsewhere."""
    x = np.zeros((params.w, params.T), dtype=complex)
    if band is not None:
        x[band, j] = math.sqrt(params.lam)
    return x


def received_energies(y) -> np.ndarray:
    """E_i = (1/w) sum_k |y_k[i]|^2; ``y`` has bands on axis -2, time on axis -1."""
    return np.mean(np.abs(y) ** 2, axis=-2)


def decode(energies) -> int | np.ndarray:
    """Time index of the largest energy; works row-wise on a 2-D batch.

    Raises TieError when the maximum is attained twice.
    """
    e = np.asarray(energies, dtype=float)
    if e.shape[-1] < 1:
        raise DomainError("need at least one time slot")
    idx = e.argmax(axis=-1)
    if e.shape[-1] > 1:
        top2 = np.partition(e, e.shape[-1] - 2, axis=-1)[..., -2:]
        if np.any(top2[..., 0] == top2[..., 1]):
            raise TieError("two time slots have exactly equal energy")
    return int(idx) if e.ndim == 1 else idx


def type1_prob_exact(w: float) -> float:
    """(1 - 2 ln w / w)^w, the probability that no band clears the threshold."""
    threshold(w)
    return math.exp(w * math.log1p(-2.0 * math.log(w) / w))


def chernoff_exponent(alpha: float) -> float:
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    return alpha - math.log1p(alpha)


def type2_bound(params: WidebandParams, alpha: float) -> float:
    """Union/Chernoff bound min(1, T exp(-w L(alpha)))."""
    return min(1.0, params.T * math.exp(-params.w * chernoff_exponent(alpha)))


def alpha_for_energy(w: float, lam: float) -> float:
    """(phi lam - 2 sqrt(6 lam) ln w) / w; may be negative."""
    return (threshold(w) * lam - 2.0 * math.sqrt(6.0 * lam) * math.log(w)) / w


def alpha_star(params: WidebandParams) -> float:
    a = alpha_for_energy(params.w, params.lam)
    if a <= 0:
        raise InfeasibleError(f"alpha* = {a:.6g} <= 0: energy too small for w={params.w}")
    return a


@dataclass(frozen=True)
class RateReport:
    per_piece: float
    total: float
    capacity_ref: float

    @property
    def ratio(self) -> float:
        return self.total / self.capacity_ref


def achievable_rate(params: WidebandParams) -> RateReport:
    """Rate of the scheme with its reference capacity.

    The rate chain r = delta (w/T) L(alpha*), R = K r is the perfect-CSIT one;
    the CSIT quality beta only scales the reference.
    """
    a = alpha_star(params)
    r = params.delta * params.w / params.T * chernoff_exponent(a)
    ref = params.csit.beta * params.tail.capacity_ref(params.P, params.bandwidth)
    return RateReport(per_piece=r, total=params.K * r, capacity_ref=ref)


# ---------------------------------------------------------------- simulation


@dataclass(frozen=True)
class ErrorEstimate:
    trials: int
    type1: int
    type2: int
    decoded_first: int
    band_counts: tuple[int, ...] | None = None

    @property
    def correct(self) -> int:
        return self.trials - self.type1 - self.type2

    @property
    def p_type1(self) -> Proportion:
        return Proportion(self.type1, self.trials)

    @property
    def p_type2(self) -> Proportion:
        return Proportion(self.type2, self.trials)

    @property
    def p_correct(self) -> Proportion:
        return Proportion(self.correct, self.trials)

    @property
    def p_decoded_first(self) -> Proportion:
        return Proportion(self.decoded_first, self.trials)

    def __add__(self, other: "ErrorEstimate") -> "ErrorEstimate":
        if self.band_counts is None or other.band_counts is None:
            bands = None
        else:
            bands = tuple(a + b for a, b in zip(self.band_counts, other.band_counts))
        return ErrorEstimate(
            self.trials + other.trials,
            self.type1 + other.type1,
            self.type2 + other.type2,
            self.decoded_first + other.decoded_first,
            bands,
        )


@dataclass(frozen=True)
class TrialBatch:
    """Per-trial transcript: chosen band (-1 on type I), decoded time, energies."""

    band: np.ndarray
    decoded: np.ndarray
    energies: np.ndarray

    def outcomes(self) -> np.ndarray:
        out = np.full(self.band.shape, Outcome.CORRECT.value, dtype=object)
        out[(self.band >= 0) & (self.decoded != 0)] = Outcome.TYPE_II.value
        out[self.band < 0] = Outcome.TYPE_I.value
        return out


def _known_gain_squared(params: WidebandParams, rng, size):
    if isinstance(params.tail, Rayleigh):
        return params.csit.beta * sample_gain_squared(params.tail, rng, size)
    return sample_gain_squared(params.tail, rng, size)


def _lazy_crossings(params: WidebandParams, n: int, rng):
    """First-crossing band and its known gain, drawing bands block by block.

    Bands beyond the first crossing are never drawn.
    """
    thr = params.selection_threshold
    band = np.full(n, -1, dtype=np.int64)
    known = np.zeros(n)
    active = np.arange(n)
    offset, block = 0, min(params.w, 64)
    while active.size and offset < params.w:
        block = min(block, params.w - offset)
        draws = _known_gain_squared(params, rng, (active.size, block))
        first = first_crossing(draws, thr)
        hit = first >= 0
        rows = active[hit]
        band[rows] = offset + first[hit]
        known[rows] = draws[hit, first[hit]]
        active = active[~hit]
        offset += block
        block *= 2
    return band, known


def simulate_batch(params: WidebandParams, n: int, stream: RngStream) -> TrialBatch:
    """Run ``n`` trials with message 0 using energy sums for untouched bands.

    Noise-only bands enter only through their energy sum, which is drawn as
    Gamma(count, 1); the w x T matrix is never built.
    """
    rng = stream.generator()
    w, T = params.w, params.T
    band, known = _lazy_crossings(params, n, rng)
    ok = band >= 0
    m = int(ok.sum())

    phase = np.exp(2j * np.pi * rng.random(m))
    g = np.sqrt(known[ok]) * phase
    _, f = sample_gain_components(params.csit, rng, m)
    h = g + f
    y = apply_channel(math.sqrt(params.lam), h, sample_noise(rng, m))

    energies = np.empty((n, T))
    e0 = np.empty(n)
    e0[ok] = np.abs(y) ** 2 + rng.gamma(w - 1, 1.0, m)
    e0[~ok] = rng.gamma(w, 1.0, n - m)
    energies[:, 0] = e0
    if T > 1:
        energies[:, 1:] = rng.gamma(w, 1.0, (n, T - 1))
    energies /= w
    return TrialBatch(band=band, decoded=decode(energies), energies=energies)


def simulate_batch_explicit(params: WidebandParams, n: int, stream: RngStream) -> TrialBatch:
    """Same experiment with every gain and noise sample of the w x T grid drawn."""
    rng = stream.generator()
    w, T = params.w, params.T
    if isinstance(params.tail, Rayleigh):
        g, f = sample_gain_components(params.csit, rng, (n, w, T))
    else:
        mag = np.sqrt(sample_gain_squared(params.tail, rng, (n, w, T)))
        g = mag * np.exp(2j * np.pi * rng.random((n, w, T)))
        f = np.zeros_like(g)
    h = g + f
    band = first_crossing(np.abs(g[:, :, 0]) ** 2, params.selection_threshold)
    x = np.zeros((n, w, T), dtype=complex)
    rows = np.flatnonzero(band >= 0)
    x[rows, band[rows], 0] = math.sqrt(params.lam)
    y = apply_channel(x, h, sample_noise(rng, (n, w, T)))
    energies = received_energies(y)
    return TrialBatch(band=band, decoded=decode(energies), energies=energies)


def _summarize(batch: TrialBatch, w: int, record_bands: bool) -> ErrorEstimate:
    ok = batch.band >= 0
    bands = None
    if record_bands:
        bands = tuple(int(c) for c in np.bincount(batch.band[ok], minlength=w))
    return ErrorEstimate(
        trials=int(batch.band.size),
        type1=int((~ok).sum()),
        type2=int((ok & (batch.decoded != 0)).sum()),
        decoded_first=int((batch.decoded == 0).sum()),
        band_counts=bands,
    )


def _run_batch(args) -> ErrorEstimate:
    params, n, stream, explicit, record_bands = args
    sim = simulate_batch_explicit if explicit else simulate_batch
    return _summarize(sim(params, n, stream), params.w, record_bands)


def simulate_trials(
    params: WidebandParams,
    trials: int,
    seed: int,
    message_count: int | None = None,
    *,
    explicit: bool = False,
    record_bands: bool = False,
    workers: int = 1,
    batch_size: int = BATCH_SIZE,
) -> ErrorEstimate:
    """Monte Carlo estimate of the type-I and type-II error rates.

    Message 0 is always sent.  A trial whose encoder finds no band is a type-I
    error whatever the decoder says; otherwise decoding any other time is a
    type-II error.  Batch ``b`` uses ``RngStream(seed, b)``, so the result does
    not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if message_count is not None and message_count != params.T:
        params = replace(params, T=message_count)
    sizes = [batch_size] * (trials // batch_size)
    if trials % batch_size:
        sizes.append(trials % batch_size)
    jobs = [
        (params, n, RngStream(seed, b), explicit, record_bands) for b, n in enumerate(sizes)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, jobs))
    else:
        parts = [_run_batch(job) for job in jobs]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total


def band_entropy(counts) -> float:
    """Plug-in entropy (nats) of a histogram."""
    c = np.asarray(counts, dtype=float)
    p = c[c > 0] / c.sum()
    return float(-(p * np.log(p)).sum())
