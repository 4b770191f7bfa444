"""Pulse-position code for a state channel with causal CSIT and a type decoder.

Message ``j`` of ``M`` owns the interval ``[j n, j n + n)``.  Inside it the
transmitter sends ``u(S_i)``; everywhere else it sends the zero input.  The
receiver flags every interval whose empirical output type is farther than
``D(P_{Y|U=u} || P_{Y|U=0}) - delta`` (in divergence) from the zero-input
output law and decodes when exactly one interval is flagged.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, rel_entr

from .channel import RngStream
from .dmc import (
    DiscreteChannelSpec,
    Mapping,
    expected_cost,
    induced_output_dist,
    relative_entropy,
    sample_outputs,
    sample_states,
)
from .errors import CapExceeded, DomainError, EmptyError, ShapeError
from .stats import Proportion

TYPE_ENUMERATION_CAP = 10**6
EXPLICIT_SYMBOL_LIMIT = 10**5


class PpmOutcome(enum.Enum):
    CORRECT = "correct"
    NO_INTERVAL = "no_interval"
    MULTI_INTERVAL = "multi_interval"
    WRONG_INTERVAL = "wrong_interval"
    COST_OVERFLOW = "cost_overflow"


@dataclass(frozen=True)
class PpmCodeParams:
    n: int
    M: int
    delta: float
    u: Mapping

    def __post_init__(self):
        if self.n < 1 or self.M < 1:
            raise DomainError("n and M must be positive")
        if not self.delta > 0:
            raise DomainError("delta must be positive")
        object.__setattr__(self, "u", tuple(int(x) for x in self.u))


def decoding_threshold(chan: DiscreteChannelSpec, params: PpmCodeParams) -> float:
    p0 = induced_output_dist(chan, chan.zero_mapping)
    return relative_entropy(induced_output_dist(chan, params.u), p0) - params.delta


def operating_point_messages(chan: DiscreteChannelSpec, u: Mapping, n: int, delta: float) -> int:
    """round(exp(n (threshold - delta))), at least 1."""
    phi = decoding_threshold(chan, PpmCodeParams(n, 1, delta, u))
    if math.isinf(phi):
        raise DomainError("infinite divergence: any number of messages works")
    return max(1, round(math.exp(n * (phi - delta))))


def cost_cap(chan: DiscreteChannelSpec, params: PpmCodeParams) -> float:
    return params.n * (expected_cost(chan, params.u) + params.delta)


def ppm_encode(j: int, states, chan: DiscreteChannelSpec, params: PpmCodeParams) -> np.ndarray:
    """Input sequence for message ``j``; position i depends on ``states[i]`` only."""
    states = np.asarray(states)
    if states.shape != (params.M * params.n,):
        raise ShapeError(f"need {params.M * params.n} states, got {states.shape}")
    if not 0 <= j < params.M:
        raise DomainError(f"message {j} outside [0, {params.M})")
    x = np.full(states.shape, chan.zero_input, dtype=np.int64)
    seg = slice(j * params.n, (j + 1) * params.n)
    x[seg] = np.asarray(params.u)[states[seg]]
    return x


def empirical_dist(symbols, alphabet_size: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size == 0:
        raise EmptyError("empirical distribution of an empty sequence")
    return np.bincount(symbols, minlength=alphabet_size) / symbols.size


def sanov_exponent(target, base) -> float:
    """Exponential decay rate of observing type ``target`` under ``base``."""
    return relative_entropy(target, base)


def _interval_counts(outputs: np.ndarray, n: int, n_outputs: int) -> np.ndarray:
    blocks = outputs.reshape(outputs.shape[:-1] + (-1, n))
    return np.stack([(blocks == y).sum(axis=-1) for y in range(n_outputs)], axis=-1)


def divergence_from_counts(counts, base) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    types = counts / counts.sum(axis=-1, keepdims=True)
    return rel_entr(types, np.asarray(base, dtype=float)).sum(axis=-1)


def interval_divergences(outputs, chan: DiscreteChannelSpec, params: PpmCodeParams) -> np.ndarray:
    """D(P_Y^k || P_{Y|U=0}) for each interval (last axis of the result)."""
    outputs = np.asarray(outputs)
    if outputs.shape[-1] != params.M * params.n:
        raise ShapeError(f"need {params.M * params.n} outputs per block, got {outputs.shape[-1]}")
    p0 = induced_output_dist(chan, chan.zero_mapping)
    return divergence_from_counts(_interval_counts(outputs, params.n, chan.n_outputs), p0)


def crosses(divergence, chan: DiscreteChannelSpec, params: PpmCodeParams) -> np.ndarray:
    """Strictly above the threshold, or infinite (an output impossible under the zero strategy)."""
    d = np.asarray(divergence)
    return (d > decoding_threshold(chan, params)) | np.isinf(d)


def ppm_decode(outputs, chan: DiscreteChannelSpec, params: PpmCodeParams) -> int | PpmOutcome:
    """Index of the unique interval above threshold, else NO_INTERVAL / MULTI_INTERVAL.

    The comparison is strict and an infinite divergence always crosses.
    """
    outputs = np.asarray(outputs)
    if outputs.ndim != 1:
        raise ShapeError("ppm_decode takes one output sequence")
    crossed = np.flatnonzero(crosses(interval_divergences(outputs, chan, params), chan, params))
    if crossed.size == 0:
        return PpmOutcome.NO_INTERVAL
    if crossed.size > 1:
        return PpmOutcome.MULTI_INTERVAL
    return int(crossed[0])


def classify(correct_crosses, wrong_crossings, overflow) -> np.ndarray:
    """Outcome labels from per-trial decoder facts; cost overflow takes priority."""
    correct_crosses = np.asarray(correct_crosses, dtype=bool)
    wrong = np.asarray(wrong_crossings)
    out = np.where(
        correct_crosses,
        np.where(wrong == 0, PpmOutcome.CORRECT.value, PpmOutcome.MULTI_INTERVAL.value),
        np.where(
            wrong == 0,
            PpmOutcome.NO_INTERVAL.value,
            np.where(wrong == 1, PpmOutcome.WRONG_INTERVAL.value, PpmOutcome.MULTI_INTERVAL.value),
        ),
    ).astype(object)
    out[np.asarray(overflow, dtype=bool)] = PpmOutcome.COST_OVERFLOW.value
    return out


# ------------------------------------------------------------ exact type sums


def compositions(n: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``n``."""
    for bars in itertools.combinations(range(n + parts - 1), parts - 1):
        prev, vec = -1, []
        for b in bars:
            vec.append(b - prev - 1)
            prev = b
        vec.append(n + parts - 2 - prev)
        yield vec


def type_table(n: int, dist) -> tuple[np.ndarray, np.ndarray]:
    """Every type of length ``n`` with its probability under i.i.d. ``dist``."""
    dist = np.asarray(dist, dtype=float)
    k = dist.size
    if math.comb(n + k - 1, k - 1) > TYPE_ENUMERATION_CAP:
        raise CapExceeded(f"{math.comb(n + k - 1, k - 1)} types exceed the cap")
    counts = np.array(list(compositions(n, k)), dtype=np.int64).reshape(-1, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(counts > 0, counts * np.log(dist), 0.0).sum(axis=1)
    logp += gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)
    return counts, np.exp(logp)


def crossing_probability(chan: DiscreteChannelSpec, params: PpmCodeParams, under: Mapping | None = None) -> float:
    """Exact P(interval divergence > threshold) for n i.i.d. outputs of strategy ``under``.

    ``under`` defaults to the zero strategy, i.e. a wrong interval.
    """
    under = chan.zero_mapping if under is None else under
    counts, prob = type_table(params.n, induced_output_dist(chan, under))
    d = divergence_from_counts(counts, induced_output_dist(chan, chan.zero_mapping))
    return float(prob[crosses(d, chan, params)].sum())


def wrong_count_probabilities(q: float, others: int) -> tuple[float, float, float]:
    """P(0), P(1), P(>=2) crossings among ``others`` independent wrong intervals."""
    if others == 0 or q <= 0.0:
        return 1.0, 0.0, 0.0
    if q >= 1.0:
        return 0.0, float(others == 1), float(others > 1)
    n = float(others)
    log_none = n * math.log1p(-q)
    p0 = math.exp(log_none)
    p1 = math.exp(math.log(n) + math.log(q) + log_none - math.log1p(-q))
    p1 = min(p1, 1.0 - p0)
    return p0, p1, max(0.0, 1.0 - p0 - p1)


def crossing_frequency_is(
    chan: DiscreteChannelSpec, params: PpmCodeParams, samples: int, seed: int, mix: float = 0.05
) -> tuple[float, float]:
    """Importance-sampled estimate of the wrong-interval crossing probability.

    Intervals are drawn from ``(1 - mix) P_{Y|U=u} + mix P_{Y|U=0}`` and
    reweighted to the zero-strategy law.  Returns ``(estimate, stderr)``.
    """
    rng = RngStream(seed, 0).generator()
    p0 = induced_output_dist(chan, chan.zero_mapping)
    pq = (1.0 - mix) * induced_output_dist(chan, params.u) + mix * p0
    ys = np.minimum(
        np.searchsorted(np.cumsum(pq), rng.random((samples, params.n)), side="right"),
        chan.n_outputs - 1,
    )
    counts = _interval_counts(ys, params.n, chan.n_outputs)[:, 0, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.where(counts > 0, counts * (np.log(p0) - np.log(pq)), 0.0).sum(axis=1)
    hit = crosses(divergence_from_counts(counts, p0), chan, params)
    weights = np.where(hit, np.exp(llr), 0.0)
    return float(weights.mean()), float(weights.std(ddof=1) / math.sqrt(samples))


# ------------------------------------------------------------------ simulation


@dataclass(frozen=True)
class PpmErrorEstimate:
    trials: int
    counts: dict

    def rate(self, outcome: PpmOutcome) -> Proportion:
        return Proportion(self.counts.get(outcome.value, 0), self.trials)

    @property
    def error(self) -> Proportion:
        return Proportion(self.trials - self.counts.get(PpmOutcome.CORRECT.value, 0), self.trials)

    def __add__(self, other: "PpmErrorEstimate") -> "PpmErrorEstimate":
        keys = set(self.counts) | set(other.counts)
        return PpmErrorEstimate(
            self.trials + other.trials,
            {k: self.counts.get(k, 0) + other.counts.get(k, 0) for k in sorted(keys)},
        )


def _tally(labels) -> dict:
    vals, cnt = np.unique(np.asarray(labels, dtype=str), return_counts=True)
    out = {o.value: 0 for o in PpmOutcome}
    out.update({str(v): int(c) for v, c in zip(vals, cnt)})
    return out


def _encode_batch(messages, states, chan, params) -> np.ndarray:
    pos = np.arange(params.M * params.n) // params.n
    active = pos[None, :] == np.asarray(messages)[:, None]
    return np.where(active, np.asarray(params.u)[states], chan.zero_input)


def _explicit_batch(chan, params, size, rng, cap):
    total = params.M * params.n
    states = sample_states(chan, rng, (size, total))
    messages = rng.integers(0, params.M, size)
    inputs = _encode_batch(messages, states, chan, params)
    outputs = sample_outputs(chan, inputs, states, rng)
    cost = chan.cost[inputs].sum(axis=1)
    crossed = crosses(interval_divergences(outputs, chan, params), chan, params)
    own = crossed[np.arange(size), messages]
    wrong = crossed.sum(axis=1) - own
    return classify(own, wrong, cost > cap)


def _typeclass_batch(chan, params, size, rng, cap, wrong_probs):
    states = sample_states(chan, rng, (size, params.n))
    inputs = np.asarray(params.u)[states]
    outputs = sample_outputs(chan, inputs, states, rng)
    cost = chan.cost[inputs].sum(axis=1)
    p0 = induced_output_dist(chan, chan.zero_mapping)
    counts = _interval_counts(outputs, params.n, chan.n_outputs)[:, 0, :]
    own = crosses(divergence_from_counts(counts, p0), chan, params)
    r = rng.random(size)
    wrong = np.where(r < wrong_probs[0], 0, np.where(r < wrong_probs[0] + wrong_probs[1], 1, 2))
    return classify(own, wrong, cost > cap)


def ppm_simulate(
    chan: DiscreteChannelSpec,
    params: PpmCodeParams,
    trials: int,
    seed: int,
    cost_limit: float | None = None,
    mode: str = "auto",
    batch_size: int = 4096,
) -> PpmErrorEstimate:
    """Monte Carlo outcome rates of the code.

    ``mode="explicit"`` draws all M n states and outputs with a uniformly
    random message.  ``mode="typeclass"`` simulates only the message
    interval and draws the number of flagged wrong intervals (0, 1 or more)
    from its exact law, computed by enumerating output types; this is exact
    in distribution and works for astronomically large M.  ``"auto"`` picks
    explicit when M n <= 1e5.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if mode == "auto":
        mode = "explicit" if params.M * params.n <= EXPLICIT_SYMBOL_LIMIT else "typeclass"
    if mode not in ("explicit", "typeclass"):
        raise ValueError(f"unknown mode {mode!r}")
    cap = cost_cap(chan, params) if cost_limit is None else cost_limit
    if mode == "explicit":
        batch_size = max(1, min(batch_size, 2**22 // (params.M * params.n)))
    else:
        wrong_probs = wrong_count_probabilities(crossing_probability(chan, params), params.M - 1)
    total = None
    for b, start in enumerate(range(0, trials, batch_size)):
        size = min(batch_size, trials - start)
        rng = RngStream(seed, b).generator()
        if mode == "explicit":
            labels = _explicit_batch(chan, params, size, rng, cap)
        else:
            labels = _typeclass_batch(chan, params, size, rng, cap, wrong_probs)
        part = PpmErrorEstimate(size, _tally(labels))
        total = part if total is None else total + part
    return total
