"""Discrete channels with i.i.d. states and causal transmitter CSI.

A strategy (Shannon strategy) ``u`` is a tuple giving the input used in each
state.  Driving the channel with strategies turns it into an ordinary
memoryless channel whose input alphabet is the set of all |X|^|S| strategies.
All information quantities are in nats.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import rel_entr

from .errors import CapExceeded, ShapeError

ENUMERATION_CAP = 10**6
_SUM_TOL = 1e-12
# divergences at or below this count as zero (round-off between equal mixtures)
_ZERO_DIVERGENCE = 1e-12

Mapping = tuple[int, ...]


def _check_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim < 1 or np.any(p < 0) or np.any(~np.isfinite(p)):
        raise ValueError(f"{name}: entries must be finite and >= 0")
    s = p.sum(axis=-1)
    if np.any(np.abs(s - 1.0) > _SUM_TOL):
        raise ValueError(f"{name}: must sum to 1 (got {np.ravel(s).tolist()})")
    return p


@dataclass(frozen=True, eq=False)
class DiscreteChannelSpec:
    """Finite channel P(y | x, s) with i.i.d. states and per-input costs.

    ``kernel`` has shape ``(|X|, |S|, |Y|)``.  Names are only used for
    labels and JSON round-trips.
    """

    state_dist: np.ndarray
    kernel: np.ndarray
    cost: np.ndarray
    zero_input: int = 0
    states: tuple[str, ...] = field(default=())
    inputs: tuple[str, ...] = field(default=())
    outputs: tuple[str, ...] = field(default=())

    def __post_init__(self):
        ps = _check_distribution(self.state_dist, "p_s")
        k = np.asarray(self.kernel, dtype=float)
        b = np.asarray(self.cost, dtype=float)
        if k.ndim != 3:
            raise ShapeError(f"kernel must have shape (X, S, Y), got {k.shape}")
        nx, ns, ny = k.shape
        if ps.shape != (ns,):
            raise ShapeError(f"p_s has {ps.size} entries but kernel has {ns} states")
        if b.shape != (nx,):
            raise ShapeError(f"cost has {b.size} entries but kernel has {nx} inputs")
        _check_distribution(k, "kernel")
        if np.any(b < 0) or np.any(~np.isfinite(b)):
            raise ValueError("cost: entries must be finite and >= 0")
        if not 0 <= self.zero_input < nx:
            raise ShapeError(f"zero_input {self.zero_input} outside [0, {nx})")
        if b[self.zero_input] != 0:
            raise ValueError("cost: the zero input must have cost 0")
        object.__setattr__(self, "state_dist", ps)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "cost", b)
        for attr, n in (("states", ns), ("inputs", nx), ("outputs", ny)):
            names = tuple(getattr(self, attr)) or tuple(str(i) for i in range(n))
            if len(names) != n:
                raise ShapeError(f"{attr}: expected {n} names, got {len(names)}")
            object.__setattr__(self, attr, names)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.kernel.shape[2]

    @property
    def n_mappings(self) -> int:
        return self.n_inputs**self.n_states

    @property
    def zero_mapping(self) -> Mapping:
        return (self.zero_input,) * self.n_states

    def label(self, u: Mapping) -> str:
        return "(" + ", ".join(f"{s}→{self.inputs[x]}" for s, x in zip(self.states, u)) + ")"

    def parse_mapping(self, spec) -> Mapping:
        """Accept a tuple of input indices or a ``{state: input}`` dict of names."""
        if isinstance(spec, dict):
            try:
                return tuple(self.inputs.index(str(spec[s])) for s in self.states)
            except (KeyError, ValueError) as exc:
                raise ValueError(f"mapping {spec!r} does not name every state/input") from exc
        u = tuple(int(x) for x in spec)
        _check_mapping(self, u)
        return u

    def to_dict(self) -> dict:
        ns = self.n_states
        rows = self.kernel.reshape(self.n_inputs * ns, self.n_outputs)
        return {
            "states": list(self.states),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "p_s": self.state_dist.tolist(),
            "kernel": rows.tolist(),
            "cost": self.cost.tolist(),
            "zero_input": self.inputs[self.zero_input],
        }


_FIELDS = ("states", "inputs", "outputs", "p_s", "kernel", "cost", "zero_input")


def channel_from_dict(doc: dict) -> DiscreteChannelSpec:
    """Build a channel from the JSON schema.

    ``kernel`` lists |X|*|S| rows over the outputs; row ``x*|S| + s`` is
    P(. | x, s).  ``zero_input`` is an input name.
    """
    missing = [k for k in _FIELDS if k not in doc]
    if missing:
        raise ValueError(f"channel spec: missing field(s) {missing}")
    unknown = sorted(set(doc) - set(_FIELDS) - {"name", "description"})
    if unknown:
        raise ValueError(f"channel spec: unknown field(s) {unknown}")
    states = tuple(str(s) for s in doc["states"])
    inputs = tuple(str(x) for x in doc["inputs"])
    outputs = tuple(str(y) for y in doc["outputs"])
    rows = np.asarray(doc["kernel"], dtype=float)
    if rows.shape != (len(inputs) * len(states), len(outputs)):
        raise ShapeError(
            f"kernel: expected {len(inputs) * len(states)} rows of {len(outputs)}, got {rows.shape}"
        )
    if str(doc["zero_input"]) not in inputs:
        raise ValueError(f"zero_input: {doc['zero_input']!r} is not an input name")
    return DiscreteChannelSpec(
        state_dist=doc["p_s"],
        kernel=rows.reshape(len(inputs), len(states), len(outputs)),
        cost=doc["cost"],
        zero_input=inputs.index(str(doc["zero_input"])),
        states=states,
        inputs=inputs,
        outputs=outputs,
    )


def load_channel(path) -> DiscreteChannelSpec:
    with open(Path(path), encoding="utf-8") as fh:
        return channel_from_dict(json.load(fh))


def _check_mapping(chan: DiscreteChannelSpec, u: Mapping) -> None:
    if len(u) != chan.n_states:
        raise ShapeError(f"mapping has {len(u)} entries, channel has {chan.n_states} states")
    if any(not 0 <= x < chan.n_inputs for x in u):
        raise ShapeError(f"mapping {u} uses an input outside [0, {chan.n_inputs})")


def mapping_table(chan: DiscreteChannelSpec, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows of strategies in lexicographic order (first state most significant)."""
    stop = chan.n_mappings if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    cols = []
    for _ in range(chan.n_states):
        cols.append(idx % chan.n_inputs)
        idx = idx // chan.n_inputs
    return np.stack(cols[::-1], axis=1)


def mixture_output(chan: DiscreteChannelSpec, weights, mappings) -> np.ndarray:
    """sum_s weights(s) P(y | u(s), s) for each row of ``mappings``."""
    m = np.atleast_2d(np.asarray(mappings, dtype=np.int64))
    s = np.arange(chan.n_states)
    rows = chan.kernel[m, s]  # (N, S, Y)
    w = np.asarray(weights, dtype=float)
    return np.einsum("...s,nsy->n...y", w, rows) if w.ndim > 1 else w @ rows


def induced_output_dist(chan: DiscreteChannelSpec, u: Mapping) -> np.ndarray:
    _check_mapping(chan, tuple(u))
    return mixture_output(chan, chan.state_dist, [u])[0]


def expected_cost(chan: DiscreteChannelSpec, u: Mapping) -> float:
    _check_mapping(chan, tuple(u))
    return float(chan.state_dist @ chan.cost[list(u)])


def relative_entropy(p, q) -> float:
    """D(p || q) in nats; +inf when p puts mass where q has none."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"alphabet mismatch {p.shape} vs {q.shape}")
    return float(rel_entr(p, q).sum())


def _rows_divergence(p, q) -> np.ndarray:
    return rel_entr(p, q).sum(axis=-1)


def mutual_information(pu, mappings, chan: DiscreteChannelSpec) -> float:
    """I(U; Y) for strategies ``mappings`` drawn with probabilities ``pu``."""
    pu = np.asarray(pu, dtype=float)
    m = np.atleast_2d(np.asarray(mappings, dtype=np.int64))
    if pu.shape != (m.shape[0],):
        raise ShapeError("pu and mappings differ in length")
    for u in m:
        _check_mapping(chan, tuple(int(x) for x in u))
    cond = mixture_output(chan, chan.state_dist, m)
    py = pu @ cond
    return float(pu @ _rows_divergence(cond, py[None, :]))


@dataclass(frozen=True)
class CapacityPerCost:
    value: float
    argmax: Mapping
    divergence: float
    cost: float


def capacity_per_unit_cost(chan: DiscreteChannelSpec, cap: int = ENUMERATION_CAP) -> CapacityPerCost:
    """sup_u D(P_{Y|U=u} || P_{Y|U=0}) / E[b(X) | U=u] by exhaustive enumeration.

    Strategies with zero cost and zero divergence are skipped.  The value is
    +inf (with the first such strategy as witness) when a zero-cost strategy
    has positive divergence or a costly one has infinite divergence.
    """
    if chan.n_mappings > cap:
        raise CapExceeded(f"{chan.n_mappings} strategies exceed the cap {cap}")
    p0 = induced_output_dist(chan, chan.zero_mapping)
    best = None
    chunk = 65536
    for start in range(0, chan.n_mappings, chunk):
        m = mapping_table(chan, start, min(start + chunk, chan.n_mappings))
        d = _rows_divergence(mixture_output(chan, chan.state_dist, m), p0[None, :])
        c = chan.cost[m] @ chan.state_dist
        free = c <= 0
        infinite = (free & (d > _ZERO_DIVERGENCE)) | (~free & np.isinf(d))
        if infinite.any():
            i = int(np.flatnonzero(infinite)[0])
            return CapacityPerCost(math.inf, tuple(int(x) for x in m[i]), float(d[i]), float(c[i]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(free, -np.inf, d / np.where(free, 1.0, c))
        i = int(ratio.argmax())
        if not free[i] and (best is None or ratio[i] > best.value):
            best = CapacityPerCost(float(ratio[i]), tuple(int(x) for x in m[i]), float(d[i]), float(c[i]))
    if best is None:
        # every strategy is free and uninformative
        return CapacityPerCost(0.0, chan.zero_mapping, 0.0, 0.0)
    return best


# ---------------------------------------------------------------- sampling


def sample_states(chan: DiscreteChannelSpec, rng: np.random.Generator, size) -> np.ndarray:
    cdf = np.cumsum(chan.state_dist)
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), chan.n_states - 1)


def sample_outputs(chan: DiscreteChannelSpec, inputs, states, rng: np.random.Generator) -> np.ndarray:
    """Draw Y_i ~ P(. | x_i, s_i) independently for every position."""
    cdf = np.cumsum(chan.kernel, axis=-1)[np.asarray(inputs), np.asarray(states)]
    u = rng.random(cdf.shape[:-1])[..., None]
    return np.minimum((u >= cdf).sum(axis=-1), chan.n_outputs - 1)
