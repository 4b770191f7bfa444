"""Causal versus non-causal CSIT: tilted state types and the duty-fraction scheme.

With non-causal CSIT the transmitter can wait for a stretch whose state type
is ``p_hat`` and pays ``D(p_hat || P_S)`` for the search.  With causal CSIT
it instead spends energy only at the first ``n theta p_hat(s)`` occurrences
of each state and pays ``H_b(theta) / theta`` because the receiver must scan
every length-``n theta`` subsequence.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from .channel import RngStream
from .dmc import (
    ENUMERATION_CAP,
    DiscreteChannelSpec,
    Mapping,
    capacity_per_unit_cost,
    induced_output_dist,
    mapping_table,
    mixture_output,
    relative_entropy,
    sample_outputs,
    sample_states,
)
from .errors import CapExceeded, DomainError, ShapeError, ThetaInfeasible, ZeroCostError
from .ppm import PpmErrorEstimate, PpmOutcome, _tally, classify, compositions

SUBSEQUENCE_CAP = 10**6
_SUPPORT = 1e-9


def binary_entropy(theta: float) -> float:
    """H_b(theta) in nats."""
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return float(-sum(t * math.log(t) for t in (theta, 1.0 - theta) if t > 0))


def theta_max(p_hat, p_s) -> float:
    """min over the support of p_hat of P_S(s) / p_hat(s)."""
    p_hat = np.asarray(p_hat, dtype=float)
    p_s = np.asarray(p_s, dtype=float)
    if p_hat.shape != p_s.shape:
        raise ShapeError("p_hat and p_s differ in size")
    support = p_hat > _SUPPORT
    return float(np.min(p_s[support] / p_hat[support]))


@dataclass(frozen=True)
class TiltedDesign:
    p_hat: tuple[float, ...]
    u: Mapping
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "p_hat", tuple(float(x) for x in self.p_hat))
        object.__setattr__(self, "u", tuple(int(x) for x in self.u))
        if not 0.0 < self.theta <= 1.0:
            raise DomainError(f"theta must lie in (0, 1], got {self.theta}")
        if abs(sum(self.p_hat) - 1.0) > 1e-12 or min(self.p_hat) < 0:
            raise ValueError("p_hat must be a probability vector")


def tilted_output_dist(chan: DiscreteChannelSpec, p_hat, u: Mapping) -> np.ndarray:
    """sum_s p_hat(s) P(y | u(s), s)."""
    p_hat = np.asarray(p_hat, dtype=float)
    if p_hat.shape != (chan.n_states,):
        raise ShapeError(f"p_hat has {p_hat.size} entries, channel has {chan.n_states} states")
    return mixture_output(chan, p_hat, [tuple(u)])[0]


def _tilted_cost(chan, p_hat, u) -> float:
    return float(np.asarray(p_hat, dtype=float) @ chan.cost[list(u)])


def noncausal_rate_per_cost(chan: DiscreteChannelSpec, p_hat, u: Mapping) -> float:
    """(D(P_hat_Y || P_{Y|U=0}) - D(p_hat || P_S)) / E_{p_hat}[b(u(S))]; -inf for impossible types."""
    cost = _tilted_cost(chan, p_hat, u)
    if cost <= 0:
        raise ZeroCostError("strategy costs nothing under p_hat")
    penalty = relative_entropy(p_hat, chan.state_dist)
    if math.isinf(penalty):
        return -math.inf
    p0 = induced_output_dist(chan, chan.zero_mapping)
    return (relative_entropy(tilted_output_dist(chan, p_hat, u), p0) - penalty) / cost


def subinterval_count(n: int, p_hat, p_s) -> float:
    """exp(n D(p_hat || p_s)), the number of length-n stretches searched per message."""
    if n == 0:
        return 1.0
    x = n * relative_entropy(p_hat, p_s)
    return math.exp(x) if x < 709.0 else math.inf


def causal_rate_per_cost(chan: DiscreteChannelSpec, design: TiltedDesign) -> float:
    """(D(P_hat_Y || P_{Y|U=0}) - H_b(theta)/theta) / E_{p_hat}[b(u(S))]."""
    limit = theta_max(design.p_hat, chan.state_dist)
    if design.theta > limit * (1.0 + 1e-12):
        raise ThetaInfeasible(f"theta={design.theta} exceeds min P_S/p_hat = {limit}")
    cost = _tilted_cost(chan, design.p_hat, design.u)
    if cost <= 0:
        raise ZeroCostError("strategy costs nothing under p_hat")
    p0 = induced_output_dist(chan, chan.zero_mapping)
    d = relative_entropy(tilted_output_dist(chan, design.p_hat, design.u), p0)
    return (d - binary_entropy(design.theta) / design.theta) / cost


# ------------------------------------------------------------------ optimizer


def simplex_grid(resolution: int, parts: int) -> np.ndarray:
    return np.array(list(compositions(resolution, parts)), dtype=float) / resolution


@dataclass(frozen=True)
class Candidate:
    value: float
    p_hat: tuple[float, ...]
    u: Mapping


@dataclass(frozen=True)
class NoncausalOptimum:
    p_hat_star: tuple[float, ...]
    u_star: Mapping
    value: float
    candidates: tuple[Candidate, ...]


def _objective_grid(chan, grid, mappings, p0):
    py = mixture_output(chan, grid, mappings)  # (N, G, Y)
    num = rel_entr(py, p0).sum(axis=-1) - rel_entr(grid, chan.state_dist).sum(axis=-1)
    cost = chan.cost[mappings] @ grid.T
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num / cost
    free = cost <= 0
    val[free] = np.where(num[free] > 1e-12, np.inf, -np.inf)
    return np.nan_to_num(val, nan=-np.inf)


def _refine(chan, u, p, p0, min_step=1e-6, max_iter=20000):
    """Pairwise mass moves on the simplex, halving the step when stuck."""
    m = np.asarray([u])

    def f(x):
        return float(_objective_grid(chan, x[None, :], m, p0)[0, 0])

    p = np.array(p, dtype=float)
    best = f(p)
    step = 1.0 / 8.0
    k = p.size
    for _ in range(max_iter):
        if step < min_step or k == 1:
            break
        improved = False
        for i, j in itertools.permutations(range(k), 2):
            t = min(step, p[j])
            if t <= 0:
                continue
            q = p.copy()
            q[i] += t
            q[j] -= t
            val = f(q)
            if val > best:
                p, best, improved = q, val, True
        if not improved:
            step /= 2.0
    return best, p


def optimize_noncausal(
    chan: DiscreteChannelSpec,
    grid_resolution: int = 40,
    cap: int = ENUMERATION_CAP,
    refine_top: int = 8,
) -> NoncausalOptimum:
    """Maximize the non-causal rate per cost over strategies and tilted state types.

    Every strategy is scored on the simplex grid at the given resolution
    (plus the true state law), and the best points of the ``refine_top``
    leading strategies are polished by local pairwise moves.
    """
    if grid_resolution < 10:
        raise DomainError("grid_resolution must be >= 10")
    if chan.n_mappings > cap:
        raise CapExceeded(f"{chan.n_mappings} strategies exceed the cap {cap}")
    grid = np.vstack([simplex_grid(grid_resolution, chan.n_states), chan.state_dist])
    p0 = induced_output_dist(chan, chan.zero_mapping)
    seeds = []
    chunk = max(1, 2**21 // (grid.shape[0] * chan.n_outputs))
    for start in range(0, chan.n_mappings, chunk):
        m = mapping_table(chan, start, min(start + chunk, chan.n_mappings))
        val = _objective_grid(chan, grid, m, p0)
        g = val.argmax(axis=1)
        for row, gi in enumerate(g):
            seeds.append((float(val[row, gi]), tuple(int(x) for x in m[row]), grid[gi]))
    seeds.sort(key=lambda s: -s[0])
    if math.isinf(seeds[0][0]) and seeds[0][0] > 0:
        v, u, p = seeds[0]
        c = Candidate(v, tuple(p.tolist()), u)
        return NoncausalOptimum(c.p_hat, u, v, (c,))
    refined = []
    for v, u, p in seeds[:refine_top]:
        if not np.isfinite(v):
            continue
        best, q = _refine(chan, u, p, p0)
        refined.append(Candidate(best, tuple(q.tolist()), u))
    if not refined:
        raise DomainError("no strategy has positive cost under any tilted type")
    refined.sort(key=lambda c: -c.value)
    top = refined[0]
    return NoncausalOptimum(top.p_hat, top.u, top.value, tuple(refined))


class Verdict(enum.Enum):
    EQUIVALENT_MU_ONE = "EquivalentMuOne"
    EQUIVALENT_MU_VANISHING = "EquivalentMuVanishing"
    NOT_EQUIVALENT_BY_CRITERION = "NotEquivalentByCriterion"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class EquivalenceReport:
    mu: float
    p_hat_star: tuple[float, ...]
    u_star: Mapping
    noncausal_value: float
    causal_value: float
    verdict: Verdict
    scheme_value: float
    tolerance: float


def equivalence_check(chan: DiscreteChannelSpec, grid_resolution: int = 40) -> EquivalenceReport:
    """Apply the mu criterion to the optimal tilted type.

    ``causal_value`` is the causal capacity per unit cost (strategy
    enumeration); ``scheme_value`` is the duty-fraction scheme's rate at
    theta = mu.  The tolerance is one grid step, 1/grid_resolution.
    """
    tol = 1.0 / grid_resolution
    opt = optimize_noncausal(chan, grid_resolution)
    p_hat = np.asarray(opt.p_hat_star)
    support = p_hat > _SUPPORT
    ratios = chan.state_dist[support] / p_hat[support]
    mu = float(ratios.min())
    value_tol = 1e-7 * max(1.0, abs(opt.value))
    rivals = [
        c
        for c in opt.candidates[1:]
        if c.value >= opt.value - value_tol and np.abs(np.asarray(c.p_hat) - p_hat).sum() > tol
    ]
    penalty = relative_entropy(p_hat, chan.state_dist)
    if rivals:
        verdict = Verdict.INCONCLUSIVE
    elif mu >= 1.0 - tol and ratios.max() - ratios.min() <= tol:
        verdict = Verdict.EQUIVALENT_MU_ONE
    elif mu <= 0.01 and abs(binary_entropy(mu) / mu - penalty) <= 0.05 * penalty:
        verdict = Verdict.EQUIVALENT_MU_VANISHING
    else:
        verdict = Verdict.NOT_EQUIVALENT_BY_CRITERION
    theta = min(1.0, mu)
    try:
        scheme = causal_rate_per_cost(chan, TiltedDesign(opt.p_hat_star, opt.u_star, theta))
    except (ZeroCostError, DomainError):
        scheme = math.nan
    return EquivalenceReport(
        mu=mu,
        p_hat_star=opt.p_hat_star,
        u_star=opt.u_star,
        noncausal_value=opt.value,
        causal_value=capacity_per_unit_cost(chan).value,
        verdict=verdict,
        scheme_value=scheme,
        tolerance=tol,
    )


# ---------------------------------------------------------- causal scheme codec


def quotas(m: int, p_hat) -> np.ndarray:
    """Largest-remainder apportionment of ``m`` slots in proportion to ``p_hat``."""
    raw = m * np.asarray(p_hat, dtype=float)
    base = np.floor(raw).astype(np.int64)
    extra = m - int(base.sum())
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:extra]] += 1
    return base


def causal_encode(j: int, states, chan: DiscreteChannelSpec, design: TiltedDesign, n: int, M: int) -> np.ndarray:
    """Inputs for message ``j``: u(s) at the first quota(s) occurrences of s in interval j."""
    states = np.asarray(states)
    if states.shape != (M * n,):
        raise ShapeError(f"need {M * n} states, got {states.shape}")
    if not 0 <= j < M:
        raise DomainError(f"message {j} outside [0, {M})")
    return _causal_encode_batch(np.array([j]), states[None, :], chan, design, n, M)[0]


def _causal_encode_batch(messages, states, chan, design, n, M):
    q = quotas(round(n * design.theta), design.p_hat)
    u = np.asarray(design.u)
    b = states.shape[0]
    seg = states.reshape(b, M, n)[np.arange(b), messages]  # (B, n)
    onehot = seg[..., None] == np.arange(chan.n_states)
    occurrence = np.take_along_axis(np.cumsum(onehot, axis=1), seg[..., None], axis=2)[..., 0]
    send = occurrence <= q[seg]
    x = np.full(states.shape, chan.zero_input, dtype=np.int64)
    block = np.where(send, u[seg], chan.zero_input)
    x.reshape(b, M, n)[np.arange(b), messages] = block
    return x


def default_tau(n_outputs: int, m: int, trials: int) -> float:
    return n_outputs * math.sqrt(math.log(trials) / (2.0 * m))


def matching_types(m: int, p_y, tau: float) -> np.ndarray:
    """Count vectors c (sum m) with ||c/m - p_y||_1 <= tau."""
    p_y = np.asarray(p_y, dtype=float)
    c = np.array(list(compositions(m, p_y.size)), dtype=np.int64).reshape(-1, p_y.size)
    return c[np.abs(c / m - p_y).sum(axis=1) <= tau]


def interval_qualifies(counts, good_types) -> np.ndarray:
    """True where some matching type fits inside the interval's output counts.

    Equivalent to scanning every length-m subsequence: a subsequence with
    count vector c exists exactly when c <= counts componentwise.
    """
    counts = np.asarray(counts)
    if good_types.size == 0:
        return np.zeros(counts.shape[:-1], dtype=bool)
    fits = (counts[..., None, :] >= good_types).all(axis=-1)
    return fits.any(axis=-1)


def qualifies_by_subsequences(outputs, m: int, p_y, tau: float, n_outputs: int) -> bool:
    """Literal scan over all C(n, m) subsequences (reference for small n)."""
    outputs = np.asarray(outputs)
    p_y = np.asarray(p_y, dtype=float)
    for idx in itertools.combinations(range(outputs.size), m):
        c = np.bincount(outputs[list(idx)], minlength=n_outputs)
        if np.abs(c / m - p_y).sum() <= tau:
            return True
    return False


@dataclass(frozen=True)
class CausalSchemeEstimate:
    outcomes: PpmErrorEstimate
    quota_shortfalls: int
    tau: float


def causal_scheme_simulate(
    chan: DiscreteChannelSpec,
    design: TiltedDesign,
    n: int,
    M: int,
    trials: int,
    seed: int,
    tau: float | None = None,
    batch_size: int = 4096,
) -> CausalSchemeEstimate:
    """Monte Carlo of the duty-fraction scheme with a subsequence type decoder.

    ``quota_shortfalls`` counts trials where some state occurred fewer times
    than its quota, so fewer than round(n theta) symbols carried energy.
    """
    limit = theta_max(design.p_hat, chan.state_dist)
    if design.theta > limit * (1.0 + 1e-12):
        raise ThetaInfeasible(f"theta={design.theta} exceeds min P_S/p_hat = {limit}")
    m = round(n * design.theta)
    if m < 1:
        raise DomainError("n * theta rounds to zero")
    if math.comb(n, m) > SUBSEQUENCE_CAP:
        raise CapExceeded(f"C({n}, {m}) subsequences exceed the cap {SUBSEQUENCE_CAP}")
    tau = default_tau(chan.n_outputs, m, trials) if tau is None else tau
    p_y = tilted_output_dist(chan, design.p_hat, design.u)
    good = matching_types(m, p_y, tau)
    q = quotas(m, design.p_hat)
    total, shortfalls = None, 0
    batch_size = max(1, min(batch_size, 2**22 // (M * n)))
    for b, start in enumerate(range(0, trials, batch_size)):
        size = min(batch_size, trials - start)
        rng = RngStream(seed, b).generator()
        states = sample_states(chan, rng, (size, M * n))
        messages = rng.integers(0, M, size)
        inputs = _causal_encode_batch(messages, states, chan, design, n, M)
        outputs = sample_outputs(chan, inputs, states, rng)
        blocks = outputs.reshape(size, M, n)
        counts = np.stack([(blocks == y).sum(axis=-1) for y in range(chan.n_outputs)], axis=-1)
        ok = interval_qualifies(counts, good)
        own = ok[np.arange(size), messages]
        wrong = ok.sum(axis=1) - own
        labels = classify(own, wrong, np.zeros(size, dtype=bool))
        seg = states.reshape(size, M, n)[np.arange(size), messages]
        occ = np.stack([(seg == s).sum(axis=1) for s in range(chan.n_states)], axis=1)
        shortfalls += int((occ < q).any(axis=1).sum())
        part = PpmErrorEstimate(size, _tally(labels))
        total = part if total is None else total + part
    return CausalSchemeEstimate(total, shortfalls, tau)


__all__ = [
    "binary_entropy",
    "theta_max",
    "TiltedDesign",
    "tilted_output_dist",
    "noncausal_rate_per_cost",
    "subinterval_count",
    "causal_rate_per_cost",
    "optimize_noncausal",
    "Verdict",
    "EquivalenceReport",
    "equivalence_check",
    "quotas",
    "causal_encode",
    "causal_scheme_simulate",
    "interval_qualifies",
    "qualifies_by_subsequences",
    "matching_types",
    "PpmOutcome",
]
