"""Deterministic reference computations for small instances.

Nothing here samples.  The PPM oracle sums exact probabilities over every
state and output sequence, the Blahut-Arimoto routine traces capacity versus
cost on the strategy channel, and the wideband oracle integrates the energy
detector's error probability by quadrature.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln, rel_entr, roots_genlaguerre, roots_laguerre
from scipy.stats import ncx2

from .dmc import DiscreteChannelSpec, mapping_table, mixture_output
from .errors import CapExceeded, DomainError, InfeasibleError, NoConvergence
from .ppm import PpmCodeParams, PpmOutcome, cost_cap, ppm_decode, ppm_encode
from .wideband import threshold

EXACT_TERM_CAP = 10**8
BA_MAPPING_CAP = 4096
BA_MAX_ITER = 10**5
BA_TOL = 1e-10


# ------------------------------------------------------------------ PPM code


@dataclass(frozen=True)
class ExactErrorBreakdown:
    p_correct: float
    p_no_interval: float
    p_multi_interval: float
    p_wrong_interval: float
    p_cost_overflow: float

    def probability(self, outcome: PpmOutcome) -> float:
        return getattr(self, "p_" + outcome.value)

    @property
    def total(self) -> float:
        return sum(self.probability(o) for o in PpmOutcome)


def exact_ppm_error(
    chan: DiscreteChannelSpec,
    params: PpmCodeParams,
    cost_limit: float | None = None,
    cap: int = EXACT_TERM_CAP,
) -> ExactErrorBreakdown:
    """Outcome probabilities of the PPM code with a uniformly random message.

    Every state sequence and output sequence over the M n symbols is
    enumerated; the decoder is evaluated once per output sequence.
    """
    length = params.M * params.n
    n_seq_s = chan.n_states**length
    n_seq_y = chan.n_outputs**length
    if n_seq_s * n_seq_y > cap:
        raise CapExceeded(f"{n_seq_s} x {n_seq_y} sequence pairs exceed the cap {cap}")
    limit = cost_cap(chan, params) if cost_limit is None else cost_limit
    ys = np.array(list(itertools.product(range(chan.n_outputs), repeat=length)), dtype=np.int64)
    ss = np.array(list(itertools.product(range(chan.n_states), repeat=length)), dtype=np.int64)
    decoded = [ppm_decode(y, chan, params) for y in ys]
    p_states = np.prod(chan.state_dist[ss], axis=1)
    kinds = [o for o in PpmOutcome if o is not PpmOutcome.COST_OVERFLOW]
    acc = dict.fromkeys(PpmOutcome, 0.0)
    chunk = max(1, 2**22 // n_seq_y)
    for j in range(params.M):
        labels = []
        for d in decoded:
            if isinstance(d, PpmOutcome):
                labels.append(d)
            else:
                labels.append(PpmOutcome.CORRECT if d == j else PpmOutcome.WRONG_INTERVAL)
        indicator = np.array([[lab is k for k in kinds] for lab in labels], dtype=float)
        for start in range(0, n_seq_s, chunk):
            s_blk = ss[start : start + chunk]
            x_blk = np.array([ppm_encode(j, s, chan, params) for s in s_blk])
            overflow = chan.cost[x_blk].sum(axis=1) > limit
            like = np.ones((s_blk.shape[0], n_seq_y))
            for i in range(length):
                rows = chan.kernel[x_blk[:, i], s_blk[:, i]]  # (c, Y)
                like *= rows[:, ys[:, i]]
            weight = p_states[start : start + chunk] / params.M
            acc[PpmOutcome.COST_OVERFLOW] += float(weight[overflow].sum())
            keep = ~overflow
            probs = (weight[keep, None] * like[keep]).sum(axis=0) @ indicator
            for k, v in zip(kinds, probs):
                acc[k] += float(v)
    return ExactErrorBreakdown(**{"p_" + o.value: acc[o] for o in PpmOutcome})


# ------------------------------------------------------- Blahut-Arimoto with cost


def _strategy_channel(chan: DiscreteChannelSpec, cap: int):
    if chan.n_mappings > cap:
        raise CapExceeded(f"{chan.n_mappings} strategies exceed the cap {cap}")
    m = mapping_table(chan)
    return mixture_output(chan, chan.state_dist, m), chan.cost[m] @ chan.state_dist


def blahut_arimoto_cost(
    W: np.ndarray, cost: np.ndarray, s: float, tol: float = BA_TOL, max_iter: int = BA_MAX_ITER, init=None
):
    """Maximize I(p, W) - s E_p[cost]; returns (capacity, mean cost, p, iterations).

    ``init`` warm-starts the input law; it is mixed with a little uniform mass
    so that no input starts at zero.
    """
    uniform = np.full(W.shape[0], 1.0 / W.shape[0])
    p = uniform if init is None else 0.999 * np.asarray(init) + 0.001 * uniform
    prev = -math.inf
    for it in range(1, max_iter + 1):
        q = p @ W
        d = rel_entr(W, q).sum(axis=1)
        cap = float(p @ d)
        if abs(cap - prev) < tol:
            return cap, float(p @ cost), p, it
        prev = cap
        logits = np.log(p, where=p > 0, out=np.full_like(p, -np.inf)) + d - s * cost
        logits -= logits.max()
        p = np.exp(logits)
        p /= p.sum()
    raise NoConvergence(f"Blahut-Arimoto did not settle within {max_iter} iterations (s={s})")


@dataclass(frozen=True)
class CostSlope:
    slope: float
    diverges: bool
    nu: tuple[float, ...]
    capacity: tuple[float, ...]


def capacity_cost_curve(chan: DiscreteChannelSpec, s_min: float = 1e-2, s_max: float = 1e2, per_decade: int = 32, cap: int = BA_MAPPING_CAP):
    """Points (nu, C(nu)) traced by sweeping the multiplier geometrically."""
    W, cost = _strategy_channel(chan, cap)
    if not np.any(cost > 0):
        raise InfeasibleError("no strategy has positive cost")
    decades = math.log10(s_max / s_min)
    out = []
    for s in np.geomspace(s_min, s_max, int(round(decades * per_decade)) + 1):
        c, nu, _, _ = blahut_arimoto_cost(W, cost, float(s))
        out.append((nu, c))
    return out


def _capacity_at_cost(W, cost, target: float):
    """Bisect the multiplier so that the optimizing input has mean cost ``target``."""
    lo, hi = 0.0, 1.0
    c, nu, p, _ = blahut_arimoto_cost(W, cost, hi)
    while nu > target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise InfeasibleError(f"cost {target} not reachable")
        c, nu, p, _ = blahut_arimoto_cost(W, cost, hi, init=p)
    c_lo, nu_lo, _, _ = blahut_arimoto_cost(W, cost, lo)
    if nu_lo <= target:
        # the constraint is inactive: C(target) is the unconstrained capacity
        return c_lo, target
    best = (c, nu)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        c, nu, p, _ = blahut_arimoto_cost(W, cost, mid, init=p)
        best = (c, nu)
        if abs(nu - target) <= 1e-9 * target:
            break
        if nu > target:
            lo = mid
        else:
            hi = mid
    return best


def ba_cost_slope(chan: DiscreteChannelSpec, cost_grid=(1e-3, 2e-3, 4e-3), cap: int = BA_MAPPING_CAP) -> CostSlope:
    """Slope of capacity versus cost at zero cost on the strategy channel.

    C(nu)/nu is evaluated at each grid cost and linearly extrapolated to
    nu = 0 from the two smallest points.  ``diverges`` is set when C/nu keeps
    growing by non-shrinking increments as nu shrinks (infinite slope).
    """
    W, cost = _strategy_channel(chan, cap)
    if not np.any(cost > 0):
        raise InfeasibleError("no strategy has positive cost; the cost grid is unreachable")
    grid = sorted(float(v) for v in cost_grid)
    if len(grid) < 2 or grid[0] <= 0:
        raise DomainError("cost_grid needs at least two positive values")
    pts = [_capacity_at_cost(W, cost, v) for v in grid]
    nu = tuple(p[1] for p in pts)
    capacity = tuple(p[0] for p in pts)
    ratio = [c / v for c, v in zip(capacity, nu)]
    (n1, n2), (r1, r2) = nu[:2], ratio[:2]
    slope = (n2 * r1 - n1 * r2) / (n2 - n1)
    diverges = False
    if len(ratio) >= 3:
        inc = [ratio[k] - ratio[k + 1] for k in range(len(ratio) - 1)]
        diverges = inc[0] > 0 and inc[0] >= 0.9 * inc[1]
    return CostSlope(math.inf if diverges else slope, diverges, nu, capacity)


# ------------------------------------------------------------- wideband code


def type1_closed_form(w: int) -> float:
    phi = threshold(w)
    return 0.0 if phi <= 0 else (1.0 - math.exp(-phi)) ** w


def wideband_small_exact(w: int, T: int, lam: float, nodes: int = 64) -> tuple[float, float]:
    """(P_I, P_II) of the energy detector with perfect CSIT and Rayleigh fading.

    P_II is the joint probability of a successful band search and a wrong
    decision.  Given the chosen gain a = Phi + Exp(1), twice the scaled
    energy of the signal slot is noncentral chi-square with 2w degrees of
    freedom and noncentrality 2 lam a, and each competitor is Gamma(w, 1).
    """
    if not 2 <= w <= 12 or not 1 <= T <= 4:
        raise DomainError("oracle covers 2 <= w <= 12 and 1 <= T <= 4 only")
    if lam < 0 or nodes < 64:
        raise DomainError("need lam >= 0 and at least 64 quadrature nodes")
    p1 = type1_closed_form(w)
    if T == 1:
        return p1, 0.0
    phi = threshold(w)
    g, gw = roots_genlaguerre(nodes, w - 1)
    gw = gw / math.exp(gammaln(w))
    # density of the largest competitor, over the Gamma(w) weight
    competitor = (T - 1) * gammainc(w, g) ** (T - 2)
    e, ew = roots_laguerre(nodes)
    inner = np.array([gw @ (competitor * ncx2.cdf(2.0 * g, 2 * w, 2.0 * lam * (phi + ei))) for ei in e])
    return p1, (1.0 - p1) * float(ew @ inner)


def chosen_band_pmf(w: int) -> np.ndarray:
    """Law of the selected band given a successful search (truncated geometric)."""
    p = math.exp(-threshold(w))
    k = np.arange(w)
    pmf = p * (1.0 - p) ** k
    return pmf / pmf.sum()
