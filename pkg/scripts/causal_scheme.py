"""Duty-fraction scheme: design rate and simulated error versus theta.

For each theta up to min P_S / p_hat the script prints the causal rate per
cost of the best tilted design and a short Monte Carlo of the subsequence
decoder (tau can be overridden, the default radius is wide at small n).
"""
import argparse

import numpy as np

from csitlab.dmc import load_channel
from csitlab.equivalence import (
    TiltedDesign,
    causal_rate_per_cost,
    causal_scheme_simulate,
    equivalence_check,
    theta_max,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--channel", default="configs/fading_demo.json")
    ap.add_argument("--n", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--M", type=int, default=2)
    ap.add_argument("--tau", type=float, default=None)
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    chan = load_channel(args.channel)
    rep = equivalence_check(chan)
    print(f"verdict {rep.verdict.value}: mu={rep.mu:.4f} non-causal={rep.noncausal_value:.5f} causal={rep.causal_value:.5f}")
    limit = theta_max(rep.p_hat_star, chan.state_dist)
    for theta in np.linspace(0.25, min(1.0, limit), 4):
        design = TiltedDesign(rep.p_hat_star, rep.u_star, float(theta))
        rate = causal_rate_per_cost(chan, design)
        errs = []
        for n in args.n:
            est = causal_scheme_simulate(chan, design, n, args.M, args.trials, args.seed, tau=args.tau)
            errs.append(f"n={n}:{est.outcomes.error.value:.3f}")
        print(f"theta={theta:.3f} rate/cost={rate:+.4f}  " + " ".join(errs))


if __name__ == "__main__":
    main()
