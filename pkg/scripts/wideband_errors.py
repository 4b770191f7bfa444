"""Type-I and type-II error rates of the wideband code across w.

    python3 scripts/wideband_errors.py --trials 1000000 --out results/wideband_errors.csv
"""
import argparse

from csitlab.results import ResultRecord, emit_plotdata
from csitlab.wideband import WidebandParams, alpha_for_energy, simulate_trials, type1_prob_exact, type2_bound


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--w", type=int, nargs="+", default=[64, 128, 256, 512, 1024])
    ap.add_argument("--T", type=int, default=4)
    ap.add_argument("--lam-per-w", type=float, default=4.0, help="energy per codeword as a multiple of w")
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/wideband_errors.csv")
    args = ap.parse_args()

    records = []
    for w in args.w:
        params = WidebandParams(w=w, T=args.T, lam=args.lam_per_w * w)
        est = simulate_trials(params, args.trials, args.seed)
        a = alpha_for_energy(w, params.lam)
        records.append(ResultRecord(
            point={"w": w, "T": args.T, "lam": params.lam, "trials": args.trials, "seed": args.seed},
            metrics={
                "p_type1": est.p_type1.value,
                "p_type1_exact": type1_prob_exact(w),
                "p_type2": est.p_type2.value,
                "p_type2_bound": type2_bound(params, a) if a > 0 else float("nan"),
            },
            intervals={"p_type1": est.p_type1.wilson(), "p_type2": est.p_type2.wilson()},
        ))
        print(f"w={w:5d}  P_I={est.p_type1.value:.3e} (exact {type1_prob_exact(w):.3e})  P_II={est.p_type2.value:.3e}")
    emit_plotdata(records, args.out)


if __name__ == "__main__":
    main()
