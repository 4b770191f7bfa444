"""Achievable rate over reference capacity, R / (P ln W), for growing w.

The ratio creeps up slowly: it is limited by roughly Phi / ln w, which
only approaches 1 when ln ln w is negligible next to ln w.
"""
import argparse

import numpy as np

from csitlab.channel import CsitQuality
from csitlab.errors import InfeasibleError
from csitlab.results import ResultRecord, emit_plotdata
from csitlab.wideband import WidebandParams, achievable_rate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--log10-w", type=float, nargs=2, default=[4, 18])
    ap.add_argument("--P", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=0.01)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--out", default="results/rate_curve.csv")
    args = ap.parse_args()

    records = []
    lo, hi = args.log10_w
    for e in np.arange(lo, hi + 1):
        w = 10 ** int(e)
        params = WidebandParams(w=w, T=4, P=args.P, epsilon=args.eps, csit=CsitQuality(args.beta))
        try:
            rep = achievable_rate(params)
        except InfeasibleError as exc:
            print(f"w=1e{e:.0f}: {exc}")
            continue
        records.append(ResultRecord(
            point={"w": w, "K": params.K, "W": params.bandwidth},
            metrics={"rate_total": rep.total, "capacity_ref": rep.capacity_ref, "ratio": rep.ratio},
            nats=("rate_total", "capacity_ref"),
        ))
        print(f"w=1e{e:.0f}  R={rep.total:8.3f}  P ln W={rep.capacity_ref:8.3f}  ratio={rep.ratio:.4f}")
    emit_plotdata(records, args.out)


if __name__ == "__main__":
    main()
