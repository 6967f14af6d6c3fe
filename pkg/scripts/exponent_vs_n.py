"""Empirical query exponent of the two-terminal binning scheme against block length."""
import argparse

from crquery.pmf import dsbs, mutual_information
from crquery.protocols import Protocol, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=0.1, help="crossover probability")
    ap.add_argument("--eta", type=float, default=0.2)
    ap.add_argument("--lengths", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--quantile", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    p = dsbs(args.p)
    proto = Protocol.slepian_wolf(p, args.eta, args.seed)
    print(f"E* = I(X1;X2) = {mutual_information(p, [1], [2]):.6f}; "
          f"scheme limit 1 - rate = {1 - sum(proto.rates):.6f}")
    print(f"{'n':>4} {'success':>8} {'exponent':>9}")
    for n in args.lengths:
        res = simulate(p, proto, n, args.trials, args.quantile, args.seed)
        print(f"{n:>4} {res.success_rate:>8.3f} {res.exponent_quantile:>9.4f}")


if __name__ == "__main__":
    main()
