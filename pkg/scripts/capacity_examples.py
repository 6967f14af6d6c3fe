"""Optimum query exponent for a few standard sources, by all three formulas."""
import numpy as np

from crquery.fractional import query_exponent, query_exponent_alt
from crquery.partitions import CovarianceMatrix, divergence_exponent, gaussian_argmin
from crquery.pmf import JointPmf, dsbs

# X1, X2 independent bits, X3 = X1 xor X2
xor3 = np.zeros((2, 2, 2))
for a in range(2):
    for b in range(2):
        xor3[a, b, a ^ b] = 0.25

SOURCES = {
    "dsbs(0.1)": dsbs(0.1),
    "three copies of one bit": JointPmf.from_table(np.eye(2).reshape(2, 1, 2) * np.eye(2).reshape(2, 2, 1) / 2),
    "xor triple": JointPmf.from_table(xor3),
}


def main():
    print(f"{'source':<26} {'lp':>9} {'rewrite':>9} {'partition':>9}  argmin")
    for name, p in SOURCES.items():
        M = range(1, p.m + 1)
        value, pi = divergence_exponent(p)
        print(f"{name:<26} {query_exponent(p, M):>9.6f} {query_exponent_alt(p, M):>9.6f} {value:>9.6f}  {pi}")
    for rho in (0.5, 0.9):
        value, pi = gaussian_argmin(CovarianceMatrix(np.array([[1, rho, rho], [rho, 1, rho], [rho, rho, 1.0]])))
        print(f"{f'gaussian equicorr {rho}':<26} {'':>9} {'':>9} {value:>9.6f}  {pi}")


if __name__ == "__main__":
    main()
