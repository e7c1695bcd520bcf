"""Relative error of Ei against arbitrary precision and against the truncated asymptotic series.

Shows where the asymptotic oracle becomes usable: its own optimal truncation
error is of order sqrt(2 pi / x) exp(-x).
"""
import mpmath
import numpy as np

from radplasma.exact import expint_ei


def asymptotic(x):
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        term, total, k = mpmath.mpf(1), mpmath.mpf(0), 0
        while True:
            total += term
            k += 1
            nxt = term * k / x
            if nxt >= term:
                break
            term = nxt
        return float(mpmath.exp(x) / x * total)


def main():
    print("x,rel_err_exact,rel_err_asymptotic_oracle,oracle_truncation_estimate")
    for x in np.geomspace(15, 700, 25):
        e = abs(expint_ei(x) / float(mpmath.ei(x)) - 1)
        a = abs(expint_ei(x) / asymptotic(x) - 1)
        print(f"{x:.3f},{e:.2e},{a:.2e},{np.sqrt(2 * np.pi / x) * np.exp(-x):.2e}")


if __name__ == "__main__":
    main()
