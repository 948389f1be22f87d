"""Regenerate the frozen high-precision oracle values used by the tests.

Chi-square statistics are computed exactly with fractions, p-values with
a 50-digit upper incomplete gamma; the A-weighting reference comes from
the same closed form at 50 digits. Paste the printed values into
tests/test_stats.py and tests/test_features.py if they ever change.

    python scripts/freeze_oracles.py
"""
from fractions import Fraction

import mpmath

mpmath.mp.dps = 50

TABLES = [
    [[10, 10], [10, 10]],
    [[20, 0], [0, 20]],
    [[10, 20], [30, 40]],
    [[5, 15], [12, 8]],
    [[3, 7, 9], [11, 4, 6]],
    [[1, 2], [3, 4]],
    [[50, 30, 20], [10, 25, 40], [5, 5, 30]],
    [[7, 0], [2, 9]],
    [[100, 90], [80, 120]],
    [[12, 3, 0], [2, 9, 4]],
]


def chi_square(table):
    rows = [sum(r) for r in table]
    cols = [sum(c) for c in zip(*table)]
    total = sum(rows)
    stat = Fraction(0)
    for i, r in enumerate(table):
        for j, obs in enumerate(r):
            expected = Fraction(rows[i] * cols[j], total)
            stat += (obs - expected) ** 2 / expected
    dof = (len(rows) - 1) * (len(cols) - 1)
    p = mpmath.gammainc(mpmath.mpf(dof) / 2, mpmath.mpf(stat.numerator) / stat.denominator / 2, mpmath.inf,
                        regularized=True)
    return float(stat), dof, float(p)


def a_weight(f):
    f = mpmath.mpf(f)
    f2 = f * f
    ra = 12194 ** 2 * f2 * f2 / ((f2 + mpmath.mpf("20.6") ** 2)
                                 * mpmath.sqrt((f2 + mpmath.mpf("107.7") ** 2) * (f2 + mpmath.mpf("737.9") ** 2))
                                 * (f2 + 12194 ** 2))
    return 20 * mpmath.log10(ra) + 2


def main():
    print("CHI_SQUARE_ORACLE = [")
    for t in TABLES:
        stat, dof, p = chi_square(t)
        print(f"    ({t}, {stat!r}, {dof}, {p!r}),")
    print("]")
    print(f"A_WEIGHT_100HZ = {float(a_weight(100))!r}")
    print(f"A_WEIGHT_1KHZ = {float(a_weight(1000))!r}")


if __name__ == "__main__":
    main()
