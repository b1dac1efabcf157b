"""Standalone oracle for the selection-flattening map.

f_i = exp(ln p_i / ln(e + lambda * B)), renormalized to sum 1, applied to the
reference effectiveness vector normalized to a probability vector. Prints the
outputs for each B on the test grid with 17 significant digits so they can be
pinned in the Rust acceptance suite.
"""

import math

from mpmath import mp, mpf, exp, log, e

VECTOR = [1, 10, 2, 4, 45, 60, 100, 40, 85, 170, 150, 300, 250]
LAMBDA = 18
B_GRID = [0, 0.01, 0.16, 1, 10]


def flatten_float(p, b, lam=LAMBDA):
    denom = math.log(math.e + lam * b)
    f = [math.exp(math.log(x) / denom) for x in p]
    total = sum(f)
    return [x / total for x in f]


def flatten_exact(p, b, lam=LAMBDA):
    mp.dps = 50
    denom = log(e + mpf(lam) * mpf(b))
    f = [exp(log(mpf(x)) / denom) for x in p]
    total = sum(f)
    return [x / total for x in f]


def main():
    total = sum(VECTOR)
    p = [v / total for v in VECTOR]
    mp.dps = 50
    p_exact = [mpf(v) / mpf(total) for v in VECTOR]
    for b in B_GRID:
        fast = flatten_float(p, b)
        exact = flatten_exact(p_exact, mpf(str(b)))
        worst = max(abs(float(x) - y) for x, y in zip(exact, fast))
        assert worst < 1e-14, worst
        ratio = float(max(exact) / min(exact))
        print(f"B = {b}: ratio {ratio:.17g}")
        print("  [" + ", ".join(f"{float(x):.17e}" for x in exact) + "]")


if __name__ == "__main__":
    main()
