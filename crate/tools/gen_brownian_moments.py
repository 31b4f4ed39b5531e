#!/usr/bin/env python3
"""Generate the Brownian Stratonovich moment table shipped with mkv-cubature.

The expected signature of (t, B_t) over [0, 1] in the Stratonovich sense is
the tensor exponential exp(e0 + 1/2 * sum_i e_i (x) e_i). This script expands
that exponential in exact rational arithmetic and writes every non-zero
coefficient for words over {0..D} with graded length ||w|| <= MAX_NORM, where
the letter 0 counts twice.

Usage: python3 tools/gen_brownian_moments.py > crates/core/data/brownian_moments.txt
"""
from fractions import Fraction
from math import factorial

D = 4
MAX_NORM = 6


def norm(word):
    return len(word) + sum(1 for x in word if x == 0)


def mul(a, b, max_len):
    out = {}
    for wa, va in a.items():
        for wb, vb in b.items():
            w = wa + wb
            if len(w) <= max_len:
                out[w] = out.get(w, Fraction(0)) + va * vb
    return out


def main():
    max_len = MAX_NORM
    gen = {(0,): Fraction(1)}
    for i in range(1, D + 1):
        gen[(i, i)] = Fraction(1, 2)
    total = {(): Fraction(1)}
    power = {(): Fraction(1)}
    for k in range(1, max_len + 1):
        power = mul(power, gen, max_len)
        for w, v in power.items():
            total[w] = total.get(w, Fraction(0)) + v / factorial(k)
    print("# Expected iterated Stratonovich integrals of (t, B^1..B^%d) over [0,1]." % D)
    print("# Generated by tools/gen_brownian_moments.py; do not edit by hand.")
    print("# Words with ||w|| <= %d not listed here have expectation zero." % MAX_NORM)
    print("# max_letter %d" % D)
    print("# max_norm %d" % MAX_NORM)
    rows = sorted(
        (w, v) for w, v in total.items() if w and v != 0 and norm(w) <= MAX_NORM
    )
    rows.sort(key=lambda r: (norm(r[0]), len(r[0]), r[0]))
    for w, v in rows:
        print("%s %s" % ("".join(str(x) for x in w), v))


if __name__ == "__main__":
    main()
