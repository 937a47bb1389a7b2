#!/usr/bin/env python3
"""Benchmark the grid kernels against each other.

Runs exhaustive definable-set enumeration for a few representative
workloads under both the compiled kernel and the pure-Python (numpy
vectorized) fallback, checks the bitmaps agree, and prints the timings.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

from erank import grid
from erank import semantics as se
from erank.equivalence import generate_corpus
from erank.formulas import format_formula, parse_formula

WORKLOADS = [
    ("squares over F9", "F9", "E y . x = y^2"),
    ("two-variable power pairs over F9", "F9", "E y1 y2 . x1 = y1^2 & x2 = y2^3"),
    (
        "mixed connectives over F8",
        "F8",
        "(E y1 y2 . x1 = y1^2 & x2 = y2^3) | (x1 != x2 & (E z . x1*z = 1))",
    ),
    (
        "deep quantifiers over F7",
        "F7",
        "E y1 y2 y3 . x1 = y1^2 + y2^2 & x2 = y2*y3 & x3 = y3^4 + y1",
    ),
]


def bench(structure, formula, kernel, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = se.definable_set(formula, structure, kernel=kernel)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--corpus", type=int, default=40, help="extra corpus formulas over F5")
    args = parser.parse_args()

    kernels = grid.available_kernels()
    print(f"kernels available: {', '.join(kernels)}")
    if len(kernels) < 2:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    rows = []
    for label, profile, text in WORKLOADS:
        structure = se.make_structure(profile)
        formula = parse_formula(text)
        timings = {}
        bitmaps = set()
        for name, kernel in kernels.items():
            best, result = bench(structure, formula, kernel, args.repeat)
            timings[name] = best
            bitmaps.add(result.bitmap)
        assert len(bitmaps) == 1, f"kernel disagreement on {label}"
        rows.append((label, timings))

    if args.corpus:
        structure = se.make_structure("F5")
        corpus = generate_corpus(seed=20240601, size=args.corpus)
        timings = {name: 0.0 for name in kernels}
        for f in corpus:
            for name, kernel in kernels.items():
                start = time.perf_counter()
                se.definable_set(f, structure, kernel=kernel)
                timings[name] += time.perf_counter() - start
        rows.append((f"{args.corpus} corpus formulas over F5 (total)", timings))

    width = max(len(label) for label, _ in rows) + 2
    names = list(kernels)
    header = "workload".ljust(width) + "".join(name.rjust(12) for name in names)
    if len(names) == 2:
        header += "ratio".rjust(10)
    print(header)
    for label, timings in rows:
        line = label.ljust(width) + "".join(f"{timings[name] * 1000:10.2f}ms" for name in names)
        if len(names) == 2:
            a, b = (timings[names[0]], timings[names[1]])
            line += f"{b / a:9.2f}x" if a else "      n/a"
        print(line)


if __name__ == "__main__":
    main()
