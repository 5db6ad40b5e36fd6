#!/usr/bin/env python3
"""Time bulk distance queries through each machine-distance representation."""

import argparse
import sys

from procmap import HierarchySpec
from procmap.bench import distance_query_benchmark
from procmap.topology import ORACLE_VARIANTS


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--hierarchy", default="4:16:128")
    parser.add_argument("--distances", default="1:10:100")
    parser.add_argument("--pairs", type=int, default=10**8)
    parser.add_argument("--chunk", type=int, default=10**7)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    spec = HierarchySpec.parse(args.hierarchy, args.distances)
    print(f"k = {spec.k}, {args.pairs:.0e} random ordered pairs per variant")
    timings = distance_query_benchmark(
        spec, ORACLE_VARIANTS, total_pairs=args.pairs, chunk=args.chunk, seed=args.seed
    )
    slowest = max(timings.values())
    for variant in ORACLE_VARIANTS:
        t = timings[variant]
        rate = args.pairs / t / 1e6
        print(f"{variant:<16} {t:8.2f}s   {rate:8.1f}M queries/s   x{t / slowest:.2f} of slowest")
    return 0


if __name__ == "__main__":
    sys.exit(main())
