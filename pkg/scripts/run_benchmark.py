#!/usr/bin/env python3
"""Run the preset comparison grid on generated desk-scale instances.

Writes bench.csv (+ .summary.csv / .profile.csv companions) into --outdir.
"""

import argparse
import sys
from pathlib import Path

from procmap import HierarchySpec, grid2d, hierarchy_community, random_geometric
from procmap.bench import run_benchmark


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="bench_out")
    parser.add_argument("--size", type=int, default=2048, help="nodes per instance")
    parser.add_argument("--k-list", default="64,192,256")
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--presets", default="fastest,fast,eco,strong")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    side = max(2, int(round(args.size**0.5)))
    instances = [
        ("rgg", random_geometric(args.size, seed=42)),
        ("grid", grid2d(side, side)),
        (
            "community",
            hierarchy_community(
                HierarchySpec.parse("4:16:1", "1:10:100"),
                max(2, args.size // 64),
                seed=7,
            ),
        ),
    ]
    result = run_benchmark(
        instances,
        [int(x) for x in args.k_list.split(",")],
        [p.strip() for p in args.presets.split(",")],
        [int(x) for x in args.seeds.split(",")],
        "4:16:*",
        "1:10:100",
        0.03,
        out_csv=outdir / "bench.csv",
    )
    print(f"{len(result.rows)} runs -> {outdir / 'bench.csv'}")
    for row in result.summary:
        imp = row["improvement_over_baseline_pct"]
        imp_text = f"{imp:+7.1f}%" if imp != "" else "       "
        print(
            f"k={row['k']:<4} {row['preset']:<9} geomean J {row['geomean_J']:>12.0f} "
            f"runtime {row['geomean_runtime_s']:8.3f}s  vs baseline {imp_text}"
        )
    if result.failures:
        print(f"{len(result.failures)} failed runs; see bench.errors.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
