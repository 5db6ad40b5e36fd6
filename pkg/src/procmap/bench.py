"""Benchmark harness, mapping evaluation, and the distance microbenchmark.

`run_benchmark` produces one data row per (instance, k, preset, seed) run in
a fixed-schema CSV, plus two companion files derived from the raw rows: a
summary (per-instance arithmetic means over seeds, then geometric means over
instances, with improvement percentages over the greedy baseline) and a
runtime profile (per-instance runtime ratios against the slowest preset, the
raw material for performance-profile plots).  All summary math is
reproducible from the data rows alone.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import BalanceSpec, Graph, MappingError
from .pipeline import DEFAULT_EPSILON, RunStats, run_mapping
from .topology import HierarchySpec, build_oracle

CSV_HEADER = (
    "instance,k,preset,seed,J,runtime_s,balance_ratio,"
    "phase_coarsen_s,phase_initial_s,phase_refine_s"
)
SUMMARY_HEADER = (
    "k,preset,geomean_J,geomean_runtime_s,improvement_over_baseline_pct"
)
PROFILE_HEADER = "instance,k,preset,runtime_ratio"


@dataclass
class EvalReport:
    """Exact cost accounting of one mapping."""

    objective: int
    max_block_weight: int
    allowed_block_weight: int
    balance_ratio: float
    intra_volume: int
    level_traffic: list[int]  # arc weight crossing exactly level j (1-based)


def evaluate_mapping(
    graph: Graph, assignment: Sequence[int], spec: HierarchySpec, epsilon=DEFAULT_EPSILON
) -> EvalReport:
    """Cost, balance, and a per-level traffic breakdown of an assignment.

    Traffic is counted over directed arcs like the objective, so
    sum(d_j * traffic_j) equals the objective exactly (intra-PE volume is
    carried at cost zero).
    """
    if len(assignment) != graph.n:
        raise MappingError(
            f"assignment covers {len(assignment)} nodes, graph has {graph.n}"
        )
    k = spec.k
    for v, b in enumerate(assignment):
        if not 0 <= b < k:
            raise MappingError(f"node {v} assigned to PE {b}, valid range is [0, {k})")
    traffic = [0] * (spec.levels + 1)
    for v, nbrs in enumerate(graph.adjacency):
        pv = assignment[v]
        for u, w in nbrs:
            traffic[spec.level_of(pv, assignment[u])] += w
    objective = sum(d * t for d, t in zip(spec.link_costs, traffic[1:]))
    balance = BalanceSpec.create(epsilon, k, graph.total_node_weight)
    block_weights = [0] * k
    for v, b in enumerate(assignment):
        block_weights[b] += graph.node_weights[v]
    heaviest = max(block_weights)
    return EvalReport(
        objective=objective,
        max_block_weight=heaviest,
        allowed_block_weight=balance.max_block_weight,
        balance_ratio=heaviest / balance.max_block_weight,
        intra_volume=traffic[0],
        level_traffic=traffic[1:],
    )


def geometric_mean(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("geometric mean of no values")
    return math.exp(sum(math.log(v) for v in values) / len(values))


def resolve_hierarchy_template(arity_template: str, k: int) -> str:
    """Fill the '*' slot of an arity template so the product equals k."""
    parts = arity_template.split(":")
    if parts.count("*") > 1:
        raise ValueError(f"template {arity_template!r} has more than one '*'")
    if "*" not in parts:
        spec_k = math.prod(int(p) for p in parts)
        if spec_k != k:
            raise ValueError(f"hierarchy {arity_template!r} has k={spec_k}, not {k}")
        return arity_template
    fixed = math.prod(int(p) for p in parts if p != "*")
    if fixed == 0 or k % fixed != 0:
        raise ValueError(
            f"k={k} is not divisible by the fixed part {fixed} of {arity_template!r}"
        )
    return ":".join(str(k // fixed) if p == "*" else p for p in parts)


@dataclass
class BenchResult:
    rows: list[RunStats]
    failures: list[tuple[str, int, str, int, str]]
    summary: list[dict]
    profile: list[dict]


def run_benchmark(
    instances: Sequence[tuple[str, Graph]],
    k_values: Sequence[int],
    preset_names: Sequence[str],
    seeds: Sequence[int],
    arity_template: str,
    cost_text: str,
    epsilon=DEFAULT_EPSILON,
    out_csv=None,
    include_baseline: bool = True,
) -> BenchResult:
    """Run the full (instance, k, preset, seed) grid and summarize it.

    The greedy-construction baseline is always run alongside the requested
    presets so improvement percentages can be derived.  A failing run is
    recorded and skipped; the grid continues.
    """
    all_presets = list(preset_names)
    if include_baseline and "baseline" not in all_presets:
        all_presets.append("baseline")

    rows: list[RunStats] = []
    failures: list[tuple[str, int, str, int, str]] = []
    for k in k_values:
        spec = HierarchySpec.parse(resolve_hierarchy_template(arity_template, k), cost_text)
        for name, graph in instances:
            for preset in all_presets:
                for seed in seeds:
                    try:
                        _, stats = run_mapping(
                            graph,
                            spec,
                            preset,
                            epsilon,
                            seed,
                            instance_name=name,
                        )
                        rows.append(stats)
                    except Exception as exc:  # noqa: BLE001 - record and move on
                        failures.append((name, k, preset, seed, str(exc)))

    summary = summarize_rows(rows)
    profile = runtime_profile(rows)
    if out_csv is not None:
        write_benchmark_csv(rows, failures, summary, profile, out_csv)
    return BenchResult(rows, failures, summary, profile)


def summarize_rows(rows: Sequence[RunStats]) -> list[dict]:
    """Per (k, preset): arithmetic mean per instance over seeds, geometric
    mean over instances, and improvement over the baseline rows."""
    by_cell: dict[tuple[int, str, str], list[RunStats]] = {}
    for r in rows:
        by_cell.setdefault((r.k, r.preset, r.instance), []).append(r)

    per_instance: dict[tuple[int, str], dict[str, tuple[float, float]]] = {}
    for (k, preset, instance), cell in by_cell.items():
        mean_j = sum(r.objective for r in cell) / len(cell)
        mean_t = sum(r.runtime_s for r in cell) / len(cell)
        per_instance.setdefault((k, preset), {})[instance] = (mean_j, mean_t)

    summary = []
    for (k, preset), inst_means in sorted(per_instance.items()):
        js = [max(j, 1e-12) for j, _ in inst_means.values()]
        ts = [max(t, 1e-12) for _, t in inst_means.values()]
        geo_j = geometric_mean(js)
        geo_t = geometric_mean(ts)
        summary.append(
            {
                "k": k,
                "preset": preset,
                "geomean_J": geo_j,
                "geomean_runtime_s": geo_t,
            }
        )
    baseline_j = {
        row["k"]: row["geomean_J"] for row in summary if row["preset"] == "baseline"
    }
    for row in summary:
        base = baseline_j.get(row["k"])
        if base is None or row["geomean_J"] <= 0:
            row["improvement_over_baseline_pct"] = ""
        else:
            row["improvement_over_baseline_pct"] = (base / row["geomean_J"] - 1.0) * 100.0
    return summary


def runtime_profile(rows: Sequence[RunStats]) -> list[dict]:
    """Per (instance, k): each preset's mean runtime over the slowest one."""
    means: dict[tuple[str, int, str], list[float]] = {}
    for r in rows:
        means.setdefault((r.instance, r.k, r.preset), []).append(r.runtime_s)
    mean_of = {key: sum(v) / len(v) for key, v in means.items()}
    slowest: dict[tuple[str, int], float] = {}
    for (instance, k, _), t in mean_of.items():
        key = (instance, k)
        slowest[key] = max(slowest.get(key, 0.0), t)
    profile = []
    for (instance, k, preset), t in sorted(mean_of.items()):
        profile.append(
            {
                "instance": instance,
                "k": k,
                "preset": preset,
                "runtime_ratio": t / slowest[(instance, k)],
            }
        )
    return profile


def write_benchmark_csv(rows, failures, summary, profile, out_csv) -> None:
    out_csv = Path(out_csv)
    with out_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for r in rows:
            writer.writerow(
                [
                    r.instance,
                    r.k,
                    r.preset,
                    r.seed,
                    r.objective,
                    f"{r.runtime_s:.6f}",
                    f"{r.balance_ratio:.6f}",
                    f"{r.phase_coarsen_s:.6f}",
                    f"{r.phase_initial_s:.6f}",
                    f"{r.phase_refine_s:.6f}",
                ]
            )
    summary_path = out_csv.with_suffix(".summary.csv")
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER.split(","))
        for row in summary:
            imp = row["improvement_over_baseline_pct"]
            writer.writerow(
                [
                    row["k"],
                    row["preset"],
                    f"{row['geomean_J']:.6f}",
                    f"{row['geomean_runtime_s']:.6f}",
                    f"{imp:.6f}" if imp != "" else "",
                ]
            )
    profile_path = out_csv.with_suffix(".profile.csv")
    with profile_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_HEADER.split(","))
        for row in profile:
            writer.writerow(
                [row["instance"], row["k"], row["preset"], f"{row['runtime_ratio']:.6f}"]
            )
    if failures:
        errors_path = out_csv.with_suffix(".errors.csv")
        with errors_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance", "k", "preset", "seed", "error"])
            writer.writerows(failures)


def distance_query_benchmark(
    spec: HierarchySpec,
    variants: Sequence[str] = ("binary", "matrix"),
    total_pairs: int = 10**8,
    chunk: int = 10**7,
    seed: int = 0,
) -> dict[str, float]:
    """Time bulk random distance queries against each representation.

    Every variant sees the same stream of random PE pairs, generated in
    chunks; reported numbers are seconds for `total_pairs` queries through
    the variant's vectorized path.
    """
    oracles = {v: build_oracle(spec, v) for v in variants}
    timings = {v: 0.0 for v in variants}
    for v in variants:
        rng = np.random.default_rng(seed)
        oracle = oracles[v]
        done = 0
        while done < total_pairs:
            size = min(chunk, total_pairs - done)
            left = rng.integers(0, spec.k, size=size, dtype=np.int64)
            right = rng.integers(0, spec.k, size=size, dtype=np.int64)
            start = time.perf_counter()
            result = oracle.distance_pairs(left, right)
            timings[v] += time.perf_counter() - start
            if int(result[0]) < 0:  # keep the computation observable
                raise AssertionError("negative distance")
            done += size
    return timings
