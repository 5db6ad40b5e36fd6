"""Command line interface: map, eval, gen, and bench subcommands."""

from __future__ import annotations

import argparse
import sys

from .bench import evaluate_mapping, run_benchmark
from .generators import grid2d, hierarchy_community, random_geometric
from .graph_io import parse_metis, read_mapping, write_mapping, write_metis
from .initial_mapping import InfeasibleBalanceError
from .pipeline import DEFAULT_EPSILON, PRESETS, run_mapping
from .topology import ORACLE_VARIANTS, HierarchySpec


def _add_hierarchy_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--hierarchy", required=True, help="arity sequence, e.g. 4:16:2")
    sub.add_argument("--distances", required=True, help="cost sequence, e.g. 1:10:100")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procmap",
        description="Map communicating processes onto a hierarchical machine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", help="compute a mapping for a graph file")
    p_map.add_argument("--graph", required=True)
    _add_hierarchy_args(p_map)
    p_map.add_argument("--preconfig", default="eco", choices=[*PRESETS, "baseline"])
    p_map.add_argument("--imbalance", type=float, default=DEFAULT_EPSILON)
    p_map.add_argument("--seed", type=int, default=0)
    p_map.add_argument("--output", required=True, help="mapping file to write")
    p_map.add_argument("--oracle", choices=ORACLE_VARIANTS, default=None)
    p_map.add_argument("--ncd-radius", type=int, default=10)

    p_eval = sub.add_parser("eval", help="evaluate an existing mapping file")
    p_eval.add_argument("--graph", required=True)
    p_eval.add_argument("--mapping", required=True)
    _add_hierarchy_args(p_eval)
    p_eval.add_argument("--imbalance", type=float, default=DEFAULT_EPSILON)

    p_gen = sub.add_parser("gen", help="generate a synthetic instance")
    p_gen.add_argument(
        "--kind",
        required=True,
        choices=("grid2d", "random_geometric", "random_hierarchy_test"),
    )
    p_gen.add_argument("--output", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--rows", type=int, help="grid2d rows")
    p_gen.add_argument("--cols", type=int, help="grid2d columns")
    p_gen.add_argument("--nodes", type=int, help="random_geometric node count")
    p_gen.add_argument("--hierarchy", help="random_hierarchy_test arity sequence")
    p_gen.add_argument("--nodes-per-block", type=int, default=8)

    p_bench = sub.add_parser("bench", help="run the benchmark grid, write CSVs")
    p_bench.add_argument("--graph", action="append", required=True)
    p_bench.add_argument("--k-list", required=True, help="comma-separated PE counts")
    p_bench.add_argument(
        "--preconfig", default="fastest,fast,eco,strong", help="comma-separated presets"
    )
    p_bench.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p_bench.add_argument(
        "--hierarchy", required=True, help="arity template, '*' filled per k (4:16:*)"
    )
    p_bench.add_argument("--distances", required=True)
    p_bench.add_argument("--imbalance", type=float, default=DEFAULT_EPSILON)
    p_bench.add_argument("--output", required=True)

    return parser


def _cmd_map(args) -> int:
    graph = parse_metis(args.graph)
    spec = HierarchySpec.parse(args.hierarchy, args.distances)
    mapping, stats = run_mapping(
        graph,
        spec,
        args.preconfig,
        args.imbalance,
        args.seed,
        instance_name=args.graph,
        oracle_variant=args.oracle,
        swap_radius=args.ncd_radius,
    )
    write_mapping(mapping.assignment, args.output)
    print(f"J: {stats.objective}")
    print(f"balance_ratio: {stats.balance_ratio:.6f}")
    print(f"levels: {stats.levels}")
    print(
        f"runtime_s: {stats.runtime_s:.6f} "
        f"(coarsen {stats.phase_coarsen_s:.6f}, initial {stats.phase_initial_s:.6f}, "
        f"refine {stats.phase_refine_s:.6f})"
    )
    print(f"mapping written to {args.output}")
    return 0


def _cmd_eval(args) -> int:
    graph = parse_metis(args.graph)
    spec = HierarchySpec.parse(args.hierarchy, args.distances)
    assignment = read_mapping(args.mapping, graph.n, spec.k)
    report = evaluate_mapping(graph, assignment, spec, args.imbalance)
    print(f"J: {report.objective}")
    print(
        f"balance: max block {report.max_block_weight} / allowed "
        f"{report.allowed_block_weight} (ratio {report.balance_ratio:.6f})"
    )
    print(f"intra_pe_volume: {report.intra_volume}")
    for j, t in enumerate(report.level_traffic, start=1):
        print(f"level_{j}_traffic: {t} (cost {spec.link_costs[j - 1]} each)")
    return 0


def _cmd_gen(args) -> int:
    if args.kind == "grid2d":
        if args.rows is None or args.cols is None:
            raise ValueError("grid2d needs --rows and --cols")
        graph = grid2d(args.rows, args.cols)
    elif args.kind == "random_geometric":
        if args.nodes is None:
            raise ValueError("random_geometric needs --nodes")
        graph = random_geometric(args.nodes, args.seed)
    else:
        if args.hierarchy is None:
            raise ValueError("random_hierarchy_test needs --hierarchy")
        dummy_costs = ":".join("1" for _ in args.hierarchy.split(":"))
        spec = HierarchySpec.parse(args.hierarchy, dummy_costs)
        graph = hierarchy_community(spec, args.nodes_per_block, args.seed)
    write_metis(graph, args.output)
    print(f"wrote {graph.n} nodes, {graph.m} edges to {args.output}")
    return 0


def _cmd_bench(args) -> int:
    instances = [(path, parse_metis(path)) for path in args.graph]
    ks = [int(x) for x in args.k_list.split(",") if x.strip()]
    presets = [x.strip() for x in args.preconfig.split(",") if x.strip()]
    seeds = [int(x) for x in args.seeds.split(",") if x.strip()]
    result = run_benchmark(
        instances,
        ks,
        presets,
        seeds,
        args.hierarchy,
        args.distances,
        args.imbalance,
        out_csv=args.output,
    )
    print(f"{len(result.rows)} runs written to {args.output}")
    if result.failures:
        print(f"{len(result.failures)} runs failed; see companion errors file")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "map": _cmd_map,
        "eval": _cmd_eval,
        "gen": _cmd_gen,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except InfeasibleBalanceError as exc:
        print(f"error: infeasible balance constraint: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
