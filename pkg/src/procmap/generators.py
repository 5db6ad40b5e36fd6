"""Deterministic synthetic instance generators.

All generators are pure functions of their parameters and seed.  The random
geometric family connects points of the unit square whose Euclidean distance
is below 0.55 * sqrt(ln(n) / n); the community generator plants groups of
nodes aligned with the modules of a machine hierarchy, giving instances with
a known good placement.
"""

from __future__ import annotations

import math
from random import Random

from .graph import Graph
from .topology import HierarchySpec


def grid2d(rows: int, cols: int) -> Graph:
    """Four-neighbor lattice with unit weights."""
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1))
            if r + 1 < rows:
                edges.append((v, v + cols, 1))
    return Graph.from_edges(n, edges)


def rgg_radius(n: int) -> float:
    return 0.55 * math.sqrt(math.log(n) / n)


def random_geometric(n: int, seed: int, radius: float | None = None) -> Graph:
    """Random geometric graph on n points of the unit square."""
    if radius is None:
        radius = rgg_radius(n)
    rng = Random(seed)
    xs = [rng.random() for _ in range(n)]
    ys = [rng.random() for _ in range(n)]

    cells = max(1, int(1.0 / radius))
    buckets: dict[tuple[int, int], list[int]] = {}
    for v in range(n):
        key = (min(int(xs[v] * cells), cells - 1), min(int(ys[v] * cells), cells - 1))
        buckets.setdefault(key, []).append(v)

    r_sq = radius * radius
    edges = []
    for (cx, cy), members in buckets.items():
        for dx in (0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy < 0:
                    continue
                other = buckets.get((cx + dx, cy + dy))
                if other is None:
                    continue
                same = dx == 0 and dy == 0
                for v in members:
                    for u in other:
                        if same and u <= v:
                            continue
                        d2 = (xs[v] - xs[u]) ** 2 + (ys[v] - ys[u]) ** 2
                        if d2 < r_sq:
                            edges.append((v, u, 1) if v < u else (u, v, 1))
    return Graph.from_edges(n, edges)


def hierarchy_community(
    spec: HierarchySpec,
    nodes_per_block: int,
    seed: int,
    intra_weight: int = 8,
) -> Graph:
    """Plant one community per PE, with traffic that mirrors the hierarchy.

    Nodes of block b occupy the contiguous range [b*npb, (b+1)*npb).  Edges
    inside a block carry `intra_weight`; blocks sharing a level-2 module are
    linked with half that, and each block gets one light link per higher
    level, so the identity placement of the blocks is the natural optimum.
    """
    rng = Random(seed)
    k = spec.k
    npb = nodes_per_block
    n = k * npb
    weights: dict[tuple[int, int], int] = {}

    def add(u: int, v: int, w: int) -> None:
        if u == v:
            return
        key = (u, v) if u < v else (v, u)
        if key not in weights:
            weights[key] = w

    def random_node(block: int) -> int:
        return block * npb + rng.randrange(npb)

    for b in range(k):
        base = b * npb
        for i in range(npb):
            add(base + i, base + (i + 1) % npb, intra_weight)
        for _ in range(npb // 2):
            add(random_node(b), random_node(b), intra_weight)

    divisors = spec.module_divisors
    if spec.levels >= 2:
        sibling_w = max(1, intra_weight // 2)
        group = divisors[1]
        for start in range(0, k, group):
            members = range(start, start + group)
            for i in members:
                for j in members:
                    if i < j:
                        for _ in range(2):
                            add(random_node(i), random_node(j), sibling_w)
    for level in range(3, spec.levels + 1):
        inner = divisors[level - 1]
        module_span = inner * spec.arities[level - 1]
        for b in range(k):
            module_start = (b // module_span) * module_span
            peer_module = rng.randrange(spec.arities[level - 1])
            peer_block = module_start + peer_module * inner + rng.randrange(inner)
            if peer_block // inner != b // inner:
                add(random_node(b), random_node(peer_block), 1)
    # light chain across adjacent blocks keeps the instance connected
    for b in range(k - 1):
        add(random_node(b), random_node(b + 1), 1)
    return Graph.from_edges(n, [(u, v, w) for (u, v), w in sorted(weights.items())])


GENERATOR_KINDS = ("grid2d", "random_geometric", "random_hierarchy_test")


def generate(kind: str, seed: int = 0, **params) -> Graph:
    """Dispatch for the CLI generator subcommand."""
    if kind == "grid2d":
        return grid2d(int(params["rows"]), int(params["cols"]))
    if kind == "random_geometric":
        radius = params.get("radius")
        return random_geometric(int(params["nodes"]), seed, radius)
    if kind == "random_hierarchy_test":
        spec = params["spec"]
        if isinstance(spec, str):
            arities = spec
            spec = HierarchySpec.parse(arities, ":".join("1" for _ in arities.split(":")))
        return hierarchy_community(spec, int(params.get("nodes_per_block", 8)), seed)
    raise ValueError(f"unknown generator kind {kind!r}, expected {GENERATOR_KINDS}")
