"""Multilevel coarsening: rated matchings, contraction, and exact projection.

Each round rates every edge, computes a matching that greedily assembles the
rating-sorted edges into paths and even cycles and then picks the best
alternating matching per component by dynamic programming, and contracts it.
Rounds stop once the graph is small enough for initial mapping or stops
shrinking.  Contraction preserves total node weight and aggregated edge
weights, so any mapping of a coarse level projects to the finer levels with
bit-identical cost and block weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Sequence

from .graph import BalanceSpec, Graph, Mapping

RatedEdge = tuple[int, int, int, Fraction]  # (u, v, weight, rating)


def edge_ratings(graph: Graph, denominator: str = "weight") -> list[RatedEdge]:
    """Rate each edge as weight / (q(u) * q(v)), exactly.

    `denominator` picks q: "weight" uses node weights, "degree" uses weighted
    degrees.  A zero q is treated as 1 so isolated-weight nodes stay rateable.
    Ratings are Fractions, so every comparison downstream is exact.
    """
    if denominator == "weight":
        q = graph.node_weights
    elif denominator == "degree":
        q = [graph.weighted_degree(v) for v in range(graph.n)]
    else:
        raise ValueError(f"unknown rating denominator {denominator!r}")
    rated = []
    for u, v, w in graph.edges():
        den = (q[u] or 1) * (q[v] or 1)
        rated.append((u, v, w, Fraction(w, den)))
    return rated


@dataclass
class Matching:
    """A set of disjoint matched node pairs with a partner lookup."""

    pairs: list[tuple[int, int]]
    partner: list[int]  # partner id, or -1 when unmatched

    @classmethod
    def from_pairs(cls, n: int, pairs: Sequence[tuple[int, int]]) -> "Matching":
        partner = [-1] * n
        for u, v in pairs:
            if partner[u] != -1 or partner[v] != -1:
                raise ValueError(f"node reused in matching pair ({u}, {v})")
            partner[u] = v
            partner[v] = u
        return cls(list(pairs), partner)

    def is_matched(self, v: int) -> bool:
        return self.partner[v] != -1


def global_paths_matching(
    graph: Graph,
    rated_edges: Sequence[RatedEdge],
    weight_cap: int,
    seed: int,
) -> Matching:
    """Half-approximate maximum-rating matching via path growing.

    Edges are sorted by rating (descending; ties broken by a seeded shuffle)
    and greedily collected into a set of simple paths and even cycles (every
    node keeps assembly degree <= 2, edges that would close an odd cycle are
    rejected).  Dynamic programming then selects the maximum-rating
    alternating matching inside each path/cycle.  Edges whose contraction
    would exceed `weight_cap` are never matched.  A final sweep matches any
    leftover edge whose endpoints are both unmatched, so the result is maximal
    among cap-respecting edges.
    """
    node_w = graph.node_weights
    usable = [e for e in rated_edges if node_w[e[0]] + node_w[e[1]] <= weight_cap]
    rng = Random(seed)
    rng.shuffle(usable)
    usable.sort(key=lambda e: e[3], reverse=True)

    n = graph.n
    degree = [0] * n
    assembly: list[list[int]] = [[] for _ in range(n)]  # edge indices, per node
    comp_parent = list(range(n))
    comp_size = [1] * n

    def find(x: int) -> int:
        while comp_parent[x] != x:
            comp_parent[x] = comp_parent[comp_parent[x]]
            x = comp_parent[x]
        return x

    accepted: list[RatedEdge] = []
    for u, v, w, rating in usable:
        if degree[u] >= 2 or degree[v] >= 2:
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            # Closing this path creates a cycle; only even ones are allowed.
            if comp_size[ru] % 2 != 0:
                continue
        else:
            comp_parent[ru] = rv
            comp_size[rv] += comp_size[ru]
        e_id = len(accepted)
        accepted.append((u, v, w, rating))
        assembly[u].append(e_id)
        assembly[v].append(e_id)
        degree[u] += 1
        degree[v] += 1

    pairs: list[tuple[int, int]] = []
    matched = [False] * n
    seen_edge = [False] * len(accepted)

    def walk(start: int) -> list[int]:
        """Ordered edge ids of the path/cycle through `start`."""
        sequence = []
        node = start
        while True:
            next_edge = None
            for e_id in assembly[node]:
                if not seen_edge[e_id]:
                    next_edge = e_id
                    break
            if next_edge is None:
                return sequence
            seen_edge[next_edge] = True
            sequence.append(next_edge)
            a, b = accepted[next_edge][0], accepted[next_edge][1]
            node = b if a == node else a

    def take(edge_ids: Sequence[int]) -> None:
        for e_id in edge_ids:
            u, v = accepted[e_id][0], accepted[e_id][1]
            pairs.append((u, v))
            matched[u] = True
            matched[v] = True

    for start in range(n):
        if degree[start] == 1 and not all(seen_edge[e] for e in assembly[start]):
            take(_best_alternating(walk(start), accepted, cycle=False))
    for start in range(n):
        if degree[start] == 2:
            seq = walk(start)
            if seq:
                take(_best_alternating(seq, accepted, cycle=True))

    for u, v, w, _ in usable:
        if not matched[u] and not matched[v]:
            pairs.append((u, v))
            matched[u] = True
            matched[v] = True

    return Matching.from_pairs(n, pairs)


def _best_alternating(
    edge_ids: Sequence[int], edges: Sequence[RatedEdge], cycle: bool
) -> list[int]:
    """Max-rating set of pairwise non-adjacent edges along a path or cycle."""
    if not edge_ids:
        return []
    ratings = [edges[e][3] for e in edge_ids]
    if not cycle:
        return [edge_ids[i] for i in _path_dp(ratings)]
    # Cycle: either drop the closing edge, or force it in and drop both of
    # its neighbors; consecutive edges in `edge_ids` share a node.
    drop_last = _path_dp(ratings[:-1])
    keep_last = [len(ratings) - 1] + _path_dp(ratings[1:-2], offset=1)
    score_drop = sum(ratings[i] for i in drop_last)
    score_keep = sum(ratings[i] for i in keep_last)
    chosen = keep_last if score_keep > score_drop else drop_last
    return [edge_ids[i] for i in chosen]


def _path_dp(ratings: Sequence[Fraction], offset: int = 0) -> list[int]:
    """Indices (shifted by `offset`) of the best independent set on a path."""
    if not ratings:
        return []
    best_prev = Fraction(0)
    best_here = ratings[0]
    choice = [True]
    for r in ratings[1:]:
        with_r = best_prev + r
        if with_r > best_here:
            best_prev, best_here = best_here, with_r
            choice.append(True)
        else:
            best_prev, best_here = best_here, best_here
            choice.append(False)
    picked = []
    i = len(ratings) - 1
    while i >= 0:
        if choice[i]:
            picked.append(i + offset)
            i -= 2
        else:
            i -= 1
    picked.reverse()
    return picked


@dataclass
class CoarseLevel:
    """One level of the multilevel stack.

    `parent_map` sends each node of the next finer level to its node here;
    it is None for the input level (index 0).
    """

    graph: Graph
    parent_map: list[int] | None
    index: int


@dataclass
class MultilevelHierarchy:
    levels: list[CoarseLevel]

    @property
    def coarsest(self) -> CoarseLevel:
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.levels)


def contract(graph: Graph, matching: Matching, index: int = 1) -> CoarseLevel:
    """Merge every matched pair into one node, aggregating weights.

    Coarse ids are assigned by scanning fine nodes in id order, so the result
    is deterministic.  Parallel coarse edges are merged by summing weights;
    edges internal to a pair disappear.
    """
    n = graph.n
    parent = [-1] * n
    next_id = 0
    for v in range(n):
        if parent[v] != -1:
            continue
        parent[v] = next_id
        p = matching.partner[v]
        if p != -1:
            parent[p] = next_id
        next_id += 1

    weights = [0] * next_id
    for v in range(n):
        weights[parent[v]] += graph.node_weights[v]

    agg: dict[tuple[int, int], int] = {}
    for v, nbrs in enumerate(graph.adjacency):
        cv = parent[v]
        for u, w in nbrs:
            cu = parent[u]
            if cv < cu:
                key = (cv, cu)
                agg[key] = agg.get(key, 0) + w

    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(next_id)]
    for (cu, cv), w in sorted(agg.items()):
        adjacency[cu].append((cv, w))
        adjacency[cv].append((cu, w))
    coarse = Graph(next_id, adjacency, weights, validate=False)
    return CoarseLevel(coarse, parent, index)


def stop_threshold(k: int) -> int:
    """Coarsening floor: keep roughly 60 nodes per block, at least 4096."""
    return max(60 * k, 4096)


def coarsen(
    graph: Graph,
    balance: BalanceSpec,
    seed: int,
    denominator: str = "weight",
    threshold: int | None = None,
) -> MultilevelHierarchy:
    """Repeat rate / match / contract until the graph is small or stagnates.

    Matched pairs never exceed the balance cap, so a feasible mapping of the
    coarsest level always exists.  A round that shrinks the node count by less
    than 5 percent ends the phase.
    """
    if threshold is None:
        threshold = stop_threshold(balance.k)
    rng = Random(seed)
    levels = [CoarseLevel(graph, None, 0)]
    current = graph
    while current.n > threshold:
        rated = edge_ratings(current, denominator)
        matching = global_paths_matching(
            current, rated, balance.max_block_weight, rng.randrange(2**62)
        )
        if not matching.pairs:
            break
        level = contract(current, matching, index=len(levels))
        levels.append(level)
        shrunk = level.graph.n
        if current.n * 20 < shrunk * 21:  # shrink factor below 1.05
            current = level.graph
            break
        current = level.graph
    return MultilevelHierarchy(levels)


def project_mapping(
    hierarchy: MultilevelHierarchy, mapping: Mapping, to_level: int = 0
) -> Mapping:
    """Push a coarse mapping down to `to_level`, keeping cost and weights.

    The source level is inferred from the assignment length (level sizes are
    strictly decreasing).  Every fine node inherits its coarse parent's PE, so
    the objective and block weights carry over unchanged.
    """
    if not 0 <= to_level < hierarchy.depth:
        raise IndexError(f"level {to_level} out of range, depth {hierarchy.depth}")
    from_level = None
    for i, level in enumerate(hierarchy.levels):
        if level.graph.n == len(mapping.assignment):
            from_level = i
    if from_level is None:
        raise ValueError(
            f"no level has {len(mapping.assignment)} nodes; cannot infer source"
        )
    if from_level < to_level:
        raise ValueError(f"mapping lives at level {from_level}, below {to_level}")
    assignment = mapping.assignment
    for i in range(from_level, to_level, -1):
        parent = hierarchy.levels[i].parent_map
        assert parent is not None
        assignment = [assignment[parent[v]] for v in range(len(parent))]
    return Mapping(list(assignment), mapping.k, list(mapping.block_weights), mapping.objective)


def max_level_bound(n: int) -> int:
    """Upper bound on level count implied by the 1.05 shrink guarantee."""
    return math.ceil(math.log(max(n, 2), 1.05))
