"""Weighted communication graphs, block mappings, and the mapped-cost model.

The mapped cost of an assignment counts every stored directed arc once, so an
undirected edge {u, v} of weight w contributes ``2 * w * dist(pe(u), pe(v))``.
All node weights, edge weights, distances and costs are Python integers, which
keeps every cost comparison exact and every cached value reproducible bit for
bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterator, Sequence


class InvalidParameterError(ValueError):
    """A structural parameter (k, epsilon, weights, ...) is out of range."""


class MappingError(ValueError):
    """An assignment refers to nodes or processing elements that do not exist."""


class GraphFormatError(ValueError):
    """The data handed to a graph constructor is structurally inconsistent."""


class Graph:
    """Undirected graph with positive integer edge weights.

    Stored as symmetric adjacency lists: ``adjacency[v]`` is a list of
    ``(neighbor, weight)`` pairs and every undirected edge appears in both
    endpoint lists with the same weight (2m directed arcs in total).
    Self-loops and parallel edges are rejected.  Instances are immutable by
    convention and safe to share between passes.
    """

    __slots__ = ("n", "m", "adjacency", "node_weights", "total_node_weight")

    def __init__(
        self,
        n: int,
        adjacency: list[list[tuple[int, int]]],
        node_weights: Sequence[int] | None = None,
        *,
        validate: bool = True,
    ):
        if node_weights is None:
            node_weights = [1] * n
        self.n = n
        self.adjacency = adjacency
        self.node_weights = list(node_weights)
        arc_count = sum(len(nbrs) for nbrs in adjacency)
        if arc_count % 2 != 0:
            raise GraphFormatError(f"odd number of directed arcs ({arc_count})")
        self.m = arc_count // 2
        self.total_node_weight = sum(self.node_weights)
        if validate:
            self._check_consistency()

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Sequence[tuple[int, int, int]],
        node_weights: Sequence[int] | None = None,
    ) -> "Graph":
        """Build a graph from undirected (u, v, weight) triples."""
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphFormatError(f"self-loop at node {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise GraphFormatError(f"parallel edge {key}")
            if w <= 0:
                raise GraphFormatError(f"non-positive weight {w} on edge {key}")
            seen.add(key)
            adjacency[u].append((v, w))
            adjacency[v].append((u, w))
        return cls(n, adjacency, node_weights, validate=False)

    def _check_consistency(self) -> None:
        if len(self.adjacency) != self.n:
            raise GraphFormatError(
                f"adjacency length {len(self.adjacency)} != n={self.n}"
            )
        if len(self.node_weights) != self.n:
            raise GraphFormatError(
                f"{len(self.node_weights)} node weights for n={self.n} nodes"
            )
        for c in self.node_weights:
            if c < 0:
                raise GraphFormatError(f"negative node weight {c}")
        arc_weight: dict[tuple[int, int], int] = {}
        for v, nbrs in enumerate(self.adjacency):
            local: set[int] = set()
            for u, w in nbrs:
                if not 0 <= u < self.n:
                    raise GraphFormatError(f"neighbor {u} of {v} out of range")
                if u == v:
                    raise GraphFormatError(f"self-loop at node {v}")
                if u in local:
                    raise GraphFormatError(f"parallel edge ({v}, {u})")
                if w <= 0:
                    raise GraphFormatError(f"non-positive weight {w} on ({v}, {u})")
                local.add(u)
                arc_weight[(v, u)] = w
        for (v, u), w in arc_weight.items():
            back = arc_weight.get((u, v))
            if back != w:
                raise GraphFormatError(
                    f"asymmetric adjacency: ({v}, {u}) has weight {w}, "
                    f"reverse has {back}"
                )

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield each undirected edge once as (u, v, weight) with u < v."""
        for v, nbrs in enumerate(self.adjacency):
            for u, w in nbrs:
                if v < u:
                    yield v, u, w

    def weighted_degree(self, v: int) -> int:
        return sum(w for _, w in self.adjacency[v])

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, c(V)={self.total_node_weight})"


def exact_fraction(value) -> Fraction:
    """Convert a user-supplied number to an exact Fraction.

    Floats are interpreted through their decimal repr, so 0.03 means 3/100
    rather than its binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        return Fraction(Decimal(value))
    raise InvalidParameterError(f"cannot interpret {value!r} as an exact rational")


def compute_max_block_weight(epsilon, k: int, total_weight: int) -> int:
    """Largest allowed block weight: ceil((1 + epsilon) * total_weight / k).

    Evaluated with exact rational arithmetic before taking the ceiling.
    """
    if k <= 0:
        raise InvalidParameterError(f"k must be positive, got {k}")
    if total_weight < 0:
        raise InvalidParameterError(f"total weight must be >= 0, got {total_weight}")
    eps = exact_fraction(epsilon)
    if eps < 0:
        raise InvalidParameterError(f"imbalance must be >= 0, got {eps}")
    return math.ceil((1 + eps) * Fraction(total_weight, k))


@dataclass(frozen=True)
class BalanceSpec:
    """Balance constraint for a k-way mapping of a given graph."""

    epsilon: Fraction
    k: int
    total_weight: int
    max_block_weight: int

    @classmethod
    def create(cls, epsilon, k: int, total_weight: int) -> "BalanceSpec":
        eps = exact_fraction(epsilon)
        return cls(eps, k, total_weight, compute_max_block_weight(eps, k, total_weight))

    def is_underloaded(self, block_weight: int, addition: int) -> bool:
        """True when a block of this weight can absorb `addition` more weight."""
        return block_weight + addition <= self.max_block_weight


def compute_block_weights(graph: Graph, assignment: Sequence[int], k: int) -> list[int]:
    """Exact per-block node-weight sums; raises on out-of-range PE ids."""
    weights = [0] * k
    node_weights = graph.node_weights
    for v, b in enumerate(assignment):
        if not 0 <= b < k:
            raise MappingError(f"node {v} assigned to PE {b}, valid range is [0, {k})")
        weights[b] += node_weights[v]
    return weights


def mapping_cost(graph: Graph, assignment: Sequence[int], oracle) -> int:
    """Total communication cost of an assignment, summed over directed arcs.

    Every undirected edge contributes twice (once per direction), matching the
    ordered-pair definition of the objective.
    """
    if len(assignment) != graph.n:
        raise MappingError(
            f"assignment covers {len(assignment)} nodes, graph has {graph.n}"
        )
    dist = oracle.distance
    total = 0
    for v, nbrs in enumerate(graph.adjacency):
        pv = assignment[v]
        for u, w in nbrs:
            total += w * dist(pv, assignment[u])
    return total


class QuotientGraph:
    """Blocks as nodes, inter-block communication volume as edge weights."""

    __slots__ = ("k", "edge_weights", "_adjacency")

    def __init__(self, k: int, edge_weights: dict[tuple[int, int], int]):
        self.k = k
        self.edge_weights = edge_weights
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(k)]
        for (i, j), w in edge_weights.items():
            adjacency[i].append((j, w))
            adjacency[j].append((i, w))
        self._adjacency = adjacency

    def neighbors(self, b: int) -> list[tuple[int, int]]:
        return self._adjacency[b]

    def weighted_degree(self, b: int) -> int:
        return sum(w for _, w in self._adjacency[b])

    def edge_weight(self, i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        return self.edge_weights.get(key, 0)

    @property
    def num_edges(self) -> int:
        return len(self.edge_weights)


def build_quotient_graph(graph: Graph, assignment: Sequence[int], k: int) -> QuotientGraph:
    """Aggregate edge weights between blocks of an assignment."""
    weights: dict[tuple[int, int], int] = {}
    for v, u, w in graph.edges():
        bi, bj = assignment[v], assignment[u]
        if bi == bj:
            continue
        key = (bi, bj) if bi < bj else (bj, bi)
        weights[key] = weights.get(key, 0) + w
    return QuotientGraph(k, weights)


def boundary_nodes(graph: Graph, assignment: Sequence[int]) -> list[int]:
    """Nodes with at least one neighbor in a different block, in id order."""
    out = []
    for v, nbrs in enumerate(graph.adjacency):
        bv = assignment[v]
        for u, _ in nbrs:
            if assignment[u] != bv:
                out.append(v)
                break
    return out


@dataclass
class Mapping:
    """Assignment of every node to a PE, with cached weights and cost.

    The cached `objective` and `block_weights` stay equal to the values
    recomputed from scratch after every public operation; incremental updates
    go through :func:`procmap.gains.apply_move`.
    """

    assignment: list[int]
    k: int
    block_weights: list[int]
    objective: int

    @classmethod
    def from_assignment(
        cls, graph: Graph, assignment: Sequence[int], k: int, oracle
    ) -> "Mapping":
        assignment = list(assignment)
        return cls(
            assignment,
            k,
            compute_block_weights(graph, assignment, k),
            mapping_cost(graph, assignment, oracle),
        )

    def copy(self) -> "Mapping":
        return Mapping(list(self.assignment), self.k, list(self.block_weights), self.objective)

    def heaviest_block_weight(self) -> int:
        return max(self.block_weights)

    def is_balanced(self, balance: BalanceSpec) -> bool:
        return self.heaviest_block_weight() <= balance.max_block_weight

    def overload(self, balance: BalanceSpec) -> int:
        """Total weight sitting above the per-block cap."""
        cap = balance.max_block_weight
        return sum(w - cap for w in self.block_weights if w > cap)


def induced_subgraph(graph: Graph, nodes: Sequence[int]) -> tuple[Graph, list[int]]:
    """Subgraph induced by `nodes`, plus the local-id -> global-id table."""
    local_of = {g: i for i, g in enumerate(nodes)}
    adjacency: list[list[tuple[int, int]]] = [[] for _ in nodes]
    for g in nodes:
        lg = local_of[g]
        for u, w in graph.adjacency[g]:
            lu = local_of.get(u)
            if lu is not None:
                adjacency[lg].append((lu, w))
    weights = [graph.node_weights[g] for g in nodes]
    return Graph(len(nodes), adjacency, weights, validate=False), list(nodes)
