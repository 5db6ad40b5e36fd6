"""Move gains and their incremental maintenance.

The cost a node v contributes through its incident edges, were it placed on
PE b, is ``incident_cost(v, b) = sum(w * dist(b, pe(u)) for (u, w) incident)``,
counting each incident edge once.  The gain of moving v to b is
``move_gain(v, b) = incident_cost(v, current) - incident_cost(v, b)`` (zero
for v's own PE).  Because the total objective counts both directions of
every arc, a move changes the objective by exactly twice its gain; all
bookkeeping here keeps that invariant, and gains themselves stay in the
single-counted convention of the per-node cost tables.

`GainCache` keeps each node's gain vector for all blocks around it, stamped
with an epoch; a stale stamp means recompute from scratch, an active one is
kept exact under moves by adding / subtracting only the contribution of the
edge to the moved neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import Graph, Mapping


def incident_cost(graph: Graph, assignment: Sequence[int], oracle, v: int, pe: int) -> int:
    """Cost of v's incident edges if v sat on `pe` and neighbors stayed put."""
    dist = oracle.distance
    return sum(w * dist(pe, assignment[u]) for u, w in graph.adjacency[v])


def move_gain(graph: Graph, assignment: Sequence[int], oracle, v: int, target: int) -> int:
    """Objective decrease caused by moving v to `target` (may be negative)."""
    dist = oracle.distance
    cur = assignment[v]
    if target == cur:
        return 0
    gain = 0
    for u, w in graph.adjacency[v]:
        pu = assignment[u]
        gain += w * (dist(cur, pu) - dist(target, pu))
    return gain


def neighboring_blocks(graph: Graph, assignment: Sequence[int], v: int) -> list[int]:
    """Blocks holding at least one neighbor of v, in first-seen order."""
    seen: list[int] = []
    for u, _ in graph.adjacency[v]:
        b = assignment[u]
        if b not in seen:
            seen.append(b)
    return seen


class GainCache:
    """Per-node gain vectors with epoch-stamped validity flags.

    A node's entry is active only while its stamp equals the current epoch;
    every uncoarsening step bumps the epoch, implicitly invalidating all
    entries.  Active vectors always hold the exact from-scratch gains for
    every stored block; the vector for node v covers at least v's own block
    and all blocks holding neighbors of v.
    """

    def __init__(self, n: int):
        self.epoch = 0
        self._stamp = [-1] * n
        self._gains: list[dict[int, int] | None] = [None] * n

    def bump_epoch(self) -> None:
        self.epoch += 1

    def is_active(self, v: int) -> bool:
        return self._stamp[v] == self.epoch

    def active_nodes(self) -> list[int]:
        return [v for v, s in enumerate(self._stamp) if s == self.epoch]

    def gains_for(
        self, graph: Graph, mapping: Mapping, oracle, v: int
    ) -> dict[int, int]:
        """The (block -> gain) vector of v, recomputed if stale.

        Recomputation makes one pass over the incidence list per surrounding
        block, so it costs |R(v)| * |I(v)| distance lookups.
        """
        if self._stamp[v] != self.epoch:
            assignment = mapping.assignment
            cur = assignment[v]
            cost_at = {cur: 0}
            for b in neighboring_blocks(graph, assignment, v):
                cost_at.setdefault(b, 0)
            dist = oracle.distance
            for u, w in graph.adjacency[v]:
                pu = assignment[u]
                for b in cost_at:
                    cost_at[b] += w * dist(b, pu)
            own = cost_at[cur]
            self._gains[v] = {b: own - psi for b, psi in cost_at.items()}
            self._stamp[v] = self.epoch
        gains = self._gains[v]
        assert gains is not None
        return gains

    def gain(self, graph: Graph, mapping: Mapping, oracle, v: int, b: int) -> int:
        """Gain of moving v to b, served from the cache when possible."""
        vector = self.gains_for(graph, mapping, oracle, v)
        g = vector.get(b)
        if g is None:
            g = move_gain(graph, mapping.assignment, oracle, v, b)
            vector[b] = g
        return g


@dataclass(frozen=True)
class MoveRecord:
    """One committed node move, with the state that resulted from it."""

    node: int
    source: int
    target: int
    gain: int
    objective_after: int
    feasible_after: bool


MoveLog = list


def apply_move(
    graph: Graph,
    mapping: Mapping,
    oracle,
    v: int,
    target: int,
    cache: GainCache | None = None,
    gain: int | None = None,
) -> int:
    """Move v to `target`, updating cost, block weights, and the cache.

    Returns the applied gain; the cached objective drops by twice that (one
    per arc direction).  When a cache is given, v's own vector is rebased
    onto the new block and every *active* neighbor vector is adjusted by the
    contribution change of the connecting edge alone; stale neighbors are
    left untouched.
    """
    assignment = mapping.assignment
    source = assignment[v]
    if target == source:
        raise ValueError(f"node {v} is already on PE {target}")
    if gain is None:
        gain = move_gain(graph, assignment, oracle, v, target)

    if cache is not None and cache.is_active(v):
        vector = cache._gains[v]
        assert vector is not None
        g_target = vector.get(target, gain)
        for b in vector:
            vector[b] -= g_target
        vector[target] = 0

    assignment[v] = target
    w = graph.node_weights[v]
    mapping.block_weights[source] -= w
    mapping.block_weights[target] += w
    mapping.objective -= 2 * gain

    if cache is not None:
        dist = oracle.distance
        for u, edge_w in graph.adjacency[v]:
            if not cache.is_active(u):
                continue
            vector = cache._gains[u]
            assert vector is not None
            pu = assignment[u]
            ref_delta = dist(pu, target) - dist(pu, source)
            for b in vector:
                vector[b] += edge_w * (ref_delta - (dist(b, target) - dist(b, source)))
            if target not in vector:
                vector[target] = move_gain(graph, assignment, oracle, u, target)
    return gain
