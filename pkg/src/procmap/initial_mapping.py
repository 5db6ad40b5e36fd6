"""Constructing the first mapping on the coarsest graph.

Two-phase construction: a balanced partition (plain recursive bisection, or a
multisection that follows the machine hierarchy level by level and therefore
aligns block ids with PE ids), then a one-to-one placement of blocks onto PEs
(identity, a top-down multisection of the block model, or the classic greedy
volume/distance construction used as a baseline), optionally polished by a
hop-limited swap search over the block model.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Sequence

from .graph import (
    BalanceSpec,
    Graph,
    Mapping,
    QuotientGraph,
    build_quotient_graph,
    induced_subgraph,
)
from .queues import GainQueue
from .topology import HierarchySpec


class InfeasibleBalanceError(ValueError):
    """No partition can satisfy the balance constraint."""


@dataclass(frozen=True)
class InitialMappingConfig:
    """Which construction runs in each phase.

    `one_to_one` may be "auto": identity when the PE count is a power of two
    (plain bisection then already follows the hierarchy), top_down otherwise.
    """

    partitioning: str = "multisection"  # "multisection" | "bisection"
    one_to_one: str = "identity"  # "identity" | "top_down" | "auto" | "greedy_volume"
    refine_swaps: bool = False
    swap_radius: int = 10


def resolve_one_to_one(method: str, k: int) -> str:
    if method != "auto":
        return method
    return "identity" if k & (k - 1) == 0 else "top_down"


def greedy_graph_growing_bisection(
    graph: Graph, targets: tuple[int, int], seed: int
) -> list[int]:
    """Split nodes into sides 0/1 with side weights within `targets`.

    Side 0 is grown from a seed node by absorbing the boundary node with the
    highest cut gain until its proportional share is filled (best of four
    random seeds is kept), then a cut FM pass improves the split.  Raises
    when the targets cannot be met.
    """
    cap0, cap1 = targets
    total = graph.total_node_weight
    if cap0 + cap1 < total:
        raise InfeasibleBalanceError(
            f"targets ({cap0}, {cap1}) cannot hold total weight {total}"
        )
    rng = Random(seed)
    need = max(0, total - cap1)
    share = min(cap0, max(need, total * cap0 // (cap0 + cap1)))

    best_side = None
    best_score = None
    for _ in range(4):
        side = _grow_once(graph, share, need, cap0, rng)
        score = (_overload(graph, side, targets), _cut_weight(graph, side))
        if best_score is None or score < best_score:
            best_score = score
            best_side = side
    assert best_side is not None
    side = best_side
    _two_way_cut_fm(graph, side, targets, rng)
    w0 = sum(graph.node_weights[v] for v in range(graph.n) if side[v] == 0)
    if w0 > cap0 or total - w0 > cap1:
        raise InfeasibleBalanceError(
            f"bisection weights ({w0}, {total - w0}) exceed targets {targets}"
        )
    return side


def _grow_once(graph: Graph, share: int, need: int, hard_cap: int, rng: Random) -> list[int]:
    n = graph.n
    node_w = graph.node_weights
    adjacency = graph.adjacency
    side = [1] * n
    grown = [False] * n
    inner = [0] * n  # edge weight from v into the grown side
    pq = GainQueue()
    w0 = 0

    def absorb(v: int) -> None:
        nonlocal w0
        grown[v] = True
        side[v] = 0
        w0 += node_w[v]
        pq.discard(v)
        for u, w in adjacency[v]:
            if not grown[u]:
                inner[u] += w
                pq.push(u, 2 * inner[u] - graph.weighted_degree(u))

    def reseed() -> bool:
        candidates = [v for v in range(n) if not grown[v] and w0 + node_w[v] <= hard_cap]
        if not candidates:
            return False
        absorb(rng.choice(candidates))
        return True

    if n == 0 or (share == 0 and need == 0):
        return side  # an empty grown side already satisfies the targets
    if not reseed():
        return side  # nothing fits; leave repair to the FM pass
    while w0 < share:
        top = pq.peek()
        if top is None:
            if w0 >= need or not reseed():
                break
            continue
        v, _ = pq.pop()
        c = node_w[v]
        if w0 + c > hard_cap:
            continue
        if w0 + c > share and w0 >= need:
            break
        absorb(v)
    return side


def _cut_weight(graph: Graph, side: Sequence[int]) -> int:
    return sum(w for u, v, w in graph.edges() if side[u] != side[v])


def _overload(graph: Graph, side: Sequence[int], caps: tuple[int, int]) -> int:
    weights = [0, 0]
    for v in range(graph.n):
        weights[side[v]] += graph.node_weights[v]
    return max(0, weights[0] - caps[0]) + max(0, weights[1] - caps[1])


def _two_way_cut_fm(
    graph: Graph,
    side: list[int],
    caps: tuple[int, int],
    rng: Random,
    passes: int = 2,
) -> None:
    """Edge-cut FM on a bisection.

    Keeps the best (overload, cut) prefix of each pass, so it both improves
    the cut and repairs cap violations left by the growing phase when it can.
    """
    adjacency = graph.adjacency
    node_w = graph.node_weights
    weights = [0, 0]
    for v in range(graph.n):
        weights[side[v]] += node_w[v]

    def gain_of(v: int) -> int:
        s = side[v]
        g = 0
        for u, w in adjacency[v]:
            g += w if side[u] != s else -w
        return g

    def overload_now() -> int:
        return max(0, weights[0] - caps[0]) + max(0, weights[1] - caps[1])

    for _ in range(passes):
        eligible = {
            v
            for v in range(graph.n)
            if any(side[u] != side[v] for u, _ in adjacency[v])
        }
        for s in (0, 1):
            if weights[s] > caps[s]:
                eligible.update(v for v in range(graph.n) if side[v] == s)
        order = sorted(eligible)
        rng.shuffle(order)
        queues = (GainQueue(), GainQueue())
        for v in order:
            queues[side[v]].push(v, gain_of(v))
        cut = _cut_weight(graph, side)
        best = (overload_now(), cut)
        trail: list[tuple[int, int]] = []  # (node, gain)
        best_idx = 0
        moved = set()
        while len(queues[0]) or len(queues[1]):
            pick = None
            top0, top1 = queues[0].peek(), queues[1].peek()
            if top0 is not None and (
                top1 is None or top0[1] > top1[1] or (top0[1] == top1[1] and rng.random() < 0.5)
            ):
                pick = 0
            elif top1 is not None:
                pick = 1
            if pick is None:
                break
            v, g = queues[pick].pop()
            if v in moved:
                continue
            tgt = 1 - pick
            if weights[tgt] + node_w[v] > caps[tgt] and weights[pick] <= caps[pick]:
                continue
            side[v] = tgt
            weights[pick] -= node_w[v]
            weights[tgt] += node_w[v]
            cut -= g
            moved.add(v)
            trail.append((v, g))
            score = (overload_now(), cut)
            if score < best:
                best = score
                best_idx = len(trail)
            for u, _ in adjacency[v]:
                if u not in moved:
                    queues[side[u]].push(u, gain_of(u))
        improved = best_idx > 0
        for v, g in reversed(trail[best_idx:]):
            s = side[v]
            side[v] = 1 - s
            weights[s] -= node_w[v]
            weights[1 - s] += node_w[v]
        if not improved:
            break


def recursive_bisection_partition(
    graph: Graph,
    k: int,
    max_block_weight: int,
    seed: int,
    leaf_headroom: bool = False,
) -> list[int]:
    """Split into k blocks of weight <= `max_block_weight` by halving.

    A split into k blocks first bisects with targets floor(k/2) and ceil(k/2)
    times the block cap, then recurses; the left subtree receives the lower
    block ids, so ids are consecutive along the recursion.  `leaf_headroom`
    keeps even the final blocks a little under their cap (when slack allows),
    for callers that will subdivide them further.
    """
    if k < 1:
        raise InfeasibleBalanceError(f"cannot partition into {k} blocks")
    if graph.n and max(graph.node_weights) > max_block_weight:
        raise InfeasibleBalanceError(
            f"a node of weight {max(graph.node_weights)} exceeds the "
            f"block cap {max_block_weight}"
        )
    if graph.total_node_weight > k * max_block_weight:
        raise InfeasibleBalanceError(
            f"total weight {graph.total_node_weight} exceeds "
            f"{k} x {max_block_weight}"
        )
    blocks = [0] * graph.n
    rng = Random(seed)

    def rec(nodes: list[int], k_sub: int, base: int) -> None:
        if k_sub == 1:
            for g in nodes:
                blocks[g] = base
            return
        k1 = k_sub // 2
        k2 = k_sub - k1
        sub, back = induced_subgraph(graph, nodes)
        hard = (k1 * max_block_weight, k2 * max_block_weight)
        # Reserve headroom on sides that must split further: a side handed
        # down at exactly its cap would force its own split to pack weights
        # perfectly, which lumpy node weights cannot always do.
        c_max = max(sub.node_weights, default=0)
        slack = hard[0] + hard[1] - sub.total_node_weight
        reserve = (
            min(2 * c_max if (k1 > 1 or leaf_headroom) else 0, slack * k1 // k_sub),
            min(2 * c_max if (k2 > 1 or leaf_headroom) else 0, slack * k2 // k_sub),
        )
        soft = (hard[0] - reserve[0], hard[1] - reserve[1])
        side = None
        for attempt in range(8):
            targets = soft if attempt < 5 else hard
            try:
                side = greedy_graph_growing_bisection(sub, targets, rng.randrange(2**62))
                break
            except InfeasibleBalanceError:
                if attempt == 7:
                    raise
        assert side is not None
        left = [back[i] for i in range(sub.n) if side[i] == 0]
        right = [back[i] for i in range(sub.n) if side[i] == 1]
        rec(left, k1, base)
        rec(right, k2, base + k1)

    rec(list(range(graph.n)), k, 0)
    return blocks


def multisection_partition(
    graph: Graph, spec: HierarchySpec, max_block_weight: int, seed: int
) -> list[int]:
    """Partition along the machine hierarchy, one level at a time.

    The top level splits everything into a_l parts, each part is split into
    a_{l-1} sub-parts, and so on; every split runs the recursive bisection
    restricted to its subgraph.  Block ids come out consecutive inside every
    module at every level, matching the canonical PE numbering, so block b
    naturally corresponds to PE b.
    """
    rng = Random(seed)
    blocks = [0] * graph.n
    widths = [1]
    for a in spec.arities:
        widths.append(widths[-1] * a)  # widths[t] = blocks under a level-t module

    def rec(nodes: list[int], level: int, base: int) -> None:
        if level == 0:
            for g in nodes:
                blocks[g] = base
            return
        parts = spec.arities[level - 1]
        child_width = widths[level - 1]
        if parts == 1:
            rec(nodes, level - 1, base)
            return
        sub, back = induced_subgraph(graph, nodes)
        part_ids = recursive_bisection_partition(
            sub,
            parts,
            child_width * max_block_weight,
            rng.randrange(2**62),
            leaf_headroom=level >= 2,  # these parts split again below
        )
        for j in range(parts):
            part = [back[i] for i in range(sub.n) if part_ids[i] == j]
            rec(part, level - 1, base + j * child_width)

    rec(list(range(graph.n)), spec.levels, 0)
    return blocks


def top_down_assignment(model: QuotientGraph, spec: HierarchySpec, seed: int) -> list[int]:
    """Place blocks onto PEs by perfectly balanced multisection of the model.

    Recursively divides the k blocks into a_l groups of exactly k/a_l blocks
    (minimizing the model weight crossing groups), assigns groups to modules,
    and recurses inside each module down to single PEs.
    """
    k = model.k
    if k != spec.k:
        raise ValueError(f"model has {k} blocks but hierarchy has {spec.k} PEs")
    rng = Random(seed)
    perm = [0] * k

    def rec(ids: list[int], level: int, pe_base: int) -> None:
        if level == 0:
            perm[ids[0]] = pe_base
            return
        parts = spec.arities[level - 1]
        group_size = len(ids) // parts
        groups = _exact_groups(model, ids, parts, rng)
        for j, group in enumerate(groups):
            rec(group, level - 1, pe_base + j * group_size)

    rec(list(range(k)), spec.levels, 0)
    return perm


def _exact_groups(
    model: QuotientGraph, ids: list[int], parts: int, rng: Random
) -> list[list[int]]:
    if parts == 1:
        return [ids]
    size = len(ids) // parts
    p1 = parts // 2
    first = _exact_bisect(model, ids, p1 * size, rng)
    rest = [v for v in ids if v not in first]
    return _exact_groups(model, sorted(first), p1, rng) + _exact_groups(
        model, sorted(rest), parts - p1, rng
    )


def _exact_bisect(model: QuotientGraph, ids: list[int], count: int, rng: Random) -> set[int]:
    """Pick exactly `count` of `ids` with high internal model weight."""
    members = set(ids)
    chosen: set[int] = set()
    conn: dict[int, int] = {}
    pq = GainQueue()

    def absorb(v: int) -> None:
        chosen.add(v)
        pq.discard(v)
        for u, w in model.neighbors(v):
            if u in members and u not in chosen:
                conn[u] = conn.get(u, 0) + w
                pq.push(u, conn[u])

    while len(chosen) < count:
        top = pq.peek()
        if top is None:
            outside = sorted(members - chosen)
            absorb(rng.choice(outside))
        else:
            absorb(pq.pop()[0])

    _swap_improve(model, chosen, members - chosen)
    return chosen


def _swap_improve(model: QuotientGraph, side_a: set[int], side_b: set[int], rounds: int = 2) -> None:
    """Exchange pairs across an exact split while the crossing weight drops."""

    def conn_to(v: int, group: set[int]) -> int:
        return sum(w for u, w in model.neighbors(v) if u in group)

    for _ in range(rounds):
        improved = False
        for x in sorted(side_a):
            for y in sorted(side_b):
                w_xy = model.edge_weight(x, y)
                delta = (
                    conn_to(x, side_a)
                    + conn_to(y, side_b)
                    - conn_to(x, side_b)
                    - conn_to(y, side_a)
                    + 2 * w_xy
                )
                if delta < 0:
                    side_a.remove(x)
                    side_b.remove(y)
                    side_a.add(y)
                    side_b.add(x)
                    improved = True
                    break
        if not improved:
            break


def model_cost(model: QuotientGraph, perm: Sequence[int], oracle) -> int:
    """Mapped cost of the block model under a block -> PE bijection.

    Counted over ordered pairs (twice per model edge) to line up with the
    full objective.
    """
    dist = oracle.distance
    return 2 * sum(
        w * dist(perm[i], perm[j]) for (i, j), w in model.edge_weights.items()
    )


def hop_limited_pairs(model: QuotientGraph, radius: int) -> list[tuple[int, int]]:
    """Unordered block pairs within `radius` hops in the model."""
    pairs = []
    for start in range(model.k):
        depth = {start: 0}
        frontier = [start]
        for d in range(1, radius + 1):
            nxt = []
            for v in frontier:
                for u, _ in model.neighbors(v):
                    if u not in depth:
                        depth[u] = d
                        nxt.append(u)
            frontier = nxt
        for v in depth:
            if v > start:
                pairs.append((start, v))
    return pairs


def swap_refinement(
    perm: Sequence[int], model: QuotientGraph, oracle, radius: int = 10
) -> list[int]:
    """Greedy improving swaps of PE assignments between nearby blocks.

    Scans every unordered block pair within `radius` hops of each other in
    the model and swaps their PEs whenever that strictly lowers the mapped
    cost; repeats until a full scan makes no swap.
    """
    perm = list(perm)
    if radius < 1 or model.k <= 1:
        return perm
    dist = oracle.distance
    while True:
        improved = False
        for i, j in hop_limited_pairs(model, radius):
            pi, pj = perm[i], perm[j]
            delta = 0
            for nb, w in model.neighbors(i):
                if nb != j:
                    delta += w * (dist(pj, perm[nb]) - dist(pi, perm[nb]))
            for nb, w in model.neighbors(j):
                if nb != i:
                    delta += w * (dist(pi, perm[nb]) - dist(pj, perm[nb]))
            if delta < 0:
                perm[i], perm[j] = pj, pi
                improved = True
        if not improved:
            break
    return perm


def greedy_volume_assignment(model: QuotientGraph, oracle) -> list[int]:
    """Classic greedy construction: busiest block onto the most central PE.

    The first block (largest total communication volume) goes to the PE with
    the smallest total distance to all others; afterwards, the unassigned
    block communicating most with already placed blocks goes to the
    unassigned PE closest to already used PEs.  Ties break to the lowest id.
    """
    k = model.k
    dist = oracle.distance
    perm = [-1] * k
    block_free = [True] * k
    pe_free = [True] * k
    volume = [model.weighted_degree(b) for b in range(k)]
    pe_total = [sum(dist(p, q) for q in range(k)) for p in range(k)]
    load = [0] * k
    dist_to_used = [0] * k

    for step in range(k):
        block_key = volume if step == 0 else load
        pe_key = pe_total if step == 0 else dist_to_used
        b = min(
            (i for i in range(k) if block_free[i]),
            key=lambda i: (-block_key[i], i),
        )
        p = min(
            (q for q in range(k) if pe_free[q]),
            key=lambda q: (pe_key[q], q),
        )
        perm[b] = p
        block_free[b] = False
        pe_free[p] = False
        for nb, w in model.neighbors(b):
            load[nb] += w
        for q in range(k):
            if pe_free[q]:
                dist_to_used[q] += dist(q, p)
    return perm


def build_initial_mapping(
    graph: Graph,
    spec: HierarchySpec,
    balance: BalanceSpec,
    oracle,
    config: InitialMappingConfig,
    seed: int,
) -> Mapping:
    """Run both construction phases and return the balanced initial mapping."""
    rng = Random(seed)
    k = spec.k
    if config.partitioning == "multisection":
        blocks = multisection_partition(
            graph, spec, balance.max_block_weight, rng.randrange(2**62)
        )
    elif config.partitioning == "bisection":
        blocks = recursive_bisection_partition(
            graph, k, balance.max_block_weight, rng.randrange(2**62)
        )
    else:
        raise ValueError(f"unknown partitioning {config.partitioning!r}")

    method = resolve_one_to_one(config.one_to_one, k)
    model: QuotientGraph | None = None
    if method == "identity":
        perm = list(range(k))
    elif method == "top_down":
        model = build_quotient_graph(graph, blocks, k)
        perm = top_down_assignment(model, spec, rng.randrange(2**62))
    elif method == "greedy_volume":
        model = build_quotient_graph(graph, blocks, k)
        perm = greedy_volume_assignment(model, oracle)
    else:
        raise ValueError(f"unknown one-to-one method {method!r}")

    if config.refine_swaps:
        if model is None:
            model = build_quotient_graph(graph, blocks, k)
        perm = swap_refinement(perm, model, oracle, config.swap_radius)

    assignment = [perm[b] for b in blocks]
    return Mapping.from_assignment(graph, assignment, k, oracle)
