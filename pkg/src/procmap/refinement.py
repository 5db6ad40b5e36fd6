"""Local searches applied during uncoarsening.

Four methods, run in a fixed order when enabled: pairwise refinement over the
quotient graph, k-way FM over the whole boundary, label propagation, and
multi-try FM grown from single boundary nodes.  All of them are driven by
move gains, tolerate negative-gain moves while exploring, and roll back to
the best feasible prefix, so on balanced input each search is non-increasing
in cost and keeps the mapping balanced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Sequence

from .gains import GainCache, MoveRecord, apply_move, move_gain, neighboring_blocks
from .graph import BalanceSpec, Graph, Mapping, boundary_nodes
from .queues import GainQueue

SEARCH_ORDER = ("quotient", "kway", "label_prop", "multitry")


@dataclass
class RefinementBudget:
    """Tunables shared by the local searches.

    `alpha`, `beta`, `min_steps` parameterize the adaptive stopping rule of
    the FM searches: after `min_steps` fruitless moves, stop once
    p * mu^2 > alpha * sigma^2 + beta over the gains seen since the last
    improvement.  `beta` defaults to ln(n) of the level being refined.
    """

    alpha: float = 1.0
    beta: float | None = None
    min_steps: int = 15
    lp_rounds: int = 3
    multitry_rounds: int = 3
    move_limit: int | None = None


def _rollback(graph: Graph, mapping: Mapping, oracle, trail: list[MoveRecord], keep: int) -> None:
    """Undo every move after the first `keep`, restoring cost and weights."""
    for rec in reversed(trail[keep:]):
        apply_move(graph, mapping, oracle, rec.node, rec.source, gain=-rec.gain)


def quotient_graph_refinement(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    budget: RefinementBudget,
    seed: int,
) -> list[MoveRecord]:
    """Two-sided FM between every pair of neighboring blocks.

    Pairs are scheduled from a seeded shuffle of the quotient edges; a pair
    whose search strictly improved (less overload, then lower cost) marks both
    blocks active and requeues every pair touching them, until no block is
    active.  Within one pair search each node moves at most once, the side to
    move from is the queue with the larger top gain (overloaded blocks drain
    first, ties go to the heavier block, then random), and the search is
    rolled back to its best feasible prefix.  Also repairs imbalance when the
    input is overloaded; never worsens it.
    """
    rng = Random(seed)
    assignment = mapping.assignment
    k = mapping.k

    qadj: list[dict[int, int]] = [dict() for _ in range(k)]
    for v, u, w in graph.edges():
        bi, bj = assignment[v], assignment[u]
        if bi != bj:
            qadj[bi][bj] = qadj[bi].get(bj, 0) + w
            qadj[bj][bi] = qadj[bj].get(bi, 0) + w
    block_nodes: list[set[int]] = [set() for _ in range(k)]
    for v, b in enumerate(assignment):
        block_nodes[b].add(v)

    pending: list[tuple[int, int]] = sorted(
        (i, j) for i in range(k) for j in qadj[i] if i < j
    )
    rng.shuffle(pending)
    queued = set(pending)
    pending = list(reversed(pending))  # consumed from the back

    committed: list[MoveRecord] = []
    while pending:
        pair = pending.pop()
        queued.discard(pair)
        a, b = pair
        if qadj[a].get(b, 0) <= 0:
            continue
        moves = _pair_search(
            graph, mapping, oracle, balance, rng, a, b, block_nodes, qadj, budget
        )
        if moves:
            committed.extend(moves)
            for blk in (a, b):
                for other in sorted(qadj[blk]):
                    key = (blk, other) if blk < other else (other, blk)
                    if key not in queued:
                        queued.add(key)
                        pending.append(key)
    return committed


def _pair_search(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    rng: Random,
    a: int,
    b: int,
    block_nodes: list[set[int]],
    qadj: list[dict[int, int]],
    budget: RefinementBudget,
) -> list[MoveRecord]:
    assignment = mapping.assignment
    adjacency = graph.adjacency
    node_w = graph.node_weights
    cap = balance.max_block_weight

    def pair_boundary(src: int, dst: int) -> list[int]:
        out = [
            v
            for v in sorted(block_nodes[src])
            if any(assignment[u] == dst for u, _ in adjacency[v])
        ]
        rng.shuffle(out)
        return out

    side_a = pair_boundary(a, b)
    side_b = pair_boundary(b, a)
    if not side_a and not side_b:
        return []

    queues = {a: GainQueue(), b: GainQueue()}
    for v in side_a:
        queues[a].push(v, move_gain(graph, assignment, oracle, v, b))
    for v in side_b:
        queues[b].push(v, move_gain(graph, assignment, oracle, v, a))

    def overload_ab() -> int:
        return max(0, mapping.block_weights[a] - cap) + max(
            0, mapping.block_weights[b] - cap
        )

    rest_feasible = all(
        w <= cap for i, w in enumerate(mapping.block_weights) if i not in (a, b)
    )
    start_score = (overload_ab(), mapping.objective)
    best_score = start_score
    best_idx = 0
    trail: list[MoveRecord] = []
    moved: set[int] = set()

    def record_and_update(node: int, src: int, dst: int, gain: int) -> None:
        apply_move(graph, mapping, oracle, node, dst, gain=gain)
        block_nodes[src].discard(node)
        block_nodes[dst].add(node)
        for u, w in adjacency[node]:
            bu = assignment[u]
            _shift_quotient(qadj, src, bu, -w)
            _shift_quotient(qadj, dst, bu, w)
        feasible = rest_feasible and overload_ab() == 0
        trail.append(MoveRecord(node, src, dst, gain, mapping.objective, feasible))

    while queues[a] or queues[b]:
        if budget.move_limit is not None and len(trail) >= budget.move_limit:
            break
        src = _pick_side(queues, a, b, mapping, cap, rng)
        if src is None:
            break
        node, gain = queues[src].pop()
        if node in moved:
            continue
        dst = b if src == a else a
        w = node_w[node]
        if mapping.block_weights[dst] + w > cap and mapping.block_weights[src] <= cap:
            continue
        record_and_update(node, src, dst, gain)
        moved.add(node)
        score = (overload_ab(), mapping.objective)
        if score < best_score:
            best_score = score
            best_idx = len(trail)
        for u, w_uv in adjacency[node]:
            if u in moved:
                continue
            bu = assignment[u]
            if bu == a:
                queues[a].push(u, move_gain(graph, assignment, oracle, u, b))
            elif bu == b:
                queues[b].push(u, move_gain(graph, assignment, oracle, u, a))

    for rec in reversed(trail[best_idx:]):
        apply_move(graph, mapping, oracle, rec.node, rec.source, gain=-rec.gain)
        block_nodes[rec.target].discard(rec.node)
        block_nodes[rec.source].add(rec.node)
        for u, w in adjacency[rec.node]:
            bu = assignment[u]
            _shift_quotient(qadj, rec.target, bu, -w)
            _shift_quotient(qadj, rec.source, bu, w)

    if best_score < start_score:
        return trail[:best_idx]
    return []


def _shift_quotient(qadj: list[dict[int, int]], x: int, y: int, delta: int) -> None:
    if x == y or delta == 0:
        return
    new = qadj[x].get(y, 0) + delta
    if new:
        qadj[x][y] = new
        qadj[y][x] = new
    else:
        qadj[x].pop(y, None)
        qadj[y].pop(x, None)


def _pick_side(queues, a: int, b: int, mapping: Mapping, cap: int, rng: Random):
    top_a = queues[a].peek()
    top_b = queues[b].peek()
    if top_a is None and top_b is None:
        return None
    if top_a is None:
        return b
    if top_b is None:
        return a
    wa = mapping.block_weights[a]
    wb = mapping.block_weights[b]
    if wa > cap or wb > cap:
        # Drain the (more) overloaded block first.
        if wa > cap and (wb <= cap or wa >= wb):
            return a
        return b
    if top_a[1] != top_b[1]:
        return a if top_a[1] > top_b[1] else b
    if wa != wb:
        return a if wa > wb else b
    return a if rng.random() < 0.5 else b


def kway_fm(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    budget: RefinementBudget,
    seed: int,
) -> list[MoveRecord]:
    """One k-way FM pass seeded with the whole boundary in random order.

    Repeatedly extracts the node with the best gain over blocks it can move
    to without overloading them, moves it (negative gains allowed), inserts
    its unmoved neighbors, and stops on an empty queue or the adaptive rule.
    Rolled back to the lowest-cost prefix, so the cost never increases end to
    end.  Expects a balanced mapping.
    """
    rng = Random(seed)
    init = boundary_nodes(graph, mapping.assignment)
    rng.shuffle(init)
    return _fm_search(graph, mapping, oracle, balance, budget, rng, init)


def _fm_search(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    budget: RefinementBudget,
    rng: Random,
    init_nodes: Sequence[int],
) -> list[MoveRecord]:
    assignment = mapping.assignment
    adjacency = graph.adjacency
    node_w = graph.node_weights
    block_w = mapping.block_weights
    cap = balance.max_block_weight
    alpha = budget.alpha
    beta = budget.beta if budget.beta is not None else math.log(max(graph.n, 2))
    min_steps = budget.min_steps
    feasible = mapping.heaviest_block_weight() <= cap

    def best_target(v: int) -> tuple[int, int] | None:
        cur = assignment[v]
        w = node_w[v]
        best_gain = None
        best_block = -1
        for u, _ in adjacency[v]:
            t = assignment[u]
            if t == cur or block_w[t] + w > cap:
                continue
            g = move_gain(graph, assignment, oracle, v, t)
            if best_gain is None or g > best_gain:
                best_gain = g
                best_block = t
        if best_gain is None:
            return None
        return best_gain, best_block

    pq = GainQueue()
    for v in init_nodes:
        bt = best_target(v)
        if bt is not None:
            pq.push(v, bt[0])

    trail: list[MoveRecord] = []
    moved: set[int] = set()
    best_idx = 0
    best_obj = mapping.objective
    steps_since = 0
    gain_sum = 0.0
    gain_sq = 0.0

    while len(pq):
        if budget.move_limit is not None and len(trail) >= budget.move_limit:
            break
        node, key = pq.pop()
        if node in moved:
            continue
        bt = best_target(node)
        if bt is None:
            continue
        gain, target = bt
        if gain != key:
            pq.push(node, gain)  # key went stale; re-rank and retry
            continue
        source = assignment[node]
        apply_move(graph, mapping, oracle, node, target, gain=gain)
        moved.add(node)
        trail.append(
            MoveRecord(node, source, target, gain, mapping.objective, feasible)
        )
        if mapping.objective < best_obj:
            best_obj = mapping.objective
            best_idx = len(trail)
            steps_since = 0
            gain_sum = 0.0
            gain_sq = 0.0
        else:
            steps_since += 1
            gain_sum += gain
            gain_sq += gain * gain
            if steps_since > min_steps:
                mean = gain_sum / steps_since
                var = gain_sq / steps_since - mean * mean
                if steps_since * mean * mean > alpha * var + beta:
                    break
        for u, _ in adjacency[node]:
            if u in moved:
                continue
            bt = best_target(u)
            if bt is not None:
                pq.push(u, bt[0])
            else:
                pq.discard(u)

    _rollback(graph, mapping, oracle, trail, best_idx)
    return trail[:best_idx]


def label_propagation_refine(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    budget: RefinementBudget,
    seed: int,
    cache: GainCache | None = None,
) -> list[MoveRecord]:
    """Rounds of node visits in fresh random order, best-gain moves only.

    A visited node moves to the neighboring block with the highest positive
    gain among blocks that can absorb it (ties random); with no positive
    option, a zero-gain block is taken with probability one half.  Ends after
    `lp_rounds` rounds or a round without any move.  Gains are served from
    the delta-gain cache when one is supplied; with or without a cache the
    resulting mappings are identical for the same seed.
    """
    rng = Random(seed)
    committed: list[MoveRecord] = []
    feasible = mapping.is_balanced(balance)
    for _ in range(budget.lp_rounds):
        order = list(range(graph.n))
        rng.shuffle(order)
        made_move = False
        for v in order:
            rec = _lp_visit(graph, mapping, oracle, balance, rng, v, cache, feasible)
            if rec is not None:
                committed.append(rec)
                made_move = True
        if not made_move:
            break
    return committed


def _lp_visit(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    rng: Random,
    v: int,
    cache: GainCache | None,
    feasible: bool,
) -> MoveRecord | None:
    assignment = mapping.assignment
    cur = assignment[v]
    w = graph.node_weights[v]
    cap = balance.max_block_weight
    block_w = mapping.block_weights
    candidates = [
        b
        for b in neighboring_blocks(graph, assignment, v)
        if b != cur and block_w[b] + w <= cap
    ]
    if not candidates:
        return None
    if cache is not None:
        gains = [cache.gain(graph, mapping, oracle, v, b) for b in candidates]
    else:
        gains = [move_gain(graph, assignment, oracle, v, b) for b in candidates]
    best = max(gains)
    if best < 0:
        return None
    if best == 0 and rng.random() >= 0.5:
        return None
    tied = [b for b, g in zip(candidates, gains) if g == best]
    target = tied[0] if len(tied) == 1 else rng.choice(tied)
    apply_move(graph, mapping, oracle, v, target, cache=cache, gain=best)
    return MoveRecord(v, cur, target, best, mapping.objective, feasible)


def multitry_fm(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    budget: RefinementBudget,
    seed: int,
) -> list[MoveRecord]:
    """Localized FM trials grown from single boundary nodes.

    Rounds shuffle the current boundary; each unconsumed node roots one FM
    trial (same stop rule and rollback as the k-way search) and nodes moved
    by a committed trial are not reused as roots within the round.  Rounds
    continue while they improve, up to the round budget.
    """
    rng = Random(seed)
    committed: list[MoveRecord] = []
    assignment = mapping.assignment
    adjacency = graph.adjacency
    for _ in range(budget.multitry_rounds):
        roots = boundary_nodes(graph, assignment)
        rng.shuffle(roots)
        consumed: set[int] = set()
        obj_before = mapping.objective
        for r in roots:
            if r in consumed:
                continue
            br = assignment[r]
            if all(assignment[u] == br for u, _ in adjacency[r]):
                continue  # no longer a boundary node
            moves = _fm_search(graph, mapping, oracle, balance, budget, rng, [r])
            if moves:
                committed.extend(moves)
                consumed.update(rec.node for rec in moves)
        if mapping.objective >= obj_before:
            break
    return committed


def refine_level(
    graph: Graph,
    mapping: Mapping,
    oracle,
    balance: BalanceSpec,
    searches: Sequence[str],
    budget: RefinementBudget,
    seed: int,
    cache: GainCache | None = None,
) -> dict[str, list[MoveRecord]]:
    """Run the enabled searches in their canonical order on one level.

    Returns one move log per executed search.  An empty `searches` leaves the
    mapping untouched.
    """
    for name in searches:
        if name not in SEARCH_ORDER:
            raise ValueError(f"unknown refinement {name!r}, expected {SEARCH_ORDER}")
    rng = Random(seed)
    logs: dict[str, list[MoveRecord]] = {}
    for name in SEARCH_ORDER:
        if name not in searches:
            continue
        sub_seed = rng.randrange(2**62)
        if name == "quotient":
            logs[name] = quotient_graph_refinement(
                graph, mapping, oracle, balance, budget, sub_seed
            )
        elif name == "kway":
            logs[name] = kway_fm(graph, mapping, oracle, balance, budget, sub_seed)
        elif name == "label_prop":
            logs[name] = label_propagation_refine(
                graph, mapping, oracle, balance, budget, sub_seed, cache=cache
            )
        else:
            logs[name] = multitry_fm(graph, mapping, oracle, balance, budget, sub_seed)
    return logs


def replay(graph: Graph, initial: Mapping, oracle, log: Sequence[MoveRecord]) -> Mapping:
    """Re-apply a move log to a copy of `initial`; reproduces the final state."""
    result = initial.copy()
    for rec in log:
        if result.assignment[rec.node] != rec.source:
            raise ValueError(
                f"log does not fit mapping: node {rec.node} is on "
                f"{result.assignment[rec.node]}, log expects {rec.source}"
            )
        apply_move(graph, result, oracle, rec.node, rec.target, gain=rec.gain)
        if result.objective != rec.objective_after:
            raise ValueError(f"replay diverged at move {rec}")
    return result
