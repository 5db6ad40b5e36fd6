from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procmap import (
    Graph,
    GainCache,
    HierarchySpec,
    Mapping,
    build_oracle,
    kway_fm,
    label_propagation_refine,
    mapping_cost,
    move_gain,
    multitry_fm,
    quotient_graph_refinement,
    refine_level,
)
from procmap.graph import BalanceSpec, compute_block_weights
from procmap.queues import GainQueue
from procmap.refinement import RefinementBudget, _lp_visit, replay

from bruteforce import enumerate_optimum, random_connected_graph


def make_random_instance(seed, n_max=14, k=4):
    rng = Random(seed)
    n = rng.randint(k, n_max)
    g = Graph.from_edges(
        n,
        random_connected_graph(rng, n, rng.randint(1, n)),
        [rng.randint(1, 2) for _ in range(n)],
    )
    spec = HierarchySpec.parse("2:2", "1:10")
    oracle = build_oracle(spec, "matrix")
    balance = BalanceSpec.create(0.3, k, g.total_node_weight)
    while True:
        assignment = [rng.randrange(k) for _ in range(n)]
        weights = compute_block_weights(g, assignment, k)
        if max(weights) <= balance.max_block_weight:
            break
    mapping = Mapping.from_assignment(g, assignment, k, oracle)
    return g, spec, oracle, balance, mapping


class TestGainQueue:
    def test_max_first(self):
        q = GainQueue()
        q.push(1, 5)
        q.push(2, 9)
        q.push(3, 7)
        assert q.pop() == (2, 9)
        assert q.pop() == (3, 7)
        assert q.pop() == (1, 5)

    def test_lifo_on_ties(self):
        q = GainQueue()
        q.push(1, 4)
        q.push(2, 4)
        q.push(3, 4)
        assert [q.pop()[0] for _ in range(3)] == [3, 2, 1]

    def test_update_supersedes(self):
        q = GainQueue()
        q.push(1, 4)
        q.push(2, 6)
        q.push(1, 8)
        assert q.pop() == (1, 8)
        assert q.pop() == (2, 6)
        assert len(q) == 0

    def test_discard(self):
        q = GainQueue()
        q.push(1, 4)
        q.discard(1)
        assert q.peek() is None
        assert 1 not in q


class TestQuotientRefinement:
    def test_local_optimum_untouched(self):
        g = Graph.from_edges(4, [(0, 1, 9), (2, 3, 9), (1, 2, 1)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 4)
        mapping = Mapping.from_assignment(g, [0, 0, 1, 1], 2, oracle)
        before = mapping.objective
        log = quotient_graph_refinement(
            g, mapping, oracle, balance, RefinementBudget(), seed=3
        )
        assert log == []
        assert mapping.objective == before
        assert mapping.assignment == [0, 0, 1, 1]

    def test_misplaced_node_moved_for_its_gain(self):
        # node 3 sits with block 1 but talks only to block 0; the zero-slack
        # cap leaves that single move as the only legal improvement
        g = Graph.from_edges(6, [(0, 1, 2), (0, 3, 7), (1, 3, 6), (4, 5, 2), (1, 4, 1)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 6)
        mapping = Mapping.from_assignment(g, [0, 0, 1, 1, 1, 1], 2, oracle)
        before = mapping.objective
        expected_gain = move_gain(g, mapping.assignment, oracle, 3, 0)
        assert expected_gain == 65
        log = quotient_graph_refinement(
            g, mapping, oracle, balance, RefinementBudget(), seed=1
        )
        assert [rec.node for rec in log] == [3]
        assert log[0].gain == expected_gain
        assert before - mapping.objective == 2 * expected_gain

    @given(st.integers(0, 2**30))
    @settings(max_examples=25)
    def test_between_input_and_bruteforce_optimum(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed, n_max=11)
        before = mapping.objective
        quotient_graph_refinement(g, mapping, oracle, balance, RefinementBudget(), seed)
        assert mapping.objective <= before
        assert mapping.objective == mapping_cost(g, mapping.assignment, oracle)
        assert mapping.heaviest_block_weight() <= balance.max_block_weight
        optimum = enumerate_optimum(
            g, 4, balance.max_block_weight, oracle.distance_matrix()
        )
        assert mapping.objective >= optimum

    def test_repairs_overload_when_possible(self):
        g = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 4)  # cap 2
        mapping = Mapping.from_assignment(g, [0, 0, 0, 1], 2, oracle)
        assert mapping.heaviest_block_weight() > balance.max_block_weight
        quotient_graph_refinement(g, mapping, oracle, balance, RefinementBudget(), 2)
        assert mapping.heaviest_block_weight() <= balance.max_block_weight


class TestKwayFM:
    def test_no_boundary_is_noop(self):
        g = Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 4)
        mapping = Mapping.from_assignment(g, [0, 0, 1, 1], 2, oracle)
        log = kway_fm(g, mapping, oracle, balance, RefinementBudget(), 0)
        assert log == []
        assert mapping.assignment == [0, 0, 1, 1]

    @given(st.integers(0, 2**30))
    @settings(max_examples=40)
    def test_monotone_and_balanced(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed)
        before = mapping.objective
        log = kway_fm(g, mapping, oracle, balance, RefinementBudget(), seed)
        assert mapping.objective <= before
        assert mapping.objective == mapping_cost(g, mapping.assignment, oracle)
        assert mapping.heaviest_block_weight() <= balance.max_block_weight
        if log:
            assert mapping.objective < before

    def test_move_limit_respected(self):
        g, spec, oracle, balance, mapping = make_random_instance(77, n_max=14)
        budget = RefinementBudget(move_limit=1)
        log = kway_fm(g, mapping, oracle, balance, budget, 5)
        assert len(log) <= 1


class TestLabelPropagation:
    def test_converged_state_no_moves(self):
        g = Graph.from_edges(4, [(0, 1, 9), (2, 3, 9)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 4)
        mapping = Mapping.from_assignment(g, [0, 0, 1, 1], 2, oracle)
        log = label_propagation_refine(
            g, mapping, oracle, balance, RefinementBudget(), 0
        )
        assert log == []

    def test_hub_moves_for_its_gain_when_visited(self, quad):
        # loose balance (cap 4) lets the 3-node module take the hub
        g, oracle = quad.graph, quad.oracle()
        balance = BalanceSpec.create(1, 4, 8)
        assert balance.max_block_weight == 4
        mapping = quad.mapping_a()
        before = mapping.objective
        rec = _lp_visit(
            g, mapping, oracle, balance, Random(0), quad.u, None, True
        )
        assert rec is not None
        assert rec.node == quad.u and rec.target == 0 and rec.gain == 2
        assert before - mapping.objective == 4  # twice the gain

    @given(st.integers(0, 2**30))
    @settings(max_examples=40)
    def test_cache_on_off_identical(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed, n_max=20)
        twin = mapping.copy()
        budget = RefinementBudget()
        log_plain = label_propagation_refine(
            g, mapping, oracle, balance, budget, seed, cache=None
        )
        cache = GainCache(g.n)
        log_cached = label_propagation_refine(
            g, twin, oracle, balance, budget, seed, cache=cache
        )
        assert mapping.assignment == twin.assignment
        assert mapping.objective == twin.objective
        assert [(r.node, r.target) for r in log_plain] == [
            (r.node, r.target) for r in log_cached
        ]

    @given(st.integers(0, 2**30))
    @settings(max_examples=30)
    def test_monotone_balanced_and_bounded_rounds(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed)
        before = mapping.objective
        budget = RefinementBudget(lp_rounds=2)
        log = label_propagation_refine(g, mapping, oracle, balance, budget, seed)
        assert mapping.objective <= before
        assert mapping.heaviest_block_weight() <= balance.max_block_weight
        assert all(rec.gain >= 0 for rec in log)
        assert len(log) <= 2 * g.n


class TestMultitryFM:
    def test_no_boundary_is_noop(self):
        g = Graph.from_edges(4, [(0, 1, 1), (2, 3, 1)])
        spec = HierarchySpec.parse("2", "5")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0, 2, 4)
        mapping = Mapping.from_assignment(g, [0, 0, 1, 1], 2, oracle)
        assert multitry_fm(g, mapping, oracle, balance, RefinementBudget(), 0) == []

    @given(st.integers(0, 2**30))
    @settings(max_examples=30)
    def test_monotone_and_balanced(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed)
        before = mapping.objective
        multitry_fm(g, mapping, oracle, balance, RefinementBudget(), seed)
        assert mapping.objective <= before
        assert mapping.objective == mapping_cost(g, mapping.assignment, oracle)
        assert mapping.heaviest_block_weight() <= balance.max_block_weight

    def test_escapes_a_kway_fixpoint(self):
        # found by scanning random small instances: the kway pass stalls at a
        # local optimum that localized single-root trials break out of
        rng = Random(8)
        n = rng.randint(6, 12)
        g = Graph.from_edges(n, random_connected_graph(rng, n, rng.randint(2, 8)))
        spec = HierarchySpec.parse("2:2", "1:10")
        oracle = build_oracle(spec, "matrix")
        balance = BalanceSpec.create(0.3, 4, n)
        assignment = [rng.randrange(4) for _ in range(n)]
        assert max(compute_block_weights(g, assignment, 4)) <= balance.max_block_weight
        stuck = Mapping.from_assignment(g, assignment, 4, oracle)
        budget = RefinementBudget()
        while kway_fm(g, stuck, oracle, balance, budget, 8):
            pass
        assert stuck.objective == 272
        escaped = stuck.copy()
        multitry_fm(g, escaped, oracle, balance, budget, 9)
        assert escaped.objective < stuck.objective
        assert escaped.objective == 88

    @given(st.integers(0, 2**30))
    @settings(max_examples=25)
    def test_replaying_log_reproduces_result(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed)
        initial = mapping.copy()
        log = multitry_fm(g, mapping, oracle, balance, RefinementBudget(), seed)
        replayed = replay(g, initial, oracle, log)
        assert replayed.assignment == mapping.assignment
        assert replayed.objective == mapping.objective


class TestRefineLevel:
    def test_no_searches_leaves_mapping_untouched(self, quad):
        mapping = quad.mapping_a()
        reference = mapping.copy()
        logs = refine_level(
            quad.graph,
            mapping,
            quad.oracle(),
            BalanceSpec.create(0.03, 4, 8),
            (),
            RefinementBudget(),
            seed=1,
        )
        assert logs == {}
        assert mapping.assignment == reference.assignment
        assert mapping.objective == reference.objective

    def test_only_requested_searches_run(self, quad):
        mapping = quad.mapping_a()
        logs = refine_level(
            quad.graph,
            mapping,
            quad.oracle(),
            BalanceSpec.create(1, 4, 8),
            ("label_prop",),
            RefinementBudget(),
            seed=1,
        )
        assert set(logs) == {"label_prop"}

    def test_canonical_order(self):
        g, spec, oracle, balance, mapping = make_random_instance(4)
        logs = refine_level(
            g,
            mapping,
            oracle,
            balance,
            ("multitry", "quotient", "label_prop", "kway"),
            RefinementBudget(),
            seed=9,
        )
        assert list(logs) == ["quotient", "kway", "label_prop", "multitry"]

    def test_unknown_search_rejected(self, quad):
        with pytest.raises(ValueError):
            refine_level(
                quad.graph,
                quad.mapping_a(),
                quad.oracle(),
                BalanceSpec.create(0.03, 4, 8),
                ("annealing",),
                RefinementBudget(),
                seed=0,
            )

    @given(st.integers(0, 2**30))
    @settings(max_examples=20)
    def test_full_stack_monotone(self, seed):
        g, spec, oracle, balance, mapping = make_random_instance(seed)
        before = mapping.objective
        refine_level(
            g,
            mapping,
            oracle,
            balance,
            ("quotient", "kway", "label_prop", "multitry"),
            RefinementBudget(),
            seed,
        )
        assert mapping.objective <= before
        assert mapping.objective == mapping_cost(g, mapping.assignment, oracle)
        assert mapping.heaviest_block_weight() <= balance.max_block_weight
