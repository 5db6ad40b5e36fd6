from random import Random

import pytest

from procmap import (
    HierarchySpec,
    build_oracle,
    grid2d,
    hierarchy_community,
    mapping_cost,
    run_mapping,
)
from procmap.graph import Graph, compute_block_weights
from procmap.pipeline import PRESETS, BASELINE_PRESET, PhaseTrace, resolve_preset

from bruteforce import random_connected_graph


class TestPresetTable:
    def test_fastest_has_no_searches(self):
        p = PRESETS["fastest"]
        assert p.searches == ()
        assert not p.delta_gain
        assert p.initial.partitioning == "multisection"
        assert p.initial.one_to_one == "identity"
        assert not p.initial.refine_swaps

    def test_fast_is_label_propagation_with_cache(self):
        p = PRESETS["fast"]
        assert p.searches == ("label_prop",)
        assert p.delta_gain
        assert p.oracle_variant == "binary"

    def test_eco_runs_three_searches(self):
        p = PRESETS["eco"]
        assert p.searches == ("quotient", "kway", "label_prop")
        assert not p.delta_gain

    def test_strong_runs_everything_with_swaps(self):
        p = PRESETS["strong"]
        assert p.searches == ("quotient", "kway", "label_prop", "multitry")
        assert p.initial.refine_swaps

    def test_baseline_uses_greedy_construction(self):
        assert BASELINE_PRESET.initial.one_to_one == "greedy_volume"
        assert BASELINE_PRESET.searches == ()

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError):
            resolve_preset("turbo")


class TestRunMapping:
    def test_single_pe_all_zero(self):
        g = grid2d(4, 4)
        spec = HierarchySpec.parse("1", "1")
        mapping, stats = run_mapping(g, spec, "strong", 0.03, seed=3)
        assert mapping.assignment == [0] * 16
        assert stats.objective == 0

    def test_deterministic_per_seed(self):
        g = hierarchy_community(HierarchySpec.parse("2:2", "1:10"), 8, seed=4)
        spec = HierarchySpec.parse("2:2", "1:10")
        a, stats_a = run_mapping(g, spec, "strong", 0.03, seed=7)
        b, stats_b = run_mapping(g, spec, "strong", 0.03, seed=7)
        assert a.assignment == b.assignment
        assert stats_a.objective == stats_b.objective

    def test_balanced_output(self):
        rng = Random(15)
        g = Graph.from_edges(
            60,
            random_connected_graph(rng, 60, 80),
            [rng.randint(1, 3) for _ in range(60)],
        )
        spec = HierarchySpec.parse("2:2:2", "1:10:100")
        for preset in PRESETS:
            mapping, stats = run_mapping(g, spec, preset, 0.03, seed=2)
            assert stats.balance_ratio <= 1.0
            assert mapping.objective == stats.objective

    def test_trace_objectives_match_recomputation(self):
        g = hierarchy_community(HierarchySpec.parse("2:2", "1:10"), 10, seed=1)
        spec = HierarchySpec.parse("2:2", "1:10")
        oracle = build_oracle(spec, "matrix")
        trace: list[PhaseTrace] = []
        mapping, _ = run_mapping(
            g, spec, "strong", 0.03, seed=5, trace=trace, oracle_variant="matrix"
        )
        assert trace, "strong preset must produce phase snapshots"
        for snap in trace:
            assert snap.objective == mapping_cost(g, list(snap.assignment), oracle), snap.label
        assert trace[-1].objective == mapping.objective

    def test_refinement_phases_never_increase_cost(self):
        g = grid2d(12, 12)
        spec = HierarchySpec.parse("2:2", "1:10")
        trace: list[PhaseTrace] = []
        run_mapping(g, spec, "eco", 0.03, seed=9, trace=trace)
        previous = None
        for snap in trace:
            if previous is not None and not snap.label.startswith("project"):
                assert snap.objective <= previous
            previous = snap.objective

    def test_oracle_variant_override_preserves_result(self):
        g = grid2d(8, 8)
        spec = HierarchySpec.parse("2:2", "1:10")
        base, _ = run_mapping(g, spec, "eco", 0.03, seed=3)
        for variant in ("matrix", "division", "stored_division"):
            other, _ = run_mapping(g, spec, "eco", 0.03, seed=3, oracle_variant=variant)
            assert other.assignment == base.assignment

    def test_stats_fields(self):
        g = grid2d(6, 6)
        spec = HierarchySpec.parse("2:2", "1:10")
        mapping, stats = run_mapping(
            g, spec, "fast", 0.03, seed=1, instance_name="grid6"
        )
        assert stats.instance == "grid6"
        assert stats.k == 4
        assert stats.preset == "fast"
        assert stats.seed == 1
        assert stats.levels >= 1
        assert stats.runtime_s >= stats.phase_coarsen_s
        weights = compute_block_weights(g, mapping.assignment, 4)
        assert weights == mapping.block_weights

    def test_multilevel_pipeline_on_larger_instance(self):
        g = grid2d(80, 80)  # 6400 nodes: one contraction at threshold 4096
        spec = HierarchySpec.parse("2:2", "1:10")
        mapping, stats = run_mapping(g, spec, "fast", 0.03, seed=0)
        assert stats.levels >= 2
        oracle = build_oracle(spec, "binary")
        assert mapping.objective == mapping_cost(g, mapping.assignment, oracle)
        assert stats.balance_ratio <= 1.0

    @pytest.mark.slow
    def test_strong_beats_fastest_on_hundred_k_grid(self):
        g = grid2d(320, 320)  # ~10^5 nodes
        spec = HierarchySpec.parse("4:16:2", "1:10:100")
        strong, fastest = [], []
        for seed in range(5):
            m_strong, s_strong = run_mapping(g, spec, "strong", 0.03, seed=seed)
            m_fastest, s_fastest = run_mapping(g, spec, "fastest", 0.03, seed=seed)
            assert s_strong.balance_ratio <= 1.0
            assert s_fastest.balance_ratio <= 1.0
            strong.append(s_strong.objective)
            fastest.append(s_fastest.objective)
        assert sum(strong) / 5 < sum(fastest) / 5
