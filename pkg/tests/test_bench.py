import csv
import math

import pytest

from procmap import HierarchySpec, build_oracle, evaluate_mapping, grid2d, mapping_cost
from procmap.bench import (
    CSV_HEADER,
    distance_query_benchmark,
    geometric_mean,
    resolve_hierarchy_template,
    run_benchmark,
)
from procmap.generators import hierarchy_community
from procmap.graph import MappingError


class TestEvaluate:
    def test_all_on_one_pe(self):
        g = grid2d(3, 3)
        spec = HierarchySpec.parse("2:2", "1:10")
        report = evaluate_mapping(g, [0] * 9, spec)
        assert report.objective == 0
        assert report.level_traffic == [0, 0]
        assert report.intra_volume == 2 * g.m

    def test_worked_instance_breakdown(self, quad):
        report = evaluate_mapping(quad.graph, quad.assignment_a, quad.spec)
        assert report.objective == quad.objective_a
        assert report.intra_volume == 2      # the v-y3 edge, both directions
        assert report.level_traffic == [4, 8]  # v-u and u-y5; the four cost-10 arcs

    def test_cost_identity_holds(self):
        g = hierarchy_community(HierarchySpec.parse("2:2", "1:10"), 5, seed=8)
        spec = HierarchySpec.parse("2:2", "1:10")
        assignment = [v % 4 for v in range(g.n)]
        report = evaluate_mapping(g, assignment, spec)
        assert report.objective == sum(
            d * t for d, t in zip(spec.link_costs, report.level_traffic)
        )
        oracle = build_oracle(spec, "matrix")
        assert report.objective == mapping_cost(g, assignment, oracle)

    def test_balance_fields(self):
        g = grid2d(2, 2)
        spec = HierarchySpec.parse("2:2", "1:10")
        report = evaluate_mapping(g, [0, 0, 0, 1], spec, epsilon=0)
        assert report.max_block_weight == 3
        assert report.allowed_block_weight == 1
        assert report.balance_ratio == 3.0

    def test_size_mismatch_rejected(self):
        g = grid2d(2, 2)
        spec = HierarchySpec.parse("2:2", "1:10")
        with pytest.raises(MappingError):
            evaluate_mapping(g, [0, 0, 0], spec)
        with pytest.raises(MappingError):
            evaluate_mapping(g, [0, 0, 0, 7], spec)


class TestTemplate:
    def test_fills_star(self):
        assert resolve_hierarchy_template("4:16:*", 128) == "4:16:2"
        assert resolve_hierarchy_template("4:16:*", 64) == "4:16:1"

    def test_fixed_template_checked(self):
        assert resolve_hierarchy_template("2:2", 4) == "2:2"
        with pytest.raises(ValueError):
            resolve_hierarchy_template("2:2", 8)

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError):
            resolve_hierarchy_template("4:16:*", 100)


class TestGeometricMean:
    def test_value(self):
        assert geometric_mean([2, 8]) == pytest.approx(4.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            geometric_mean([])


@pytest.fixture(scope="module")
def small_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench") / "out.csv"
    instances = [
        ("community", hierarchy_community(HierarchySpec.parse("2:2", "1:10"), 8, seed=1)),
        ("grid", grid2d(8, 8)),
    ]
    result = run_benchmark(
        instances,
        k_values=[4],
        preset_names=["fastest", "strong"],
        seeds=[0, 1],
        arity_template="2:2",
        cost_text="1:10",
        epsilon=0.03,
        out_csv=out,
    )
    return result, out


class TestRunBenchmark:
    def test_row_counts(self, small_result):
        result, _ = small_result
        # 2 instances x 1 k x (2 presets + baseline) x 2 seeds
        assert len(result.rows) == 12
        assert not result.failures

    def test_csv_header_and_shape(self, small_result):
        _, out = small_result
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 13

    def test_summary_reproducible_from_rows(self, small_result):
        result, out = small_result
        rows = list(csv.DictReader(out.open()))
        recomputed = {}
        for k in {int(r["k"]) for r in rows}:
            for preset in {r["preset"] for r in rows}:
                per_instance = []
                for instance in {r["instance"] for r in rows}:
                    cell = [
                        int(r["J"])
                        for r in rows
                        if r["preset"] == preset
                        and int(r["k"]) == k
                        and r["instance"] == instance
                    ]
                    per_instance.append(sum(cell) / len(cell))
                logs = sum(math.log(max(v, 1e-12)) for v in per_instance)
                recomputed[(k, preset)] = math.exp(logs / len(per_instance))
        for row in result.summary:
            assert row["geomean_J"] == pytest.approx(
                recomputed[(row["k"], row["preset"])]
            )

    def test_improvement_formula(self, small_result):
        result, _ = small_result
        by_preset = {row["preset"]: row for row in result.summary}
        base = by_preset["baseline"]["geomean_J"]
        for preset, row in by_preset.items():
            expected = (base / row["geomean_J"] - 1.0) * 100.0
            assert row["improvement_over_baseline_pct"] == pytest.approx(expected)
        assert by_preset["baseline"]["improvement_over_baseline_pct"] == pytest.approx(0.0)

    def test_profile_ratios(self, small_result):
        result, _ = small_result
        for row in result.profile:
            assert 0 < row["runtime_ratio"] <= 1.0
        slowest = [r for r in result.profile if r["runtime_ratio"] == 1.0]
        assert slowest  # someone is the slowest per (instance, k)

    def test_companion_files_written(self, small_result):
        _, out = small_result
        assert out.with_suffix(".summary.csv").exists()
        assert out.with_suffix(".profile.csv").exists()

    def test_failures_recorded_not_raised(self, tmp_path):
        # a node heavier than the cap makes the strong preset infeasible
        from procmap.graph import Graph

        bad = Graph.from_edges(2, [(0, 1, 1)], [100, 1])
        out = tmp_path / "out.csv"
        result = run_benchmark(
            [("bad", bad)],
            k_values=[4],
            preset_names=["fastest"],
            seeds=[0],
            arity_template="2:2",
            cost_text="1:10",
            out_csv=out,
        )
        assert result.rows == []
        assert len(result.failures) == 2  # fastest and baseline
        assert out.with_suffix(".errors.csv").exists()


class TestDistanceMicrobenchmark:
    def test_reports_all_variants(self):
        spec = HierarchySpec.parse("4:4:4", "1:10:100")
        timings = distance_query_benchmark(
            spec, variants=("binary", "matrix"), total_pairs=200_000, chunk=100_000
        )
        assert set(timings) == {"binary", "matrix"}
        assert all(t > 0 for t in timings.values())
