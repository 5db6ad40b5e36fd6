"""End-to-end multilevel mapping pipeline and its quality/speed presets.

A run coarsens the communication graph, constructs an initial mapping on the
coarsest level, then walks back up, refining after the initial construction
and after every uncoarsening step with the searches the preset enables:

* ``fastest`` - multisection + identity construction, no refinement at all
  (and therefore no distance queries while uncoarsening).
* ``fast``    - label propagation with delta-gain updates.
* ``eco``     - quotient-graph refinement, k-way FM, label propagation.
* ``strong``  - swap-refined construction plus all four searches.

All presets answer distance queries through the packed binary labels unless
overridden.  Runs are deterministic functions of (graph, hierarchy, preset,
epsilon, seed).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from random import Random

from .coarsening import coarsen, project_mapping
from .gains import GainCache
from .graph import BalanceSpec, Graph, Mapping
from .initial_mapping import InitialMappingConfig, build_initial_mapping
from .refinement import SEARCH_ORDER, RefinementBudget, refine_level
from .topology import HierarchySpec, build_oracle

DEFAULT_EPSILON = 0.03


@dataclass(frozen=True)
class Preset:
    name: str
    initial: InitialMappingConfig
    searches: tuple[str, ...]
    delta_gain: bool
    oracle_variant: str = "binary"


PRESETS: dict[str, Preset] = {
    "fastest": Preset("fastest", InitialMappingConfig(), (), False),
    "fast": Preset("fast", InitialMappingConfig(), ("label_prop",), True),
    "eco": Preset("eco", InitialMappingConfig(), ("quotient", "kway", "label_prop"), False),
    "strong": Preset(
        "strong",
        InitialMappingConfig(refine_swaps=True),
        ("quotient", "kway", "label_prop", "multitry"),
        False,
    ),
}

#: Reference construction for improvement figures: multisection partition,
#: then the greedy volume/distance placement, no refinement.
BASELINE_PRESET = Preset(
    "baseline", InitialMappingConfig(one_to_one="greedy_volume"), (), False
)


def resolve_preset(name: str) -> Preset:
    if name == "baseline":
        return BASELINE_PRESET
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}, expected one of "
            f"{', '.join([*PRESETS, 'baseline'])}"
        ) from None


@dataclass
class RunStats:
    instance: str
    k: int
    preset: str
    seed: int
    objective: int
    runtime_s: float
    phase_coarsen_s: float
    phase_initial_s: float
    phase_refine_s: float
    levels: int
    balance_ratio: float


@dataclass(frozen=True)
class PhaseTrace:
    """Snapshot taken after a pipeline phase, for objective audits."""

    label: str
    objective: int
    assignment: tuple[int, ...]


def run_mapping(
    graph: Graph,
    spec: HierarchySpec,
    preset: Preset | str,
    epsilon=DEFAULT_EPSILON,
    seed: int = 0,
    *,
    instance_name: str = "",
    oracle_variant: str | None = None,
    swap_radius: int | None = None,
    budget: RefinementBudget | None = None,
    trace: list[PhaseTrace] | None = None,
) -> tuple[Mapping, RunStats]:
    """Run the full pipeline; returns the final mapping and run statistics.

    `trace`, when given, collects a snapshot after the initial mapping, every
    projection, and every refinement search, so tests can audit the cached
    objective against a recomputation at each phase boundary.
    """
    if isinstance(preset, str):
        preset = resolve_preset(preset)
    if oracle_variant is not None:
        preset = replace(preset, oracle_variant=oracle_variant)
    if swap_radius is not None:
        preset = replace(preset, initial=replace(preset.initial, swap_radius=swap_radius))
    if budget is None:
        budget = RefinementBudget()

    oracle = build_oracle(spec, preset.oracle_variant)
    balance = BalanceSpec.create(epsilon, spec.k, graph.total_node_weight)
    rng = Random(seed)
    seed_coarsen = rng.randrange(2**62)
    seed_initial = rng.randrange(2**62)
    seed_refine = rng.randrange(2**62)

    t0 = time.perf_counter()
    hierarchy = coarsen(graph, balance, seed_coarsen)
    t1 = time.perf_counter()
    coarsest = hierarchy.coarsest.graph
    mapping = build_initial_mapping(
        coarsest, spec, balance, oracle, preset.initial, seed_initial
    )
    t2 = time.perf_counter()
    if trace is not None:
        trace.append(PhaseTrace("initial", mapping.objective, tuple(mapping.assignment)))

    refine_rng = Random(seed_refine)
    for level_index in range(hierarchy.depth - 1, -1, -1):
        level_graph = hierarchy.levels[level_index].graph
        steps_done = hierarchy.depth - 1 - level_index
        if level_index < hierarchy.depth - 1:
            mapping = project_mapping(hierarchy, mapping, to_level=level_index)
            if trace is not None:
                trace.append(
                    PhaseTrace(
                        f"project:{level_index}",
                        mapping.objective,
                        tuple(mapping.assignment),
                    )
                )
        cache = None
        if preset.delta_gain and preset.searches:
            cache = GainCache(level_graph.n)
            cache.epoch = steps_done
        for name in SEARCH_ORDER:
            if name not in preset.searches:
                continue
            refine_level(
                level_graph,
                mapping,
                oracle,
                balance,
                (name,),
                budget,
                refine_rng.randrange(2**62),
                cache=cache,
            )
            if trace is not None:
                trace.append(
                    PhaseTrace(
                        f"L{level_index}:{name}",
                        mapping.objective,
                        tuple(mapping.assignment),
                    )
                )
    t3 = time.perf_counter()

    stats = RunStats(
        instance=instance_name,
        k=spec.k,
        preset=preset.name,
        seed=seed,
        objective=mapping.objective,
        runtime_s=t3 - t0,
        phase_coarsen_s=t1 - t0,
        phase_initial_s=t2 - t1,
        phase_refine_s=t3 - t2,
        levels=hierarchy.depth,
        balance_ratio=mapping.heaviest_block_weight() / balance.max_block_weight,
    )
    return mapping, stats
