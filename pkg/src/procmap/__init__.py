"""procmap: multilevel mapping of process graphs onto hierarchical machines."""

from .bench import EvalReport, evaluate_mapping, run_benchmark
from .coarsening import (
    CoarseLevel,
    Matching,
    MultilevelHierarchy,
    coarsen,
    contract,
    edge_ratings,
    global_paths_matching,
    project_mapping,
)
from .gains import GainCache, MoveRecord, apply_move, incident_cost, move_gain
from .generators import grid2d, hierarchy_community, random_geometric
from .graph import (
    BalanceSpec,
    Graph,
    Mapping,
    QuotientGraph,
    boundary_nodes,
    build_quotient_graph,
    compute_block_weights,
    compute_max_block_weight,
    mapping_cost,
)
from .graph_io import parse_metis, read_mapping, write_mapping, write_metis
from .initial_mapping import (
    InitialMappingConfig,
    build_initial_mapping,
    greedy_graph_growing_bisection,
    greedy_volume_assignment,
    multisection_partition,
    recursive_bisection_partition,
    swap_refinement,
    top_down_assignment,
)
from .pipeline import PRESETS, Preset, RunStats, run_mapping
from .refinement import (
    RefinementBudget,
    kway_fm,
    label_propagation_refine,
    multitry_fm,
    quotient_graph_refinement,
    refine_level,
)
from .topology import (
    DistanceOracle,
    HierarchySpec,
    build_oracle,
    encode_binary_label,
)

__version__ = "0.1.0"
