import hypothesis
import pytest

from procmap import Graph, HierarchySpec, Mapping, build_oracle

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True
)
hypothesis.settings.load_profile("default")


class QuadExample:
    """Eight nodes on a 2x2 machine (costs 1:10), worked out by hand.

    Two hub nodes (v, u) share an edge and carry three satellites each; the
    per-PE cost and gain tables for both hubs, before and after moving v,
    are known exactly.  PE modules are {0, 1} and {2, 3}.
    """

    def __init__(self):
        self.spec = HierarchySpec.parse("2:2", "1:10")
        self.y = [0, 1, 2, 3, 4, 5]
        self.v = 6
        self.u = 7
        edges = [
            (self.v, self.u, 1),
            (self.v, 0, 1),
            (self.v, 1, 1),
            (self.v, 2, 1),
            (self.u, 3, 1),
            (self.u, 4, 1),
            (self.u, 5, 1),
        ]
        self.graph = Graph.from_edges(8, edges)
        # y1, y2 -> 2; y3 -> 0; y4 -> 2; y5 -> 0; y6 -> 3; v -> 0; u -> 1
        self.assignment_a = [2, 2, 0, 2, 0, 3, 0, 1]
        self.objective_a = 84
        self.objective_b = 82  # after moving v from PE 0 to PE 2 (gain 1)

        self.cost_v_a = {0: 21, 2: 20, 1: 21}
        self.gain_v_a = {0: 0, 2: 1, 1: 0}
        self.cost_u_a = {0: 20, 2: 21, 3: 21, 1: 22}
        self.gain_u_a = {0: 2, 2: 1, 3: 1, 1: 0}

        self.cost_v_b = {0: 21, 2: 20, 1: 21}
        self.gain_v_b = {0: -1, 2: 0, 1: -1}
        self.cost_u_b = {0: 30, 2: 11, 3: 12, 1: 31}
        self.gain_u_b = {0: 1, 2: 20, 3: 19, 1: 0}

    def oracle(self, variant="matrix"):
        return build_oracle(self.spec, variant)

    def mapping_a(self, variant="matrix") -> Mapping:
        return Mapping.from_assignment(
            self.graph, self.assignment_a, 4, self.oracle(variant)
        )


@pytest.fixture
def quad():
    return QuadExample()
