import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unrel.exact import (
    basic_range,
    enumerate_cuts,
    exact_ideal_loads,
    exact_unreliability,
    k_tau,
    min_ratio_cut,
    unreliability,
)
from unrel.generators import complete, cycle
from unrel.graph import CapabilityError, MultiGraph, edge_connectivity

from conftest import two_triangles_bridge
from test_graph import small_graphs


def networkx_unreliability(g: MultiGraph, p: float) -> float:
    """Independent route: sum over unit-edge failure patterns using networkx connectivity."""
    unit = [(int(u), int(v)) for u, v, w in zip(g.a, g.b, g.w) for _ in range(int(w))]
    total = 0.0
    for alive in itertools.product([0, 1], repeat=len(unit)):
        h = nx.Graph()
        h.add_nodes_from(range(g.n))
        h.add_edges_from(e for e, keep in zip(unit, alive) if keep)
        if not nx.is_connected(h):
            k = sum(alive)
            total += (1 - p) ** k * p ** (len(unit) - k)
    return total


class TestExactUnreliability:
    def test_single_edge(self):
        assert unreliability(MultiGraph.from_edges(2, [(0, 1)]), 0.3) == pytest.approx(0.3, rel=1e-14)

    def test_triangle(self):
        g = complete(3)
        assert unreliability(g, 0.5) == pytest.approx(0.5, rel=1e-14)
        assert unreliability(g, 0.5, "enum") == pytest.approx(0.5, rel=1e-14)

    def test_c4(self):
        assert unreliability(cycle(4), 0.5) == pytest.approx(0.6875, rel=1e-14)

    def test_degenerate(self):
        assert exact_unreliability(MultiGraph.from_edges(1, []), 0.3) == -math.inf
        assert exact_unreliability(MultiGraph.from_edges(3, [(0, 1)]), 0.3) == 0.0

    def test_capability_limits(self):
        with pytest.raises(CapabilityError):
            exact_unreliability(cycle(17), 0.1)

    @given(small_graphs(6), st.sampled_from([0.05, 0.3, 0.7]))
    @settings(max_examples=40, deadline=None)
    def test_dp_matches_enumeration(self, g, p):
        if not g.is_connected():
            return
        dp = exact_unreliability(g, p, "dp")
        en = exact_unreliability(g, p, "enum")
        assert dp == pytest.approx(en, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("g", [cycle(5), complete(4), two_triangles_bridge()], ids=["c5", "k4", "bridge"])
    def test_against_networkx_route(self, g):
        assert unreliability(g, 0.2) == pytest.approx(networkx_unreliability(g, 0.2), rel=1e-12)

    def test_tiny_p_no_underflow(self):
        lu = exact_unreliability(complete(8), 1e-200)
        assert lu == pytest.approx(math.log(8) + 7 * math.log(1e-200), rel=1e-9)


class TestCuts:
    def test_triangle(self):
        cs = enumerate_cuts(complete(3), 0.5)
        assert cs.z == pytest.approx(0.75)
        assert cs.x == pytest.approx(0.75)

    def test_single_edge(self):
        cs = enumerate_cuts(MultiGraph.from_edges(2, [(0, 1)]), 0.2)
        assert cs.z == pytest.approx(0.2)
        assert cs.log_x == -math.inf

    def test_k4(self):
        assert enumerate_cuts(complete(4), 0.1).z == pytest.approx(0.0043, rel=1e-12)

    @given(small_graphs(6), st.sampled_from([0.1, 0.5]))
    @settings(max_examples=40, deadline=None)
    def test_bonferroni_and_basic_range(self, g, p):
        if not g.is_connected():
            return
        cs = enumerate_cuts(g, p)
        u = unreliability(g, p)
        assert cs.z - cs.x <= u * (1 + 1e-12) + 1e-300
        assert u <= cs.z * (1 + 1e-12)
        lo, hi = basic_range(g, p)
        assert lo - 1e-12 <= math.log(u) <= hi + 1e-12

    def test_count_at_most(self):
        cs = enumerate_cuts(complete(4), 0.1)
        assert cs.count_at_most(3) == 4
        assert cs.count_at_most(4) == 7


class TestIdealLoads:
    def test_ratio_cuts(self):
        assert min_ratio_cut(cycle(4)).ratio == Fraction(4, 3)
        assert min_ratio_cut(cycle(4)).parts == 4
        assert min_ratio_cut(complete(4)).ratio == 2
        rc = min_ratio_cut(two_triangles_bridge())
        assert rc.ratio == 1 and rc.parts == 2

    def test_loads(self):
        c4 = exact_ideal_loads(cycle(4))
        assert all(v == Fraction(3, 4) for v in c4.loads.values())
        assert c4.pi_star == Fraction(4, 3)
        k4 = exact_ideal_loads(complete(4))
        assert all(v == Fraction(1, 2) for v in k4.loads.values())
        g = two_triangles_bridge()
        tb = exact_ideal_loads(g)
        assert tb[6] == 1
        assert all(tb[e] == Fraction(2, 3) for e in range(6))

    def test_k_tau(self):
        k4 = complete(4)
        loads = exact_ideal_loads(k4)
        assert k_tau(loads, k4, 2) == 4
        assert k_tau(loads, k4, 1.9) == 1
        g = two_triangles_bridge()
        assert k_tau(exact_ideal_loads(g), g, 1.2) == 2

    @given(small_graphs(6))
    @settings(max_examples=30, deadline=None)
    def test_polytope_and_pi_range(self, g):
        if not g.is_connected():
            return
        loads = exact_ideal_loads(g)
        arr = np.array([loads[e] for e in g.ids])
        # sum over unit edges of ℓ* equals n - 1
        assert sum(Fraction(a) * int(w) for a, w in zip(arr, g.w)) == g.n - 1
        lam = edge_connectivity(g)
        assert Fraction(lam, 2) < loads.pi_star <= lam
