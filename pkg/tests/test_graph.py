import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unrel.generators import complete, cycle, dumbbell, path, star
from unrel.graph import (
    FailureProb,
    GraphInputError,
    MultiGraph,
    VertexMap,
    contract_3lambda_strong,
    contract_edges,
    edge_connectivity,
    min_cut,
    random_contract,
    st_max_flow,
    strong_components,
)

from conftest import two_triangles_bridge


def brute_min_cut(g: MultiGraph) -> int:
    best = None
    for mask in range(1, 2 ** (g.n - 1)):
        side = np.array([(mask >> v) & 1 for v in range(g.n)], dtype=bool)
        val = g.cut_value(side)
        best = val if best is None else min(best, val)
    return best


@st.composite
def small_graphs(draw, max_n=7):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=12))
    ws = draw(st.lists(st.integers(1, 3), min_size=len(chosen), max_size=len(chosen)))
    return MultiGraph.from_edges(n, [(u, v, w) for (u, v), w in zip(chosen, ws)])


class TestConstruction:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphInputError):
            MultiGraph.from_edges(3, [(1, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphInputError):
            MultiGraph.from_edges(3, [(0, 3)])

    def test_rejects_zero_multiplicity(self):
        with pytest.raises(GraphInputError):
            MultiGraph.from_edges(3, [(0, 1, 0)])

    def test_m_counts_multiplicity(self):
        g = MultiGraph.from_edges(3, [(0, 1, 3), (1, 2)])
        assert g.m == 4 and g.num_bundles == 2

    def test_failure_prob_bounds(self):
        with pytest.raises(GraphInputError):
            FailureProb.of(0.0)
        with pytest.raises(GraphInputError):
            FailureProb.of(1.0)
        assert FailureProb.of(0.25).log_p == pytest.approx(np.log(0.25))


class TestContraction:
    def test_triangle_single_merge(self):
        g = MultiGraph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
        h, vm = contract_edges(g, [0])
        assert h.n == 2
        assert sorted(h.ids.tolist()) == [1, 2]
        assert vm.size == 2 and vm(0) == vm(1)

    def test_empty_set_is_identity(self):
        g = dumbbell(4, 2)
        h, vm = contract_edges(g, [])
        assert h.n == g.n and h.edge_list() == g.edge_list()
        assert np.array_equal(vm.target, VertexMap.identity(g.n).target)

    def test_c4_opposite_edges(self):
        h, _ = contract_edges(cycle(4), [0, 2])
        assert h.n == 2 and h.m == 2

    @given(small_graphs(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_ids_stable_and_loops_dropped(self, g, data):
        chosen = data.draw(st.lists(st.sampled_from(g.ids.tolist()), unique=True))
        h, vm = contract_edges(g, chosen)
        assert np.all(h.a != h.b)
        assert set(h.ids.tolist()) <= set(g.ids.tolist()) - set(chosen)
        for e in h.ids:
            pos = g.position(e)
            assert {int(vm(g.a[pos])), int(vm(g.b[pos]))} == {int(h.a[h.position(e)]), int(h.b[h.position(e)])}

    def test_near_one_keep_prob_leaves_graph(self, rng):
        g = complete(5)
        h, _ = random_contract(g, 1 - 1e-15, rng)
        assert h.n == g.n

    def test_single_edge_half(self, rng):
        g = MultiGraph.from_edges(2, [(0, 1)])
        hits = sum(random_contract(g, 0.5, rng)[0].n == 1 for _ in range(10000))
        assert abs(hits - 5000) <= 3 * 50

    def test_star_survivors_bound(self, rng):
        g = star(100)
        pi = 0.3
        surv = [random_contract(g, 1 - pi, rng)[0].m for _ in range(300)]
        # every surviving edge is a whole uncontracted edge; expected (1 - π) * 100
        assert np.mean(surv) <= g.n / pi


class TestMinCut:
    def test_examples(self):
        assert min_cut(cycle(5))[0] == 2
        assert min_cut(complete(4))[0] == 3
        lam, side = min_cut(two_triangles_bridge())
        assert lam == 1
        assert set(side) in ({0, 1, 2}, {3, 4, 5})

    @given(small_graphs())
    @settings(max_examples=80, deadline=None)
    def test_matches_brute_force(self, g):
        lam, side = min_cut(g)
        assert lam == brute_min_cut(g)
        mask = np.zeros(g.n, dtype=bool)
        mask[list(side)] = True
        assert 0 < mask.sum() < g.n
        assert g.cut_value(mask) == lam

    def test_disconnected_is_zero(self):
        g = MultiGraph.from_edges(4, [(0, 1), (2, 3)])
        assert edge_connectivity(g) == 0


class TestMaxFlow:
    def test_examples(self):
        assert st_max_flow(path(3), 0, 2)[0] == 1
        for s, t in itertools.combinations(range(4), 2):
            assert st_max_flow(complete(4), s, t)[0] == 3
        assert st_max_flow(dumbbell(4, 2), 0, 7)[0] == 2

    @given(small_graphs(6), st.data())
    @settings(max_examples=50, deadline=None)
    def test_side_is_min_cut(self, g, data):
        s, t = data.draw(st.sampled_from(list(itertools.permutations(range(g.n), 2))))
        value, side = st_max_flow(g, s, t)
        assert s in side and t not in side
        mask = np.zeros(g.n, dtype=bool)
        mask[list(side)] = True
        assert g.cut_value(mask) == value


class TestStrongComponents:
    def test_two_triangles(self):
        assert strong_components(two_triangles_bridge(), 2) == [[0, 1, 2], [3, 4, 5]]

    def test_connected_high_lambda(self):
        assert strong_components(complete(5), 4) == [list(range(5))]

    def test_tree_singletons(self):
        assert strong_components(path(5), 2) == [[v] for v in range(5)]

    def test_c6_unchanged(self):
        h, _ = contract_3lambda_strong(cycle(6))
        assert h.n == 6

    def test_two_k5(self):
        h, vm = contract_3lambda_strong(dumbbell(5, 1))
        assert h.n == 2 and h.m == 1
        assert len(set(vm.target[:5].tolist())) == 1

    def test_k4_unchanged(self):
        assert contract_3lambda_strong(complete(4))[0].n == 4

    @given(small_graphs(6), st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_blocks_are_k_connected(self, g, k):
        blocks = strong_components(g, k)
        assert sorted(v for b in blocks for v in b) == list(range(g.n))
        for b in blocks:
            for s, t in itertools.combinations(b, 2):
                assert st_max_flow(g, s, t)[0] >= k
