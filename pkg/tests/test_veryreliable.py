import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unrel.config import RecursionConfig
from unrel.cutquery import build_index
from unrel.exact import enumerate_cuts
from unrel.generators import complete, cycle, dumbbell, gnp, path
from unrel.graph import GraphInputError, st_max_flow
from unrel.reliable import side_key
from unrel.veryreliable import (
    build_ladder,
    draw_vr,
    estimator_sample_vr,
    gomory_hu,
    ladder_indices,
    log_q_vr,
    q_of_cut_vr,
    run_very_reliable,
    sample_sides_vr,
)

CFG = RecursionConfig(vr_pack_rounds=300)


def ladder_of(g, rng, count=2):
    return build_ladder(g, gomory_hu(g), min(gomory_hu(g).capacity[1:]), rng, CFG, sparse_count=count)


class TestGomoryHu:
    def test_path(self):
        t = gomory_hu(path(3))
        assert sorted(t.capacity[1:].tolist()) == [1, 1]
        assert t.pair_value(0, 2) == 1

    def test_k4_star(self):
        t = gomory_hu(complete(4))
        assert t.capacity[1:].tolist() == [3, 3, 3]

    def test_dumbbell(self):
        g = dumbbell(4, 2)
        t = gomory_hu(g)
        assert t.pair_value(0, 5) == 2
        # 0 and 1 also carry bridge edges (degree 4); 2, 3, 6, 7 have degree 3
        assert t.pair_value(2, 3) == 3 and t.pair_value(6, 7) == 3
        assert t.pair_value(0, 1) == st_max_flow(g, 0, 1)[0] == 4

    @given(st.integers(5, 14), st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_all_pairs_match_max_flow(self, n, seed):
        g = gnp(n, 0.5, seed=seed)
        t = gomory_hu(g)
        for u, v in itertools.combinations(range(n), 2):
            assert t.pair_value(u, v) == st_max_flow(g, u, v)[0]

    def test_rejects_single_vertex(self):
        with pytest.raises(GraphInputError):
            gomory_hu(path(2).__class__.from_edges(1, []))


class TestLadder:
    def test_indices_n100(self):
        assert ladder_indices(100) == [10, 31]

    def test_k4_levels_skipped(self, rng):
        lad = ladder_of(complete(4), rng)
        assert all(lv.graph.n == 1 for lv in lad.levels[:-1])
        assert [lv.graph.n for lv in lad.active] == [4]

    def test_cycle_last_level_original(self, rng):
        g = cycle(9)
        lad = ladder_of(g, rng)
        assert len(lad.active) == 1
        assert lad.active[0].graph is g
        assert all(lv.graph.n == 1 for lv in lad.levels[:-1])

    def test_skipped_levels_never_drawn(self, rng):
        lad = ladder_of(complete(4), rng)
        sides = sample_sides_vr(lad, 2000, rng)
        assert np.all(sides.any(axis=1) != sides.all(axis=1))


class TestQ:
    def test_single_edge_formula(self, rng):
        g = cycle(5)
        lad = ladder_of(g, rng, count=1)
        lv = lad.active[0]
        tree = lv.trees[0]
        # cutting one tree edge: reachable only as (e, e)
        pos = int(tree[0])
        side = build_index(g, tree).side([int(g.ids[pos])])
        crossing = (side[g.a[tree]] != side[g.b[tree]]).sum()
        expect = (1 if crossing == 1 else 2) / (g.n - 1) ** 2
        assert math.exp(q_of_cut_vr(lad, side)) == pytest.approx(expect)

    def test_three_tree_edges_zero(self, rng):
        g = path(5)
        lad = build_ladder(g, gomory_hu(g), 1, rng, CFG, sparse_count=1)
        side = np.array([0, 1, 0, 1, 1], dtype=bool)
        assert q_of_cut_vr(lad, side) == -math.inf

    def test_split_supernode_contributes_nothing(self, rng):
        g = dumbbell(4, 1)
        lad = build_ladder(g, gomory_hu(g), 1, rng, CFG, sparse_count=2)
        split = np.zeros(g.n, dtype=bool)
        split[[0, 1]] = True
        for lv in lad.active:
            if lv.graph.n < g.n:
                assert not lv.vmap.preserves(split)

    def test_enumerated_distribution(self, rng):
        g = dumbbell(3, 1)
        lad = ladder_of(g, rng, count=2)
        cs = enumerate_cuts(g, 0.5)
        total = np.exp(log_q_vr(lad, cs.sides())).sum()
        assert total == pytest.approx(1.0, rel=1e-12)
        sides = sample_sides_vr(lad, 20000, rng)
        keys = [side_key(s) for s in sides]
        uniq = {k: s for k, s in zip(keys, sides)}
        obs = np.array([keys.count(k) for k in uniq]) / len(keys)
        exp = np.exp(log_q_vr(lad, np.array(list(uniq.values()))))
        assert np.max(np.abs(obs - exp)) < 0.02


class TestEstimator:
    def test_threshold(self):
        lam = 10
        assert estimator_sample_vr(lam, math.log(0.1), math.log(0.5), lam) == pytest.approx(lam * math.log(0.1) - math.log(0.5))
        assert estimator_sample_vr(math.ceil(1.1 * lam), math.log(0.1), math.log(0.5), lam) == -math.inf

    def test_unbiased_on_toy(self, rng):
        g = cycle(6)
        lad = ladder_of(g, rng)
        cs = enumerate_cuts(g, 0.1)
        sides = cs.sides()
        lq = log_q_vr(lad, sides)
        keep = cs.values < 1.1 * 2
        ok = np.isfinite(lq)
        assert np.all(ok[keep])
        mean = np.sum(np.exp(cs.values * cs.log_p)[keep])
        assert mean == pytest.approx(math.exp(cs.log_z_where(keep)), rel=1e-12)
        draws = draw_vr(lad, math.log(0.1), 5000, rng)
        assert math.exp(np.logaddexp.reduce(draws) - math.log(len(draws))) == pytest.approx(mean, rel=0.1)

    def test_run(self, rng):
        g = dumbbell(4, 2)
        est = run_very_reliable(g, 1e-20, 0.5, rng, 2, CFG.with_(reliable_samples_const=0.2))
        cs = enumerate_cuts(g, 1e-20)
        target = math.exp(cs.log_z_where(cs.values < 2.2))
        assert est.value == pytest.approx(target, rel=0.2)
        assert est.biased
