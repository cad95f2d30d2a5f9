import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb
from scipy.stats import chisquare

from unrel.config import RecursionConfig
from unrel.exact import enumerate_cuts
from unrel.generators import cycle, dumbbell
from unrel.graph import GraphInputError, edge_connectivity
from unrel.packing import EdgeLayering, TreePacking, approx_ideal_loads, greedy_pack, layer_edges
from unrel.reliable import (
    ReliableSampler,
    Verdict,
    count_profiles,
    estimator_sample,
    q_of_cut,
    reliable_sample_count,
    run_reliable,
    side_key,
    surrogate_check,
    surrogate_terms,
)


def c4_sampler(trees, j_cap=3, p=0.5):
    g = cycle(4)
    full = greedy_pack(g, 4)
    lay = layer_edges(np.full(4, 0.75), 2, 0.5, g=g)
    trees = np.array(trees)
    sparse = TreePacking(g, trees, trees, np.arange(len(trees)))
    return ReliableSampler.build(g, p, full, sparse, lay, j_cap=j_cap)


def layering(pis, k_tilde, delta=0.25, lam=2):
    pis = np.asarray(pis, dtype=float)
    return EdgeLayering(delta, lam, pis, np.zeros(1, dtype=np.int64), np.asarray(k_tilde))


class TestSurrogate:
    def test_tiny_p_reliable(self):
        lay = layering([1.0, 1.5, 2.25], [1, 3, 8])
        assert surrogate_check(lay, 1e-300, 64, 0.25).verdict is Verdict.RELIABLE

    def test_k_one_unreliable_at_zero(self):
        n, delta = 64, 0.25
        # p^{2π_0} = 0.5 > n^{-1-30δ}
        lay = layering([1.0, 1.5], [1, 1], delta)
        p = math.sqrt(0.5)
        assert p ** 2 > n ** (-1 - 30 * delta)
        d = surrogate_check(lay, p, n, delta)
        assert d.verdict is Verdict.UNRELIABLE and d.failing_level == 0

    @pytest.mark.parametrize("slack", [2.0, 8.0, 30.0])
    def test_sign_rule(self, slack):
        n, delta, p = 64, 0.25, 0.05
        lay = layering([4.0], [8], delta)
        expect = (1 + slack * delta) * math.log(n) + math.log(8) + 2 * 4.0 * math.log(p)
        assert surrogate_terms(lay, math.log(p), n, delta, slack)[0] == pytest.approx(expect)
        verdict = surrogate_check(lay, p, n, delta, slack).verdict
        assert verdict is (Verdict.RELIABLE if expect <= 0 else Verdict.UNRELIABLE)

    def test_configured_slack_reliable_example(self):
        lay = layering([4.0], [8])
        assert surrogate_check(lay, 0.05, 64, 0.25, RecursionConfig().surrogate_slack).verdict is Verdict.RELIABLE


class TestProfiles:
    def test_examples(self):
        assert count_profiles([3], 3) == 3
        assert count_profiles([2, 2], 2) == 5
        assert count_profiles([1, 1, 1], 3) == 7

    @given(st.lists(st.integers(0, 4), min_size=1, max_size=4), st.integers(1, 6))
    @settings(max_examples=60, deadline=None)
    def test_brute_force(self, caps, j):
        brute = sum(1 for prof in itertools.product(*(range(c + 1) for c in caps)) if 0 < sum(prof) <= j)
        assert count_profiles(caps, j) == brute


class TestSampler:
    def test_c4_one_tree_probabilities(self):
        s = c4_sampler([[0, 1, 2]])
        # hand enumeration: profile j uniform on {1,2,3}, then a uniform j-subset of the 3 tree edges
        expect = {}
        for j in (1, 2, 3):
            for subset in itertools.combinations([0, 1, 2], j):
                side = np.zeros(4, dtype=bool)
                # cutting path edges 0-1, 1-2, 2-3: parity of cut edges left of each vertex
                for v in range(4):
                    side[v] = sum(e < v for e in subset) % 2 == 1
                key = side_key(side)
                expect[key] = expect.get(key, 0.0) + 1 / 3 / comb(3, j)
        assert len(expect) == 7
        for mask in range(1, 8):
            side = np.array([0] + [(mask >> k) & 1 for k in range(3)], dtype=bool)
            assert math.exp(q_of_cut(s, side)) == pytest.approx(expect[side_key(side)], rel=1e-12)
        assert sum(expect.values()) == pytest.approx(1.0)

    def test_duplicate_trees_same_q(self):
        one = c4_sampler([[0, 1, 2]])
        two = c4_sampler([[0, 1, 2], [0, 1, 2]])
        sides = enumerate_cuts(one.graph, 0.5).sides()
        assert np.allclose(one.log_q(sides), two.log_q(sides))

    def test_q_zero_beyond_cap(self):
        s = c4_sampler([[0, 1, 2]], j_cap=1)
        side = np.array([0, 1, 0, 1], dtype=bool)  # crosses all three tree edges
        assert q_of_cut(s, side) == -math.inf

    def test_single_crossing_formula(self):
        s = c4_sampler([[0, 1, 2]], j_cap=3)
        side = np.array([0, 1, 1, 1], dtype=bool)
        assert math.exp(q_of_cut(s, side)) == pytest.approx((1 / 3) * (1 / 3))

    def test_profile_uniform(self, rng):
        s = c4_sampler([[0, 1, 2]], j_cap=3)
        _, prof, chosen, _ = s.sample_batch(30000, rng)
        assert prof.sum(axis=1).min() >= 1
        assert np.array_equal(prof.sum(axis=1), chosen.sum(axis=1))
        freq = np.bincount(prof[:, s.layering.level[0]], minlength=4)[1:]
        assert chisquare(freq).pvalue > 0.001

    def test_empirical_matches_q(self, rng):
        g = dumbbell(3, 1)
        lam = edge_connectivity(g)
        loads, full = approx_ideal_loads(g, 0.5, lam=lam)
        lay = layer_edges(loads, lam, 0.5, g=g)
        trees = full.trees[:3]
        sparse = TreePacking(g, trees, trees, np.arange(3))
        s = ReliableSampler.build(g, 0.3, full, sparse, lay, j_cap=3)
        _, _, _, sides = s.sample_batch(40000, rng)
        keys = [side_key(x) for x in sides]
        uniq = {}
        for k, row in zip(keys, sides):
            uniq.setdefault(k, row)
        obs = np.array([keys.count(k) for k in uniq])
        exp = np.exp(s.log_q(np.array(list(uniq.values())))) * len(keys)
        assert exp.sum() == pytest.approx(len(keys), rel=1e-9)
        assert chisquare(obs, exp).pvalue > 0.001

    def test_sides_fix_vertex_zero_free(self, rng):
        s = c4_sampler([[0, 1, 2]])
        _, _, _, sides = s.sample_batch(100, rng)
        assert np.all(sides.any(axis=1)) and not np.any(sides.all(axis=1))


class TestEstimator:
    def test_arithmetic(self):
        assert math.exp(estimator_sample(2, math.log(0.5), math.log(1 / 6), 0.1, 1.0)) == pytest.approx(1.5)

    def test_load_cap(self):
        cap = 2 * math.log(10)
        assert estimator_sample(2, math.log(0.5), -1.0, cap + 0.001, cap) == -math.inf

    def test_undefined_for_zero_q(self):
        with pytest.raises(GraphInputError):
            estimator_sample(2, math.log(0.5), -math.inf, 0.0, 1.0)

    def test_c4_unbiased(self):
        s = c4_sampler([[0, 1, 2]], j_cap=3, p=0.5)
        cs = enumerate_cuts(s.graph, 0.5)
        sides = cs.sides()
        lq = s.log_q(sides)
        values, loads = s.cut_stats(sides)
        keep = loads <= s.load_cap
        mean = np.sum(np.exp(lq) * np.exp(values * s.log_p - lq) * keep)
        assert mean == pytest.approx(math.exp(cs.log_z_where(keep)), rel=1e-12)

    def test_sample_count(self):
        cfg = RecursionConfig()
        assert reliable_sample_count(12, 0.5, cfg) == math.ceil(8 * 12 * math.log(12) ** 3 / 0.25)


class TestRunReliable:
    def test_dumbbell_6_3(self):
        g = dumbbell(6, 3)
        p, delta = 0.01, 0.5
        lam = edge_connectivity(g)
        loads, full = approx_ideal_loads(g, delta, lam=lam)
        lay = layer_edges(loads, lam, delta, g=g)
        cfg = RecursionConfig(reliable_samples_const=1.0)
        dec, est = run_reliable(g, p, delta, 0.5, np.random.default_rng(3), full, lay, lam, cfg)
        assert dec.verdict is Verdict.RELIABLE
        cs = enumerate_cuts(g, p)
        unit = full.counts / len(full)
        sides = cs.sides()
        keep = (sides[:, g.a] != sides[:, g.b]) @ unit <= 2 * math.log(g.n) + 1e-12
        z_prime = math.exp(cs.log_z_where(keep))
        se = math.sqrt(est.relvar / est.samples) * est.value
        assert abs(est.value - z_prime) <= 3 * se + 1e-12 * z_prime

    def test_unreliable_branch(self):
        g = cycle(6)
        lam = 2
        loads, full = approx_ideal_loads(g, 0.5, lam=lam)
        lay = layer_edges(loads, lam, 0.5, g=g)
        dec, est = run_reliable(g, 0.4, 0.5, 0.5, np.random.default_rng(0), full, lay, lam)
        assert dec.verdict is Verdict.UNRELIABLE and est is None
        assert dec.bootstrap_log_z >= -math.log(2 * g.n)

    def test_very_reliable_dispatch(self):
        g = dumbbell(4, 2)
        lam = 2
        loads, full = approx_ideal_loads(g, 0.5, lam=lam)
        lay = layer_edges(loads, lam, 0.5, g=g)
        cfg = RecursionConfig(vr_pack_rounds=200, reliable_samples_const=0.05)
        dec, est = run_reliable(g, 1e-30, 0.5, 0.5, np.random.default_rng(0), full, lay, lam, cfg)
        assert dec.verdict is Verdict.VERY_RELIABLE
        assert est.case.value == "VeryReliable"
