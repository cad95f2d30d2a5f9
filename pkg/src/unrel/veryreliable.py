"""Sampler for the regime where p^λ is polynomially tiny.

A Gomory–Hu tree sorts the n-1 tree-cut values.  Each level contracts every
GH edge of value at least a threshold c_{k_i}, packs trees on the contracted
graph, and samples a cut from one or two (with replacement) edges of a random
tree.  Only cuts below ``vr_cut_factor * λ`` count towards the estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .config import RecursionConfig
from .cutquery import root_tree
from .estimate import Case, Estimate, log_mean, relative_variance
from .graph import FailureProb, GraphInputError, MultiGraph, VertexMap, contract_by_mask, st_max_flow
from .packing import approx_ideal_loads, packing_rounds, default_sparse_count, sparsify_packing

log = logging.getLogger(__name__)


@dataclass
class GomoryHuTree:
    """Tree rooted at vertex 0: ``parent[v]`` and ``capacity[v]`` for v >= 1."""

    n: int
    parent: np.ndarray
    capacity: np.ndarray

    @property
    def sorted_values(self) -> np.ndarray:
        return np.sort(self.capacity[1:])

    def pair_value(self, u: int, v: int) -> int:
        """Minimum capacity on the tree path between u and v."""
        if u == v:
            raise GraphInputError("pair needs two distinct vertices")
        anc = {}
        x, best = u, math.inf
        while True:
            anc[x] = best
            if x == 0:
                break
            best = min(best, self.capacity[x])
            x = int(self.parent[x])
        x, best = v, math.inf
        while x not in anc:
            best = min(best, self.capacity[x])
            x = int(self.parent[x])
        return int(min(best, anc[x]))

    def edges(self) -> list[tuple[int, int, int]]:
        return [(v, int(self.parent[v]), int(self.capacity[v])) for v in range(1, self.n)]


def gomory_hu(g: MultiGraph) -> GomoryHuTree:
    """Gusfield's construction: n-1 max-flow calls on the original graph."""
    if g.n < 2:
        raise GraphInputError("Gomory-Hu tree needs at least two vertices")
    if not g.is_connected():
        raise GraphInputError("Gomory-Hu tree needs a connected graph")
    n = g.n
    parent = np.zeros(n, dtype=np.int64)
    cap = np.zeros(n, dtype=np.int64)
    for s in range(1, n):
        t = int(parent[s])
        value, side = st_max_flow(g, s, t)
        cap[s] = value
        for i in range(n):
            if i != s and i in side and parent[i] == t:
                parent[i] = s
        if int(parent[t]) in side and t != 0:
            parent[s] = parent[t]
            parent[t] = s
            cap[s] = cap[t]
            cap[t] = value
    parent[0] = -1
    return GomoryHuTree(n, parent, cap)


def ladder_indices(n: int) -> list[int]:
    """k_i = floor(n^(1 - 2^-i)) for i = 1..ceil(ln ln n) (empty when ln ln n <= 0)."""
    if n < 3:
        return []
    top = math.ceil(math.log(math.log(n)))
    return [math.floor(n ** (1 - 2.0 ** -i)) for i in range(1, top + 1)]


@dataclass
class LadderLevel:
    index: int
    k: int
    threshold: float
    graph: MultiGraph
    vmap: VertexMap
    trees: np.ndarray  # sparsified packing, positions in ``graph``
    subtree: np.ndarray | None = None  # per tree: (n_i - 1) x n_i child-subtree indicator

    @property
    def usable(self) -> bool:
        return self.graph.n > 1 and len(self.trees) > 0


@dataclass
class LevelLadder:
    graph: MultiGraph
    lam: int
    values: np.ndarray  # c_1..c_n
    levels: list[LadderLevel]

    @property
    def active(self) -> list[LadderLevel]:
        act = [lv for lv in self.levels if lv.usable]
        return act


def build_ladder(g: MultiGraph, ght: GomoryHuTree, lam: int, rng: np.random.Generator,
                 cfg: RecursionConfig | None = None, seed: int = 0,
                 sparse_count: int | None = None) -> LevelLadder:
    """Contract GH edges with capacity >= c_{k_i} per level and pack each level.

    The last level is the original graph.  Levels that contract to one vertex
    keep an empty packing.
    """
    cfg = cfg or RecursionConfig()
    n = g.n
    vals = ght.sorted_values
    c = np.concatenate([vals, [max(vals[-1], cfg.vr_cut_factor * lam)]])
    ks = ladder_indices(n) + [n]
    gh_a = np.arange(1, n)
    gh_b = ght.parent[1:]
    gh_cap = ght.capacity[1:]
    levels = []
    for i, k in enumerate(ks, start=1):
        thr = float(c[k - 1])
        if k == n:
            h, vm = g, VertexMap.identity(n)
        else:
            gh_graph = MultiGraph(n, np.arange(n - 1), gh_a, gh_b, np.ones(n - 1, dtype=np.int64))
            labels = contract_by_mask(gh_graph, gh_cap >= thr)[1]
            h, vm = _contract_labels(g, labels)
        trees = np.zeros((0, max(h.n - 1, 0)), dtype=np.int64)
        if h.n > 1:
            rounds = packing_rounds(lam, h.m, cfg.vr_delta)
            if cfg.vr_pack_rounds is not None and rounds > cfg.vr_pack_rounds:
                log.warning("level %d: packing capped at %d rounds (formula gives %d)", i, cfg.vr_pack_rounds, rounds)
                rounds = cfg.vr_pack_rounds
            _, packing = approx_ideal_loads(h, cfg.vr_delta, seed=seed, lam=lam, rounds=rounds)
            count = sparse_count or default_sparse_count(n, cfg.sparse_trees_const)
            trees = sparsify_packing(packing, count, rng).trees
        level = LadderLevel(i, k, thr, h, vm, trees)
        if level.usable:
            level.subtree = _subtree_tables(h, trees)
        levels.append(level)
    return LevelLadder(g, lam, c, levels)


def _contract_labels(g: MultiGraph, vm: VertexMap):
    labels = np.asarray(vm.target)
    na, nb = labels[g.a], labels[g.b]
    keep = na != nb
    return MultiGraph(vm.size, g.ids[keep], na[keep], nb[keep], g.w[keep]), vm


def _subtree_tables(h: MultiGraph, trees: np.ndarray) -> np.ndarray:
    out = np.zeros((len(trees), h.n - 1, h.n), dtype=bool)
    cache = {}
    for t, tree in enumerate(trees):
        key = tree.tobytes()
        if key not in cache:
            r = root_tree(h, tree)
            children = np.array([r.child_of[int(pos)] for pos in tree])
            cache[key] = r.in_subtree(np.arange(h.n), children).T
        out[t] = cache[key]
    return out


def sample_sides_vr(ladder: LevelLadder, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``size`` bipartitions of V(G) (rows of booleans)."""
    act = ladder.active
    if not act:
        raise GraphInputError("ladder has no usable level")
    lv_idx = rng.integers(0, len(act), size=size)
    sides = np.zeros((size, ladder.graph.n), dtype=bool)
    for li, lv in enumerate(act):
        rows = np.flatnonzero(lv_idx == li)
        if not len(rows):
            continue
        t = rng.integers(0, len(lv.trees), size=len(rows))
        e = rng.integers(0, lv.graph.n - 1, size=(len(rows), 2))
        small = lv.subtree[t, e[:, 0]] ^ lv.subtree[t, e[:, 1]]
        same = e[:, 0] == e[:, 1]
        small[same] = lv.subtree[t[same], e[same, 0]]
        sides[rows] = small[:, np.asarray(lv.vmap.target)]
    return sides


def log_q_vr(ladder: LevelLadder, sides: np.ndarray) -> np.ndarray:
    """Exact log-probability of each bipartition under the level sampler."""
    act = ladder.active
    sides = np.atleast_2d(np.asarray(sides, dtype=bool))
    terms = np.full((len(sides), len(act)), -np.inf)
    for li, lv in enumerate(act):
        target = np.asarray(lv.vmap.target)
        small = np.zeros((len(sides), lv.graph.n), dtype=bool)
        small[:, target] = sides
        back = small[:, target]
        preserved = np.all(back == sides, axis=1)
        h = lv.graph
        cross = small[:, h.a[lv.trees]] != small[:, h.b[lv.trees]]  # (S, T, n_i - 1)
        cnt = cross.sum(axis=2)
        per_tree = np.where(cnt == 1, 1.0, np.where(cnt == 2, 2.0, 0.0))
        prob = per_tree.mean(axis=1) / (h.n - 1) ** 2
        with np.errstate(divide="ignore"):
            terms[:, li] = np.where(preserved, np.log(prob), -np.inf)
    return logsumexp(terms, axis=1) - math.log(len(act))


def q_of_cut_vr(ladder: LevelLadder, side) -> float:
    return float(log_q_vr(ladder, np.asarray(side, dtype=bool)[None, :])[0])


def estimator_sample_vr(value: int, log_p: float, log_q: float, lam: int, factor: float = 1.1) -> float:
    """log X = |C| ln p - ln q when |C| < factor * λ, else -inf."""
    if not math.isfinite(log_q):
        raise GraphInputError("estimator undefined for q = 0")
    if value >= factor * lam:
        return -math.inf
    return value * log_p - log_q


def draw_vr(ladder: LevelLadder, log_p: float, size: int, rng: np.random.Generator,
            factor: float = 1.1, batch: int = 4096) -> np.ndarray:
    g = ladder.graph
    out = []
    left = size
    while left > 0:
        k = min(batch, left)
        sides = sample_sides_vr(ladder, k, rng)
        values = (sides[:, g.a] != sides[:, g.b]) @ g.w
        lq = log_q_vr(ladder, sides)
        if np.any(~np.isfinite(lq)):
            raise GraphInputError("sampled cut has q = 0")
        lx = values * log_p - lq
        out.append(np.where(values < factor * ladder.lam, lx, -np.inf))
        left -= k
    return np.concatenate(out)


def run_very_reliable(g: MultiGraph, p, eps: float, rng: np.random.Generator, lam: int,
                      cfg: RecursionConfig | None = None, depth: int = 0) -> Estimate:
    """Estimate of the sum of p^|C| over cuts below 1.1λ (a near-unbiased u_G(p) estimate here)."""
    from .reliable import reliable_sample_count

    cfg = cfg or RecursionConfig()
    fp = FailureProb.of(p)
    ght = gomory_hu(g)
    ladder = build_ladder(g, ght, lam, rng, cfg, seed=cfg.seed)
    N = reliable_sample_count(g.n, eps, cfg)
    lx = draw_vr(ladder, fp.log_p, N, rng, cfg.vr_cut_factor)
    return Estimate(log_mean(lx), N, relative_variance(lx), Case.VERY_RELIABLE, depth, biased=True,
                    info={"levels": len(ladder.active), "gh_min": int(ght.sorted_values[0])})
