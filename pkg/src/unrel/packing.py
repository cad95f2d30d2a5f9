"""Greedy spanning tree packings, load layering and the contraction threshold.

Bundles are treated as ``w`` parallel unit edges sharing bookkeeping: a tree
uses at most one copy, the copies are filled round-robin, so the bundle's MST
weight in a round is ``floor(count / w)`` and every copy carries the average
unit load ``count / (w * |T|)``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphInputError, MultiGraph, contract_by_mask, edge_connectivity


class LayeringError(RuntimeError):
    """A load fell outside the admissible band, so strong components were not contracted."""


def default_delta(n: int) -> float:
    if n <= 2:
        return 0.5
    lnln = math.log(math.log(n)) if n > 2 else 0.0
    return min(0.5, max(1.0 / max(lnln, 2.0), 0.05))


def tie_ranks(g: MultiGraph, seed: int) -> np.ndarray:
    """Rank of each stored edge under a salted hash of its id (0 = preferred)."""
    keys = [
        int.from_bytes(hashlib.blake2b(f"{seed}:{int(e)}".encode(), digest_size=8).digest(), "big")
        for e in g.ids
    ]
    ranks = np.empty(len(keys), dtype=np.int64)
    ranks[np.argsort(np.array(keys, dtype=np.uint64), kind="stable")] = np.arange(len(keys))
    return ranks


def _kruskal(n: int, a: np.ndarray, b: np.ndarray, order: np.ndarray) -> np.ndarray:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    need = n - 1
    for pos in order.tolist():
        ru, rv = find(int(a[pos])), find(int(b[pos]))
        if ru != rv:
            parent[ru] = rv
            chosen.append(pos)
            if len(chosen) == need:
                break
    return np.array(chosen, dtype=np.int64)


@dataclass
class TreePacking:
    """A multiset of spanning trees over one graph.

    ``trees`` holds stored-edge positions, one row per tree.  ``run`` is the
    full greedy sequence the trees were taken from and ``run_index[i]`` the
    position of tree i in it, which is what the weight snapshot needs.
    """

    graph: MultiGraph
    trees: np.ndarray
    run: np.ndarray
    run_index: np.ndarray
    seed: int = 0
    _counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._counts is None:
            counts = np.zeros(self.graph.num_bundles, dtype=np.int64)
            np.add.at(counts, self.trees.reshape(-1), 1)
            self._counts = counts

    def __len__(self):
        return len(self.trees)

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def loads(self) -> np.ndarray:
        """Unit load per stored edge: membership count / (multiplicity * |T|)."""
        return self._counts / (self.graph.w * len(self.trees))

    def tree_ids(self, i: int) -> list[int]:
        return [int(self.graph.ids[j]) for j in self.trees[i]]

    def snapshot_counts(self, i: int) -> np.ndarray:
        """Membership counts of all greedy trees preceding tree i in its run."""
        before = self.run[: int(self.run_index[i])]
        counts = np.zeros(self.graph.num_bundles, dtype=np.int64)
        np.add.at(counts, before.reshape(-1), 1)
        return counts

    def snapshot_loads(self, i: int) -> np.ndarray:
        """The weight function tree i minimizes: per-copy load before it was added."""
        k = int(self.run_index[i])
        if k == 0:
            return np.zeros(self.graph.num_bundles)
        return (self.snapshot_counts(i) // self.graph.w) / k

    def mst_keys(self, i: int) -> np.ndarray:
        """Strict total order used when tree i was chosen."""
        ranks = tie_ranks(self.graph, self.seed)
        return (self.snapshot_counts(i) // self.graph.w) * len(ranks) + ranks


def greedy_pack(g: MultiGraph, rounds: int, tie_break_seed: int = 0) -> TreePacking:
    """Each round adds an MST under the current loads (ties by salted edge hash)."""
    if rounds < 1:
        raise GraphInputError("rounds must be at least 1")
    if g.n < 2:
        raise GraphInputError("packing needs at least two vertices")
    if not g.is_connected():
        raise GraphInputError("greedy packing needs a connected graph")
    ranks = tie_ranks(g, tie_break_seed)
    nb = g.num_bundles
    counts = np.zeros(nb, dtype=np.int64)
    run = np.empty((rounds, g.n - 1), dtype=np.int64)
    for r in range(rounds):
        key = (counts // g.w) * nb + ranks
        tree = _kruskal(g.n, g.a, g.b, np.argsort(key, kind="stable"))
        run[r] = tree
        counts[tree] += 1
    return TreePacking(g, run, run, np.arange(rounds), tie_break_seed, counts.copy())


def packing_rounds(lam: int, m: int, delta: float) -> int:
    """Round count 12 λ ln m / δ'^2 with δ' = δ / 3 (floored at 2)."""
    d = delta / 3.0
    return max(2, math.ceil(12 * lam * math.log(max(m, 2)) / (d * d)))


def approx_ideal_loads(
    g: MultiGraph, delta: float, seed: int = 0, lam: int | None = None, rounds: int | None = None
) -> tuple[np.ndarray, TreePacking]:
    """Greedy packing whose latter half approximates the ideal loads within a (1+δ) factor.

    ``rounds`` overrides the default round count.
    """
    if not (0 < delta < 1):
        raise GraphInputError("delta must lie in (0,1)")
    if lam is None:
        lam = edge_connectivity(g)
    total = rounds if rounds is not None else packing_rounds(lam, g.m, delta)
    full = greedy_pack(g, total, seed)
    start = total // 2
    kept = TreePacking(g, full.run[start:], full.run, np.arange(start, total), seed)
    return kept.loads, kept


@dataclass
class EdgeLayering:
    """Load levels: level 0 is [1/π_0, band top], level i >= 1 is [1/π_i, 1/π_{i-1})."""

    delta: float
    lam: int
    pis: np.ndarray
    level: np.ndarray
    k_tilde: np.ndarray
    tree_counts: np.ndarray | None = None

    @property
    def num_levels(self) -> int:
        return len(self.pis)

    def caps(self, tree: np.ndarray) -> np.ndarray:
        return np.bincount(self.level[tree], minlength=self.num_levels)


def level_boundaries(lam: int, delta: float) -> np.ndarray:
    last = 1 + math.ceil(math.log(6.0) / math.log1p(delta))
    return np.array([(1 + delta) ** i * lam / 2.0 for i in range(last + 1)])


def layer_edges(
    loads: np.ndarray, lam: int, delta: float, g: MultiGraph | None = None, trees: np.ndarray | None = None
) -> EdgeLayering:
    """Assign each edge to its load level and compute k̃ and per-tree level counts."""
    loads = np.asarray(loads, dtype=float)
    if np.any(loads <= 0):
        raise GraphInputError("loads must be positive")
    lo = (1.0 / (3 * lam)) / (1 + delta)
    hi = (2.0 / lam) * (1 + delta)
    bad = (loads <= lo) | (loads > hi)
    if bad.any():
        raise LayeringError(
            f"{int(bad.sum())} edge loads outside ({lo:.4g}, {hi:.4g}]; contract 3λ-strong components first"
        )
    pis = level_boundaries(lam, delta)
    inv = 1.0 / pis
    level = np.empty(len(loads), dtype=np.int64)
    for j, x in enumerate(loads):
        i = 0
        while x < inv[i]:
            i += 1
        level[j] = i
    k_tilde = np.zeros(len(pis), dtype=np.int64)
    if g is not None:
        for i in range(len(pis)):
            k_tilde[i] = contract_by_mask(g, loads < inv[i])[0].n
    tree_counts = None
    if trees is not None and len(trees):
        tree_counts = np.stack([np.bincount(level[t], minlength=len(pis)) for t in trees])
    return EdgeLayering(delta, lam, pis, level, k_tilde, tree_counts)


def sparsify_packing(packing: TreePacking, count: int | None, rng: np.random.Generator) -> TreePacking:
    """Draw ``count`` trees uniformly with replacement (default ceil(8 ln^2 n))."""
    if len(packing) == 0:
        raise GraphInputError("cannot sparsify an empty packing")
    if count is None:
        count = default_sparse_count(packing.graph.n)
    if count < 1:
        raise GraphInputError("count must be at least 1")
    pick = rng.integers(0, len(packing), size=count)
    return TreePacking(packing.graph, packing.trees[pick], packing.run, packing.run_index[pick], packing.seed)


def default_sparse_count(n: int, c_t: float = 8.0) -> int:
    return max(1, math.ceil(c_t * math.log(max(n, 2)) ** 2))


def gamma_threshold(loads: np.ndarray, lam: int, delta: float, g: MultiGraph) -> tuple[float, float]:
    """Return (γ', γ): γ' is the largest threshold such that contracting all edges
    with load <= 1/γ' leaves at most max(ceil(δn), 1) nodes; γ = min(γ', λ)."""
    loads = np.asarray(loads, dtype=float)
    budget = max(math.ceil(delta * g.n - 1e-12), 1)
    gamma_p = None
    for t in np.unique(loads):
        if contract_by_mask(g, loads <= t)[0].n <= budget:
            gamma_p = 1.0 / float(t)
            break
    if gamma_p is None:
        gamma_p = float(lam)
    return gamma_p, min(gamma_p, float(lam))


def tree_path_max_check(packing: TreePacking, i: int, sample: np.ndarray | None = None) -> bool:
    """Cycle-property check: every non-tree edge outranks all tree edges on its tree path."""
    g = packing.graph
    tree = packing.trees[i]
    key = packing.mst_keys(i)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for pos in tree.tolist():
        adj[int(g.a[pos])].append((int(g.b[pos]), pos))
        adj[int(g.b[pos])].append((int(g.a[pos]), pos))
    parent = [-1] * g.n
    pedge = [-1] * g.n
    depth = [0] * g.n
    seen = [False] * g.n
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v, pos in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v], pedge[v], depth[v] = u, pos, depth[u] + 1
                stack.append(v)
    in_tree = np.zeros(g.num_bundles, dtype=bool)
    in_tree[tree] = True
    others = np.flatnonzero(~in_tree) if sample is None else np.asarray(sample)
    for f in others.tolist():
        if in_tree[f]:
            continue
        u, v = int(g.a[f]), int(g.b[f])
        worst = -1
        while u != v:
            if depth[u] < depth[v]:
                u, v = v, u
            worst = max(worst, int(key[pedge[u]]))
            u = parent[u]
        if key[f] < worst:
            return False
    return True
