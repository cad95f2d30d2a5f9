"""Contractible undirected multigraphs.

A :class:`MultiGraph` is an immutable vertex count plus three parallel arrays
(endpoints and bundle multiplicity) keyed by a stable integer edge id.  Edge
ids survive contraction, which lets packings, cut samples and contracted
levels talk about the same edges.  Everything here is pure; randomness comes
in through an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components, maximum_flow


class GraphInputError(ValueError):
    """Raised for malformed graphs or arguments that violate a precondition."""


class CapabilityError(RuntimeError):
    """Raised when an exact routine is asked to exceed its size guard."""


def _frozen(arr, dtype=np.int64) -> np.ndarray:
    out = np.array(arr, dtype=dtype).reshape(-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Undirected multigraph with stable edge ids and bundle multiplicities.

    ``ids[k]``, ``a[k]``, ``b[k]`` and ``w[k]`` describe the k-th stored edge.
    A stored edge with ``w > 1`` is a bundle of ``w`` parallel unit edges that
    share endpoints and an id.  ``m`` is the total multiplicity.
    """

    n: int
    ids: np.ndarray
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    _pos: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphInputError("graph needs at least one vertex")
        object.__setattr__(self, "ids", _frozen(self.ids))
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "b", _frozen(self.b))
        w = self.w if self.w is not None else np.ones(len(self.ids))
        object.__setattr__(self, "w", _frozen(w))
        k = len(self.ids)
        if not (len(self.a) == len(self.b) == len(self.w) == k):
            raise GraphInputError("edge arrays have mismatched lengths")
        if k:
            if self.a.min() < 0 or self.b.min() < 0 or max(self.a.max(), self.b.max()) >= self.n:
                raise GraphInputError("edge endpoint out of range")
            if np.any(self.a == self.b):
                raise GraphInputError("self-loops are not allowed")
            if np.any(self.w < 1):
                raise GraphInputError("bundle multiplicity must be positive")
        pos = {int(e): i for i, e in enumerate(self.ids)}
        if len(pos) != k:
            raise GraphInputError("edge ids must be unique")
        object.__setattr__(self, "_pos", pos)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "MultiGraph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; ids are 0..k-1 in order."""
        a, b, w = [], [], []
        for e in edges:
            a.append(int(e[0]))
            b.append(int(e[1]))
            w.append(int(e[2]) if len(e) > 2 else 1)
        return cls(n, np.arange(len(a)), a, b, w)

    @property
    def m(self) -> int:
        return int(self.w.sum())

    @property
    def num_bundles(self) -> int:
        return len(self.ids)

    def position(self, edge_id: int) -> int:
        try:
            return self._pos[int(edge_id)]
        except KeyError:
            raise GraphInputError(f"unknown edge id {edge_id}") from None

    def positions(self, edge_ids: Iterable[int]) -> np.ndarray:
        return np.array([self.position(e) for e in edge_ids], dtype=np.int64)

    def has_edge(self, edge_id: int) -> bool:
        return int(edge_id) in self._pos

    def edge_list(self) -> list[tuple[int, int, int, int]]:
        return [(int(e), int(u), int(v), int(x)) for e, u, v, x in zip(self.ids, self.a, self.b, self.w)]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.a, self.w)
        np.add.at(deg, self.b, self.w)
        return deg

    def adjacency(self) -> np.ndarray:
        """Dense symmetric multiplicity matrix."""
        adj = np.zeros((self.n, self.n), dtype=np.int64)
        np.add.at(adj, (self.a, self.b), self.w)
        np.add.at(adj, (self.b, self.a), self.w)
        return adj

    def sparse_adjacency(self) -> csr_matrix:
        rows = np.concatenate([self.a, self.b])
        cols = np.concatenate([self.b, self.a])
        data = np.concatenate([self.w, self.w])
        return coo_matrix((data, (rows, cols)), shape=(self.n, self.n)).tocsr()

    def component_labels(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros(1, dtype=np.int64)
        _, labels = connected_components(self.sparse_adjacency(), directed=False)
        return labels.astype(np.int64)

    def is_connected(self) -> bool:
        return self.n == 1 or int(self.component_labels().max()) == 0

    def cut_value(self, side) -> int:
        """Multiplicity crossing the bipartition given by a boolean/0-1 vertex array."""
        side = np.asarray(side, dtype=bool)
        return int(self.w[side[self.a] != side[self.b]].sum())

    def crossing_mask(self, side) -> np.ndarray:
        side = np.asarray(side, dtype=bool)
        return side[self.a] != side[self.b]

    def induced(self, vertices: Sequence[int]) -> tuple["MultiGraph", np.ndarray]:
        """Induced subgraph on ``vertices`` (relabelled 0..k-1 in the given order).

        Returns the subgraph and the array of original vertex ids.
        """
        verts = np.asarray(vertices, dtype=np.int64)
        relabel = np.full(self.n, -1, dtype=np.int64)
        relabel[verts] = np.arange(len(verts))
        keep = (relabel[self.a] >= 0) & (relabel[self.b] >= 0)
        sub = MultiGraph(len(verts), self.ids[keep], relabel[self.a[keep]], relabel[self.b[keep]], self.w[keep])
        return sub, verts

    def remove_edges(self, edge_ids: Iterable[int]) -> "MultiGraph":
        drop = np.zeros(len(self.ids), dtype=bool)
        for e in edge_ids:
            drop[self.position(e)] = True
        keep = ~drop
        return MultiGraph(self.n, self.ids[keep], self.a[keep], self.b[keep], self.w[keep])

    def with_weights(self, w) -> "MultiGraph":
        """Same edges with new multiplicities; bundles with weight 0 are dropped."""
        w = np.asarray(w, dtype=np.int64)
        keep = w > 0
        return MultiGraph(self.n, self.ids[keep], self.a[keep], self.b[keep], w[keep])

    def normalized(self) -> "MultiGraph":
        """Merge parallel edges into single bundles with endpoints (min, max); ids 0..k-1."""
        lo = np.minimum(self.a, self.b)
        hi = np.maximum(self.a, self.b)
        if len(lo) == 0:
            return MultiGraph(self.n, [], [], [], [])
        key = lo * self.n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        w = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(w, inv, self.w)
        return MultiGraph(self.n, np.arange(len(uniq)), uniq // self.n, uniq % self.n, w)

    def fingerprint(self) -> str:
        """Stable hash of the normalized edge multiset (ignores ids)."""
        import hashlib

        norm = self.normalized()
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        h.update(np.stack([norm.a, norm.b, norm.w]).astype(np.int64).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        return f"MultiGraph(n={self.n}, bundles={self.num_bundles}, m={self.m})"


@dataclass(frozen=True)
class VertexMap:
    """Maps original vertex ids to super-node ids of a contracted graph."""

    target: np.ndarray
    size: int

    def __post_init__(self):
        object.__setattr__(self, "target", _frozen(self.target))

    @classmethod
    def identity(cls, n: int) -> "VertexMap":
        return cls(np.arange(n), n)

    def __call__(self, v):
        return self.target[v]

    def compose(self, then: "VertexMap") -> "VertexMap":
        """Map original -> this map's targets -> ``then``'s targets."""
        return VertexMap(then.target[self.target], then.size)

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.size)]
        for v, s in enumerate(self.target):
            out[int(s)].append(v)
        return out

    def preserves(self, side) -> bool:
        """True when no super-node is split by the bipartition ``side`` of original vertices."""
        side = np.asarray(side, dtype=bool)
        lo = np.zeros(self.size, dtype=bool)
        hi = np.zeros(self.size, dtype=bool)
        lo[self.target[~side]] = True
        hi[self.target[side]] = True
        return not np.any(lo & hi)

    def lift_side(self, side_small) -> np.ndarray:
        """Pull a bipartition of super-nodes back to original vertices."""
        return np.asarray(side_small, dtype=bool)[self.target]


@dataclass(frozen=True)
class FailureProb:
    """Edge failure probability with its natural log kept alongside."""

    p: float
    log_p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise GraphInputError(f"failure probability must lie in (0,1), got {self.p}")
        if abs(math.log(self.p) - self.log_p) > 1e-12 * max(1.0, abs(self.log_p)):
            raise GraphInputError("log_p inconsistent with p")

    @classmethod
    def of(cls, p) -> "FailureProb":
        if isinstance(p, FailureProb):
            return p
        p = float(p)
        if not (0.0 < p < 1.0):
            raise GraphInputError(f"failure probability must lie in (0,1), got {p}")
        return cls(p, math.log(p))

    @classmethod
    def from_log(cls, log_p: float) -> "FailureProb":
        return cls(math.exp(log_p), float(log_p))


def _merge_labels(n: int, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    if len(a) == 0:
        return np.arange(n, dtype=np.int64), n
    mat = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    k, labels = connected_components(mat, directed=False)
    return labels.astype(np.int64), int(k)


def _apply_labels(g: MultiGraph, labels: np.ndarray, k: int) -> MultiGraph:
    na = labels[g.a]
    nb = labels[g.b]
    keep = na != nb
    return MultiGraph(k, g.ids[keep], na[keep], nb[keep], g.w[keep])


def contract_by_mask(g: MultiGraph, mask: np.ndarray) -> tuple[MultiGraph, VertexMap]:
    """Contract the stored edges selected by a boolean mask over positions."""
    mask = np.asarray(mask, dtype=bool)
    labels, k = _merge_labels(g.n, g.a[mask], g.b[mask])
    return _apply_labels(g, labels, k), VertexMap(labels, k)


def contract_edges(g: MultiGraph, contracted: Iterable[int]) -> tuple[MultiGraph, VertexMap]:
    """Merge the endpoints of every edge id in ``contracted``; loops are dropped.

    Super-node ids are assigned in order of their smallest original vertex.
    """
    mask = np.zeros(g.num_bundles, dtype=bool)
    for e in contracted:
        mask[g.position(e)] = True
    return contract_by_mask(g, mask)


def contract_partition(g: MultiGraph, labels: Sequence[int]) -> tuple[MultiGraph, VertexMap]:
    """Contract each block of a vertex labelling into one super-node (labels renumbered)."""
    labels = np.asarray(labels, dtype=np.int64)
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(len(order), dtype=np.int64)
    uniq = np.unique(labels)
    remap[order] = np.arange(len(order))
    dense = remap[np.searchsorted(uniq, labels)]
    k = len(uniq)
    return _apply_labels(g, dense, k), VertexMap(dense, k)


def random_contract(g: MultiGraph, q: float, rng: np.random.Generator) -> tuple[MultiGraph, VertexMap]:
    """Contract each unit edge independently with probability ``1 - q``.

    A bundle of weight w survives only if all its unit edges do, i.e. it is
    contracted with probability ``1 - q**w``.
    """
    q = float(q.p if isinstance(q, FailureProb) else q)
    if not (0.0 < q < 1.0):
        raise GraphInputError("keep probability must lie in (0,1)")
    keep_prob = np.power(q, g.w.astype(float))
    mask = rng.random(g.num_bundles) >= keep_prob
    return contract_by_mask(g, mask)


def _disconnected_witness(g: MultiGraph):
    labels = g.component_labels()
    if labels.max() > 0:
        return frozenset(np.flatnonzero(labels == labels[0]).tolist())
    return None


def min_cut(g: MultiGraph) -> tuple[int, frozenset]:
    """Global minimum cut by maximum-adjacency ordering (Stoer-Wagner).

    Returns ``(value, side)`` where ``side`` is a proper nonempty vertex set.
    Disconnected graphs give value 0 and the component of vertex 0.
    """
    if g.n < 2:
        raise GraphInputError("min cut needs at least two vertices")
    comp = _disconnected_witness(g)
    if comp is not None:
        return 0, comp
    adj = g.adjacency().astype(np.float64)
    n = g.n
    members: list[list[int]] = [[v] for v in range(n)]
    active = list(range(n))
    best = math.inf
    best_side: list[int] = []
    while len(active) > 1:
        idx = np.array(active)
        sub = adj[np.ix_(idx, idx)]
        k = len(idx)
        used = np.zeros(k, dtype=bool)
        attach = np.zeros(k)
        prev = last = 0
        used[0] = True
        attach += sub[0]
        for _ in range(k - 1):
            cand = np.where(used, -1.0, attach)
            nxt = int(np.argmax(cand))
            prev, last = last, nxt
            used[nxt] = True
            attach += sub[nxt]
        s, t = idx[prev], idx[last]
        phase_cut = float(adj[t, idx].sum())
        if phase_cut < best:
            best = phase_cut
            best_side = list(members[t])
        members[s].extend(members[t])
        adj[s, :] += adj[t, :]
        adj[:, s] += adj[:, t]
        adj[s, s] = 0.0
        adj[t, :] = 0.0
        adj[:, t] = 0.0
        active.remove(int(t))
    return int(round(best)), frozenset(best_side)


def edge_connectivity(g: MultiGraph) -> int:
    return min_cut(g)[0] if g.n >= 2 else 0


def st_max_flow(g: MultiGraph, s: int, t: int) -> tuple[int, frozenset]:
    """Maximum s-t flow with unit capacity per multiplicity; returns (value, source side)."""
    if s == t:
        raise GraphInputError("source and sink must differ")
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise GraphInputError("terminal out of range")
    cap = g.sparse_adjacency().astype(np.int32)
    cap.sum_duplicates()
    res = maximum_flow(cap, int(s), int(t))
    residual = (cap - res.flow).tocsr()
    residual.data[residual.data < 0] = 0
    residual.eliminate_zeros()
    reach = breadth_first_order(residual, int(s), directed=True, return_predecessors=False)
    return int(res.flow_value), frozenset(int(v) for v in reach)


def _components_of(g: MultiGraph) -> list[np.ndarray]:
    labels = g.component_labels()
    return [np.flatnonzero(labels == c) for c in range(int(labels.max()) + 1)]


def strong_components(g: MultiGraph, k: int) -> list[list[int]]:
    """Partition V into maximal sets whose induced subgraph is k-edge-connected.

    Splits recursively along any induced cut of value < k: cheap ones first
    (components, vertices of induced degree < k), then the exact minimum cut.
    Blocks are returned sorted, ordered by smallest vertex.
    """
    if k < 1:
        raise GraphInputError("k must be at least 1")
    blocks: list[list[int]] = []
    stack = [np.arange(g.n)]
    while stack:
        verts = stack.pop()
        if len(verts) == 1:
            blocks.append([int(verts[0])])
            continue
        sub, orig = g.induced(verts)
        parts = _components_of(sub)
        if len(parts) > 1:
            stack.extend(orig[p] for p in parts)
            continue
        deg = sub.degrees()
        low = np.flatnonzero(deg < k)
        if len(low):
            v = int(low[0])
            rest = np.delete(np.arange(sub.n), v)
            stack.append(orig[[v]])
            stack.append(orig[rest])
            continue
        lam, side = min_cut(sub)
        if lam >= k:
            blocks.append(sorted(int(v) for v in orig))
            continue
        mask = np.zeros(sub.n, dtype=bool)
        mask[list(side)] = True
        stack.append(orig[mask])
        stack.append(orig[~mask])
    blocks = [sorted(b) for b in blocks]
    blocks.sort(key=lambda b: b[0])
    return blocks


def partition_labels(n: int, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    for i, blk in enumerate(blocks):
        labels[list(blk)] = i
    return labels


def contract_3lambda_strong(g: MultiGraph) -> tuple[MultiGraph, VertexMap]:
    """Contract every 3λ-strong component of a connected graph."""
    if g.n < 2:
        return g, VertexMap.identity(g.n)
    lam = edge_connectivity(g)
    if lam == 0:
        raise GraphInputError("graph is disconnected")
    blocks = strong_components(g, 3 * lam)
    if len(blocks) == g.n:
        return g, VertexMap.identity(g.n)
    return contract_partition(g, partition_labels(g.n, blocks))
