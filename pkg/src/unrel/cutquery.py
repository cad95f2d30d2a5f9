"""Cut values of bipartitions defined by a few tree edges.

Removing a set F of edges from a spanning tree T and 2-colouring vertices by
the parity of F-edges on their root path gives the unique bipartition whose
T-crossing edges are exactly F.  A graph edge crosses it iff its tree path
contains an odd number of F-edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GraphInputError, MultiGraph

DEFAULT_QUERY_CAP = 64


@dataclass
class RootedTree:
    """Spanning tree rooted at vertex 0 with Euler intervals."""

    n: int
    parent: np.ndarray
    parent_edge: np.ndarray
    depth: np.ndarray
    tin: np.ndarray
    tout: np.ndarray
    child_of: dict

    def in_subtree(self, verts: np.ndarray, child: np.ndarray) -> np.ndarray:
        """Boolean matrix [i, j]: is verts[i] inside the subtree hanging below child[j]?"""
        tv = self.tin[verts][:, None]
        return (tv >= self.tin[child][None, :]) & (tv < self.tout[child][None, :])


def root_tree(g: MultiGraph, tree: np.ndarray) -> RootedTree:
    tree = np.asarray(tree, dtype=np.int64)
    n = g.n
    if len(tree) != n - 1:
        raise GraphInputError(f"spanning tree needs {n - 1} edges, got {len(tree)}")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for pos in tree.tolist():
        u, v = int(g.a[pos]), int(g.b[pos])
        adj[u].append((v, pos))
        adj[v].append((u, pos))
    parent = np.full(n, -1, dtype=np.int64)
    pedge = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    tin = np.full(n, -1, dtype=np.int64)
    tout = np.zeros(n, dtype=np.int64)
    clock = 0
    tin[0] = clock
    clock += 1
    stack = [(0, iter(adj[0]))]
    while stack:
        u, it = stack[-1]
        for v, pos in it:
            if tin[v] < 0:
                parent[v], pedge[v], depth[v] = u, pos, depth[u] + 1
                tin[v] = clock
                clock += 1
                stack.append((v, iter(adj[v])))
                break
        else:
            tout[u] = clock
            stack.pop()
    if clock != n:
        raise GraphInputError("tree does not span the vertex set")
    child_of = {int(pedge[v]): v for v in range(1, n)}
    return RootedTree(n, parent, pedge, depth, tin, tout, child_of)


@dataclass
class TreeCutIndex:
    """Reference evaluator: O(n + m) parity labelling per query."""

    graph: MultiGraph
    tree: np.ndarray
    rooted: RootedTree
    edge_mask: np.ndarray
    query_cap: int = DEFAULT_QUERY_CAP
    _a: np.ndarray = field(default=None, repr=False)
    _b: np.ndarray = field(default=None, repr=False)
    _w: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self._a = self.graph.a[self.edge_mask]
        self._b = self.graph.b[self.edge_mask]
        self._w = self.graph.w[self.edge_mask]

    def _children(self, tree_edges) -> np.ndarray:
        ids = list(tree_edges)
        if not ids:
            raise GraphInputError("empty tree-edge set defines no bipartition")
        if len(ids) > self.query_cap:
            raise GraphInputError(f"query exceeds cap of {self.query_cap} tree edges")
        out = []
        for e in ids:
            pos = self.graph.position(e)
            if pos not in self.rooted.child_of:
                raise GraphInputError(f"edge {e} is not in the tree")
            out.append(self.rooted.child_of[pos])
        return np.array(out, dtype=np.int64)

    def side(self, tree_edges) -> np.ndarray:
        """Boolean vertex labelling: True on the side not containing the root."""
        children = self._children(tree_edges)
        flips = np.zeros(self.rooted.n + 1, dtype=np.int64)
        np.add.at(flips, self.rooted.tin[children], 1)
        np.add.at(flips, self.rooted.tout[children], 1)
        parity = (np.cumsum(flips)[:-1] & 1).astype(bool)
        side = parity[self.rooted.tin]
        assert side.any() and not side.all()
        return side

    def cut_value(self, tree_edges) -> int:
        side = self.side(tree_edges)
        return int(self._w[side[self._a] != side[self._b]].sum())


def build_index(g: MultiGraph, tree, edge_set=None, query_cap: int = DEFAULT_QUERY_CAP) -> TreeCutIndex:
    """Index the edges of ``g`` selected by ``edge_set`` (ids; default all) against ``tree`` (positions)."""
    tree = np.asarray(tree, dtype=np.int64)
    rooted = root_tree(g, tree)
    if edge_set is None:
        mask = np.ones(g.num_bundles, dtype=bool)
    else:
        mask = np.zeros(g.num_bundles, dtype=bool)
        for e in edge_set:
            mask[g.position(e)] = True
    return TreeCutIndex(g, tree, rooted, mask, query_cap)


def cut_value(index: TreeCutIndex, tree_edges) -> int:
    return index.cut_value(tree_edges)


class AcceleratedCutIndex:
    """Tables of per-tree-edge and pairwise path coverage.

    cover[j] is the indexed multiplicity whose tree path uses tree edge j and
    pair[j, k] the multiplicity using both, so one- and two-edge queries are
    O(1).  Larger queries defer to the reference evaluator.
    """

    def __init__(self, ref: TreeCutIndex):
        self.ref = ref
        r = ref.rooted
        children = np.array([r.child_of[int(pos)] for pos in ref.tree], dtype=np.int64)
        self.slot = {int(ref.graph.ids[pos]): j for j, pos in enumerate(ref.tree)}
        on_path = r.in_subtree(ref._a, children) ^ r.in_subtree(ref._b, children)
        weighted = on_path * ref._w[:, None]
        self.cover = weighted.sum(axis=0)
        self.pair = on_path.T.astype(np.int64) @ weighted

    def cut_value(self, tree_edges) -> int:
        ids = list(tree_edges)
        if not ids:
            raise GraphInputError("empty tree-edge set defines no bipartition")
        if len(ids) > 2:
            return self.ref.cut_value(ids)
        try:
            slots = [self.slot[int(e)] for e in ids]
        except KeyError:
            raise GraphInputError("edge is not in the tree") from None
        if len(slots) == 1 or slots[0] == slots[1]:
            return int(self.cover[slots[0]])
        i, j = slots
        return int(self.cover[i] + self.cover[j] - 2 * self.pair[i, j])
