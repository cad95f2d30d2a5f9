"""Deterministic graph families used by tests, the CLI and the acceptance corpus."""

from __future__ import annotations

import itertools

import networkx as nx

from .graph import GraphInputError, MultiGraph


def cycle(n: int) -> MultiGraph:
    if n < 3:
        raise GraphInputError("cycle needs n >= 3")
    return MultiGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> MultiGraph:
    if n < 2:
        raise GraphInputError("path needs n >= 2")
    return MultiGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves: int) -> MultiGraph:
    return MultiGraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete(n: int) -> MultiGraph:
    if n < 2:
        raise GraphInputError("complete graph needs n >= 2")
    return MultiGraph.from_edges(n, list(itertools.combinations(range(n), 2)))


def dumbbell(k: int, b: int) -> MultiGraph:
    """Two copies of K_k (vertices 0..k-1 and k..2k-1) joined by b edges (i mod k, k + i mod k)."""
    if k < 2 or b < 1:
        raise GraphInputError("dumbbell needs k >= 2 and b >= 1")
    edges = list(itertools.combinations(range(k), 2))
    edges += [(u + k, v + k) for u, v in itertools.combinations(range(k), 2)]
    edges += [(i % k, k + (i % k)) for i in range(b)]
    return MultiGraph.from_edges(2 * k, edges)


def hypercube(d: int) -> MultiGraph:
    if d < 1:
        raise GraphInputError("hypercube needs d >= 1")
    n = 1 << d
    return MultiGraph.from_edges(n, [(v, v ^ (1 << i)) for v in range(n) for i in range(d) if v < v ^ (1 << i)])


def theta(paths: int, length: int) -> MultiGraph:
    """Two terminals (0 and 1) joined by ``paths`` internally disjoint paths of ``length`` edges."""
    if paths < 2 or length < 1:
        raise GraphInputError("theta graph needs at least two paths")
    edges = []
    nxt = 2
    for _ in range(paths):
        prev = 0
        for _ in range(length - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, 1))
    return MultiGraph.from_edges(nxt, edges)


def _from_nx(h: nx.Graph) -> MultiGraph:
    return MultiGraph.from_edges(h.number_of_nodes(), sorted((min(u, v), max(u, v)) for u, v in h.edges()))


def random_regular(n: int, d: int, seed: int = 0) -> MultiGraph:
    """Connected random d-regular simple graph; reseeds deterministically until connected."""
    if n * d % 2 or d >= n:
        raise GraphInputError("random-regular needs n*d even and d < n")
    for attempt in range(100):
        h = nx.random_regular_graph(d, n, seed=seed * 1000 + attempt)
        if nx.is_connected(h):
            return _from_nx(h)
    raise GraphInputError("could not draw a connected regular graph")


def gnp(n: int, pe: float, seed: int = 0) -> MultiGraph:
    """Connected G(n, pe) sample; reseeds deterministically until connected."""
    if not (0 < pe <= 1):
        raise GraphInputError("edge probability must lie in (0,1]")
    for attempt in range(1000):
        h = nx.gnp_random_graph(n, pe, seed=seed * 1000 + attempt)
        if n == 1 or nx.is_connected(h):
            return _from_nx(h)
    raise GraphInputError("could not draw a connected G(n,p) sample")


FAMILIES = ("cycle", "complete", "dumbbell", "hypercube", "random-regular", "gnp", "theta", "path", "star")


def generate(family: str, params: dict, seed: int = 0) -> MultiGraph:
    """Dispatch by family name.  ``params`` keys: n, k, b, d, pe, paths, length."""
    f = family.replace("_", "-")
    try:
        if f == "cycle":
            return cycle(int(params["n"]))
        if f == "path":
            return path(int(params["n"]))
        if f == "star":
            return star(int(params["n"]) - 1)
        if f == "complete":
            return complete(int(params["n"]))
        if f == "dumbbell":
            return dumbbell(int(params["k"]), int(params["b"]))
        if f == "hypercube":
            return hypercube(int(params["d"]))
        if f == "random-regular":
            return random_regular(int(params["n"]), int(params["d"]), seed)
        if f == "gnp":
            return gnp(int(params["n"]), float(params["pe"]), seed)
        if f == "theta":
            return theta(int(params["paths"]), int(params["length"]))
    except KeyError as exc:
        raise GraphInputError(f"family {family} needs parameter {exc.args[0]}") from None
    raise GraphInputError(f"unknown family {family!r}")


def parse_family(spec: str) -> tuple[str, dict]:
    """Parse ``name:key=val,key=val`` (e.g. ``dumbbell:k=6,b=3``)."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        params[key.strip()] = val.strip()
    return name.strip(), params
