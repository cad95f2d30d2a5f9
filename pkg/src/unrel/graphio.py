"""Plain-text graph format.

::

    p <n> <m>
    <u> <v> [w]
    a <u> <v> [w]

Vertices are 0-indexed.  Lines starting with ``c`` or ``#`` are comments.
A DIMACS-style header ``p <word> <n> <m>`` is accepted too.  Repeated
``(u, v)`` lines accumulate into one bundle, so parse(format(g)) returns the
normalized form of g.
"""

from __future__ import annotations

from pathlib import Path

from .graph import GraphInputError, MultiGraph


class GraphParseError(GraphInputError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse_graph_text(text: str) -> MultiGraph:
    n = None
    order: list[tuple[int, int]] = []
    weight: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "c#":
            continue
        tok = line.split()
        if tok[0] == "p":
            if n is not None:
                raise GraphParseError(lineno, "duplicate header")
            nums = tok[1:]
            if len(nums) == 3:
                nums = nums[1:]
            if len(nums) != 2:
                raise GraphParseError(lineno, "header must be 'p <n> <m>'")
            try:
                n = int(nums[0])
                int(nums[1])
            except ValueError:
                raise GraphParseError(lineno, "non-integer header field") from None
            if n < 1:
                raise GraphParseError(lineno, "vertex count must be positive")
            continue
        if n is None:
            raise GraphParseError(lineno, "edge line before header")
        if tok[0] in ("a", "e"):
            tok = tok[1:]
        if len(tok) not in (2, 3):
            raise GraphParseError(lineno, f"malformed edge line {raw!r}")
        try:
            u, v = int(tok[0]), int(tok[1])
            w = int(tok[2]) if len(tok) == 3 else 1
        except ValueError:
            raise GraphParseError(lineno, f"malformed edge line {raw!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(lineno, f"vertex index out of range for n={n}")
        if u == v:
            raise GraphParseError(lineno, "self-loop")
        if w <= 0:
            raise GraphParseError(lineno, "multiplicity must be positive")
        key = (min(u, v), max(u, v))
        if key not in weight:
            order.append(key)
            weight[key] = 0
        weight[key] += w
    if n is None:
        raise GraphInputError("missing 'p <n> <m>' header")
    return MultiGraph.from_edges(n, [(u, v, weight[(u, v)]) for u, v in order])


def parse_graph(source) -> MultiGraph:
    """Parse from a path or from the text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        return parse_graph_text(Path(source).read_text())
    return parse_graph_text(source)


def format_graph(g: MultiGraph) -> str:
    norm = g.normalized()
    lines = [f"p {norm.n} {norm.num_bundles}"]
    for _, u, v, w in norm.edge_list():
        lines.append(f"{u} {v}" if w == 1 else f"{u} {v} {w}")
    return "\n".join(lines) + "\n"
