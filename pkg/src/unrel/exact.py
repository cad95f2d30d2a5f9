"""Exact ground truth for small graphs.

Everything here is exponential and guarded by explicit size limits.  Sums are
arranged so that every term is nonnegative, which keeps relative accuracy even
when the quantity of interest is tiny (1 - Pr[connected] would not).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .graph import CapabilityError, GraphInputError, MultiGraph, contract_by_mask, edge_connectivity

DP_MAX_N = 16
ENUM_MAX_BUNDLES = 22
CUTS_MAX_N = 20
PAIRS_MAX_N = 16
PARTITION_MAX_N = 10


def _log_p(p) -> float:
    p = float(getattr(p, "p", p))
    if not (0.0 < p < 1.0):
        raise GraphInputError(f"failure probability must lie in (0,1), got {p}")
    return math.log(p)


def internal_multiplicity(g: MultiGraph) -> np.ndarray:
    """w[A] = total multiplicity of edges with both ends in vertex mask A, for all 2^n masks."""
    masks = np.arange(1 << g.n, dtype=np.int64)
    out = np.zeros(1 << g.n, dtype=np.int64)
    for u, v, x in zip(g.a, g.b, g.w):
        out += x * (((masks >> u) & (masks >> v)) & 1)
    return out


@lru_cache(maxsize=64)
def _layer(n: int, k: int, need_bit0: bool):
    """Masks A of popcount k (optionally containing vertex 0) and, per row, every
    submask T that contains the lowest bit of A and differs from A."""
    masks = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        pop += (masks >> j) & 1
    sel = masks[pop == k]
    if need_bit0:
        sel = sel[(sel & 1) == 1]
    if len(sel) == 0 or k < 2:
        return sel, np.zeros((len(sel), 0), dtype=np.int64)
    bits = ((sel[:, None] >> np.arange(n)) & 1).astype(bool)
    pos = np.nonzero(bits)[1].reshape(len(sel), k)
    low = np.int64(1) << pos[:, 0]
    rest = np.int64(1) << pos[:, 1:]
    r = np.arange((1 << (k - 1)) - 1, dtype=np.int64)
    rbits = (r[:, None] >> np.arange(k - 1)) & 1
    sub = rest @ rbits.T + low[:, None]
    sel.setflags(write=False)
    sub.setflags(write=False)
    return sel, sub


def _log1m_exp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0, accurate on both ends."""
    x = np.minimum(np.asarray(x, dtype=float), 0.0)
    out = np.empty_like(x)
    small = x > -0.6931471805599453
    with np.errstate(divide="ignore"):
        out[small] = np.log(-np.expm1(x[small]))
        out[~small] = np.log1p(-np.exp(x[~small]))
    return out


def _exact_dp(g: MultiGraph, log_p: float) -> float:
    n = g.n
    w = internal_multiplicity(g)
    logd = np.full(1 << n, -np.inf)
    for k in range(2, n + 1):
        sel, sub = _layer(n, k, True)
        if sub.shape[1] == 0:
            continue
        cross = w[sel][:, None] - w[sub] - w[sel[:, None] ^ sub]
        vals = _log1m_exp(logd[sub]) + cross * log_p
        logd[sel] = np.minimum(logsumexp(vals, axis=1), 0.0)
    return float(logd[(1 << n) - 1])


def _exact_enum(g: MultiGraph, log_p: float, chunk: int = 1 << 15) -> float:
    """Sum of Pr[surviving bundle set] over all disconnected survivor sets."""
    k = g.num_bundles
    n = g.n
    fail = g.w * log_p
    live = _log1m_exp(fail)
    terms = []
    full = (1 << n) - 1
    for start in range(0, 1 << k, chunk):
        sets = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
        alive = ((sets[:, None] >> np.arange(k)) & 1).astype(bool)
        reach = np.ones(len(sets), dtype=np.int64)
        for _ in range(n - 1):
            before = reach
            for j in range(k):
                u, v = int(g.a[j]), int(g.b[j])
                on = alive[:, j]
                ru = (reach >> u) & 1
                rv = (reach >> v) & 1
                reach = reach | ((ru & on) << v) | ((rv & on) << u)
            if np.array_equal(before, reach):
                break
        disc = reach != full
        if disc.any():
            lp = np.where(alive[disc], live, fail).sum(axis=1)
            terms.append(lp)
    if not terms:
        return -math.inf
    return float(logsumexp(np.concatenate(terms)))


def exact_unreliability(g: MultiGraph, p, method: str = "dp") -> float:
    """Natural log of the probability that g disconnects (bundle of weight w fails w.p. p^w).

    ``method="dp"`` is the O(3^n) component recurrence (n <= 16);
    ``method="enum"`` enumerates all bundle survival patterns (<= 22 bundles).
    """
    log_p = _log_p(p)
    if g.n == 1:
        return -math.inf
    if not g.is_connected():
        return 0.0
    if method == "dp":
        if g.n > DP_MAX_N:
            raise CapabilityError(f"exact DP limited to n <= {DP_MAX_N}, got {g.n}")
        return _exact_dp(g, log_p)
    if method == "enum":
        if g.num_bundles > ENUM_MAX_BUNDLES:
            raise CapabilityError(f"enumeration limited to {ENUM_MAX_BUNDLES} bundles, got {g.num_bundles}")
        return _exact_enum(g, log_p)
    raise GraphInputError(f"unknown method {method!r}")


def unreliability(g: MultiGraph, p, method: str = "dp") -> float:
    return math.exp(exact_unreliability(g, p, method))


@dataclass
class CutStatistics:
    """All 2^(n-1)-1 bipartitions of a graph at a fixed p.

    ``masks[i]`` is the side containing vertex 0 and ``values[i]`` its cut value.
    """

    n: int
    log_p: float
    masks: np.ndarray
    values: np.ndarray
    log_z: float
    _graph: MultiGraph = field(repr=False)
    _w: np.ndarray = field(repr=False)
    _log_x: float | None = field(default=None, repr=False)

    @property
    def z(self) -> float:
        return math.exp(self.log_z)

    @property
    def log_x(self) -> float:
        if self._log_x is None:
            self._log_x = _log_x(self._graph, self._w, self.log_p)
        return self._log_x

    @property
    def x(self) -> float:
        return math.exp(self.log_x)

    def sides(self) -> np.ndarray:
        """Boolean (cuts x n) matrix; row i marks the vertex-0 side of cut i."""
        return ((self.masks[:, None] >> np.arange(self.n)) & 1).astype(bool)

    def log_z_where(self, keep: np.ndarray | Callable) -> float:
        """log of sum p^{|C|} over cuts selected by a boolean mask or a predicate on (masks, values)."""
        if callable(keep):
            keep = keep(self.masks, self.values)
        keep = np.asarray(keep, dtype=bool)
        if not keep.any():
            return -math.inf
        return float(logsumexp(self.values[keep] * self.log_p))

    def count_at_most(self, value) -> int:
        return int((self.values <= value).sum())


def enumerate_cuts(g: MultiGraph, p) -> CutStatistics:
    """Cut table plus z = sum_C p^|C|; x (ordered distinct pairs) is computed on demand."""
    if g.n > CUTS_MAX_N:
        raise CapabilityError(f"cut enumeration limited to n <= {CUTS_MAX_N}, got {g.n}")
    if g.n < 2:
        raise GraphInputError("cuts need at least two vertices")
    log_p = _log_p(p)
    w = internal_multiplicity(g)
    full = (1 << g.n) - 1
    masks = np.arange(1, full, 2, dtype=np.int64)
    values = w[full] - w[masks] - w[full ^ masks]
    log_z = float(logsumexp(values * log_p))
    return CutStatistics(g.n, log_p, masks, values, log_z, g, w)


def _log_x(g: MultiGraph, w: np.ndarray, log_p: float) -> float:
    """log sum over ordered pairs of distinct cuts of p^{|C_i u C_j|}.

    For a vertex set S let a(S) = sum over nontrivial T subset S of p^{|d_{G[S]}(T)|}.
    Splitting the second cut T into its S and V\\S halves gives
    4x = sum_{S nontrivial} p^{|dS|} (2 a(S) + 2 a(V\\S) + a(S) a(V\\S)), all terms >= 0.
    """
    n = g.n
    if n > PAIRS_MAX_N:
        raise CapabilityError(f"pair statistic limited to n <= {PAIRS_MAX_N}, got {n}")
    full = (1 << n) - 1
    log_a = np.full(1 << n, -np.inf)
    for k in range(2, n + 1):
        sel, sub = _layer(n, k, False)
        if sub.shape[1] == 0:
            continue
        cross = w[sel][:, None] - w[sub] - w[sel[:, None] ^ sub]
        log_a[sel] = math.log(2.0) + logsumexp(cross * log_p, axis=1)
    masks = np.arange(1, full, dtype=np.int64)
    cut = w[full] - w[masks] - w[full ^ masks]
    la = log_a[masks]
    lb = log_a[full ^ masks]
    inner = np.logaddexp(np.logaddexp(math.log(2.0) + la, math.log(2.0) + lb), la + lb)
    terms = cut * log_p + inner
    terms = terms[np.isfinite(terms)]
    if len(terms) == 0:
        return -math.inf
    return float(logsumexp(terms) - math.log(4.0))


# ---------------------------------------------------------------------------
# Ideal loads via the recursive min-ratio partition process.


def restricted_growth_strings(n: int) -> np.ndarray:
    """All set partitions of n elements as restricted-growth strings, in lexicographic order."""
    if n > PARTITION_MAX_N:
        raise CapabilityError(f"partition enumeration limited to n <= {PARTITION_MAX_N}, got {n}")
    rows = np.zeros((1, 1), dtype=np.int8)
    for _ in range(1, n):
        mx = rows.max(axis=1)
        reps = (mx + 2).astype(np.int64)
        base = np.repeat(rows, reps, axis=0)
        nxt = np.concatenate([np.arange(r) for r in reps]).astype(np.int8)
        rows = np.hstack([base, nxt[:, None]])
    return rows


@dataclass(frozen=True)
class RatioCut:
    labels: tuple[int, ...]
    parts: int
    crossing: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.crossing, self.parts - 1)


def min_ratio_cut(g: MultiGraph, prefer: str = "fine") -> RatioCut:
    """Partition minimizing (crossing multiplicity) / (parts - 1).

    Ties: ``prefer="fine"`` takes the most parts then the lexicographically
    smallest labelling; ``prefer="coarse"`` takes the fewest parts then the
    lexicographically largest.  The second rule exists only to test that the
    recursive loads do not depend on the choice.
    """
    if g.n < 2:
        raise GraphInputError("need at least two vertices")
    rgs = restricted_growth_strings(g.n)
    parts = rgs.max(axis=1).astype(np.int64) + 1
    rgs, parts = rgs[parts >= 2], parts[parts >= 2]
    cross = np.zeros(len(rgs), dtype=np.int64)
    for u, v, x in zip(g.a, g.b, g.w):
        cross += x * (rgs[:, u] != rgs[:, v])
    ratio = cross / (parts - 1)
    lo = ratio.min()
    cand = np.flatnonzero(ratio <= lo * (1 + 1e-9) + 1e-12)
    best = min(Fraction(int(cross[i]), int(parts[i] - 1)) for i in cand)
    cand = [i for i in cand if Fraction(int(cross[i]), int(parts[i] - 1)) == best]
    if prefer == "fine":
        top = max(parts[i] for i in cand)
        pick = min((i for i in cand if parts[i] == top), key=lambda i: tuple(rgs[i]))
    elif prefer == "coarse":
        top = min(parts[i] for i in cand)
        pick = max((i for i in cand if parts[i] == top), key=lambda i: tuple(rgs[i]))
    else:
        raise GraphInputError(f"unknown tie rule {prefer!r}")
    return RatioCut(tuple(int(x) for x in rgs[pick]), int(parts[pick]), int(cross[pick]))


@dataclass
class IdealLoads:
    """Per-unit-edge ideal loads keyed by edge id, as exact fractions."""

    loads: dict
    trace: list = field(default_factory=list)

    @property
    def pi_star(self) -> Fraction:
        return 1 / max(self.loads.values())

    def array(self, g: MultiGraph) -> np.ndarray:
        return np.array([float(self.loads[int(e)]) for e in g.ids])

    def __getitem__(self, edge_id):
        return self.loads[int(edge_id)]


def exact_ideal_loads(g: MultiGraph, prefer: str = "fine") -> IdealLoads:
    """Recursive min-ratio partition loads.

    ``trace`` holds (parent_load, load) for every recursive step; the root's
    parent load is None.
    """
    if g.n > PARTITION_MAX_N:
        raise CapabilityError(f"ideal loads limited to n <= {PARTITION_MAX_N}, got {g.n}")
    if not g.is_connected():
        raise GraphInputError("ideal loads need a connected graph")
    loads: dict = {}
    trace: list = []
    stack = [(g, None)]
    while stack:
        h, parent = stack.pop()
        if h.n < 2:
            continue
        cut = min_ratio_cut(h, prefer)
        value = Fraction(cut.parts - 1, cut.crossing)
        trace.append((parent, value))
        labels = np.array(cut.labels)
        crossing = labels[h.a] != labels[h.b]
        for e in h.ids[crossing]:
            loads[int(e)] = value
        for part in range(cut.parts):
            verts = np.flatnonzero(labels == part)
            if len(verts) > 1:
                sub, _ = h.induced(verts)
                stack.append((sub, value))
    return IdealLoads(loads, trace)


def k_tau(loads: IdealLoads, g: MultiGraph, tau) -> int:
    """Vertex count after contracting every edge with ideal load < 1/tau."""
    tau = Fraction(tau)
    if tau <= 0:
        raise GraphInputError("tau must be positive")
    thr = 1 / tau
    mask = np.array([loads[int(e)] < thr for e in g.ids], dtype=bool)
    h, _ = contract_by_mask(g, mask)
    return h.n


def basic_range(g: MultiGraph, p) -> tuple[float, float]:
    """(log p^λ, log n^2 p^λ): the elementary bracket around log u."""
    lam = edge_connectivity(g)
    log_p = _log_p(p)
    return lam * log_p, 2 * math.log(g.n) + lam * log_p
