"""Importance sampling of small cuts from a sparsified tree packing.

A sample picks a tree uniformly, a per-level edge-count profile uniformly
among the nonzero profiles with total at most ``J_cap``, and then that many
tree edges per level uniformly without replacement.  The parity bipartition of
the chosen edges is the cut.  Its exact probability q(C) is an average over all
trees of the packing, so X = p^|C| / q(C) (restricted to low-load cuts) is an
unbiased estimator of the sum of p^|C| over those cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln, logsumexp

from .config import RecursionConfig
from .cutquery import root_tree
from .estimate import Case, Estimate, log_mean, lower_median, relative_variance
from .graph import FailureProb, GraphInputError, MultiGraph
from .packing import EdgeLayering, TreePacking, default_sparse_count, sparsify_packing


class Verdict(str, Enum):
    RELIABLE = "Reliable"
    UNRELIABLE = "Unreliable"
    VERY_RELIABLE = "VeryReliable"


@dataclass
class ReliableDecision:
    verdict: Verdict
    criterion: np.ndarray | None = None
    failing_level: int | None = None
    bootstrap_log_z: float | None = None
    log_p_lambda: float | None = None
    note: str = ""


def surrogate_terms(layering: EdgeLayering, log_p: float, n: int, delta: float, slack: float) -> np.ndarray:
    """Per level: (1 + slack*δ) ln n + ln k̃_i + 2 π_i ln p."""
    k = np.maximum(layering.k_tilde, 1)
    return (1 + slack * delta) * math.log(n) + np.log(k) + 2 * layering.pis * log_p


def surrogate_check(layering: EdgeLayering, p, n: int, delta: float, slack: float = 30.0) -> ReliableDecision:
    """Reliable iff every level's log-space criterion is <= 0; records the first failing level."""
    log_p = FailureProb.of(p).log_p
    terms = surrogate_terms(layering, log_p, n, delta, slack)
    bad = np.flatnonzero(terms > 0)
    if len(bad):
        return ReliableDecision(Verdict.UNRELIABLE, terms, int(bad[0]))
    return ReliableDecision(Verdict.RELIABLE, terms)


def count_profiles(caps, j_cap: int) -> int:
    """Number of nonzero profiles (j_1..j_L) with 0 <= j_i <= caps[i] and sum <= j_cap."""
    ways = [1] + [0] * j_cap
    for c in caps:
        c = int(c)
        nxt = [0] * (j_cap + 1)
        for s in range(j_cap + 1):
            if ways[s]:
                for j in range(min(c, j_cap - s) + 1):
                    nxt[s + j] += ways[s]
        ways = nxt
    return sum(ways) - 1


def _log_binom(nn, kk):
    nn = np.asarray(nn, dtype=float)
    kk = np.asarray(kk, dtype=float)
    return gammaln(nn + 1) - gammaln(kk + 1) - gammaln(nn - kk + 1)


@dataclass
class CutSample:
    tree_slot: int
    profile: tuple
    edges: tuple
    side: np.ndarray
    value: int
    load: float
    log_q: float | None = None

    @property
    def fingerprint(self) -> bytes:
        return side_key(self.side)


def side_key(side: np.ndarray) -> bytes:
    """Canonical bytes for a bipartition (vertex 0 always on the False side)."""
    side = np.asarray(side, dtype=bool)
    if side[0]:
        side = ~side
    return np.packbits(side).tobytes()


@dataclass
class ReliableSampler:
    """Sampler state for one graph, full-packing loads and a sparsified packing."""

    graph: MultiGraph
    log_p: float
    layering: EdgeLayering
    counts: np.ndarray
    packing_size: int
    trees: np.ndarray
    j_cap: int
    load_cap: float
    _prep: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, g: MultiGraph, p, full: TreePacking, sparse: TreePacking, layering: EdgeLayering,
              j_cap: int | None = None, load_cap: float | None = None, cfg: RecursionConfig | None = None):
        cfg = cfg or RecursionConfig()
        n = g.n
        if j_cap is None:
            j_cap = max(math.ceil(cfg.j_cap_const * math.log(n)), 2)
        if load_cap is None:
            load_cap = cfg.load_cap_const * math.log(n)
        s = cls(g, FailureProb.of(p).log_p, layering, full.counts.copy(), len(full), sparse.trees.copy(),
                int(j_cap), float(load_cap))
        s._prepare()
        return s

    def _prepare(self):
        g, lay, trees = self.graph, self.layering, self.trees
        L = lay.num_levels
        J = self.j_cap
        T = len(trees)
        caps = np.stack([np.bincount(lay.level[t], minlength=L) for t in trees])
        tree_level = lay.level[trees]
        # ways[t, i, s]: profiles of levels i.. with sum <= s (zero profile included)
        ways = np.zeros((T, L + 1, J + 1))
        ways[:, L, :] = 1.0
        log_count = np.empty(T)
        for t in range(T):
            for i in range(L - 1, -1, -1):
                for s_ in range(J + 1):
                    top = min(int(caps[t, i]), s_)
                    ways[t, i, s_] = ways[t, i + 1, s_ - top: s_ + 1].sum()
            log_count[t] = math.log(count_profiles(caps[t], J))
        # cdf over j at (t, i, remaining s)
        jj = np.arange(J + 1)
        cdf = np.zeros((T, L, J + 1, J + 1))
        for i in range(L):
            rem = np.arange(J + 1)[None, :, None] - jj[None, None, :]
            ok = (rem >= 0) & (jj[None, None, :] <= caps[:, i][:, None, None])
            wts = np.where(ok, ways[:, i + 1][:, np.clip(rem, 0, J)[0]], 0.0)
            cdf[:, i] = np.cumsum(wts, axis=2) / np.maximum(wts.sum(axis=2, keepdims=True), 1e-300)
        rooted = {}
        sub = np.zeros((T, g.n - 1, g.n), dtype=np.int8)
        for t in range(T):
            key = trees[t].tobytes()
            if key not in rooted:
                r = root_tree(g, trees[t])
                children = np.array([r.child_of[int(pos)] for pos in trees[t]])
                rooted[key] = r.in_subtree(np.arange(g.n), children).T.astype(np.int8)
            sub[t] = rooted[key]
        log_binom = _log_binom(caps[:, :, None], np.minimum(jj[None, None, :], caps[:, :, None]))
        log_binom[jj[None, None, :] > caps[:, :, None]] = np.inf
        self._prep = dict(caps=caps, tree_level=tree_level, log_count=log_count, cdf=cdf, sub=sub,
                          log_binom=log_binom, unit_load=self.counts / self.packing_size)

    # -- sampling -------------------------------------------------------------

    def sample_batch(self, size: int, rng: np.random.Generator):
        """Draw ``size`` cuts; returns (slots, profiles, chosen-edge masks, sides)."""
        pr = self._prep
        T = len(self.trees)
        L = self.layering.num_levels
        slots = rng.integers(0, T, size=size)
        prof = np.zeros((size, L), dtype=np.int64)
        todo = np.arange(size)
        while len(todo):
            rem = np.full(len(todo), self.j_cap)
            for i in range(L):
                c = pr["cdf"][slots[todo], i, rem]
                u = rng.random(len(todo))
                j = (c < u[:, None]).sum(axis=1)
                prof[todo, i] = j
                rem = rem - j
            todo = todo[prof[todo].sum(axis=1) == 0]
        lev = pr["tree_level"][slots]
        keys = lev + rng.random(lev.shape)
        order = np.argsort(keys, axis=1)
        sorted_lev = np.take_along_axis(lev, order, axis=1)
        start = np.zeros((size, L + 1), dtype=np.int64)
        start[:, 1:] = np.cumsum(pr["caps"][slots], axis=1)
        rank = np.arange(lev.shape[1])[None, :] - np.take_along_axis(start, sorted_lev, axis=1)
        chosen_sorted = rank < np.take_along_axis(prof, sorted_lev, axis=1)
        chosen = np.zeros_like(chosen_sorted)
        np.put_along_axis(chosen, order, chosen_sorted, axis=1)
        sides = np.zeros((size, self.graph.n), dtype=bool)
        for t in np.unique(slots):
            rows = np.flatnonzero(slots == t)
            sides[rows] = (chosen[rows].astype(np.int64) @ pr["sub"][t]) & 1
        return slots, prof, chosen, sides

    def cut_stats(self, sides: np.ndarray):
        """(value, packing load) of each bipartition row."""
        g = self.graph
        cross = sides[:, g.a] != sides[:, g.b]
        return cross @ g.w, cross @ self._prep["unit_load"]

    def log_q(self, sides: np.ndarray) -> np.ndarray:
        """Exact log-probability that the sampler emits each bipartition (-inf if unreachable)."""
        pr = self._prep
        g = self.graph
        A = g.a[self.trees]
        B = g.b[self.trees]
        T, L = pr["caps"].shape
        out = np.empty(len(sides))
        step = max(1, 2_000_000 // max(1, T * (g.n - 1)))
        for lo in range(0, len(sides), step):
            s = sides[lo: lo + step]
            cross = s[:, A] != s[:, B]
            j = np.zeros((len(s), T, L), dtype=np.int64)
            for i in range(L):
                j[:, :, i] = (cross & (pr["tree_level"] == i)[None]).sum(axis=2)
            valid = j.sum(axis=2) <= self.j_cap
            jc = np.minimum(j, self.j_cap)
            lb = pr["log_binom"][np.arange(T)[None, :, None], np.arange(L)[None, None, :], jc]
            term = -pr["log_count"][None, :] - lb.sum(axis=2)
            term = np.where(valid & np.isfinite(term), term, -np.inf)
            with np.errstate(divide="ignore"):
                out[lo: lo + step] = logsumexp(term, axis=1) - math.log(T)
        return out

    def log_estimates(self, values, loads, log_q) -> np.ndarray:
        """log X per sample; -inf where the load exceeds the cap."""
        if np.any(~np.isfinite(log_q)):
            raise GraphInputError("sampled cut has q = 0")
        lx = values * self.log_p - log_q
        return np.where(loads <= self.load_cap + 1e-12, lx, -np.inf)

    def draw(self, size: int, rng: np.random.Generator, batch: int = 4096) -> np.ndarray:
        """``size`` i.i.d. log-estimator values."""
        out = []
        left = size
        while left > 0:
            k = min(batch, left)
            _, _, _, sides = self.sample_batch(k, rng)
            values, loads = self.cut_stats(sides)
            out.append(self.log_estimates(values, loads, self.log_q(sides)))
            left -= k
        return np.concatenate(out)

    def sample_cut(self, rng: np.random.Generator) -> CutSample:
        slots, prof, chosen, sides = self.sample_batch(1, rng)
        values, loads = self.cut_stats(sides)
        edges = tuple(int(self.graph.ids[pos]) for pos in self.trees[slots[0]][chosen[0]])
        return CutSample(int(slots[0]), tuple(int(x) for x in prof[0]), edges, sides[0], int(values[0]),
                         float(loads[0]), float(self.log_q(sides)[0]))


def q_of_cut(sampler: ReliableSampler, side) -> float:
    """log q(C) for one bipartition; -inf signals an unreachable cut."""
    return float(sampler.log_q(np.asarray(side, dtype=bool)[None, :])[0])


def estimator_sample(value: int, log_p: float, log_q: float, load: float, load_cap: float) -> float:
    """log X for one cut: |C| ln p - ln q when the load is within the cap, else -inf."""
    if not math.isfinite(log_q):
        raise GraphInputError("estimator undefined for q = 0")
    if load > load_cap:
        return -math.inf
    return value * log_p - log_q


def reliable_sample_count(n: int, eps: float, cfg: RecursionConfig) -> int:
    return math.ceil(cfg.reliable_samples_const * n * math.log(n) ** cfg.reliable_log_power / (eps * eps))


def run_reliable(g: MultiGraph, p, delta: float, eps: float, rng: np.random.Generator,
                 full: TreePacking, layering: EdgeLayering, lam: int,
                 cfg: RecursionConfig | None = None, depth: int = 0) -> tuple[ReliableDecision, Estimate | None]:
    """Reliable-case estimator of u_G(p) (through z'), after surrogate_check said Reliable.

    Returns an Unreliable decision without an estimate when the bootstrap value
    is at least 1/(2n).  Very small p^λ is handed to the very-reliable sampler.
    """
    from .veryreliable import run_very_reliable

    cfg = cfg or RecursionConfig()
    fp = FailureProb.of(p)
    n = g.n
    log_pl = lam * fp.log_p
    if log_pl < -cfg.vr_c0 * math.log(n):
        est = run_very_reliable(g, fp, eps, rng, lam, cfg, depth)
        return ReliableDecision(Verdict.VERY_RELIABLE, log_p_lambda=log_pl), est
    hard = cfg.shape_hard_const * n * math.log(n) ** 3
    last = None
    for attempt in range(cfg.retries + 1):
        sparse = sparsify_packing(full, default_sparse_count(n, cfg.sparse_trees_const), rng)
        sampler = ReliableSampler.build(g, fp, full, sparse, layering, cfg=cfg)
        per = math.ceil(cfg.bootstrap_const * n)
        boot = sampler.draw(cfg.bootstrap_groups * per, rng)
        z_boot = lower_median(log_mean(b) for b in np.array_split(boot, cfg.bootstrap_groups))
        if z_boot >= -math.log(2 * n):
            return ReliableDecision(Verdict.UNRELIABLE, bootstrap_log_z=z_boot, log_p_lambda=log_pl,
                                    note="bootstrap estimate at least 1/(2n)"), None
        N = reliable_sample_count(n, eps, cfg)
        lx = sampler.draw(N, rng)
        mean = log_mean(lx)
        est = Estimate(mean, N, relative_variance(lx), Case.RELIABLE, depth, biased=True,
                       info={"bootstrap_log_z": z_boot, "attempt": attempt, "trees": len(sparse)})
        last = est
        peak = float(np.max(lx) - mean) if math.isfinite(mean) else 0.0
        if peak <= math.log(hard):
            break
        est.info["shape_retry"] = True
    return ReliableDecision(Verdict.RELIABLE, bootstrap_log_z=last.info["bootstrap_log_z"], log_p_lambda=log_pl), last
