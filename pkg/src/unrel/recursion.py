"""Top-level dispatch and the recursive contraction estimator.

``estimate`` tries, in order: the exact oracle for small graphs, Monte Carlo
when failure is not rare, the importance samplers when every level passes the
surrogate test, and otherwise two independent random contractions (or
sparsifications for dense graphs) whose estimates are averaged.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import RecursionConfig
from .estimate import Case, Estimate, aggregate_median_of_means, log_mean, relative_variance
from .exact import exact_unreliability
from .graph import (
    FailureProb,
    GraphInputError,
    MultiGraph,
    contract_3lambda_strong,
    min_cut,
    random_contract,
)
from .packing import LayeringError, approx_ideal_loads, default_delta, gamma_threshold, layer_edges
from .reliable import Verdict, run_reliable, surrogate_check

log = logging.getLogger(__name__)


class RecursionAbort(RuntimeError):
    """Depth or time limit exceeded; ``diagnostics`` holds what was known at that point."""

    def __init__(self, msg: str, diagnostics: dict):
        super().__init__(msg)
        self.diagnostics = diagnostics


class DispatchError(RuntimeError):
    """A step was asked to run outside the regime it is valid in."""


# -- Monte Carlo ---------------------------------------------------------------


def _failure_batch(g: MultiGraph, log_p: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean vector: did the graph disconnect in each of ``size`` independent trials?"""
    n, nb = g.n, g.num_bundles
    alive = rng.random((size, nb)) >= np.exp(g.w * log_p)[None, :]
    rows, cols = np.nonzero(alive)
    offs = rows * n
    mat = coo_matrix((np.ones(len(rows), dtype=np.int8), (g.a[cols] + offs, g.b[cols] + offs)),
                     shape=(size * n, size * n))
    _, labels = connected_components(mat, directed=False)
    labels = labels.reshape(size, n)
    return np.any(labels != labels[:, :1], axis=1)


def _batch_size(g: MultiGraph) -> int:
    return int(max(1, min(4096, 4_000_000 // max(1, g.num_bundles + g.n))))


def mc_failures(g: MultiGraph, p, trials: int, rng: np.random.Generator, stop_at: int | None = None) -> tuple[int, int]:
    """(failures, trials run); stops early once ``stop_at`` failures are seen."""
    log_p = FailureProb.of(p).log_p
    fails = done = 0
    bs = _batch_size(g)
    while done < trials:
        k = min(bs, trials - done)
        f = _failure_batch(g, log_p, k, rng)
        if stop_at is not None and fails + f.sum() >= stop_at:
            idx = int(np.flatnonzero(np.cumsum(f) + fails >= stop_at)[0])
            return stop_at, done + idx + 1
        fails += int(f.sum())
        done += k
    return fails, done


def monte_carlo(g: MultiGraph, p, trials: int, rng: np.random.Generator, groups: int = 1, depth: int = 0) -> Estimate:
    """Failures / trials (or the median of ``groups`` block means)."""
    if trials < 1:
        raise GraphInputError("trials must be at least 1")
    log_p = FailureProb.of(p).log_p
    outcomes = []
    bs = _batch_size(g)
    for lo in range(0, trials, bs):
        outcomes.append(_failure_batch(g, log_p, min(bs, trials - lo), rng))
    f = np.concatenate(outcomes)
    with np.errstate(divide="ignore"):
        lx = np.log(f.astype(float))
    if groups > 1:
        est = aggregate_median_of_means(lx, groups, Case.MONTE_CARLO)
        est.depth = depth
        return est
    return Estimate(log_mean(lx), trials, relative_variance(lx), Case.MONTE_CARLO, depth,
                    info={"failures": int(f.sum())})


def u_threshold(n: int) -> float:
    return n ** (-1.0 / max(math.log(math.log(n)), 2.0))


def prepass_trials(n: int, cfg: RecursionConfig) -> int:
    return math.ceil(cfg.mc_prepass_const * math.log(n) / u_threshold(n))


# -- one-step transforms -------------------------------------------------------


def sparsify(g: MultiGraph, p, rng: np.random.Generator, alpha: float | None = None,
             cfg: RecursionConfig | None = None, lam: int | None = None) -> tuple[MultiGraph, FailureProb]:
    """Keep each unit edge with probability α and raise the failure probability to q'.

    1 - q' = (1 - p)/α, so every unit edge survives with probability 1 - p in
    both views and u_H(q') is an unbiased estimate of u_G(p).
    """
    cfg = cfg or RecursionConfig()
    fp = FailureProb.of(p)
    if alpha is None:
        if lam is None:
            lam = min_cut(g)[0]
        alpha = min(1.0, cfg.c_alpha * math.log(g.n) ** 3 / max(lam, 1))
    if alpha >= 1.0:
        return g, fp
    if alpha <= 1.0 - fp.p:
        raise DispatchError(f"sparsify needs alpha > 1 - p (alpha={alpha:.4g}, p={fp.p:.4g})")
    kept = rng.binomial(g.w, alpha)
    sel = kept > 0
    h = MultiGraph(g.n, g.ids[sel], g.a[sel], g.b[sel], kept[sel])
    q = 1.0 - (1.0 - fp.p) / alpha
    return h, FailureProb.of(q)


def contract_step(g: MultiGraph, p, gamma: float, rng: np.random.Generator) -> tuple[MultiGraph, FailureProb]:
    """H ~ G(q) with q = 2^(-1/γ), returned with p' = p/q."""
    fp = FailureProb.of(p)
    log_q = -math.log(2.0) / gamma
    if fp.log_p >= log_q:
        raise DispatchError(f"contract_step needs p < q (p={fp.p:.4g}, q={math.exp(log_q):.4g})")
    h, _ = random_contract(g, math.exp(log_q), rng)
    return h, FailureProb.from_log(fp.log_p - log_q)


def sparsify_trigger(g: MultiGraph, cfg: RecursionConfig) -> bool:
    n = g.n
    return g.m > n ** (1 + cfg.c_s / math.sqrt(math.log(n)))


def repetitions(n: int, eps: float, cfg: RecursionConfig) -> int:
    ln = math.log(max(n, 3))
    return max(1, math.ceil(cfg.c_R * ln ** (cfg.c_V * math.log(ln)) / (eps * eps)))


# -- dispatch ------------------------------------------------------------------


@dataclass
class _Run:
    cfg: RecursionConfig
    max_depth: int
    deadline: float | None
    cache: dict = field(default_factory=dict)
    cases: dict = field(default_factory=dict)

    def rng(self, path: tuple) -> np.random.Generator:
        # path entries are >= 1: SeedSequence ignores trailing zeros
        return np.random.default_rng([self.cfg.seed, *path])

    def tick(self, depth: int, path: tuple, g: MultiGraph):
        if depth > self.max_depth:
            raise RecursionAbort(f"recursion depth {depth} exceeds {self.max_depth}",
                                 {"path": path, "n": g.n, "m": g.m, "cases": dict(self.cases)})
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise RecursionAbort("time budget exhausted", {"path": path, "n": g.n, "m": g.m,
                                                            "cases": dict(self.cases)})

    def packing(self, g: MultiGraph, lam: int, delta: float):
        key = (g.fingerprint(), delta)
        if key not in self.cache:
            self.cache[key] = approx_ideal_loads(g, delta, seed=self.cfg.seed, lam=lam, rounds=self.cfg.pack_rounds)
        return self.cache[key]

    def note(self, case: Case):
        self.cases[case.value] = self.cases.get(case.value, 0) + 1


def _mean_of(children: list[Estimate], depth: int, case: Case = Case.CONTRACTED) -> Estimate:
    logs = np.array([c.log_value for c in children])
    return Estimate(log_mean(logs), sum(c.samples for c in children), relative_variance(logs), case,
                    max(c.depth for c in children), biased=any(c.biased for c in children),
                    info={"children": [c.case.value for c in children]})


def _leaf_or_none(run: _Run, g: MultiGraph, fp: FailureProb, eps: float, depth: int, path: tuple,
                  top: bool, witness: dict) -> Estimate | None:
    """Cases (1)-(3); returns None when the recursive case applies."""
    cfg = run.cfg
    rng = run.rng(path)
    n = g.n
    if n == 1:
        return Estimate(-math.inf, 0, 0.0, Case.EXACT, depth)
    if not g.is_connected():
        return Estimate(0.0, 0, 0.0, Case.EXACT, depth)
    if n <= cfg.n0:
        return Estimate(exact_unreliability(g, fp), 0, 0.0, Case.EXACT, depth)

    # Monte Carlo pre-pass; the verdict only depends on reaching ceil(u_thresh * N0) failures.
    u_thr = u_threshold(n)
    n0 = prepass_trials(n, cfg)
    need = math.ceil(u_thr * n0)
    fails, ran = mc_failures(g, fp, n0, rng, stop_at=need)
    witness.update(u_thresh=u_thr, prepass_trials=n0, prepass_failures=fails, prepass_ran=ran)
    if fails >= need:
        u_hat = fails / ran
        per = max(1, math.ceil(cfg.mc_boost_const * (1 - u_hat) / (u_hat * eps * eps)))
        groups = cfg.mc_groups if top else 1
        est = monte_carlo(g, fp, per * groups, rng, groups=groups, depth=depth)
        est.info.update(witness)
        return est

    lam, _ = min_cut(g)
    witness["lam"] = lam
    h = g
    if lam * fp.log_p <= math.log(eps / n):
        h, _ = contract_3lambda_strong(g)
        witness["strong_contracted"] = h.n != g.n
    if h.n <= 1:
        witness["verdict"] = "Unreliable"
        return None
    nh = h.n
    delta = cfg.delta or default_delta(nh)
    slack = cfg.surrogate_slack
    if (1 + slack * delta) * math.log(nh) + lam * fp.log_p > 0:
        witness.update(verdict="Unreliable", failing_level=0, note="level 0 fails for any layering")
        return None
    loads, packing = run.packing(h, lam, delta)
    try:
        layering = layer_edges(loads, lam, delta, g=h, trees=packing.trees)
    except LayeringError as exc:
        witness.update(verdict="Unreliable", note=f"layering: {exc}")
        return None
    decision = surrogate_check(layering, fp, nh, delta, slack)
    witness.update(verdict=decision.verdict.value, failing_level=decision.failing_level)
    if decision.verdict is not Verdict.RELIABLE:
        return None
    decision, est = run_reliable(h, fp, delta, eps, rng, packing, layering, lam, cfg, depth)
    witness.update(verdict=decision.verdict.value, bootstrap_log_z=decision.bootstrap_log_z)
    if est is None:
        return None
    est.info.update(witness)
    return est


def _estimate(run: _Run, g: MultiGraph, fp: FailureProb, eps: float, depth: int, path: tuple,
              top: bool = False) -> Estimate:
    run.tick(depth, path, g)
    witness: dict = {}
    leaf = _leaf_or_none(run, g, fp, eps, depth, path, top, witness)
    if leaf is not None:
        run.note(leaf.case)
        return leaf
    run.note(Case.CONTRACTED)
    cfg = run.cfg
    rng = run.rng(path + (3,))
    children = []
    if sparsify_trigger(g, cfg):
        for b in range(2):
            h, q = sparsify(g, fp, rng, cfg=cfg, lam=witness.get("lam"))
            if h is g:
                break
            children.append(_estimate(run, h, q, 1.0, depth + 1, path + (b + 1,)))
    if not children:
        lam = witness.get("lam") or min_cut(g)[0]
        delta = cfg.delta or default_delta(g.n)
        loads, _ = run.packing(g, lam, delta)
        _, gamma = gamma_threshold(loads, lam, delta, g)
        if fp.log_p >= -math.log(2.0) / gamma:
            gamma = float(lam)
        for b in range(2):
            h, pq = contract_step(g, fp, gamma, rng)
            children.append(_estimate(run, h, pq, 1.0, depth + 1, path + (b + 1,)))
    out = _mean_of(children, depth)
    out.depth = max(c.depth for c in children)
    out.info["witness"] = witness
    return out


@dataclass
class RepRecord:
    rep: int
    log_value: float
    case: str
    samples: int
    depth: int

    def line(self) -> str:
        return f"rep={self.rep} est_ln={self.log_value!r} case={self.case} samples={self.samples} depth={self.depth}"


def _repetition(args) -> tuple[Estimate, dict]:
    g, fp, eps, cfg, r, max_depth, budget = args
    deadline = None if budget is None else time.monotonic() + budget
    run = _Run(cfg, max_depth, deadline)
    return _estimate(run, g, fp, eps, 0, (r + 1,), top=True), run.cases


def estimate(g: MultiGraph, p, eps: float, cfg: RecursionConfig | None = None,
             rng: np.random.Generator | None = None, workers: int = 1) -> Estimate:
    """Estimate u_G(p) to within a (1 ± ε) factor with high probability.

    Exact, Monte Carlo and importance-sampling roots return one estimate.
    When the root is in the recursive case the whole recursion is repeated R
    times and the median of means is returned.  ``info["reps"]`` holds one
    :class:`RepRecord` per repetition.  All random streams derive from
    ``cfg.seed`` and the recursion path, so ``rng`` is ignored and the result
    does not depend on ``workers``.
    """
    cfg = cfg or RecursionConfig()
    fp = FailureProb.of(p)
    if not (0 < eps < 1):
        raise GraphInputError("eps must lie in (0,1)")
    if g.n > 1 and not g.is_connected():
        return Estimate(0.0, 0, 0.0, Case.EXACT, info={"reps": [RepRecord(0, 0.0, Case.EXACT.value, 0, 0)],
                                                        "cases": {Case.EXACT.value: 1}})
    max_depth = math.ceil(cfg.depth_factor * math.log2(max(g.n, 2)))
    first, cases = _repetition((g, fp, eps, cfg, 0, max_depth, cfg.time_budget))
    ests = [first]
    if first.case is Case.CONTRACTED:
        R = repetitions(g.n, eps, cfg)
        jobs = [(g, fp, eps, cfg, r, max_depth, cfg.time_budget) for r in range(1, R)]
        if workers > 1 and jobs:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_repetition, jobs))
        else:
            results = [_repetition(job) for job in jobs]
        for est, c in results:
            ests.append(est)
            for k, v in c.items():
                cases[k] = cases.get(k, 0) + v
    reps = [RepRecord(i, e.log_value, e.case.value, e.samples, e.depth) for i, e in enumerate(ests)]
    if len(ests) == 1:
        out = first
    else:
        groups = min(cfg.mc_groups, len(ests))
        out = aggregate_median_of_means([e.log_value for e in ests], groups, Case.CONTRACTED)
        out.samples = sum(e.samples for e in ests)
        out.depth = max(e.depth for e in ests)
        out.biased = any(e.biased for e in ests)
    out.info["reps"] = reps
    out.info["cases"] = dict(sorted(cases.items()))
    return out


def classify(g: MultiGraph, p, eps: float, cfg: RecursionConfig | None = None) -> tuple[str, dict]:
    """Which case the root of ``estimate`` lands in, with the recorded witnesses.

    Returns the leaf case name or ``"Recursive"``.  Runs the same checks as
    ``estimate`` (including the leaf estimator when one applies).
    """
    cfg = cfg or RecursionConfig()
    run = _Run(cfg, math.ceil(cfg.depth_factor * math.log2(max(g.n, 2))), None)
    witness: dict = {}
    leaf = _leaf_or_none(run, g, FailureProb.of(p), eps, 0, (1,), True, witness)
    return ("Recursive" if leaf is None else leaf.case.value), witness
