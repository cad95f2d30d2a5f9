"""Command-line front end.

Machine-readable output is one ``key=value`` record per line.  ``--out``
writes the reproducible part of a run (no wall time) to a file.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .graph import CapabilityError, GraphInputError, edge_connectivity, min_cut
from .graphio import format_graph, parse_graph
from .generators import generate, parse_family
from .recursion import RecursionAbort


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _kv(**items) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in items.items())


def _graph_of(args):
    if bool(args.graph) == bool(args.family):
        raise GraphInputError("give exactly one of --graph or --family")
    if args.graph:
        src = sys.stdin.read() if args.graph == "-" else Path(args.graph)
        return parse_graph(src)
    name, params = parse_family(args.family)
    return generate(name, params, seed=args.seed)


def _config(args):
    return load_config(args.config, seed=args.seed)


class _Out:
    """Collects the reproducible record and echoes it to stdout."""

    def __init__(self, args):
        self.path = getattr(args, "out", None)
        self.lines: list[str] = []

    def emit(self, line: str, record: bool = True):
        print(line)
        if record:
            self.lines.append(line)

    def close(self):
        if self.path:
            Path(self.path).write_text("".join(line + "\n" for line in self.lines))


def _header(out: _Out, args, g, cfg=None):
    out.emit(_kv(command=args.command, seed=args.seed,
                 config=cfg.digest() if cfg is not None else "-",
                 graph=g.fingerprint(), n=g.n, m=g.m))


def cmd_estimate(args, out: _Out) -> int:
    from .recursion import estimate

    g = _graph_of(args)
    cfg = _config(args)
    _header(out, args, g, cfg)
    t0 = time.perf_counter()
    est = estimate(g, args.p, args.eps, cfg, workers=args.workers)
    wall = time.perf_counter() - t0
    for rec in est.info.get("reps", []):
        out.emit(rec.line())
    cases = est.info.get("cases", {})
    out.emit(_kv(est_ln=est.log_value, est_log10=est.log_value / math.log(10), case=est.case.value,
                 samples=est.samples, depth=est.depth, biased=int(est.biased)))
    out.emit(_kv(cases=",".join(f"{k}:{v}" for k, v in cases.items()) or "-"))
    lo, hi = max(0.0, 1 - args.eps), 1 + args.eps
    value = est.value
    out.emit(f"# estimate {value:.6g} (log10 {est.log_value / math.log(10):.4f}), "
             f"nominal interval [{lo * value:.6g}, {hi * value:.6g}], wall {wall:.3f}s", record=False)
    return 0


def cmd_exact(args, out: _Out) -> int:
    from .exact import enumerate_cuts, exact_unreliability

    g = _graph_of(args)
    _header(out, args, g)
    lu = exact_unreliability(g, args.p, method=args.method)
    out.emit(_kv(u_ln=lu, u=math.exp(lu), method=args.method))
    if args.cuts:
        cs = enumerate_cuts(g, args.p)
        out.emit(_kv(z=cs.z, x=cs.x))
    return 0


def cmd_mc(args, out: _Out) -> int:
    from .recursion import monte_carlo

    g = _graph_of(args)
    _header(out, args, g)
    rng = np.random.default_rng(args.seed)
    est = monte_carlo(g, args.p, args.trials, rng, groups=args.groups)
    out.emit(_kv(est_ln=est.log_value, est=est.value, trials=est.samples, groups=args.groups))
    return 0


def cmd_packing(args, out: _Out) -> int:
    from .packing import approx_ideal_loads, default_delta

    g = _graph_of(args)
    _header(out, args, g)
    lam = edge_connectivity(g)
    delta = args.delta if args.delta is not None else default_delta(g.n)
    loads, packing = approx_ideal_loads(g, delta, seed=args.seed, lam=lam, rounds=args.rounds)
    out.emit(_kv(lam=lam, delta=delta, rounds=len(packing.run), kept=len(packing),
                 load_min=float(loads.min()), load_max=float(loads.max()),
                 pi_est=float(1.0 / loads.max())))
    if args.loads:
        for e, ell in zip(g.ids, loads):
            out.emit(_kv(edge=int(e), load=float(ell)))
    return 0


def cmd_ghtree(args, out: _Out) -> int:
    from .veryreliable import gomory_hu

    g = _graph_of(args)
    _header(out, args, g)
    t = gomory_hu(g)
    for v, parent, cap in t.edges():
        out.emit(_kv(v=v, parent=parent, capacity=cap))
    out.emit(_kv(min_value=int(t.sorted_values[0])))
    return 0


def cmd_diagnose(args, out: _Out) -> int:
    from .recursion import classify

    g = _graph_of(args)
    cfg = _config(args)
    _header(out, args, g, cfg)
    lam, _ = min_cut(g) if g.n > 1 else (0, None)
    out.emit(_kv(lam=lam, log_p_lambda=lam * math.log(args.p)))
    case, witness = classify(g, args.p, args.eps, cfg)
    out.emit(_kv(case=case))
    for k, v in sorted(witness.items()):
        out.emit(_kv(**{k: v}))
    return 0


def cmd_gen(args, out: _Out) -> int:
    name, params = parse_family(args.family)
    g = generate(name, params, seed=args.seed)
    text = format_graph(g)
    if args.out:
        Path(args.out).write_text(text)
        print(_kv(graph=g.fingerprint(), n=g.n, m=g.m, out=args.out))
    else:
        sys.stdout.write(text)
    out.path = None
    return 0


def cmd_accept(args, out: _Out) -> int:
    from .acceptance import run_acceptance

    crit = [int(c) for c in args.criteria.split(",")] if args.criteria else None
    rows = run_acceptance(args.suite, crit)
    for row in rows:
        out.emit(row.line())
    failed = sum(not r.ok for r in rows)
    out.emit(_kv(rows=len(rows), failed=failed))
    return 0 if failed == 0 else 1


def cmd_bench(args, out: _Out) -> int:
    from .generators import random_regular
    from .recursion import estimate

    cfg = _config(args)
    for n in [int(x) for x in args.sizes.split(",")]:
        g = random_regular(n, args.degree, seed=args.seed)
        t0 = time.perf_counter()
        est = estimate(g, args.p, args.eps, cfg, workers=args.workers)
        wall = time.perf_counter() - t0
        cases = Counter(est.info.get("cases", {}))
        out.emit(_kv(n=n, m=g.m, est_ln=est.log_value, case=est.case.value, wall=round(wall, 4),
                     cases=",".join(f"{k}:{v}" for k, v in sorted(cases.items())) or "-"), record=False)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unrel", description="Network unreliability estimation.")
    ap.add_argument("--version", action="version", version=f"unrel {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text, graph=True, p=True, eps=False):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        if graph:
            sp.add_argument("--graph", help="edge-list file ('-' for stdin)")
            sp.add_argument("--family", help="generator spec, e.g. dumbbell:k=8,b=4")
        if p:
            sp.add_argument("--p", type=float, required=True, help="edge failure probability")
        if eps:
            sp.add_argument("--eps", type=float, default=0.1, help="target relative error")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--out", help="write the reproducible record to this file")
        sp.set_defaults(func=func)
        return sp

    sp = add("estimate", cmd_estimate, "estimate u_G(p) by the recursive algorithm", eps=True)
    sp.add_argument("--workers", type=int, default=1, help="processes for independent repetitions")
    sp.add_argument("--config", help="key=value config file")

    sp = add("exact", cmd_exact, "exact u_G(p) for small graphs")
    sp.add_argument("--method", choices=("dp", "enum"), default="dp")
    sp.add_argument("--cuts", action="store_true", help="also print z and x")

    sp = add("mc", cmd_mc, "plain Monte Carlo estimate")
    sp.add_argument("--trials", type=int, default=100000)
    sp.add_argument("--groups", type=int, default=1, help="median of this many block means")

    sp = add("packing", cmd_packing, "greedy tree packing and approximate ideal loads", p=False)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--loads", action="store_true", help="print one line per bundle")

    add("ghtree", cmd_ghtree, "Gomory-Hu tree (Gusfield)", p=False)

    sp = add("diagnose", cmd_diagnose, "report which case the root lands in, with witnesses", eps=True)
    sp.add_argument("--config", help="key=value config file")

    sp = sub.add_parser("gen", help="write a generated graph in edge-list format",
                        description="write a generated graph in edge-list format")
    sp.add_argument("--family", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("accept", help="run acceptance criteria and print one row per check",
                        description="run acceptance criteria and print one row per check")
    sp.add_argument("--suite", default="all", help="all, oracle, packing or end2end")
    sp.add_argument("--criteria", help="comma-separated criterion numbers (overrides --suite)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_accept, seed=0)

    sp = sub.add_parser("bench", help="time estimate on random-regular graphs",
                        description="time estimate on random-regular graphs")
    sp.add_argument("--sizes", default="250,500,1000")
    sp.add_argument("--degree", type=int, default=4)
    sp.add_argument("--p", type=float, default=0.15)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_bench, out=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Out(args)
    try:
        code = args.func(args, out)
    except (GraphInputError, CapabilityError, OSError) as exc:
        print(f"error={exc}", file=sys.stderr)
        return 2
    except RecursionAbort as exc:
        print(f"error={exc}", file=sys.stderr)
        for k, v in sorted(exc.diagnostics.items()):
            print(f"diag_{k}={v}", file=sys.stderr)
        return 3
    out.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
