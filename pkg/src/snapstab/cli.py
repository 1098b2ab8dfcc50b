"""Command line: ``snapstab simulate`` and ``snapstab verify``.

Exit status: 0 pass, 1 violation found, 2 budget-limited or unknown,
3 usage error, 4 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import kernels
from .engine import (
    Corruption,
    DaemonPolicy,
    corrupt_initial,
    dumps_trace,
    run,
    schedule_of,
    trace_from_dict,
)
from .graph import (
    GraphError,
    check_fibration,
    check_quasi_fibration,
    dumps_graph,
    is_strongly_connected,
    loads_graph,
    minimal_base,
    read_graph,
    ring,
    single_b_ring,
)
from .lcr import election_task, lcr_algorithm, lcr_without_cleaning, size_task, snap_lcr_algorithm
from .mazurkiewicz import EnumDomains, build_enumeration_algorithm, build_universal_algorithm
from .tasks import (
    broken_size_pair,
    check_r_lifting_closed,
    in_degree_pair,
    silent_pair,
    single_b_family,
    size_pair_for,
    small_universe,
    unlabelled_rings,
    verify_self_stabilizing,
    verify_snap_stabilizing,
)

EXIT_PASS, EXIT_VIOLATION, EXIT_LIMITED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3, 4

MANIFEST_SCHEMA = "snapstab-manifest"
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# -- registries ----------------------------------------------------------------------


def parse_graph(spec: str):
    """A graph file path, or ``ring:N``, ``ring:N:LABELS`` (one character
    per vertex), ``idring:3,1,2`` (ring labelled by integer ids) or
    ``bring:N`` (ring labelled a..ab)."""
    if os.path.exists(spec):
        return read_graph(spec)
    kind, _, rest = spec.partition(":")
    try:
        if kind == "ring":
            size, _, labels = rest.partition(":")
            return ring(int(size), list(labels) if labels else None)
        if kind == "idring":
            ids = [int(x) for x in rest.split(",")]
            return ring(len(ids), ids)
        if kind == "bring":
            return single_b_ring(int(rest))
    except ValueError as exc:
        raise UsageError(f"bad graph spec {spec!r}: {exc}") from exc
    raise UsageError(f"no graph file or builtin graph {spec!r}")


def make_algorithm(name: str, g):
    n = len(g.vertices)
    labels = tuple(sorted(set(g.labels), key=repr))
    if name == "lcr":
        return lcr_algorithm(n)
    if name == "snap-lcr":
        return snap_lcr_algorithm(n)
    if name == "lcr-no-cleaning":
        return lcr_without_cleaning(n)
    if name == "enumeration":
        return build_enumeration_algorithm(EnumDomains(labels=labels))
    if name == "universal-silent":
        return build_universal_algorithm(silent_pair(), None, counter_limit=2 * n, domains=EnumDomains(labels=labels))
    if name == "universal-size":
        fam = single_b_family()
        return build_universal_algorithm(size_pair_for(fam), fam, domains=EnumDomains(labels=("a", "b")))
    raise UsageError(f"unknown algorithm {name!r}")


ALGORITHMS = ("lcr", "snap-lcr", "lcr-no-cleaning", "enumeration", "universal-silent", "universal-size")


def make_task(name: str, g):
    from .graph import finite_family

    fam = finite_family(f"{{{name}}}", [g])
    if name == "election":
        return election_task(fam)
    if name == "size":
        return size_task(fam)
    raise UsageError(f"unknown task {name!r}")


PAIRS = {
    "size-rings": lambda: (size_pair_for(single_b_family()), single_b_family().graphs()),
    "broken-size": lambda: (broken_size_pair(), unlabelled_rings(5)),
    "in-degree": lambda: (in_degree_pair(), small_universe(5)),
}


def parse_corruption(spec: str | None, seed: int, corrupt_out: bool) -> Corruption | None:
    """``none``, ``random`` (one sample), ``random:COUNT`` or ``exhaustive``."""
    if spec in (None, "none"):
        return None
    kind, _, count = spec.partition(":")
    if kind == "random":
        return Corruption("random", seed=seed, count=int(count or 1), corrupt_out=corrupt_out)
    if kind == "exhaustive":
        return Corruption("exhaustive", corrupt_out=corrupt_out)
    raise UsageError(f"bad corruption spec {spec!r}")


def parse_requests(spec: str | None, g) -> tuple:
    if not spec:
        return ()
    if spec == "all":
        return tuple(g.vertices)
    out = []
    for tok in spec.split(","):
        v = int(tok) if tok.lstrip("-").isdigit() else tok
        if v not in g.index:
            raise UsageError(f"request at unknown vertex {tok!r}")
        out.append(v)
    return tuple(out)


# -- manifest ------------------------------------------------------------------------

FIELDS = ("graph", "algorithm", "task", "daemon", "seed", "schedule", "requests", "corrupt", "corrupt_out",
          "budget", "window", "bound", "out", "mode", "pair", "base", "count")


def load_manifest(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    if data.get("schema") != MANIFEST_SCHEMA or data.get("version") != MANIFEST_VERSION:
        raise UsageError("manifest must carry schema 'snapstab-manifest' version 1")
    unknown = set(data) - set(FIELDS) - {"schema", "version"}
    if unknown:
        raise UsageError(f"unknown manifest fields {sorted(unknown)}")
    return data


def _settings(args) -> dict:
    merged = load_manifest(args.manifest) if args.manifest else {}
    for k in FIELDS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    merged.setdefault("seed", 0)
    merged.setdefault("daemon", "asynchronous")
    merged.setdefault("budget", 1000)
    if merged["budget"] < 1:
        raise UsageError("budget must be positive")
    return merged


# -- commands -----------------------------------------------------------------------


def _write(path, text):
    if path is None:
        return
    Path(path).write_text(text)


def _verdict_line(trace) -> str:
    if trace.stabilized():
        return f"stabilized at step {trace.stabilized_at} ({trace.verdict}, {trace.steps} steps run)"
    return f"{trace.verdict} after {trace.steps} steps"


def _default_window(alg, g):
    # LCR never goes quiet (the token keeps circulating) so its runs end on
    # out-silence; the universal algorithm is judged on quiescence only
    return 4 * len(g.vertices) if "lcr" in alg.name else None


def cmd_simulate(s: dict) -> int:
    if s.get("schedule"):
        data = json.loads(Path(s["schedule"]).read_text())
        g = loads_graph(data["graph"])
        alg = make_algorithm(s.get("algorithm") or data["algorithm"]["name"], g)
        base = trace_from_dict(data, alg)
        sched = schedule_of(base)
        s["daemon"] = "schedule"
        trace = run(g, alg, DaemonPolicy("schedule", schedule=sched), requests=base.requests,
                    budget=base.budget, initial=base.configurations[0], window=base.window or None)
    else:
        g = parse_graph(s["graph"])
        if not is_strongly_connected(g):
            raise UsageError("input graph must be strongly connected")
        alg = make_algorithm(s["algorithm"], g)
        corruption = parse_corruption(s.get("corrupt"), s["seed"], bool(s.get("corrupt_out")))
        initial = next(corrupt_initial(g, alg, corruption)) if corruption else None
        trace = run(g, alg, DaemonPolicy(s["daemon"], s["seed"]), requests=parse_requests(s.get("requests"), g),
                    budget=s["budget"], initial=initial, window=s.get("window") or _default_window(alg, g))
    _write(s.get("out"), dumps_trace(trace))
    print(f"seed {s['seed']}  algorithm {alg.name}  daemon {s['daemon']}  kernels {kernels.BACKEND}")
    print(_verdict_line(trace))
    outs = trace.final.outs()
    print("outputs " + " ".join(f"{v}={o}" for v, o in zip(g.vertices, outs)))
    if alg.name.endswith("lcr") and trace.stabilized():
        elected = [v for v, o in zip(g.vertices, outs) if o == "ELECTED"]
        winner = g.vertices[g.labels.index(min(g.labels))]
        verdict = "ELECTED = min id" if elected == [winner] else f"ELECTED at {elected}, min id at {winner}"
        print(verdict)
    return EXIT_PASS if trace.stabilized() else EXIT_LIMITED


def _report(rep, out) -> int:
    print(f"{rep.mode}: {rep.runs} runs/explorations, {rep.budget_limited} budget-limited")
    if rep.witness is not None:
        kind, detail, evidence = rep.witness
        print(f"FAIL ({kind}): {detail}")
        if hasattr(evidence, "configurations"):
            _write(out, dumps_trace(evidence))
        else:
            cfg, req, path = evidence
            _write(out, json.dumps({"requests": list(req), "schedule": [list(p) for p in path]}) + "\n")
        return EXIT_VIOLATION
    if rep.budget_limited:
        print("UNKNOWN: some runs hit the budget")
        return EXIT_LIMITED
    print("PASS: no violation within budget")
    return EXIT_PASS


def cmd_verify(s: dict) -> int:
    mode = s.get("mode")
    print(f"seed {s['seed']}  mode {mode}  kernels {kernels.BACKEND}")
    if mode == "base":
        g = parse_graph(s["graph"])
        base, phi = minimal_base(g)
        print(f"base: {len(base.vertices)} vertices, {len(base.arcs)} arcs")
        print(dumps_graph(base), end="")
        _write(s.get("out"), dumps_graph(base))
        return EXIT_PASS
    if mode == "fibration":
        g = parse_graph(s["graph"])
        if not s.get("base"):
            raise UsageError("mode fibration needs --base")
        h = parse_graph(s["base"])
        v = g.vertices[0]
        q = check_quasi_fibration(g, h, v, len(g.vertices) + 1, s.get("bound"))
        if q.verdict.value == "unknown":
            print("UNKNOWN: search bound reached")
            return EXIT_LIMITED
        if not q:
            print("FAIL: no fibration onto the base")
            return EXIT_VIOLATION
        assert check_fibration(g, h, q.gamma)
        print("PASS: fibration " + " ".join(f"{x}->{q.gamma.vertex_map[x]}" for x in g.vertices))
        return EXIT_PASS
    if mode == "rlift":
        name = s.get("pair") or "size-rings"
        if name not in PAIRS:
            raise UsageError(f"unknown pair {name!r}")
        pair, universe = PAIRS[name]()
        bound = s.get("bound") or 5
        res = check_r_lifting_closed(pair, bound, radius_cap=bound, universe=universe)
        print(f"checked {res.checked} quasi-fibration instances, {res.unknown} unknown")
        if not res:
            w = res.witness
            print(f"FAIL: K={len(w.k.vertices)}-vertex {w.k.labels}, H={len(w.h.vertices)}-vertex {w.h.labels}, "
                  f"v={w.v!r} -> {w.image!r}, k={w.radius}: {w.reason}")
            _write(s.get("out"), json.dumps({"K": dumps_graph(w.k), "H": dumps_graph(w.h), "v": w.v,
                                             "image": w.image, "k": w.radius, "reason": w.reason}) + "\n")
            return EXIT_VIOLATION
        if res.unknown:
            print("UNKNOWN: some searches hit their bound")
            return EXIT_LIMITED
        print("PASS")
        return EXIT_PASS
    if mode in ("snap", "self"):
        g = parse_graph(s["graph"])
        alg = make_algorithm(s["algorithm"], g)
        task = make_task(s.get("task") or ("election" if "lcr" in alg.name else "size"), g)
        corruption = parse_corruption(s.get("corrupt") or f"random:{s.get('count') or 20}", s["seed"], bool(s.get("corrupt_out")))
        reqs = parse_requests(s.get("requests"), g)
        requests = [reqs] if reqs or mode == "self" else [tuple(g.vertices)]
        if mode == "snap" and alg.name == "snap-lcr" and s.get("corrupt") is None:
            # random corruption rarely hits it; try the targeted construction
            from .lcr import RingInstance, find_snap_violation

            inst = RingInstance.from_graph(g)
            w = find_snap_violation(inst.size, s["budget"], ids=inst.ids)
            print(f"FAIL (correction): vertex {w.offender} elected itself after the request at {w.requests}")
            _write(s.get("out"), dumps_trace(w.trace))
            return EXIT_VIOLATION
        verify = verify_snap_stabilizing if mode == "snap" else verify_self_stabilizing
        rep = verify(alg, task, g, DaemonPolicy(s["daemon"], s["seed"]), corruption, budget=s["budget"],
                     requests=requests, window=s.get("window") or 8 * len(g.vertices))
        return _report(rep, s.get("out"))
    raise UsageError(f"unknown mode {mode!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="snapstab", description="Simulate and verify stabilizing algorithms on anonymous networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", "verify"):
        q = sub.add_parser(name)
        q.add_argument("--manifest", help="JSON manifest; flags override its fields")
        q.add_argument("--graph", help="graph file or builtin (ring:N[:LABELS], idring:IDS, bring:N)")
        q.add_argument("--algorithm", choices=ALGORITHMS)
        q.add_argument("--task", choices=("election", "size"))
        q.add_argument("--daemon", choices=DaemonPolicy.KINDS[:3])
        q.add_argument("--seed", type=int)
        q.add_argument("--schedule", help="trace file whose initial state and schedule are replayed")
        q.add_argument("--requests", help="comma-separated vertices, or 'all'")
        q.add_argument("--corrupt", help="none | random[:COUNT] | exhaustive")
        q.add_argument("--corrupt-out", dest="corrupt_out", action="store_true", default=None)
        q.add_argument("--count", type=int, help="number of random corruptions for verify")
        q.add_argument("--budget", type=int)
        q.add_argument("--window", type=int, help="out-silence window in steps")
        q.add_argument("--bound", type=int)
        q.add_argument("--out", help="trace or witness output path")
        if name == "verify":
            q.add_argument("--mode", choices=("snap", "self", "rlift", "fibration", "base"), required=False)
            q.add_argument("--pair", choices=tuple(PAIRS))
            q.add_argument("--base", help="base graph for mode fibration")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = _settings(args)
        if args.command == "simulate":
            if not s.get("schedule") and (not s.get("graph") or not s.get("algorithm")):
                raise UsageError("simulate needs --graph and --algorithm (or --schedule)")
            return cmd_simulate(s)
        if not s.get("mode"):
            raise UsageError("verify needs --mode")
        return cmd_verify(s)
    except UsageError as exc:
        print(f"snapstab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, GraphError) as exc:
        print(f"snapstab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
