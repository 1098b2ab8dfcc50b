"""Terminating tasks, output/radius pairs and stabilization verdicts."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .engine import (
    BOT,
    Algorithm,
    Configuration,
    Corruption,
    DaemonPolicy,
    ExecutionTrace,
    StateGraph,
    corrupt_initial,
    explore,
    run,
    shortest_path,
    strongly_connected_components,
)
from .graph import (
    LabeledDigraph,
    PointedFamily,
    Verdict,
    check_quasi_fibration,
    loop,
    ring,
    small_digraphs,
)

INF = math.inf


@dataclass(frozen=True)
class TaskSpec:
    """A family of inputs and a relation between an input digraph and the
    tuple of outputs (aligned with ``g.vertices``)."""

    name: str
    family: PointedFamily
    relation: Callable[[LabeledDigraph, tuple], bool]

    def holds(self, g: LabeledDigraph, outs) -> bool:
        return bool(self.relation(g, tuple(outs)))


class ConditionError(ValueError):
    """An output/radius pair gives a finite radius with no output, or an
    output with an infinite radius."""


@dataclass(frozen=True)
class OutputRadiusPair:
    """``f(g, v)`` is the final output (None for no output) and ``r(g, v)``
    the radius at which it may be committed (INF exactly when f is None).
    ``radius_bound`` caps the finite radii; the universal algorithm stops
    its counters there."""

    name: str
    f: Callable
    r: Callable
    radius_bound: int | None = None

    def output(self, g, v):
        value, _ = self.evaluate(g, v)
        return value

    def radius(self, g, v):
        _, rad = self.evaluate(g, v)
        return rad

    def evaluate(self, g, v) -> tuple:
        value = self.f(g, v)
        rad = self.r(g, v)
        if (rad == INF) != (value is BOT):
            raise ConditionError(f"pair {self.name!r} at {v!r}: f={value!r} but r={rad!r}")
        return value, rad


def constant_pair(value, radius, name=None) -> OutputRadiusPair:
    return OutputRadiusPair(name or f"const({value!r},{radius!r})", lambda g, v: value, lambda g, v: radius,
                            None if radius == INF else radius)


def silent_pair() -> OutputRadiusPair:
    """No output anywhere: the universal algorithm reduces to enumeration
    plus counters."""
    return OutputRadiusPair("silent", lambda g, v: BOT, lambda g, v: INF)


@dataclass
class CheckResult:
    """Outcome of a brute-force checker. ``witness`` holds the first
    violation in canonical order; ``unknown`` counts skipped searches."""

    ok: bool
    checked: int = 0
    unknown: int = 0
    witness: object = None

    def __bool__(self):
        return self.ok


def check_output_function(pair: OutputRadiusPair, task: TaskSpec, bound: int) -> CheckResult:
    """Does ``v -> f(G, v)`` satisfy the relation on every member with at most
    ``bound`` vertices?"""
    checked = 0
    for g in task.family.graphs():
        if len(g.vertices) > bound:
            continue
        outs = tuple(pair.output(g, v) for v in g.vertices)
        checked += 1
        if not task.holds(g, outs):
            return CheckResult(False, checked, 0, (g, outs))
    return CheckResult(True, checked)


@dataclass(frozen=True)
class LiftingWitness:
    k: LabeledDigraph
    h: LabeledDigraph
    v: object
    image: object
    radius: int
    reason: str


def default_universe(bound: int, labels: Sequence = ("",)) -> list:
    """Directed rings up to ``bound`` vertices with every labelling over
    ``labels`` (up to rotation), plus the 1-vertex loop."""
    out = []
    for lab in labels:
        out.append(loop(lab))
    for n in range(2, bound + 1):
        seen = set()
        for labs in itertools.product(labels, repeat=n):
            key = min(labs[i:] + labs[:i] for i in range(n))
            if key in seen:
                continue
            seen.add(key)
            out.append(ring(n, list(labs)))
    return out


def check_r_lifting_closed(
    pair: OutputRadiusPair,
    bound: int,
    radius_cap: int,
    universe: Iterable[LabeledDigraph] | None = None,
    search_bound: int | None = 100_000,
) -> CheckResult:
    """Brute force over pairs (K, H) of the universe, centres v of K and
    radii k <= radius_cap: whenever K is a quasi-fibration of H of centre v
    and radius k with k >= min(r(K, v), r(H, image)), the outputs and radii
    must agree. The universe defaults to small labelled rings."""
    graphs = [g for g in (universe if universe is not None else default_universe(bound)) if len(g.vertices) <= bound]
    checked = 0
    unknown = 0
    for kg in graphs:
        for hg in graphs:
            for v in kg.vertices:
                fk, rk = pair.evaluate(kg, v)
                for w in hg.vertices:
                    fh, rh = pair.evaluate(hg, w)
                    lo = min(rk, rh)
                    if lo > radius_cap:
                        continue
                    for k in range(int(lo), radius_cap + 1):
                        q = check_quasi_fibration(kg, hg, v, k, search_bound, target=w)
                        if q.verdict is Verdict.UNKNOWN:
                            unknown += 1
                            continue
                        checked += 1
                        if q.verdict is Verdict.NO:
                            # no quasi-fibration at k means none at any larger radius
                            break
                        if fk != fh:
                            return CheckResult(False, checked, unknown, LiftingWitness(kg, hg, v, w, k, f"f differs: {fk!r} vs {fh!r}"))
                        if rk != rh:
                            return CheckResult(False, checked, unknown, LiftingWitness(kg, hg, v, w, k, f"r differs: {rk!r} vs {rh!r}"))
    return CheckResult(True, checked, unknown)


# -- stabilization verdicts ----------------------------------------------------------


@dataclass
class StabilizationReport:
    """``violations`` holds (kind, detail, trace) triples, the first one
    minimized to its shortest violating prefix where that applies.
    ``exhaustive`` tells whether every schedule was explored."""

    mode: str
    runs: int = 0
    budget_limited: int = 0
    violations: list = field(default_factory=list)
    exhaustive: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    @property
    def witness(self):
        return self.violations[0] if self.violations else None


def _decision_problem(trace: ExecutionTrace):
    writes = trace.writes()
    for i, c in enumerate(writes):
        if c != 1:
            return i, c
    return None


def _minimize_decision(trace: ExecutionTrace, vertex: int) -> ExecutionTrace:
    """Shortest prefix in which ``vertex`` already wrote twice after
    influence (for over-writing); the whole trace otherwise."""
    for t in range(1, trace.steps + 1):
        if trace.writes(t)[vertex] >= 2:
            return trace.truncated(t)
    return trace


def judge_trace(trace: ExecutionTrace, task: TaskSpec, decision: bool) -> tuple | None:
    """First violated clause of a finished run, or None."""
    g = trace.graph
    if not trace.stabilized():
        return ("stabilization", f"verdict {trace.verdict} after {trace.steps} steps", trace)
    if decision:
        bad = _decision_problem(trace)
        if bad is not None:
            i, c = bad
            return ("decision", f"vertex {g.vertices[i]!r} wrote out {c} times after influence", _minimize_decision(trace, i))
    outs = trace.final.outs()
    if not task.holds(g, outs):
        return ("correction", f"terminal outputs {outs!r}", trace)
    return None


def _sampled(algorithm, task, g, daemon, corruption, budget, requests, window, decision, mode, seeds):
    report = StabilizationReport(mode)
    request_sets = requests if requests is not None else [tuple(g.vertices)]
    daemons = [daemon] if seeds is None else [DaemonPolicy(daemon.kind, s, daemon.schedule) for s in seeds]
    for cfg in corrupt_initial(g, algorithm, corruption):
        for req in request_sets:
            for d in daemons:
                trace = run(g, algorithm, d, requests=req, budget=budget, initial=cfg, window=window)
                report.runs += 1
                if trace.verdict not in ("quiescent", "out-silent"):
                    report.budget_limited += 1
                bad = judge_trace(trace, task, decision)
                if bad is not None:
                    report.violations.append(bad)
                    return report
    return report


def _exhaustive(algorithm, task, g, kind, corruption, requests, decision, mode, max_states):
    report = StabilizationReport(mode, exhaustive=True)
    request_sets = requests if requests is not None else [tuple(g.vertices)]
    for cfg in corrupt_initial(g, algorithm, corruption):
        for req in request_sets:
            sg = explore(g, algorithm, cfg, req, kind, max_states)
            report.runs += 1
            if not sg.complete:
                report.budget_limited += 1
                continue
            bad = judge_state_graph(sg, task, decision)
            if bad is not None:
                kind_, detail, goal = bad
                report.violations.append((kind_, detail, (cfg, req, shortest_path(sg, goal))))
                return report
    return report


def judge_state_graph(sg: StateGraph, task: TaskSpec, decision: bool):
    """Check every reachable state: no over-writing, and every infinite or
    terminal behaviour is out-silent with correct outputs and (in decision
    mode) exactly one write per vertex. Returns (clause, detail, state)."""
    comp = strongly_connected_components(sg.edges)
    g = sg.graph
    # components containing a cycle
    cyclic = set()
    for s, succ in enumerate(sg.edges):
        for _, j in succ:
            if comp[j] == comp[s]:
                cyclic.add(comp[s])
    for s, (cfg, _inf, wr) in enumerate(sg.states):
        if decision and max(wr) >= 2:
            return ("decision", "a vertex wrote out twice after influence", s)
        terminal = not sg.edges[s]
        if terminal or comp[s] in cyclic:
            if not terminal:
                # every transition inside the component must leave out alone
                for _, j in sg.edges[s]:
                    if comp[j] == comp[s] and sg.states[j][0].outs() != cfg.outs():
                        return ("stabilization", "a reachable cycle keeps rewriting out", s)
            if decision and min(wr) < 1:
                where = "terminal state" if terminal else "schedule that cycles forever"
                return ("decision", f"a vertex never writes out after influence in a {where}", s)
            if not task.holds(g, cfg.outs()):
                return ("correction", f"outputs {cfg.outs()!r} can persist forever", s)
    return None


def verify_snap_stabilizing(
    algorithm: Algorithm,
    task: TaskSpec,
    g: LabeledDigraph,
    daemon: DaemonPolicy | str,
    corruption: Corruption,
    budget: int = 1000,
    requests: Sequence | None = None,
    window: int | None = None,
    seeds: Sequence[int] | None = None,
    max_states: int = 200_000,
) -> StabilizationReport:
    """Causal decision, stabilization and correction over the configured
    corruptions, request sets and schedules. ``daemon`` given as a kind name
    with exhaustive corruption explores every schedule of that kind.
    ``requests`` is a list of request sets, by default all vertices."""
    if isinstance(daemon, str):
        return _exhaustive(algorithm, task, g, daemon, corruption, requests, True, "snap", max_states)
    return _sampled(algorithm, task, g, daemon, corruption, budget, requests, window, True, "snap", seeds)


def verify_self_stabilizing(
    algorithm: Algorithm,
    task: TaskSpec,
    g: LabeledDigraph,
    daemon: DaemonPolicy | str,
    corruption: Corruption,
    budget: int = 1000,
    requests: Sequence | None = None,
    window: int | None = None,
    seeds: Sequence[int] | None = None,
    max_states: int = 200_000,
) -> StabilizationReport:
    """Stabilization and correction only. ``requests`` is a list of request
    sets, by default the single empty one."""
    reqs = requests if requests is not None else [()]
    if isinstance(daemon, str):
        return _exhaustive(algorithm, task, g, daemon, corruption, reqs, False, "self", max_states)
    return _sampled(algorithm, task, g, daemon, corruption, budget, reqs, window, False, "self", seeds)


# -- ready-made families and pairs ---------------------------------------------------


def single_b_family(sizes=(3, 4, 5)) -> PointedFamily:
    """Rings labelled a, ..., a, b of the given sizes."""
    from .graph import ring_family

    return ring_family(sizes, lambda n: ["a"] * (n - 1) + ["b"], name=f"single-b{list(sizes)}")


def separation_radius(members: Sequence[LabeledDigraph], h: LabeledDigraph, cap: int = 32, search_bound=None) -> int:
    """Smallest k such that, at radius k, no other member is a
    quasi-fibration of ``h`` and ``h`` is a quasi-fibration of no other
    member, whatever the centre (NO verdicts persist upwards)."""

    def related(a, b, k):
        return any(check_quasi_fibration(a, b, v, k, search_bound) for v in a.vertices)

    others = [m for m in members if m is not h]
    for k in range(cap + 1):
        if not any(related(m, h, k) or related(h, m, k) for m in others):
            return k
    raise RuntimeError(f"members still indistinguishable at radius {cap}")


def size_pair_for(fam: PointedFamily) -> OutputRadiusPair:
    """f = number of vertices; r = the separation radius of the member
    with that many vertices (one member per size)."""
    members = fam.graphs()
    table = {len(h.vertices): separation_radius(members, h) for h in members}

    def f(g, v):
        return len(g.vertices) if len(g.vertices) in table else BOT

    def r(g, v):
        return table.get(len(g.vertices), INF)

    return OutputRadiusPair(f"size{sorted(table)}", f, r, max(table.values()))


def broken_size_pair() -> OutputRadiusPair:
    """f = number of vertices committed at radius 1: not lifting closed."""
    return OutputRadiusPair("size-at-radius-1", lambda g, v: len(g.vertices), lambda g, v: 1, 1)


def in_degree_pair() -> OutputRadiusPair:
    return OutputRadiusPair("in-degree", lambda g, v: len(g.in_arcs[v]), lambda g, v: 1, 1)


def unlabelled_rings(bound: int) -> list:
    return [loop()] + [ring(n) for n in range(2, bound + 1)]


def small_universe(bound: int) -> list:
    """Strongly connected unlabelled digraphs with up to 3 vertices plus
    unlabelled rings up to ``bound``."""
    out = [g for n in range(1, 4) for g in small_digraphs(n, ("",), loops=True)]
    out.extend(ring(n) for n in range(4, bound + 1))
    return out
