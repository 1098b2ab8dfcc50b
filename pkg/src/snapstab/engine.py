"""Rule-based execution in the locally-shared-variables model.

A node state is ``(lam, mem, out)``. An algorithm is an ordered tuple of
rules; a node applies its highest-priority activable rule. A step applies a
set of activated nodes simultaneously: every node reads the pre-step
configuration and all writes land together.

Requests are a per-node flag raised at step 0 on the request set and lowered
when the node applies a rule marked ``consumes_request``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, NamedTuple, Sequence

from . import kernels
from .graph import DigraphMorphism, LabeledDigraph, QuasiFibration, Verdict, dumps_graph, loads_graph

BOT = None

TRACE_SCHEMA = "snapstab-trace"
TRACE_VERSION = 1


class HarnessError(RuntimeError):
    """Misuse of the engine, e.g. activating a non-activable node."""


class LiftDivergence(RuntimeError):
    """A lifted execution disagreed with its base execution."""


class NodeState(NamedTuple):
    lam: Any
    mem: Any
    out: Any = BOT


@dataclass(frozen=True)
class Rule:
    """``guard(center, nbrs, requested) -> bool`` and
    ``command(center, nbrs, requested) -> (mem, out)``; ``nbrs`` holds one
    state per in-arc of the centre, in arc order."""

    name: str
    guard: Callable
    command: Callable
    consumes_request: bool = False
    writes_out: bool = False


@dataclass(frozen=True, eq=False)
class Algorithm:
    """A distributed algorithm: prioritised rules plus the metadata the
    harness needs (clean start, corruption domains, JSON codec).

    ``registers(g, v)`` maps each mem register to a finite sequence of values
    or to a sampler ``rng -> value`` for unbounded domains; ``assemble``
    builds a mem value from a register dict. ``select`` is an optional fused
    guard evaluation returning the index of the first activable rule or -1.
    """

    name: str
    rules: tuple
    initial_mem: Callable
    registers: Callable | None = None
    assemble: Callable | None = None
    out_domain: Callable | None = None
    encode_mem: Callable = lambda m: m
    decode_mem: Callable = lambda x: x
    select: Callable | None = None
    params: dict = field(default_factory=dict)

    def first(self, center, nbrs, requested) -> int:
        if self.select is not None:
            return self.select(center, nbrs, requested)
        for i, rule in enumerate(self.rules):
            if rule.guard(center, nbrs, requested):
                return i
        return -1

    def activable(self, center, nbrs, requested) -> list:
        return [r for r in self.rules if r.guard(center, nbrs, requested)]

    def clean(self, g: LabeledDigraph) -> "Configuration":
        return Configuration(tuple(NodeState(g.label_of[v], self.initial_mem(g, v), BOT) for v in g.vertices))


@dataclass(frozen=True)
class Configuration:
    """States aligned with ``g.vertices``; ``pending`` holds the positions
    whose request flag is still raised."""

    states: tuple
    pending: frozenset = frozenset()

    def outs(self) -> tuple:
        return tuple(s.out for s in self.states)

    def with_requests(self, positions) -> "Configuration":
        return Configuration(self.states, frozenset(positions))


def _nbrs(g, states, i):
    return tuple(states[j] for j in g.in_positions[i])


def activable_rules(g: LabeledDigraph, config: Configuration, v, algorithm: Algorithm) -> list:
    i = g.index[v]
    return algorithm.activable(config.states[i], _nbrs(g, config.states, i), i in config.pending)


def _choices(g, config, algorithm) -> dict:
    states = config.states
    pending = config.pending
    inpos = g.in_positions
    first = algorithm.first
    found = {}
    for i in range(len(states)):
        k = first(states[i], tuple([states[j] for j in inpos[i]]), i in pending)
        if k >= 0:
            found[i] = k
    return found


def _apply(g, config, chosen: dict, positions, algorithm):
    states = config.states
    new = list(states)
    pending = config.pending
    inpos = g.in_positions
    rules = algorithm.rules
    consumed = []
    for i in positions:
        rule = rules[chosen[i]]
        s = states[i]
        req = i in pending
        mem, out = rule.command(s, tuple([states[j] for j in inpos[i]]), req)
        new[i] = NodeState(s.lam, mem, out)
        if req and rule.consumes_request:
            consumed.append(i)
    if consumed:
        pending = pending.difference(consumed)
    return Configuration(tuple(new), pending)


def apply_step(g: LabeledDigraph, config: Configuration, activated, algorithm: Algorithm) -> Configuration:
    """Apply one step for the activated vertex ids (read-before-write)."""
    positions = sorted(g.index[v] for v in activated)
    chosen = _choices(g, config, algorithm)
    bad = [g.vertices[i] for i in positions if i not in chosen]
    if bad:
        raise HarnessError(f"vertices {bad!r} are not activable")
    return _apply(g, config, chosen, positions, algorithm)


# -- daemons -----------------------------------------------------------------------


@dataclass(frozen=True)
class DaemonPolicy:
    kind: str = "asynchronous"
    seed: int = 0
    schedule: tuple | None = None  # tuple of tuples of vertex ids

    KINDS = ("central", "synchronous", "asynchronous", "schedule")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown daemon kind {self.kind!r}")
        if self.kind == "schedule" and self.schedule is None:
            raise ValueError("schedule daemon needs a schedule")

    def chooser(self, g: LabeledDigraph):
        """Callable ``(step, activable positions) -> positions`` or None when
        an explicit schedule is exhausted."""
        rng = random.Random(self.seed)
        if self.kind == "synchronous":
            return lambda t, act: act
        if self.kind == "central":
            return lambda t, act: [act[rng.randrange(len(act))]]
        if self.kind == "asynchronous":

            def pick(t, act):
                sub = [i for i in act if rng.random() < 0.5]
                return sub or [act[rng.randrange(len(act))]]

            return pick
        plan = [sorted(g.index[v] for v in step) for step in self.schedule]

        def replay(t, act):
            if t > len(plan):
                return None
            want = plan[t - 1]
            missing = set(want) - set(act)
            if missing:
                raise HarnessError(f"schedule step {t} activates non-activable {sorted(g.vertices[i] for i in missing)!r}")
            return want

        return replay


# -- traces ------------------------------------------------------------------------


QUIESCENT = "quiescent"
OUT_SILENT = "out-silent"
BUDGET = "budget-exhausted"
SCHEDULE_END = "schedule-exhausted"


@dataclass
class ExecutionTrace:
    """Configurations ``G_0..G_T``, activation sets ``A_1..A_T`` (positions),
    the rule fired by each activated node, and the influenced set after each
    step. ``writes[i]`` counts out-writes by vertex ``i`` made once it was
    influenced (writes before influence are blamed on the corruption)."""

    graph: LabeledDigraph
    algorithm: Algorithm
    requests: frozenset
    configurations: list
    activations: list = field(default_factory=list)
    fired: list = field(default_factory=list)
    influenced: list = field(default_factory=list)
    verdict: str = ""
    stabilized_at: int | None = None
    window: int = 0
    budget: int = 0
    enabled: list | None = None  # activable positions before each step, when recorded

    @property
    def steps(self) -> int:
        return len(self.activations)

    @property
    def final(self) -> Configuration:
        return self.configurations[-1]

    def stabilized(self) -> bool:
        return self.verdict in (QUIESCENT, OUT_SILENT)

    def writes(self, upto: int | None = None) -> list:
        n = len(self.graph.vertices)
        counts = [0] * n
        rules = self.algorithm.rules
        upto = self.steps if upto is None else upto
        for t in range(upto):
            inf = self.influenced[t + 1]
            for i, k in zip(self.activations[t], self.fired[t]):
                if rules[k].writes_out and inf[i]:
                    counts[i] += 1
        return counts

    def influenced_vertices(self, t: int) -> set:
        return {self.graph.vertices[i] for i, x in enumerate(self.influenced[t]) if x}

    def truncated(self, t: int) -> "ExecutionTrace":
        return ExecutionTrace(
            self.graph, self.algorithm, self.requests, self.configurations[: t + 1], self.activations[:t],
            self.fired[:t], self.influenced[: t + 1], BUDGET, None, self.window, t,
        )


def count_rounds(trace: ExecutionTrace) -> int:
    """Rounds of the run: a round ends once every vertex activable at its
    start has been activated or has stopped being activable."""
    enabled = trace.enabled
    if enabled is None or len(enabled) < trace.steps:
        enabled = [tuple(sorted(_choices(trace.graph, c, trace.algorithm))) for c in trace.configurations[:-1]]
    rounds = 0
    waiting: set = set()
    for t, act in enumerate(trace.activations):
        if not waiting:
            rounds += 1
            waiting = set(enabled[t])
        waiting.difference_update(act)
        nxt = set(enabled[t + 1]) if t + 1 < len(enabled) else set()
        waiting.intersection_update(nxt)
    return rounds


def influenced_set(trace: ExecutionTrace, t: int) -> set:
    if not 0 <= t <= trace.steps:
        raise IndexError(f"step {t} outside trace of {trace.steps} steps")
    return trace.influenced_vertices(t)


def run(
    g: LabeledDigraph,
    algorithm: Algorithm,
    daemon: DaemonPolicy,
    requests=(),
    budget: int = 1000,
    initial: Configuration | None = None,
    window: int | None = None,
) -> ExecutionTrace:
    """Run until quiescence, ``window`` consecutive steps without any change
    of an out register, or ``budget`` steps. ``window=None`` disables the
    out-silence criterion (only quiescence counts)."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    config = initial if initial is not None else algorithm.clean(g)
    req = frozenset(g.index[v] for v in requests)
    config = Configuration(config.states, req)
    ptr, src = g.csr
    mask = bytearray(len(g.vertices))
    for i in req:
        mask[i] = 1
    trace = ExecutionTrace(g, algorithm, frozenset(requests), [config], influenced=[bytes(mask)], window=window or 0,
                           budget=budget, enabled=[])
    choose = daemon.chooser(g)
    last_change = 0
    for t in range(1, budget + 1):
        chosen = _choices(g, config, algorithm)
        if not chosen:
            trace.verdict = QUIESCENT
            trace.stabilized_at = t - 1
            return trace
        act = sorted(chosen)
        trace.enabled.append(tuple(act))
        picked = choose(t, act)
        if picked is None:
            trace.verdict = SCHEDULE_END
            return trace
        new = _apply(g, config, chosen, picked, algorithm)
        if any(new.states[i].out != config.states[i].out for i in picked):
            last_change = t
        mask = kernels.influence_update(mask, picked, ptr, src)
        config = new
        trace.configurations.append(config)
        trace.activations.append(tuple(picked))
        trace.fired.append(tuple(chosen[i] for i in picked))
        trace.influenced.append(bytes(mask))
        if window and t - last_change >= window:
            trace.verdict = OUT_SILENT
            trace.stabilized_at = last_change
            return trace
    if not _choices(g, config, algorithm):
        trace.verdict = QUIESCENT
        trace.stabilized_at = budget
    else:
        trace.verdict = BUDGET
    return trace


# -- corruption --------------------------------------------------------------------


@dataclass(frozen=True)
class Corruption:
    """``kind`` is ``random`` (``count`` samples from ``seed``) or
    ``exhaustive`` (every combination of the finite register domains).
    Out registers are corrupted only with ``corrupt_out``; the default
    corrupts mem alone."""

    kind: str = "random"
    seed: int = 0
    count: int = 1
    corrupt_out: bool = False


def _out_values(g, v, algorithm, strategy):
    if not strategy.corrupt_out or algorithm.out_domain is None:
        return (BOT,)
    return tuple(algorithm.out_domain(g, v))


def corrupt_initial(g: LabeledDigraph, algorithm: Algorithm, strategy: Corruption) -> Iterator[Configuration]:
    if algorithm.registers is None:
        raise HarnessError(f"algorithm {algorithm.name!r} declares no register domains")
    regs = {v: algorithm.registers(g, v) for v in g.vertices}
    if strategy.kind == "exhaustive":
        per_vertex = []
        for v in g.vertices:
            doms = regs[v]
            for name, dom in doms.items():
                if callable(dom):
                    raise HarnessError(f"register {name!r} has an unbounded domain")
            names = list(doms)
            mems = [algorithm.assemble(dict(zip(names, combo))) for combo in itertools.product(*(doms[k] for k in names))]
            outs = _out_values(g, v, algorithm, strategy)
            per_vertex.append([NodeState(g.label_of[v], m, o) for m in mems for o in outs])
        for states in itertools.product(*per_vertex):
            yield Configuration(tuple(states))
        return
    if strategy.kind != "random":
        raise ValueError(f"unknown corruption kind {strategy.kind!r}")
    rng = random.Random(strategy.seed)
    for _ in range(strategy.count):
        states = []
        for v in g.vertices:
            fields = {k: (dom(rng) if callable(dom) else rng.choice(dom)) for k, dom in regs[v].items()}
            outs = _out_values(g, v, algorithm, strategy)
            states.append(NodeState(g.label_of[v], algorithm.assemble(fields), rng.choice(outs)))
        yield Configuration(tuple(states))


# -- lifting -----------------------------------------------------------------------


@dataclass
class QuasiLift:
    """Lifted trace plus the agreement report: ``cone_ok`` says every ball
    vertex at distance d agreed with its image through step r - d;
    ``divergence`` is the first step at which the centre disagreed (or None)."""

    trace: ExecutionTrace
    radius: int
    cone_ok: bool
    divergence: int | None


def _pullback(g, base_cfg, vmap, h, fill=None):
    states = []
    for i, v in enumerate(g.vertices):
        if v in vmap:
            s = base_cfg.states[h.index[vmap[v]]]
            states.append(NodeState(g.label_of[v], s.mem, s.out))
        else:
            states.append(fill.states[i])
    pending = frozenset(i for i, v in enumerate(g.vertices) if v in vmap and h.index[vmap[v]] in base_cfg.pending)
    return Configuration(tuple(states), pending)


def _agree(g, cfg, h, base_cfg, v, image):
    a = cfg.states[g.index[v]]
    b = base_cfg.states[h.index[image]]
    return a.mem == b.mem and a.out == b.out


def lift_execution(base_trace: ExecutionTrace, g: LabeledDigraph, phi: DigraphMorphism) -> ExecutionTrace:
    """Replay ``base_trace`` on a fibration ``g`` of its graph via ``phi``,
    activating preimages, and check the per-step state equality."""
    from .graph import check_fibration

    h = base_trace.graph
    if not check_fibration(g, h, phi):
        raise LiftDivergence("lifting witness is not a fibration")
    algorithm = base_trace.algorithm
    vmap = phi.vertex_map
    fibre = {}
    for v in g.vertices:
        fibre.setdefault(h.index[vmap[v]], []).append(g.index[v])
    config = _pullback(g, base_trace.configurations[0], vmap, h)
    requests = frozenset(v for v in g.vertices if vmap[v] in base_trace.requests)
    ptr, src = g.csr
    mask = bytearray(len(g.vertices))
    for i in config.pending:
        mask[i] = 1
    lifted = ExecutionTrace(g, algorithm, requests, [config], influenced=[bytes(mask)], window=base_trace.window, budget=base_trace.budget)
    for t, act in enumerate(base_trace.activations, start=1):
        positions = sorted(i for j in act for i in fibre[j])
        chosen = _choices(g, config, algorithm)
        if any(i not in chosen for i in positions):
            raise LiftDivergence(f"step {t}: a preimage of an activated vertex is not activable")
        config = _apply(g, config, chosen, positions, algorithm)
        base_cfg = base_trace.configurations[t]
        for v in g.vertices:
            if not _agree(g, config, h, base_cfg, v, vmap[v]):
                raise LiftDivergence(f"step {t}: vertex {v!r} differs from its image {vmap[v]!r}")
        mask = kernels.influence_update(mask, positions, ptr, src)
        lifted.configurations.append(config)
        lifted.activations.append(tuple(positions))
        lifted.fired.append(tuple(chosen[i] for i in positions))
        lifted.influenced.append(bytes(mask))
    lifted.verdict = base_trace.verdict
    lifted.stabilized_at = base_trace.stabilized_at
    return lifted


def lift_quasi(base_trace: ExecutionTrace, k: LabeledDigraph, witness: QuasiFibration, fill: Configuration | None = None) -> QuasiLift:
    """Replay ``base_trace`` on a quasi-fibration ``k`` of its graph.

    Ball vertices start from their image's state and are activated with
    their image (when activable); vertices outside the ball start from
    ``fill`` (default: the clean start) and move synchronously. A ball
    vertex at distance d must agree with its image through step r - d;
    LiftDivergence is raised otherwise."""
    if witness.verdict is not Verdict.YES:
        raise LiftDivergence("quasi-fibration witness is not a YES verdict")
    h = base_trace.graph
    algorithm = base_trace.algorithm
    ball = witness.ball
    r = ball.radius
    gmap = witness.gamma.vertex_map
    fill = fill if fill is not None else algorithm.clean(k)
    config = _pullback(k, base_trace.configurations[0], gmap, h, fill)
    requests = frozenset(v for v in ball.graph.vertices if gmap[v] in base_trace.requests)
    ptr, src = k.csr
    mask = bytearray(len(k.vertices))
    for i in config.pending:
        mask[i] = 1
    lifted = ExecutionTrace(k, algorithm, requests, [config], influenced=[bytes(mask)], window=base_trace.window, budget=base_trace.budget)
    preimage = {}
    for v in ball.graph.vertices:
        preimage.setdefault(h.index[gmap[v]], []).append(k.index[v])
    inside = {k.index[v] for v in ball.graph.vertices}
    divergence = None
    for t, act in enumerate(base_trace.activations, start=1):
        chosen = _choices(k, config, algorithm)
        wanted = {i for j in act for i in preimage.get(j, ())}
        positions = sorted(i for i in chosen if (i in wanted) or (i not in inside))
        for v in ball.graph.vertices:
            if ball.dist[v] <= r - t and k.index[v] in wanted and k.index[v] not in chosen:
                raise LiftDivergence(f"step {t}: {v!r} inside the agreement cone is not activable")
        config = _apply(k, config, chosen, positions, algorithm)
        base_cfg = base_trace.configurations[t]
        for v in ball.graph.vertices:
            if ball.dist[v] <= r - t and not _agree(k, config, h, base_cfg, v, gmap[v]):
                raise LiftDivergence(f"step {t}: {v!r} left the agreement cone early")
        if divergence is None and not _agree(k, config, h, base_cfg, ball.center, gmap[ball.center]):
            divergence = t
        mask = kernels.influence_update(mask, positions, ptr, src)
        lifted.configurations.append(config)
        lifted.activations.append(tuple(positions))
        lifted.fired.append(tuple(chosen[i] for i in positions))
        lifted.influenced.append(bytes(mask))
    lifted.verdict = BUDGET
    return QuasiLift(lifted, r, True, divergence)


# -- exhaustive exploration ----------------------------------------------------------


@dataclass
class StateGraph:
    """Reachable (configuration, influenced mask, capped write counts)
    states under every schedule of a daemon kind. ``edges[s]`` lists
    ``(activated positions, successor)``; state 0 is the start."""

    graph: LabeledDigraph
    states: list
    edges: list
    complete: bool

    def terminal(self) -> list:
        return [i for i, e in enumerate(self.edges) if not e]


def _subsets(act, kind):
    if kind == "synchronous":
        return [tuple(act)]
    if kind == "central":
        return [(i,) for i in act]
    out = []
    for r in range(1, len(act) + 1):
        out.extend(itertools.combinations(act, r))
    return out


def explore(
    g: LabeledDigraph,
    algorithm: Algorithm,
    initial: Configuration,
    requests=(),
    kind: str = "asynchronous",
    max_states: int = 200_000,
) -> StateGraph:
    """Breadth-first construction of the reachable state graph."""
    ptr, src = g.csr
    req = frozenset(g.index[v] for v in requests)
    mask = bytearray(len(g.vertices))
    for i in req:
        mask[i] = 1
    start = (Configuration(initial.states, req), bytes(mask), (0,) * len(g.vertices))
    index = {start: 0}
    states = [start]
    edges = []
    rules = algorithm.rules
    head = 0
    complete = True
    while head < len(states):
        cfg, inf, wr = states[head]
        head += 1
        chosen = _choices(g, cfg, algorithm)
        succ = []
        if chosen:
            for sub in _subsets(sorted(chosen), kind):
                new = _apply(g, cfg, chosen, sub, algorithm)
                m = kernels.influence_update(inf, sub, ptr, src)
                w = list(wr)
                for i in sub:
                    if rules[chosen[i]].writes_out and m[i]:
                        w[i] = min(w[i] + 1, 2)
                key = (new, bytes(m), tuple(w))
                j = index.get(key)
                if j is None:
                    if len(states) >= max_states:
                        complete = False
                        continue
                    j = len(states)
                    index[key] = j
                    states.append(key)
                succ.append((sub, j))
        edges.append(succ)
    return StateGraph(g, states, edges, complete)


def strongly_connected_components(edges: Sequence) -> list:
    """Iterative Tarjan; returns the component id of every node."""
    n = len(edges)
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    comp = [-1] * n
    stack = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack[root] = True
        while work:
            v, pos = work[-1]
            succ = edges[v]
            if pos < len(succ):
                work[-1] = (v, pos + 1)
                w = succ[pos][1]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack[w] = True
                    work.append((w, 0))
                elif onstack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def shortest_path(sg: StateGraph, goal: int) -> list:
    """Activation sets leading from the start state to ``goal``."""
    parent = {0: None}
    todo = [0]
    for s in todo:
        if s == goal:
            break
        for sub, j in sg.edges[s]:
            if j not in parent:
                parent[j] = (s, sub)
                todo.append(j)
    path = []
    cur = goal
    while parent[cur] is not None:
        s, sub = parent[cur]
        path.append(sub)
        cur = s
    path.reverse()
    return path


# -- JSON --------------------------------------------------------------------------


def _enc_config(g, algorithm, cfg):
    return [[algorithm.encode_mem(s.mem), s.out] for s in cfg.states]


def _dec_config(g, algorithm, data, pending=frozenset()):
    return Configuration(
        tuple(NodeState(g.labels[i], algorithm.decode_mem(m), o) for i, (m, o) in enumerate(data)),
        pending,
    )


def trace_to_dict(trace: ExecutionTrace) -> dict:
    g = trace.graph
    alg = trace.algorithm
    return {
        "schema": TRACE_SCHEMA,
        "version": TRACE_VERSION,
        "graph": dumps_graph(g),
        "algorithm": {"name": alg.name, "params": alg.params},
        "requests": sorted(g.index[v] for v in trace.requests),
        "budget": trace.budget,
        "window": trace.window,
        "initial": _enc_config(g, alg, trace.configurations[0]),
        "steps": [
            {
                "activated": list(act),
                "rules": [alg.rules[k].name for k in fired],
                "config": _enc_config(g, alg, cfg),
                "influenced": [i for i, x in enumerate(inf) if x],
            }
            for act, fired, cfg, inf in zip(trace.activations, trace.fired, trace.configurations[1:], trace.influenced[1:])
        ],
        "verdict": {"kind": trace.verdict, "stabilized_at": trace.stabilized_at, "steps": trace.steps},
    }


def dumps_trace(trace: ExecutionTrace) -> str:
    return json.dumps(trace_to_dict(trace), sort_keys=True, separators=(",", ":")) + "\n"


def trace_from_dict(data: dict, algorithm: Algorithm) -> ExecutionTrace:
    if data.get("schema") != TRACE_SCHEMA or data.get("version") != TRACE_VERSION:
        raise ValueError("not a version-1 snapstab trace")
    g = loads_graph(data["graph"])
    req = frozenset(data["requests"])
    configs = [_dec_config(g, algorithm, data["initial"], req)]
    acts, fired, infl = [], [], []
    mask = bytearray(len(g.vertices))
    for i in req:
        mask[i] = 1
    infl.append(bytes(mask))
    names = {r.name: i for i, r in enumerate(algorithm.rules)}
    for step in data["steps"]:
        acts.append(tuple(step["activated"]))
        fired.append(tuple(names[n] for n in step["rules"]))
        configs.append(_dec_config(g, algorithm, step["config"]))
        m = bytearray(len(g.vertices))
        for i in step["influenced"]:
            m[i] = 1
        infl.append(bytes(m))
    v = data["verdict"]
    return ExecutionTrace(
        g, algorithm, frozenset(g.vertices[i] for i in req), configs, acts, fired, infl,
        v["kind"], v["stabilized_at"], data["window"], data["budget"],
    )


def schedule_of(trace: ExecutionTrace) -> tuple:
    """Activation sets as vertex ids, usable as an explicit daemon schedule."""
    vs = trace.graph.vertices
    return tuple(tuple(vs[i] for i in act) for act in trace.activations)


def replay(trace: ExecutionTrace) -> ExecutionTrace:
    """Re-run a trace from its initial configuration and schedule."""
    return run(
        trace.graph,
        trace.algorithm,
        DaemonPolicy("schedule", schedule=schedule_of(trace)),
        requests=trace.requests,
        budget=trace.budget,
        initial=trace.configurations[0],
        window=trace.window or None,
    )
