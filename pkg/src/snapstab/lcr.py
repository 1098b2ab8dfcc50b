"""LCR-style election on unidirectional rings and its request-driven variant.

Each node's input label is its identity; the single in-neighbour of a ring
node is its predecessor, so ``nbrs[0]`` in every guard is ``pred(v0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .engine import (
    BOT,
    Algorithm,
    Configuration,
    DaemonPolicy,
    ExecutionTrace,
    NodeState,
    Rule,
    run,
)
from .graph import LabeledDigraph, PointedFamily, ring

ELECTED = "ELECTED"


class LCRMem(NamedTuple):
    min: int
    ttl: int


@dataclass(frozen=True)
class RingInstance:
    """A unidirectional ring: vertex i reads vertex i - 1; ``ids[i]`` is the
    identity of vertex i."""

    ids: tuple

    def __post_init__(self):
        if len(self.ids) < 3:
            raise ValueError("LCR rings need at least 3 nodes")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("identities must be pairwise distinct")

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def graph(self) -> LabeledDigraph:
        return ring(self.size, self.ids)

    def pred(self, i: int) -> int:
        return (i - 1) % self.size

    def min_vertex(self) -> int:
        return self.ids.index(min(self.ids))

    @classmethod
    def from_graph(cls, g: LabeledDigraph) -> "RingInstance":
        n = len(g.vertices)
        if sorted(g.vertices) != list(range(n)) or sorted(g.arcs) != sorted((i, (i + 1) % n) for i in range(n)):
            raise ValueError("graph is not a directed ring 0 -> 1 -> ... -> n-1 -> 0")
        return cls(tuple(g.labels))


def _lcr_rules(n: int) -> list:
    def initiate(c, nb, req):
        return c.mem.min < nb[0].mem.min and c.mem.min < c.lam

    def circulate(c, nb, req):
        return c.mem.min > nb[0].mem.min

    def cleaning(c, nb, req):
        p = nb[0].mem
        return (c.mem.min != p.min or c.mem.ttl != p.ttl - 1) and c.mem.ttl != n

    def election(c, nb, req):
        p = nb[0].mem
        return c.lam == p.min and p.ttl == 1

    reset = lambda c, nb, req: (LCRMem(c.lam, n), c.out)
    return [
        Rule("Initiate", initiate, reset),
        Rule("Circulate", circulate, lambda c, nb, req: (LCRMem(nb[0].mem.min, nb[0].mem.ttl - 1), c.out)),
        Rule("Cleaning", cleaning, reset),
        Rule("Election", election, lambda c, nb, req: (LCRMem(c.mem.min, 0), ELECTED), writes_out=True),
    ]


def _lcr(name, n, rules, ids=None):
    def registers(g, v):
        return {"min": tuple(g.labels), "ttl": tuple(range(n + 1))}

    return Algorithm(
        name=name,
        rules=tuple(rules),
        initial_mem=lambda g, v: LCRMem(g.label_of[v], n),
        registers=registers,
        assemble=lambda f: LCRMem(f["min"], f["ttl"]),
        out_domain=lambda g, v: (BOT, ELECTED),
        encode_mem=lambda m: [m.min, m.ttl],
        decode_mem=lambda x: LCRMem(x[0], x[1]),
        params={"N": n},
    )


def lcr_algorithm(n: int) -> Algorithm:
    if n < 3:
        raise ValueError("N must be at least 3")
    return _lcr("lcr", n, _lcr_rules(n))


def snap_lcr_algorithm(n: int) -> Algorithm:
    """LCR with a request-triggered reset at top priority."""
    if n < 3:
        raise ValueError("N must be at least 3")
    request = Rule("Request", lambda c, nb, req: req, lambda c, nb, req: (LCRMem(c.lam, n), c.out), consumes_request=True)
    return _lcr("snap-lcr", n, [request] + _lcr_rules(n))


def lcr_without_cleaning(n: int) -> Algorithm:
    """Deliberately broken LCR: no Cleaning rule."""
    rules = [r for r in _lcr_rules(n) if r.name != "Cleaning"]
    return _lcr("lcr-no-cleaning", n, rules)


def election_relation(g: LabeledDigraph, outs) -> bool:
    return sum(1 for o in outs if o == ELECTED) == 1


def size_relation(g: LabeledDigraph, outs) -> bool:
    return all(o == len(g.vertices) for o in outs)


def election_task(fam: PointedFamily):
    from .tasks import TaskSpec

    return TaskSpec("election", fam, election_relation)


def size_task(fam: PointedFamily):
    from .tasks import TaskSpec

    return TaskSpec("size", fam, size_relation)


@dataclass
class SnapViolation:
    """A run where a non-minimum node elects itself after its predecessor's
    request. ``trace`` replays from ``initial`` with ``schedule``."""

    instance: RingInstance
    initial: Configuration
    requests: tuple
    schedule: tuple
    offender: int
    trace: ExecutionTrace
    terminal_ok: bool

    @property
    def confirmed(self) -> bool:
        t = self.trace
        rules = t.algorithm.rules
        wrote = False
        for act, fired in zip(t.activations, t.fired):
            if self.offender in act and rules[fired[act.index(self.offender)]].writes_out:
                wrote = True
        return wrote and not self.terminal_ok


def _violation_at(inst: RingInstance, v: int, budget: int) -> SnapViolation:
    n = inst.size
    alg = snap_lcr_algorithm(n)
    g = inst.graph
    p = inst.pred(v)
    states = []
    for i, ident in enumerate(inst.ids):
        mem = LCRMem(inst.ids[v], 1) if i == p else LCRMem(ident, n)
        states.append(NodeState(ident, mem, BOT))
    initial = Configuration(tuple(states))
    # the request and the offender move together, so the offender still reads
    # the corrupted predecessor
    first = run(g, alg, DaemonPolicy("schedule", schedule=((p, v),)), requests=(p,), budget=1, initial=initial)
    if first.steps != 1:
        raise RuntimeError("corrupted node is not activable")
    rest = run(g, alg, DaemonPolicy("synchronous"), budget=budget, initial=first.final, window=4 * n)
    schedule = ((p, v),) + tuple(tuple(act) for act in rest.activations)
    trace = run(g, alg, DaemonPolicy("schedule", schedule=schedule), requests=(p,), budget=len(schedule) + 1, initial=initial, window=4 * n)
    ok = election_relation(g, trace.final.outs()) and trace.final.outs()[inst.min_vertex()] == ELECTED
    return SnapViolation(inst, initial, (p,), schedule, v, trace, ok)


def find_snap_violation(n: int, budget: int = 1000, ids=None) -> SnapViolation:
    """Corrupt the predecessor of a non-minimum node v to (min=id(v), ttl=1),
    request the predecessor and let v move in the same step."""
    inst = RingInstance(tuple(ids) if ids is not None else tuple(range(1, n + 1)))
    order = sorted(range(n), key=lambda i: -inst.ids[i])
    for v in order:
        if v == inst.min_vertex():
            continue
        w = _violation_at(inst, v, budget)
        if w.confirmed:
            return w
    raise RuntimeError(f"no snap violation found on the {n}-ring")
