"""Self-stabilizing enumeration with counter-gated outputs (the universal
snap-stabilizing algorithm) and its combinatorial helpers.

Names are naturals, 0 meaning unnamed. A local view is the decreasing tuple
of in-neighbour names. Mailbox entries are ``(name, label, view)`` triples so
that labelled networks can be told apart; views are compared together with
the label, label first.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple

from . import kernels
from .engine import BOT, Algorithm, Configuration, ExecutionTrace, NodeState, Rule
from .graph import LabeledDigraph, PointedFamily, Verdict, check_quasi_fibration, enumerate_family
from .tasks import INF, OutputRadiusPair, silent_pair


class EnumState(NamedTuple):
    n: int
    view: tuple
    mailbox: frozenset
    a: int = -1
    done: bool = False


def mailbox(entries, label="") -> frozenset:
    """Build a mailbox from ``(name, view)`` pairs or full triples."""
    out = set()
    for e in entries:
        if len(e) == 2:
            out.add((e[0], label, tuple(e[1])))
        else:
            out.add((e[0], e[1], tuple(e[2])))
    return frozenset(out)


def make_view(names) -> tuple:
    return tuple(sorted(names, reverse=True))


def current_view(g: LabeledDigraph, config: Configuration, v) -> tuple:
    i = g.index[v]
    return make_view(config.states[j].mem.n for j in g.in_positions[i])


def view_less(n1: tuple, n2: tuple) -> bool:
    """Lexicographic order on decreasing tuples; a proper prefix is smaller."""
    return tuple(n1) < tuple(n2)


def delta(view: tuple, n: int) -> int:
    return view.count(n)


def substitute(view: tuple, n: int, new: int) -> tuple:
    return make_view(new if x == n else x for x in view)


def strong_entry(m: frozenset, n: int):
    """The strongest ``(label, view)`` recorded for name ``n``, or None."""
    best = None
    for name, lab, view in m:
        if name == n and (best is None or (lab, view) > best):
            best = (lab, view)
    return best


def strong(m: frozenset, n: int):
    e = strong_entry(m, n)
    return None if e is None else e[1]


def _strong_map(m: frozenset) -> dict:
    best = {}
    for name, lab, view in m:
        cur = best.get(name)
        if cur is None or (lab, view) > cur:
            best[name] = (lab, view)
    return best


def v_fixpoint(m: frozenset, n: int) -> frozenset:
    """Names reachable from ``n`` through strongest views, following names
    that occur exactly once in a view."""
    best = _strong_map(m)
    if n not in best:
        raise KeyError(f"name {n} has no entry in the mailbox")
    seen = {n}
    todo = [n]
    while todo:
        s = todo.pop()
        entry = best.get(s)
        if entry is None:
            continue
        view = entry[1]
        for t in set(view):
            if view.count(t) == 1 and t not in seen:
                seen.add(t)
                todo.append(t)
    return frozenset(seen)


def reconstruct_base(m: frozenset, n: int) -> LabeledDigraph:
    """The digraph of names reachable from ``n``: an arc t -> s whenever t
    occurs exactly once in the strongest view of s. Names without an entry
    get label None and no in-arcs."""
    best = _strong_map(m)
    names = sorted(v_fixpoint(m, n))
    inside = set(names)
    arcs = []
    for s in names:
        entry = best.get(s)
        if entry is None:
            continue
        view = entry[1]
        for t in sorted(set(view)):
            if t in inside and view.count(t) == 1:
                arcs.append((t, s))
    labels = {s: (best[s][0] if s in best else None) for s in names}
    return LabeledDigraph.build(names, arcs, labels)


class SearchBudgetExceeded(RuntimeError):
    pass


def find_K(fam: PointedFamily, base: LabeledDigraph, n, a: int, index_budget: int | None = None, search_bound: int | None = 100_000):
    """First pointed member (K, w) of the family that is a quasi-fibration of
    ``base`` of centre w and radius ``a`` with w sent to ``n``. Returns None
    when the family is exhausted; raises SearchBudgetExceeded when the index
    budget or the search bound runs out first."""
    i = 0
    while fam.size is None or i < fam.size:
        if index_budget is not None and i >= index_budget:
            raise SearchBudgetExceeded(f"no match within {index_budget} family members")
        k, w = enumerate_family(fam, i)
        q = check_quasi_fibration(k, base, w, a, search_bound, target=n)
        if q.verdict is Verdict.UNKNOWN:
            raise SearchBudgetExceeded(f"quasi-fibration search at index {i} hit its bound")
        if q.verdict is Verdict.YES:
            return k, w
        i += 1
    return None


# -- the algorithm ---------------------------------------------------------------------

INIT, DIFFUSION, RENAMING, FIX, GSSP, OUTPUT = range(6)
RULE_NAMES = ("Initialization", "Diffusion", "Renaming", "FixCounter", "Counter", "Output")


@dataclass(frozen=True)
class EnumDomains:
    """Corruption domains for EnumState registers. Either finite candidate
    lists (exhaustive mode) or sampling bounds (random mode)."""

    max_name: int = 8
    max_view: int = 4
    max_entries: int = 6
    labels: tuple = ("",)
    counters: tuple | None = None  # default: -1..counter_limit
    names: tuple | None = None
    views: tuple | None = None
    mailboxes: tuple | None = None
    dones: tuple = (False, True)

    def finite(self) -> bool:
        return self.names is not None and self.views is not None and self.mailboxes is not None


def _random_view(rng, d):
    k = rng.randint(0, d.max_view)
    return make_view(rng.randint(0, d.max_name) for _ in range(k))


def _random_mailbox(rng, d):
    return frozenset(
        (rng.randint(0, d.max_name), rng.choice(d.labels), _random_view(rng, d)) for _ in range(rng.randint(0, d.max_entries))
    )


@dataclass(eq=False)
class UniversalAlgorithm:
    """Holds the pair, the family, the counter cap and a per-instance cache
    of (mailbox, name, counter) -> (output, radius) lookups."""

    pair: OutputRadiusPair
    family: PointedFamily | None
    counter_limit: int
    search_bound: int | None = 100_000
    index_budget: int | None = None
    literal_counters: bool = False
    cache: dict = field(default_factory=dict)
    lookups: int = 0

    def decision(self, m, n, a):
        """(output, radius) for the member found at counter ``a``, or None."""
        if self.family is None or a < 0:
            return None
        key = (m, n, a)
        hit = self.cache.get(key, key)
        if hit is not key:
            return hit
        self.lookups += 1
        result = None
        try:
            base = reconstruct_base(m, n)
        except KeyError:
            base = None
        if base is not None:
            found = find_K(self.family, base, n, a, self.index_budget, self.search_bound)
            if found is not None:
                result = self.pair.evaluate(*found)
        self.cache[key] = result
        return result


def _ball_equal(m0, nbrs):
    for s in nbrs:
        m = s.mem.mailbox
        if m is not m0 and m != m0:
            return False
    return True


def _pending_output(u, c, allm):
    if not allm or c.mem.done:
        return False
    dec = u.decision(c.mem.mailbox, c.mem.n, c.mem.a)
    return dec is not None and c.mem.a >= dec[1]


def _diffusion_state(c, nbrs, view):
    mem = c.mem
    m = set(mem.mailbox)
    for s in nbrs:
        m.update(s.mem.mailbox)
    m.add((mem.n, c.lam, view))
    return EnumState(mem.n, view, frozenset(m), -1, False)


def _renaming_state(c, nbrs, view):
    mem = c.mem
    top = mem.n
    for name, _, v in mem.mailbox:
        if name > top:
            top = name
        if v and v[0] > top:
            top = v[0]
    new = top + 1
    m = set(mem.mailbox)
    for s in nbrs:
        m.add((s.mem.n, s.lam, s.mem.view))
    m.add((new, c.lam, view))
    return EnumState(new, mem.view, frozenset(m), -1, False)


def _needs_renaming(c, view):
    mem = c.mem
    n = mem.n
    if n == 0:
        return True
    mine = (c.lam, view)
    for name, lab, v in mem.mailbox:
        if name == n and mine < (lab, v):
            return True
        if n in v and v.count(n) >= 2:
            return True
    return False


def _make_select(u: UniversalAlgorithm):
    limit = u.counter_limit
    literal = u.literal_counters
    kernel = kernels.enum_select

    def pending(c):
        return _pending_output(u, c, True)

    def select(c, nbrs, req):
        return kernel(c, nbrs, req, limit, literal, pending)

    return select


def _far(d, literal):
    """Counter gap that forces a reset: an in-neighbour at least two behind,
    or (literal reading) two apart in either direction."""
    return d <= -2 or (literal and d >= 2)


def _rules(u: UniversalAlgorithm) -> tuple:
    def view_of(nbrs):
        return make_view([s.mem.n for s in nbrs])

    def g_init(c, nbrs, req):
        return req

    def c_init(c, nbrs, req):
        return EnumState(0, view_of(nbrs), frozenset(), -1, False), c.out

    def g_diff(c, nbrs, req):
        view = view_of(nbrs)
        m0 = c.mem.mailbox
        trig = any(s.mem.mailbox != m0 for s in nbrs) or (c.mem.n, c.lam, view) not in m0 or c.mem.view != view
        return trig and _diffusion_state(c, nbrs, view) != c.mem

    def c_diff(c, nbrs, req):
        return _diffusion_state(c, nbrs, view_of(nbrs)), c.out

    def g_ren(c, nbrs, req):
        return _ball_equal(c.mem.mailbox, nbrs) and _needs_renaming(c, view_of(nbrs))

    def c_ren(c, nbrs, req):
        return _renaming_state(c, nbrs, view_of(nbrs)), c.out

    def g_fix(c, nbrs, req):
        a0 = c.mem.a
        if a0 == -1:
            return False
        return any(_far(s.mem.a - a0, u.literal_counters) or s.mem.mailbox != c.mem.mailbox for s in nbrs)

    def c_fix(c, nbrs, req):
        return c.mem._replace(a=-1), c.out

    def g_gssp(c, nbrs, req):
        allm = _ball_equal(c.mem.mailbox, nbrs)
        a0 = c.mem.a
        return (
            allm
            and not any(_far(s.mem.a - a0, u.literal_counters) for s in nbrs)
            and not _pending_output(u, c, allm)
            and a0 < u.counter_limit
            and 1 + min([a0] + [s.mem.a for s in nbrs]) != a0
        )

    def c_gssp(c, nbrs, req):
        return c.mem._replace(a=1 + min([c.mem.a] + [s.mem.a for s in nbrs])), c.out

    def g_out(c, nbrs, req):
        return _pending_output(u, c, _ball_equal(c.mem.mailbox, nbrs))

    def c_out(c, nbrs, req):
        value, _ = u.decision(c.mem.mailbox, c.mem.n, c.mem.a)
        return c.mem._replace(done=True), value

    return (
        Rule(RULE_NAMES[INIT], g_init, c_init, consumes_request=True),
        Rule(RULE_NAMES[DIFFUSION], g_diff, c_diff),
        Rule(RULE_NAMES[RENAMING], g_ren, c_ren),
        Rule(RULE_NAMES[FIX], g_fix, c_fix),
        Rule(RULE_NAMES[GSSP], g_gssp, c_gssp),
        Rule(RULE_NAMES[OUTPUT], g_out, c_out, writes_out=True),
    )


def encode_state(s: EnumState):
    return [s.n, list(s.view), sorted([n, lab, list(v)] for n, lab, v in s.mailbox), s.a, s.done]


def decode_state(x) -> EnumState:
    return EnumState(x[0], tuple(x[1]), frozenset((n, lab, tuple(v)) for n, lab, v in x[2]), x[3], x[4])


def build_universal_algorithm(
    pair: OutputRadiusPair,
    fam: PointedFamily | None,
    counter_limit: int | None = None,
    domains: EnumDomains = EnumDomains(),
    fused: bool = True,
    search_bound: int | None = 100_000,
    name: str = "universal",
    literal_counters: bool = False,
) -> Algorithm:
    """Enumeration, counters and counter-gated output for the pair (f, r).

    ``counter_limit`` caps the counters (default: the pair's radius bound);
    with ``fused`` the engine uses a single-pass guard evaluation equivalent
    to checking the rules in order. Counters only compare against
    in-neighbours that are behind; ``literal_counters`` restores the
    symmetric gap test, which can deadlock on directed cycles."""
    limit = counter_limit if counter_limit is not None else pair.radius_bound
    if limit is None:
        raise ValueError("a counter limit is needed when the pair has no radius bound")
    if pair.radius_bound is not None and pair.radius_bound > limit:
        raise ValueError("counter limit below the largest radius: outputs could never fire")
    silent = pair.r is silent_pair().r or fam is None
    u = UniversalAlgorithm(pair, None if silent else fam, limit, search_bound, literal_counters=literal_counters)
    counters = domains.counters if domains.counters is not None else tuple(range(-1, limit + 1))

    def registers(g, v):
        if domains.finite():
            return {"n": domains.names, "view": domains.views, "mailbox": domains.mailboxes, "a": counters, "done": domains.dones}
        return {
            "n": lambda rng: rng.randint(0, domains.max_name),
            "view": lambda rng: _random_view(rng, domains),
            "mailbox": lambda rng: _random_mailbox(rng, domains),
            "a": counters,
            "done": domains.dones,
        }

    def out_domain(g, v):
        values = {BOT}
        if fam is not None:
            for k, w in fam:
                values.add(pair.output(k, w))
        return sorted(values, key=repr)

    alg = Algorithm(
        name=name,
        rules=_rules(u),
        initial_mem=lambda g, v: EnumState(0, (), frozenset(), -1, False),
        registers=registers,
        assemble=lambda f: EnumState(f["n"], f["view"], f["mailbox"], f["a"], f["done"]),
        out_domain=out_domain,
        encode_mem=encode_state,
        decode_mem=decode_state,
        select=_make_select(u) if fused else None,
        params={"pair": pair.name, "family": fam.name if fam is not None else None, "counter_limit": limit},
    )
    object.__setattr__(alg, "universal", u)
    return alg


def build_enumeration_algorithm(domains: EnumDomains = EnumDomains()) -> Algorithm:
    """Only the naming rules (request reset, flooding, renaming)."""
    full = build_universal_algorithm(silent_pair(), None, 0, domains, fused=False, name="enumeration")
    rules = full.rules[:3]

    def registers(g, v):
        regs = full.registers(g, v)
        regs["a"] = (-1,)
        regs["done"] = (False,)
        return regs

    return Algorithm(
        name="enumeration",
        rules=rules,
        initial_mem=full.initial_mem,
        registers=registers,
        assemble=full.assemble,
        out_domain=lambda g, v: (BOT,),
        encode_mem=encode_state,
        decode_mem=decode_state,
        params={},
    )


# -- final-state checks ----------------------------------------------------------------


@dataclass
class FinalReport:
    """Failed checks as ``(code, message)`` pairs. Codes: ``mailboxes``,
    ``stored-view``, ``strongest``, ``name-implies-view``,
    ``view-implies-name``, ``reachable``."""

    failures: list

    @property
    def codes(self) -> set:
        return {c for c, _ in self.failures}

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok


def check_final_conditions(g: LabeledDigraph, config: Configuration | ExecutionTrace) -> FinalReport:
    """Equal mailboxes; strongest entry of each name equals the stored and
    the current view; equal names exactly for equal (label, view), checked
    in both directions separately; and the names reachable from any final
    name are all the names in use."""
    if isinstance(config, ExecutionTrace):
        config = config.final
    states = config.states
    fails = []
    m0 = states[0].mem.mailbox
    if any(s.mem.mailbox != m0 for s in states):
        fails.append(("mailboxes", "mailboxes differ"))
    views = [current_view(g, config, v) for v in g.vertices]
    for i, v in enumerate(g.vertices):
        s = states[i]
        if s.mem.view != views[i]:
            fails.append(("stored-view", f"stored view of {v!r} is stale"))
        if strong_entry(s.mem.mailbox, s.mem.n) != (s.lam, views[i]):
            fails.append(("strongest", f"strongest entry for the name of {v!r} is not its view"))
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            same_name = states[i].mem.n == states[j].mem.n
            same_view = (states[i].lam, views[i]) == (states[j].lam, views[j])
            pair = f"{g.vertices[i]!r}, {g.vertices[j]!r}"
            if same_name and not same_view:
                fails.append(("name-implies-view", f"{pair} share a name but not a view"))
            if same_view and not same_name:
                fails.append(("view-implies-name", f"{pair} share a view but not a name"))
    names = {s.mem.n for s in states}
    for s in states:
        try:
            if v_fixpoint(s.mem.mailbox, s.mem.n) != names:
                fails.append(("reachable", f"names reachable from {s.mem.n} are not the names in use"))
                break
        except KeyError:
            fails.append(("reachable", f"name {s.mem.n} has no mailbox entry"))
            break
    return FinalReport(fails)


def random_request_set(g: LabeledDigraph, rng: random.Random) -> tuple:
    """Empty half of the time, otherwise a uniform nonempty subset."""
    if rng.random() < 0.5:
        return ()
    while True:
        sub = tuple(v for v in g.vertices if rng.random() < 0.5)
        if sub:
            return sub
