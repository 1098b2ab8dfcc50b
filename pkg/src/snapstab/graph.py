"""Labelled digraphs, morphisms, fibrations, quasi-fibrations and families.

Digraphs allow parallel arcs and self-loops. Arcs are identified by their
position in ``LabeledDigraph.arcs`` so that morphisms can map parallel arcs
individually. Vertex order is fixed at construction and every search in this
module iterates in that order, which makes all results reproducible.
"""

from __future__ import annotations

import enum
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from . import kernels

Vertex = Hashable
Arc = tuple  # (source, target)

FORMAT_TAG = "snapstab-graph"
FORMAT_VERSION = 1


class GraphError(ValueError):
    pass


class InvalidMorphism(GraphError):
    """The map is not a label-preserving digraph homomorphism."""


@dataclass(frozen=True)
class LabeledDigraph:
    vertices: tuple
    arcs: tuple
    labels: tuple

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex identifiers")
        if len(self.labels) != len(self.vertices):
            raise GraphError("one label per vertex is required")
        known = set(self.vertices)
        for a in self.arcs:
            if len(a) != 2 or a[0] not in known or a[1] not in known:
                raise GraphError(f"arc {a!r} has an undeclared endpoint")

    @classmethod
    def build(cls, vertices: Iterable, arcs: Iterable, labels=None) -> "LabeledDigraph":
        """Convenience constructor; ``labels`` may be a mapping, a sequence
        aligned with ``vertices``, or None for an unlabelled digraph."""
        vertices = tuple(vertices)
        if labels is None:
            labs = ("",) * len(vertices)
        elif isinstance(labels, Mapping):
            labs = tuple(labels[v] for v in vertices)
        else:
            labs = tuple(labels)
        return cls(vertices, tuple((s, t) for s, t in arcs), labs)

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def label_of(self) -> dict:
        return dict(zip(self.vertices, self.labels))

    @cached_property
    def in_arcs(self) -> dict:
        """Vertex -> tuple of in-arc indices, in arc-index order."""
        acc = {v: [] for v in self.vertices}
        for i, (_, t) in enumerate(self.arcs):
            acc[t].append(i)
        return {v: tuple(a) for v, a in acc.items()}

    @cached_property
    def out_arcs(self) -> dict:
        acc = {v: [] for v in self.vertices}
        for i, (s, _) in enumerate(self.arcs):
            acc[s].append(i)
        return {v: tuple(a) for v, a in acc.items()}

    @cached_property
    def csr(self) -> tuple:
        """(in_ptr, in_src) over vertex positions, for the kernels."""
        ptr = [0]
        src = []
        idx = self.index
        for v in self.vertices:
            src.extend(idx[self.arcs[a][0]] for a in self.in_arcs[v])
            ptr.append(len(src))
        return ptr, src

    @cached_property
    def in_positions(self) -> tuple:
        """Per vertex position, the positions of in-arc sources (with multiplicity)."""
        ptr, src = self.csr
        return tuple(tuple(src[ptr[i]:ptr[i + 1]]) for i in range(len(self.vertices)))

    def in_neighbors(self, v) -> list:
        return [self.arcs[a][0] for a in self.in_arcs[v]]

    def source(self, a: int):
        return self.arcs[a][0]

    def target(self, a: int):
        return self.arcs[a][1]

    @cached_property
    def alphabet(self) -> frozenset:
        return frozenset(self.labels)

    def relabel(self, labels) -> "LabeledDigraph":
        return LabeledDigraph.build(self.vertices, self.arcs, labels)

    def has_parallel_arcs(self) -> bool:
        return len(set(self.arcs)) != len(self.arcs)


@dataclass(frozen=True)
class DigraphMorphism:
    vertex_map: Mapping
    arc_map: Mapping  # arc index -> arc index

    def __call__(self, v):
        return self.vertex_map[v]

    def compose(self, inner: "DigraphMorphism") -> "DigraphMorphism":
        """``self`` after ``inner``."""
        return DigraphMorphism(
            {v: self.vertex_map[w] for v, w in inner.vertex_map.items()},
            {a: self.arc_map[b] for a, b in inner.arc_map.items()},
        )


def identity_morphism(g: LabeledDigraph) -> DigraphMorphism:
    return DigraphMorphism({v: v for v in g.vertices}, {i: i for i in range(len(g.arcs))})


# -- constructors --------------------------------------------------------------


def ring(n: int, labels=None) -> LabeledDigraph:
    """Directed ring 0 -> 1 -> ... -> n-1 -> 0, so pred(i) = i - 1.

    ``n = 1`` gives the one-vertex self-loop."""
    if n < 1:
        raise GraphError("a ring needs at least one vertex")
    return LabeledDigraph.build(range(n), [(i, (i + 1) % n) for i in range(n)], labels)


def loop(label="") -> LabeledDigraph:
    return ring(1, [label])


def dir_of(vertices: Iterable, edges: Iterable, labels=None) -> LabeledDigraph:
    """Symmetric digraph of a simple undirected graph: each edge {u, v}
    becomes the arcs (u, v) and (v, u)."""
    vertices = tuple(vertices)
    arcs = []
    seen = set()
    for u, v in edges:
        if u == v:
            raise GraphError("simple graphs have no loops")
        key = frozenset((u, v))
        if key in seen:
            raise GraphError(f"edge {u!r}-{v!r} given twice")
        seen.add(key)
        arcs.append((u, v))
        arcs.append((v, u))
    return LabeledDigraph.build(vertices, arcs, labels)


def is_strongly_connected(g: LabeledDigraph) -> bool:
    if not g.vertices:
        return False
    root = g.vertices[0]
    for arcs_of, end in ((g.out_arcs, 1), (g.in_arcs, 0)):
        seen = {root}
        todo = [root]
        while todo:
            v = todo.pop()
            for a in arcs_of[v]:
                u = g.arcs[a][end]
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        if len(seen) != len(g.vertices):
            return False
    return True


def diameter(g: LabeledDigraph) -> int:
    """Largest finite dipath distance; the digraph should be strongly connected."""
    ptr, src = g.csr
    n = len(g.vertices)
    best = 0
    for c in range(n):
        dist = kernels.reverse_distances(ptr, src, c, n)
        best = max(best, max(dist))
    return best


# -- in-balls ------------------------------------------------------------------


@dataclass(frozen=True)
class InBall:
    """Radius-``radius`` in-ball of ``center``.

    ``graph`` keeps the vertex identifiers of the host digraph; its arcs are
    renumbered and ``arc_origin[i]`` is the host index of ball arc ``i``.
    ``dist[v]`` is the dipath distance from ``v`` to the centre."""

    graph: LabeledDigraph
    center: Vertex
    radius: int
    arc_origin: tuple
    dist: Mapping = field(compare=False)

    def inner(self, v) -> bool:
        """Whether all in-arcs of ``v`` in the host belong to the ball."""
        return self.dist[v] < self.radius


def in_ball(g: LabeledDigraph, v, r: int) -> InBall:
    if v not in g.index:
        raise GraphError(f"unknown vertex {v!r}")
    if r < 0:
        raise GraphError("radius must be non-negative")
    ptr, src = g.csr
    d = kernels.reverse_distances(ptr, src, g.index[v], r)
    dist = {u: d[i] for i, u in enumerate(g.vertices) if d[i] >= 0}
    verts = tuple(u for u in g.vertices if u in dist)
    # an arc lies on a dipath of length <= r to v iff its target is within r - 1
    origin = tuple(i for i, (_, t) in enumerate(g.arcs) if t in dist and dist[t] <= r - 1)
    sub = LabeledDigraph(verts, tuple(g.arcs[i] for i in origin), tuple(g.label_of[u] for u in verts))
    return InBall(sub, v, r, origin, dist)


def is_subdigraph(small: LabeledDigraph, big: LabeledDigraph) -> bool:
    """Vertex inclusion plus arc multiset inclusion (labels must agree)."""
    if any(v not in big.index or big.label_of[v] != small.label_of[v] for v in small.vertices):
        return False
    pool = {}
    for a in big.arcs:
        pool[a] = pool.get(a, 0) + 1
    for a in small.arcs:
        if pool.get(a, 0) == 0:
            return False
        pool[a] -= 1
    return True


# -- morphisms and fibrations ----------------------------------------------------


def validate_morphism(src: LabeledDigraph, dst: LabeledDigraph, m: DigraphMorphism) -> None:
    """Raise InvalidMorphism unless ``m`` is a label-preserving homomorphism."""
    vm, am = m.vertex_map, m.arc_map
    for v in src.vertices:
        if v not in vm:
            raise InvalidMorphism(f"vertex {v!r} has no image")
        w = vm[v]
        if w not in dst.index:
            raise InvalidMorphism(f"image {w!r} of {v!r} is not a vertex of the target")
        if src.label_of[v] != dst.label_of[w]:
            raise InvalidMorphism(f"label of {v!r} is not preserved")
    for i, (s, t) in enumerate(src.arcs):
        if i not in am:
            raise InvalidMorphism(f"arc {i} has no image")
        j = am[i]
        if not 0 <= j < len(dst.arcs):
            raise InvalidMorphism(f"image {j!r} of arc {i} is not an arc of the target")
        if dst.arcs[j] != (vm[s], vm[t]):
            raise InvalidMorphism(f"arc {i} incidence is not preserved")


def check_fibration(total: LabeledDigraph, base: LabeledDigraph, m: DigraphMorphism, strict: bool = False) -> bool:
    """Unique arc lifting at the target: every arc ``a`` of ``base`` has exactly
    one preimage ending at each vertex over ``t(a)``.

    ``strict`` also demands unique lifting at the source.
    Raises InvalidMorphism when ``m`` is not a homomorphism at all."""
    validate_morphism(total, base, m)
    sides = ((1, total.in_arcs),) + (((0, total.out_arcs),) if strict else ())
    for end, arcs_at in sides:
        for v in total.vertices:
            image = m.vertex_map[v]
            expected = base.in_arcs[image] if end == 1 else base.out_arcs[image]
            got = sorted(m.arc_map[a] for a in arcs_at[v])
            if got != sorted(expected):
                return False
    return True


def stable_coloring(g: LabeledDigraph, initial=None) -> list:
    """Class index per vertex position for the coarsest in-stable partition."""
    if initial is None:
        table = {}
        initial = [table.setdefault(l, len(table)) for l in g.labels]
    ptr, src = g.csr
    return kernels.refine_colors(ptr, src, list(initial))


def minimal_base(g: LabeledDigraph) -> tuple[LabeledDigraph, DigraphMorphism]:
    """Quotient of ``g`` by its coarsest in-stable partition, with the quotient
    fibration. Base vertices are 0..k-1 in order of first appearance."""
    colors = stable_coloring(g)
    reps = {}
    for i, c in enumerate(colors):
        reps.setdefault(c, i)
    k = len(reps)
    base_arcs = []
    slots = {}  # (class, source class) -> base arc indices in order
    for c in range(k):
        rep = g.vertices[reps[c]]
        for a in g.in_arcs[rep]:
            sc = colors[g.index[g.arcs[a][0]]]
            slots.setdefault((c, sc), []).append(len(base_arcs))
            base_arcs.append((sc, c))
    base = LabeledDigraph(tuple(range(k)), tuple(base_arcs), tuple(g.labels[reps[c]] for c in range(k)))
    vmap = {v: colors[i] for i, v in enumerate(g.vertices)}
    amap = {}
    for v in g.vertices:
        used = {}
        for a in g.in_arcs[v]:
            key = (vmap[v], vmap[g.arcs[a][0]])
            pos = used.get(key, 0)
            amap[a] = slots[key][pos]
            used[key] = pos + 1
    return base, DigraphMorphism(vmap, amap)


def is_fibration_minimal(g: LabeledDigraph) -> bool:
    return len(set(stable_coloring(g))) == len(g.vertices)


# -- isomorphism -----------------------------------------------------------------


def _arc_counts(g: LabeledDigraph) -> dict:
    counts = {}
    for a in g.arcs:
        counts[a] = counts.get(a, 0) + 1
    return counts


def find_isomorphism(g: LabeledDigraph, h: LabeledDigraph, fixed: Mapping | None = None) -> DigraphMorphism | None:
    """Label-preserving isomorphism ``g -> h`` by backtracking, or None.

    ``fixed`` pins some vertex images (used for pointed digraphs). Candidates
    are pruned with the joint stable colouring of the disjoint union."""
    n = len(g.vertices)
    if n != len(h.vertices) or len(g.arcs) != len(h.arcs):
        return None
    if sorted(map(repr, g.labels)) != sorted(map(repr, h.labels)):
        return None
    union = LabeledDigraph(
        tuple((0, v) for v in g.vertices) + tuple((1, v) for v in h.vertices),
        tuple(((0, s), (0, t)) for s, t in g.arcs) + tuple(((1, s), (1, t)) for s, t in h.arcs),
        g.labels + h.labels,
    )
    col = stable_coloring(union)
    gcol, hcol = col[:n], col[n:]
    if sorted(gcol) != sorted(hcol):
        return None
    gc, hc = _arc_counts(g), _arc_counts(h)
    cands = {}
    for i, v in enumerate(g.vertices):
        cands[v] = [w for j, w in enumerate(h.vertices) if hcol[j] == gcol[i]]
    if fixed:
        for v, w in fixed.items():
            if w not in cands.get(v, ()):
                return None
            cands[v] = [w]
    order = sorted(g.vertices, key=lambda v: (len(cands[v]), g.index[v]))
    vmap: dict = {}
    used: set = set()

    def consistent(v, w):
        for u, x in vmap.items():
            if gc.get((v, u), 0) != hc.get((w, x), 0) or gc.get((u, v), 0) != hc.get((x, w), 0):
                return False
        return gc.get((v, v), 0) == hc.get((w, w), 0)

    def search(k):
        if k == n:
            return True
        v = order[k]
        for w in cands[v]:
            if w in used or not consistent(v, w):
                continue
            vmap[v] = w
            used.add(w)
            if search(k + 1):
                return True
            del vmap[v]
            used.discard(w)
        return False

    if not search(0):
        return None
    pool = {}
    for j, a in enumerate(h.arcs):
        pool.setdefault(a, []).append(j)
    taken = {}
    amap = {}
    for i, (s, t) in enumerate(g.arcs):
        key = (vmap[s], vmap[t])
        pos = taken.get(key, 0)
        amap[i] = pool[key][pos]
        taken[key] = pos + 1
    return DigraphMorphism(dict(vmap), amap)


# -- quasi-fibrations ------------------------------------------------------------


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class QuasiFibration:
    """Outcome of a quasi-fibration search.

    On YES: ``gamma`` maps the ball (ball vertex ids, ball arc indices) into
    ``base``; ``total`` is a finite digraph fibred over ``base`` by ``phi``;
    ``delta`` embeds the ball onto the in-ball of ``w`` in ``total`` and
    ``gamma == phi o delta``."""

    verdict: Verdict
    ball: InBall | None = None
    gamma: DigraphMorphism | None = None
    total: LabeledDigraph | None = None
    phi: DigraphMorphism | None = None
    w: Vertex = None
    delta: DigraphMorphism | None = None
    explored: int = 0

    def __bool__(self):
        return self.verdict is Verdict.YES


class _Budget(Exception):
    pass


def _local_fibrations(ball: InBall, base: LabeledDigraph, target, limit) -> Iterator[tuple[dict, dict]]:
    """Yield homomorphisms ball -> base that are bijective on the in-arcs of
    every inner ball vertex. This is exactly the condition for the ball to
    embed as an in-ball of some digraph fibred over ``base``."""
    bg = ball.graph
    host_arcs = {i: a for i, a in enumerate(bg.arcs)}
    order = sorted((v for v in bg.vertices if ball.inner(v)), key=lambda v: (ball.dist[v], bg.index[v]))
    center = ball.center
    if target is not None:
        starts = [target] if target in base.index and base.label_of[target] == bg.label_of[center] else []
    else:
        starts = [w for w in base.vertices if base.label_of[w] == bg.label_of[center]]
    counter = [0]

    def tick():
        counter[0] += 1
        if limit is not None and counter[0] > limit:
            raise _Budget

    vmap: dict = {}
    amap: dict = {}

    def assign_arcs(vi, arcs, k, free):
        # bijection between in-arcs of order[vi] and in-arcs of its image
        if k == len(arcs):
            yield from place(vi + 1)
            return
        tick()
        a = arcs[k]
        s = host_arcs[a][0]
        lab = bg.label_of[s]
        prev_same = arcs[k - 1] if k and host_arcs[arcs[k - 1]][0] == s else None
        floor = amap[prev_same] if prev_same is not None else -1
        for b in free:
            if b <= floor:
                continue
            bs = base.arcs[b][0]
            if base.label_of[bs] != lab:
                continue
            mapped = vmap.get(s)
            if mapped is not None and mapped != bs:
                continue
            new_vertex = mapped is None
            if new_vertex:
                vmap[s] = bs
            amap[a] = b
            yield from assign_arcs(vi, arcs, k + 1, [x for x in free if x != b])
            del amap[a]
            if new_vertex:
                del vmap[s]

    def place(vi):
        if vi == len(order):
            yield dict(vmap), dict(amap)
            return
        v = order[vi]
        image = vmap[v]
        arcs = sorted(bg.in_arcs[v], key=lambda a: (bg.index[host_arcs[a][0]], a))
        if len(arcs) != len(base.in_arcs[image]):
            return
        yield from assign_arcs(vi, arcs, 0, list(base.in_arcs[image]))

    for w0 in starts:
        tick()
        vmap[center] = w0
        yield from place(0)
        vmap.clear()
        amap.clear()


def _witness(ball: InBall, base: LabeledDigraph, vmap: dict, amap: dict):
    """Finite total digraph: the ball plus one copy of ``base`` feeding every
    boundary vertex, fibred over ``base``."""
    bg = ball.graph
    verts = [("ball", v) for v in bg.vertices] + [("base", y) for y in base.vertices]
    labels = [bg.label_of[v] for v in bg.vertices] + list(base.labels)
    arcs = []
    phi_a = {}
    delta_a = {}
    for i, (s, t) in enumerate(bg.arcs):
        delta_a[i] = len(arcs)
        phi_a[len(arcs)] = amap[i]
        arcs.append((("ball", s), ("ball", t)))
    for v in bg.vertices:
        if not ball.inner(v):
            for b in base.in_arcs[vmap[v]]:
                phi_a[len(arcs)] = b
                arcs.append((("base", base.arcs[b][0]), ("ball", v)))
    for j, (s, t) in enumerate(base.arcs):
        phi_a[len(arcs)] = j
        arcs.append((("base", s), ("base", t)))
    total = LabeledDigraph(tuple(verts), tuple(arcs), tuple(labels))
    phi_v = {("ball", v): vmap[v] for v in bg.vertices}
    phi_v.update({("base", y): y for y in base.vertices})
    phi = DigraphMorphism(phi_v, phi_a)
    delta = DigraphMorphism({v: ("ball", v) for v in bg.vertices}, delta_a)
    return total, phi, ("ball", ball.center), delta


def check_quasi_fibration(
    k: LabeledDigraph,
    h: LabeledDigraph,
    v,
    r: int,
    search_bound: int | None = None,
    target=None,
    verify: bool = False,
) -> QuasiFibration:
    """Is ``k`` a quasi-fibration of ``h`` of centre ``v`` and radius ``r``?

    ``target`` pins the image of the centre. ``search_bound`` caps the number
    of backtracking nodes; hitting it gives an UNKNOWN verdict. With
    ``verify`` the witness is re-checked with ``check_fibration`` and an
    explicit in-ball comparison before returning."""
    ball = in_ball(k, v, r)
    try:
        found = next(_local_fibrations(ball, h, target, search_bound), None)
    except _Budget:
        return QuasiFibration(Verdict.UNKNOWN, ball, explored=search_bound or 0)
    if found is None:
        return QuasiFibration(Verdict.NO, ball)
    vmap, amap = found
    gamma = DigraphMorphism(vmap, amap)
    total, phi, w, delta = _witness(ball, h, vmap, amap)
    result = QuasiFibration(Verdict.YES, ball, gamma, total, phi, w, delta)
    if verify:
        verify_quasi_fibration(result, h)
    return result


def verify_quasi_fibration(q: QuasiFibration, h: LabeledDigraph) -> None:
    """Independent re-check of a YES witness; raises GraphError on failure."""
    ball = q.ball
    validate_morphism(ball.graph, h, q.gamma)
    if not check_fibration(q.total, h, q.phi):
        raise GraphError("witness total digraph is not a fibration of the base")
    other = in_ball(q.total, q.w, ball.radius)
    iso = find_isomorphism(ball.graph, other.graph, fixed={ball.center: q.w})
    if iso is None:
        raise GraphError("ball of the witness is not isomorphic to the ball of k")
    for x in ball.graph.vertices:
        if q.phi.vertex_map[q.delta.vertex_map[x]] != q.gamma.vertex_map[x]:
            raise GraphError("gamma differs from phi o delta")


# -- families --------------------------------------------------------------------


@dataclass(frozen=True)
class PointedFamily:
    """A family of digraphs with a deterministic enumeration of its pointed
    members. ``size`` is the number of valid indices (None when unbounded)."""

    name: str
    membership: Callable[[LabeledDigraph], bool]
    enumerator: Callable[[int], tuple]
    size: int | None = None

    def __iter__(self):
        i = 0
        while self.size is None or i < self.size:
            yield self.enumerator(i)
            i += 1

    def graphs(self) -> list:
        out = []
        for g, _ in self:
            if not out or out[-1] is not g:
                out.append(g)
        return out


def finite_family(name: str, members: Sequence[LabeledDigraph]) -> PointedFamily:
    """Family enumerated member-major, vertex-minor in the given order."""
    members = tuple(members)
    flat = [(g, v) for g in members for v in g.vertices]
    keys = {_shape_key(g) for g in members}

    def membership(x):
        if _shape_key(x) not in keys:
            return False
        return any(find_isomorphism(x, g) is not None for g in members)

    def enumerator(i):
        if not 0 <= i < len(flat):
            raise IndexError(f"index {i} outside family {name!r} of size {len(flat)}")
        return flat[i]

    return PointedFamily(name, membership, enumerator, len(flat))


def _shape_key(g):
    return (len(g.vertices), len(g.arcs))


def ring_family(sizes: Iterable[int], labeling: Callable[[int], Sequence] | None = None, name=None) -> PointedFamily:
    """Directed rings of the given sizes; ``labeling(n)`` gives the labels."""
    sizes = list(sizes)
    members = [ring(n, labeling(n) if labeling else None) for n in sizes]
    return finite_family(name or f"rings{sizes}", members)


def single_b_ring(n: int, plain="a", marked="b") -> LabeledDigraph:
    """Ring labelled a, ..., a, b (the last vertex carries the mark)."""
    return ring(n, [plain] * (n - 1) + [marked])


def enumerate_family(fam: PointedFamily, index: int) -> tuple:
    if index < 0 or (fam.size is not None and index >= fam.size):
        raise IndexError(f"index {index} outside family {fam.name!r}")
    return fam.enumerator(index)


# -- small digraph generation ----------------------------------------------------


def small_digraphs(n: int, labels: Sequence = ("",), loops: bool = False, connected: bool = True) -> list:
    """All simple labelled digraphs on ``n`` vertices up to isomorphism.

    Brute-force canonical codes over all vertex permutations; meant for
    n <= 4 (n = 5 without loops and one label is still fine)."""
    pairs = [(i, j) for i in range(n) for j in range(n) if loops or i != j]
    perms = list(itertools.permutations(range(n)))
    labels = list(labels)
    seen = set()
    found = []
    for labs in itertools.product(range(len(labels)), repeat=n):
        for mask in range(1 << len(pairs)):
            arcs = [pairs[b] for b in range(len(pairs)) if mask >> b & 1]
            code = _code(n, labs, arcs)
            if code in seen:
                continue
            variants = {_code(n, [labs[p.index(i)] for i in range(n)], [(p[s], p[t]) for s, t in arcs]) for p in perms}
            seen.update(variants)
            g = LabeledDigraph(tuple(range(n)), tuple(arcs), tuple(labels[x] for x in labs))
            if connected and not is_strongly_connected(g):
                continue
            found.append(g)
    return found


def _code(n, labs, arcs):
    bits = 0
    for s, t in arcs:
        bits |= 1 << (s * n + t)
    return (tuple(labs), bits)


# -- file format -----------------------------------------------------------------


def dumps_graph(g: LabeledDigraph) -> str:
    """Text form: a header line, then one tab-separated record per vertex
    and per arc, every field a JSON scalar."""
    for v in g.vertices:
        if not isinstance(v, (int, str)) or isinstance(v, bool):
            raise GraphError(f"vertex {v!r}: only int or str identifiers can be written")
    enc = json.dumps
    lines = [f"{FORMAT_TAG}\t{FORMAT_VERSION}", f"vertices\t{len(g.vertices)}"]
    lines += [f"v\t{enc(v)}\t{enc(l)}" for v, l in zip(g.vertices, g.labels)]
    lines.append(f"arcs\t{len(g.arcs)}")
    lines += [f"a\t{enc(s)}\t{enc(t)}\t{i}" for i, (s, t) in enumerate(g.arcs)]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> LabeledDigraph:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise GraphError("empty graph document")
    head = lines[0].split("\t")
    if head[0] != FORMAT_TAG or len(head) != 2:
        raise GraphError("missing graph header")
    if int(head[1]) != FORMAT_VERSION:
        raise GraphError(f"unsupported graph format version {head[1]}")
    rest = deque(lines[1:])

    def section(name):
        fields = rest.popleft().split("\t")
        if fields[0] != name or len(fields) != 2:
            raise GraphError(f"expected '{name}' section")
        return int(fields[1])

    vertices, labels, arcs = [], [], []
    for _ in range(section("vertices")):
        f = rest.popleft().split("\t")
        if f[0] != "v" or len(f) != 3:
            raise GraphError(f"bad vertex record {f!r}")
        vertices.append(json.loads(f[1]))
        labels.append(json.loads(f[2]))
    for expect in range(section("arcs")):
        f = rest.popleft().split("\t")
        if f[0] != "a" or len(f) != 4:
            raise GraphError(f"bad arc record {f!r}")
        if int(f[3]) != expect:
            raise GraphError(f"arc indices must be consecutive, got {f[3]} for {expect}")
        arcs.append((json.loads(f[1]), json.loads(f[2])))
    if rest:
        raise GraphError("trailing records after arc list")
    return LabeledDigraph(tuple(vertices), tuple(arcs), tuple(labels))


def read_graph(path) -> LabeledDigraph:
    with open(path, encoding="utf-8") as fh:
        return loads_graph(fh.read())


def write_graph(g: LabeledDigraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_graph(g))
