"""Pure-Python versions of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and the same results; ``snapstab.kernels`` picks one at import.
Graphs are passed in CSR form over vertex positions: the in-arcs of vertex
``i`` have sources ``in_src[in_ptr[i]:in_ptr[i + 1]]`` in arc-index order.
"""


def refine_colors(in_ptr, in_src, colors):
    """Coarsest partition refining ``colors`` that is stable under in-neighbour
    colour multisets. Classes are renumbered by first appearance."""
    n = len(colors)
    current = list(colors)
    count = -1
    while True:
        table = {}
        fresh = [0] * n
        for v in range(n):
            srcs = sorted(current[in_src[k]] for k in range(in_ptr[v], in_ptr[v + 1]))
            key = (current[v], tuple(srcs))
            c = table.get(key)
            if c is None:
                c = len(table)
                table[key] = c
            fresh[v] = c
        if len(table) == count:
            return fresh
        count = len(table)
        current = fresh


def reverse_distances(in_ptr, in_src, center, radius):
    """Length of the shortest dipath from each vertex to ``center``, or -1 when
    it exceeds ``radius``."""
    n = len(in_ptr) - 1
    dist = [-1] * n
    dist[center] = 0
    frontier = [center]
    d = 0
    while frontier and d < radius:
        d += 1
        nxt = []
        for v in frontier:
            for k in range(in_ptr[v], in_ptr[v + 1]):
                u = in_src[k]
                if dist[u] < 0:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def influence_update(influenced, activated, in_ptr, in_src):
    """One step of causal influence: an activated vertex joins when one of its
    in-neighbours was influenced before the step. Both masks are bytearrays."""
    out = bytearray(influenced)
    for v in activated:
        if influenced[v]:
            continue
        for k in range(in_ptr[v], in_ptr[v + 1]):
            if influenced[in_src[k]]:
                out[v] = 1
                break
    return out


def _renaming_wanted(lam, n, view, m0):
    if n == 0:
        return True
    mine = (lam, view)
    for name, lab, v in m0:
        if name == n and mine < (lab, v):
            return True
        if v.count(n) >= 2:
            return True
    return False


def enum_select(center, nbrs, requested, limit, literal, pending):
    """Index of the first activable enumeration rule at ``center`` or -1.

    Rule order: 0 request reset, 1 flooding, 2 renaming, 3 counter reset,
    4 counter increment, 5 output. ``pending(center)`` tells whether an
    output is due; it is only called when the ball's mailboxes agree."""
    if requested:
        return 0
    mem = center.mem
    m0 = mem.mailbox
    n0 = mem.n
    a0 = mem.a
    view = tuple(sorted([s.mem.n for s in nbrs], reverse=True))
    allm = True
    grows = False
    for s in nbrs:
        m = s.mem.mailbox
        if m is not m0 and m != m0:
            allm = False
            if not m <= m0:
                grows = True
    own = (n0, center.lam, view) not in m0
    if not allm or own or mem.view != view:
        if grows or own or mem.view != view or a0 != -1 or mem.done:
            return 1
    if allm and _renaming_wanted(center.lam, n0, view, m0):
        return 2
    if a0 != -1:
        if not allm:
            return 3
        for s in nbrs:
            d = s.mem.a - a0
            if d <= -2 or (literal and d >= 2):
                return 3
    if not allm:
        return -1
    if pending(center):
        return 5
    if a0 < limit:
        for s in nbrs:
            b = s.mem.a
            if b < a0 or (literal and b > a0 + 1):
                return -1
        return 4
    return -1
