# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the kernels in ``_kernels_py``; same signatures."""


def refine_colors(in_ptr, in_src, colors):
    cdef Py_ssize_t n = len(colors)
    cdef Py_ssize_t v, k, lo, hi
    cdef list current = list(colors)
    cdef list fresh
    cdef dict table
    cdef Py_ssize_t count = -1
    cdef list ptr = list(in_ptr)
    cdef list src = list(in_src)
    while True:
        table = {}
        fresh = [0] * n
        for v in range(n):
            lo = ptr[v]
            hi = ptr[v + 1]
            srcs = sorted([current[src[k]] for k in range(lo, hi)])
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


def reverse_distances(in_ptr, in_src, Py_ssize_t center, radius):
    cdef Py_ssize_t n = len(in_ptr) - 1
    cdef list dist = [-1] * n
    cdef list frontier = [center]
    cdef list nxt
    cdef Py_ssize_t d = 0, k, u, v
    cdef list ptr = list(in_ptr)
    cdef list src = list(in_src)
    dist[center] = 0
    while frontier and d < radius:
        d += 1
        nxt = []
        for v in frontier:
            for k in range(<Py_ssize_t>ptr[v], <Py_ssize_t>ptr[v + 1]):
                u = src[k]
                if <Py_ssize_t>dist[u] < 0:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def influence_update(influenced, activated, in_ptr, in_src):
    cdef bytearray out = bytearray(influenced)
    cdef const unsigned char[:] before = influenced
    cdef Py_ssize_t v, k
    for v in activated:
        if before[v]:
            continue
        for k in range(<Py_ssize_t>in_ptr[v], <Py_ssize_t>in_ptr[v + 1]):
            if before[<Py_ssize_t>in_src[k]]:
                out[v] = 1
                break
    return out


cdef bint _renaming_wanted(object lam, long n, tuple view, frozenset m0):
    cdef tuple e
    cdef tuple v
    if n == 0:
        return True
    mine = (lam, view)
    for e in m0:
        v = <tuple>e[2]
        if e[0] == n and mine < (e[1], v):
            return True
        if v.count(n) >= 2:
            return True
    return False


def enum_select(center, tuple nbrs, bint requested, long limit, bint literal, pending):
    cdef long n0, a0, b, d
    cdef bint allm = True, grows = False, own, stale
    cdef frozenset m0, m
    cdef tuple view
    cdef list names
    if requested:
        return 0
    mem = center.mem
    m0 = mem.mailbox
    n0 = mem.n
    a0 = mem.a
    names = [s.mem.n for s in nbrs]
    names.sort(reverse=True)
    view = tuple(names)
    for s in nbrs:
        m = s.mem.mailbox
        if m is not m0 and m != m0:
            allm = False
            if not m <= m0:
                grows = True
    own = (n0, center.lam, view) not in m0
    stale = mem.view != view
    if not allm or own or stale:
        if grows or own or stale or a0 != -1 or mem.done:
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
