import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapstab.graph import (
    DigraphMorphism,
    GraphError,
    InvalidMorphism,
    LabeledDigraph,
    Verdict,
    check_fibration,
    check_quasi_fibration,
    diameter,
    dir_of,
    dumps_graph,
    enumerate_family,
    find_isomorphism,
    finite_family,
    identity_morphism,
    in_ball,
    is_strongly_connected,
    is_subdigraph,
    loads_graph,
    loop,
    minimal_base,
    read_graph,
    ring,
    ring_family,
    small_digraphs,
    verify_quasi_fibration,
    write_graph,
)


def brute_ball(g, v, r):
    """Vertices and arc indices on some dipath of length <= r ending at v."""
    verts, arcs = {v}, set()
    seen = {(v, 0)}
    todo = [(v, 0)]
    while todo:
        x, d = todo.pop()
        if d == r:
            continue
        for i, (s, t) in enumerate(g.arcs):
            if t != x:
                continue
            arcs.add(i)
            verts.add(s)
            if (s, d + 1) not in seen:
                seen.add((s, d + 1))
                todo.append((s, d + 1))
    return verts, arcs


# -- construction -----------------------------------------------------------------


def test_undeclared_endpoint_rejected():
    with pytest.raises(GraphError):
        LabeledDigraph.build([0, 1], [(0, 2)])


def test_dir_of_triangle():
    g = dir_of([0, 1, 2], [(0, 1), (1, 2), (2, 0)])
    assert len(g.vertices) == 3 and len(g.arcs) == 6


def test_dir_of_single_vertex():
    g = dir_of(["x"], [])
    assert g.vertices == ("x",) and g.arcs == ()


def test_dir_of_path_keeps_labels():
    g = dir_of(["a", "b"], [("a", "b")], ["x", "y"])
    assert sorted(g.arcs) == [("a", "b"), ("b", "a")]
    assert g.labels == ("x", "y")


def test_strong_connectivity():
    assert is_strongly_connected(ring(4))
    assert not is_strongly_connected(LabeledDigraph.build([0, 1], [(0, 1)]))


# -- in-balls ---------------------------------------------------------------------


def test_in_ball_radius_one_on_ring():
    b = in_ball(ring(3), 0, 1)
    assert set(b.graph.vertices) == {2, 0}
    assert len(b.graph.arcs) == 1


def test_in_ball_radius_zero():
    b = in_ball(ring(5), 3, 0)
    assert b.graph.vertices == (3,) and b.graph.arcs == ()


def test_in_ball_radius_two_skips_closing_arc():
    b = in_ball(ring(3), 0, 2)
    assert set(b.graph.vertices) == {0, 1, 2}
    assert sorted(b.graph.arcs) == [(1, 2), (2, 0)]


def test_in_ball_unknown_vertex():
    with pytest.raises(GraphError):
        in_ball(ring(3), 7, 1)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([g for n in (1, 2, 3) for g in small_digraphs(n, loops=True)]), st.data())
def test_in_ball_matches_dipath_enumeration(g, data):
    v = data.draw(st.sampled_from(g.vertices))
    r = data.draw(st.integers(0, 4))
    verts, arcs = brute_ball(g, v, r)
    b = in_ball(g, v, r)
    assert set(b.graph.vertices) == verts
    assert set(b.arc_origin) == arcs
    # monotone in the radius
    assert is_subdigraph(b.graph, in_ball(g, v, r + 1).graph)


# -- fibrations and bases -----------------------------------------------------------


def to_loop(n):
    return DigraphMorphism({i: 0 for i in range(n)}, {i: 0 for i in range(n)})


def test_ring_fibres_over_loop():
    assert check_fibration(ring(5), loop(), to_loop(5))


def test_identity_is_fibration():
    g = dir_of([0, 1, 2], [(0, 1), (1, 2)])
    assert check_fibration(g, g, identity_morphism(g))


def test_parallel_arcs_break_uniqueness():
    two = LabeledDigraph.build([0, 1], [(0, 1), (0, 1), (1, 0)])
    one = LabeledDigraph.build([0, 1], [(0, 1), (1, 0)])
    m = DigraphMorphism({0: 0, 1: 1}, {0: 0, 1: 0, 2: 1})
    assert not check_fibration(two, one, m)


def test_invalid_morphism_reported_distinctly():
    g = ring(2, ["a", "b"])
    with pytest.raises(InvalidMorphism):
        check_fibration(g, loop("a"), to_loop(2))


def test_minimal_base_unlabelled_ring():
    base, phi = minimal_base(ring(6))
    assert len(base.vertices) == 1 and len(base.arcs) == 1
    assert check_fibration(ring(6), base, phi)


def test_minimal_base_alternating_ring():
    g = ring(4, list("abab"))
    base, phi = minimal_base(g)
    assert sorted(base.labels) == ["a", "b"] and len(base.arcs) == 2
    assert check_fibration(g, base, phi)


def test_minimal_base_of_fibration_minimal_ring():
    g = ring(3, list("aab"))
    base, _ = minimal_base(g)
    assert find_isomorphism(base, g) is not None


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([g for n in (1, 2, 3) for g in small_digraphs(n, ("a", "b"), loops=True)]))
def test_minimal_base_is_fibration_and_idempotent(g):
    base, phi = minimal_base(g)
    assert check_fibration(g, base, phi)
    again, _ = minimal_base(base)
    assert find_isomorphism(again, base) is not None


# -- isomorphism ---------------------------------------------------------------------


def test_isomorphism_identity_ring():
    m = find_isomorphism(ring(3), ring(3))
    assert m is not None


def test_isomorphism_size_mismatch():
    assert find_isomorphism(ring(3), ring(4)) is None


def test_isomorphism_finds_rotation():
    g = ring(3, list("aab"))
    h = ring(3, list("baa"))
    m = find_isomorphism(g, h)
    assert m is not None
    assert all(g.label_of[v] == h.label_of[m.vertex_map[v]] for v in g.vertices)
    # exhaustive 3! check: exactly one bijection works
    ok = [p for p in itertools.permutations(range(3))
          if all(g.labels[i] == h.labels[p[i]] for i in range(3))
          and sorted((p[s], p[t]) for s, t in g.arcs) == sorted(h.arcs)]
    assert ok == [tuple(m.vertex_map[i] for i in range(3))]


# -- quasi-fibrations ----------------------------------------------------------------


def test_fibration_is_quasi_fibration_at_any_radius():
    q = check_quasi_fibration(ring(6), loop(), 0, 3, 12)
    assert q.verdict is Verdict.YES
    verify_quasi_fibration(q, loop())


def test_identity_quasi_fibration():
    g = ring(4, list("aabb"))
    assert check_quasi_fibration(g, g, 1, 3, 16)


def test_three_ring_does_not_quasi_fibre_over_four_ring():
    assert check_quasi_fibration(ring(3), ring(4), 0, 3, 16).verdict is Verdict.NO


def test_short_radius_cannot_tell_rings_apart():
    # the radius-2 ball of a 3-ring is a path of length 2
    assert check_quasi_fibration(ring(3), ring(4), 0, 2, 16)


def test_unknown_when_search_bound_is_tiny():
    q = check_quasi_fibration(ring(3, list("aab")), ring(6, list("aabaab")), 0, 5, 1)
    assert q.verdict is Verdict.UNKNOWN


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([g for n in (1, 2, 3) for g in small_digraphs(n, ("a", "b"))]), st.data())
def test_quasi_fibration_beyond_diameter_is_fibration(g, data):
    base, phi = minimal_base(g)
    v = data.draw(st.sampled_from(g.vertices))
    r = diameter(g) + 1
    q = check_quasi_fibration(g, base, v, r, 64, verify=True)
    assert q
    # the base fibration also yields quasi-fibrations at every smaller radius
    for k in range(r):
        assert check_quasi_fibration(g, base, v, k, 64)


# -- families ------------------------------------------------------------------------


def test_ring_family_enumeration_convention():
    fam = ring_family([3, 4, 5])
    g, v = enumerate_family(fam, 0)
    assert len(g.vertices) == 3 and v == 0
    g, v = enumerate_family(fam, 4)
    assert len(g.vertices) == 4 and v == 1


def test_singleton_family_third_vertex():
    g = ring(3, list("aab"))
    fam = finite_family("aab", [g])
    assert enumerate_family(fam, 2) == (g, 2)
    with pytest.raises(IndexError):
        enumerate_family(fam, 3)


def test_family_membership_up_to_isomorphism():
    fam = finite_family("aab", [ring(3, list("aab"))])
    assert fam.membership(ring(3, list("aba")))
    assert not fam.membership(ring(3, list("abb")))


def test_enumeration_is_repeatable():
    fam = ring_family([3, 4])
    assert [enumerate_family(fam, i) for i in range(7)] == [enumerate_family(fam, i) for i in range(7)]


def test_small_digraph_counts():
    # strongly connected unlabelled digraphs without loops up to isomorphism: 1, 1, 5, 83
    assert [len(small_digraphs(n)) for n in (1, 2, 3, 4)] == [1, 1, 5, 83]


# -- file format ---------------------------------------------------------------------


def test_graph_round_trip(tmp_path):
    g = LabeledDigraph.build(["x", 1], [("x", 1), (1, "x"), (1, "x"), (1, 1)], ["a", "b c"])
    text = dumps_graph(g)
    assert loads_graph(text) == g
    assert dumps_graph(loads_graph(text)) == text
    p = tmp_path / "g.txt"
    write_graph(g, p)
    assert p.read_bytes() == text.encode()
    assert read_graph(p) == g


@pytest.mark.parametrize("text", ["", "nope\t1\n", "snapstab-graph\t9\n", "snapstab-graph\t1\nvertices\t1\nv\t0\t\"\"\narcs\t1\na\t0\t0\t5\n"])
def test_graph_parse_errors(text):
    with pytest.raises(GraphError):
        loads_graph(text)
