import pytest
from algos import max_counter

from snapstab.engine import Algorithm, Corruption, DaemonPolicy, Rule
from snapstab.graph import check_quasi_fibration, finite_family, ring, single_b_ring
from snapstab.lcr import election_task, lcr_algorithm, size_task
from snapstab.tasks import (
    INF,
    ConditionError,
    OutputRadiusPair,
    TaskSpec,
    broken_size_pair,
    check_output_function,
    check_r_lifting_closed,
    constant_pair,
    in_degree_pair,
    separation_radius,
    single_b_family,
    size_pair_for,
    small_universe,
    unlabelled_rings,
    verify_self_stabilizing,
    verify_snap_stabilizing,
)


def three_ring_task():
    return size_task(finite_family("3-ring", [ring(3)]))


def test_size_output_function_passes():
    pair = constant_pair(3, 1)
    assert check_output_function(pair, three_ring_task(), 5)


def test_wrong_constant_fails_with_witness():
    res = check_output_function(constant_pair(4, 1), three_ring_task(), 5)
    assert not res
    g, outs = res.witness
    assert outs == (4, 4, 4)


def test_election_by_refinement_class():
    # fibration-minimal rings: every vertex is alone in its class, mark the b
    fam = finite_family("b-rings", [single_b_ring(n) for n in (3, 4, 5)])
    pair = OutputRadiusPair("mark-b", lambda g, v: "ELECTED" if g.label_of[v] == "b" else "-", lambda g, v: 1)
    task = TaskSpec("election", fam, lambda g, outs: outs.count("ELECTED") == 1)
    assert check_output_function(pair, task, 5)


def test_condition_one_is_enforced():
    pair = OutputRadiusPair("bad", lambda g, v: None, lambda g, v: 2)
    with pytest.raises(ConditionError):
        pair.evaluate(ring(3), 0)
    with pytest.raises(ConditionError):
        OutputRadiusPair("bad", lambda g, v: 1, lambda g, v: INF).evaluate(ring(3), 0)


def test_constant_pair_is_lifting_closed():
    assert check_r_lifting_closed(constant_pair("x", 2), 4, 4)


def test_in_degree_pair_is_lifting_closed():
    res = check_r_lifting_closed(in_degree_pair(), 5, 5, universe=small_universe(5))
    assert res and res.unknown == 0


def test_broken_size_pair_has_witness():
    res = check_r_lifting_closed(broken_size_pair(), 6, 6, universe=unlabelled_rings(6))
    assert not res
    w = res.witness
    assert len(w.k.vertices) != len(w.h.vertices)
    # the witness really is a quasi-fibration at the reported radius
    assert check_quasi_fibration(w.k, w.h, w.v, w.radius, target=w.image)


def test_separation_radius_oracle():
    """Independent oracle: the radius-k in-ball of a ring vertex is a path
    while k < n, whose labels read backwards must occur in the other ring;
    from k = n on a cycle appears and only divisibility of sizes helps."""
    fam = single_b_family()
    members = fam.graphs()

    def window(g, v, k):
        n = len(g.vertices)
        return tuple(g.labels[(v - i) % n] for i in range(k + 1))

    def fits(kg, hg, k):
        m, n = len(kg.vertices), len(hg.vertices)
        if k >= m:
            return m % n == 0 and any(window(kg, 0, m - 1) == window(hg, w, m - 1) for w in hg.vertices)
        return any(window(kg, v, k) in {window(hg, w, k) for w in hg.vertices} for v in kg.vertices)

    for h in members:
        expect = next(k for k in range(40) if not any(fits(o, h, k) or fits(h, o, k) for o in members if o is not h))
        assert separation_radius(members, h) == expect
    pair = size_pair_for(fam)
    assert [pair.r(g, 0) for g in members] == [5, 5, 5]


def test_size_pair_is_lifting_closed():
    fam = single_b_family()
    assert check_r_lifting_closed(size_pair_for(fam), 5, 5, universe=fam.graphs())


# -- stabilization verdicts -------------------------------------------------------------


def silent_algorithm():
    return Algorithm(
        name="silent",
        rules=(Rule("Idle", lambda c, nb, req: req, lambda c, nb, req: (c.mem, c.out), consumes_request=True),),
        initial_mem=lambda g, v: 0,
        registers=lambda g, v: {"x": (0,)},
        assemble=lambda f: f["x"],
    )


def test_never_writing_violates_decision():
    g = ring(3)
    task = three_ring_task()
    rep = verify_snap_stabilizing(silent_algorithm(), task, g, DaemonPolicy("synchronous"), Corruption("random", count=1), budget=20)
    assert not rep.ok and rep.witness[0] == "decision"


def test_counter_exhaustive_verdicts():
    g = ring(3)
    done = TaskSpec("all-done", finite_family("3-ring", [g]), lambda g, outs: all(o == "done" for o in outs))
    snap = verify_snap_stabilizing(max_counter(3), done, g, "asynchronous", Corruption("exhaustive"),
                                   requests=[tuple(g.vertices)])
    assert snap.ok and snap.exhaustive and snap.runs == 4 ** 3
    assert verify_self_stabilizing(max_counter(3), done, g, "asynchronous", Corruption("exhaustive")).ok
    # a corrupted "done" is never rewritten, so the decision clause fails
    dirty = verify_snap_stabilizing(max_counter(3), done, g, "asynchronous", Corruption("exhaustive", corrupt_out=True),
                                    requests=[tuple(g.vertices)])
    assert not dirty.ok and dirty.witness[0] == "decision"


def test_snap_pass_implies_self_pass():
    inst = ring(4, [2, 4, 1, 3])
    task = election_task(finite_family("r", [inst]))
    for seed in range(3):
        d = DaemonPolicy("asynchronous", seed)
        c = Corruption("random", seed=seed, count=10)
        snap = verify_snap_stabilizing(lcr_algorithm(4), task, inst, d, c, budget=500, window=16)
        self_ = verify_self_stabilizing(lcr_algorithm(4), task, inst, d, c, budget=500, window=16,
                                        requests=[tuple(inst.vertices)])
        assert not snap.ok or self_.ok
