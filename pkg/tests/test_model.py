from itertools import combinations
from math import gcd

import numpy as np
import pytest
from hypothesis import given

from multisteady import fixtures
from multisteady.decompose import (
    check_well_formed,
    is_strongly_connected,
    mec_decompose,
    normal_form,
    period_and_classes,
)
from multisteady.errors import InvalidM, NotStronglyConnected
from multisteady.model import Coloring, Mdp, Objective, augment_memory, validate

from conftest import random_graph, sc_mdps


# -- validate -----------------------------------------------------------------

def test_single_loop_is_valid():
    assert validate(fixtures.single_loop()).ok


def test_sink_vertex_reported():
    mdp = Mdp((False, False), ((1,), ()))
    assert "sink vertex" in validate(mdp).kinds()


def test_distribution_sum_reported():
    mdp = Mdp((True, False), ((0, 1), (0,)), {0: {0: 0.5, 1: 0.4}})
    assert "distribution sum" in validate(mdp).kinds()


def test_duplicate_edge_and_id_reported():
    mdp = Mdp((False, False), ((1, 1), (0,)), labels=("a", "a"))
    kinds = validate(mdp).kinds()
    assert "duplicate edge" in kinds
    assert "duplicate vertex id" in kinds


def test_every_violation_listed():
    mdp = Mdp((True, False, False), ((0, 1), (), (2, 2)), {0: {0: 0.5, 1: 0.4}})
    assert {"distribution sum", "sink vertex", "duplicate edge"} <= validate(mdp).kinds()


def test_fixtures_valid():
    for mdp in (fixtures.d1(), fixtures.d2(), fixtures.d3(), fixtures.three_state_line(),
                fixtures.transient_middle(), fixtures.ring(5), fixtures.layered([2, 3, 1])):
        assert validate(mdp).ok


def test_objective_defaults_to_zero():
    col = Coloring.trivial(fixtures.d1())
    obj = Objective.from_dict(col, {"v1": 0.3})
    assert obj.targets == (0.3, 0.0)


def test_objective_range_checked():
    col = Coloring.trivial(fixtures.d1())
    with pytest.raises(ValueError):
        Objective.from_dict(col, {"v1": 1.5})


# -- MEC decomposition ----------------------------------------------------------

def _is_end_component(mdp: Mdp, S: frozenset) -> bool:
    inner = {}
    for v in S:
        if mdp.stochastic[v]:
            if not set(mdp.succ[v]) <= S:
                return False
            inner[v] = list(mdp.succ[v])
        else:
            inner[v] = [u for u in mdp.succ[v] if u in S]
            if not inner[v]:
                return False
    verts = sorted(S)
    index = {v: i for i, v in enumerate(verts)}
    edges = [(index[v], index[u]) for v in verts for u in inner[v]]
    return is_strongly_connected(len(verts), edges)


def brute_force_mecs(mdp: Mdp) -> set[frozenset]:
    ecs = [
        frozenset(S)
        for r in range(1, mdp.n + 1)
        for S in combinations(range(mdp.n), r)
        if _is_end_component(mdp, frozenset(S))
    ]
    return {S for S in ecs if not any(S < T for T in ecs)}


def random_mdp(rng: np.random.Generator, n: int) -> Mdp:
    p = rng.uniform(0.1, 0.5)
    succ = []
    for v in range(n):
        out = [u for u in range(n) if rng.random() < p] or [int(rng.integers(n))]
        succ.append(tuple(out))
    stochastic = tuple(bool(rng.random() < 0.4) for _ in range(n))
    prob = {v: {u: 1.0 / len(succ[v]) for u in succ[v]} for v in range(n) if stochastic[v]}
    return Mdp(stochastic, tuple(succ), prob)


def test_mec_examples():
    two_cycles = Mdp.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    dec = mec_decompose(two_cycles)
    assert [m.vertices for m in dec.mecs] == [(0, 1), (2, 3)]
    assert dec.transient == []

    dec = mec_decompose(fixtures.transient_middle())
    assert [m.vertices for m in dec.mecs] == [(0,), (2,)]
    assert dec.transient == [1]

    dec = mec_decompose(fixtures.ring(5))
    assert [m.vertices for m in dec.mecs] == [tuple(range(5))]


def test_mec_matches_exhaustive_search():
    rng = np.random.default_rng(7)
    for _ in range(300):
        mdp = random_mdp(rng, int(rng.integers(1, 8)))
        dec = mec_decompose(mdp)
        assert {frozenset(m.vertices) for m in dec.mecs} == brute_force_mecs(mdp)
        for q, m in enumerate(dec.mecs):
            assert all(dec.membership[v] == q for v in m.vertices)
        # deterministic order by smallest contained vertex
        firsts = [min(m.vertices) for m in dec.mecs]
        assert firsts == sorted(firsts)


def test_mec_keeps_stochastic_successors():
    rng = np.random.default_rng(8)
    for _ in range(200):
        mdp = random_mdp(rng, int(rng.integers(1, 9)))
        for m in mec_decompose(mdp).mecs:
            for v in m.vertices:
                if mdp.stochastic[v]:
                    assert set(m.succ[v]) == set(mdp.succ[v])


def test_normal_form_idempotent():
    rng = np.random.default_rng(9)
    for _ in range(200):
        mdp = random_mdp(rng, int(rng.integers(1, 9)))
        if not mec_decompose(mdp).mecs:
            continue
        nf = normal_form(mdp)
        again = mec_decompose(nf.mdp)
        assert [m.vertices for m in again.mecs] == list(nf.components)
        assert again.transient == []


def test_normal_form_of_transient_example():
    nf = normal_form(fixtures.transient_middle())
    assert nf.components == ((0,), (1,))
    assert nf.old_of_new == (0, 2)
    assert nf.mdp.succ == ((0,), (1,))


def test_normal_form_keeps_strongly_connected_input():
    mdp = fixtures.three_state_line()
    nf = normal_form(mdp)
    assert nf.mdp.succ == mdp.succ
    assert nf.old_of_new == (0, 1, 2)


# -- period and cyclic classes -------------------------------------------------------

def closed_walk_gcd(mdp: Mdp) -> int:
    """gcd of the lengths l <= n with a closed walk of length l (equals the cycle-length gcd)."""
    n = mdp.n
    A = np.zeros((n, n), dtype=np.int64)
    for v, u in mdp.edges():
        A[v, u] = 1
    power = np.eye(n, dtype=np.int64)
    d = 0
    for length in range(1, n + 1):
        power = (power @ A > 0).astype(np.int64)
        if np.trace(power) > 0:
            d = gcd(d, length)
    return d


def test_period_examples():
    s = period_and_classes(fixtures.ring(3))
    assert s.period == 3
    assert sorted(map(sorted, s.classes)) == [[0], [1], [2]]
    assert period_and_classes(fixtures.d1()).period == 1
    sizes = [2, 3, 1, 2, 4]
    s = period_and_classes(fixtures.layered(sizes))
    assert s.period == 5
    layers = np.repeat(np.arange(5), sizes)
    assert all(s.class_of[v] == layers[v] for v in range(len(layers)))


def test_period_rejects_disconnected():
    with pytest.raises(NotStronglyConnected):
        period_and_classes(Mdp.from_edges(2, [(0, 0), (1, 1)]))


def test_period_against_cycle_gcd_10000_graphs():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        n = int(rng.integers(1, 13))
        mdp = random_graph(rng, n, float(rng.choice([0.0, 0.05, 0.1, 0.2, 0.4])))
        s = period_and_classes(mdp)
        assert s.period == closed_walk_gcd(mdp)
        assert s.class_of[0] == 0
        for v, u in mdp.edges():
            assert s.class_of[u] == (s.class_of[v] + 1) % s.period
        assert sorted(v for c in s.classes for v in c) == list(range(n))


# -- well-formed colorings -----------------------------------------------------------

def test_well_formed_examples():
    two = Mdp.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    nf = normal_form(two)
    assert check_well_formed(nf, Coloring.trivial(nf.mdp)).ok
    shared = Coloring.from_map(["c", "a", "c", "b"])
    assert check_well_formed(nf, nf.coloring(shared)).offending == {"c": (0, 1)}
    single = normal_form(fixtures.d2())
    assert check_well_formed(single, Coloring.from_map(["x", "x", "y"])).ok


# -- memory augmentation --------------------------------------------------------------

def test_augment_d2_counts():
    aug = augment_memory(fixtures.d2(), 2)
    assert aug.mdp.n == 6
    # each of the 4 edges yields m*m = 4 augmented edges
    assert aug.mdp.num_edges == 16
    for w in range(aug.mdp.n):
        v, i = aug.split(w)
        assert aug.vertex(v, i) == w
        assert {aug.split(x)[0] for x in aug.mdp.succ[w]} == set(fixtures.d2().succ[v])


def test_augment_identity_for_m1():
    mdp = fixtures.transient_middle()
    aug = augment_memory(mdp, 1)
    assert aug.mdp.succ == mdp.succ
    assert aug.mdp.stochastic == mdp.stochastic
    assert aug.mdp.prob == mdp.prob
    assert aug.constraints == ()


def test_augment_stochastic_constraints():
    mdp = fixtures.transient_middle()
    aug = augment_memory(mdp, 2)
    assert not any(aug.mdp.stochastic)
    cons = [c for c in aug.constraints if c.source == aug.vertex(1, 2)]
    assert {(c.successor, c.targets, c.prob) for c in cons} == {
        (0, (0, 1), 0.5),
        (2, (4, 5), 0.5),
    }
    good = {aug.vertex(1, i): {0: 0.25, 1: 0.25, 4: 0.5} for i in (1, 2)}
    assert aug.constraint_violations(good) == []
    bad = {aug.vertex(1, i): {0: 0.5, 4: 0.5, 5: 0.0} for i in (1, 2)}
    assert aug.constraint_violations(bad) == []
    worse = {aug.vertex(1, i): {0: 0.9, 4: 0.1} for i in (1, 2)}
    assert len(aug.constraint_violations(worse)) == 4


def test_augment_rejects_bad_m():
    for m in (0, -1):
        with pytest.raises(InvalidM):
            augment_memory(fixtures.d1(), m)


@given(mdp=sc_mdps(max_n=5))
def test_augment_preserves_strong_connectivity(mdp):
    for m in (1, 2, 3):
        aug = augment_memory(mdp, m).mdp
        assert is_strongly_connected(aug.n, aug.edges())
