import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multisteady import fixtures
from multisteady.chain import (
    FrequencyVector,
    MrStrategy,
    Profile,
    alt_dist,
    cropped_linf,
    dist,
    evaluate_full_profile,
    evaluate_irreducible_profile,
    induced_chain,
    invariant_distribution,
)
from multisteady.decompose import is_strongly_connected, normal_form
from multisteady.errors import (
    CapExceeded,
    ColorMismatch,
    LcmCapExceeded,
    NotFull,
    NotWellFormed,
    ReducibleChain,
)
from multisteady.model import Coloring, Mdp, Objective
from multisteady.oracle import gth_stationary, product_chain_frequencies

from conftest import (
    random_full_strategy,
    random_irreducible_strategy,
    random_sc_mdp,
    sc_mdps,
    seeds,
    strategy_period,
)


def _profile(mdp: Mdp, strategies) -> tuple:
    nf = normal_form(mdp)
    assert nf.old_of_new == tuple(range(mdp.n))
    return nf, Profile.in_normal_form(nf, strategies)


def random_coloring(rng: np.random.Generator, n: int) -> Coloring:
    return Coloring.from_map([f"c{int(rng.integers(n))}" for _ in range(n)])


# -- induced chain and invariant distribution -----------------------------------

def test_induced_chain_examples():
    half = MrStrategy(0, {0: {0: 0.5, 1: 0.5}})
    assert np.array_equal(induced_chain(fixtures.d1(), half).matrix, [[0.5, 0.5], [1.0, 0.0]])
    P = induced_chain(fixtures.ring(3), MrStrategy(0, {})).matrix
    assert np.array_equal(P, [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    mdp = fixtures.transient_middle()
    P = induced_chain(mdp, MrStrategy(0, {0: {0: 0.5, 1: 0.5}, 2: {2: 1.0}})).matrix
    assert np.array_equal(P[1], [0.5, 0.0, 0.5])


def test_invariant_distribution_examples():
    assert np.allclose(invariant_distribution(np.array([[0.5, 0.5], [1.0, 0.0]])), [2 / 3, 1 / 3], atol=1e-15)
    P = induced_chain(fixtures.ring(5), MrStrategy(0, {})).matrix
    assert np.allclose(invariant_distribution(P), 0.2, atol=1e-15)
    assert invariant_distribution(np.array([[1.0]])).tolist() == [1.0]


def test_invariant_distribution_rejects_reducible():
    with pytest.raises(ReducibleChain):
        invariant_distribution(np.array([[1.0, 0.0], [0.0, 1.0]]))


@given(mdp=sc_mdps(max_n=8), seed=seeds)
def test_invariant_distribution_properties(mdp, seed):
    rng = np.random.default_rng(seed)
    P = induced_chain(mdp, random_full_strategy(rng, mdp)).matrix
    inv = invariant_distribution(P)
    assert (inv >= 0).all()
    assert abs(inv.sum() - 1) <= 1e-10
    assert np.abs(inv @ P - inv).max() <= 1e-10
    assert np.abs(inv - gth_stationary(P)).max() <= 1e-10


# -- evaluate_full_profile --------------------------------------------------------

def test_d1_full_pair():
    mdp = fixtures.d1()
    s = MrStrategy(0, {0: {0: 0.5, 1: 0.5}})
    nf, profile = _profile(mdp, [s, s])
    col = Coloring.trivial(nf.mdp)
    mu = evaluate_full_profile(nf, col, profile)
    assert np.allclose(mu.values, [8 / 9, 5 / 9], atol=1e-12)
    oracle = product_chain_frequencies(nf.mdp, col, profile)
    assert np.allclose(oracle.values, [8 / 9, 5 / 9], atol=1e-12)


def test_single_agent_is_invariant_distribution():
    mdp = fixtures.d1()
    s = MrStrategy(1, {0: {0: 0.5, 1: 0.5}})
    nf, profile = _profile(mdp, [s])
    mu = evaluate_full_profile(nf, Coloring.trivial(nf.mdp), profile)
    assert np.allclose(mu.values, [2 / 3, 1 / 3], atol=1e-12)


def test_ring_offset_pair():
    mdp = fixtures.ring(4)
    nf, profile = _profile(mdp, [MrStrategy(0, {}), MrStrategy(2, {})])
    col = Coloring.trivial(nf.mdp)
    assert np.allclose(evaluate_full_profile(nf, col, profile).values, 0.5, atol=1e-12)
    assert np.allclose(product_chain_frequencies(nf.mdp, col, profile).values, 0.5, atol=1e-12)


def test_colors_outside_every_mec_get_zero():
    mdp = fixtures.transient_middle()
    nf = normal_form(mdp)
    col = nf.coloring(Coloring.from_map(["x", "y", "z"], ["x", "y", "z"]))
    profile = Profile.in_normal_form(nf, [MrStrategy(0, {})])
    mu = evaluate_full_profile(nf, col, profile)
    assert mu.values.tolist() == [1.0, 0.0, 0.0]


def test_full_evaluator_refusals():
    mdp = fixtures.d1()
    nf = normal_form(mdp)
    col = Coloring.trivial(nf.mdp)
    det = MrStrategy(0, {0: {1: 1.0}})
    with pytest.raises(NotFull):
        evaluate_full_profile(nf, col, Profile.in_normal_form(nf, [det]))
    two = normal_form(Mdp.from_edges(2, [(0, 0), (1, 1)]))
    shared = Coloring.from_map(["c", "c"])
    with pytest.raises(NotWellFormed):
        evaluate_full_profile(two, shared, Profile.in_normal_form(two, [MrStrategy(0, {})]))


def test_full_matches_oracle_1000_random():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        mdp = random_sc_mdp(rng, int(rng.integers(1, 7)), float(rng.uniform(0.0, 0.5)))
        k = int(rng.integers(1, 4))
        nf, profile = _profile(mdp, [random_full_strategy(rng, mdp) for _ in range(k)])
        col = random_coloring(rng, mdp.n)
        mu = evaluate_full_profile(nf, col, profile)
        oracle = product_chain_frequencies(nf.mdp, col, profile)
        assert np.abs(mu.values - oracle.values).max() <= 1e-8


def _eq1(nf, col, profile) -> np.ndarray:
    miss = np.ones(col.num_colors)
    for s in profile.strategies:
        inv = invariant_distribution(induced_chain(nf.mdp, s).matrix)
        occ = np.zeros(col.num_colors)
        np.add.at(occ, list(col.of), inv)
        miss *= 1 - occ
    return 1 - miss


@given(mdp=sc_mdps(), seed=seeds, k=st.integers(1, 4))
def test_full_profile_properties(mdp, seed, k):
    rng = np.random.default_rng(seed)
    nf, profile = _profile(mdp, [random_full_strategy(rng, mdp) for _ in range(k)])
    col = random_coloring(rng, mdp.n)
    mu = evaluate_full_profile(nf, col, profile).values
    assert ((mu >= 0) & (mu <= 1)).all()
    assert mu.sum() <= k + 1e-12
    order = rng.permutation(k)
    assert np.abs(evaluate_full_profile(nf, col, profile.permuted(order)).values - mu).max() <= 1e-12
    assert np.abs(evaluate_irreducible_profile(nf, col, profile).values - mu).max() <= 1e-10
    if nf.structures[0].period == 1:
        assert np.abs(_eq1(nf, col, profile) - mu).max() <= 1e-12
        rerooted = Profile(
            tuple(MrStrategy(int(rng.integers(mdp.n)), s.rows) for s in profile.strategies), profile.mec_of
        )
        assert np.abs(evaluate_full_profile(nf, col, rerooted).values - mu).max() <= 1e-12


def test_d1_two_agent_bound_1000_profiles():
    rng = np.random.default_rng(3)
    mdp = fixtures.d1()
    nf = normal_form(mdp)
    col = Coloring.trivial(nf.mdp)
    worst = 0.0
    for _ in range(1000):
        strategies = []
        for _ in range(2):
            a = float(rng.uniform(1e-6, 1 - 1e-6))
            strategies.append(MrStrategy(int(rng.integers(2)), {0: {0: a, 1: 1 - a}}))
        nu = evaluate_full_profile(nf, col, Profile.in_normal_form(nf, strategies))
        worst = max(worst, nu["v2"])
    assert worst <= 0.75 + 1e-9


# -- evaluate_irreducible_profile ---------------------------------------------------

def test_irreducible_examples():
    mdp = fixtures.d1()
    nf = normal_form(mdp)
    col = Coloring.trivial(nf.mdp)
    walk = {0: {1: 1.0}}
    mu = evaluate_irreducible_profile(nf, col, Profile.in_normal_form(nf, [MrStrategy(0, walk), MrStrategy(1, walk)]))
    assert np.allclose(mu.values, [1, 1], atol=1e-12)
    mu = evaluate_irreducible_profile(nf, col, Profile.in_normal_form(nf, [MrStrategy(0, walk), MrStrategy(0, walk)]))
    assert np.allclose(mu.values, [0.5, 0.5], atol=1e-12)
    mixed = Profile.in_normal_form(nf, [MrStrategy(0, walk), MrStrategy(0, {0: {0: 0.5, 1: 0.5}})])
    mu = evaluate_irreducible_profile(nf, col, mixed)
    assert np.allclose(mu.values, [5 / 6, 2 / 3], atol=1e-12)
    assert np.allclose(product_chain_frequencies(nf.mdp, col, mixed).values, [5 / 6, 2 / 3], atol=1e-12)


def test_irreducible_refusals():
    nf = normal_form(fixtures.d1())
    col = Coloring.trivial(nf.mdp)
    stay = Profile.in_normal_form(nf, [MrStrategy(1, {0: {0: 1.0}})])
    with pytest.raises(ReducibleChain):
        evaluate_irreducible_profile(nf, col, stay)
    # periods 2 and 3 on one component: lcm 6
    mdp = Mdp.from_edges(3, [(0, 1), (1, 0), (1, 2), (2, 0)])
    nf = normal_form(mdp)
    col = Coloring.trivial(nf.mdp)
    two = MrStrategy(0, {1: {0: 1.0}})
    three = MrStrategy(0, {1: {2: 1.0}})
    profile = Profile.in_normal_form(nf, [two, three])
    with pytest.raises(LcmCapExceeded):
        evaluate_irreducible_profile(nf, col, profile, lcm_cap=5)
    mu = evaluate_irreducible_profile(nf, col, profile, lcm_cap=6)
    assert np.allclose(mu.values, product_chain_frequencies(nf.mdp, col, profile).values, atol=1e-12)


def test_irreducible_matches_oracle_mixed_periods():
    rng = np.random.default_rng(5)
    mixed = 0
    for _ in range(200):
        mdp = random_sc_mdp(rng, int(rng.integers(2, 7)), float(rng.uniform(0.1, 0.5)), stoch_p=0.15)
        k = int(rng.integers(1, 4))
        strategies = [random_irreducible_strategy(rng, mdp) for _ in range(k)]
        nf, profile = _profile(mdp, strategies)
        col = random_coloring(rng, mdp.n)
        mu = evaluate_irreducible_profile(nf, col, profile)
        oracle = product_chain_frequencies(nf.mdp, col, profile)
        assert np.abs(mu.values - oracle.values).max() <= 1e-8
        assert np.abs(evaluate_irreducible_profile(nf, col, profile.permuted(rng.permutation(k))).values
                      - mu.values).max() <= 1e-12
        if k > 1 and len({strategy_period(nf.mdp, s) for s in strategies}) > 1:
            mixed += 1
    assert mixed >= 10


# -- oracle ---------------------------------------------------------------------------

def test_oracle_cap():
    mdp = fixtures.ring(5)
    with pytest.raises(CapExceeded):
        product_chain_frequencies(mdp, Coloring.trivial(mdp), [MrStrategy(0, {})] * 3, cap=100)


def test_oracle_single_agent_matches_stationary():
    rng = np.random.default_rng(11)
    mdp = random_sc_mdp(rng, 6)
    s = random_full_strategy(rng, mdp)
    inv = invariant_distribution(induced_chain(mdp, s).matrix)
    assert np.allclose(product_chain_frequencies(mdp, Coloring.trivial(mdp), [s]).values, inv, atol=1e-12)


# -- distances ------------------------------------------------------------------------

def _fv(values, colors=("a", "b")):
    return FrequencyVector(colors, np.array(values, dtype=float))


def _obj(values, colors=("a", "b")):
    return Objective(colors, values)


def test_dist_examples():
    assert dist(_fv([0.7, 0.3]), _obj([0.5, 0.5])) == pytest.approx(0.2, abs=1e-15)
    assert dist(_fv([0.6, 0.9]), _obj([0.5, 0.5])) == 0.0
    assert dist(_fv([0, 0]), _obj([1, 1])) == 2.0


def test_alt_dist_examples():
    assert alt_dist(_fv([0.5, 0.5]), _obj([0.5, 0.25])) == pytest.approx(1.0)
    assert alt_dist(_fv([0.1, 0.9]), _obj([0.2, 0.9])) == pytest.approx(0.5)
    assert alt_dist(_fv([0.1, 0.9]), _obj([0.0, 0.9])) == pytest.approx(1.0)
    assert alt_dist(_fv([0.1, 0.9]), _obj([0.0, 0.0])) == math.inf


def test_distance_color_mismatch():
    with pytest.raises(ColorMismatch):
        dist(_fv([0.1, 0.2]), _obj([0.1, 0.2], ("a", "c")))
    with pytest.raises(ColorMismatch):
        alt_dist(_fv([0.1, 0.2]), _obj([0.1, 0.2], ("b", "a")))


def test_cropped_linf():
    assert cropped_linf(_fv([0.7, 0.3]), _obj([0.5, 0.5])) == pytest.approx(0.2)
    assert cropped_linf(_fv([0.7, 0.6]), _obj([0.5, 0.5])) == 0.0
