import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from multisteady.chain import MrStrategy, induced_chain
from multisteady.decompose import is_strongly_connected
from multisteady.model import Mdp

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_sc_mdp(rng: np.random.Generator, n: int, edge_p: float = 0.3, stoch_p: float = 0.3) -> Mdp:
    """Strongly connected MDP: a random Hamiltonian cycle plus random extra edges."""
    perm = rng.permutation(n)
    edges = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    for u in range(n):
        for v in range(n):
            if rng.random() < edge_p:
                edges.add((u, v))
    stochastic = [bool(rng.random() < stoch_p) for _ in range(n)]
    succ = [sorted(v for (u, v) in edges if u == w) for w in range(n)]
    prob = {}
    for v in range(n):
        if stochastic[v]:
            w = rng.uniform(0.1, 1.0, len(succ[v]))
            prob[v] = dict(zip(succ[v], (w / w.sum()).tolist()))
    return Mdp(tuple(stochastic), tuple(map(tuple, succ)), prob, tuple(range(n)))


def random_full_strategy(rng: np.random.Generator, mdp: Mdp, initial: int | None = None) -> MrStrategy:
    rows = {}
    for v in range(mdp.n):
        if not mdp.stochastic[v] and len(mdp.succ[v]) > 1:
            w = rng.uniform(0.05, 1.0, len(mdp.succ[v]))
            rows[v] = dict(zip(mdp.succ[v], (w / w.sum()).tolist()))
    v0 = int(rng.integers(mdp.n)) if initial is None else initial
    return MrStrategy(v0, rows)


def random_graph(rng: np.random.Generator, n: int, edge_p: float) -> Mdp:
    """Strongly connected graph (no stochastic vertices)."""
    return random_sc_mdp(rng, n, edge_p, stoch_p=0.0)


def random_irreducible_strategy(rng: np.random.Generator, mdp: Mdp) -> MrStrategy:
    """MR strategy whose chain on the vertices it reaches is irreducible (often not full)."""
    while True:
        rows = {}
        for v in range(mdp.n):
            if mdp.stochastic[v]:
                continue
            out = list(mdp.succ[v])
            size = int(rng.integers(1, len(out) + 1))
            keep = rng.choice(out, size=size, replace=False)
            w = rng.uniform(0.1, 1.0, size)
            rows[v] = dict(zip(keep.tolist(), (w / w.sum()).tolist()))
        s = MrStrategy(int(rng.integers(mdp.n)), rows)
        reach = {s.initial}
        stack = [s.initial]
        while stack:
            v = stack.pop()
            for u in s.row(mdp, v):
                if u not in reach:
                    reach.add(u)
                    stack.append(u)
        verts = sorted(reach)
        index = {v: i for i, v in enumerate(verts)}
        edges = [(index[v], index[u]) for v in verts for u in s.row(mdp, v)]
        if is_strongly_connected(len(verts), edges):
            return s


def strategy_period(mdp: Mdp, s: MrStrategy) -> int:
    """gcd of the cycle lengths of the chain of ``s`` on the vertices it reaches."""
    A = (induced_chain(mdp, s).matrix > 0).astype(np.int64)
    reach = np.zeros(mdp.n, dtype=bool)
    reach[s.initial] = True
    for _ in range(mdp.n):
        reach |= (reach.astype(np.int64) @ A) > 0
    A = A[np.ix_(reach, reach)]
    power = np.eye(len(A), dtype=np.int64)
    d = 0
    for length in range(1, len(A) + 1):
        power = (power @ A > 0).astype(np.int64)
        if np.trace(power) > 0:
            d = math.gcd(d, length)
    return d


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def sc_mdps(draw, max_n: int = 6):
    n = draw(st.integers(1, max_n))
    edge_p = draw(st.sampled_from([0.0, 0.15, 0.3, 0.6]))
    rng = np.random.default_rng(draw(seeds))
    return random_sc_mdp(rng, n, edge_p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
