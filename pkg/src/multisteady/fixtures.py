"""Small hand-built models used throughout the tests and examples."""

from __future__ import annotations

from .model import Mdp


def single_loop() -> Mdp:
    return Mdp.from_edges(1, [(0, 0)], labels=["s"])


def ring(n: int) -> Mdp:
    """Directed cycle ``0 -> 1 -> ... -> n-1 -> 0``."""
    return Mdp.from_edges(n, [(v, (v + 1) % n) for v in range(n)])


def d1() -> Mdp:
    """Two vertices: the 2-cycle ``v1 <-> v2`` plus a self-loop on ``v1``."""
    return Mdp.from_edges(2, [(0, 0), (0, 1), (1, 0)], labels=["v1", "v2"])


def d2() -> Mdp:
    """Triangle ``u1 -> u2 -> u3 -> u1`` with a self-loop on ``u1``."""
    return Mdp.from_edges(3, [(0, 0), (0, 1), (1, 2), (2, 0)], labels=["u1", "u2", "u3"])


def d3() -> Mdp:
    """Square ``w1 -> w2 -> w3 -> w4 -> w1`` with self-loops on ``w1..w3``."""
    edges = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 0)]
    return Mdp.from_edges(4, edges, labels=["w1", "w2", "w3", "w4"])


def three_state_line() -> Mdp:
    """``v1 <-> v2 <-> v3`` with self-loops on the two ends, all controllable."""
    edges = [(0, 0), (0, 1), (1, 0), (1, 2), (2, 1), (2, 2)]
    return Mdp.from_edges(3, edges, labels=["v1", "v2", "v3"])


def transient_middle() -> Mdp:
    """``a`` (a->a, a->b), stochastic ``b`` (1/2 to a, 1/2 to c), ``c`` (c->c).

    MECs are {a} and {c}; ``b`` is transient.
    """
    return Mdp.from_edges(
        3,
        [(0, 0), (0, 1), (1, 0), (1, 2), (2, 2)],
        prob={1: {0: 0.5, 2: 0.5}},
        labels=["a", "b", "c"],
    )


def layered(sizes: list[int]) -> Mdp:
    """Complete bipartite links between consecutive layers, cyclically."""
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    d = len(sizes)
    edges = []
    for i in range(d):
        nxt = (i + 1) % d
        for a in range(offsets[i], offsets[i + 1]):
            for b in range(offsets[nxt], offsets[nxt + 1]):
                edges.append((a, b))
    return Mdp.from_edges(offsets[-1], edges)
