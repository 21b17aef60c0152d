"""Brute-force frequency oracle on the k-fold product chain.

Independent of the closed-form evaluators: it never uses cyclic classes or
per-agent invariant distributions, only the joint chain of all agents and a
GTH stationary solve.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from .chain import FrequencyVector, MrStrategy, Profile
from .decompose import scc_labels
from .errors import CapExceeded, ReducibleChain
from .model import Coloring, Mdp

DEFAULT_PRODUCT_CAP = 10**6


def gth_stationary(P: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination for an irreducible row-stochastic ``P``."""
    A = np.array(P, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def _moves(mdp: Mdp, strategy: MrStrategy) -> dict[int, list[tuple[int, float]]]:
    moves = {}
    for v in range(mdp.n):
        if mdp.stochastic[v]:
            moves[v] = [(u, p) for u, p in mdp.prob[v].items() if p > 0]
        elif v in strategy.rows or len(mdp.succ[v]) == 1:
            moves[v] = [(u, p) for u, p in strategy.row(mdp, v).items() if p > 0]
    return moves


def product_chain_frequencies(
    mdp: Mdp,
    coloring: Coloring,
    profile: Profile | list[MrStrategy],
    cap: int = DEFAULT_PRODUCT_CAP,
) -> FrequencyVector:
    """Color-occupancy frequencies of the joint chain started at the initial tuple.

    The tuples reachable from the start are enumerated; if they contain a
    single bottom SCC its stationary vector gives the almost-sure long-run
    frequencies (periodicity needs no special care: stationary mass already
    equals the Cesàro average).  Several bottom SCCs mean the frequency is
    not almost surely constant and :class:`ReducibleChain` is raised.
    """
    strategies = profile.strategies if isinstance(profile, Profile) else tuple(profile)
    k = len(strategies)
    if mdp.n**k > cap:
        raise CapExceeded(f"|V|^k = {mdp.n}^{k} exceeds cap {cap}")
    moves = [_moves(mdp, s) for s in strategies]
    start = tuple(s.initial for s in strategies)
    index = {start: 0}
    states = [start]
    trans: list[list[tuple[int, float]]] = []
    queue = deque([start])
    while queue:
        state = queue.popleft()
        out = []
        options = [moves[i][v] for i, v in enumerate(state)]
        for combo in itertools.product(*options):
            nxt = tuple(u for u, _ in combo)
            p = 1.0
            for _, q in combo:
                p *= q
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            out.append((index[nxt], p))
        trans.append(out)

    S = len(states)
    labels = scc_labels(S, ((a, b) for a, row in enumerate(trans) for b, _ in row))
    leaves = set()
    for a, row in enumerate(trans):
        for b, _ in row:
            if labels[a] != labels[b]:
                leaves.add(labels[a])
    bottoms = sorted(set(labels.tolist()) - leaves)
    if len(bottoms) != 1:
        raise ReducibleChain(f"product chain has {len(bottoms)} bottom components reachable from the start")
    members = [s for s in range(S) if labels[s] == bottoms[0]]
    local = {s: i for i, s in enumerate(members)}
    P = np.zeros((len(members), len(members)))
    for s in members:
        for b, p in trans[s]:
            P[local[s], local[b]] += p
    pi = gth_stationary(P)

    freq = np.zeros(coloring.num_colors)
    for s, mass in zip(members, pi):
        for c in {coloring.of[v] for v in states[s]}:
            freq[c] += mass
    return FrequencyVector(coloring.colors, np.clip(freq, 0.0, 1.0))
