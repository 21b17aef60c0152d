"""Induced Markov chains, invariant distributions and exact profile evaluation."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .decompose import CyclicStructure, NormalForm, check_well_formed, cyclic_structure, is_strongly_connected
from .errors import (
    ColorMismatch,
    LcmCapExceeded,
    NotFull,
    NotWellFormed,
    ReducibleChain,
    SupportMismatch,
)
from .model import PROB_TOL, Coloring, Mdp, Objective

DEFAULT_LCM_CAP = 10**6


@dataclass(frozen=True)
class MrStrategy:
    """Memoryless randomized strategy ``(v0, κ)``.

    ``rows`` holds κ for nondeterministic vertices only; stochastic vertices
    follow the MDP's own distribution.
    """

    initial: int
    rows: Mapping[int, Mapping[int, float]]

    def __post_init__(self):
        object.__setattr__(
            self, "rows", {int(v): {int(u): float(p) for u, p in r.items()} for v, r in self.rows.items()}
        )

    def row(self, mdp: Mdp, v: int) -> Mapping[int, float]:
        if mdp.stochastic[v]:
            return mdp.prob[v]
        try:
            return self.rows[v]
        except KeyError:
            if len(mdp.succ[v]) == 1:  # the move is forced
                return {mdp.succ[v][0]: 1.0}
            raise SupportMismatch(f"strategy has no row for vertex {mdp.label(v)!r}") from None

    def is_full(self, mdp: Mdp, vertices: Iterable[int] | None = None, eps: float = 0.0) -> bool:
        """Every edge leaving a nondeterministic vertex in ``vertices`` gets > ``eps``."""
        vertices = range(mdp.n) if vertices is None else vertices
        for v in vertices:
            if mdp.stochastic[v]:
                continue
            row = self.rows.get(v)
            if row is None and len(mdp.succ[v]) == 1:
                continue
            if row is None or any(row.get(u, 0.0) <= eps for u in mdp.succ[v]):
                return False
        return True

    @classmethod
    def uniform(cls, mdp: Mdp, initial: int, vertices: Iterable[int] | None = None) -> "MrStrategy":
        vertices = range(mdp.n) if vertices is None else vertices
        rows = {v: {u: 1.0 / len(mdp.succ[v]) for u in mdp.succ[v]} for v in vertices if not mdp.stochastic[v]}
        return cls(initial, rows)


@dataclass(frozen=True)
class Profile:
    """Ordered strategies, one per agent, with the MEC each agent lives in."""

    strategies: tuple[MrStrategy, ...]
    mec_of: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "mec_of", tuple(int(q) for q in self.mec_of))
        if len(self.strategies) != len(self.mec_of):
            raise ValueError("one MEC index per strategy required")

    @classmethod
    def in_normal_form(cls, nf: NormalForm, strategies: Sequence[MrStrategy]) -> "Profile":
        """Assign each agent to the MEC of its initial vertex."""
        return cls(tuple(strategies), tuple(nf.mec_of[s.initial] for s in strategies))

    @property
    def k(self) -> int:
        return len(self.strategies)

    def extend(self, strategy: MrStrategy, q: int) -> "Profile":
        return Profile(self.strategies + (strategy,), self.mec_of + (q,))

    def prefix(self, k: int) -> "Profile":
        return Profile(self.strategies[:k], self.mec_of[:k])

    def permuted(self, order: Sequence[int]) -> "Profile":
        return Profile(tuple(self.strategies[i] for i in order), tuple(self.mec_of[i] for i in order))


@dataclass(frozen=True)
class FrequencyVector:
    colors: tuple[Hashable, ...]
    values: np.ndarray

    def __getitem__(self, color: Hashable) -> float:
        return float(self.values[self.colors.index(color)])

    def as_dict(self) -> dict[Hashable, float]:
        return {c: float(x) for c, x in zip(self.colors, self.values)}

    def __len__(self) -> int:
        return len(self.colors)


@dataclass(frozen=True)
class InducedChain:
    """Transition matrix over ``states`` (vertex ids) plus the initial state's position."""

    states: tuple[int, ...]
    matrix: np.ndarray
    initial: int | None


def induced_chain(mdp: Mdp, strategy: MrStrategy, vertices: Sequence[int] | None = None) -> InducedChain:
    """Markov chain of ``strategy`` restricted to ``vertices`` (default: all)."""
    states = tuple(range(mdp.n)) if vertices is None else tuple(vertices)
    index = {v: i for i, v in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, v in enumerate(states):
        row = strategy.row(mdp, v)
        out = set(mdp.succ[v])
        total = 0.0
        for u, p in row.items():
            if p == 0.0:
                continue
            if u not in out or p < 0.0:
                raise SupportMismatch(f"row of {mdp.label(v)!r} puts {p} on non-edge to {u}")
            if u not in index:
                raise SupportMismatch(f"row of {mdp.label(v)!r} leaves the chain's state set via {u}")
            P[i, index[u]] = p
            total += p
        if abs(total - 1.0) > PROB_TOL * max(1, len(row)):
            raise SupportMismatch(f"row of {mdp.label(v)!r} sums to {total!r}")
    return InducedChain(states, P, index.get(strategy.initial))


def _support_edges(P: np.ndarray):
    rows, cols = np.nonzero(P > 0)
    return zip(rows.tolist(), cols.tolist())


def invariant_distribution(P: np.ndarray) -> np.ndarray:
    """Unique stationary vector of the irreducible stochastic matrix ``P``.

    Solves ``I (P - 1) = 0`` with the last balance equation replaced by the
    normalization ``sum(I) = 1`` (dense LU with partial pivoting).
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if not is_strongly_connected(n, _support_edges(P)):
        raise ReducibleChain("positive-support digraph is not strongly connected")
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    dist = np.linalg.solve(A, b)
    dist = np.clip(dist, 0.0, None)
    return dist / dist.sum()


# -- exact evaluation ---------------------------------------------------------

def phase_occupancy(
    mdp: Mdp,
    coloring: Coloring,
    states: Sequence[int],
    invariant: np.ndarray,
    structure: CyclicStructure,
    initial: int,
) -> np.ndarray:
    """``occ[c, j] = d * Σ I(v)`` over c-colored v in the class reached after j steps.

    Under the chain started in ``initial`` this is the limit probability of
    sitting on color ``c`` at times ``t ≡ j (mod d)``.
    """
    d = structure.period
    occ = np.zeros((coloring.num_colors, d))
    start = structure.class_of[initial]
    for v, mass in zip(states, invariant):
        j = (structure.class_of[v] - start) % d
        occ[coloring.of[v], j] += d * mass
    return occ


def _require_well_formed(nf: NormalForm, coloring: Coloring):
    if len(coloring.of) != nf.mdp.n:
        raise ColorMismatch("coloring does not cover the normal-form vertices")
    report = check_well_formed(nf, coloring)
    if not report.ok:
        raise NotWellFormed(report.offending)


def full_agent_occupancy(
    nf: NormalForm, coloring: Coloring, strategy: MrStrategy, q: int, eps_full: float = 0.0
) -> np.ndarray:
    """Phase occupancy of one full strategy on MEC ``q`` (shape colors × d_q)."""
    comp = nf.components[q]
    if nf.mec_of[strategy.initial] != q:
        raise SupportMismatch(f"initial vertex {nf.mdp.label(strategy.initial)!r} is not in MEC {q}")
    if not strategy.is_full(nf.mdp, comp, eps_full):
        raise NotFull(f"strategy starting at {nf.mdp.label(strategy.initial)!r} is not full on MEC {q}")
    chain = induced_chain(nf.mdp, strategy, comp)
    inv = invariant_distribution(chain.matrix)
    return phase_occupancy(nf.mdp, coloring, chain.states, inv, nf.structures[q], strategy.initial)


def combine_occupancies(num_colors: int, per_mec: Mapping[int, list[np.ndarray]], periods: Sequence[int]) -> np.ndarray:
    """Sum over MECs of ``mean_j (1 - Π_i (1 - occ_i[c, j]))``."""
    mu = np.zeros(num_colors)
    for q, occs in per_mec.items():
        miss = np.ones((num_colors, periods[q]))
        for occ in occs:
            miss *= 1.0 - occ
        mu += (1.0 - miss).mean(axis=1)
    return np.clip(mu, 0.0, 1.0)


def evaluate_full_profile(
    nf: NormalForm, coloring: Coloring, profile: Profile, eps_full: float = 0.0
) -> FrequencyVector:
    """Exact frequency vector of a full MR profile on a normal-form MDP.

    ``coloring`` must be a coloring of ``nf.mdp`` and well-formed.
    """
    _require_well_formed(nf, coloring)
    per_mec: dict[int, list[np.ndarray]] = {}
    for strategy, q in zip(profile.strategies, profile.mec_of):
        per_mec.setdefault(q, []).append(full_agent_occupancy(nf, coloring, strategy, q, eps_full))
    periods = [s.period for s in nf.structures]
    return FrequencyVector(coloring.colors, combine_occupancies(coloring.num_colors, per_mec, periods))


def reachable_support(mdp: Mdp, strategy: MrStrategy) -> list[int]:
    seen = {strategy.initial}
    queue = deque([strategy.initial])
    while queue:
        v = queue.popleft()
        for u, p in strategy.row(mdp, v).items():
            if p > 0 and u not in seen:
                seen.add(u)
                queue.append(u)
    return sorted(seen)


def irreducible_agent_occupancy(
    nf: NormalForm, coloring: Coloring, strategy: MrStrategy, q: int
) -> np.ndarray:
    """Phase occupancy (colors × d_i) of an agent whose reachable chain is irreducible."""
    if nf.mec_of[strategy.initial] != q:
        raise SupportMismatch(f"initial vertex {nf.mdp.label(strategy.initial)!r} is not in MEC {q}")
    states = reachable_support(nf.mdp, strategy)
    if any(nf.mec_of[v] != q for v in states):
        raise SupportMismatch(f"strategy starting at {nf.mdp.label(strategy.initial)!r} leaves MEC {q}")
    chain = induced_chain(nf.mdp, strategy, states)
    try:
        inv = invariant_distribution(chain.matrix)
    except ReducibleChain:
        raise ReducibleChain(
            f"chain from {nf.mdp.label(strategy.initial)!r} is reducible; use the simulator"
        ) from None
    index = {v: i for i, v in enumerate(states)}
    structure = cyclic_structure(
        states, lambda v: [states[j] for j in np.flatnonzero(chain.matrix[index[v]] > 0)]
    )
    return phase_occupancy(nf.mdp, coloring, states, inv, structure, strategy.initial)


def evaluate_irreducible_profile(
    nf: NormalForm,
    coloring: Coloring,
    profile: Profile,
    lcm_cap: int = DEFAULT_LCM_CAP,
) -> FrequencyVector:
    """Exact frequency vector when every agent's chain is irreducible.

    Each agent keeps its own period ``d_i`` (from the support of its chain
    on the vertices reachable from its initial vertex).  Within a MEC the
    phases run over ``d = lcm(d_i)``:
    ``μ(c) = mean_{j<d} (1 - Π_i (1 - d_i Σ_{v ∈ V^c(i, j)} I_i(v)))``.
    """
    _require_well_formed(nf, coloring)
    per_mec: dict[int, list[np.ndarray]] = {}
    for strategy, q in zip(profile.strategies, profile.mec_of):
        per_mec.setdefault(q, []).append(irreducible_agent_occupancy(nf, coloring, strategy, q))
    C = coloring.num_colors
    mu = np.zeros(C)
    for q, occs in per_mec.items():
        d = math.lcm(*(occ.shape[1] for occ in occs))
        if d > lcm_cap:
            raise LcmCapExceeded(f"lcm of agent periods in MEC {q} is {d} > cap {lcm_cap}")
        colors = sorted({coloring.of[v] for v in nf.components[q]})
        block = 1 << 16
        total = np.zeros(len(colors))
        for start in range(0, d, block):
            phases = np.arange(start, min(d, start + block))
            miss = np.ones((len(colors), len(phases)))
            for occ in occs:
                miss *= 1.0 - occ[np.ix_(colors, phases % occ.shape[1])]
            total += (1.0 - miss).sum(axis=1)
        mu[colors] += total / d
    return FrequencyVector(coloring.colors, np.clip(mu, 0.0, 1.0))


# -- distances ------------------------------------------------------------------

def _aligned(mu: FrequencyVector, obj: Objective) -> tuple[np.ndarray, np.ndarray]:
    if tuple(mu.colors) != tuple(obj.colors):
        raise ColorMismatch("frequency vector and objective use different colors")
    return np.asarray(mu.values, dtype=float), obj.as_array()


def dist(mu: FrequencyVector, obj: Objective) -> float:
    """``Σ_c max(0, Obj(c) - μ(c))``."""
    m, o = _aligned(mu, obj)
    return float(np.maximum(0.0, o - m).sum())


def alt_dist(nu: FrequencyVector, obj: Objective) -> float:
    """``min ν(c)/Obj(c)`` over colors with a positive target; ``inf`` if there are none."""
    m, o = _aligned(nu, obj)
    pos = o > 0
    if not pos.any():
        return math.inf
    return float((m[pos] / o[pos]).min())


def cropped_linf(mu: FrequencyVector, obj: Objective) -> float:
    """Largest shortfall over unsatisfied colors (0 when all are met)."""
    m, o = _aligned(mu, obj)
    return float(np.maximum(0.0, o - m).max(initial=0.0))
