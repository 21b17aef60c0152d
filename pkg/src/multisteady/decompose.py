"""Maximal end components, normal form, periods and cyclic classes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NoMec, NotStronglyConnected
from .model import Coloring, Mdp


def scc_labels(n: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """Strongly connected component label of every node ``0..n-1``."""
    edges = list(edges)
    if not edges:
        return np.arange(n)
    rows, cols = zip(*edges)
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adj, directed=True, connection="strong")
    return labels


def is_strongly_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    if n == 0:
        return False
    labels = scc_labels(n, edges)
    return bool(np.all(labels == labels[0]))


@dataclass(frozen=True)
class Mec:
    """A maximal end component: its vertices and the edges kept inside it."""

    vertices: tuple[int, ...]
    succ: dict[int, tuple[int, ...]]

    def edges(self):
        for v in self.vertices:
            for u in self.succ[v]:
                yield v, u


@dataclass(frozen=True)
class MecDecomposition:
    mecs: tuple[Mec, ...]
    membership: tuple[int | None, ...]  # vertex -> mec index, None if transient

    @property
    def transient(self) -> list[int]:
        return [v for v, q in enumerate(self.membership) if q is None]


def mec_decompose(mdp: Mdp) -> MecDecomposition:
    """All MECs of ``mdp``, ordered by their smallest vertex.

    Repeatedly splits the surviving vertices into SCCs and discards every
    stochastic vertex with an edge leaving its SCC and every vertex with no
    edge staying inside it, until nothing changes.
    """
    n = mdp.n
    alive = np.ones(n, dtype=bool)
    while True:
        labels = scc_labels(n, ((v, u) for v, u in mdp.edges() if alive[v] and alive[u]))
        drop = []
        for v in np.flatnonzero(alive):
            inside = [alive[u] and labels[u] == labels[v] for u in mdp.succ[v]]
            if mdp.stochastic[v]:
                if not all(inside):
                    drop.append(v)
            elif not any(inside):
                drop.append(v)
        if not drop:
            break
        alive[drop] = False

    groups: dict[int, list[int]] = {}
    for v in np.flatnonzero(alive):
        groups.setdefault(int(labels[v]), []).append(int(v))
    ordered = sorted(groups.values(), key=min)
    membership: list[int | None] = [None] * n
    mecs = []
    for q, verts in enumerate(ordered):
        members = set(verts)
        for v in verts:
            membership[v] = q
        succ = {v: tuple(u for u in mdp.succ[v] if u in members) for v in verts}
        mecs.append(Mec(tuple(verts), succ))
    return MecDecomposition(tuple(mecs), tuple(membership))


@dataclass(frozen=True)
class CyclicStructure:
    """Period ``d`` and the cyclic classes of a strongly connected component.

    ``class_of`` is keyed by the component's vertex ids; class 0 holds the
    smallest one.
    """

    period: int
    classes: tuple[tuple[int, ...], ...]
    class_of: dict[int, int]


def cyclic_structure(vertices: Sequence[int], succ: Callable[[int], Iterable[int]]) -> CyclicStructure:
    """Period and classes of the strongly connected digraph on ``vertices``.

    BFS levels from the smallest vertex; the period is the gcd over all edges
    ``(u, v)`` of ``level(u) + 1 - level(v)``.
    """
    vertices = sorted(vertices)
    if not vertices:
        raise NotStronglyConnected("empty component")
    members = set(vertices)
    anchor = vertices[0]
    level = {anchor: 0}
    queue = deque([anchor])
    g = 0
    edges = []
    while queue:
        v = queue.popleft()
        for u in succ(v):
            if u not in members:
                raise NotStronglyConnected(f"edge {v}->{u} leaves the component")
            edges.append((v, u))
            if u not in level:
                level[u] = level[v] + 1
                queue.append(u)
    if len(level) != len(members):
        raise NotStronglyConnected("component is not strongly connected")
    index = {v: i for i, v in enumerate(vertices)}
    if not is_strongly_connected(len(vertices), ((index[a], index[b]) for a, b in edges)):
        raise NotStronglyConnected("component is not strongly connected")
    for v, u in edges:
        g = gcd(g, abs(level[v] + 1 - level[u]))
    d = g if g > 0 else 1
    class_of = {v: level[v] % d for v in vertices}
    classes = tuple(tuple(v for v in vertices if class_of[v] == r) for r in range(d))
    return CyclicStructure(d, classes, class_of)


def period_and_classes(component: Mdp) -> CyclicStructure:
    """Cyclic structure of a strongly connected MDP over its full edge set."""
    return cyclic_structure(range(component.n), lambda v: component.succ[v])


@dataclass(frozen=True)
class NormalForm:
    """Disjoint union of the MECs of an original MDP.

    ``mdp`` is re-indexed: vertices of MEC 0 first (ascending original index),
    then MEC 1, and so on.  ``old_of_new[i]`` is the original index of new
    vertex ``i``.
    """

    mdp: Mdp
    components: tuple[tuple[int, ...], ...]
    mec_of: tuple[int, ...]
    old_of_new: tuple[int, ...]

    @cached_property
    def new_of_old(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.old_of_new)}

    @property
    def num_mecs(self) -> int:
        return len(self.components)

    @cached_property
    def structures(self) -> tuple[CyclicStructure, ...]:
        return tuple(
            cyclic_structure(comp, lambda v: self.mdp.succ[v]) for comp in self.components
        )

    def edges_of(self, q: int) -> list[tuple[int, int]]:
        return [(v, u) for v in self.components[q] for u in self.mdp.succ[v]]

    def coloring(self, coloring: Coloring) -> Coloring:
        """Transport a coloring of the original MDP to the normal form."""
        return coloring.restrict(self.old_of_new)

    def component_mdp(self, q: int) -> Mdp:
        verts = self.components[q]
        local = {v: i for i, v in enumerate(verts)}
        succ = [tuple(local[u] for u in self.mdp.succ[v]) for v in verts]
        prob = {
            local[v]: {local[u]: p for u, p in self.mdp.prob[v].items()}
            for v in verts
            if self.mdp.stochastic[v]
        }
        labels = tuple(self.mdp.label(v) for v in verts)
        return Mdp(tuple(self.mdp.stochastic[v] for v in verts), tuple(succ), prob, labels)


def normal_form(mdp: Mdp) -> NormalForm:
    """Drop transient vertices and keep each MEC as a closed component."""
    dec = mec_decompose(mdp)
    if not dec.mecs:
        raise NoMec("MDP has no end component")
    old_of_new = [v for mec in dec.mecs for v in mec.vertices]
    new = {old: i for i, old in enumerate(old_of_new)}
    succ = []
    prob = {}
    stochastic = []
    mec_of = []
    for q, mec in enumerate(dec.mecs):
        for v in mec.vertices:
            succ.append(tuple(new[u] for u in mec.succ[v]))
            stochastic.append(mdp.stochastic[v])
            mec_of.append(q)
            if mdp.stochastic[v]:
                prob[new[v]] = {new[u]: p for u, p in mdp.prob[v].items()}
    labels = tuple(mdp.label(v) for v in old_of_new)
    nf_mdp = Mdp(tuple(stochastic), tuple(succ), prob, labels)
    components = []
    start = 0
    for mec in dec.mecs:
        components.append(tuple(range(start, start + len(mec.vertices))))
        start += len(mec.vertices)
    return NormalForm(nf_mdp, tuple(components), tuple(mec_of), tuple(old_of_new))


@dataclass(frozen=True)
class WellFormedReport:
    offending: dict[Hashable, tuple[int, ...]]

    @property
    def ok(self) -> bool:
        return not self.offending

    def __bool__(self) -> bool:
        return self.ok


def check_well_formed(nf: NormalForm, coloring: Coloring) -> WellFormedReport:
    """Colors (of the normal-form coloring) that occur in more than one MEC."""
    seen: dict[int, set[int]] = {}
    for v, c in enumerate(coloring.of):
        seen.setdefault(c, set()).add(nf.mec_of[v])
    offending = {coloring.colors[c]: tuple(sorted(qs)) for c, qs in seen.items() if len(qs) > 1}
    return WellFormedReport(offending)
