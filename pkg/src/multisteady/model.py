"""Core model types: MDPs, colorings, objectives.

Vertices are dense integer indices ``0..n-1``.  Optional labels carry the
user-facing ids from model files; every algorithm works on indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ColorMismatch, InvalidM

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Mdp:
    """A Markov decision process ``(V, E, p)`` with ``V = V_N ∪ V_S``.

    ``succ[v]`` lists the successors of ``v`` in a fixed order and
    ``prob[v]`` maps each successor of a stochastic vertex ``v`` to its
    probability.  Nothing is checked on construction; call :func:`validate`.
    """

    stochastic: tuple[bool, ...]
    succ: tuple[tuple[int, ...], ...]
    prob: Mapping[int, Mapping[int, float]] = field(default_factory=dict)
    labels: tuple[Hashable, ...] | None = None
    pred: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stochastic", tuple(bool(s) for s in self.stochastic))
        object.__setattr__(self, "succ", tuple(tuple(int(u) for u in out) for out in self.succ))
        object.__setattr__(
            self,
            "prob",
            {int(v): {int(u): float(p) for u, p in row.items()} for v, row in self.prob.items()},
        )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        n = len(self.succ)
        pred: list[list[int]] = [[] for _ in range(n)]
        for v, out in enumerate(self.succ):
            for u in out:
                if 0 <= u < n:
                    pred[u].append(v)
        object.__setattr__(self, "pred", tuple(tuple(p) for p in pred))

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        prob: Mapping[int, Mapping[int, float]] | None = None,
        labels: Sequence[Hashable] | None = None,
    ) -> "Mdp":
        """Build an MDP from an edge list; vertices in ``prob`` are stochastic."""
        succ: list[list[int]] = [[] for _ in range(n)]
        for v, u in edges:
            succ[v].append(u)
        prob = dict(prob or {})
        stochastic = [v in prob for v in range(n)]
        return cls(tuple(stochastic), tuple(map(tuple, succ)), prob, labels)

    @property
    def n(self) -> int:
        return len(self.succ)

    @property
    def num_edges(self) -> int:
        return sum(len(out) for out in self.succ)

    @property
    def is_graph(self) -> bool:
        return not any(self.stochastic)

    def edges(self) -> Iterator[tuple[int, int]]:
        for v, out in enumerate(self.succ):
            for u in out:
                yield v, u

    def label(self, v: int) -> Hashable:
        return v if self.labels is None else self.labels[v]

    def index_of(self) -> dict[Hashable, int]:
        return {self.label(v): v for v in range(self.n)}

    def row(self, v: int) -> Mapping[int, float]:
        """Fixed distribution of a stochastic vertex."""
        return self.prob[v]


@dataclass(frozen=True)
class Violation:
    kind: str
    vertex: Hashable
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind} at vertex {self.vertex!r}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def validate(mdp: Mdp) -> ValidationReport:
    """Check every structural invariant of ``mdp`` and list all violations."""
    out: list[Violation] = []
    n = mdp.n
    if len(mdp.stochastic) != n:
        out.append(Violation("kind vector length", "-", f"{len(mdp.stochastic)} flags for {n} vertices"))
    if mdp.labels is not None:
        if len(mdp.labels) != n:
            out.append(Violation("label vector length", "-", f"{len(mdp.labels)} labels for {n} vertices"))
        seen: set = set()
        for lab in mdp.labels:
            if lab in seen:
                out.append(Violation("duplicate vertex id", lab))
            seen.add(lab)
    for v, succ in enumerate(mdp.succ):
        lab = mdp.label(v) if mdp.labels is None or v < len(mdp.labels) else v
        if not succ:
            out.append(Violation("sink vertex", lab, "no outgoing edge"))
        if len(set(succ)) != len(succ):
            out.append(Violation("duplicate edge", lab))
        for u in succ:
            if not 0 <= u < n:
                out.append(Violation("unknown successor", lab, f"edge to {u}"))
        is_stoch = v < len(mdp.stochastic) and mdp.stochastic[v]
        if is_stoch:
            row = mdp.prob.get(v)
            if row is None:
                out.append(Violation("missing distribution", lab))
                continue
            if set(row) != set(succ):
                out.append(Violation("distribution support", lab, f"support {sorted(row)} vs successors {sorted(succ)}"))
            for u, p in row.items():
                if not 0.0 < p <= 1.0:
                    out.append(Violation("probability range", lab, f"p({u}) = {p}"))
            total = sum(row.values())
            if abs(total - 1.0) > PROB_TOL:
                out.append(Violation("distribution sum", lab, f"sums to {total!r}"))
        elif v in mdp.prob:
            out.append(Violation("distribution on nondeterministic vertex", lab))
    return ValidationReport(tuple(out))


@dataclass(frozen=True)
class Coloring:
    """Total map from vertices to colors; ``of[v]`` is an index into ``colors``."""

    colors: tuple[Hashable, ...]
    of: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "colors", tuple(self.colors))
        object.__setattr__(self, "of", tuple(int(c) for c in self.of))
        if len(set(self.colors)) != len(self.colors):
            raise ValueError("duplicate color ids")
        for c in self.of:
            if not 0 <= c < len(self.colors):
                raise ValueError(f"vertex mapped to undeclared color index {c}")

    @classmethod
    def trivial(cls, mdp: Mdp) -> "Coloring":
        return cls(tuple(mdp.label(v) for v in range(mdp.n)), tuple(range(mdp.n)))

    @classmethod
    def from_map(cls, assignment: Sequence[Hashable], colors: Sequence[Hashable] | None = None) -> "Coloring":
        """``assignment[v]`` is the color id of vertex ``v``."""
        if colors is None:
            colors = list(dict.fromkeys(assignment))
        index = {c: i for i, c in enumerate(colors)}
        return cls(tuple(colors), tuple(index[c] for c in assignment))

    @property
    def num_colors(self) -> int:
        return len(self.colors)

    def preimage(self, c: int) -> list[int]:
        return [v for v, cv in enumerate(self.of) if cv == c]

    def restrict(self, vertices: Sequence[int]) -> "Coloring":
        """Coloring of a sub-MDP whose vertex ``i`` is ``vertices[i]`` here."""
        return Coloring(self.colors, tuple(self.of[v] for v in vertices))

    def indicator(self, n: int | None = None) -> np.ndarray:
        """``(num_colors, n)`` 0/1 matrix with a one where vertex has color."""
        n = len(self.of) if n is None else n
        m = np.zeros((self.num_colors, n))
        m[list(self.of), np.arange(n)] = 1.0
        return m


@dataclass(frozen=True)
class Objective:
    """Target frequency per color, aligned with ``colors``."""

    colors: tuple[Hashable, ...]
    targets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "colors", tuple(self.colors))
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        if len(self.colors) != len(self.targets):
            raise ValueError("objective needs one target per color")
        for t in self.targets:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"objective value {t} outside [0, 1]")

    @classmethod
    def from_dict(cls, coloring: Coloring, targets: Mapping[Hashable, float]) -> "Objective":
        unknown = set(targets) - set(coloring.colors)
        if unknown:
            raise ColorMismatch(f"objective names undeclared colors {sorted(map(str, unknown))}")
        return cls(coloring.colors, tuple(float(targets.get(c, 0.0)) for c in coloring.colors))

    @classmethod
    def uniform(cls, coloring: Coloring, value: float) -> "Objective":
        return cls(coloring.colors, (value,) * coloring.num_colors)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.targets, dtype=float)

    def __getitem__(self, color: Hashable) -> float:
        return self.targets[self.colors.index(color)]


# -- finite memory ------------------------------------------------------------

@dataclass(frozen=True)
class MemoryConstraint:
    """``sum(η(source)(t) for t in targets) == prob`` for a stochastic source."""

    source: int
    successor: int
    targets: tuple[int, ...]
    prob: float


@dataclass(frozen=True)
class AugmentedMdp:
    """MDP over ``V × {1..m}``; augmented vertex ``(v, i)`` has index ``v*m + i - 1``."""

    mdp: Mdp
    base: Mdp
    m: int
    constraints: tuple[MemoryConstraint, ...]

    def vertex(self, v: int, i: int) -> int:
        return v * self.m + (i - 1)

    def split(self, w: int) -> tuple[int, int]:
        return divmod(w, self.m)[0], w % self.m + 1

    def lift_coloring(self, coloring: Coloring) -> Coloring:
        return Coloring(coloring.colors, tuple(coloring.of[w // self.m] for w in range(self.mdp.n)))

    def constraint_violations(self, rows: Mapping[int, Mapping[int, float]], tol: float = 1e-9) -> list[MemoryConstraint]:
        """Constraints not met by the strategy rows ``rows`` (vertex -> succ -> prob)."""
        bad = []
        for con in self.constraints:
            row = rows.get(con.source, {})
            if abs(sum(row.get(t, 0.0) for t in con.targets) - con.prob) > tol:
                bad.append(con)
        return bad


def augment_memory(mdp: Mdp, m: int) -> AugmentedMdp:
    """Product of ``mdp`` with ``m`` memory states.

    ``(v,i) -> (u,j)`` is an edge iff ``(v,u)`` is.  For ``m > 1`` stochastic
    vertices become controllable and the fixed distribution survives as
    :class:`MemoryConstraint` records; for ``m == 1`` the split is forced and
    the vertices stay stochastic.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidM(f"memory size must be a positive integer, got {m!r}")
    m = int(m)
    n = mdp.n
    succ: list[tuple[int, ...]] = []
    stochastic: list[bool] = []
    prob: dict[int, dict[int, float]] = {}
    constraints: list[MemoryConstraint] = []
    labels = []
    for v in range(n):
        for i in range(1, m + 1):
            w = v * m + i - 1
            succ.append(tuple(u * m + j for u in mdp.succ[v] for j in range(m)))
            labels.append(f"({mdp.label(v)},{i})")
            if mdp.stochastic[v] and m == 1:
                stochastic.append(True)
                prob[w] = {u: p for u, p in mdp.prob[v].items()}
            else:
                stochastic.append(False)
                if mdp.stochastic[v]:
                    for u in mdp.succ[v]:
                        constraints.append(
                            MemoryConstraint(w, u, tuple(u * m + j for j in range(m)), mdp.prob[v][u])
                        )
    aug = Mdp(tuple(stochastic), tuple(succ), prob, tuple(labels))
    return AugmentedMdp(aug, mdp, m, tuple(constraints))
