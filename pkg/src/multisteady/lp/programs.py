"""Edge-frequency linear programs for one agent on one MEC.

Variables ``x[u,v]`` are long-run frequencies of traversing edge ``(u,v)``,
not probabilities; a strategy is recovered by normalizing each vertex's
outgoing frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from ..chain import MrStrategy, Profile, _require_well_formed, full_agent_occupancy
from ..decompose import NormalForm
from ..errors import ClassNotInMec, ZeroRow
from ..model import Coloring, Objective
from .model import EQ, GE, LpModel, LpSolution

EPS_FULL_SCALE = 1e-7


def default_eps_full(num_edges: int) -> float:
    return EPS_FULL_SCALE / max(1, num_edges)


@dataclass(frozen=True)
class ColorPhaseProducts:
    """Per color ``c``: the MEC holding it, its period ``d_c`` and ``X^c_j`` for ``j < d_c``.

    ``X^c_j`` is the probability that none of the already placed agents sits
    on a c-colored vertex at times ``t ≡ j (mod d_c)`` in the long run.
    """

    colors: tuple[Hashable, ...]
    home: tuple[int | None, ...]
    periods: tuple[int, ...]
    products: tuple[np.ndarray, ...]

    def mu(self) -> np.ndarray:
        """Frequency vector of the placed agents alone."""
        return np.array([1.0 - X.mean() for X in self.products])


def products_from_occupancies(
    nf: NormalForm, coloring: Coloring, occupancies: Sequence[tuple[int, np.ndarray]]
) -> ColorPhaseProducts:
    """Assemble the constants from per-agent phase occupancies ``(mec, occ)``."""
    _require_well_formed(nf, coloring)
    home: list[int | None] = [None] * coloring.num_colors
    for v, c in enumerate(coloring.of):
        home[c] = nf.mec_of[v]
    periods = []
    products = []
    for c, q in enumerate(home):
        d = 1 if q is None else nf.structures[q].period
        X = np.ones(d)
        for aq, occ in occupancies:
            if aq == q:
                X = X * (1.0 - occ[c])
        periods.append(d)
        products.append(X)
    return ColorPhaseProducts(coloring.colors, tuple(home), tuple(periods), tuple(products))


def color_phase_products(
    nf: NormalForm, coloring: Coloring, profile: Profile, eps_full: float = 0.0
) -> ColorPhaseProducts:
    occ = [
        (q, full_agent_occupancy(nf, coloring, s, q, eps_full))
        for s, q in zip(profile.strategies, profile.mec_of)
    ]
    return products_from_occupancies(nf, coloring, occ)


def _edge_variables(model: LpModel, nf: NormalForm, q: int, eps: float) -> dict[tuple[int, int], int]:
    """Edge-frequency variables plus normalization, flow and stochastic-split rows."""
    mdp = nf.mdp
    label = mdp.label
    edges = nf.edges_of(q)
    var = {e: model.add_var(f"x[{label(e[0])},{label(e[1])}]", eps, 1.0) for e in edges}
    model.add_constraint({j: 1.0 for j in var.values()}, EQ, 1.0, "sum")
    inflow: dict[int, list[int]] = {v: [] for v in nf.components[q]}
    for (u, v), j in var.items():
        inflow[v].append(j)
    for v in nf.components[q]:
        row: dict[int, float] = {}
        for u in mdp.succ[v]:
            row[var[v, u]] = row.get(var[v, u], 0.0) + 1.0
        for j in inflow[v]:
            row[j] = row.get(j, 0.0) - 1.0
        model.add_constraint(row, EQ, 0.0, f"flow[{label(v)}]")
    for v in nf.components[q]:
        if not mdp.stochastic[v]:
            continue
        for w, p in mdp.prob[v].items():
            row = {j: -p for j in inflow[v]}
            row[var[v, w]] = row.get(var[v, w], 0.0) + 1.0
            model.add_constraint(row, EQ, 0.0, f"split[{label(v)},{label(w)}]")
    model.meta.update(edges=edges, edge_var=var, inflow=inflow, mec=q)
    return var


def build_strategy_lp(
    nf: NormalForm,
    coloring: Coloring,
    obj: Objective,
    products: ColorPhaseProducts,
    q: int,
    class_index: int,
    eps_full: float | None = None,
) -> LpModel:
    """LP minimizing the distance after adding one agent that starts in class ``class_index`` of MEC ``q``.

    With the other agents fixed, the coverage of color ``c`` becomes
    ``mean_j(1 - X^c_j) + Σ_j X^c_j Σ_{v ∈ V^c(C,j)} inflow(v)``, which is
    linear in the edge frequencies.  Shortfalls ``max(0, Obj(c) - μ(c))`` are
    modelled by slack variables; colors outside MEC ``q`` cannot change and
    enter the objective as a constant.
    """
    structure = nf.structures[q]
    if not 0 <= class_index < structure.period:
        raise ClassNotInMec(f"MEC {q} has {structure.period} cyclic classes, not class {class_index}")
    if tuple(obj.colors) != tuple(coloring.colors):
        raise ValueError("objective and coloring disagree on colors")
    edges = nf.edges_of(q)
    eps = default_eps_full(len(edges)) if eps_full is None else eps_full
    model = LpModel("min")
    var = _edge_variables(model, nf, q, eps)
    inflow = model.meta["inflow"]
    targets = obj.as_array()
    constant = 0.0
    slack = {}
    for c, color in enumerate(coloring.colors):
        X = products.products[c]
        base = float(1.0 - X.mean())
        if products.home[c] != q:
            constant += max(0.0, targets[c] - base)
            continue
        if targets[c] <= 0.0:
            continue
        s = model.add_var(f"s[{color}]", 0.0, np.inf, cost=1.0)
        slack[c] = s
        row = {s: 1.0}
        for v in nf.components[q]:
            if coloring.of[v] != c:
                continue
            j = (structure.class_of[v] - class_index) % structure.period
            for e in inflow[v]:
                row[e] = row.get(e, 0.0) + float(X[j])
        model.add_constraint(row, GE, targets[c] - base, f"cover[{color}]")
    model.objective_constant = constant
    model.meta.update(slack=slack, class_index=class_index, eps_full=eps, kind="strategy")
    return model


def build_baseline_lp(
    nf: NormalForm, coloring: Coloring, obj: Objective, q: int, eps_full: float | None = None
) -> LpModel:
    """LP maximizing ``t`` with ``ν(c) >= t·Obj(c)`` for every positive target.

    ``ν(c)`` is the single-agent invariant mass on c-colored vertices of MEC
    ``q``; the optimum maximizes ``min_c ν(c)/Obj(c)``.
    """
    edges = nf.edges_of(q)
    eps = default_eps_full(len(edges)) if eps_full is None else eps_full
    model = LpModel("max")
    _edge_variables(model, nf, q, eps)
    inflow = model.meta["inflow"]
    targets = obj.as_array()
    if (targets > 0).any():
        t = model.add_var("t", 0.0, np.inf, cost=1.0)
        model.meta["t"] = t
        for c, color in enumerate(coloring.colors):
            if targets[c] <= 0:
                continue
            row = {t: -float(targets[c])}
            for v in nf.components[q]:
                if coloring.of[v] == c:
                    for e in inflow[v]:
                        row[e] = row.get(e, 0.0) + 1.0
            model.add_constraint(row, GE, 0.0, f"ratio[{color}]")
    model.meta.update(eps_full=eps, kind="baseline")
    return model


def extract_strategy(solution: LpSolution, model: LpModel, nf: NormalForm, class_index: int = 0) -> MrStrategy:
    """Normalize edge frequencies into a full strategy starting in ``class_index``."""
    q = model.meta["mec"]
    var = model.meta["edge_var"]
    mdp = nf.mdp
    rows = {}
    for v in nf.components[q]:
        if mdp.stochastic[v]:
            continue
        freqs = {u: max(0.0, solution.value(var[v, u])) for u in mdp.succ[v]}
        total = sum(freqs.values())
        if total <= 0.0:
            raise ZeroRow(f"no outgoing frequency at vertex {mdp.label(v)!r}")
        rows[v] = {u: f / total for u, f in freqs.items()}
    initial = nf.structures[q].classes[class_index][0]
    return MrStrategy(initial, rows)


def residuals_by_group(model: LpModel, solution: LpSolution) -> dict[str, float]:
    """Largest constraint violation per row family (``sum``, ``flow``, ``split``, ...)."""
    res = model.residuals(solution.values)
    out: dict[str, float] = {}
    for con, r in zip(model.constraints, res):
        group = con.name.split("[", 1)[0]
        out[group] = max(out.get(group, 0.0), float(r))
    lower = min((solution.values[j] - v.lower for j, v in enumerate(model.variables)), default=0.0)
    out["bounds"] = max(0.0, -lower)
    return out
