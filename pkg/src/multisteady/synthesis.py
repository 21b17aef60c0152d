"""Incremental agent inclusion and the strategy-sharing baseline."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chain import (
    FrequencyVector,
    MrStrategy,
    Profile,
    combine_occupancies,
    dist,
    evaluate_full_profile,
    full_agent_occupancy,
)
from .decompose import NormalForm
from .errors import NotStronglyConnected, Timeout
from .lp import (
    LpModel,
    build_baseline_lp,
    build_strategy_lp,
    extract_strategy,
    products_from_occupancies,
    residuals_by_group,
    solve_lp,
)
from .model import Coloring, Objective

DIST_TOL = 1e-9
ALGORITHMS = ("incremental", "baseline")


@dataclass(frozen=True)
class TraceEntry:
    agent: int
    mec: int
    class_index: int
    dist: float


@dataclass(frozen=True)
class CandidateRecord:
    """Diagnostics of one LP solve inside the incremental scan."""

    agent: int
    mec: int
    class_index: int
    lp_objective: float
    eval_dist: float
    residuals: dict[str, float]
    iterations: int


@dataclass
class SynthesisReport:
    algorithm: str
    profile: Profile
    trace: list[TraceEntry]
    frequency: FrequencyVector
    dist: float
    candidates: list[CandidateRecord] = field(default_factory=list)
    prefix_frequencies: list[np.ndarray] = field(default_factory=list)  # μ after 1, 2, ... agents

    @property
    def agents(self) -> int:
        return self.profile.k

    @property
    def satisfied(self) -> bool:
        return self.dist <= DIST_TOL


def _check_deadline(deadline: float | None):
    if deadline is not None and time.monotonic() > deadline:
        raise Timeout("synthesis exceeded its wall-time budget")


def incremental_synthesize(
    nf: NormalForm,
    coloring: Coloring,
    obj: Objective,
    k: int,
    *,
    eps_full: float | None = None,
    solver: str = "simplex",
    early_stop: bool = True,
    deadline: float | None = None,
    lp_hook: Callable[[str, LpModel], None] | None = None,
) -> SynthesisReport:
    """Add agents one at a time, each from the best LP over all (MEC, class) pairs.

    Candidates are scanned by MEC then class index; a candidate replaces the
    incumbent only on strict improvement.  With ``early_stop`` the loop ends
    as soon as the distance reaches zero (within ``DIST_TOL``).  ``lp_hook``
    receives every candidate LP with a descriptive name before it is solved.
    """
    if k < 1:
        raise ValueError("need at least one agent")
    profile = Profile((), ())
    occupancies: list[tuple[int, np.ndarray]] = []
    trace: list[TraceEntry] = []
    records: list[CandidateRecord] = []
    freq = None
    mus = []
    for agent in range(k):
        products = products_from_occupancies(nf, coloring, occupancies)
        best = None
        for q in range(nf.num_mecs):
            for C in range(nf.structures[q].period):
                _check_deadline(deadline)
                model = build_strategy_lp(nf, coloring, obj, products, q, C, eps_full)
                if lp_hook is not None:
                    lp_hook(f"agent{agent}-mec{q}-class{C}", model)
                sol = solve_lp(model, solver)
                sigma = extract_strategy(sol, model, nf, C)
                candidate = profile.extend(sigma, q)
                nu = evaluate_full_profile(nf, coloring, candidate)
                d = dist(nu, obj)
                records.append(
                    CandidateRecord(agent, q, C, sol.objective, d, residuals_by_group(model, sol), sol.iterations)
                )
                if best is None or d < best[0]:
                    best = (d, q, C, sigma, candidate, nu)
        d, q, C, sigma, profile, freq = best
        if trace and d > trace[-1].dist + 1e-12:
            raise AssertionError(f"distance increased from {trace[-1].dist} to {d} when adding agent {agent}")
        occupancies.append((q, full_agent_occupancy(nf, coloring, sigma, q)))
        trace.append(TraceEntry(agent, q, C, d))
        mus.append(freq.values)
        if early_stop and d <= DIST_TOL:
            break
    return SynthesisReport("incremental", profile, trace, freq, trace[-1].dist, records, mus)


def baseline_strategy(
    nf: NormalForm,
    coloring: Coloring,
    obj: Objective,
    *,
    eps_full: float | None = None,
    solver: str = "simplex",
    lp_hook: Callable[[str, LpModel], None] | None = None,
) -> MrStrategy:
    """Single-agent strategy maximizing proportional coverage, starting in class 0."""
    if nf.num_mecs != 1:
        raise NotStronglyConnected(f"baseline needs a single MEC, model has {nf.num_mecs}")
    model = build_baseline_lp(nf, coloring, obj, 0, eps_full)
    if lp_hook is not None:
        lp_hook("baseline", model)
    sol = solve_lp(model, solver)
    return extract_strategy(sol, model, nf, 0)


def round_robin(nf: NormalForm, sigma: MrStrategy, k: int) -> Profile:
    """``k`` copies of ``sigma``; copy ``j`` starts at the smallest vertex of class ``j mod d``."""
    classes = nf.structures[0].classes
    copies = [MrStrategy(classes[j % len(classes)][0], sigma.rows) for j in range(k)]
    return Profile(tuple(copies), (0,) * k)


def _baseline_prefixes(nf, coloring, obj, sigma: MrStrategy, k: int, stop_at_zero: bool) -> list[np.ndarray]:
    """Frequency vectors of the round-robin allocation for 1..k copies."""
    structure = nf.structures[0]
    d = structure.period
    occ0 = full_agent_occupancy(nf, coloring, sigma, 0)
    start = structure.class_of[sigma.initial]
    targets = obj.as_array()
    occs = []
    out = []
    for j in range(k):
        shift = (j % d - start) % d
        # a copy starting `shift` classes later is where copy 0 was `shift` steps earlier
        occs.append(np.roll(occ0, shift, axis=1))
        mu = combine_occupancies(coloring.num_colors, {0: occs}, [d])
        out.append(mu)
        if stop_at_zero and np.maximum(0.0, targets - mu).sum() <= DIST_TOL:
            break
    return out


def _dist_array(mu: np.ndarray, obj: Objective) -> float:
    return float(np.maximum(0.0, obj.as_array() - mu).sum())


def baseline_synthesize(
    nf: NormalForm,
    coloring: Coloring,
    obj: Objective,
    k: int,
    *,
    eps_full: float | None = None,
    solver: str = "simplex",
    lp_hook: Callable[[str, LpModel], None] | None = None,
) -> SynthesisReport:
    """Share one baseline strategy among ``k`` agents allocated round robin over classes."""
    if k < 1:
        raise ValueError("need at least one agent")
    sigma = baseline_strategy(nf, coloring, obj, eps_full=eps_full, solver=solver, lp_hook=lp_hook)
    return _baseline_report(nf, coloring, obj, sigma, k, stop_at_zero=False)


def _baseline_report(nf, coloring, obj, sigma, k, stop_at_zero) -> SynthesisReport:
    mus = _baseline_prefixes(nf, coloring, obj, sigma, k, stop_at_zero)
    profile = round_robin(nf, sigma, len(mus))
    freq = evaluate_full_profile(nf, coloring, profile)
    d = nf.structures[0].period
    trace = [TraceEntry(j, 0, j % d, _dist_array(mu, obj)) for j, mu in enumerate(mus)]
    return SynthesisReport("baseline", profile, trace, freq, dist(freq, obj), [], mus)


@dataclass(frozen=True)
class AgentsNeeded:
    algorithm: str
    count: int | None  # None when the cap was reached without satisfying the objective
    series: list[float]  # distance after 1, 2, ... agents
    report: SynthesisReport | None = None


def agents_needed(
    nf: NormalForm,
    coloring: Coloring,
    obj: Objective,
    algorithm: str,
    cap: int,
    *,
    eps_full: float | None = None,
    solver: str = "simplex",
    deadline: float | None = None,
    lp_hook: Callable[[str, LpModel], None] | None = None,
) -> AgentsNeeded:
    """Smallest agent count up to ``cap`` reaching distance zero, with the distance series."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if algorithm == "incremental":
        rep = incremental_synthesize(
            nf, coloring, obj, cap, eps_full=eps_full, solver=solver, early_stop=True, deadline=deadline, lp_hook=lp_hook
        )
        series = [t.dist for t in rep.trace]
        count = len(series) if series[-1] <= DIST_TOL else None
        return AgentsNeeded(algorithm, count, series, rep)
    if algorithm == "baseline":
        _check_deadline(deadline)
        sigma = baseline_strategy(nf, coloring, obj, eps_full=eps_full, solver=solver, lp_hook=lp_hook)
        rep = _baseline_report(nf, coloring, obj, sigma, cap, stop_at_zero=True)
        series = [t.dist for t in rep.trace]
        count = len(series) if series[-1] <= DIST_TOL else None
        return AgentsNeeded(algorithm, count, series, rep)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
