"""Monte-Carlo simulation of a profile, counting colors with union semantics.

Agent ``i`` draws from SplitMix64 sub-stream ``(seed, i)``, one uniform per
step, so adding agents never changes the trajectories of existing ones.  The
position at step 1 is the initial vertex; a horizon of ``n`` therefore
covers the initial placement plus ``n - 1`` moves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .chain import MrStrategy
from .model import Coloring, Mdp
from .rng import substream_seed

TRACE_CAP = 100_000
DEFAULT_HORIZON = 10**6


@dataclass(frozen=True)
class SimReport:
    steps: int
    colors: tuple
    empirical: np.ndarray  # color -> #^n_c / n
    half: np.ndarray  # same over the first n // 2 steps (drift diagnostic)
    visits: np.ndarray  # (agents, vertices) visit counts
    seed: int
    trace: np.ndarray | None = None  # (steps, agents) vertex indices

    def as_dict(self) -> dict:
        return {c: float(x) for c, x in zip(self.colors, self.empirical)}


def _transition_table(mdp: Mdp, strategy: MrStrategy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR layout of the strategy's moves: successors and cumulative probabilities."""
    indptr = [0]
    targets: list[int] = []
    cumulative: list[float] = []
    for v in range(mdp.n):
        if mdp.stochastic[v]:
            row = mdp.prob[v]
        else:
            row = strategy.row(mdp, v) if v in strategy.rows or len(mdp.succ[v]) == 1 else {}
        acc = 0.0
        for u in mdp.succ[v]:
            p = row.get(u, 0.0)
            if p > 0.0:
                acc += p
                targets.append(u)
                cumulative.append(acc)
        if cumulative and indptr[-1] < len(targets):
            cumulative[-1] = np.inf  # absorb rounding: the last successor catches u ≈ 1
        indptr.append(len(targets))
    return np.asarray(indptr, np.int64), np.asarray(targets, np.int64), np.asarray(cumulative, np.float64)


@numba.njit(cache=True)
def _next(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True)
def _simulate(indptr, targets, cumulative, initial, states, color_of, num_colors, steps, trace_steps):
    k = initial.shape[0]
    n_vertices = color_of.shape[0]
    pos = initial.copy()
    counts = np.zeros(num_colors, np.int64)
    half_counts = np.zeros(num_colors, np.int64)
    visits = np.zeros((k, n_vertices), np.int64)
    stamp = np.full(num_colors, -1, np.int64)
    trace = np.zeros((trace_steps, k), np.int64)
    half = steps // 2
    scale = 1.0 / 9007199254740992.0
    dead = False
    for t in range(steps):
        for i in range(k):
            v = pos[i]
            visits[i, v] += 1
            if t < trace_steps:
                trace[t, i] = v
            c = color_of[v]
            if stamp[c] != t:
                stamp[c] = t
                counts[c] += 1
                if t < half:
                    half_counts[c] += 1
        for i in range(k):
            v = pos[i]
            states[i], z = _next(states[i])
            u = (z >> np.uint64(11)) * scale
            lo = indptr[v]
            hi = indptr[v + 1]
            if lo == hi:
                dead = True
                break
            nxt = targets[hi - 1]
            for e in range(lo, hi):
                if u < cumulative[e]:
                    nxt = targets[e]
                    break
            pos[i] = nxt
        if dead:
            return counts, half_counts, visits, trace, t + 1
    return counts, half_counts, visits, trace, steps


def simulate_profile(
    mdp: Mdp,
    coloring: Coloring,
    strategies: Sequence[MrStrategy],
    steps: int = DEFAULT_HORIZON,
    seed: int = 0,
    trace: bool = False,
) -> SimReport:
    """Empirical ``#^n_c / n`` for each color over one joint run of ``steps`` steps.

    Strategies may be arbitrary MR strategies (reducible, non-full, any
    coloring); they are indexed by ``mdp``'s vertices.
    """
    if steps < 1:
        raise ValueError("horizon must be at least 1")
    if not strategies:
        raise ValueError("need at least one agent")
    k = len(strategies)
    # one stacked table: agent i's copy of vertex v is i * n + v
    tables = [_transition_table(mdp, s) for s in strategies]
    n = mdp.n
    offsets = np.arange(k, dtype=np.int64) * n
    indptr = [np.zeros(1, np.int64)]
    base = 0
    for ip, tg, _ in tables:
        indptr.append(ip[1:] + base)
        base += len(tg)
    indptr = np.concatenate(indptr)
    targets = np.concatenate([tg + off for (_, tg, _), off in zip(tables, offsets)])
    cumulative = np.concatenate([cm for _, _, cm in tables])
    color_of = np.tile(np.asarray(coloring.of, np.int64), k)
    initial = np.array([s.initial for s in strategies], np.int64) + offsets
    states = np.array([substream_seed(seed, i) for i in range(k)], np.uint64)
    trace_steps = min(steps, TRACE_CAP) if trace else 0
    counts, half_counts, visits, tr, done = _simulate(
        indptr, targets, cumulative, initial, states, color_of, coloring.num_colors, steps, trace_steps
    )
    if done < steps:
        raise ValueError("a strategy has no move at some reached vertex")
    visits = np.stack([visits[i, i * n : (i + 1) * n] for i in range(k)])
    tr = tr - offsets[None, :] if trace else None
    half = max(1, steps // 2)
    return SimReport(steps, coloring.colors, counts / steps, half_counts / half, visits, seed, tr)


def write_trace(report: SimReport, mdp: Mdp, path: str | Path) -> None:
    """CSV rows ``step, agent, vertex`` (steps counted from 1)."""
    if report.trace is None:
        raise ValueError("report was produced without a trace")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "agent", "vertex"])
        for t, row in enumerate(report.trace, start=1):
            for i, v in enumerate(row):
                w.writerow([t, i, mdp.label(int(v))])
