"""Profile files.

Strategies are written against the original vertex ids of the model file,
so a profile synthesized on the normal form can be read back for the
original MDP (simulation) or mapped onto the normal form (exact evaluation).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

from .chain import MrStrategy, Profile
from .decompose import NormalForm
from .errors import ModelError, ParseError
from .model import Mdp

PROFILE_SCHEMA = 1


def strategy_to_json(mdp: Mdp, s: MrStrategy) -> dict[str, Any]:
    label = mdp.label
    return {
        "initial": label(s.initial),
        "rows": [
            {"vertex": label(v), "succ": [[label(u), p] for u, p in s.rows[v].items()]}
            for v in sorted(s.rows)
        ],
    }


def profile_to_json(mdp: Mdp, profile: Profile) -> dict[str, Any]:
    """``mdp`` is the model whose indices the profile uses (usually ``nf.mdp``)."""
    agents = []
    for s, q in zip(profile.strategies, profile.mec_of):
        entry = strategy_to_json(mdp, s)
        entry["mec"] = q
        agents.append(entry)
    return {"schema_version": PROFILE_SCHEMA, "agents": agents}


def strategies_from_json(data: Any, mdp: Mdp) -> list[MrStrategy]:
    """Strategies indexed by ``mdp``'s vertices; rows for unknown vertices are rejected."""
    if not isinstance(data, dict) or not isinstance(data.get("agents"), list):
        raise ParseError("profile: missing field 'agents'")
    index = mdp.index_of()
    out = []
    for i, agent in enumerate(data["agents"]):
        where = f"agents[{i}]"
        if not isinstance(agent, dict) or "initial" not in agent:
            raise ParseError(f"{where}: missing field 'initial'")
        if agent["initial"] not in index:
            raise ParseError(f"{where}.initial: unknown vertex {agent['initial']!r}")
        rows = {}
        for j, row in enumerate(agent.get("rows", [])):
            rw = f"{where}.rows[{j}]"
            if not isinstance(row, dict) or "vertex" not in row or "succ" not in row:
                raise ParseError(f"{rw}: expected {{vertex, succ}}")
            if row["vertex"] not in index:
                raise ParseError(f"{rw}.vertex: unknown vertex {row['vertex']!r}")
            dist = {}
            for pair in row["succ"]:
                if not (isinstance(pair, list) and len(pair) == 2 and pair[0] in index):
                    raise ParseError(f"{rw}.succ: expected [vertex, probability] pairs over known vertices")
                dist[index[pair[0]]] = float(pair[1])
            rows[index[row["vertex"]]] = dist
        out.append(MrStrategy(index[agent["initial"]], rows))
    if not out:
        raise ParseError("profile: at least one agent is required")
    return out


def to_normal_form(nf: NormalForm, strategies: Sequence[MrStrategy]) -> Profile:
    """Re-index strategies of the original MDP onto ``nf``; rows on transient vertices are dropped."""
    new = nf.new_of_old
    converted = []
    for i, s in enumerate(strategies):
        if s.initial not in new:
            raise ModelError(f"agent {i} starts on a vertex outside every end component")
        rows = {}
        for v, row in s.rows.items():
            if v in new:
                rows[new[v]] = {new.get(u, -1): p for u, p in row.items()}
        converted.append(MrStrategy(new[s.initial], rows))
    return Profile.in_normal_form(nf, converted)


def to_original(nf: NormalForm, profile: Profile) -> list[MrStrategy]:
    old = nf.old_of_new
    return [
        MrStrategy(old[s.initial], {old[v]: {old[u]: p for u, p in r.items()} for v, r in s.rows.items()})
        for s in profile.strategies
    ]


def save_profile(mdp: Mdp, profile: Profile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile_to_json(mdp, profile), indent=1) + "\n")


def load_strategies(path: str | Path, mdp: Mdp) -> list[MrStrategy]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return strategies_from_json(data, mdp)
