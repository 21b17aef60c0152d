"""Seeded random benchmarks (strongly connected graphs plus objectives) and the model file format.

All randomness comes from :class:`~multisteady.rng.SplitMix64`.  The graph
uses sub-stream 0 of the benchmark seed and the objective sub-stream 1, and
every draw happens in a fixed loop order, so a seed reproduces the same
benchmark on any platform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable

import numpy as np

from .decompose import cyclic_structure, is_strongly_connected
from .errors import AttemptsExhausted, ParseError, ValidationError
from .model import Coloring, Mdp, Objective, validate
from .rng import SplitMix64, substream_seed

FAMILIES = ("aperiodic", "periodic")
TARGET_GRID = tuple(i / 10 for i in range(10))
MANIFEST_SCHEMA = 1
MODEL_SCHEMA = 1


@dataclass(frozen=True)
class BenchmarkSpec:
    family: str
    seed: int
    vertices: int = 60  # aperiodic
    edge_prob: float = 0.05
    classes: int = 5  # periodic
    max_class_size: int = 20
    max_colors: int = 30
    max_attempts: int = 1000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not 1 <= self.vertices <= 400:
            raise ValueError("vertex count must be in 1..400")
        if not 0.0 < self.edge_prob <= 1.0:
            raise ValueError("edge probability must be in (0, 1]")
        if self.classes < 1 or self.max_class_size < 1:
            raise ValueError("class count and class size must be positive")
        if not 1 <= self.max_colors <= 30:
            raise ValueError("max colors must be in 1..30")
        if self.max_attempts < 1:
            raise ValueError("need at least one attempt")


@dataclass(frozen=True)
class Benchmark:
    mdp: Mdp
    coloring: Coloring
    objective: Objective
    provenance: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def name(self) -> str:
        p = self.provenance
        if "family" in p and "seed" in p:
            return f"{p['family']}-{p['seed']}"
        return p.get("name", "model")


def _graph(n: int, adj: np.ndarray) -> Mdp:
    succ = [tuple(int(u) for u in np.flatnonzero(adj[v])) for v in range(n)]
    return Mdp((False,) * n, tuple(succ), {}, tuple(range(n)))


def _aperiodic_graph(spec: BenchmarkSpec, rng: SplitMix64) -> tuple[Mdp, int]:
    n = spec.vertices
    for attempt in range(1, spec.max_attempts + 1):
        # self-loops included: every ordered pair (u, v), u == v allowed
        adj = rng.bernoulli(spec.edge_prob, n * n).reshape(n, n)
        if not adj.any(axis=1).all():
            continue
        u, v = np.nonzero(adj)
        if is_strongly_connected(n, zip(u.tolist(), v.tolist())):
            return _graph(n, adj), attempt
    raise AttemptsExhausted(f"no strongly connected graph after {spec.max_attempts} attempts (seed {spec.seed})")


def _periodic_graph(spec: BenchmarkSpec, rng: SplitMix64) -> tuple[Mdp, int, list[int]]:
    d = spec.classes
    for attempt in range(1, spec.max_attempts + 1):
        sizes = [rng.randint(1, spec.max_class_size) for _ in range(d)]
        start = np.concatenate([[0], np.cumsum(sizes)])
        n = int(start[-1])
        adj = np.zeros((n, n), dtype=bool)
        for i in range(d):
            j = (i + 1) % d
            block = rng.bernoulli(spec.edge_prob, sizes[i] * sizes[j]).reshape(sizes[i], sizes[j])
            adj[start[i] : start[i + 1], start[j] : start[j + 1]] |= block
        if not adj.any(axis=1).all():
            continue
        u, v = np.nonzero(adj)
        if is_strongly_connected(n, zip(u.tolist(), v.tolist())):
            return _graph(n, adj), attempt, sizes
    raise AttemptsExhausted(f"no strongly connected graph after {spec.max_attempts} attempts (seed {spec.seed})")


def gen_objective(mdp: Mdp, max_colors: int, seed: int) -> tuple[Coloring, Objective]:
    """Random coloring with 1..max_colors colors and targets from the 0.0..0.9 grid.

    Colors that end up with no vertex are dropped: their frequency is 0 for
    every profile, so a positive target on them could never be met.
    """
    if max_colors < 1:
        raise ValueError("max_colors must be at least 1")
    rng = SplitMix64(seed)
    count = rng.randint(1, max_colors)
    assignment = [rng.randint(0, count - 1) for _ in range(mdp.n)]
    targets = [TARGET_GRID[rng.randint(0, len(TARGET_GRID) - 1)] for _ in range(count)]
    used = sorted(set(assignment))
    coloring = Coloring.from_map(assignment, used)
    return coloring, Objective(coloring.colors, tuple(targets[c] for c in used))


def generate(spec: BenchmarkSpec) -> Benchmark:
    graph_rng = SplitMix64(substream_seed(spec.seed, 0))
    extra: dict[str, Any] = {}
    if spec.family == "aperiodic":
        mdp, attempts = _aperiodic_graph(spec, graph_rng)
    else:
        mdp, attempts, sizes = _periodic_graph(spec, graph_rng)
        extra["class_sizes"] = sizes
    coloring, objective = gen_objective(mdp, spec.max_colors, substream_seed(spec.seed, 1))
    provenance = {**asdict(spec), "attempts": attempts, **extra}
    return Benchmark(mdp, coloring, objective, provenance)


def gen_aperiodic(spec: BenchmarkSpec) -> Benchmark:
    if spec.family != "aperiodic":
        raise ValueError("BenchmarkSpec family is not aperiodic")
    return generate(spec)


def gen_periodic(spec: BenchmarkSpec) -> Benchmark:
    if spec.family != "periodic":
        raise ValueError("BenchmarkSpec family is not periodic")
    return generate(spec)


# -- model files --------------------------------------------------------------

def _json_id(x: Hashable):
    return x if isinstance(x, (int, str)) and not isinstance(x, bool) else str(x)


def to_json(b: Benchmark) -> dict[str, Any]:
    mdp = b.mdp
    vertices = [
        {
            "id": _json_id(mdp.label(v)),
            "kind": "stochastic" if mdp.stochastic[v] else "nondeterministic",
            "color": _json_id(b.coloring.colors[b.coloring.of[v]]),
        }
        for v in range(mdp.n)
    ]
    edges = []
    for v in range(mdp.n):
        for u in mdp.succ[v]:
            e = {"from": _json_id(mdp.label(v)), "to": _json_id(mdp.label(u))}
            if mdp.stochastic[v]:
                e["prob"] = mdp.prob[v][u]
            edges.append(e)
    return {
        "schema_version": MODEL_SCHEMA,
        "vertices": vertices,
        "edges": edges,
        "colors": [_json_id(c) for c in b.coloring.colors],
        "objective": {str(c): float(t) for c, t in zip(b.coloring.colors, b.objective.targets)},
        "provenance": b.provenance,
    }


def serialize(b: Benchmark) -> str:
    return json.dumps(to_json(b), indent=1) + "\n"


def _field(obj: Any, key: str, where: str, kind=None):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return value


def from_json(data: Any, check: bool = True) -> Benchmark:
    """Build a benchmark from parsed JSON.  Unknown fields are ignored."""
    raw_vertices = _field(data, "vertices", "model", list)
    raw_edges = _field(data, "edges", "model", list)
    ids: list[Hashable] = []
    kinds: list[bool] = []
    vcolors: list[Hashable] = []
    for i, rv in enumerate(raw_vertices):
        where = f"vertices[{i}]"
        vid = _field(rv, "id", where)
        if not isinstance(vid, (int, str)) or isinstance(vid, bool):
            raise ParseError(f"{where}.id: expected an integer or string")
        kind = rv.get("kind", "nondeterministic")
        if kind not in ("nondeterministic", "stochastic"):
            raise ParseError(f"{where}.kind: expected 'nondeterministic' or 'stochastic', got {kind!r}")
        ids.append(vid)
        kinds.append(kind == "stochastic")
        vcolors.append(rv.get("color", vid))
    index: dict[Hashable, int] = {}
    for i, vid in enumerate(ids):
        if vid in index:
            raise ParseError(f"vertices[{i}].id: duplicate vertex id {vid!r}")
        index[vid] = i
    succ: list[list[int]] = [[] for _ in ids]
    prob: dict[int, dict[int, float]] = {v: {} for v in range(len(ids)) if kinds[v]}
    for i, re in enumerate(raw_edges):
        where = f"edges[{i}]"
        src, dst = _field(re, "from", where), _field(re, "to", where)
        if src not in index:
            raise ParseError(f"{where}.from: unknown vertex {src!r}")
        if dst not in index:
            raise ParseError(f"{where}.to: unknown vertex {dst!r}")
        v, u = index[src], index[dst]
        succ[v].append(u)
        if kinds[v]:
            if "prob" not in re:
                raise ParseError(f"{where}.prob: required on edges leaving stochastic vertex {src!r}")
            p = re["prob"]
            if not isinstance(p, (int, float)) or isinstance(p, bool):
                raise ParseError(f"{where}.prob: expected a number")
            prob[v][u] = prob[v].get(u, 0.0) + float(p)
        elif "prob" in re:
            raise ParseError(f"{where}.prob: not allowed on edges leaving nondeterministic vertex {src!r}")
    mdp = Mdp(tuple(kinds), tuple(map(tuple, succ)), prob, tuple(ids))
    if check:
        report = validate(mdp)
        if not report.ok:
            raise ValidationError(report)

    colors = data.get("colors")
    if colors is None:
        colors = list(dict.fromkeys(vcolors))
    if not isinstance(colors, list):
        raise ParseError("model.colors: expected a list")
    for i, c in enumerate(colors):
        if not isinstance(c, (int, str)) or isinstance(c, bool):
            raise ParseError(f"colors[{i}]: expected an integer or string")
    if len(set(map(str, colors))) != len(colors):
        raise ParseError("model.colors: duplicate color ids")
    by_text = {str(c): c for c in colors}
    for i, c in enumerate(vcolors):
        if c not in colors:
            raise ParseError(f"vertices[{i}].color: undeclared color {c!r}")
    coloring = Coloring.from_map(vcolors, colors)
    raw_obj = data.get("objective", {})
    if not isinstance(raw_obj, dict):
        raise ParseError("model.objective: expected an object mapping colors to targets")
    targets = {}
    for key, val in raw_obj.items():
        if key not in by_text:
            raise ParseError(f"objective[{key!r}]: unknown color")
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not 0.0 <= val <= 1.0:
            raise ParseError(f"objective[{key!r}]: target must be a number in [0, 1]")
        targets[by_text[key]] = float(val)
    objective = Objective.from_dict(coloring, targets)
    provenance = data.get("provenance", {})
    if not isinstance(provenance, dict):
        raise ParseError("model.provenance: expected an object")
    return Benchmark(mdp, coloring, objective, provenance)


def parse(text: str, check: bool = True) -> Benchmark:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_json(data, check)


def load(path: str | Path, check: bool = True) -> Benchmark:
    b = parse(Path(path).read_text(), check)
    if "name" not in b.provenance:
        b.provenance["name"] = Path(path).stem
    return b


def save(b: Benchmark, path: str | Path) -> None:
    Path(path).write_text(serialize(b))


MANIFEST_COLUMNS = ("schema_version", "file", "family", "seed", "vertices", "edges", "period", "colors", "attempts", "status")


def manifest_row(b: Benchmark, file: str) -> dict[str, Any]:
    mdp = b.mdp
    period = cyclic_structure(range(mdp.n), lambda v: mdp.succ[v]).period
    return {
        "schema_version": MANIFEST_SCHEMA,
        "file": file,
        "family": b.provenance.get("family", ""),
        "seed": b.provenance.get("seed", ""),
        "vertices": mdp.n,
        "edges": mdp.num_edges,
        "period": period,
        "colors": b.coloring.num_colors,
        "attempts": b.provenance.get("attempts", ""),
        "status": "ok",
    }


def write_manifest(rows: Iterable[dict[str, Any]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
