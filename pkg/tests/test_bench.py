import json

import numpy as np
import pytest

from multisteady import bench
from multisteady.bench import BenchmarkSpec, generate
from multisteady.decompose import cyclic_structure, is_strongly_connected
from multisteady.errors import AttemptsExhausted, ParseError, ValidationError
from multisteady.model import validate


def _small(family, seed, **kw):
    defaults = dict(vertices=12, edge_prob=0.3) if family == "aperiodic" else dict(classes=3, max_class_size=4, edge_prob=0.6)
    defaults.update(kw)
    return BenchmarkSpec(family, seed, **defaults)


@pytest.mark.parametrize("family", bench.FAMILIES)
def test_deterministic(family):
    a = bench.serialize(generate(_small(family, 17)))
    b = bench.serialize(generate(_small(family, 17)))
    c = bench.serialize(generate(_small(family, 18)))
    assert a == b
    assert a != c


@pytest.mark.parametrize("family", bench.FAMILIES)
def test_valid_and_strongly_connected(family):
    for seed in range(20):
        b = generate(_small(family, seed))
        assert validate(b.mdp).ok
        assert is_strongly_connected(b.mdp.n, b.mdp.edges())
        assert 1 <= b.coloring.num_colors <= 30
        assert all(t in bench.TARGET_GRID for t in b.objective.targets)


def test_complete_graph_at_p1():
    b = generate(BenchmarkSpec("aperiodic", 3, vertices=7, edge_prob=1.0))
    assert b.mdp.num_edges == 49


def test_default_aperiodic_size():
    b = generate(BenchmarkSpec("aperiodic", 10_000))
    assert b.mdp.n == 60
    assert b.provenance["attempts"] >= 1


def test_periodic_layers():
    for seed in range(20):
        b = generate(_small("periodic", seed, classes=5))
        sizes = b.provenance["class_sizes"]
        assert len(sizes) == 5 and all(1 <= s <= 4 for s in sizes)
        layer = np.repeat(np.arange(5), sizes)
        for v, u in b.mdp.edges():
            assert layer[u] == (layer[v] + 1) % 5
        period = cyclic_structure(range(b.mdp.n), lambda v: b.mdp.succ[v]).period
        assert period % 5 == 0


def test_attempts_exhausted():
    with pytest.raises(AttemptsExhausted):
        generate(BenchmarkSpec("aperiodic", 1, vertices=40, edge_prob=0.01, max_attempts=3))


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec("weird", 1)
    with pytest.raises(ValueError):
        BenchmarkSpec("aperiodic", 1, edge_prob=0.0)
    with pytest.raises(ValueError):
        BenchmarkSpec("aperiodic", 1, max_colors=31)


@pytest.mark.parametrize("family", bench.FAMILIES)
def test_round_trip(family, tmp_path):
    b = generate(_small(family, 5))
    assert bench.parse(bench.serialize(b)) == b
    path = tmp_path / "m.json"
    bench.save(b, path)
    assert bench.load(path) == b


def test_missing_edges_named():
    data = json.loads(bench.serialize(generate(_small("aperiodic", 5))))
    del data["edges"]
    with pytest.raises(ParseError, match="'edges'"):
        bench.from_json(data)


def test_unknown_fields_ignored():
    b = generate(_small("aperiodic", 5))
    data = json.loads(bench.serialize(b))
    data["comment"] = "hello"
    data["vertices"][0]["weight"] = 3
    assert bench.from_json(data) == b


def test_parse_errors():
    with pytest.raises(ParseError, match="line 1"):
        bench.parse("{not json")
    doc = {"vertices": [{"id": "a", "kind": "stochastic"}, {"id": "b"}],
           "edges": [{"from": "a", "to": "b"}, {"from": "b", "to": "a"}]}
    with pytest.raises(ParseError, match="prob"):
        bench.from_json(doc)
    doc["edges"][0]["prob"] = 0.5
    with pytest.raises(ValidationError):
        bench.from_json(doc)
    doc["edges"][0]["prob"] = 1.0
    b = bench.from_json(doc)
    assert b.mdp.stochastic == (True, False)
    assert b.objective.targets == (0.0, 0.0)


def test_manifest(tmp_path):
    b = generate(_small("periodic", 2))
    row = bench.manifest_row(b, "x.json")
    assert row["period"] % 3 == 0
    assert row["edges"] == b.mdp.num_edges
    bench.write_manifest([row], tmp_path / "manifest.csv")
    header = (tmp_path / "manifest.csv").read_text().splitlines()[0]
    assert header == ",".join(bench.MANIFEST_COLUMNS)
