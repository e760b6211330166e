import json
import math
import subprocess
import sys

import jsonschema
import pytest

from replica_tail.cli import main, parse_grid
from replica_tail.hypergraph import Hypergraph, complete_hypergraph
from replica_tail.rate import relative_entropy
from replica_tail.schemas import SCHEMAS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, schema, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMAS[schema])
    return doc


@pytest.fixture
def files(tmp_path):
    paths = {}

    def write(name, doc):
        p = tmp_path / name
        p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        paths[name] = p
        return p

    write("k8.json", complete_hypergraph(8, 2).dumps())
    write("edge.json", Hypergraph(2, 2, [(0, 1)]).dumps())
    write("k30.json", complete_hypergraph(30, 2).dumps())
    write("k16.json", complete_hypergraph(16, 2).dumps())
    write("empty.json", {"s": 2, "n": 3, "edges": []})
    write("bad.json", '{"s": 2, "n": 3, "edges": [[0, 1], [1, 9]]}')
    write("half.json", {"weights": [0.5, 0.5], "densities": [[0, 1], [1, 0]]})
    write("alpha3.json", {"weights": [0.3, 0.7], "densities": [[0, 1], [1, 0]]})
    write("motif.json", {"n": 2, "edges": [[0, 1]]})
    return paths


# --- grids ---

def test_parse_grid():
    assert parse_grid("0.2:0.4:0.05") == [0.2, 0.25, 0.3, 0.35]
    assert parse_grid("0.1,0.3") == [0.1, 0.3]
    assert parse_grid("0.5") == [0.5]
    for bad in ("0.5:0.5:0.1", "0.1:0.5:0", "", "1:2"):
        with pytest.raises(ValueError):
            parse_grid(bad)


# --- region ---

def test_region_symmetric_grid(capsys):
    code, out, _ = run(capsys, "region", "--s", 2, "--p", "0.2:0.4:0.05", "--r", "0.3:0.9:0.05")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "p,r,symmetric,gap"
    assert len(lines) > 1 and all(line.split(",")[2] == "true" for line in lines[1:])


def test_region_s3_both_verdicts(capsys):
    code, out, _ = run(capsys, "region", "--s", 3, "--p", "0.2,0.35", "--r", "0.3:0.99:0.01")
    verdicts = {line.split(",")[2] for line in out.splitlines()[1:]}
    assert code == 0 and verdicts == {"true", "false"}


def test_region_empty_grid(capsys):
    assert run(capsys, "region", "--s", 2, "--p", "0.5:0.5:0.1", "--r", "0.6")[0] == 2


def test_region_json(capsys):
    code, out, _ = run(capsys, "region", "--s", 2, "--p", "0.3", "--r", "0.5", "--format", "json")
    assert code == 0 and json.loads(out)[0]["symmetric"] is True


# --- solve ---

def test_solve(capsys, files):
    doc = run_json(capsys, "solution", "solve", files["k8.json"], "--p", 0.3, "--r", 0.5)
    assert doc["objective"] == pytest.approx(0.087176, abs=1e-6)
    assert doc["replica_value"] == pytest.approx(relative_entropy(0.3, 0.5), rel=1e-11)


def test_solve_oracle_check(capsys, files):
    doc = run_json(capsys, "solution", "solve", files["edge.json"], "--p", 0.5, "--r", 0.7, "--oracle-check")
    assert doc["oracle"]["agree"] is True


def test_solve_malformed(capsys, files):
    code, _, err = run(capsys, "solve", files["bad.json"], "--p", 0.3, "--r", 0.5)
    assert code == 2 and "edges[1]" in err
    assert run(capsys, "solve", files["k8.json"], "--p", 0.5, "--r", 0.3)[0] == 2
    assert run(capsys, "solve", files["k8.json"], "--p", 0.3, "--r", 0.5, "--oracle-check")[0] == 2


def test_solve_output_file(capsys, files, tmp_path):
    target = tmp_path / "sol.json"
    code, out, _ = run(capsys, "solve", files["edge.json"], "--p", 0.5, "--r", 0.7, "--out", target)
    assert code == 0 and out == ""
    jsonschema.validate(json.loads(target.read_text()), SCHEMAS["solution"])


# --- certificate ---

def test_certificate(capsys):
    doc = run_json(capsys, "certificate", "certificate", "--s", 2, "--p", 0.05, "--r", 0.5)
    assert doc["gap"] > 0 and doc["constraint_slack"] > 0 and doc["objective_slack"] > 0


def test_certificate_concave_pair(capsys):
    doc = run_json(capsys, "certificate", "certificate", "--s", 2, "--p", 0.05, "--r", 0.45, "--concave-pair")
    assert doc["kind"] == "concave-pair" and doc["M"] == 2


def test_certificate_symmetric(capsys):
    doc = run_json(capsys, "no-breaking", "certificate", "--s", 2, "--p", 0.3, "--r", 0.5)
    assert doc["symmetric"] is True


def test_certificate_invalid(capsys):
    assert run(capsys, "certificate", "--s", 2, "--p", 0.3, "--r", 0.2)[0] == 2


# --- graphon ---

def test_graphon_slopes(capsys, files):
    doc = run_json(capsys, "graphon", "graphon", files["half.json"], files["motif.json"], "--p", 0.3, "--r", 0.5)
    assert doc["value"] == pytest.approx(relative_entropy(0.3, 0.5), abs=1e-10)
    doc = run_json(capsys, "graphon", "graphon", files["alpha3.json"], files["motif.json"], "--p", 0.3, "--r", 0.5)
    assert doc["value"] < relative_entropy(0.3, 0.5) - 1e-5


def test_graphon_two_sided(capsys, files):
    doc = run_json(capsys, "graphon", "graphon", files["alpha3.json"], files["motif.json"],
                   "--mode", "two-sided", "--p", 0.3, "--epsilon", 0.05)
    assert doc["value"] > 0
    code = run(capsys, "graphon", files["alpha3.json"], files["motif.json"], "--mode", "two-sided", "--p", 0.3, "--epsilon", 100)[0]
    assert code == 3


def test_graphon_requires_parameters(capsys, files):
    assert run(capsys, "graphon", files["half.json"], files["motif.json"], "--p", 0.3)[0] == 2


# --- tail ---

def test_tail_methods_agree(capsys, files):
    exact = run_json(capsys, "tail", "tail", files["k16.json"], "--p", 0.3, "--r", 0.5)
    plain = run_json(capsys, "tail", "tail", files["k16.json"], "--p", 0.3, "--r", 0.5, "--method", "plain-mc", "--seed", 4)
    tilted = run_json(capsys, "tail", "tail", files["k16.json"], "--p", 0.3, "--r", 0.5, "--method", "tilted-mc", "--seed", 4)
    for est in (plain, tilted):
        assert abs(est["probability"] - exact["probability"]) < 3 * est["std_error"]


def test_tail_budget(capsys, files):
    assert run(capsys, "tail", files["k30.json"], "--p", 0.3, "--r", 0.5)[0] == 3


def test_tail_deterministic(capsys, files):
    argv = ("tail", files["k8.json"], "--p", 0.3, "--r", 0.6, "--method", "plain-mc", "--samples", 1000, "--seed", 9)
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


# --- meanfield ---

def test_meanfield_families(capsys):
    code, out, _ = run(capsys, "meanfield", "--family", "a2", "--sizes", "32,64,128", "--s", 3, "--a", 0.3)
    rows = json.loads(out)
    for row in rows:
        jsonschema.validate(row, SCHEMAS["meanfield"])
    edge = [r["edge_ratio"] for r in rows]
    cod = [r["codegree_ratio"] for r in rows]
    assert edge[0] > edge[1] > edge[2] and cod[0] < cod[1] < cod[2]
    code, out, _ = run(capsys, "meanfield", "--family", "regular", "--sizes", "16,64", "--format", "csv")
    assert code == 0 and out.splitlines()[0].startswith("size,")


def test_meanfield_file_and_empty(capsys, files):
    doc = run_json(capsys, "meanfield", "meanfield", files["k8.json"])
    assert doc["lipschitz_bound"] == pytest.approx(2.0)
    assert run(capsys, "meanfield", files["empty.json"])[0] == 2


# --- misc ---

@pytest.mark.parametrize("name", sorted(SCHEMAS))
def test_schema_command(capsys, name):
    code, out, _ = run(capsys, "schema", name)
    assert code == 0
    jsonschema.Draft202012Validator.check_schema(json.loads(out))


def test_threads_env(capsys, files, monkeypatch):
    monkeypatch.setenv("REPLICA_TAIL_THREADS", "1")
    assert run(capsys, "tail", files["edge.json"], "--p", 0.5, "--r", 0.7)[0] == 0
    monkeypatch.setenv("REPLICA_TAIL_THREADS", "many")
    assert run(capsys, "tail", files["edge.json"], "--p", 0.5, "--r", 0.7)[0] == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "replica_tail", "schema", "tail"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["title"] == "TailEstimate"
