import io
import json
import subprocess
import sys

import jsonschema
import pytest

from loggas.cli import load_schema, run
from loggas.energy import W_LATTICE
from loggas.torus import lattice, new_config, save_config


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, json.loads(buf.getvalue())


def check(report):
    jsonschema.validate(report, load_schema("envelope"))
    jsonschema.validate(report["result"], load_schema(report["command"]))
    return report["result"]


@pytest.fixture
def lattice8(tmp_path):
    path = tmp_path / "lattice8.json"
    save_config(lattice(8), path)
    return str(path)


@pytest.fixture
def pair(tmp_path):
    path = tmp_path / "pair.json"
    save_config(new_config([0.0, 1.5], 2), path)
    return str(path)


def test_energy_lattice(lattice8):
    code, rep = call("energy", "--config", lattice8)
    assert code == 0
    res = check(rep)
    assert res["w"] == pytest.approx(W_LATTICE, abs=1e-10)
    assert rep["run_spec"]["normalization"] == "paper_rhs"


def test_energy_via_definition(pair):
    code, rep = call("energy", "--config", pair, "--via-definition")
    assert code == 0
    res = check(rep)
    assert json.dumps(res)


@pytest.mark.parametrize("argv", [
    ("defect",),
    ("field-check", "--radii", "0.1,0.2"),
    ("correlate", "--exact"),
    ("correlate", "--mc", "--samples", "2000"),
    ("counts", "--T", "0.5"),
])
def test_config_commands_validate(pair, argv):
    code, rep = call(argv[0], "--config", pair, *argv[1:])
    assert code == 0
    check(rep)


@pytest.mark.parametrize("argv", [
    ("qlb-sweep", "--N", "4,8", "--count", "20", "--seed", "3"),
    ("minimize", "--N", "6", "--seed", "2"),
    ("theorem1-sweep", "--N", "16", "--eps-count", "2"),
    ("fekete", "--N", "16"),
    ("sample", "--N", "4", "--beta", "2", "--steps", "200", "--burn-in", "50", "--thinning", "5"),
    ("sweep-beta", "--N", "32", "--betas", "1,16", "--seeds", "1", "--steps", "400", "--burn-in", "100"),
])
def test_generator_commands_validate(argv):
    code, rep = call(*argv)
    assert code == 0
    check(rep)


def test_qlb_sweep_deterministic():
    argv = ("qlb-sweep", "--N", "16", "--count", "100", "--seed", "7")
    assert call(*argv) == call(*argv)


def test_sample_reproducible_csv(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, rep = call("sample", "--N", "4", "--beta", "2", "--steps", "300", "--burn-in", "100",
                         "--thinning", "4", "--seed", "11", "--out", str(p))
        assert code == 0
        check(rep)
    assert paths[0].read_text() == paths[1].read_text()
    assert len(paths[0].read_text().splitlines()) == 50


def test_out_file(lattice8, tmp_path):
    out = tmp_path / "rep.json"
    buf = io.StringIO()
    assert run(["energy", "--config", lattice8, "--out", str(out)], stdout=buf) == 0
    assert buf.getvalue() == ""
    check(json.loads(out.read_text()))


def test_radius_beyond_half_gap_rejected(pair):
    code, rep = call("field-check", "--config", pair, "--radii", "0.25")
    assert code == 2


def test_missing_file():
    code, rep = call("correlate", "--config", "missing.json")
    assert code == 2
    assert rep["error"] == "FileNotFound"
    jsonschema.validate(rep, load_schema("error"))


def test_parse_error():
    code, rep = call("energy")
    assert code == 2
    assert rep["error"] == "ParseError"


def test_domain_error_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"points": [0.0, 2.0], "period": 2}))
    code, rep = call("energy", "--config", str(path))
    assert code == 1
    assert rep["error"] == "DuplicatePoint"


def test_console_entry_point(lattice8):
    out = subprocess.run([sys.executable, "-m", "loggas.cli", "energy", "--config", lattice8],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["result"]["w"] == pytest.approx(W_LATTICE, abs=1e-10)


def test_output_independent_of_thread_count(monkeypatch):
    argv = ("theorem1-sweep", "--N", "16", "--eps-count", "3")
    monkeypatch.setenv("LOGGAS_THREADS", "1")
    one = call(*argv)
    monkeypatch.setenv("LOGGAS_THREADS", "4")
    assert call(*argv) == one
