import json
import subprocess
import sys

import numpy as np
import pytest

from thurstonlab.cli import COMMANDS, RunConfig, UsageError, dispatch, main
from thurstonlab.formats import ParseError, dumps_csv, dumps_json, graph_to_dict, parse_functional
from thurstonlab.reps import schottky_sl2, sym_power
from thurstonlab.sft import full_shift, golden_mean_shift


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    g = full_shift(2)
    rng = np.random.default_rng(1)
    roof = rng.uniform(0.5, 2.0, g.n_edges)
    direction = rng.normal(size=g.n_edges)
    graph = graph_to_dict(g, {"zero": np.zeros(4), "roof": roof, "roof3": 3 * roof, "dir": direction})
    gm = golden_mean_shift()
    bump = [1.0 if e == gm.edge_between(1, 2) else 0.0 for e in range(gm.n_edges)]
    golden = graph_to_dict(gm, {"bump": bump, "unit": np.ones(gm.n_edges)})
    rep = sym_power(schottky_sl2(3.0), 3).to_dict()
    fam = dict(rep, derivatives=[(0.05 * np.eye(3)).ravel().tolist(), np.zeros(9).tolist()])
    return {
        "graph": _write(tmp_path / "shift.json", graph),
        "golden": _write(tmp_path / "golden.json", golden),
        "rep": _write(tmp_path / "rep.json", rep),
        "family": _write(tmp_path / "family.json", fam),
        "bad": _write(tmp_path / "bad.json", {"states": [1, 2], "edges": [{"from": 1, "to": 2}]}),
        "dir": tmp_path,
    }


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_pressure_report(files, capsys):
    status, out, _ = run(capsys, "pressure", "--input", files["graph"], "--potential", "zero")
    assert status == 0
    rep = json.loads(out)
    assert rep["pressure"] == pytest.approx(0.6931472, abs=1e-7)
    assert rep["command"] == "pressure" and rep["cutoff"] == 8 and "tol" in rep and rep["seed"] == 0


def test_entropy_and_flow_entropy(files, capsys):
    status, out, _ = run(capsys, "entropy", "--input", files["golden"])
    assert json.loads(out)["topological_entropy"] == pytest.approx(np.log((1 + 5**0.5) / 2))
    status, out, _ = run(capsys, "flow-entropy", "--input", files["graph"], "--potential", "roof")
    assert status == 0 and json.loads(out)["flow_entropy"] > 0


def test_flow_dth_rescaled(files, capsys):
    status, out, _ = run(capsys, "flow-dth", "--input", files["graph"], "--potential", "roof", "--potential2", "roof3")
    assert status == 0
    assert json.loads(out)["value"] == pytest.approx(0.0, abs=1e-12)


def test_flow_dth_two_files(files, capsys):
    status, out, _ = run(
        capsys, "flow-dth", "--input", files["graph"], "--input2", files["graph"], "--potential", "roof", "--potential2", "roof3"
    )
    assert status == 0 and abs(json.loads(out)["value"]) <= 1e-12
    status, _, err = run(
        capsys, "flow-dth", "--input", files["graph"], "--input2", files["golden"], "--potential", "roof", "--potential2", "unit"
    )
    assert status == 2 and "GraphMismatch" in err


def test_flow_finsler_and_cycle_ratio(files, capsys):
    status, out, _ = run(capsys, "flow-finsler", "--input", files["graph"], "--potential", "roof", "--potential2", "dir")
    rep = json.loads(out)
    assert status == 0 and rep["finsler_norm"] >= 0 and rep["pressure_norm"] >= 0
    status, out, _ = run(capsys, "max-cycle-ratio", "--input", files["graph"], "--potential", "dir", "--potential2", "roof")
    rep = json.loads(out)
    assert status == 0 and rep["cycle"] and rep["method"] == "howard"


def test_livsic_check(files, capsys):
    status, out, _ = run(capsys, "livsic-check", "--input", files["golden"], "--potential", "bump")
    rep = json.loads(out)
    assert status == 0 and not rep["is_coboundary"]
    assert sorted(rep["witness"]) == ["1", "2"]


def test_enumerate_classes_csv(files, capsys):
    status, out, _ = run(capsys, "enumerate-classes", "--cutoff", "2", "--format", "csv")
    lines = out.strip().splitlines()
    assert status == 0 and lines[0] == "word,length,primitive_flag" and len(lines) == 1 + 12


def test_rep_commands(files, capsys):
    status, out, _ = run(capsys, "rep-lengths", "--input", files["rep"], "--cutoff", "3", "--functional", "alpha1")
    rep = json.loads(out)
    assert status == 0 and rep["lengths"]["a"] == pytest.approx(3.0) and rep["generating_set"] == ["a", "b"]
    status, out, _ = run(capsys, "rep-entropy", "--input", files["rep"], "--cutoff", "10")
    assert status == 0 and json.loads(out)["value"] > 0
    status, out, _ = run(capsys, "rep-dth", "--input", files["rep"], "--input2", files["rep"], "--functional", "lambda1")
    rep = json.loads(out)
    assert status == 0 and rep["value"] == 0.0 and rep["maximizing_class"] == "a"
    status, out, _ = run(capsys, "rep-finsler", "--input", files["family"], "--cutoff", "8")
    assert status == 0 and "value" in json.loads(out)


def test_functional_forms(files, capsys):
    inline = '{"coeffs": [1.0, 0.0, -1.0]}'
    status, out, _ = run(capsys, "rep-lengths", "--input", files["rep"], "--cutoff", "2", "--functional", inline)
    assert status == 0 and json.loads(out)["lengths"]["a"] == pytest.approx(6.0)
    path = _write(files["dir"] / "f.json", {"preset": "hilbert"})
    status, out2, _ = run(capsys, "rep-lengths", "--input", files["rep"], "--cutoff", "2", "--functional", path)
    assert json.loads(out2)["lengths"] == json.loads(out)["lengths"]
    with pytest.raises(ParseError):
        parse_functional('{"coeffs": [1.0]}', 3)


def test_exit_codes(files, capsys):
    status, _, err = run(capsys, "pressure", "--input", files["bad"])
    assert status == 2 and "NotIrreducible" in err
    status, _, err = run(capsys, "pressure", "--input", str(files["dir"] / "missing.json"))
    assert status == 3
    (files["dir"] / "junk.json").write_text("{not json")
    assert run(capsys, "pressure", "--input", str(files["dir"] / "junk.json"))[0] == 3
    assert run(capsys, "pressure")[0] == 3
    assert run(capsys, "rep-lengths", "--input", files["rep"], "--functional", "bogus")[0] == 2
    assert run(capsys, "pressure", "--input", files["graph"], "--potential", "nope")[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3
    capsys.readouterr()


def test_domain_error_names_entity(files, capsys):
    status, _, err = run(capsys, "rep-lengths", "--input", files["rep"], "--functional", '{"coeffs": [-1, 0, 1]}')
    assert status == 2 and "class a" in err and len(err.strip().splitlines()) == 1


def test_config_validation():
    with pytest.raises(UsageError):
        RunConfig("pressure", cutoff=0).validate()
    with pytest.raises(UsageError):
        RunConfig("pressure", tol=0.0).validate()
    assert set(COMMANDS) >= {"pressure", "rep-finsler", "self-test"} and len(COMMANDS) == 13


def test_out_file_is_written_atomically(files, capsys, tmp_path):
    target = tmp_path / "report.json"
    status, out, _ = run(capsys, "pressure", "--input", files["graph"], "--out", str(target))
    assert status == 0 and out == ""
    assert json.loads(target.read_text())["pressure"] > 0
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".report")] == []


def test_byte_identical_reports(files):
    cmd = [sys.executable, "-m", "thurstonlab.cli", "rep-dth", "--input", files["rep"], "--input2", files["rep"], "--cutoff", "8"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a


def test_self_test_passes(capsys):
    status, out, _ = run(capsys, "self-test", "--seed", "3")
    rep = json.loads(out)
    assert status == 0 and rep["passed"] and len(rep["checks"]) == 9


def test_number_formatting():
    text = dumps_json({"x": 0.1, "n": 3, "nan": float("nan"), "v": [1.0, 2.5]})
    assert '"x": 0.10000000000000001' in text and '"nan": null' in text and '"n": 3' in text
    assert json.loads(text)["v"] == [1.0, 2.5]
    assert dumps_csv(["a"], [(1 / 3,)]).splitlines()[1] == "0.333333333333"


def test_warnings_are_reported(files, capsys):
    status, out, _ = run(capsys, "rep-dth", "--input", files["rep"], "--input2", files["rep"], "--cutoff", "8")
    rep = json.loads(out)
    assert status == 0
    assert all(isinstance(w, str) for w in rep.get("warnings", []))
