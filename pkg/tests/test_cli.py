import json

import pytest

from minplus_traffic.cli import RunConfig, main
from minplus_traffic.hybrid import MP, HybridMatrix
from minplus_traffic.petri import dump_net, homog_net
from minplus_traffic.systems import SystemDyn, format_system


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("MINPLUS_TRAFFIC_OUT", str(tmp_path / "runs"))
    return tmp_path / "runs"


def test_eigen(tmp_path, capsys):
    f = tmp_path / "A.txt"
    f.write_text("# two-cycle\neps 3\n1 eps\n")
    assert main(["eigen", str(f)]) == 0
    out = capsys.readouterr().out
    assert "lambda = 2" in out
    assert "cycle = 1 -> 2 -> 1" in out


def test_eigen_errors(tmp_path):
    f = tmp_path / "A.txt"
    f.write_text("0 eps\n1 0\n")
    assert main(["eigen", str(f)]) == 3
    f.write_text("0 x\n1 0\n")
    assert main(["eigen", str(f)]) == 2
    assert main(["eigen", str(tmp_path / "missing.txt")]) == 2


def test_bad_arguments():
    assert main(["nosuchcommand"]) == 2
    assert main(["diagram", "--n", "two"]) == 2


def test_diagram_replay_is_deterministic(out_root):
    args = ["diagram", "--n", "2", "--m", "3", "--density-grid", "6", "--burn-in", "50", "--horizon", "500", "--svg"]
    assert main(args) == 0
    (run,) = list(out_root.iterdir())
    first = (run / "diagram.csv").read_text()
    assert (run / "diagram.svg").read_text().startswith("<svg")
    cfg = RunConfig.from_json((run / "config.json").read_text())
    assert cfg.params["K"] == 500
    assert main(args) == 0
    assert (run / "diagram.csv").read_text() == first
    assert (run / "run.log").read_text().startswith("minplus-traffic")


def test_verify(capsys):
    assert main(["verify", "--n", "2", "--m", "10", "--density-grid", "11"]) == 0
    assert "0 FAIL" in capsys.readouterr().out
    assert main(["verify", "--n", "2", "--m", "10", "--density", "0.4", "--perturb", "1e-6"]) == 1


def test_simulate_models(out_root):
    assert main(["simulate", "--model", "road", "--word", "1100", "--horizon", "8", "--out", str(out_root / "r")]) == 0
    lines = (out_root / "r" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "k,q1,q2,q3,q4,flow"
    assert len(lines) == 10
    assert main(["simulate", "--model", "junction", "--horizon", "5", "--density", "0.3"]) == 0


def test_simulate_nondeterministic(tmp_path):
    f = tmp_path / "net.json"
    dump_net(homog_net(), f)
    assert main(["simulate", str(f)]) == 4
    f.write_text("{not json")
    assert main(["simulate", str(f)]) == 2
    f.write_text(json.dumps({"transitions": ["q"], "places": [{"id": "p", "downstream": ["x"]}], "arcs": []}))
    assert main(["simulate", str(f)]) == 3


def test_tent(capsys):
    assert main(["tent", "--mode", "exact"]) == 0
    out = capsys.readouterr().out
    assert "{0, 2/3}" in out
    assert "(exact): 3/5" in out


def test_compose(tmp_path, capsys):
    k = (MP,)
    S = SystemDyn(HybridMatrix([[1.0]], k), HybridMatrix([[0.0]], k), HybridMatrix([[0.0]], k))
    f = tmp_path / "s.txt"
    f.write_text(format_system(S))
    assert main(["compose", "series", str(f), str(f)]) == 0
    assert capsys.readouterr().out.startswith("state: p p p")
    assert main(["compose", "feedback", str(f), "--out", str(tmp_path / "fb.txt")]) == 0
    assert (tmp_path / "fb.txt").exists()
    assert main(["compose", "parallel", str(f)]) == 2
