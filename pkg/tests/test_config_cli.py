import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from momentldp import ChamberBall, Complement, Everything, HalfSpace, InvalidConfig, Spin, Standard, TorusRep
from momentldp.cli import main
from momentldp.config import RunConfig, parse_matrix, parse_representation
from momentldp.regions import parse_region

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
QUBIT = str(CONFIGS / "qubit.json")
BERN = str(CONFIGS / "bernoulli.json")
SPIN1 = str(CONFIGS / "spin1.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


BASE = {"representation": {"family": "standard", "d": 2}, "state": {"diagonal": [0.7, 0.3]}}


def test_parse_representation():
    assert parse_representation({"family": "standard", "d": 3}) == Standard(3)
    assert parse_representation({"family": "spin", "j": 1.5}) == Spin(1.5)
    assert parse_representation({"family": "torus", "weights": [[0], [1]]}) == TorusRep([(0,), (1,)])
    for bad in ({"family": "weird"}, {"family": "standard"}, {"d": 2}, "standard"):
        with pytest.raises(InvalidConfig):
            parse_representation(bad)


def test_parse_matrix_forms():
    z = parse_matrix([[[1, 0], [0, 1]], [[0, -1], [2, 0]]])
    assert np.array_equal(z, [[1, 1j], [-1j, 2]])
    assert parse_matrix([1, 0, 0, 1]).shape == (2, 2)
    with pytest.raises(InvalidConfig):
        parse_matrix([1, 2, 3])
    with pytest.raises(InvalidConfig):
        parse_matrix([[1, 0], [0, 1]], dim=3)


@pytest.mark.parametrize("patch", [
    {"state": {"diagonal": [0.8, 0.3]}},
    {"state": {"diagonal": [0.5, 0.3, 0.2]}},
    {"seed": -1},
    {"workers": 0},
    {"output": {"format": "xml"}},
    {"point": {"cartan": [0.5]}},
    {"group": "U(3)"},
    {"optimizer": {"no_such_option": 1}},
])
def test_invalid_configs(patch):
    with pytest.raises(InvalidConfig):
        RunConfig.from_dict({**BASE, **patch})


def test_config_roundtrip_and_seed():
    cfg = RunConfig.from_dict({**BASE, "seed": 42})
    assert cfg.optimizer.seed == 42
    again = RunConfig.from_dict(cfg.to_dict())
    assert np.allclose(again.state, cfg.state) and again.representation == cfg.representation
    assert again.seed == 42


def test_load_errors(tmp_path):
    with pytest.raises(InvalidConfig):
        RunConfig.load(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InvalidConfig):
        RunConfig.load(p)


def test_parse_region():
    assert isinstance(parse_region("everything"), Everything)
    b = parse_region("ball:0.7,0.3:0.15")
    assert isinstance(b, ChamberBall) and b.contains([0.75, 0.25]) and not b.contains([0.9, 0.1])
    h = parse_region("halfspace:1,0:0.9")
    assert isinstance(h, HalfSpace) and h.contains([0.95, 0.05]) and not h.contains([0.8, 0.2])
    c = parse_region("not:ball:0.7,0.3:0.15")
    assert isinstance(c, Complement) and c.contains([0.9, 0.1])
    for bad in ("ball:0.7:0", "ball:a,b:1", "cube:1", "halfspace:0,0:1", "ball:1:x"):
        with pytest.raises(InvalidConfig):
            parse_region(bad)


def test_rate_json(capsys):
    code, out, _ = run(capsys, "rate", "--config", QUBIT, "--x", "0.9,0.1")
    assert code == 0
    d = json.loads(out)
    assert d["value"] == pytest.approx(0.1163217566, abs=1e-8)
    assert d["certificate"]["kind"] == "converged"
    assert d["cross_check"]["abs_diff"] <= 1e-6
    assert d["optimizer"]["seed"] == 7 and "gradient_tolerance" in d["tolerances"]


def test_rate_infinite_exit_code(capsys):
    code, out, _ = run(capsys, "rate", "--config", QUBIT, "--x", "1.2,-0.2", "--format", "csv")
    assert code == 2
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["value"] == "inf" and row["certificate"] == "diverged"
    code, out, _ = run(capsys, "rate", "--config", QUBIT, "--x", "1.2,-0.2")
    assert code == 2 and json.loads(out)["value"] == "inf"


def test_rate_uses_config_point(capsys):
    code, out, _ = run(capsys, "rate", "--config", SPIN1, "--method", "an")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.0818005512, abs=1e-8)


def test_rate_errors(capsys):
    code, _, err = run(capsys, "rate", "--config", QUBIT, "--x", "0.9")
    assert code == 1 and err.startswith("error:")
    code, _, err = run(capsys, "rate", "--config", "/nonexistent.json")
    assert code == 1


def test_scan_bernoulli_matches_kl(capsys, tmp_path):
    out_path = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--config", BERN, "--grid", "0.1:0.9:9", "--format", "csv",
                     "--out", str(out_path))
    assert code == 0
    rows = list(csv.DictReader(out_path.open()))
    assert len(rows) == 9
    for r in rows:
        a = float(r["c0"])
        kl = a * math.log(a / 0.3) + (1 - a) * math.log((1 - a) / 0.7)
        assert float(r["value"]) == pytest.approx(kl, abs=1e-7)


def test_scan_out_of_range(capsys):
    code, _, err = run(capsys, "scan", "--config", BERN, "--grid=-1:3:5")
    assert code == 1 and "error" in err


def test_simulate_outputs(capsys, tmp_path):
    out_path = tmp_path / "sim.csv"
    code, _, _ = run(capsys, "simulate", "--config", QUBIT, "--m-list", "2-6", "--format", "csv",
                     "--out", str(out_path))
    assert code == 0
    rows = list(csv.DictReader(out_path.open()))
    assert [int(r["m"]) for r in rows] == [2, 3, 4, 5, 6]
    assert float(rows[1]["mu_exact"]) == pytest.approx(0.42, abs=1e-12)
    assert rows[0]["empirical_rate"] == "inf"
    summary = json.loads(Path(str(out_path) + ".summary.json").read_text())
    assert summary["upper_bound"]["holds"] and summary["seed"] == 7


def test_simulate_deterministic(capsys):
    outs = []
    for workers in ("1", "3"):
        for _ in range(2):
            code, out, _ = run(capsys, "simulate", "--config", QUBIT, "--m-list", "4,6",
                               "--region", "halfspace:1,0:0.85", "--samples", "3000", "--workers", workers)
            assert code == 0
            outs.append(out)
    assert outs[0] == outs[1] and outs[2] == outs[3]
    d = json.loads(outs[0])
    assert all(r["ci_low"] <= r["mu_exact"] <= r["ci_high"] for r in d["rows"])


def test_selftest_and_inject(capsys):
    code, out, _ = run(capsys, "selftest", "--suites", "chi,moment")
    assert code == 0 and all(s["passed"] for s in json.loads(out)["suites"])
    code, out, _ = run(capsys, "selftest", "--suites", "chi", "--inject", "chi")
    assert code == 1
    code, _, err = run(capsys, "selftest", "--suites", "nope")
    assert code == 1 and "error" in err
