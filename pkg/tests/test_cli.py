import json
import re

import pytest

from sispa.cli import main
from sispa.io import load_valuation, read_csv, read_set_cover


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def xos_file(tmp_path):
    assert main(["generate", "random-xos", "--param", "m=3", "--param", "L=2", "--seed", "4",
                 "--out", str(tmp_path / "x")]) == 0
    return tmp_path / "x" / "valuation.json"


def test_generate_xos_round_trips(tmp_path):
    assert main(["generate", "random-xos", "--param", "m=5", "--param", "L=3", "--seed", "1",
                 "--out", str(tmp_path)]) == 0
    path = tmp_path / "valuation.json"
    before = path.read_text()
    val = load_valuation(path)
    assert val.m == 5 and val.clauses.shape == (3, 5)
    from sispa.io import save_valuation
    save_valuation(val, path)
    assert path.read_text() == before


def test_generate_empty_coverage(tmp_path):
    assert main(["generate", "random-coverage", "--param", "m=3", "--param", "vertices=0",
                 "--out", str(tmp_path)]) == 0
    assert load_valuation(tmp_path / "valuation.json").value({0, 1, 2}) == 0


def test_generate_worked_cover(tmp_path):
    assert main(["generate", "set-cover-regular", "--param", "k=2", "--param", "m=2", "--param", "r=1",
                 "--seed", "9", "--out", str(tmp_path)]) == 0
    sc = read_set_cover(tmp_path / "cover.txt")
    assert sorted(map(sorted, sc.sets)) == [[1], [2]]


def test_hardness_reports_opt(tmp_path, capsys):
    cover = tmp_path / "cover.txt"
    cover.write_text("2 2 1\n1\n2\n")
    assert main(["hardness", "--instance", str(cover), "--out", str(tmp_path / "o")]) == 0
    assert "OPT = 7" in capsys.readouterr().out
    row = read_csv(tmp_path / "o" / "summary.csv")[0]
    assert row["OPT"] == "7" and row["identity"] == "True"


def test_run_is_deterministic(tmp_path, xos_file):
    cfg = _write(tmp_path / "run.json", {
        "T": 100, "N": 2, "seed": 5, "bounds": {"D": 1.0},
        "bidders": [{"valuation": str(xos_file), "learner": "ftpl"}],
        "adversary": {"kind": "uniform", "D": 1.0},
    })
    outs = []
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / name)]) == 0
        outs.append({f: (tmp_path / name / f).read_bytes() for f in ("trace.csv", "summary.csv")})
    assert outs[0] == outs[1]
    rows = read_csv(tmp_path / "a" / "trace.csv")
    assert len(rows) == 200 and rows[0]["t"] == "1"


def test_threaded_run_matches_serial(tmp_path, xos_file):
    cfg = _write(tmp_path / "run.json", {
        "T": 60, "N": 3, "seed": 2, "bounds": {"D": 1.0},
        "bidders": [{"valuation": str(xos_file), "learner": "ftpl"},
                    {"valuation": str(xos_file), "learner": "mw", "params": {"d": 2}}],
    })
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert main(["run", "--config", cfg, "--threads", "2", "--out", str(tmp_path / "p")]) == 0
    for f in ("trace.csv", "summary.csv"):
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "p" / f).read_bytes()


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2
    cfg = _write(tmp_path / "bad.json", {"T": 10, "bidders": []})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    cover = tmp_path / "cover.txt"
    cover.write_text("2 2 3\n1\n2\n")
    assert main(["hardness", "--instance", str(cover), "--out", str(tmp_path / "o")]) == 2


def test_guard_violation_exit_3(tmp_path):
    assert main(["generate", "random-xos", "--param", "m=30", "--param", "L=2",
                 "--out", str(tmp_path / "x")]) == 0
    val = str(tmp_path / "x" / "valuation.json")
    cfg = _write(tmp_path / "big.json", {
        "T": 5, "seed": 1, "bounds": {"D": 1.0},
        "bidders": [{"valuation": val, "learner": "ftpl"}, {"valuation": val, "learner": "ftpl"}],
    })
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_estimate_constant_learner(tmp_path):
    cover = tmp_path / "cover.txt"
    cover.write_text("2 2 1\n1\n2\n")
    cfg = _write(tmp_path / "est.json", {"T": 100, "N": 20, "seed": 0, "learner": "constant"})
    assert main(["estimate", "--config", cfg, "--instance", str(cover), "--out", str(tmp_path / "o")]) == 0
    row = read_csv(tmp_path / "o" / "summary.csv")[0]
    assert abs(float(row["estimate"]) - 7) < 1


def test_suite_subset(capsys):
    assert main(["suite", "--criteria", "1,2"]) == 0
    out = capsys.readouterr().out
    assert re.search(r"\[PASS\] criterion +1 ", out) and re.search(r"\[PASS\] criterion +2 ", out)
    assert "2 of 2 criteria passed" in out
