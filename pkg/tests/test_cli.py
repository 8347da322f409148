import json
import subprocess
import sys

import pytest

from fusionq import cli, io, synth

SPEC = "m = 120\nquality = 0.9, 0.6, 0.3\nnoise = 1, 1, 1\npositive_ratio = 0.3\n"


@pytest.fixture
def files(tmp_path):
    cfg = tmp_path / "spec.txt"
    cfg.write_text(SPEC)
    assert cli.main(["synth", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path / "train.csv")]) == 0
    assert cli.main(["synth", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "test.csv")]) == 0
    return tmp_path


def test_synth_writes_csv(files):
    s = io.read_scores(files / "train.csv")
    assert s == synth.generate(synth.parse_spec(SPEC), 3)


def test_train_pwav_smoke(files):
    rc = cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
                   "--report", str(files / "cv.json"), "--algorithm", "mincq-pwav",
                   "--folds", "5", "--seed", "7", "--grid-mu", "0.001,0.01",
                   "--grid-beta", "0.1,10"])
    assert rc == 0
    model = io.read_model(files / "m.json")
    assert model.algorithm == "mincq_pwav"
    report = json.loads((files / "cv.json").read_text())
    assert len(report["grid_points"]) == 4
    assert report["config"]["folds"] == 5


def test_train_logs_resolved_config(files, caplog):
    caplog.set_level("INFO", logger="fusionq")
    cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
              "--mu", "0.01"])
    line = next(r.getMessage() for r in caplog.records if "resolved configuration" in r.getMessage())
    config = json.loads(line.split(": ", 1)[1])
    assert config["grid"] == {"mu": [0.01]}
    assert config["seed"] == 0 and config["folds"] == 5 and config["qp_max_iter"] == 20000


def test_predict_and_eval(files, capsys):
    cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
              "--mu", "0.05"])
    assert cli.main(["predict", "--model", str(files / "m.json"), "--data", str(files / "test.csv"),
                     "--out", str(files / "pred.csv")]) == 0
    lines = (files / "pred.csv").read_text().splitlines()
    assert lines[0] == "id,score,label" and len(lines) == 121
    capsys.readouterr()
    assert cli.main(["eval", "--model", str(files / "m.json"), "--data", str(files / "test.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    for key in ("risk", "map", "c_bound", "first_moment", "second_moment", "diversity"):
        assert key in report
    assert 0 <= report["risk"] <= 1


def test_kernel_training(files):
    rc = cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "k.json"),
                   "--kernel", "rbf", "--gamma", "0.5", "--mu", "0.01", "--max-anchors", "40",
                   "--folds", "3"])
    assert rc == 0
    assert io.read_model(files / "k.json").kernel.anchor_count == 40


def test_eval_voter_mismatch(files, tmp_path):
    cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
              "--mu", "0.05"])
    other = tmp_path / "two.csv"
    other.write_text("id,label,a,b\nx,1,0.1,0.2\ny,-1,0.3,0.4\n")
    assert cli.main(["eval", "--model", str(files / "m.json"), "--data", str(other)]) == 2


def test_compare_self_is_degenerate(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("concept,map\ncat,0.4\ndog,0.3\ncar,0.2\n")
    assert cli.main(["compare", str(p), str(p)]) == 3


def test_compare(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("concept,map\nc1,0.5\nc2,0.6\nc3,0.7\n")
    b.write_text("concept,map\nc1,0.31\nc2,0.52\nc3,0.58\n")
    assert cli.main(["compare", str(a), str(b)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 3
    assert out["t_stat"] == pytest.approx(4.044111609448657, abs=1e-9)


def test_slack_cap_exit_3(files, capsys):
    rc = cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
                   "--algorithm", "mincq-pw", "--mu", "0.01", "--beta", "1", "--max-slacks", "100"])
    assert rc == 3
    assert "mincq_pwav" in capsys.readouterr().err


def test_infeasible_margin_exit_3(files):
    rc = cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
                   "--mu", "50"])
    assert rc == 3
    assert not (files / "m.json").exists()


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["train"],
    ["train", "--train", "x.csv", "--model", "m.json", "--algorithm", "svm"],
    ["train", "--train", "x.csv", "--model", "m.json", "--grid-mu", "a,b"],
])
def test_usage_errors(argv):
    assert cli.main(argv) == 1


def test_kernel_with_baseline_is_usage_error(files):
    assert cli.main(["train", "--train", str(files / "train.csv"), "--model", str(files / "m.json"),
                     "--algorithm", "sum", "--kernel", "rbf"]) == 1


def test_missing_file(tmp_path):
    assert cli.main(["eval", "--model", str(tmp_path / "nope.json"),
                     "--data", str(tmp_path / "nope.csv")]) == 2


def test_console_entry_point(files):
    out = subprocess.run([sys.executable, "-m", "fusionq.cli", "train", "--train",
                          str(files / "train.csv"), "--model", str(files / "m.json"), "--mu", "0.01"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "resolved configuration" in out.stderr
