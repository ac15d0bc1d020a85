import csv
import json
import subprocess
import sys

import pytest

from mahc.benchmark import RESULT_FIELDS
from mahc.cli import main
from mahc.dataset import write_dataset
from mahc.graph import write_dag


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


@pytest.fixture
def asia_csv(tmp_path, asia1000):
    path = tmp_path / "asia.csv"
    write_dataset(asia1000, path)
    return path


@pytest.fixture
def true_csv(tmp_path, asia_net):
    path = tmp_path / "true.csv"
    write_dag(asia_net.dag, asia_net.names, path)
    return path


@pytest.mark.parametrize("algo", ["hc", "tabu", "mahc", "mahc-prune-only", "mahc-avg-only"])
def test_learn(tmp_path, asia_csv, capsys, algo):
    out, trace = tmp_path / "g.csv", tmp_path / "t.csv"
    assert main(["learn", "--data", str(asia_csv), "--algo", algo, "--out", str(out), "--trace", str(trace)]) == 0
    rep = kv(capsys.readouterr().out)
    assert rep["status"] == "ok"
    assert len(out.read_text().splitlines()) == int(rep["edges"]) + 1
    assert len(trace.read_text().splitlines()) == int(rep["iterations"]) + 2
    assert rep["bic_log2"].count(".") == 1 and len(rep["bic_log2"].split(".")[1]) == 1


def test_learn_then_score_then_evaluate(tmp_path, asia_csv, true_csv, capsys):
    g = tmp_path / "g.csv"
    main(["learn", "--data", str(asia_csv), "--algo", "hc", "--out", str(g)])
    learnt = kv(capsys.readouterr().out)
    assert main(["score", "--data", str(asia_csv), "--graph", str(g)]) == 0
    scored = kv(capsys.readouterr().out)
    assert scored["bic_log2"] == learnt["bic_log2"]
    assert scored["free_parameters"] == learnt["free_parameters"]
    pen = tmp_path / "pen.csv"
    assert main(["evaluate", "--learned", str(g), "--true", str(true_csv), "--data", str(asia_csv),
                 "--penalties", str(pen)]) == 0
    metrics = kv(capsys.readouterr().out)
    assert set(metrics) == {"precision", "recall", "f1", "bsf", "shd"}
    rows = list(csv.DictReader(pen.open()))
    assert len(rows) == 28
    assert sum(float(r["penalty"]) for r in rows) == float(metrics["shd"])


def test_evaluate_identical_graph(tmp_path, true_csv, capsys):
    assert main(["evaluate", "--learned", str(true_csv), "--true", str(true_csv)]) == 0
    assert kv(capsys.readouterr().out) == {"precision": "1", "recall": "1", "f1": "1", "bsf": "1", "shd": "0"}


def test_prune_outputs(tmp_path, asia_csv, capsys):
    fb, stats = tmp_path / "f.csv", tmp_path / "s.txt"
    assert main(["prune", "--data", str(asia_csv), "--out-forbidden", str(fb), "--stats", str(stats)]) == 0
    rep = kv(capsys.readouterr().out)
    assert rep == kv(stats.read_text())
    assert int(rep["forbidden_arcs"]) == len(fb.read_text().splitlines()) - 1
    assert int(rep["forbidden_arcs"]) + int(rep["surviving_arcs"]) == 56
    assert int(rep["cps_visited"]) + int(rep["pr"]) == 512


def test_generate_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["generate", "--network", "builtin:asia", "--n", "300", "--seed", "4",
                     "--noise", "missing,error", "--rate", "0.1", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 301
    assert "missing" in a.read_text()


def test_error_exit_codes(tmp_path, capsys):
    assert main(["learn", "--data", str(tmp_path / "nope.csv"), "--algo", "hc"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n1\n")
    assert main(["learn", "--data", str(bad), "--algo", "hc"]) == 1
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["learn", "--data", str(bad), "--algo", "bogus"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mahc", "learn", "--algo", "hc"], capture_output=True, text=True)
    assert proc.returncode == 2


def write_config(tmp_path, body):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(body))
    return path


def test_benchmark_grid(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "grid": {"networks": ["builtin:asia"], "sample_sizes": [500], "data": ["clean", "noisy"],
                 "algorithms": ["hc"], "seeds": [1]},
        "output": "results.csv",
    })
    assert main(["benchmark", str(cfg)]) == 0
    out = tmp_path / "results.csv"
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(RESULT_FIELDS)
    rows = list(csv.DictReader(out.open()))
    assert [(r["data"], r["status"], r["case"]) for r in rows] == [("clean", "ok", "asia"), ("noisy", "ok", "asia")]
    # appending keeps a single header
    main(["benchmark", str(cfg)])
    assert out.read_text().count("algorithm,case") == 1
    assert len(out.read_text().splitlines()) == 5


def test_benchmark_timeout_row(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "experiments": [{"network": "builtin:alarm37", "sample_size": 5000, "data": "clean",
                         "algorithm": "mahc_only_averaging", "seed": 0}],
        "time_limit": 0.05,
    })
    main(["benchmark", str(cfg), "--out", str(tmp_path / "r.csv")])
    (row,) = csv.DictReader((tmp_path / "r.csv").open())
    assert row["status"] == "timeout"
    assert row["runtime_s"] and not row["bic_log2"] and not row["shd"]


def test_benchmark_rejects_bad_config(tmp_path, capsys):
    cfg = write_config(tmp_path, {"experiments": [{"network": "builtin:asia", "sample_size": 10,
                                                   "data": "clean", "algorithm": "gobnilp", "seed": 0}]})
    assert main(["benchmark", str(cfg)]) == 1
