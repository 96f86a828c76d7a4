import json

import pytest

from roscalab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_opt_builtin(capsys):
    code, out, _ = run(capsys, "opt", "--profiles", "crra9")
    assert code == 0 and out.splitlines()[0] == "OPT = 45"
    code, out, _ = run(capsys, "opt", "--profiles", "crra9", "--format", "json")
    data = json.loads(out)
    assert data["opt"] == 45 and sorted(data["rounds"]) == list(range(1, 10))


def test_opt_file(capsys, tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("0,0,0\n1,0,0\n1,1,0\n")
    code, out, _ = run(capsys, "opt", "--profiles", str(p), "--format", "json")
    assert json.loads(out) == {"opt": 2.0, "rounds": [3, 1, 2]}


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "opt")[0] == 2
    assert run(capsys, "opt", "--profiles", str(tmp_path / "missing.csv"))[0] == 2
    assert run(capsys, "swap-sim", "--profiles", "crra9", "--cost", "crra:W=4")[0] == 2
    assert run(capsys, "verify-bounds", "--alpha", "2", "--beta", "1")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n0,0\n")
    code, _, err = run(capsys, "opt", "--profiles", str(bad))
    assert code == 2 and "participant 1" in err


def test_swap_sim(capsys):
    code, out, _ = run(capsys, "swap-sim", "--profiles", "unif_dec9", "--runs", "200", "--seed", "3", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["ratio"] == pytest.approx(1.0, abs=1e-5)
    again = json.loads(run(capsys, "swap-sim", "--profiles", "unif_dec9", "--runs", "200", "--seed", "3", "--format", "json")[1])
    assert again == data


def test_swap_sim_trace(capsys, tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("1,0\n2,0\n")
    code, out, _ = run(capsys, "swap-sim", "--profiles", str(p), "--runs", "1", "--seed", "0", "--trace",
                       "--scan-policy", "lexicographic")
    lines = out.splitlines()
    assert code == 0
    trace = [json.loads(x) for x in lines if x.startswith("{")]
    for rec in trace:
        assert set(rec) == {"run", "round", "i", "i'", "j", "j'", "payment"}
    assert lines[-1].startswith("ratio = 1.0")


def test_auction_sim(capsys, tmp_path):
    prof = tmp_path / "v.csv"
    prof.write_text("1,0,0\n2,2,0\n2,2,0\n")
    strat = tmp_path / "s.json"
    strat.write_text(json.dumps([{"constant": [2, 0, 0]}, {"constant": [1, 2, 0]}, {"constant": [1, 0, 0]}]))
    code, out, _ = run(capsys, "auction-sim", "--profiles", str(prof), "--format", "first", "--strategies", str(strat))
    data = json.loads(out)
    assert code == 0 and data["rounds"] == [1, 2, 3] and data["welfare"] == pytest.approx(3)
    assert data["no_overbidding"] is False
    bids = tmp_path / "b.json"
    bids.write_text("[0, 1, 0.5]")
    code, out, _ = run(capsys, "auction-sim", "--profiles", str(prof), "--format", "upfront", "--strategies", str(bids))
    assert code == 0 and json.loads(out)["rounds"] == [3, 1, 2]
    assert run(capsys, "auction-sim", "--profiles", str(prof), "--format", "first", "--strategies", str(bids))[0] == 2


def test_ne_search(capsys, tmp_path):
    prof = tmp_path / "v.csv"
    prof.write_text("4,1,0\n3,3,0\n2,2,2\n")
    code, out, _ = run(capsys, "ne-search", "--profiles", str(prof), "--mechanism", "upfront", "--grid", "0:1:4",
                       "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["equilibria"]
    assert data["empirical_poa"] <= 4
    code, out, _ = run(capsys, "ne-search", "--profiles", str(prof), "--mechanism", "second", "--grid", "0:0.5:3",
                       "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["converged"] and len(data["equilibria"]) == 1
    assert run(capsys, "ne-search", "--profiles", str(prof), "--mechanism", "upfront", "--grid", "0:0.001:10")[0] == 2


def test_verify_bounds(capsys):
    code, out, _ = run(capsys, "verify-bounds", "--suite", "overpay")
    assert code == 0 and out.splitlines()[0].startswith("[tight, holds]") and "slack 0," in out.splitlines()[0]
    code, out, _ = run(capsys, "verify-bounds", "--suite", "lemmas", "--alpha", "0.5", "--beta", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and all(r["verdict"] != "violated" for r in data)


def test_verify_bounds_failure_exit(capsys, monkeypatch):
    from roscalab import cli
    from roscalab.verify import CheckResult

    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: [CheckResult("c", "a", "d", "violated", -1.0)])
    assert run(capsys, "verify-bounds")[0] == 1


def test_experiment(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profiles": ["pointmass9", "unif_dec9"], "runs": 300, "seed": 1}))
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "experiment", "dist", "--config", str(cfg), "--out", str(out_dir))
    assert code == 0 and out.startswith("| profile | OPT |")
    assert (out_dir / "dist.md").read_text() == out
    assert json.loads((out_dir / "dist.manifest.json").read_text())["seed"] == 1
    cfg.write_text(json.dumps({"profiles": "crra9", "runs": 100, "seed": 1, "a_grid": [0, 1], "W_grid": [1, 4]}))
    code, out, _ = run(capsys, "experiment", "crra", "--config", str(cfg), "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data["ratios"]) == 2 and data["opt"] == 45
    assert run(capsys, "experiment", "dist", "--config", str(tmp_path / "nope.json"))[0] == 2
