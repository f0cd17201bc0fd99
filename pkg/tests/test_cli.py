import csv
import io
import json
import subprocess
import sys

import pytest

from cokflag import cli

# regression freeze of the golden simulate report (see conftest.GOLDEN_ARGS)
GOLDEN_SHA256 = "ace29b082cdbb3c240c6b6c6fea8f78852cf41b4887c5e081dfe55186c40d69b"


def run(args, capsys):
    rc = cli.main(args)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_golden_simulate_report(golden_report):
    assert golden_report["sha256"] == GOLDEN_SHA256
    rep = golden_report["report"]
    assert rep["samples"] == 50000 and "timing" not in rep
    assert sum(rep["histogram"].values()) + rep["excluded"] == 50000


def test_simulate_zero_samples(capsys):
    rc, out, _ = run(["simulate", "--samples", "0", "--no-timing"], capsys)
    rep = json.loads(out)
    assert rc == 0
    assert rep["samples"] == 0 and rep["histogram"] == {} and rep["excluded"] == 0


def test_degenerate_distribution_exit_code(capsys):
    rc, _, err = run(["simulate", "--dist", "const:0", "--samples", "5"], capsys)
    assert rc == cli.EXIT_DEGENERATE == 2
    assert "degenerate" in err


@pytest.mark.parametrize("args", [
    ["simulate", "--n", "-3"],
    ["simulate", "--dist", "gauss:1"],
    ["simulate", "--p", "4"],
    ["compare", "--mode", "corank", "--k", "1"],
])
def test_invalid_config_exit_code(args, capsys):
    assert run(args, capsys)[0] == cli.EXIT_CONFIG


def test_toml_config_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('mode = "corank"\nk = 2\nn = 6\nsamples = 40\nseed = 5\ndist = "uniform:0..1"\n')
    rc, out, _ = run(["simulate", "--config", str(cfg), "--samples", "30", "--no-timing"], capsys)
    rep = json.loads(out)
    assert rc == 0
    assert rep["config"]["mode"] == "corank" and rep["config"]["n"] == 6
    assert rep["samples"] == 30 and rep["seed"] == 5


def test_toml_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("bogus = 1\n")
    assert run(["simulate", "--config", str(cfg)], capsys)[0] == cli.EXIT_CONFIG


def test_seed_from_environment(monkeypatch, capsys):
    base = ["simulate", "--n", "5", "--samples", "20", "--no-timing"]
    monkeypatch.setenv(cli.SEED_ENV, "17")
    rep_env = json.loads(run(base, capsys)[1])
    assert rep_env["seed"] == 17
    rep_flag = json.loads(run(base + ["--seed", "17"], capsys)[1])
    assert rep_env == rep_flag
    # an explicit flag beats the environment
    assert json.loads(run(base + ["--seed", "3"], capsys)[1])["seed"] == 3


def test_config_hash_ignores_threads_and_output(tmp_path, capsys):
    base = ["simulate", "--n", "30", "--k", "2", "--samples", "300", "--seed", "2", "--no-timing"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(base + ["--threads", "1", "--output", str(a)], capsys)[0] == 0
    assert run(base + ["--threads", "2", "--output", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_timing_block(capsys):
    rep = json.loads(run(["simulate", "--n", "4", "--samples", "10"], capsys)[1])
    assert rep["timing"]["threads"] == 1 and rep["timing"]["seconds"] >= 0


def test_emit_samples_and_csv(tmp_path, capsys):
    jl, table = tmp_path / "s.jsonl", tmp_path / "h.csv"
    args = ["simulate", "--n", "6", "--k", "2", "--samples", "25", "--emit-samples", str(jl), "--csv", str(table)]
    assert run(args, capsys)[0] == 0
    lines = jl.read_text().splitlines()
    assert len(lines) == 25
    assert [json.loads(x)["index"] for x in lines] == list(range(25))
    rows = list(csv.reader(io.StringIO(table.read_text())))
    assert rows[0] == ["key", "count"]
    assert sum(int(r[1]) for r in rows[1:]) <= 25


def test_theory_convolution_table(capsys):
    rc, out, _ = run(["theory", "convolution", "--H", "1", "--K", "1"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rc == 0
    assert rows == [["query", "exact", "decimal"], ["H=[1],K=[1],G=[2]", "1/2", "0.5"], ["H=[1],K=[1],G=[1,1]", "1/2", "0.5"]]


def test_theory_empty_query(capsys):
    rc, out, _ = run(["theory"], capsys)
    assert rc == 0 and out.strip() == "query,exact,decimal"


def test_theory_corank_rows_normalized(capsys):
    _, out, _ = run(["theory", "corank", "--max-ab", "2"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    totals = {}
    for r in rows:
        a, b, _ = r["query"].split(",")
        num, den = map(int, r["exact"].split("/"))
        totals[(a, b)] = totals.get((a, b), 0) + num / den
    assert len(totals) == 9
    assert all(abs(t - 1) < 1e-12 for t in totals.values())


def test_hl_command(capsys):
    rc, out, _ = run(["hl", "--lam", "1", "--mu", "1", "--n", "2"], capsys)
    assert rc == 0
    assert out.splitlines()[1:] == ['"lam=[1],mu=[1],nu=[1,1],n=2",1/3,0.333333333333',
                                    '"lam=[1],mu=[1],nu=[2],n=2",2/3,0.666666666667']


def test_hl_budget_exit_code(capsys):
    rc, _, err = run(["hl", "--lam", "1,1,1,1,1", "--mu", "1,1,1,1", "--n", "9"], capsys)
    assert rc == cli.EXIT_BOUNDS == 3
    assert "budget" in err


def test_oracle_small(capsys):
    rc, out, _ = run(["oracle", "--max-order", "4", "--snf-count", "50"], capsys)
    lines = out.splitlines()
    assert rc == 0
    assert len(lines) == 8 and all(x.startswith("PASS ") for x in lines)


def test_oracle_injected_fault(capsys):
    rc, out, _ = run(["oracle", "--max-order", "4", "--snf-count", "50", "--inject-fault"], capsys)
    assert rc == cli.EXIT_FAIL
    assert "FAIL aut-order-vs-enumeration" in out
    assert "counterexample" in out


def test_compare_corank_small(capsys):
    args = ["compare", "--mode", "corank", "--k", "2", "--n", "30", "--samples", "4000",
            "--dist", "uniform:0..1", "--dist2", "finite:0,1:7/10,3/10", "--seed", "3",
            "--cell-threshold", "0.2", "--tv-threshold", "0.2", "--cross-threshold", "0.2", "--no-timing"]
    rc, out, err = run(args, capsys)
    rep = json.loads(out)
    assert rc == 0 and rep["verdict"] == "PASS"
    assert len(rep["runs"]) == 2
    assert all(line.startswith("PASS") for line in err.splitlines() if line)


def test_compare_fails_on_tight_threshold(capsys):
    args = ["compare", "--n", "10", "--samples", "200", "--seed", "1", "--tv-threshold", "0", "--no-timing"]
    rc, out, _ = run(args, capsys)
    assert rc == cli.EXIT_FAIL and json.loads(out)["verdict"] == "FAIL"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cokflag.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == cli.__version__
