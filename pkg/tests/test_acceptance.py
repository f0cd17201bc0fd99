"""Acceptance criteria 1-8. Each test seeds its runs with its criterion number."""

import math
import time
from fractions import Fraction

import pytest

from cokflag import cli, oracle
from cokflag.groups import ExplicitGroup, canonicalize_flag, span
from cokflag.partitions import Partition
from cokflag.sampler import Experiment, moment_estimates, parse_distribution, run_experiment
from cokflag.stats import Histogram, tv_between, tv_distance
from cokflag.theory import cohen_lenstra_table, conditional_convolution, corank_conditional, flag_law_table
from cokflag import hall_littlewood as hl

DISTS = ("uniform:0..3", "finite:0,1:7/10,3/10")
C2 = math.prod(1 - 2.0**-i for i in range(1, 80))
P1, P11, P2 = Partition((1,)), Partition((1, 1)), Partition((2,))


def conditional(hist: Histogram, prefix) -> Histogram:
    """Histogram of the last key component among keys starting with ``prefix``."""
    out = Histogram()
    for key, c in hist.counts.items():
        if tuple(key[: len(prefix)]) == tuple(prefix):
            out.add(key[len(prefix)], c)
    return out


@pytest.mark.criterion(1, "exact identity suites")
def test_criterion_1_exact_identities(record_property):
    start = time.perf_counter()
    results = oracle.run_suites()
    elapsed = time.perf_counter() - start
    failed = [r.line() for r in results if not r.passed]
    record_property("detail", f"{len(results)} suites, {len(failed)} failing, {elapsed:.1f}s")
    assert not failed, failed
    assert elapsed < 60


@pytest.mark.criterion(2, "corank conditional universality")
def test_criterion_2_corank(record_property):
    worst = 0.0
    rows = []
    for stream, text in enumerate(DISTS):
        exp = Experiment("corank", parse_distribution(text), 200, 2, (2,), 200_000, seed=2, stream=stream)
        hist = run_experiment(exp).histogram
        for a, b in ((1, 1), (1, 2)):
            cond = conditional(hist, (a, b))
            for c in range(max(a, b), a + b + 1):
                diff = abs(cond.counts.get(c, 0) / cond.included - float(corank_conditional(2, a, b, c)))
                worst = max(worst, diff)
                rows.append((text, a, b, c, diff))
    record_property("detail", f"max |freq - law| = {worst:.4f} (tol 0.02)")
    assert worst <= 0.02, rows


@pytest.mark.criterion(3, "k=1 Cohen-Lenstra law")
def test_criterion_3_cohen_lenstra(record_property):
    table = cohen_lenstra_table(2, Fraction(1, 10**4))
    triv, tvs = [], []
    for stream, text in enumerate(DISTS):
        exp = Experiment("flag", parse_distribution(text), 100, 1, (2,), 100_000, seed=3, stream=stream)
        hist = run_experiment(exp).histogram
        triv.append(hist.counts.get(Partition(), 0) / hist.included)
        tvs.append(tv_distance(hist, table.masses, table.other))
    record_property("detail", "P(trivial) " + ", ".join(f"{t:.4f}" for t in triv)
                    + "; TV " + ", ".join(f"{t:.4f}" for t in tvs))
    assert all(abs(t - 0.288788) <= 0.01 for t in triv)
    assert all(t <= 0.015 for t in tvs)


@pytest.mark.criterion(4, "conditional convolution given H = K = Z/2")
def test_criterion_4_convolution(record_property):
    assert conditional_convolution(2, P11, P1, P1) == conditional_convolution(2, P2, P1, P1) == Fraction(1, 2)
    conds = []
    for stream, text in enumerate(DISTS):
        exp = Experiment("convolution", parse_distribution(text), 80, 2, (2,), 150_000, seed=4,
                         condition=(P1, P1), stream=stream)
        conds.append(conditional(run_experiment(exp).histogram, (P1, P1)))
    freqs = [[c.counts.get(g, 0) / c.included for g in (P11, P2)] for c in conds]
    cross = tv_between(*conds)
    record_property("detail", "P([1,1]), P([2]) = " + "; ".join(f"{a:.4f}, {b:.4f}" for a, b in freqs)
                    + f"; cross TV {cross:.4f}; conditioned samples {[c.included for c in conds]}")
    assert all(abs(f - 0.5) <= 0.02 for pair in freqs for f in pair)
    assert cross <= 0.02


@pytest.mark.criterion(5, "k=2 flag law")
def test_criterion_5_flag_law(golden_report, record_property):
    report = golden_report["report"]
    table = flag_law_table(2, 2, max_order=16)
    law = {cli.key_str(fc): m for fc, m in table.masses.items()}
    hist = Histogram(dict(report["histogram"]), report["excluded"])
    tv = tv_distance(hist, law, table.other)
    G = ExplicitGroup(2, (1, 1))
    target = cli.key_str(canonicalize_flag(G, [span(G, [(1, 0)])]))
    assert abs(float(table.masses[canonicalize_flag(G, [span(G, [(1, 0)])])]) - C2**2 / 2) < 1e-9
    freq = hist.counts.get(target, 0) / hist.included
    record_property("detail", f"TV {tv:.4f} (tol 0.02); P({target}) = {freq:.4f} vs {C2**2 / 2:.4f}")
    assert tv <= 0.02
    assert abs(freq - C2**2 / 2) <= 0.01


@pytest.mark.criterion(6, "flag moments equal 1")
def test_criterion_6_moments(record_property):
    exp = Experiment("moment", parse_distribution("uniform:0..3"), 60, 2, (2,), 10_000, seed=6,
                     moment_max_order=4)
    res = run_experiment(exp)
    est = moment_estimates(res)
    rate = res.histogram.excluded / res.histogram.total
    record_property("detail", "; ".join(f"{cli.key_str(fc)} {e.mean:.4f}+-{e.stderr:.4f}"
                                        for fc, e in sorted(est.items(), key=lambda kv: cli.key_str(kv[0])))
                    + f"; exclusion rate {rate:.2g}")
    # chains 0 <= H <= G up to Aut(G): trivial 1, Z/2 has 2, Z/4 has 3, (Z/2)^2 has 3
    assert len(est) == 1 + 2 + 3 + 3
    assert rate < 1e-3
    off = {cli.key_str(fc): e.mean for fc, e in est.items() if abs(e.mean - 1) > 0.05}
    assert not off, off


@pytest.mark.criterion(7, "finite-n Hall-Littlewood law at n=2")
def test_criterion_7_finite_n(record_property):
    expected = hl.normalized_constants(P1, P1, 2, 2)[P11]
    assert expected == Fraction(1, 3)
    exp = Experiment("convolution", parse_distribution("haar:2:12"), 2, 2, (2,), 200_000, seed=7,
                     condition=(P1, P1))
    cond = conditional(run_experiment(exp).histogram, (P1, P1))
    freq = cond.counts.get(P11, 0) / cond.included
    record_property("detail", f"P([1,1] | [1],[1]) = {freq:.4f} over {cond.included} (target 1/3, tol 0.02)")
    assert abs(freq - 1 / 3) <= 0.02


@pytest.mark.criterion(8, "thread determinism and SNF transforms")
def test_criterion_8_determinism(tmp_path, record_property):
    args = ["simulate", "--p", "2", "--n", "30", "--k", "2", "--samples", "12000", "--dist", "uniform:0..3",
            "--seed", "8", "--no-timing"]
    outputs = []
    for threads in (1, 4, 8):
        path = tmp_path / f"t{threads}.json"
        assert cli.main(args + ["--threads", str(threads), "--output", str(path)]) == 0
        outputs.append(path.read_bytes())
    snf = oracle.suite_snf(2000, seed=8)
    record_property("detail", f"reports identical: {len(set(outputs)) == 1}; {snf.line()}")
    assert len(set(outputs)) == 1
    assert snf.passed and snf.checked >= 2000
