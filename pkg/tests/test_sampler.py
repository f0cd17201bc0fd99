from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cokflag.groups import FlagClass
from cokflag.linalg import SATURATED, MatrixMod, RingSpec, cokernel_type
from cokflag.partitions import Partition
from cokflag.sampler import (
    DEGENERATE,
    DegenerateDistribution,
    EntryDistribution,
    Experiment,
    PrecisionPolicy,
    alpha_of,
    estimate_moment,
    flag_from_ints,
    parse_distribution,
    run_experiment,
    sample_flag,
    sample_matrix,
    stream_rng,
)

UNIFORM = parse_distribution("uniform:0..3")


@pytest.mark.parametrize("text, p, expected", [
    ("uniform:0..1", 2, Fraction(1, 2)),
    ("const:0", 2, DEGENERATE),
    ("finite:0,1:7/10,3/10", 2, Fraction(3, 10)),
    ("uniform:0..2", 3, Fraction(1, 2)),
    ("finite:0,3:1/2,1/2", 3, DEGENERATE),
    ("haar:5", 5, Fraction(1, 2)),
])
def test_alpha_of(text, p, expected):
    assert alpha_of(parse_distribution(text, p), p) == expected


def test_parse_distribution():
    assert parse_distribution("uniform:-2..5") == EntryDistribution.uniform(-2, 5)
    assert parse_distribution("bernoulli:0,1:7/10,3/10") == parse_distribution("finite:0,1:7/10,3/10")
    assert parse_distribution("finite:1,2") == EntryDistribution.finite([1, 2], [Fraction(1, 2)] * 2)
    assert parse_distribution("haar:3:4") == EntryDistribution.haar(3, 4)
    for bad in ("uniform:3..1", "bernoulli:3/10", "haar:12", "finite:0,1:1/2,1/3", "gauss:0"):
        with pytest.raises(ValueError):
            parse_distribution(bad)
    d = parse_distribution("finite:0,1:7/10,3/10")
    assert parse_distribution(d.spec()) == d


def test_sample_matrix_golden():
    # regression freeze of the seeded draw
    d = parse_distribution("haar:12", 2)
    M = sample_matrix(d, 3, RingSpec(2, 12), stream_rng(42))
    assert M.residues() == [[616, 365, 4028], [3170, 4092, 2681], [1382, 1797, 354]]


def test_sample_matrix_edge_cases():
    ring = RingSpec(2, 4)
    assert sample_matrix(UNIFORM, 0, ring, stream_rng(0)).residues() == []
    with pytest.raises(DegenerateDistribution):
        sample_matrix(parse_distribution("const:4"), 3, ring, stream_rng(0))
    M = sample_matrix(parse_distribution("finite:0,1:1/2,1/2"), 30, ring, stream_rng(1))
    assert set(np.unique(M.entries).tolist()) == {0, 1}


def test_flag_from_hand_matrices():
    ints = np.array([[[2, 0], [0, 1]], [[1, 0], [0, 2]]])
    rec, G, chain = flag_from_ints(ints, 2, PrecisionPolicy(4, 2, 64))
    assert not rec.saturated and rec.N == 4
    assert rec.types == (Partition((1,)), Partition((1, 1)))
    assert rec.factor_types == (Partition((1,)), Partition((1,)))
    assert rec.kernel_type == Partition((1,))
    assert rec.flag.nu == Partition((1, 1))
    assert len(chain[0].elements()) == 2


def test_identity_matrices_give_trivial_flag():
    rec, G, _ = flag_from_ints(np.array([np.eye(3, dtype=np.int64)] * 3), 3)
    assert rec.types == (Partition(),) * 3
    assert G.order == 1 and rec.flag.nu == Partition()


def test_singular_matrix_saturates():
    rec, G, chain = flag_from_ints(np.zeros((1, 2, 2), dtype=np.int64), 2, PrecisionPolicy(4, 2, 16))
    assert rec.saturated and G is None and rec.N == 16


def test_k1_matches_cokernel_type():
    rng = stream_rng(5)
    for _ in range(50):
        A = UNIFORM.draw(rng, (1, 6, 6))
        rec, _, _ = flag_from_ints(A, 2)
        direct = cokernel_type(MatrixMod.from_ints(RingSpec(2, 64), A[0]))
        if rec.saturated:
            assert direct is SATURATED
        else:
            assert rec.types == (direct,)


def test_records_size_additivity_and_kernel():
    rng = stream_rng(8)
    seen = 0
    for i in range(300):
        rec = sample_flag(UNIFORM, 8, 2, 2, rng=rng, index=i)
        if rec.saturated:
            continue
        seen += 1
        assert rec.types[-1].size == sum(t.size for t in rec.factor_types)
        # the kernel of cok(M1 M2) -> cok(M1) is cok(M2)
        assert rec.kernel_type == rec.factor_types[1]
        assert rec.types[0] == rec.factor_types[0]
    assert seen > 290


def test_sample_flag_multiple_primes():
    recs = sample_flag(UNIFORM, 5, 2, (2, 3), rng=stream_rng(2))
    assert [r.p for r in recs] == [2, 3]


def test_saturation_rate():
    exp = Experiment("flag", parse_distribution("uniform:0..1"), 20, 1, (2,), 4000, seed=4)
    res = run_experiment(exp)
    assert res.histogram.total == 4000
    assert res.histogram.excluded / 4000 < 5e-3


def test_parity_bit_law():
    """Corank mode at n = 1: cr(M1) = 1 exactly when the entry is even."""
    dist = parse_distribution("finite:0,1:7/10,3/10")
    exp = Experiment("corank", dist, 1, 2, (2,), 40000, seed=9)
    h = run_experiment(exp).histogram
    even = sum(c for (a, _, _), c in h.counts.items() if a == 1)
    assert abs(even / 40000 - 0.7) < 4 * (0.21 / 40000) ** 0.5
    # cr(M1 M2) = 1 unless both entries are odd
    assert all(c == max(a, b) for a, b, c in h.counts)


def test_experiment_validation():
    with pytest.raises(ValueError):
        Experiment("bogus", UNIFORM, 5, 1, (2,), 10, 0)
    with pytest.raises(ValueError):
        Experiment("flag", UNIFORM, 5, 0, (2,), 10, 0)
    with pytest.raises(ValueError):
        Experiment("flag", UNIFORM, 5, 1, (4,), 10, 0)
    with pytest.raises(ValueError):
        Experiment("corank", UNIFORM, 5, 1, (2,), 10, 0)
    with pytest.raises(ValueError):
        Experiment("moment", UNIFORM, 5, 2, (2, 3), 10, 0)
    assert Experiment("flag", UNIFORM, 0, 1, (2,), 0, 0).chunks == 0


def test_chunk_size_clamped():
    assert Experiment("flag", UNIFORM, 1, 1, (2,), 10, 0).chunk_size == 4096
    assert Experiment("flag", UNIFORM, 1000, 2, (2,), 10, 0).chunk_size == 8
    assert Experiment("flag", UNIFORM, 30, 2, (2,), 10, 0).chunk_size == 2**21 // 1800


@pytest.mark.parametrize("mode, k, n", [("flag", 2, 30), ("corank", 2, 25), ("flag", 1, 40)])
def test_thread_determinism(mode, k, n):
    exp = Experiment(mode, UNIFORM, n, k, (2,), 3000, seed=11)
    one = run_experiment(exp, 1)
    two = run_experiment(exp, 2)
    assert exp.chunks > 1
    assert one.histogram == two.histogram
    assert list(one.histogram.counts) == list(two.histogram.counts)


def test_estimate_moment_trivial_target():
    est = estimate_moment(UNIFORM, 10, 2, 2, FlagClass(2, Partition(), "<>"), 200, seed=1)
    assert est.mean == 1 and est.stderr == 0 and est.samples == 200


def test_estimate_moment_z2_onto_trivial():
    est = estimate_moment(UNIFORM, 40, 2, 2, FlagClass(2, Partition((1,)), "<>"), 10000, seed=3)
    assert est.excluded == 0
    assert abs(est.mean - 1) < 0.05


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.sampled_from([2, 3]))
def test_flag_record_invariants(seed, n, p):
    rec = sample_flag(UNIFORM, n, 3, p, rng=stream_rng(seed))
    if rec.saturated:
        return
    sizes = [t.size for t in rec.types]
    assert sizes == sorted(sizes)
    assert sizes[-1] == sum(t.size for t in rec.factor_types)
    assert rec.flag.nu == rec.types[-1]
