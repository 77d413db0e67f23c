import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcombine.combine import (
    CombinerKind,
    PValueVector,
    approx_pvalue,
    combine,
    combine_bonferroni,
    combine_cct,
    combine_hmp,
    combine_pcct,
    generalized_mean,
    inverse_transform,
    transform,
)
from pcombine.errors import DomainError, UnsupportedKindError

MEAN_KINDS = [CombinerKind.CCT, CombinerKind.PCCT, CombinerKind.HMP]

pvals = st.floats(1e-300, 1.0, exclude_min=False, allow_nan=False)
pvectors = st.lists(pvals, min_size=1, max_size=60)


def pcct_oracle(ps):
    mp.mp.dps = 50
    return mp.fsum(mp.tan((mp.mpf(1) / 2 - mp.mpf(p) / 2) * mp.pi) for p in ps) / len(ps)


# --- construction -------------------------------------------------------------


def test_rejects_zero_and_out_of_range():
    for bad in ([0.0, 0.5], [0.5, 1.5], [-0.1], [], [float("nan")]):
        with pytest.raises(DomainError):
            PValueVector(bad)


def test_sanitize_floors_zero():
    p = PValueVector([0.0, 0.3], sanitize=True)
    assert p.values[0] == 1e-300
    assert PValueVector([0.0], sanitize=True, floor=1e-10).values[0] == 1e-10


def test_vector_is_read_only():
    p = PValueVector([0.1, 0.2])
    with pytest.raises(ValueError):
        p.values[0] = 0.5
    assert p.K == 2 and p.minimum == 0.1


# --- examples --------------------------------------------------------------------


def test_cct_examples():
    # the two terms cancel up to rounding of 1 - 0.999
    assert abs(combine_cct([0.001, 0.999]).statistic) <= 1e-10
    assert combine_cct([0.5, 0.5, 0.5]).statistic == pytest.approx(0.0, abs=1e-15)
    assert combine_cct([0.25]).statistic == pytest.approx(1.0, rel=1e-15)


def test_cct_handles_p_equal_one():
    s = combine_cct([1.0, 0.5])
    assert math.isfinite(s.statistic) and s.statistic < -1e15


def test_pcct_examples():
    assert combine_pcct([0.5, 0.5]).statistic == pytest.approx(1.0, rel=1e-15)
    s = combine_pcct([1.0])
    assert s.statistic == 0.0 and s.mean_scale == 1.0
    s = combine_pcct([0.001, 0.999])
    assert s.statistic == pytest.approx(float(pcct_oracle([0.001, 0.999])), rel=1e-13)
    assert s.statistic == pytest.approx(318.31, abs=5e-3)


def test_hmp_examples():
    assert combine_hmp([0.3] * 3).mean_scale == pytest.approx(0.3, rel=1e-15)
    s = combine_hmp([0.1, 0.9])
    assert s.statistic == pytest.approx(50 / 9, rel=1e-15)
    assert s.mean_scale == pytest.approx(0.18, rel=1e-15)
    assert combine_hmp([1.0]).mean_scale == 1.0


def test_bonferroni_examples():
    s = combine_bonferroni([0.001, 0.999])
    assert s.statistic == pytest.approx(0.002) and s.statistic < 0.01
    assert combine_bonferroni([0.5]).statistic == 0.5
    assert combine_bonferroni([0.2, 0.4, 0.6, 0.8, 1.0]).statistic == pytest.approx(1.0)
    assert combine_bonferroni([0.5, 0.9]).mean_scale == 1.0


def test_approx_pvalue_examples():
    pc = combine_pcct([0.5])
    assert approx_pvalue(pc) == pytest.approx(0.5)
    assert approx_pvalue(combine_pcct([1.0])) == 1.0
    t = math.tan(0.45 * math.pi)
    from pcombine.combine import CombinedStatistic

    s = CombinedStatistic(CombinerKind.CCT, t, float(inverse_transform(CombinerKind.CCT, t)), 1)
    assert approx_pvalue(s) == pytest.approx(0.05, rel=1e-12)


def test_approx_pvalue_refuses_hmp():
    with pytest.raises(UnsupportedKindError):
        approx_pvalue(combine_hmp([0.1, 0.2]))
    with pytest.raises(UnsupportedKindError):
        approx_pvalue(combine_bonferroni([0.1, 0.2]))


def test_generalized_mean_examples():
    for kind in MEAN_KINDS:
        assert generalized_mean([0.37] * 4, kind) == pytest.approx(0.37, abs=1e-12)
    m = generalized_mean([0.001, 0.999], CombinerKind.PCCT)
    assert m == pytest.approx(1 - 2 / math.pi * math.atan(float(pcct_oracle([0.001, 0.999]))), rel=1e-12)
    assert m == pytest.approx(0.0020, abs=5e-6)
    assert generalized_mean([0.001, 0.999], "hmp") == pytest.approx(2 / (1000 + 1 / 0.999), rel=1e-14)
    with pytest.raises(UnsupportedKindError):
        generalized_mean([0.1], CombinerKind.BONFERRONI)


def test_inverse_transform_small_values_accurate():
    # psi must not lose the tail to cancellation
    assert float(inverse_transform("pcct", 1e12)) == pytest.approx(2 / (math.pi * 1e12), rel=1e-12)
    assert float(inverse_transform("cct", 1e12)) == pytest.approx(1 / (math.pi * 1e12), rel=1e-12)


def test_transform_small_p_accurate():
    assert float(transform("pcct", 1e-300)) == pytest.approx(2 / (math.pi * 1e-300), rel=1e-12)
    assert float(transform("cct", 1e-300)) == pytest.approx(1 / (math.pi * 1e-300), rel=1e-12)


def test_large_K_sum_is_pairwise_and_stable():
    rng = np.random.default_rng(0)
    p = rng.uniform(size=10**6)
    t = combine_hmp(p).statistic
    assert t == pytest.approx(math.fsum(1 / p) / p.size, rel=1e-12)


# --- properties --------------------------------------------------------------------


@settings(max_examples=300)
@given(st.floats(1e-300, 1.0), st.sampled_from(MEAN_KINDS), st.integers(1, 40))
def test_mean_identity(q, kind, K):
    m = generalized_mean([q] * K, kind)
    assert abs(m - q) <= 1e-12 * max(1.0, q) or m == pytest.approx(q, rel=1e-12)


@given(pvectors)
def test_pcct_non_negative(ps):
    assert combine_pcct(ps).statistic >= 0


@settings(max_examples=300)
@given(st.lists(st.floats(1e-12, 1.0), min_size=2, max_size=50))
def test_dominance_pcct_below_cct(ps):
    assert approx_pvalue(combine_pcct(ps)) <= approx_pvalue(combine_cct(ps)) * (1 + 1e-12)


@given(pvectors, st.randoms(use_true_random=False))
def test_permutation_invariance(ps, rnd):
    shuffled = list(ps)
    rnd.shuffle(shuffled)
    for kind in CombinerKind:
        a, b = combine(ps, kind), combine(shuffled, kind)
        assert a.mean_scale == pytest.approx(b.mean_scale, rel=1e-12, abs=1e-300)


@given(pvectors, st.data())
def test_monotone_in_each_p(ps, data):
    i = data.draw(st.integers(0, len(ps) - 1))
    factor = data.draw(st.floats(0.01, 0.99))
    smaller = list(ps)
    smaller[i] = max(ps[i] * factor, 1e-300)
    for kind in (CombinerKind.PCCT, CombinerKind.HMP):
        assert generalized_mean(smaller, kind) <= generalized_mean(ps, kind) * (1 + 1e-12)
    assert combine_bonferroni(smaller).statistic <= combine_bonferroni(ps).statistic


@pytest.mark.parametrize("seed", range(5))
def test_asymptotic_equivalence_small_minimum(seed):
    rng = np.random.default_rng(seed)
    rest = rng.uniform(0.05, 0.9, size=9)
    p = np.concatenate([[1e-9], rest])
    mp_ = generalized_mean(p, "pcct")
    assert abs(mp_ / generalized_mean(p, "hmp") - 1) <= 1e-4
    assert abs(mp_ / generalized_mean(p, "cct") - 1) <= 1e-4


def test_mean_scale_matches_inverse_of_statistic():
    p = [0.01, 0.2, 0.7]
    for kind in MEAN_KINDS:
        s = combine(p, kind)
        assert s.mean_scale == float(inverse_transform(kind, s.statistic))
        assert 0 < s.mean_scale <= 1
