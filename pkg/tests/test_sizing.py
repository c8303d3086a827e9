import random

import pytest
from hypothesis import given, settings, strategies as st

from cfaudit.sim.sizing import (SizingParams, Unbounded, contention_threshold, min_contention_free_log_size,
                                sizing_run, stall_aware_log_size)


def test_unbounded_when_rl_at_least_one():
    p = SizingParams(M=2000, B=960, b=1000)
    assert p.R * p.l >= 1
    assert min_contention_free_log_size(p) is Unbounded
    assert repr(Unbounded) == "Unbounded"


def test_symbols():
    p = SizingParams(M=8000, B=11520, b=50)
    assert p.N == 2 * 32 + 2 * 32 + 38 + 1 == 167
    assert p.l == 200
    assert p.R == pytest.approx(1 / 8000 + 1 / 11520)


def test_formula_reference_params():
    # 2*R*N*l/(1-R*l) = 14.78 -> next multiple of 4 above is 16
    p = SizingParams(M=8000, B=11520, b=50)
    assert min_contention_free_log_size(p) == 16
    thr = contention_threshold(p)
    assert abs(thr - 16) <= 16 // 2


def test_bound_vanishes_as_l_shrinks():
    assert min_contention_free_log_size(SizingParams(M=8000, B=11520, b=1e-6)) == 4


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        SizingParams(M=0, B=1, b=1)


def test_stall_aware_matches_simulation_examples():
    # [DERIVED] frozen from contention_threshold sweeps at rtt=0, dispatch=0
    cases = [((8000, 11520, 400), 172, 44, 32), ((2000, 960, 1000), Unbounded, 864, 864)]
    for (m, b_, br), formula, stall, sim in cases:
        p = SizingParams(M=m, B=b_, b=br)
        assert min_contention_free_log_size(p) == formula
        assert stall_aware_log_size(p) == stall
        assert contention_threshold(p) == sim


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_log_at_stall_aware_size_never_contends(seed):
    rng = random.Random(seed)
    p = SizingParams(M=rng.uniform(2000, 64000), B=rng.choice([960, 1920, 5760, 11520]),
                     b=rng.uniform(10, 600))
    cf = stall_aware_log_size(p)
    assert cf is not Unbounded and cf <= 4096
    assert sizing_run(p, cf, seed=seed) == 0
    assert sizing_run(p, cf + 64, seed=seed) == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_far_below_threshold_contends(seed):
    rng = random.Random(seed)
    p = SizingParams(M=rng.uniform(2000, 20000), B=rng.choice([960, 11520]), b=rng.uniform(200, 2000))
    thr = contention_threshold(p, hi=8192)
    if thr is Unbounded or thr < 32:
        return
    assert sizing_run(p, max(8, (thr // 2) & ~3)) > 0
