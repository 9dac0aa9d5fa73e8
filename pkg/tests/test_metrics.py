import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flost.estimator import ObservationSet
from flost.metrics import (
    IndexSet, chunked_rmse, localtime_shift, percentile_rmse, percentile_threshold, rmse,
)


def test_rmse_examples():
    x = np.random.default_rng(0).standard_normal((3, 4, 5))
    everything = IndexSet.all(x.shape)
    assert rmse(x, x, everything).value == 0.0
    rep = rmse(x + 1, x, everything)
    assert rep.value == pytest.approx(1.0, rel=1e-15) and rep.count == 60
    with pytest.raises(ValueError):
        rmse(x, x, IndexSet(np.zeros(x.shape, bool)))


def test_rmse_on_explicit_set():
    est = np.zeros((2, 2, 2))
    truth = np.zeros((2, 2, 2))
    truth[0, 1, 1] = 3.0
    truth[1, 0, 0] = 4.0
    delta = IndexSet.explicit(est.shape, [(0, 1, 1), (1, 0, 0)])
    assert rmse(est, truth, delta).value == pytest.approx(math.sqrt(12.5))


def test_percentile_examples():
    rng = np.random.default_rng(1)
    truth = np.tile(np.array([1.0, 2.0, 3.0, 4.0]), 6).reshape(2, 3, 4)
    est = truth + rng.standard_normal(truth.shape)
    delta = IndexSet.all(truth.shape)
    q0, q75 = percentile_rmse(est, truth, delta, [0.0, 0.75])
    assert q0.value == rmse(est, truth, delta).value
    flat = np.sort(truth.ravel())
    thr = flat[math.ceil(0.75 * flat.size) - 1]
    assert thr == 3.0 and percentile_threshold(truth, 0.75) == thr
    sel = truth > thr
    assert q75.count == np.count_nonzero(truth == 4.0)
    assert q75.value == pytest.approx(np.sqrt(np.mean((est[sel] - truth[sel]) ** 2)), rel=1e-14)


def test_percentile_constant_truth_is_absent():
    truth = np.full((2, 2, 3), 7.0)
    reps = percentile_rmse(truth, truth, IndexSet.all(truth.shape), [0.0, 0.5, 0.99])
    assert reps[0].count == 12
    assert all(r.absent and math.isnan(r.value) for r in reps[1:])
    assert reps[1].to_json()["value"] is None


def test_chunked_examples():
    rng = np.random.default_rng(2)
    truth = rng.standard_normal((2, 2, 10))
    est = truth + rng.standard_normal(truth.shape)
    delta = IndexSet.all(truth.shape)
    (only,) = chunked_rmse(est, truth, delta, 10)
    assert only.value == rmse(est, truth, delta).value
    reps = chunked_rmse(est, truth, delta, 3)
    assert [r.count for r in reps] == [12, 12, 12, 4]
    assert all(r.value == 0 for r in chunked_rmse(truth, truth, delta, 4))
    big = np.zeros((1, 1, 1728))
    assert len(chunked_rmse(big, big, IndexSet.all(big.shape), 192)) == 9


def test_localtime_shift_examples():
    x = np.arange(2 * 4 * 3, dtype=float).reshape(2, 4, 3)
    np.testing.assert_array_equal(localtime_shift(x, [0, 0, 0]), x)
    np.testing.assert_array_equal(localtime_shift(x, [4, 4, 4]), x)
    out = localtime_shift(x, [1, 0, 0])
    np.testing.assert_array_equal(out[:, :, 0], x[:, [3, 0, 1, 2], 0])
    np.testing.assert_array_equal(out[:, :, 1:], x[:, :, 1:])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_rmse_symmetry_and_scaling(seed, a):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 3, 4))
    d = IndexSet.all(x.shape)
    assert rmse(x, y, d).value == pytest.approx(rmse(y, x, d).value, rel=1e-14)
    assert rmse(a * x, a * y, d).value == pytest.approx(abs(a) * rmse(x, y, d).value, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_rmse_decomposes_over_observed_and_missing(seed, p):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((3, 4, 5)), rng.standard_normal((3, 4, 5))
    mask = rng.random(x.shape) < p
    if mask.all() or not mask.any():
        return
    obs = ObservationSet.from_mask(x, mask, p)
    tr, te, al = (rmse(y, x, d) for d in (IndexSet.observed(obs), IndexSet.missing(obs), IndexSet.all(x.shape)))
    assert al.value ** 2 * x.size == pytest.approx(tr.value ** 2 * tr.count + te.value ** 2 * te.count, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_localtime_shift_norm_and_inverse(seed, N):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, N, 6))
    off = rng.integers(-20, 20, 6)
    y = localtime_shift(x, off)
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-15)
    np.testing.assert_array_equal(localtime_shift(y, -off), x)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.99), st.floats(0, 0.99))
def test_percentile_sets_nest(seed, q1, q2):
    q1, q2 = sorted((q1, q2))
    truth = np.random.default_rng(seed).standard_normal((3, 3, 4))
    s1 = truth > percentile_threshold(truth, q1)
    s2 = truth > percentile_threshold(truth, q2)
    assert not np.any(s2 & ~s1)
