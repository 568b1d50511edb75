import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from privsignal.errors import DimensionMismatch
from privsignal.estimation import (
    LAMBDA_MIN, CycleHistory, estimate, gamma_from_history, joint_rates, update_history,
)


def test_history_examples():
    h = update_history(CycleHistory(8, 10), np.ones(8))
    assert len(h) == 1
    h = update_history(CycleHistory(8, 10), np.array([-0.7, 1, 1, 1, 1, 1, 1, 1]))
    assert h.counts[0, 0] == 0.0
    h = CycleHistory(8, 3)
    for r in range(4):
        update_history(h, np.full(8, float(r)))
    assert len(h) == 3 and 0.0 not in h.counts[:, 0]


def test_history_shape_checked():
    with pytest.raises(DimensionMismatch):
        update_history(CycleHistory(8), np.ones(7))


def test_gamma_examples():
    h = update_history(CycleHistory(), np.full(8, 3.0))
    assert np.allclose(gamma_from_history(h), 1 / 8)
    only = np.zeros(8)
    only[2] = 4.0  # stream 3
    g = gamma_from_history(update_history(CycleHistory(), only))
    assert g[2] == 1.0 and g.sum() == 1.0
    assert np.allclose(gamma_from_history(CycleHistory()), 1 / 8)


def test_estimate_examples():
    assert estimate([6.0], [60.0], [1.0]).lambda_k[0] == pytest.approx(0.1)
    e = estimate([3.0, 5.0], [30.0, 50.0], [0.5, 0.5])
    assert np.allclose(e.lambda_k, [0.1, 0.1])
    assert np.allclose(estimate([3.0, 5.0], [30.0, 50.0], [1.0, 1.0]).lambda_k, e.lambda_k)


def test_hand_evaluation_unequal_gamma():
    # lambda_0 = (2 + 6) / (0.25 * 40 + 0.75 * 60) = 8 / 55
    e = estimate([2.0, 6.0], [40.0, 60.0], [0.25, 0.75])
    assert np.allclose(e.lambda_k, [0.25 * 8 / 55, 0.75 * 8 / 55])


def test_degenerate_and_clamps():
    e = estimate([3.0, 1.0], [-5.0, 0.0], [0.5, 0.5])
    assert e.degenerate and np.all(e.lambda_k == LAMBDA_MIN)
    e = estimate([100.0, 0.0], [1.0, 1.0], [0.5, 0.5], lambda_max=0.5)
    assert e.lambda_k.max() == 0.5
    e = estimate([1.0, 1.0], [10.0, 10.0], [1.0, 0.0])
    assert e.lambda_k[1] == LAMBDA_MIN
    # negative noisy inputs are clamped before use
    assert joint_rates([-4.0, 6.0], [60.0, -3.0], [0.5, 0.5]) == pytest.approx([0.1, 0.1])


counts = st.lists(st.floats(0, 30), min_size=8, max_size=8)


@given(rows=st.lists(counts, min_size=1, max_size=12), scale=st.floats(0.01, 100))
def test_gamma_scale_invariant(rows, scale):
    h1, h2 = CycleHistory(), CycleHistory()
    for r in rows:
        update_history(h1, np.array(r))
        update_history(h2, np.array(r) * scale)
    g1, g2 = gamma_from_history(h1), gamma_from_history(h2)
    assert g1.sum() == pytest.approx(1.0)
    if np.array(rows).sum() * min(scale, 1) > 1e-9:
        assert np.allclose(g1, g2, atol=1e-9)


pos = st.lists(st.floats(0, 50), min_size=8, max_size=8)
times = st.lists(st.floats(0.1, 300), min_size=8, max_size=8)
gammas = st.lists(st.floats(0.01, 1), min_size=8, max_size=8)


@given(p=pos, t=times, g=gammas, s=st.floats(0.01, 100))
def test_lambda_homogeneous_in_gamma(p, t, g, s):
    a = joint_rates(p, t, g)
    b = joint_rates(p, t, np.array(g) * s)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


@given(p=st.lists(st.floats(0, 50), min_size=1, max_size=30),
       t=st.lists(st.floats(0.1, 300), min_size=1, max_size=30))
def test_single_stream_exact(p, t):
    n = min(len(p), len(t))
    lam = joint_rates([sum(p[:n])], [sum(t[:n])], [1.0])
    assert lam[0] == pytest.approx(sum(p[:n]) / sum(t[:n]))


@given(p=pos, t=times, g=gammas, k=st.integers(0, 7), bump=st.floats(0.01, 20))
def test_monotone_in_positions(p, t, g, k, bump):
    a = joint_rates(p, t, g)
    p2 = list(p)
    p2[k] += bump
    b = joint_rates(p2, t, g)
    assume(a is not None)
    assert np.all(b >= a - 1e-12)


@given(p=pos, t=times, g=gammas)
def test_estimate_within_bounds(p, t, g):
    e = estimate(p, t, g, lambda_max=0.5)
    assert np.all(e.lambda_k >= LAMBDA_MIN) and np.all(e.lambda_k <= 0.5)
