import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import stats

from privsignal.aggregation import CvState
from privsignal.errors import InvalidRisk, NonPositiveBudget, NonPositiveInput, TooFewParties
from privsignal.privacy import (
    LaplaceSpec, ParticipantHistory, PrivacyBudget, Sensitivity, beta1_from_uniform,
    classify_vast_majority, epsilon_bound, laplace_from_uniform, laplace_scale, sample_beta_1,
    sample_laplace,
)


def hand_epsilon(p_dire, n):
    return math.log(8 * p_dire * (n - 1) / (1 - 8 * p_dire))


@pytest.mark.parametrize("p_dire, n, expected", [(0.05, 50, 3.4864), (0.01, 50, 1.4495)])
def test_epsilon_examples(p_dire, n, expected):
    assert epsilon_bound(p_dire, n) == pytest.approx(expected, abs=1e-3)
    assert epsilon_bound(p_dire, n) == pytest.approx(hand_epsilon(p_dire, n), rel=1e-12)


def test_epsilon_errors():
    with pytest.raises(NonPositiveBudget):
        epsilon_bound(0.003, 40)
    with pytest.raises(InvalidRisk):
        epsilon_bound(0.125, 40)
    with pytest.raises(InvalidRisk):
        epsilon_bound(0.0, 40)
    with pytest.raises(TooFewParties):
        epsilon_bound(0.05, 1)


@pytest.mark.parametrize("p_dire, b", [(0.01, 5.51), (0.05, 2.30), (0.1, 1.51)])
def test_laplace_scale_reported_values(p_dire, b):
    assert laplace_scale(8.0, epsilon_bound(p_dire, 50)).b == pytest.approx(b, abs=0.01)


def test_laplace_scale_rejects_nonpositive():
    with pytest.raises(NonPositiveInput):
        laplace_scale(0.0, 1.0)
    with pytest.raises(NonPositiveInput):
        laplace_scale(1.0, -1.0)


def test_sensitivity_components():
    s = Sensitivity(q_e=8, phi=0.5, r_k=60)
    assert (s.delta_eta, s.delta_p, s.delta_t) == (1.0, 8.0, 30.0)
    with pytest.raises(NonPositiveInput):
        Sensitivity(8, 1, 0)


def test_laplace_moments_and_ks(rng):
    b = 2.3
    x = sample_laplace(LaplaceSpec(b), rng, size=100_000)
    assert abs(np.median(x)) <= 3 * b * 1e-2
    assert x.var() == pytest.approx(2 * b * b, rel=0.05)
    assert stats.kstest(x, stats.laplace(scale=b).cdf).pvalue > 0.01


def test_laplace_inverse_cdf_matches_scipy():
    u = np.linspace(0.001, 0.999, 999)
    assert np.allclose(laplace_from_uniform(u, 1.7), stats.laplace(scale=1.7).ppf(u))


def test_beta_examples(rng):
    assert beta1_from_uniform(0.0, 7) == 0.0
    assert stats.kstest(sample_beta_1(2, rng, size=100_000), "uniform").pvalue > 0.01
    assert sample_beta_1(50, rng, size=100_000).mean() == pytest.approx(1 / 50, rel=0.1)
    with pytest.raises(TooFewParties):
        sample_beta_1(1, rng)


def test_beta_inverse_cdf_matches_scipy():
    u = np.linspace(0.0, 0.999, 500)
    assert np.allclose(beta1_from_uniform(u, 9), stats.beta(1, 8).ppf(u))


@pytest.mark.parametrize("n", [2, 10, 50])
def test_distributed_noise_composes_to_laplace(n, rng):
    # sqrt(beta) * (sum of n iid Lap(b)) with beta ~ Beta(1, n-1) is Lap(b).
    b, m = 1.5, 100_000
    beta = sample_beta_1(n, rng, size=m)
    xi = sample_laplace(LaplaceSpec(b), rng, size=(m, n)).sum(axis=1)
    z = np.sqrt(beta) * xi
    assert stats.kstest(z, stats.laplace(scale=b).cdf).pvalue > 0.01
    assert z.var() == pytest.approx(2 * b * b, rel=0.05)


@pytest.mark.parametrize("p, t, kind", [(3, 20, 1), (12, 20, 2), (12, 90, 3), (3, 90, 2)])
def test_classification_examples(p, t, kind):
    sens = Sensitivity(q_e=8, phi=1.0, r_k=60)
    rep = classify_vast_majority([CvState.in_stream(0, 8, 1, p, t)], sens)
    assert (rep.type1, rep.type2, rep.type3)[kind - 1] == 1 and rep.total == 1


def test_classification_ignores_moving_cvs():
    sens = [Sensitivity(8, 1.0, 60)] * 8
    states = [CvState.in_stream(k % 8, 8, k % 2, 1 + k, 5.0 * k) for k in range(20)]
    rep = classify_vast_majority(states, sens)
    assert rep.total == sum(s.delta for s in states)


def test_participant_history_window():
    h = ParticipantHistory(window=5, initial=40)
    assert h.n_ref == 40
    for n in [10, 20, 30, 40, 50, 60]:
        h.push(n)
    assert h.n_ref == pytest.approx(40.0)  # mean of the last five
    assert h.budget(0.05).epsilon == pytest.approx(hand_epsilon(0.05, 40))


risk = st.floats(0.004, 0.124)


@given(p1=risk, p2=risk, n=st.floats(3, 500))
def test_epsilon_increasing_in_risk(p1, p2, n):
    assume(p1 < p2)
    try:
        e1 = epsilon_bound(p1, n)
    except NonPositiveBudget:
        return
    assert epsilon_bound(p2, n) > e1


@given(p=risk, n1=st.floats(2, 500), n2=st.floats(2, 500))
def test_epsilon_increasing_in_n(p, n1, n2):
    assume(n1 < n2)
    try:
        e1 = epsilon_bound(p, n1)
    except NonPositiveBudget:
        return
    assert epsilon_bound(p, n2) > e1


@given(delta=st.floats(0.01, 100), e1=st.floats(0.01, 10), e2=st.floats(0.01, 10))
def test_laplace_scale_decreasing_in_eps(delta, e1, e2):
    assume(e1 < e2 * (1 - 1e-9))
    assert laplace_scale(delta, e1).b > laplace_scale(delta, e2).b


@given(pts=st.lists(st.tuples(st.integers(0, 7), st.integers(0, 1), st.floats(0.1, 40),
                              st.floats(0, 200)), max_size=40),
       q_e=st.floats(0.5, 14), phi=st.floats(0.1, 1.5))
def test_classification_counts_queued(pts, q_e, phi):
    states = [CvState.in_stream(k, 8, d, p, t) for k, d, p, t in pts]
    rep = classify_vast_majority(states, Sensitivity(q_e, phi, 60.0))
    assert rep.total == sum(d for _, d, _, _ in pts)


def test_budget_from_risk_records_inputs():
    b = PrivacyBudget.from_risk(0.05, 26.0)
    assert (b.p_dire, b.n_ref) == (0.05, 26.0)
    assert b.epsilon == pytest.approx(hand_epsilon(0.05, 26.0))
