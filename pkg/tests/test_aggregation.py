import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from privsignal.aggregation import (
    CvState, Mode, coalition_view, plaintext_sums, prepare_record, run_round,
)
from privsignal.errors import FullCoalition, InvalidIndicator, TooFewParties
from privsignal.field import DEFAULT_SCALE, FixedPointCodec, mod_sum
from privsignal.privacy import PrivacyBudget, Sensitivity

BUDGET = PrivacyBudget.from_risk(0.05, 50)
SENS = Sensitivity(8.0, 1.0, 60.0)


def test_prepare_record_examples():
    r = prepare_record(CvState.in_stream(1, 8, 1, 4, 30))  # stream 2 (1-based)
    assert r.eta.tolist() == [0, 1, 0, 0, 0, 0, 0, 0]
    assert r.pos[1] == 4 and r.time[1] == 30 and r.pos.sum() == 4 and r.time.sum() == 30
    r = prepare_record(CvState.in_stream(6, 8, 1, 0.5, 3))  # stream 7
    assert (r.eta[6], r.pos[6], r.time[6]) == (1, 0.5, 3)
    moving = prepare_record(CvState.in_stream(3, 8, 0, 9, 40))
    assert not moving.as_vector().any()


def test_prepare_record_rejects_bad_indicator():
    with pytest.raises(InvalidIndicator):
        prepare_record(CvState((1, 1, 0, 0, 0, 0, 0, 0), 1, 2.0, 3.0))
    with pytest.raises(InvalidIndicator):
        prepare_record(CvState((0,) * 8, 1, 2.0, 3.0))


def test_smpc_only_exact_count(rng):
    recs = [prepare_record(CvState.in_stream(0, 8, d, 2, 5)) for d in (1, 0, 1)]
    res, _ = run_round(recs, Mode.SMPC_ONLY, rng=rng)
    assert res.eta_hat[0] == 2.0


def test_single_record_rejected(rng):
    with pytest.raises(TooFewParties):
        run_round([prepare_record(CvState.in_stream(0, 8, 1, 1, 1))], Mode.SMPC_ONLY, rng=rng)


def test_smpc_dp_eta_noise_is_laplace(rng):
    # 12,500 rounds x 8 streams = 10^5 noise draws on counts with scale 1/eps.
    recs = [prepare_record(CvState.in_stream(k, 8, 1, 2, 10)) for k in (0, 0, 3)]
    exact = plaintext_sums(recs)[:8]
    noise = np.concatenate([run_round(recs, Mode.SMPC_DP, BUDGET, SENS, rng)[0].eta_hat - exact
                            for _ in range(12_500)])
    b = 1.0 / BUDGET.epsilon
    assert stats.kstest(noise, stats.laplace(scale=b).cdf).pvalue > 0.01


def _random_records(rng, n):
    out = []
    for _ in range(n):
        d = int(rng.integers(0, 2))
        out.append(prepare_record(CvState.in_stream(int(rng.integers(0, 8)), 8, d,
                                                    rng.uniform(0.5, 40), rng.uniform(0, 120))))
    return out


def test_smpc_only_reconstruction_many_rounds(rng):
    for _ in range(200):
        n = int(rng.integers(2, 81))
        recs = _random_records(rng, n)
        res, _ = run_round(recs, Mode.SMPC_ONLY, rng=rng)
        got = np.concatenate([res.eta_hat, res.p_hat, res.t_hat])
        assert np.all(np.abs(got - plaintext_sums(recs)) <= n / (2 * DEFAULT_SCALE))


def test_transcript_counts_and_dump(rng):
    n = 6
    recs = _random_records(rng, n)
    res, t = run_round(recs, Mode.SMPC_DP, BUDGET, SENS, rng, round_id=7)
    v = 24
    assert t.share_messages == v * n * (n - 1)
    assert t.submission_messages == v * n
    msgs = list(t.messages())
    assert len(msgs) == v * n * (n - 1) + v * n + v * n  # shares, beta broadcast, submissions
    buf = io.StringIO()
    t.dump(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == len(msgs)
    rid, sender, receiver, tag, value = lines[0].split("\t")
    assert rid == "7" and sender == "cv0" and receiver == "cv1" and tag == "eta[0]"
    assert 0 <= int(value) < 2**61 - 1


def test_transcript_is_consistent(rng):
    recs = _random_records(rng, 5)
    codec = FixedPointCodec()
    res, t = run_round(recs, Mode.SMPC_ONLY, rng=rng)
    vals = np.stack([r.as_vector() for r in recs], axis=1)
    # each CV's outgoing shares plus the kept one reconstruct its own value
    assert np.array_equal(mod_sum(t.shares, axis=2), codec.encode(vals))
    # each submission is the sum of the shares it received
    assert np.array_equal(mod_sum(t.shares, axis=1), t.submissions)


def test_determinism():
    recs = _random_records(np.random.default_rng(3), 7)
    a = run_round(recs, Mode.SMPC_DP, BUDGET, SENS, np.random.default_rng(11))
    b = run_round(recs, Mode.SMPC_DP, BUDGET, SENS, np.random.default_rng(11))
    assert np.array_equal(a[1].shares, b[1].shares)
    assert np.array_equal(a[1].submissions, b[1].submissions)
    assert np.array_equal(a[0].t_hat, b[0].t_hat)


def test_coalition_view_examples(rng):
    _, t = run_round(_random_records(rng, 4), Mode.SMPC_DP, BUDGET, SENS, rng)
    empty = coalition_view(t, [])
    assert empty.members == () and empty.sent.size == 0 and empty.received.size == 0
    v = coalition_view(t, [0, 2])
    assert v.sent.shape == (24, 2, 4) and v.received.shape == (24, 4, 2)
    with pytest.raises(FullCoalition):
        coalition_view(t, range(4))


def _excluded_shares(secret_t, rounds, seed):
    rng = np.random.default_rng(seed)
    recs = [prepare_record(CvState.in_stream(0, 1, 1, 1.0, 5.0)) for _ in range(2)]
    recs.append(prepare_record(CvState.in_stream(0, 1, 1, 1.0, secret_t)))
    out = np.empty((rounds, 2))
    for r in range(rounds):
        _, t = run_round(recs, Mode.SMPC_DP, BUDGET, SENS, rng)
        view = coalition_view(t, [0, 1])
        out[r] = view.received[2, 2, :]  # time variable, messages from the excluded CV
    return out


def test_coalition_marginals_do_not_depend_on_secret():
    a = _excluded_shares(0.0, 20_000, 1)
    b = _excluded_shares(10.0, 20_000, 2)
    for j in range(2):
        assert stats.ks_2samp(a[:, j], b[:, j]).pvalue > 0.01


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 40))
def test_smpc_only_exact_property(seed, n):
    rng = np.random.default_rng(seed)
    recs = _random_records(rng, n)
    res, t = run_round(recs, Mode.SMPC_ONLY, rng=rng)
    got = np.concatenate([res.eta_hat, res.p_hat, res.t_hat])
    assert np.all(np.abs(got - plaintext_sums(recs)) <= n / (2 * DEFAULT_SCALE))
    assert t.share_messages == 24 * n * (n - 1)
