import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from explab.info import Channel, ContractError, JointDist
from explab.metrics import DecodingMetric, eval_metric, gld_posterior, posterior_from_scores, sequence_score


def test_kinds_and_validation():
    w = Channel.bsc(0.1)
    with pytest.raises(ContractError):
        DecodingMetric("bogus")
    with pytest.raises(ContractError):
        DecodingMetric.likelihood(w, -1.0)
    with pytest.raises(ContractError):
        DecodingMetric.mmi(1.0).table()
    with pytest.raises(ContractError):
        eval_metric(DecodingMetric.ml_limit(w), JointDist.of(np.full((2, 2), 0.25)))


def test_likelihood_and_mmi_values():
    w = Channel.bsc(0.1)
    q = JointDist.of([[0.45, 0.05], [0.05, 0.45]])
    assert eval_metric(DecodingMetric.likelihood(w, 2.0), q) == pytest.approx(
        2 * (0.9 * math.log(0.9) + 0.1 * math.log(0.1)))
    assert eval_metric(DecodingMetric.mmi(1.0), q) == pytest.approx(math.log(2) - oracles.h2(0.1))
    assert eval_metric(DecodingMetric.likelihood(w, 0.0), q) == 0.0


def test_minus_infinity_coefficients():
    m = DecodingMetric.likelihood(Channel.identity(2))
    assert eval_metric(m, JointDist.of([[0.5, 0], [0, 0.5]])) == 0.0
    assert eval_metric(m, JointDist.of([[0.4, 0.1], [0, 0.5]])) == -math.inf


def test_sequence_score_is_metric_of_joint_type():
    w = Channel.bsc(0.2)
    m = DecodingMetric.mismatched(Channel.bsc(0.3), 1.5)
    s = sequence_score(m, [0, 1, 1, 0], [0, 1, 0, 0])
    assert s == pytest.approx(1.5 * (3 * math.log(0.7) + math.log(0.3)) / 4)


def test_gld_posterior_matches_brute_force():
    w = Channel.bsc(0.25)
    cws = [(0, 0, 1, 1), (0, 1, 0, 1), (1, 1, 0, 0)]
    y = (0, 1, 1, 1)
    post = gld_posterior(DecodingMetric.likelihood(w, 1.0), np.array(cws), y).mass
    raw = [oracles.lik(w.w.tolist(), x, y) for x in cws]
    assert np.allclose(post, np.array(raw) / sum(raw))


def test_ml_limit_posterior_ties_uniform():
    m = DecodingMetric.ml_limit(Channel.bsc(0.1))
    post = posterior_from_scores(np.array([-1.0, -0.5, -0.5]), 4, m)
    assert np.allclose(post, [0, 0.5, 0.5])


def test_all_minus_infinity_scores_uniform():
    post = posterior_from_scores(np.array([-np.inf, -np.inf]), 3, DecodingMetric.mmi(1.0))
    assert np.allclose(post, [0.5, 0.5])


def test_empty_codebook_rejected():
    with pytest.raises(ContractError):
        gld_posterior(DecodingMetric.mmi(1.0), np.zeros((0, 3), int), [0, 1, 0])


@given(st.lists(st.floats(-5, 0), min_size=1, max_size=6), st.integers(1, 30))
def test_posterior_is_a_distribution(scores, n):
    post = posterior_from_scores(np.array(scores), n, DecodingMetric.likelihood(Channel.bsc(0.1), 1.0))
    assert post.sum() == pytest.approx(1.0) and np.all(post >= 0)


@given(st.lists(st.floats(-3, 0), min_size=2, max_size=5, unique=True), st.integers(5, 20))
def test_large_beta_approaches_argmax(scores, n):
    s = np.array(scores)
    if np.sort(s)[-1] - np.sort(s)[-2] < 1e-2:
        return
    post = posterior_from_scores(1e3 * s, n, DecodingMetric.likelihood(Channel.bsc(0.1), 1.0))
    assert post[np.argmax(s)] == pytest.approx(1.0, abs=1e-6)
