import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from explab import exponents as ex
from explab.info import Channel, ContractError, JointDist, ProbDist
from explab.metrics import DecodingMetric, eval_metric
from explab.opt import GridSpec

# frozen values from the independent 1-D oracles in oracles.py
E_RC_BSC01_R01 = 0.1231435513142097
ALPHA_BSC01_LIK_R005 = -0.8594884231228331
A_ML_BSC02_R01 = -0.6115906810212909
# e_trc, BSC(0.1), likelihood beta=1, R=0.1: identical at k=20 and k=40
E_TRC_BSC01_LIK_R01 = 0.1231435513142097

U = ProbDist.uniform(2)
BSC01 = Channel.bsc(0.1)
USELESS = Channel.useless([0.5, 0.5])
MMI = DecodingMetric.mmi(1.0)


def test_oracle_constants_reproduce():
    assert oracles.e_rc_bsc(0.1, 0.1) == pytest.approx(E_RC_BSC01_R01, abs=1e-9)
    assert oracles.alpha_bsc_likelihood(0.1, 1.0, 0.05) == pytest.approx(ALPHA_BSC01_LIK_R005, abs=1e-9)
    assert oracles.a_ml_bsc(0.2, 0.1) == pytest.approx(A_ML_BSC02_R01, abs=1e-9)


# --- coupling suprema --------------------------------------------------------

def test_alpha_matches_oracle():
    assert ex.alpha(0.05, [0.5, 0.5], U, DecodingMetric.likelihood(BSC01, 1.0)) == pytest.approx(
        ALPHA_BSC01_LIK_R005, abs=1e-3)


def test_alpha_zero_rate_is_product_score():
    w = Channel.of([[0.7, 0.3], [0.2, 0.8]])
    m = DecodingMetric.likelihood(w, 1.5)
    qy, qx = np.array([0.4, 0.6]), ProbDist.of([0.3, 0.7])
    prod = eval_metric(m, JointDist.of(np.outer(qx.mass, qy)))
    assert ex.alpha(0.0, qy, qx, m) == pytest.approx(prod, abs=1e-9)


def test_alpha_mmi_equals_rate():
    for R in (0.0, 0.1, 0.3):
        assert ex.alpha(R, [0.3, 0.7], ProbDist.of([0.6, 0.4]), MMI) == pytest.approx(R, abs=2e-2)


def test_alpha_nondecreasing_in_rate():
    m = DecodingMetric.likelihood(Channel.bsc(0.2), 1.0)
    vals = [ex.alpha(R, [0.5, 0.5], U, m) for R in (0.0, 0.02, 0.05, 0.1, 0.2, 0.4)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_alpha_rejects_ml_limit():
    with pytest.raises(ContractError):
        ex.alpha(0.1, [0.5, 0.5], U, DecodingMetric.ml_limit(BSC01))


def test_a_ml_values():
    w = Channel.bsc(0.2)
    assert ex.a_ml(0.1, [0.5, 0.5], U, w) == pytest.approx(A_ML_BSC02_R01, abs=1e-3)
    assert ex.a_ml(0.0, [0.5, 0.5], U, w) == pytest.approx(0.5 * math.log(0.8) + 0.5 * math.log(0.2), abs=1e-9)
    # R >= ln|X|: the diagonal coupling is allowed
    assert ex.a_ml(math.log(2), [0.5, 0.5], U, w) == pytest.approx(math.log(0.8), abs=1e-9)


def test_negative_rate_rejected():
    with pytest.raises(ContractError):
        ex.e_rc(-0.1, U, BSC01)


# --- Gamma ---------------------------------------------------------------------

def test_gamma_useless_channel():
    assert ex.gamma(np.full((2, 2), 0.25), 0.2, USELESS, MMI) == pytest.approx(0.2, abs=3e-2)


def test_gamma_marginal_mismatch():
    with pytest.raises(ContractError):
        ex.gamma(np.array([[0.5, 0.2], [0.1, 0.2]]), 0.1, BSC01, MMI, q_x=U)


def test_gamma_diagonal_upper_bound():
    # X' = X and Q_{Y|XX'} = W: only the clip term [alpha - g]_+ survives
    w = Channel.bsc(0.2)
    m = DecodingMetric.likelihood(w, 1.0)
    R = 0.1
    diag = np.array([[0.5, 0.0], [0.0, 0.5]])
    qxy = 0.5 * w.w
    bound = max(ex.alpha(R, qxy.sum(axis=0), U, m) - eval_metric(m, JointDist.of(qxy)), 0.0)
    assert ex.gamma(diag, R, w, m) <= bound + 1e-9


@settings(max_examples=25)
@given(st.floats(0.0, 0.25), st.floats(0.02, 0.45), st.floats(0.0, 0.5), st.floats(0.1, 3.0))
def test_gamma_nonnegative(t, p, R, beta):
    w = Channel.bsc(p)
    q = np.array([[0.5 - t, t], [t, 0.5 - t]])
    assert ex.gamma(q, R, w, DecodingMetric.likelihood(w, beta), GridSpec(k=6, refine_levels=1)) >= 0


# --- random coding / TRC / expurgated ------------------------------------------

def test_e_rc_oracle():
    assert ex.e_rc(0.1, U, BSC01).value == pytest.approx(E_RC_BSC01_R01, abs=1e-3)


@pytest.mark.parametrize("R", [0.0, 0.05, 0.2, 0.3])
def test_e_rc_against_scan(R):
    assert ex.e_rc(R, U, BSC01).value == pytest.approx(oracles.e_rc_bsc(0.1, R), abs=1e-6)


def test_e_rc_useless_and_large_rate():
    assert ex.e_rc(0.1, U, USELESS).value == pytest.approx(0.0, abs=1e-12)
    assert ex.e_rc(math.log(2), U, BSC01).value == pytest.approx(0.0, abs=1e-12)


def test_e_trc_useless():
    assert abs(ex.e_trc(0.1, U, USELESS, MMI).value) <= 3e-2


def test_e_trc_zero_rate_equals_e_ex():
    w = Channel.bsc(0.15)
    m = DecodingMetric.likelihood(w, 2.0)
    assert ex.e_trc(0.0, U, w, m).value == ex.e_ex(0.0, U, w, m).value


def test_e_trc_golden_value():
    res = ex.e_trc(0.1, U, BSC01, DecodingMetric.likelihood(BSC01, 1.0))
    assert res.value == pytest.approx(E_TRC_BSC01_LIK_R01, abs=5e-2)
    assert res.feasible and res.witness is not None and res.inner_witness is not None
    assert res.grid.k == 20


def test_e_ex_not_below_e_trc():
    m = DecodingMetric.likelihood(BSC01, 1.0)
    for R in (0.05, 0.1):
        assert ex.e_ex(R, U, BSC01, m).value >= ex.e_trc(R, U, BSC01, m).value - 1e-9


def test_e_ex_ml_dominates_ckm():
    w = Channel.bsc(0.2)
    R = 0.05
    ckm = oracles.ckm_bsc(0.2, R)
    assert ckm == pytest.approx(0.05536051565782621, abs=1e-9)
    assert ex.e_ex(R, U, w, DecodingMetric.ml_limit(w)).value >= ckm - 1e-9


def test_e_trc_ml_noiseless_infeasible():
    res = ex.e_trc_ml(0.05, U, Channel.identity(2))
    assert res.value == math.inf and not res.feasible


def test_e_trc_ml_useless():
    assert abs(ex.e_trc_ml(0.1, U, USELESS).value) <= 3e-2


def test_e_trc_ml_matches_large_beta():
    w = Channel.bsc(0.15)
    ml = ex.e_trc_ml(0.1, U, w).value
    big = ex.e_trc(0.1, U, w, DecodingMetric.likelihood(w, 100.0)).value
    assert abs(ml - big) <= 5e-2


def test_e_trc_dispatches_ml_limit():
    w = Channel.bsc(0.15)
    assert ex.e_trc(0.1, U, w, DecodingMetric.ml_limit(w)).value == ex.e_trc_ml(0.1, U, w).value


@pytest.mark.parametrize("R", [0.05, 0.1, 0.2])
def test_smmi_matches_mmi_trc(R):
    a = ex.e_trc(R, U, BSC01, MMI).value
    b = ex.e_trc_smmi(R, U, BSC01).value
    assert abs(a - b) <= 3e-2
    assert b >= ex.e_rc(R, U, BSC01).value - 1e-9


def test_smmi_useless():
    assert abs(ex.e_trc_smmi(0.1, U, USELESS).value) <= 3e-2


# --- list decoding ----------------------------------------------------------------

def test_lambda_list_constraint_free_is_zero():
    w = Channel.bsc(0.25)  # W itself lies on the 1/8 grid
    v = ex.lambda_list(np.full((2, 2, 2), 0.125), 0.1, w, DecodingMetric.ml_limit(w), GridSpec(k=8),
                       constrained=False)
    assert v == pytest.approx(0.0, abs=1e-12)


def test_lambda_list_noiseless_infeasible():
    w = Channel.identity(2)
    v = ex.lambda_list(np.full((2, 2, 2), 0.125), 0.05, w, DecodingMetric.ml_limit(w), GridSpec(k=12))
    assert v == math.inf


def test_lambda_list_nonnegative_and_literal_not_larger():
    w = Channel.bsc(0.2)
    m = DecodingMetric.likelihood(w, 1.0)
    q3 = np.full((2, 2, 2), 0.125)
    joint = ex.lambda_list(q3, 0.1, w, m, GridSpec(k=8))
    pair_leakage = ex.lambda_list(q3, 0.1, w, m, GridSpec(k=8), pair_leakage=True)
    assert joint >= 0 and pair_leakage >= 0
    # I(X';Y|X) <= I(X',X~;Y|X) pointwise
    assert pair_leakage <= joint + 1e-9


def test_lambda_list_rejects_pair():
    with pytest.raises(ContractError):
        ex.lambda_list(np.full((2, 2), 0.25), 0.1, BSC01, MMI)


@pytest.mark.slow
def test_e_trc_list_useless_coarse():
    res = ex.e_trc_list(0.1, U, USELESS, MMI, GridSpec(k=8))
    assert res.value >= 0 and abs(res.value) <= 5e-2


# --- erasure / undetected error ---------------------------------------------------

def test_lambda_ue_threshold_extremes():
    m = DecodingMetric.likelihood(BSC01, 1.0)
    q = np.full((2, 2), 0.25)
    assert ex.lambda_ue(q, 0.1, -1e9, BSC01, m) == pytest.approx(0.0, abs=1e-12)
    assert ex.lambda_ue(q, 0.1, 1e9, BSC01, m) == math.inf


def test_lambda_ue_nondecreasing_in_threshold():
    m = DecodingMetric.likelihood(BSC01, 1.0)
    q = np.array([[0.4, 0.1], [0.1, 0.4]])
    vals = [ex.lambda_ue(q, 0.1, T, BSC01, m, GridSpec(k=10)) for T in (-0.5, -0.1, 0.0, 0.1, 0.3)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_e_trc_ue_dominates_trc():
    m = DecodingMetric.likelihood(BSC01, 1.0)
    ue = ex.e_trc_ue(0.1, 0.0, U, BSC01, m).value
    assert ue >= ex.e_trc(0.1, U, BSC01, m).value - 3e-2
    assert ex.e_trc_ue(0.1, 1e9, U, BSC01, m).value == math.inf


def test_ue_rejects_ml_limit_and_infinite_threshold():
    with pytest.raises(ContractError):
        ex.e_trc_ue(0.1, 0.0, U, BSC01, DecodingMetric.ml_limit(BSC01))
    with pytest.raises(ContractError):
        ex.lambda_ue(np.full((2, 2), 0.25), 0.1, math.inf, BSC01, MMI)


# --- curves ------------------------------------------------------------------------

def test_single_rate_curve_wraps_result():
    c = ex.curve("rc", [0.1], U, BSC01)
    assert len(c.points) == 1
    assert c.values[0] == ex.e_rc(0.1, U, BSC01).value


def test_rc_curve_useless_zero():
    c = ex.curve("rc", [0.0, 0.1, 0.3, 0.6], U, USELESS)
    assert all(abs(v) < 1e-12 for v in c.values)


def test_curve_rejects_unsorted_rates_and_unknown_kind():
    with pytest.raises(ContractError):
        ex.curve("rc", [0.2, 0.1], U, BSC01)
    with pytest.raises(ContractError):
        ex.curve("nope", [0.1], U, BSC01)
    with pytest.raises(ContractError):
        ex.curve("trc", [0.1], U, BSC01)  # needs a metric


def test_curve_deterministic():
    a = ex.curve("rc", [0.05, 0.1], U, BSC01)
    b = ex.curve("rc", [0.05, 0.1], U, BSC01)
    assert a.values == b.values and a.problem_hash == b.problem_hash


def test_values_nonnegative_and_inf_only_infeasible():
    w = Channel.bsc(0.2)
    m = DecodingMetric.likelihood(w, 1.0)
    for res in (ex.e_rc(0.05, U, w), ex.e_trc(0.05, U, w, m), ex.e_ex(0.05, U, w, m),
                ex.e_trc_smmi(0.05, U, w), ex.e_trc_ml(0.05, U, w)):
        assert res.value >= -1e-9
        assert math.isfinite(res.value) == res.feasible
