import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from explab.info import ContractError, batch_mi
from explab.opt import (ConditionalDomain, GridSpec, PinnedDomain, enumerate_pinned_joints, golden_section_1d,
                        line_polish, maximize, minimize, round_counts)


def test_gridspec_validation():
    with pytest.raises(ContractError):
        GridSpec(k=1)
    with pytest.raises(ContractError):
        GridSpec(refine_levels=-1)
    assert GridSpec(k=10, refine_levels=2).finest == 40
    assert GridSpec(max_probes=10**6, inner_max_probes=50).nested().max_probes == 50


def test_round_counts_examples():
    assert round_counts([1 / 3, 1 / 3, 1 / 3], 4).tolist() == [2, 1, 1]
    assert round_counts([0.5, 0.5], 7).tolist() == [4, 3]
    assert round_counts([0.25, 0.75], 8).tolist() == [2, 6]


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5).filter(lambda v: sum(v) > 1e-3),
       st.integers(1, 60))
def test_round_counts_total_and_distance(p, K):
    p = np.array(p) / sum(p)
    c = round_counts(p, K)
    assert c.sum() == K and np.all(c >= 0)
    assert np.max(np.abs(c - K * p)) < 1 + 1e-9


def test_pinned_joints_k2():
    got = [j.mass.tolist() for j in enumerate_pinned_joints([0.5, 0.5], [0.5, 0.5], 2)]
    assert sorted(got) == sorted([[[0.5, 0.0], [0.0, 0.5]], [[0.0, 0.5], [0.5, 0.0]]])


def test_pinned_joints_k4():
    got = sorted(j.mass.tolist() for j in enumerate_pinned_joints([0.5, 0.5], [0.5, 0.5], 4))
    want = sorted([[[0.5, 0.0], [0.0, 0.5]], [[0.25, 0.25], [0.25, 0.25]], [[0.0, 0.5], [0.5, 0.0]]])
    assert got == want


@pytest.mark.parametrize("k", [2, 4, 6, 10, 20])
def test_pinned_count_uniform_binary(k):
    assert len(list(enumerate_pinned_joints([0.5, 0.5], [0.5, 0.5], k))) == k // 2 + 1


def test_pinned_joints_rejects_k1():
    with pytest.raises(ContractError):
        list(enumerate_pinned_joints([0.5, 0.5], [0.5, 0.5], 1))


@given(st.integers(2, 12), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_pinned_joints_have_pinned_margins(k, a, b):
    pa, pb = round_counts([a, 1 - a], k), round_counts([b, 1 - b], k)
    for j in enumerate_pinned_joints([a, 1 - a], [b, 1 - b], k):
        assert np.allclose(j.mass.sum(axis=1) * k, pa)
        assert np.allclose(j.mass.sum(axis=0) * k, pb)


def test_pinned_moves_preserve_margins():
    dom = PinnedDomain([[0.2, 0.3, 0.5], [0.4, 0.6]])
    for mv in dom.moves():
        assert not mv.sum(axis=1).any() and not mv.sum(axis=0).any()


def test_minimize_finds_independent_coupling():
    dom = PinnedDomain([[0.5, 0.5], [0.5, 0.5]])
    res = minimize(lambda J: batch_mi(J, [0], [1], 2), None, dom, GridSpec(k=4))
    assert res.feasible and res.value == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.witness.mass, 0.25)


def test_minimize_infeasible():
    dom = PinnedDomain([[0.5, 0.5], [0.5, 0.5]])
    res = minimize(lambda J: np.zeros(len(J)), lambda J: np.zeros(len(J), bool), dom, GridSpec(k=4))
    assert not res.feasible and res.value == math.inf and res.witness is None
    res = maximize(lambda J: np.zeros(len(J)), lambda J: np.zeros(len(J), bool), dom, GridSpec(k=4))
    assert not res.feasible and math.isnan(res.value)


def test_predicate_guards_objective():
    dom = PinnedDomain([[0.5, 0.5], [0.5, 0.5]])
    seen = []

    def obj(J):
        seen.append(J.copy())
        return J[:, 0, 1]

    feas = lambda J: J[:, 0, 1] >= 0.25
    res = minimize(obj, feas, dom, GridSpec(k=8, refine_levels=1))
    assert res.value == pytest.approx(0.25)
    assert all(np.all(s[:, 0, 1] >= 0.25) for s in seen)


def test_maximize_conditional_domain():
    dom = ConditionalDomain(np.array([0.5, 0.5]), 2)
    # maximize Q(0,0) + Q(1,1): the identity kernel
    res = maximize(lambda J: J[:, 0, 0] + J[:, 1, 1], None, dom, GridSpec(k=6))
    assert res.value == pytest.approx(1.0)
    assert np.allclose(res.witness.mass.sum(axis=1), [0.5, 0.5])


def test_refinement_improves_off_grid_optimum():
    dom = ConditionalDomain(np.array([1.0]), 2)
    f = lambda J: (J[:, 0, 0] - 0.3) ** 2
    coarse = minimize(f, None, dom, GridSpec(k=4, refine_levels=0, local_steps=0))
    fine = minimize(f, None, dom, GridSpec(k=4, refine_levels=3))
    assert fine.value <= coarse.value
    assert fine.value < 1e-3


def test_golden_section():
    x, fx = golden_section_1d(lambda t: (t - 0.3) ** 2 + 1, 1e-10)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(1.0)
    x, _ = golden_section_1d(lambda t: abs(t - 2.5), 1e-10, 2.0, 4.0)
    assert x == pytest.approx(2.5, abs=1e-6)


def test_line_polish_reaches_mi_boundary():
    # maximize Q(0,0)+Q(1,1) over uniform-margin couplings with I <= R
    R = 0.1
    dom = PinnedDomain([[0.5, 0.5], [0.5, 0.5]])
    start = np.full((2, 2), 0.25)
    obj = lambda J: J[:, 0, 0] + J[:, 1, 1]
    con = lambda J: batch_mi(J, [0], [1], 2) <= R + 1e-12
    point, val = line_polish(start, obj, con, dom.moves().astype(float) / 4)
    assert float(batch_mi(point, [0], [1], 2)) == pytest.approx(R, abs=1e-8)
    # analytic: I = ln2 - h(1 - val)
    h = lambda p: -p * math.log(p) - (1 - p) * math.log(1 - p)
    assert math.log(2) - h(1 - val) == pytest.approx(R, abs=1e-8)
