import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import comb

from rbmflock.errors import DomainError
from rbmflock.theory import (AgbParams, Moment, agb_closed, agb_sum, decay_inequality_check, rtau_identity,
                             verify_all)


def test_agb_examples():
    p = AgbParams(2, 1.0, 0.5)
    assert agb_sum(p, Moment.R) == pytest.approx(1.0, abs=1e-15)
    assert agb_sum(p, Moment.R2) == pytest.approx(1.5, abs=1e-15)
    assert agb_closed(p, Moment.R) == 1.0
    assert agb_closed(p, Moment.R2) == 1.5
    assert p.g == 1.0


@pytest.mark.parametrize("ratio", [1 / 32, 1 / 8, 0.5, 1.0])
def test_binomial_theorem(ratio):
    assert agb_sum(AgbParams(17, 1.0, ratio), Moment.ONE) == pytest.approx(1.0, rel=1e-13)
    assert agb_closed(AgbParams(17, 1.0, ratio), Moment.ONE) == 1.0


def test_sum_matches_exact_integer_arithmetic():
    n, a, q = 25, 0.9, 1 / 8
    ref = math.fsum(comb(n, r, exact=True) * a ** r * r * r * q ** r * (1 - q) ** (n - r)
                    for r in range(n + 1))
    assert agb_sum(AgbParams(n, a, q), Moment.R2) == pytest.approx(ref, rel=1e-12)


def test_closed_form_floors():
    with pytest.raises(DomainError):
        agb_closed(AgbParams(1, 0.5, 0.5), Moment.R2)
    with pytest.raises(DomainError):
        agb_closed(AgbParams(0, 0.5, 0.5), Moment.R)
    with pytest.raises(DomainError):
        agb_sum(AgbParams(61, 0.5, 0.5), Moment.ONE)


@given(st.integers(2, 60), st.sampled_from([0.5, 0.9, 1.0]),
       st.sampled_from([1 / 32, 1 / 8, 1 / 2, 1.0]), st.sampled_from(list(Moment)))
def test_sum_equals_closed_form(n, a, q, moment):
    p = AgbParams(n, a, q)
    closed = agb_closed(p, moment)
    assert abs(agb_sum(p, moment) - closed) <= 1e-10 * max(1.0, abs(closed))


@pytest.mark.parametrize("n,ratio,tau", [(10, 0.25, 0.1), (40, 1 / 32, 0.05), (3, 0.5, 0.2)])
def test_rtau_at_a_equal_one_is_binomial_variance(n, ratio, tau):
    t = n * ratio * tau
    lhs, rhs = rtau_identity(n, 1.0, ratio, tau, t)
    var = n * ratio * (1 - ratio) * tau * tau
    assert lhs == pytest.approx(var, rel=1e-12)
    assert rhs == pytest.approx(var, rel=1e-12)


def test_rtau_ratio_one_is_zero():
    assert rtau_identity(12, 0.7, 1.0, 0.1, 1.2) == pytest.approx((0.0, 0.0), abs=1e-25)


def test_rtau_constraint_enforced():
    with pytest.raises(DomainError):
        rtau_identity(10, 0.5, 0.25, 0.1, 0.3)


@given(st.integers(2, 40), st.sampled_from([0.5, 0.9]), st.sampled_from([1 / 32, 1 / 8, 1 / 2]),
       st.floats(0.01, 0.2))
def test_rtau_random(n, a, q, tau):
    lhs, rhs = rtau_identity(n, a, q, tau, n * q * tau)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_decay_inequality_edges():
    assert decay_inequality_check(1.0, 2.0, 1.3)[:2] == (1.0, 1.0)
    lhs, rhs, ok = decay_inequality_check(0.3, 1.0, 0.0)
    assert lhs == rhs == 1.0 and ok
    with pytest.raises(DomainError):
        decay_inequality_check(0.5, 1.0, 1.5)
    with pytest.raises(DomainError):
        decay_inequality_check(1.5, 1.0, 0.5)


@given(st.floats(0, 1), st.floats(1e-3, 50), st.floats(0, 1))
def test_decay_inequality_property(a, b, frac):
    assert decay_inequality_check(a, b, frac * b)[2]


def test_verify_all_passes():
    rows = verify_all()
    assert {r.name for r in rows} == {"agb[r2]", "agb[r]", "agb[1]", "rtau", "decay-inequality"}
    assert all(r.passed for r in rows), rows
    sweep = [r for r in rows if r.name == "decay-inequality"][0]
    assert sweep.cases == 15_000 and sweep.worst == 0
