import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rbmflock.dynamics import Ensemble
from rbmflock.errors import DomainError
from rbmflock.metrics import (MetricsSeries, diameters, energy, fit_decay_rate, flocking_rate,
                              l2_error, momentum, rate_constants, scale_rbm1, scale_rbmr, ssd,
                              ssd_double_loop)


def test_ssd_examples():
    assert ssd(np.ones((5, 2))) == 0.0
    assert ssd([1.0, -1.0]) == 2.0
    assert ssd_double_loop([1.0, -1.0]) == 2.0


def test_ssd_fast_matches_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n, d = rng.integers(1, 12), rng.integers(1, 4)
        u = rng.normal(size=(n, d)) * rng.uniform(0.1, 10)
        ref = ssd_double_loop(u)
        assert abs(ssd(u) - ref) <= 1e-12 * max(ref, 1e-300)


def test_ssd_random_8x2():
    u = np.random.default_rng(5).uniform(-3, 3, (8, 2))
    assert ssd(u) == pytest.approx(ssd_double_loop(u), rel=1e-12)


def test_diameters():
    assert diameters(Ensemble([0.5], [2.0])) == (0.0, 0.0)
    assert diameters(Ensemble([0.0, 3.0, 1.0], [0.0, 0.0, 0.0]))[0] == 3.0


def test_diameters_match_brute_force():
    rng = np.random.default_rng(1)
    for d in (1, 2, 3):
        e = Ensemble(rng.normal(size=(64, d)), rng.normal(size=(64, d)))
        for arr, got in zip((e.x, e.v), diameters(e)):
            brute = max(np.linalg.norm(a - b) for a in arr for b in arr)
            assert got == pytest.approx(brute, rel=1e-14)


def test_diameters_blocked_scan_large():
    rng = np.random.default_rng(2)
    v = rng.normal(size=(600, 2))
    e = Ensemble(np.zeros_like(v), v)
    brute = math.sqrt(((v[:, None] - v[None]) ** 2).sum(-1).max())
    assert diameters(e)[1] == pytest.approx(brute, rel=1e-14)


@settings(max_examples=100)
@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 3)),
              elements=st.floats(-100, 100)))
def test_ssd_bounded_by_squared_diameter(u):
    dv = diameters(Ensemble(np.zeros_like(u), u))[1]
    assert ssd(u) <= dv * dv * (1 + 1e-12) + 1e-12


def test_momentum_and_energy():
    e = Ensemble([0.0, 1.0], [1.0, -1.0])
    assert momentum(e).tolist() == [0.0]
    assert energy(e) == 2.0


def test_l2_error():
    a = Ensemble([0.0, 1.0], [0.3, -0.4], t=1.0)
    b = Ensemble([0.0, 1.0], [0.0, 0.0], t=1.0)
    assert l2_error(a, b) == pytest.approx(0.35355339, abs=1e-8)
    assert l2_error(b, b) == 0.0
    with pytest.raises(DomainError):
        l2_error(a, Ensemble([0.0, 1.0], [0.0, 0.0], t=1.1))
    with pytest.raises(DomainError):
        l2_error(a, Ensemble([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], t=1.0))


def test_scale_factors():
    assert scale_rbmr(64, 2) == pytest.approx(1.39746, abs=1e-5)
    assert scale_rbm1(64, 2) == pytest.approx(0.99203, abs=1e-5)
    assert scale_rbm1(16, 16) == 0.0
    with pytest.raises(DomainError):
        scale_rbmr(64, 1)
    with pytest.raises(DomainError):
        scale_rbm1(2, 2)


def test_rate_constants():
    c = rate_constants(1.0, 2, 0.1)
    assert c.c1 == pytest.approx(2 / 1.4, rel=1e-14)
    assert c.c2 == pytest.approx(0.9, rel=1e-14)
    assert c.c3 == pytest.approx(1.4285714, abs=1e-7)
    z = rate_constants(0.7, 4, 0.0)
    assert (z.c1, z.c2, z.c3) == pytest.approx((1.4, 0.7, 1.4))
    assert flocking_rate(1.0, 64, 2, 0.1) == pytest.approx(64 / 63 * 2 / 1.4)


def test_rate_constants_warn_when_vacuous():
    with pytest.warns(UserWarning):
        c = rate_constants(2.0, 2, 0.5)
    assert c.vacuous and c.c2 <= 0


@given(st.floats(0.01, 10), st.integers(2, 100), st.floats(0, 0.99))
def test_c3_is_min(psi0, p, frac):
    tau = frac / psi0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = rate_constants(psi0, p, tau)
    assert c.c3 == min(c.c1, 2 * c.c2)
    assert c.c1 > 0


def test_fit_decay_rate():
    t = np.array([0.0, 1.0, 2.0])
    assert fit_decay_rate(t, np.exp(-2 * t)) == pytest.approx(2.0, abs=1e-12)
    assert fit_decay_rate(t, np.full(3, 4.2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        fit_decay_rate(t, np.array([1.0, 0.0, 1.0]))


def test_fit_decay_rate_noisy():
    rng = np.random.default_rng(9)
    t = np.linspace(0, 3, 1000)
    y = np.exp(-1.7 * t) * np.exp(rng.normal(0, 0.05, t.size))
    assert fit_decay_rate(t, y) == pytest.approx(1.7, rel=0.05)


def test_fit_drops_points_under_floor():
    t = np.arange(6.0)
    y = np.array([1.0, np.exp(-1), np.exp(-2), 1e-20, 1e-30, 1e-40])
    assert fit_decay_rate(t, y) == pytest.approx(1.0, abs=1e-12)


def test_series_columns_and_rows():
    m = MetricsSeries(d=2)
    e = Ensemble(np.zeros((2, 2)), [[1.0, 0.0], [-1.0, 0.0]])
    m.record(0.0, e)
    m.record(0.1, e, v_ref=np.zeros((2, 2)))
    assert m.header() == ["t", "ssd_v", "ssd_x", "d_x", "d_v", "momentum_0", "momentum_1",
                          "energy", "l2_error"]
    rows = list(m.rows())
    assert rows[0][-1] is None and rows[1][-1] == 1.0
    assert len(rows[0]) == len(m.header())
    assert m.column("momentum").shape == (2, 2)
    assert m.max_momentum_drift() == 0.0
