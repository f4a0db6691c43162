import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rbmflock.dynamics import (Ensemble, batch_rhs, euler_substep, full_rhs, initial_ensemble,
                               integrate_interval, n_substeps, rk4_substep)
from rbmflock.errors import BlowupError, ConfigError, DomainError
from rbmflock.kernel import Kernel

from conftest import random_ensemble

ONE = Kernel.constant(1.0)
INV = Kernel.inverse_power(0.25)


def test_ensemble_coerces_and_checks_shapes():
    e = Ensemble([0.0, 1.0], [1.0, -1.0])
    assert e.x.shape == (2, 1) and e.n == 2 and e.d == 1
    with pytest.raises(DomainError):
        Ensemble(np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(DomainError):
        Ensemble([0.0, math.nan], [0.0, 0.0])


def test_full_rhs_two_particles(each_backend):
    e = Ensemble([0.3, 5.0], [1.0, -1.0])
    assert full_rhs(e, ONE, 1.0).dv.ravel().tolist() == [-2.0, 2.0]


def test_full_rhs_three_particles(each_backend):
    e = Ensemble([0.0, 1.0, 2.0], [1.0, 0.0, -1.0])
    assert full_rhs(e, ONE, 1.0).dv.ravel().tolist() == [-1.5, 0.0, 1.5]


def test_full_rhs_equal_velocities_is_zero(each_backend, rng):
    e = Ensemble(rng.normal(size=(9, 2)), np.tile([0.4, -1.2], (9, 1)))
    assert np.all(full_rhs(e, INV, 1.0).dv == 0.0)


def test_full_rhs_needs_two():
    with pytest.raises(DomainError):
        full_rhs(Ensemble([0.0], [1.0]), ONE, 1.0)


def test_full_rhs_matches_direct_sum(each_backend, rng):
    e = random_ensemble(rng, n=7, d=3)
    # straightforward O(N^2) evaluation of the defining sum
    r = np.linalg.norm(e.x[None, :, :] - e.x[:, None, :], axis=-1)
    w = (1 + r * r) ** -0.25
    ref = (w[:, :, None] * (e.v[None, :, :] - e.v[:, None, :])).sum(axis=1) * 0.7 / 6
    assert np.allclose(full_rhs(e, INV, 0.7).dv, ref, rtol=1e-13, atol=1e-15)


def test_batch_rhs_example(each_backend):
    e = Ensemble([0.0, 1.0, 2.0, 3.0], [1.0, -1.0, 5.0, 5.0])
    der = batch_rhs(e, [0, 1], ONE, 1.0)
    assert der.dv.ravel().tolist() == [-2.0, 2.0, 0.0, 0.0]
    assert der.dx.ravel().tolist() == [1.0, -1.0, 0.0, 0.0]


def test_batch_rhs_full_batch_equals_full_rhs(each_backend, rng):
    e = random_ensemble(rng, n=6, d=2)
    assert np.array_equal(batch_rhs(e, range(6), INV, 1.0).dv, full_rhs(e, INV, 1.0).dv)


def test_batch_rhs_equal_velocities(each_backend, rng):
    e = random_ensemble(rng, n=6)
    v = e.v.copy()
    v[[1, 4]] = 0.25
    der = batch_rhs(Ensemble(e.x, v), [1, 4], INV, 1.0)
    assert np.all(der.dv == 0.0)


@pytest.mark.parametrize("bad", [[0], [0, 0], [0, 9], [-1, 2]])
def test_batch_rhs_rejects_bad_batches(bad, rng):
    with pytest.raises(DomainError):
        batch_rhs(random_ensemble(rng, n=4), bad, ONE, 1.0)


def test_euler_zero_derivative_translates(rng):
    e = random_ensemble(rng, n=5)
    out = euler_substep(Ensemble(e.x, np.full_like(e.v, 0.3)), lambda s: full_rhs(s, ONE, 1.0), 0.1)
    assert np.array_equal(out.v, np.full_like(e.v, 0.3))
    assert np.allclose(out.x, e.x + 0.03)


def test_euler_hand_step(each_backend):
    e = Ensemble([0.0, 1.0], [1.0, -1.0])
    out = euler_substep(e, lambda s: full_rhs(s, ONE, 1.0), 0.01)
    assert out.v.ravel() == pytest.approx([0.98, -0.98], abs=1e-15)
    assert out.t == pytest.approx(0.01)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_euler_blowup_reports_step():
    e = Ensemble([0.0, 1.0], [1e308, -1e308])
    with pytest.raises(BlowupError) as info:
        euler_substep(e, lambda s: full_rhs(s, ONE, 1.0), 10.0, step=17)
    assert info.value.step == 17


def test_euler_local_error_is_second_order(rng):
    e = random_ensemble(rng, n=6)
    f = lambda s: full_rhs(s, INV, 1.0)  # noqa: E731

    def gap(h):
        one = euler_substep(e, f, h)
        two = euler_substep(euler_substep(e, f, h / 2), f, h / 2)
        return np.abs(one.v - two.v).max()

    # one step vs two half steps differ at O(h^2): halving h quarters the gap
    assert gap(0.02) / gap(0.01) == pytest.approx(4.0, rel=0.05)


def test_rk4_more_accurate_than_euler():
    e = Ensemble([0.0, 1.0], [1.0, -1.0])
    f = lambda s: full_rhs(s, ONE, 1.0)  # noqa: E731
    exact = math.exp(-2 * 0.5)
    eu = integrate_interval(e, f, 0.5, 0.05)
    rk = integrate_interval(e, f, 0.5, 0.05, scheme="rk4")
    assert abs(rk.v[0, 0] - exact) < 1e-6 < abs(eu.v[0, 0] - exact)


def test_substep_counts():
    assert n_substeps(0.1, 0.0125) == 8
    assert n_substeps(0.1, 0.1) == 1
    with pytest.raises(ConfigError):
        n_substeps(0.1, 0.03)
    with pytest.raises(ConfigError):
        n_substeps(0.1, 0.2)


def test_interval_with_tau_equal_dt_is_one_step(rng):
    e = random_ensemble(rng)
    f = lambda s: full_rhs(s, INV, 1.0)  # noqa: E731
    a = integrate_interval(e, f, 0.1, 0.1)
    b = euler_substep(e, f, 0.1)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.x, b.x)


def test_two_particle_decay_matches_exponential():
    e = Ensemble([0.0, 1.0], [0.7, -0.3])
    out = integrate_interval(e, lambda s: full_rhs(s, ONE, 1.0), 1.0, 1e-4)
    rel = abs(out.v[0, 0] - out.v[1, 0]) / (1.0 * math.exp(-2.0))
    assert abs(rel - 1.0) < 1e-3


def test_initial_ensemble_zero_mean():
    e = initial_ensemble(np.random.default_rng(3), 64, 2)
    assert np.abs(e.v.sum(axis=0)).max() < 1e-14 * 64
    assert np.all((e.x >= 0) & (e.x <= 1))


def test_digest_tracks_state(rng):
    e = random_ensemble(rng)
    assert e.digest() == e.copy().digest()
    assert e.digest() != Ensemble(e.x, e.v + 1e-16 + e.v * 1e-15).digest()


# -- properties -----------------------------------------------------------------------

coords = st.floats(-5, 5, allow_nan=False)


def ensembles(max_n=10, max_d=3):
    return st.tuples(st.integers(2, max_n), st.integers(1, max_d)).flatmap(
        lambda nd: st.tuples(arrays(np.float64, nd, elements=coords),
                             arrays(np.float64, nd, elements=coords))
    ).map(lambda xv: Ensemble(*xv))


@settings(max_examples=60, deadline=None)
@given(ensembles(), st.lists(coords, min_size=3, max_size=3))
def test_translation_invariance(e, shift):
    c = np.asarray(shift[: e.d])
    a = full_rhs(e, INV, 1.0).dv
    b = full_rhs(Ensemble(e.x, e.v + c), INV, 1.0).dv
    assert np.allclose(a, b, rtol=0, atol=1e-12 * max(1.0, np.abs(e.v).max() + np.abs(c).max()))


@settings(max_examples=60, deadline=None)
@given(ensembles(), st.data())
def test_rhs_sums_to_zero(e, data):
    dv = full_rhs(e, INV, 1.0).dv
    assert np.abs(dv.sum(axis=0)).max() <= 1e-12 * e.n * max(np.abs(dv).max(), 1e-300)
    idx = data.draw(st.lists(st.integers(0, e.n - 1), min_size=2, max_size=e.n, unique=True))
    db = batch_rhs(e, idx, INV, 1.0).dv
    assert np.abs(db.sum(axis=0)).max() <= 1e-12 * e.n * max(np.abs(db).max(), 1e-300)


@settings(max_examples=60, deadline=None)
@given(ensembles(), st.floats(1e-4, 0.5), st.booleans())
def test_euler_keeps_momentum(e, dt, use_batch):
    f = (lambda s: batch_rhs(s, [0, 1], INV, 1.0)) if use_batch else (lambda s: full_rhs(s, INV, 1.0))
    out = euler_substep(e, f, dt)
    scale = max(np.abs(e.v).max(), np.abs(out.v).max(), 1e-300)
    assert np.abs(out.v.sum(axis=0) - e.v.sum(axis=0)).max() <= 1e-12 * e.n * scale


@settings(max_examples=40, deadline=None)
@given(ensembles(max_n=12), st.floats(0.1, 1.0))
def test_energy_nonincreasing_under_step_bound(e, frac):
    n = e.n
    dt = 0.5 * frac * (n - 1) / n  # dt * psi_M * kappa * N/(N-1) <= 0.5
    f = lambda s: full_rhs(s, INV, 1.0)  # noqa: E731
    cur = e
    for _ in range(5):
        nxt = euler_substep(cur, f, dt)
        en0, en1 = float(np.sum(cur.v ** 2)), float(np.sum(nxt.v ** 2))
        assert en1 <= en0 * (1 + 1e-12) + 1e-300
        cur = nxt
