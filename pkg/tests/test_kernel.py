import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbmflock.errors import DomainError
from rbmflock.kernel import Kernel, eval_kernel, validate


def test_constant_eval():
    assert eval_kernel(Kernel.constant(1.0), 7.3) == 1.0


def test_inverse_power_at_zero():
    assert eval_kernel(Kernel.inverse_power(0.25), 0.0) == 1.0


def test_inverse_power_at_sqrt3():
    # (1 + 3)^(-1/4) = 1/sqrt(2)
    assert eval_kernel(Kernel.inverse_power(0.25), math.sqrt(3)) == pytest.approx(0.70710678, abs=1e-8)


@pytest.mark.parametrize("bad", [-1e-9, math.nan, math.inf])
def test_eval_domain(bad):
    with pytest.raises(DomainError):
        eval_kernel(Kernel.inverse_power(0.25), bad)


def test_validate_constant():
    rep = validate(Kernel.constant(1.0), 10, 100)
    assert rep.psi_min == rep.psi_max == 1.0
    assert rep.monotone and rep.bounds_ok


def test_validate_effective_lower_bound():
    rep = validate(Kernel.inverse_power(0.25), 10, 1000)
    assert rep.effective_lower_bound == pytest.approx(101 ** -0.25, rel=1e-12)
    assert rep.effective_lower_bound == pytest.approx(0.315442, abs=1e-6)
    assert rep.monotone


def test_validate_flags_non_monotone_table():
    k = Kernel.tabulated([0.0, 1.0, 2.0], [1.0, 0.5, 0.8])
    rep = validate(k, 3.0, 50)
    assert rep.monotone is False


def test_validate_arguments():
    with pytest.raises(DomainError):
        validate(Kernel.constant(1.0), 0.0, 10)
    with pytest.raises(DomainError):
        validate(Kernel.constant(1.0), 1.0, 1)


def test_tabulated_interpolates_and_clamps():
    k = Kernel.tabulated([0.0, 1.0, 2.0], [1.0, 0.6, 0.2])
    assert eval_kernel(k, 0.5) == pytest.approx(0.8)
    assert eval_kernel(k, 50.0) == 0.2
    assert k.psi0 == 0.2 and k.psi_m == 1.0


def test_rejects_bad_parameters():
    with pytest.raises(DomainError):
        Kernel.inverse_power(-0.5)  # would be unbounded
    with pytest.raises(DomainError):
        Kernel.constant(-1.0)
    with pytest.raises(DomainError):
        Kernel.tabulated([0.0, 0.0], [1.0, 1.0])


def test_parse_roundtrip():
    assert Kernel.parse("constant:2.5") == Kernel.constant(2.5)
    assert Kernel.parse("invpow:0.25") == Kernel.inverse_power(0.25)
    with pytest.raises(DomainError):
        Kernel.parse("gauss:1")


kernels = st.one_of(
    st.floats(0.0, 5.0).map(Kernel.constant),
    st.floats(0.0, 3.0).map(Kernel.inverse_power),
)


@given(kernels, st.floats(0, 50), st.floats(0, 50))
def test_monotone_nonincreasing(k, r1, r2):
    lo, hi = sorted((r1, r2))
    assert eval_kernel(k, lo) >= eval_kernel(k, hi)


@pytest.mark.parametrize("beta", [0.1, 0.25, 0.5, 1.0, 2.0])
def test_lipschitz_bound_on_random_pairs(beta):
    k = Kernel.inverse_power(beta)
    rep = validate(k, 10.0, 2001)
    rng = np.random.default_rng(int(beta * 100))
    r = rng.uniform(0, 10, size=(10_000, 2))
    lhs = np.abs(eval_kernel(k, r[:, 0]) - eval_kernel(k, r[:, 1]))
    assert np.all(lhs <= rep.lip * np.abs(r[:, 0] - r[:, 1]) + 1e-15)


@settings(max_examples=50)
@given(st.floats(0.0, 3.0))
def test_bounds_on_grid(beta):
    k = Kernel.inverse_power(beta)
    y = eval_kernel(k, np.linspace(0, 20, 500))
    assert np.all((y >= k.psi0) & (y <= k.psi_m))
