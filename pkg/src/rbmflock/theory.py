"""Numerical checks of the binomial identities and the decay inequality.

Sums are accumulated in log space (max-shifted exp-sum) so that binomial
coefficients times A^r stay representable for n up to 60.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError

MAX_N = 60


class Moment(enum.Enum):
    R2 = "r2"
    R = "r"
    ONE = "1"


@dataclass(frozen=True)
class AgbParams:
    n: int
    a: float
    ratio: float

    @property
    def g(self) -> float:
        return self.ratio * self.a + 1.0 - self.ratio


def _log_binom_weights(n: int, a: float, ratio: float):
    """log|C(n,r) A^r q^r (1-q)^(n-r)| and its sign, r = 0..n."""
    r = np.arange(n + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logc = gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)
        loga = r * np.log(abs(a)) if a != 0 else np.where(r == 0, 0.0, -np.inf)
        logq = r * np.log(ratio)
        log1q = (n - r) * np.log1p(-ratio) if ratio < 1 else np.where(r == n, 0.0, -np.inf)
    sign = np.where((a < 0) & (r % 2 == 1), -1.0, 1.0)
    return logc + loga + logq + log1q, sign


def _signed_logsum(logw, sign) -> float:
    finite = np.isfinite(logw)
    if not finite.any():
        return 0.0
    log_abs, sgn = logsumexp(logw[finite], b=sign[finite], return_sign=True)
    return float(sgn * np.exp(log_abs))


def _check(params: AgbParams) -> None:
    if not 0 <= params.n <= MAX_N:
        raise DomainError(f"n must lie in [0, {MAX_N}], got {params.n}")
    if not 0 < params.ratio <= 1:
        raise DomainError(f"ratio must lie in (0, 1], got {params.ratio}")


def agb_sum(params: AgbParams, moment: Moment) -> float:
    """Brute force sum_r C(n,r) A^r m(r) q^r (1-q)^(n-r) with m(r) in {r^2, r, 1}."""
    _check(params)
    logw, sign = _log_binom_weights(params.n, params.a, params.ratio)
    r = np.arange(params.n + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        if moment is Moment.R2:
            logw = logw + 2.0 * np.log(r)
        elif moment is Moment.R:
            logw = logw + np.log(r)
    return _signed_logsum(logw, sign)


def agb_closed(params: AgbParams, moment: Moment) -> float:
    """Closed forms: G^n; A q n G^(n-1); A q n (G^(n-2)(n-1) A q + G^(n-1))."""
    _check(params)
    n, a, q, g = params.n, params.a, params.ratio, params.g
    if moment is Moment.ONE:
        return g ** n
    if n < 1:
        raise DomainError("the r-moment closed form needs n >= 1")
    if moment is Moment.R:
        return a * q * n * g ** (n - 1)
    if n < 2:
        raise DomainError("the r^2-moment closed form needs n >= 2")
    return a * q * n * (g ** (n - 2) * (n - 1) * a * q + g ** (n - 1))


def rtau_identity(n: int, a: float, ratio: float, tau: float, t: float) -> tuple[float, float]:
    """Both sides of the time-change identity, valid when t = n * ratio * tau.

    lhs = sum_r C(n,r) A^r |r tau - t|^2 q^r (1-q)^(n-r)
    rhs = G^(n-2) (A-1)^2 t^2 (1-q)^2 + A G^(n-2) t tau (1-q)
    """
    if n < 2:
        raise DomainError("the identity needs n >= 2")
    if abs(t - n * ratio * tau) > 1e-12 * max(1.0, abs(t)):
        raise DomainError(f"constraint t = n*ratio*tau violated: t={t}, n*ratio*tau={n * ratio * tau}")
    params = AgbParams(n, a, ratio)
    _check(params)
    logw, sign = _log_binom_weights(n, a, ratio)
    r = np.arange(n + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logw = logw + 2.0 * np.log(np.abs(r * tau - t))
    lhs = _signed_logsum(logw, sign)
    g = params.g
    rhs = g ** (n - 2) * (a - 1) ** 2 * t * t * (1 - ratio) ** 2 + a * g ** (n - 2) * t * tau * (1 - ratio)
    return lhs, rhs


_ULP_SLACK = 4 * np.finfo(float).eps


def decay_inequality_check(a: float, b: float, x: float) -> tuple[float, float, bool]:
    """a + (1-a) e^{-x} <= exp(-(1-a) x / (1+b)) for 0 <= a <= 1, b > 0, x in [0, b]."""
    if not 0 <= a <= 1 or not b > 0:
        raise DomainError("need 0 <= a <= 1 and b > 0")
    if not 0 <= x <= b:
        raise DomainError(f"x={x} outside [0, b={b}]")
    lhs = a + (1 - a) * math.exp(-x)
    rhs = math.exp(-(1 - a) / (1 + b) * x)
    return lhs, rhs, lhs <= rhs * (1 + _ULP_SLACK)


@dataclass(frozen=True)
class CheckRow:
    name: str
    cases: int
    worst: float  # largest relative discrepancy, or number of violations
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def verify_all(rng_seed: int = 0, tol: float = 1e-9) -> list[CheckRow]:
    """Run every identity grid; returns one row per check."""
    rows = []
    for moment in Moment:
        worst, cases = 0.0, 0
        for n, a, q in itertools.product(range(2, 41), (0.5, 0.9, 1.0), (1 / 32, 1 / 8, 1 / 2, 1.0)):
            p = AgbParams(n, a, q)
            worst = max(worst, _rel(agb_sum(p, moment), agb_closed(p, moment)))
            cases += 1
        rows.append(CheckRow(f"agb[{moment.value}]", cases, worst, tol))

    rng = np.random.default_rng(rng_seed)
    worst, cases = 0.0, 0
    for n, a, q in itertools.product(range(2, 41), (0.5, 0.9, 1.0), (1 / 32, 1 / 8, 1 / 2, 1.0)):
        tau = float(rng.uniform(0.01, 0.2))
        lhs, rhs = rtau_identity(n, a, q, tau, n * q * tau)
        worst = max(worst, _rel(lhs, rhs))
        cases += 1
    rows.append(CheckRow("rtau", cases, worst, tol))

    violations, cases = 0, 0
    for a, b in itertools.product(np.linspace(0, 1, 5), (0.1, 1.0, 10.0)):
        for x in np.linspace(0.0, b, 1000):
            cases += 1
            if not decay_inequality_check(float(a), b, float(x))[2]:
                violations += 1
    rows.append(CheckRow("decay-inequality", cases, float(violations), 0.0))
    return rows
