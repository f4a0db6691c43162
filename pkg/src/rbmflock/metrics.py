"""Flocking diagnostics, error measures and the rate/scaling constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def ssd(values) -> float:
    """(1/N^2) sum_{i,j} |u^i - u^j|^2, evaluated in O(N) via mean centring."""
    u = np.asarray(values, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    c = u - u.sum(axis=0) / u.shape[0]
    return 2.0 * float(np.sum(c * c)) / u.shape[0]


def ssd_double_loop(values) -> float:
    u = np.asarray(values, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    n = u.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            diff = u[i] - u[j]
            total += float(diff @ diff)
    return total / (n * n)


def _diameter(u: np.ndarray) -> float:
    if u.shape[0] < 2:
        return 0.0
    if u.shape[1] == 1:
        return float(u.max() - u.min())
    best = 0.0
    # blockwise pairwise scan keeps memory at O(N * block)
    for start in range(0, u.shape[0], 256):
        blk = u[start:start + 256]
        d2 = ((blk[:, None, :] - u[None, :, :]) ** 2).sum(axis=-1)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def diameters(e) -> tuple[float, float]:
    """(D_X, D_V): largest pairwise Euclidean distance in positions and velocities."""
    return _diameter(e.x), _diameter(e.v)


def momentum(e) -> np.ndarray:
    return e.v.sum(axis=0)


def energy(e) -> float:
    return float(np.sum(e.v * e.v))


def l2_error(approx, reference, time_tol: float = 1e-9) -> float:
    """sqrt((1/N) sum_i |v_approx^i - v_ref^i|^2)."""
    if approx.v.shape != reference.v.shape:
        raise DomainError(f"shape mismatch {approx.v.shape} vs {reference.v.shape}")
    if abs(approx.t - reference.t) > time_tol * max(1.0, abs(reference.t)):
        raise DomainError(f"time stamps differ: {approx.t} vs {reference.t}")
    return l2_velocity_error(approx.v, reference.v)


def l2_velocity_error(v, v_ref) -> float:
    diff = np.asarray(v) - np.asarray(v_ref)
    return math.sqrt(float(np.sum(diff * diff)) / diff.shape[0])


def _check_np(n: int, p: int) -> None:
    if n < 3 or p < 2 or p > n:
        raise DomainError(f"need n >= 3 and 2 <= p <= n, got n={n}, p={p}")


def scale_rbmr(n: int, p: int) -> float:
    """sqrt(1 - p/N + 1/(p-1) - 1/(N-1)): the p-dependence of the RBM-r error."""
    _check_np(n, p)
    return math.sqrt(1.0 - p / n + 1.0 / (p - 1) - 1.0 / (n - 1))


def scale_rbm1(n: int, p: int) -> float:
    """sqrt(1/(p-1) - 1/(N-1)); exactly 0 when p == N."""
    _check_np(n, p)
    if p == n:
        return 0.0
    return math.sqrt(1.0 / (p - 1) - 1.0 / (n - 1))


@dataclass(frozen=True)
class RateConstants:
    c1: float
    c2: float
    c3: float
    vacuous: bool = False  # psi0 * tau >= 1, so c2 <= 0


def rate_constants(psi0: float, p: int, tau: float) -> RateConstants:
    if not psi0 > 0 or p < 2 or tau < 0:
        raise DomainError("need psi0 > 0, p >= 2, tau >= 0")
    c1 = 2.0 * psi0 / (1.0 + (2.0 * p / (p - 1)) * psi0 * tau)
    c2 = psi0 * (1.0 - psi0 * tau)
    vacuous = psi0 * tau >= 1.0
    if vacuous:
        warnings.warn(f"psi0*tau = {psi0 * tau} >= 1: C2 <= 0 and C3 is vacuous", stacklevel=2)
    return RateConstants(c1, c2, min(c1, 2.0 * c2), vacuous)


def flocking_rate(psi0: float, n: int, p: int, tau: float) -> float:
    """Guaranteed exponential decay rate of the mean SSD of V: N/(N-1) * C1."""
    return n / (n - 1) * rate_constants(psi0, p, tau).c1


def fit_decay_rate(t, y, floor: float = 1e-12) -> float:
    """Least-squares rate lam with y ~ y0 exp(-lam t) on a log scale.

    Points below ``floor * y[0]`` are dropped before fitting.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.shape != y.shape or t.size < 3:
        raise DomainError("fit_decay_rate needs >= 3 matching (t, y) points")
    if np.any(y <= 0):
        raise DomainError("fit_decay_rate needs y > 0")
    keep = y >= floor * y[0]
    if keep.sum() < 3:
        raise DomainError("fewer than 3 points above the noise floor")
    slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
    return float(-slope)


METRIC_NAMES = ("ssd_v", "ssd_x", "d_x", "d_v", "energy", "l2_error", "momentum_drift")


@dataclass
class MetricsSeries:
    """Per-time diagnostics; ``l2_error`` is NaN where no reference was attached."""

    d: int
    t: list = field(default_factory=list)
    ssd_v: list = field(default_factory=list)
    ssd_x: list = field(default_factory=list)
    d_x: list = field(default_factory=list)
    d_v: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    l2_error: list = field(default_factory=list)

    def record(self, t: float, e, v_ref=None) -> None:
        self.t.append(float(t))
        self.ssd_v.append(ssd(e.v))
        self.ssd_x.append(ssd(e.x))
        dx, dv = diameters(e)
        self.d_x.append(dx)
        self.d_v.append(dv)
        self.momentum.append(momentum(e).copy())
        self.energy.append(energy(e))
        self.l2_error.append(math.nan if v_ref is None else l2_velocity_error(e.v, v_ref))

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        if name == "momentum":
            return np.asarray(self.momentum).reshape(len(self), self.d)
        if name == "momentum_drift":
            m = self.column("momentum")
            return np.abs(m - m[0]).max(axis=1) if len(self) else np.zeros(0)
        return np.asarray(getattr(self, name), dtype=np.float64)

    def header(self) -> list[str]:
        return (["t", "ssd_v", "ssd_x", "d_x", "d_v"]
                + [f"momentum_{c}" for c in range(self.d)] + ["energy", "l2_error"])

    def rows(self):
        for k in range(len(self)):
            err = self.l2_error[k]
            yield ([self.t[k], self.ssd_v[k], self.ssd_x[k], self.d_x[k], self.d_v[k]]
                   + list(np.asarray(self.momentum[k]).tolist())
                   + [self.energy[k], None if math.isnan(err) else err])

    def max_momentum_drift(self) -> float:
        drift = self.column("momentum_drift")
        return float(drift.max()) if drift.size else 0.0
