"""Right-hand sides of the Cucker-Smale system and explicit time stepping."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .errors import BlowupError, ConfigError, DomainError
from .kernel import Kernel


@dataclass(frozen=True)
class Ensemble:
    """Positions ``x`` and velocities ``v`` (both N x d) at time ``t``."""

    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if x.shape != v.shape:
            raise DomainError(f"x and v shapes differ: {x.shape} vs {v.shape}")
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DomainError("ensemble needs at least one particle and one dimension")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DomainError("ensemble entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def trusted(cls, x: np.ndarray, v: np.ndarray, t: float) -> Ensemble:
        """Wrap arrays already known to be finite float64 (N, d) without re-checking."""
        e = object.__new__(cls)
        object.__setattr__(e, "x", x)
        object.__setattr__(e, "v", v)
        object.__setattr__(e, "t", float(t))
        return e

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def copy(self) -> Ensemble:
        return Ensemble(self.x.copy(), self.v.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v)))

    def digest(self) -> str:
        """Hash of the exact state bits; used to assert shared initial data."""
        h = hashlib.sha256()
        h.update(np.asarray(self.x.shape, dtype=np.int64).tobytes())
        h.update(self.x.tobytes())
        h.update(self.v.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class Derivative:
    dx: np.ndarray
    dv: np.ndarray


DerivFn = Callable[[Ensemble], Derivative]


def full_rhs(e: Ensemble, k: Kernel, kappa: float) -> Derivative:
    """dv^i = kappa/(N-1) * sum_j psi(|x^j - x^i|) (v^j - v^i)."""
    if e.n < 2:
        raise DomainError("full_rhs needs N >= 2")
    dv = np.zeros_like(e.v)
    backend.impl.full_rhs(e.x, e.v, *k.backend_args(), float(kappa), dv)
    return Derivative(e.v.copy(), dv)


def check_batch(indices, n: int) -> np.ndarray:
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.ndim != 1 or idx.size < 2:
        raise DomainError("a batch needs p >= 2 indices")
    if idx.min() < 0 or idx.max() >= n:
        raise DomainError(f"batch index out of range [0, {n})")
    if np.unique(idx).size != idx.size:
        raise DomainError("batch indices must be distinct")
    return np.sort(idx)


def batch_rhs(e: Ensemble, batch, k: Kernel, kappa: float) -> Derivative:
    """Coupling restricted to ``batch`` with factor kappa/(p-1); zero elsewhere."""
    indices = getattr(batch, "indices", batch)
    idx = check_batch(indices, e.n)
    dv = np.zeros_like(e.v)
    dx = np.zeros_like(e.x)
    dx[idx] = e.v[idx]
    backend.impl.batch_rhs(e.x, e.v, idx, *k.backend_args(), float(kappa), dv)
    return Derivative(dx, dv)


def euler_substep(e: Ensemble, deriv_fn: DerivFn, dt: float, step: int = 0) -> Ensemble:
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    der = deriv_fn(e)
    return _checked(e.x + dt * der.dx, e.v + dt * der.dv, e.t + dt, step)


def _checked(x, v, t, step: int) -> Ensemble:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise BlowupError(step)
    return Ensemble.trusted(x, v, t)


def rk4_substep(e: Ensemble, deriv_fn: DerivFn, dt: float, step: int = 0) -> Ensemble:
    """Classical fourth-order step; for reference trajectories only."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")

    def shifted(der: Derivative, h: float) -> Ensemble:
        return _checked(e.x + h * der.dx, e.v + h * der.dv, e.t + h, step)

    k1 = deriv_fn(e)
    k2 = deriv_fn(shifted(k1, dt / 2))
    k3 = deriv_fn(shifted(k2, dt / 2))
    k4 = deriv_fn(shifted(k3, dt))
    dx = (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx) / 6.0
    dv = (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv) / 6.0
    return _checked(e.x + dt * dx, e.v + dt * dv, e.t + dt, step)


def n_substeps(tau: float, dt: float) -> int:
    """Number of sub-steps of size dt in a window tau; tau must be a multiple of dt."""
    if not (dt > 0 and tau > 0) or dt > tau * (1 + 1e-12):
        raise ConfigError(f"need 0 < dt <= tau (dt={dt}, tau={tau})")
    m = round(tau / dt)
    if abs(m * dt - tau) > 1e-9 * tau:
        raise ConfigError(f"tau={tau} is not an integer multiple of dt={dt}")
    return max(int(m), 1)


def integrate_interval(e: Ensemble, deriv_fn: DerivFn, tau: float, dt: float,
                       scheme: str = "euler") -> Ensemble:
    """Advance ``e`` by ``tau`` with sub-steps of ``dt``; final t is exactly e.t + tau."""
    m = n_substeps(tau, dt)
    step = {"euler": euler_substep, "rk4": rk4_substep}[scheme]
    h = tau / m
    cur = e
    for s in range(m):
        cur = step(cur, deriv_fn, h, s)
    return Ensemble(cur.x, cur.v, e.t + tau)


def momentum(e: Ensemble) -> np.ndarray:
    return e.v.sum(axis=0)


def energy(e: Ensemble) -> float:
    return float(np.sum(e.v * e.v))


def initial_ensemble(rng: np.random.Generator, n: int, d: int = 1, box: float = 1.0,
                     vrange: float = 1.0) -> Ensemble:
    """Positions uniform on [0, box]^d, velocities uniform on [-vrange, vrange]^d with zero mean."""
    x = rng.uniform(0.0, box, size=(n, d))
    v = rng.uniform(-vrange, vrange, size=(n, d))
    v -= v.mean(axis=0)
    return Ensemble(x, v, 0.0)


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def isclose_time(a: float, b: float, tol: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
