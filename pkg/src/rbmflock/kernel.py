"""Communication weights for the Cucker-Smale alignment force."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


class Variant(enum.IntEnum):
    # values are the kind codes understood by the pairwise backends
    CONSTANT = 0
    INVERSE_POWER = 1
    TABULATED = 2


@dataclass(frozen=True)
class Kernel:
    """A bounded, nonincreasing weight psi(r) on r >= 0.

    ``psi0`` and ``psi_m`` are certified lower/upper bounds, ``lip`` an upper
    bound on the Lipschitz constant. Build instances through the classmethods.
    """

    variant: Variant
    params: tuple[float, ...]
    psi0: float
    psi_m: float
    lip: float
    grid: tuple[float, ...] = field(default=(), repr=False)
    values: tuple[float, ...] = field(default=(), repr=False)

    @classmethod
    def constant(cls, value: float) -> Kernel:
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise DomainError(f"constant kernel needs a finite nonnegative value, got {value}")
        return cls(Variant.CONSTANT, (value,), psi0=value, psi_m=value, lip=0.0)

    @classmethod
    def inverse_power(cls, beta: float) -> Kernel:
        """psi(r) = (1 + r^2)^(-beta); bounded by 1 and decaying to 0."""
        beta = float(beta)
        if not math.isfinite(beta) or beta < 0:
            raise DomainError(f"inverse-power exponent must be finite and >= 0, got {beta}")
        # sup |psi'| sits at r* = 1/sqrt(2 beta + 1)
        if beta == 0:
            lip = 0.0
        else:
            rs = 1.0 / math.sqrt(2.0 * beta + 1.0)
            lip = 2.0 * beta * rs * (1.0 + rs * rs) ** (-beta - 1.0)
        psi0 = 1.0 if beta == 0 else 0.0
        return cls(Variant.INVERSE_POWER, (beta,), psi0=psi0, psi_m=1.0, lip=lip)

    @classmethod
    def tabulated(cls, grid, values) -> Kernel:
        """Piecewise-linear table, clamped to the end values outside the grid."""
        g = np.asarray(grid, dtype=np.float64)
        y = np.asarray(values, dtype=np.float64)
        if g.ndim != 1 or g.shape != y.shape or g.size < 2:
            raise DomainError("tabulated kernel needs matching 1-d grid/values with >= 2 points")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(y))):
            raise DomainError("tabulated kernel has non-finite entries")
        if g[0] < 0 or np.any(np.diff(g) <= 0):
            raise DomainError("tabulated grid must be nonnegative and strictly ascending")
        if np.any(y < 0):
            raise DomainError("tabulated kernel values must be nonnegative")
        lip = float(np.max(np.abs(np.diff(y) / np.diff(g))))
        return cls(Variant.TABULATED, (), psi0=float(y.min()), psi_m=float(y.max()), lip=lip,
                   grid=tuple(g.tolist()), values=tuple(y.tolist()))

    @classmethod
    def parse(cls, text: str) -> Kernel:
        """Parse ``constant:<v>`` or ``invpow:<beta>`` (the CLI/config spelling)."""
        name, _, arg = text.strip().partition(":")
        name = name.strip().lower()
        try:
            if name in ("constant", "const"):
                return cls.constant(float(arg))
            if name in ("invpow", "inverse_power"):
                return cls.inverse_power(float(arg))
        except ValueError as exc:
            raise DomainError(f"bad kernel parameter in {text!r}") from exc
        raise DomainError(f"unknown kernel spec {text!r}; use constant:<v> or invpow:<beta>")

    def describe(self) -> str:
        if self.variant is Variant.CONSTANT:
            return f"constant:{self.params[0]!r}"
        if self.variant is Variant.INVERSE_POWER:
            return f"invpow:{self.params[0]!r}"
        return f"tabulated:{len(self.grid)}pts"

    def backend_args(self) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        """(kind, params, grid, values) as contiguous arrays for the pair kernels."""
        par = np.array(self.params if self.params else (0.0,), dtype=np.float64)
        grid = np.array(self.grid if self.grid else (0.0,), dtype=np.float64)
        vals = np.array(self.values if self.values else (0.0,), dtype=np.float64)
        return int(self.variant), par, grid, vals

    def __call__(self, r):
        return eval_kernel(self, r)


def eval_kernel(kernel: Kernel, r):
    """psi(r) for a scalar or array of distances r >= 0."""
    arr = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("kernel argument must be finite and nonnegative")
    if kernel.variant is Variant.CONSTANT:
        out = np.full_like(arr, kernel.params[0])
    elif kernel.variant is Variant.INVERSE_POWER:
        out = (1.0 + arr * arr) ** (-kernel.params[0])
    else:
        out = np.interp(arr, kernel.grid, kernel.values)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ValidationReport:
    psi_min: float
    psi_max: float
    lip: float
    monotone: bool
    effective_lower_bound: float
    bounds_ok: bool


def validate(kernel: Kernel, r_max: float, n_grid: int) -> ValidationReport:
    """Check the structural assumptions of ``kernel`` on a uniform grid over [0, r_max].

    Monotonicity violations are reported, not raised. ``lip`` is the largest
    grid secant slope, never smaller than the kernel's declared bound.
    """
    if not (r_max > 0) or n_grid < 2:
        raise DomainError("validate needs r_max > 0 and n_grid >= 2")
    r = np.linspace(0.0, float(r_max), int(n_grid))
    y = np.asarray(eval_kernel(kernel, r))
    if np.any(np.isnan(y)):
        raise ValidationError("kernel evaluated to NaN on the validation grid")
    slopes = np.abs(np.diff(y)) / np.diff(r)
    monotone = bool(np.all(np.diff(y) <= 0.0))
    bounds_ok = True
    if kernel.psi0 > 0:
        bounds_ok = bool(np.all(y >= kernel.psi0) and np.all(y <= kernel.psi_m))
    else:
        bounds_ok = bool(np.all(y <= kernel.psi_m))
    return ValidationReport(
        psi_min=float(y.min()),
        psi_max=float(y.max()),
        lip=max(float(slopes.max()), kernel.lip),
        monotone=monotone,
        effective_lower_bound=float(eval_kernel(kernel, float(r_max))),
        bounds_ok=bounds_ok,
    )
