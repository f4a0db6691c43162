"""Simulation configuration and the INI-style config file reader."""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .kernel import Kernel


class MethodKind(enum.Enum):
    IPS = "ips"
    RBM1 = "rbm1"
    RBMR = "rbmr-raw"  # one batch per step, RBM-r clock
    RBMR_EQUIV = "rbmr"  # N/p batches per window, wall clock of the full system
    MC = "mc"

    @classmethod
    def parse(cls, text: str) -> MethodKind:
        key = text.strip().lower().replace("_", "-")
        aliases = {"rbmr-equiv": cls.RBMR_EQUIV, "rbm-r": cls.RBMR_EQUIV, "rbm-1": cls.RBM1}
        if key in aliases:
            return aliases[key]
        for m in cls:
            if m.value == key:
                return m
        raise ConfigError(f"unknown method {text!r}; choose from "
                          + ", ".join(m.value for m in cls))


@dataclass(frozen=True)
class SimConfig:
    n: int = 64
    d: int = 1
    p: int = 2
    tau: float = 0.1
    dt: float = 0.1
    kappa: float = 1.0
    kernel: Kernel = field(default_factory=lambda: Kernel.inverse_power(0.25))
    method: MethodKind = MethodKind.RBMR_EQUIV
    t_end: float = 10.0
    seed: int = 0
    replications: int = 1
    box_length: float = 1.0
    velocity_range: float = 1.0
    out: str | None = None

    def with_(self, **kw) -> SimConfig:
        return replace(self, **kw)

    @property
    def n_windows(self) -> int:
        """Number of tau-windows up to t_end (raw RBM-r: number of single-batch steps)."""
        k = self.t_end / self.tau
        if self.method is MethodKind.RBMR:
            k *= self.n / self.p
        return int(round(k))

    @property
    def n_sub(self) -> int:
        return int(round(self.tau / self.dt))

    def validate(self) -> SimConfig:
        if self.n < 2:
            raise ConfigError(f"invariant N >= 2 violated (N={self.n})")
        if self.d < 1:
            raise ConfigError(f"invariant d >= 1 violated (d={self.d})")
        if self.p < 2:
            raise ConfigError(f"invariant p >= 2 violated (p={self.p})")
        if self.p > self.n:
            raise ConfigError(f"invariant N >= p violated (N={self.n}, p={self.p})")
        if not (self.dt > 0 and self.tau > 0 and self.dt <= self.tau * (1 + 1e-12)):
            raise ConfigError(f"invariant 0 < dt <= tau violated (dt={self.dt}, tau={self.tau})")
        m = round(self.tau / self.dt)
        if abs(m * self.dt - self.tau) > 1e-9 * self.tau:
            raise ConfigError(f"invariant tau multiple of dt violated (tau={self.tau}, dt={self.dt})")
        if self.method in (MethodKind.RBM1, MethodKind.RBMR_EQUIV) and self.n % self.p:
            raise ConfigError(f"invariant p | N violated for {self.method.value} "
                              f"(N={self.n}, p={self.p})")
        if self.t_end < 0 or not math.isfinite(self.t_end):
            raise ConfigError(f"invariant t_end >= 0 violated (t_end={self.t_end})")
        k = self.t_end / self.tau
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ConfigError(f"invariant t_end multiple of tau violated "
                              f"(t_end={self.t_end}, tau={self.tau})")
        if self.method is MethodKind.RBMR:
            steps = round(k) * self.n / self.p
            if abs(steps - round(steps)) > 1e-9:
                raise ConfigError("invariant (N/p)(t_end/tau) integral violated for rbmr-raw")
        if self.replications < 1:
            raise ConfigError(f"invariant replications >= 1 violated ({self.replications})")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ConfigError(f"invariant kappa >= 0 violated (kappa={self.kappa})")
        return self


_CASTS = {
    "n": int, "d": int, "p": int, "seed": int, "replications": int,
    "tau": float, "dt": float, "kappa": float, "t_end": float,
    "box_length": float, "velocity_range": float,
    "kernel": Kernel.parse, "method": MethodKind.parse, "out": str,
}
_ALIASES = {"reps": "replications", "t-end": "t_end", "box": "box_length",
            "vrange": "velocity_range", "L": "box_length"}


def parse_mapping(items: dict) -> dict:
    out = {}
    names = {f.name for f in fields(SimConfig)}
    for raw_key, raw in items.items():
        key = _ALIASES.get(raw_key, raw_key).replace("-", "_")
        if key not in names:
            raise ConfigError(f"unknown config key {raw_key!r}")
        try:
            out[key] = _CASTS[key](raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {raw_key!r}: {raw!r}") from exc
    return out


def read_config_items(path) -> dict:
    """Raw ``key = value`` pairs of a config file; sections only group keys."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    with open(path) as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[simulation]\n" + text
    cp.read_string(text)
    items = {}
    for section in cp.sections():
        items.update(cp[section])
    return items


def load_config(path) -> SimConfig:
    return SimConfig(**parse_mapping(read_config_items(path)))
