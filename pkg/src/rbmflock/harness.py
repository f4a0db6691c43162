"""Replication orchestration, aggregation, CSV output, sweeps and benchmarks."""

from __future__ import annotations

import enum
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend, methods, sampling
from .config import MethodKind, SimConfig
from .errors import BlowupError, ConfigError
from .metrics import METRIC_NAMES, MetricsSeries, fit_decay_rate, flocking_rate, scale_rbm1, scale_rbmr

log = logging.getLogger(__name__)

QUANTILES = (0.1, 0.5, 0.9)


def fmt(value) -> str:
    """17 significant digits: enough to round-trip a double exactly."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, ".17g")


def header_line(config: SimConfig, replication: int | None = None) -> str:
    parts = [f"seed={config.seed}", f"init_stream={sampling.INIT_STREAM}"]
    if replication is not None:
        parts.append(f"batch_stream={sampling.batch_stream_id(replication)}")
    else:
        parts.append(f"batch_streams={sampling.batch_stream_id(0)}.."
                     f"{sampling.batch_stream_id(config.replications - 1)}")
    return "# " + " ".join(parts) + "\n"


def write_csv(path, header: list[str], rows, comment: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(comment)
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_metrics_csv(path, metrics: MetricsSeries, config: SimConfig, replication: int = 0) -> Path:
    return write_csv(path, metrics.header(), metrics.rows(), header_line(config, replication))


def write_snapshots_csv(path, snapshots, config: SimConfig, replication: int = 0) -> Path:
    d = config.d
    header = (["t", "particle_id"] + [f"x_{c}" for c in range(d)] + [f"v_{c}" for c in range(d)])

    def rows():
        for e in snapshots:
            for i in range(e.n):
                yield [e.t, i, *e.x[i].tolist(), *e.v[i].tolist()]

    return write_csv(path, header, rows(), header_line(config, replication))


# -- aggregation ----------------------------------------------------------------------


@dataclass
class AggregateRow:
    t: float
    stats: dict  # metric -> (mean, q10, q50, q90), or None where undefined
    count: int


def aggregate(series: list[MetricsSeries]) -> list[AggregateRow]:
    """Mean and 10/50/90% quantiles of every metric at every recorded time.

    Values are sorted before reduction, so the result does not depend on the
    order in which replications finished.
    """
    if not series:
        return []
    t = series[0].t
    cols = {name: np.stack([s.column(name) for s in series]) for name in METRIC_NAMES}
    rows = []
    for k, tk in enumerate(t):
        stats = {}
        for name, mat in cols.items():
            vals = np.sort(mat[:, k])
            if np.any(np.isnan(vals)):
                stats[name] = None
                continue
            q = np.quantile(vals, QUANTILES)
            stats[name] = (math.fsum(vals) / len(vals), float(q[0]), float(q[1]), float(q[2]))
        rows.append(AggregateRow(tk, stats, len(series)))
    return rows


def aggregate_header() -> list[str]:
    out = ["t"]
    for name in METRIC_NAMES:
        out += [f"{name}_mean", f"{name}_q10", f"{name}_q50", f"{name}_q90"]
    return out + ["count"]


def aggregate_rows(rows: list[AggregateRow]):
    for r in rows:
        line = [r.t]
        for name in METRIC_NAMES:
            s = r.stats[name]
            line += list(s) if s is not None else [None] * 4
        yield line + [r.count]


@dataclass
class EnsembleResult:
    config: SimConfig
    rows: list[AggregateRow]
    series: list[MetricsSeries]
    failures: list = field(default_factory=list)  # (replication, seed, message)
    ledgers: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def column(self, metric: str, stat: str = "q50") -> np.ndarray:
        idx = {"mean": 0, "q10": 1, "q50": 2, "q90": 3}[stat]
        return np.array([math.nan if r.stats[metric] is None else r.stats[metric][idx]
                         for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def at(self, metric: str, t: float, stat: str = "q50") -> float:
        k = int(np.argmin(np.abs(self.t - t)))
        return float(self.column(metric, stat)[k])

    def per_run(self, metric: str) -> np.ndarray:
        """(replications, times) matrix of one metric."""
        return np.stack([s.column(metric) for s in self.series])


def _run_one(args):
    config, rep, reference, keep_ledger = args
    try:
        res = methods.run(config, replication=rep, reference=reference)
    except BlowupError as exc:
        return rep, None, None, str(exc)
    return rep, res.metrics, (res.ledger if keep_ledger else None), None


def run_ensemble(config: SimConfig, out_dir=None, label: str | None = None, workers: int = 1,
                 reference: np.ndarray | None | bool = True, keep_ledgers: bool = False,
                 write_runs: bool = True) -> EnsembleResult:
    """Run ``config.replications`` replications and aggregate them.

    Every replication starts from the same initial data (stream 0); batch
    draws come from stream 1 + rep. ``reference=True`` computes the
    full-system trajectory once and attaches l2 errors. Output is merged
    in replication order, so files are byte-identical for any ``workers``.
    """
    config.validate()
    if reference is True:
        reference = methods.reference_velocities(config)
    elif reference is False:
        reference = None
    jobs = [(config, rep, reference, keep_ledgers) for rep in range(config.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    series, ledgers, failures = [], [], []
    for rep, metrics, ledger, err in results:
        if err is not None:
            failures.append((rep, config.seed, err))
            log.warning("replication %d (seed %d) failed: %s", rep, config.seed, err)
            continue
        series.append(metrics)
        if keep_ledgers:
            ledgers.append(ledger)
    result = EnsembleResult(config, aggregate(series), series, failures, ledgers)
    if out_dir is not None:
        base = Path(out_dir) / (label or config.method.value)
        if write_runs:
            for rep, s in zip([r[0] for r in results if r[3] is None], series):
                result.files.append(write_metrics_csv(base / f"run_{rep:04d}.csv", s, config, rep))
        comment = header_line(config) + f"# failed={len(failures)}\n"
        result.files.append(write_csv(base / "aggregate.csv", aggregate_header(),
                                      aggregate_rows(result.rows), comment))
    return result


# -- sweeps ---------------------------------------------------------------------------


class Axis(enum.Enum):
    P = "p"
    TAU = "tau"
    N = "n"


@dataclass(frozen=True)
class SweepSpec:
    axis: Axis
    values: tuple
    replications: int
    fixed: SimConfig

    def configs(self, method: MethodKind):
        for val in self.values:
            if self.axis is Axis.P:
                cfg = self.fixed.with_(p=int(val))
            elif self.axis is Axis.TAU:
                # integrator error held fixed across the sweep
                cfg = self.fixed.with_(tau=float(val), dt=float(min(self.values)))
            else:
                cfg = self.fixed.with_(n=int(val))
            yield val, cfg.with_(method=method, replications=self.replications).validate()


def error_scale(axis: Axis, method: MethodKind, cfg: SimConfig) -> float:
    if axis is Axis.TAU:
        return math.sqrt(cfg.tau)
    if method is MethodKind.RBM1:
        return scale_rbm1(cfg.n, cfg.p)
    return scale_rbmr(cfg.n, cfg.p)


@dataclass
class SweepResult:
    spec: SweepSpec
    results: dict  # (method, value) -> EnsembleResult
    scales: dict  # (method, value) -> scale factor

    def scaled_median(self, method: MethodKind, value, t: float) -> float:
        return self.results[(method, value)].at("l2_error", t) / self.scales[(method, value)]


def run_sweep(spec: SweepSpec, kinds=(MethodKind.RBMR_EQUIV, MethodKind.RBM1), out_dir=None,
              workers: int = 1, write_runs: bool = False) -> SweepResult:
    results, scales = {}, {}
    for kind in kinds:
        for val, cfg in spec.configs(kind):
            label = f"{kind.value}_{spec.axis.value}{fmt(val)}"
            res = run_ensemble(cfg, out_dir, label, workers=workers, write_runs=write_runs)
            results[(kind, val)] = res
            scales[(kind, val)] = error_scale(spec.axis, kind, cfg)
    sweep = SweepResult(spec, results, scales)
    if out_dir is not None:
        write_csv(Path(out_dir) / f"scaled_error_{spec.axis.value}.csv",
                  ["t", "method", spec.axis.value, "l2_q50", "scale", "scaled_q50"],
                  _scaled_rows(sweep), header_line(spec.fixed.with_(replications=spec.replications)))
    return sweep


def _scaled_rows(sweep: SweepResult):
    for (kind, val), res in sweep.results.items():
        sc = sweep.scales[(kind, val)]
        med = res.column("l2_error")
        for t, m in zip(res.t, med):
            yield [t, kind.value, val, m, sc, (m / sc) if sc > 0 else None]


def collapse_ratio(sweep: SweepResult, kind: MethodKind, t: float, exclude=()) -> float:
    """max/min of the scaled median error at time t across sweep values."""
    vals = [sweep.scaled_median(kind, v, t) for v in sweep.spec.values
            if v not in exclude and sweep.scales.get((kind, v), 0) > 0]
    return max(vals) / min(vals)


# -- comparisons ----------------------------------------------------------------------


@dataclass
class CompareResult:
    results: dict  # method -> EnsembleResult

    def median_error(self, kind: MethodKind, t: float) -> float:
        return self.results[kind].at("l2_error", t)

    def paired_errors(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        a = self.results[MethodKind.RBM1]
        b = self.results[MethodKind.RBMR_EQUIV]
        k = int(np.argmin(np.abs(a.t - t)))
        return a.per_run("l2_error")[:, k], b.per_run("l2_error")[:, k]

    def max_drift(self, kind: MethodKind) -> np.ndarray:
        return np.array([s.max_momentum_drift() for s in self.results[kind].series])


def compare_methods(config: SimConfig, kinds=(MethodKind.RBM1, MethodKind.RBMR_EQUIV),
                    out_dir=None, workers: int = 1) -> CompareResult:
    """Run several methods on identical initial data and batch seeds."""
    reference = methods.reference_velocities(config)
    out = {}
    for kind in kinds:
        cfg = config.with_(method=kind)
        out[kind] = run_ensemble(cfg, out_dir, kind.value, workers=workers, reference=reference,
                                 write_runs=False)
    return CompareResult(out)


@dataclass
class FlockingResult:
    results: dict  # method -> EnsembleResult
    theory_rate: float | None
    fitted: dict  # method -> fitted decay rate of the mean SSD of V


def flocking(config: SimConfig, kinds=(MethodKind.IPS, MethodKind.RBM1, MethodKind.RBMR_EQUIV),
             t_fit: float | None = None, out_dir=None, workers: int = 1) -> FlockingResult:
    res, fitted = {}, {}
    for kind in kinds:
        reps = 1 if kind is MethodKind.IPS else config.replications
        cfg = config.with_(method=kind, replications=reps)
        r = run_ensemble(cfg, out_dir, kind.value, workers=workers, reference=False,
                         write_runs=False)
        res[kind] = r
        t = r.t
        keep = t <= (t_fit if t_fit is not None else t[-1]) + 1e-12
        fitted[kind] = fit_decay_rate(t[keep], r.column("ssd_v", "mean")[keep])
    k = config.kernel
    theory = flocking_rate(k.psi0, config.n, config.p, config.tau) if k.psi0 > 0 else None
    return FlockingResult(res, theory, fitted)


# -- benchmark ------------------------------------------------------------------------


@dataclass
class BenchRow:
    n: int
    method: str
    median_ns_per_window: float
    backend: str


def _time_windows(kind, e, rng, cfg, windows):
    t0 = time.perf_counter()
    methods.advance(kind, e, rng, cfg.p, cfg.kernel, cfg.kappa, cfg.tau, cfg.dt, windows)
    return time.perf_counter() - t0


def bench(n_grid=(256, 512, 1024, 2048), p: int = 2, tau: float = 0.1, dt: float | None = None,
          kinds=(MethodKind.IPS, MethodKind.RBMR_EQUIV), repeats: int = 5,
          min_time: float = 0.05, seed: int = 0, backend_name: str | None = None):
    """Median wall time per window for each N and method; returns (rows, slopes).

    Windows are timed in blocks long enough to exceed ``min_time`` so that
    fixed Python overhead does not mask the per-window cost.
    """
    rows = []
    with backend.use(backend_name):
        name = backend.NAME if backend_name is None else backend_name
        for n in n_grid:
            cfg = SimConfig(n=n, p=p, tau=tau, dt=dt if dt is not None else tau, seed=seed)
            e = methods.make_initial(cfg)
            for kind in kinds:
                rng = sampling.RngStream(seed, 1)
                windows = 1
                while _time_windows(kind, e, rng, cfg, windows) < min_time and windows < 1 << 20:
                    windows *= 2
                samples = [_time_windows(kind, e, rng, cfg, windows) / windows for _ in range(repeats)]
                rows.append(BenchRow(n, kind.value, float(np.median(samples)) * 1e9, name))
    slopes = {}
    for kind in kinds:
        pts = [(r.n, r.median_ns_per_window) for r in rows if r.method == kind.value]
        if len(pts) >= 2:
            ln, lt = np.log([q[0] for q in pts]), np.log([q[1] for q in pts])
            slopes[kind.value] = float(np.polyfit(ln, lt, 1)[0])
    return rows, slopes


def write_bench_csv(path, rows: list[BenchRow]) -> Path:
    return write_csv(path, ["n", "method", "median_ns_per_window"],
                     ([r.n, r.method, r.median_ns_per_window] for r in rows))


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


__all__ = [
    "AggregateRow", "Axis", "BenchRow", "CompareResult", "ConfigError", "EnsembleResult",
    "FlockingResult", "SweepResult", "SweepSpec", "aggregate", "bench", "compare_methods",
    "flocking", "run_ensemble", "run_sweep", "write_csv",
]
