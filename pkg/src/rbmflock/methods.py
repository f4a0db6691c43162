"""Time-stepping drivers: full system, RBM-1, RBM-r (both clocks) and direct MC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, sampling
from .config import MethodKind, SimConfig
from .dynamics import Ensemble, initial_ensemble, n_substeps
from .errors import BlowupError, ConfigError, DomainError
from .kernel import Kernel
from .metrics import MetricsSeries
from .sampling import RngStream


@dataclass
class SelectionLedger:
    """Per-particle selection bookkeeping for the random batch methods.

    ``eta[i]`` counts selections of i, ``zeta[i]`` lists the step indices at
    which i was selected, ``t_selected[i] = eta[i] * tau`` is the time i has
    spent evolving. ``steps`` counts single-batch steps (one per partition
    for RBM-1), so ``elapsed = steps * tau`` is in the RBM-r clock.
    """

    n: int
    tau: float
    eta: np.ndarray = None
    zeta: list = None
    steps: int = 0

    def __post_init__(self):
        if self.eta is None:
            self.eta = np.zeros(self.n, dtype=np.int64)
        if self.zeta is None:
            self.zeta = [[] for _ in range(self.n)]

    @property
    def t_selected(self) -> np.ndarray:
        return self.eta * self.tau

    @property
    def elapsed(self) -> float:
        return self.steps * self.tau

    def record_batches(self, rows: np.ndarray) -> None:
        """One RBM-r step per row, in order."""
        for row in rows:
            for i in row:
                self.zeta[i].append(self.steps)
            self.steps += 1
        np.add.at(self.eta, rows.ravel(), 1)

    def record_partition(self, rows: np.ndarray) -> None:
        """Every index selected once, all in the same step."""
        for i in rows.ravel():
            self.zeta[i].append(self.steps)
        self.steps += 1
        self.eta += 1


def _work(e: Ensemble):
    return e.x.copy(), e.v.copy()


def _finish(x, v, t, step: int) -> Ensemble:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise BlowupError(step)
    return Ensemble.trusted(x, v, t)


def _check_p(n: int, p: int, divides: bool = False) -> None:
    if p < 2 or p > n:
        raise DomainError(f"need 2 <= p <= N, got p={p}, N={n}")
    if divides and n % p:
        raise ConfigError(f"p={p} must divide N={n}")


def step_ips(e: Ensemble, kernel: Kernel, kappa: float, tau: float, dt: float,
             step: int = 0) -> Ensemble:
    """Advance the full N-particle system by one window ``tau``."""
    if e.n < 2:
        raise DomainError("the full system needs N >= 2")
    nsub = n_substeps(tau, dt)
    x, v = _work(e)
    backend.impl.advance_full(x, v, *kernel.backend_args(), float(kappa), tau / nsub, nsub)
    return _finish(x, v, e.t + tau, step)


def step_rbm1(e: Ensemble, rng: RngStream, p: int, kernel: Kernel, kappa: float,
              tau: float, dt: float, ledger: SelectionLedger | None = None,
              step: int = 0) -> Ensemble:
    """Draw a random equal partition and evolve every batch over the window."""
    _check_p(e.n, p, divides=True)
    nsub = n_substeps(tau, dt)
    rows = sampling.draw_partitions(rng, e.n, p, 1)[0]
    x, v = _work(e)
    backend.impl.advance_disjoint(x, v, rows, *kernel.backend_args(), float(kappa),
                                  tau / nsub, nsub)
    if ledger is not None:
        ledger.record_partition(rows)
    return _finish(x, v, e.t + tau, step)


def step_rbmr(e: Ensemble, rng: RngStream, p: int, kernel: Kernel, kappa: float,
              tau: float, dt: float, ledger: SelectionLedger | None = None,
              step: int = 0) -> Ensemble:
    """One RBM-r step: a single random batch evolves for ``tau``; the rest is frozen.

    Time advances in the RBM-r clock; it corresponds to full-system time
    ``t * p / N`` (see :func:`effective_time`).
    """
    _check_p(e.n, p)
    nsub = n_substeps(tau, dt)
    rows = sampling.draw_batches(rng, e.n, p, 1)
    x, v = _work(e)
    backend.impl.advance_batches(x, v, rows, *kernel.backend_args(), float(kappa),
                                 tau / nsub, nsub)
    if ledger is not None:
        ledger.record_batches(rows)
    return _finish(x, v, e.t + tau, step)


def step_rbmr_equiv(e: Ensemble, rng: RngStream, p: int, kernel: Kernel, kappa: float,
                    tau: float, dt: float, ledger: SelectionLedger | None = None,
                    step: int = 0) -> Ensemble:
    """N/p sequential random batches, each evolved over the same window of length tau."""
    _check_p(e.n, p, divides=True)
    nsub = n_substeps(tau, dt)
    rows = sampling.draw_batches(rng, e.n, p, e.n // p)
    x, v = _work(e)
    backend.impl.advance_batches(x, v, rows, *kernel.backend_args(), float(kappa),
                                 tau / nsub, nsub)
    if ledger is not None:
        ledger.record_batches(rows)
    return _finish(x, v, e.t + tau, step)


def step_mc(e: Ensemble, rng: RngStream, p: int, kernel: Kernel, kappa: float,
            tau: float, dt: float, step: int = 0) -> Ensemble:
    """Direct Monte Carlo: each particle draws its own p-1 partners for the window.

    All particles move simultaneously from the pre-window state, so the
    pairwise forces are not antisymmetric and momentum drifts.
    """
    _check_p(e.n, p)
    nsub = n_substeps(tau, dt)
    nbrs = sampling.draw_mc_neighbors(rng, e.n, p, 1)[0]
    x, v = _work(e)
    backend.impl.advance_mc(x, v, nbrs, *kernel.backend_args(), float(kappa),
                            tau / nsub, nsub)
    return _finish(x, v, e.t + tau, step)


def effective_time(t_rbmr: float, n: int, p: int) -> float:
    """Full-system time matching RBM-r clock time: t * p / N."""
    return t_rbmr * p / n


def advance(kind: MethodKind, e: Ensemble, rng: RngStream | None, p: int, kernel: Kernel,
            kappa: float, tau: float, dt: float, n_windows: int) -> Ensemble:
    """Advance ``n_windows`` windows with randomness drawn in one block.

    Gives the same trajectory as repeated single-window steps (block draws
    consume the stream in the same order) but amortises per-call overhead;
    used by the benchmark. The blow-up check runs once at the end.
    """
    nsub = n_substeps(tau, dt)
    h = tau / nsub
    args = kernel.backend_args()
    x, v = _work(e)
    impl = backend.impl
    if kind is MethodKind.IPS:
        impl.advance_full(x, v, *args, float(kappa), h, nsub * n_windows)
    elif kind is MethodKind.RBMR_EQUIV:
        _check_p(e.n, p, divides=True)
        rows = sampling.draw_batches(rng, e.n, p, (e.n // p) * n_windows)
        impl.advance_batches(x, v, rows, *args, float(kappa), h, nsub)
    elif kind is MethodKind.RBMR:
        _check_p(e.n, p)
        rows = sampling.draw_batches(rng, e.n, p, n_windows)
        impl.advance_batches(x, v, rows, *args, float(kappa), h, nsub)
    elif kind is MethodKind.RBM1:
        _check_p(e.n, p, divides=True)
        parts = sampling.draw_partitions(rng, e.n, p, n_windows)
        for rows in parts:
            impl.advance_disjoint(x, v, rows, *args, float(kappa), h, nsub)
    else:
        _check_p(e.n, p)
        nbrs = sampling.draw_mc_neighbors(rng, e.n, p, n_windows)
        for rows in nbrs:
            impl.advance_mc(x, v, rows, *args, float(kappa), h, nsub)
    return _finish(x, v, e.t + tau * n_windows, n_windows - 1)


def make_initial(config: SimConfig) -> Ensemble:
    """Initial data from stream 0 of the configured seed; shared by every method."""
    rng = RngStream(config.seed, sampling.INIT_STREAM)
    return initial_ensemble(rng.generator, config.n, config.d, config.box_length,
                            config.velocity_range)


@dataclass
class RunResult:
    metrics: MetricsSeries
    ledger: SelectionLedger | None
    snapshots: list = field(default_factory=list)
    final: Ensemble | None = None


def reference_velocities(config: SimConfig, initial: Ensemble | None = None) -> np.ndarray:
    """Full-system velocities at every window boundary, shape (K + 1, N, d)."""
    cfg = config.with_(method=MethodKind.IPS)
    e = make_initial(cfg) if initial is None else initial
    k_windows = int(round(cfg.t_end / cfg.tau))
    out = np.empty((k_windows + 1,) + e.v.shape)
    out[0] = e.v
    for k in range(k_windows):
        e = step_ips(e, cfg.kernel, cfg.kappa, cfg.tau, cfg.dt, step=k)
        out[k + 1] = e.v
    return out


def run(config: SimConfig, replication: int = 0, reference: np.ndarray | None = None,
        snapshots: bool = False, initial: Ensemble | None = None) -> RunResult:
    """Run ``config.method`` from t=0 to t_end, recording metrics every window.

    ``reference`` holds full-system velocities at the window boundaries (see
    :func:`reference_velocities`); when given, the l2 error is recorded. For
    the raw RBM-r method a row is written after every single-batch step with
    ``t`` in the RBM-r clock, and the error is filled in where that time maps
    onto a window boundary of the full system.
    """
    config.validate()
    e0 = make_initial(config) if initial is None else initial
    rng = RngStream(config.seed, sampling.batch_stream_id(replication))
    kind = config.method
    kw = dict(kernel=config.kernel, kappa=config.kappa, tau=config.tau, dt=config.dt)
    ledger = None
    if kind in (MethodKind.RBM1, MethodKind.RBMR, MethodKind.RBMR_EQUIV):
        ledger = SelectionLedger(config.n, config.tau)

    def ref_at(k: int):
        if reference is None:
            return None
        if kind is MethodKind.RBMR:
            if (k * config.p) % config.n:
                return None
            k = k * config.p // config.n
        return reference[k] if k < len(reference) else None

    metrics = MetricsSeries(config.d)
    snaps = []
    e = e0
    metrics.record(0.0, e, ref_at(0))
    if snapshots:
        snaps.append(e)
    for k in range(config.n_windows):
        if kind is MethodKind.IPS:
            e = step_ips(e, step=k, **kw)
        elif kind is MethodKind.RBM1:
            e = step_rbm1(e, rng, config.p, ledger=ledger, step=k, **kw)
        elif kind is MethodKind.RBMR:
            e = step_rbmr(e, rng, config.p, ledger=ledger, step=k, **kw)
        elif kind is MethodKind.RBMR_EQUIV:
            e = step_rbmr_equiv(e, rng, config.p, ledger=ledger, step=k, **kw)
        else:
            e = step_mc(e, rng, config.p, step=k, **kw)
        t = (k + 1) * config.tau
        e = Ensemble.trusted(e.x, e.v, t)
        metrics.record(t, e, ref_at(k + 1))
        if snapshots:
            snaps.append(e)
    return RunResult(metrics, ledger, snaps, e)


# -- coupled RBM-r / IPS / IPS' triple -------------------------------------------------


@dataclass
class TripleState:
    """RBM-r, the full system, and N frozen-unless-selected copies of the full system.

    Copy i (``hat_x[i]``, ``hat_v[i]``) advances by one window of the full
    dynamics exactly when index i is in the current batch.
    """

    rbmr: Ensemble
    ips: Ensemble
    hat_x: np.ndarray
    hat_v: np.ndarray
    ledger: SelectionLedger


@dataclass
class TripleHistory:
    t: np.ndarray  # full-system clock at window boundaries
    w_v: np.ndarray  # (K+1, N, d): V_rbmr^i - Vhat^{ii}
    step2: np.ndarray  # (K+1, N, d): Vhat^{ii} - V^i
    momentum_drift: np.ndarray  # (K+1, 3): rbmr, ips, worst ips' copy
    state: TripleState

    def rms(self, name: str) -> np.ndarray:
        a = getattr(self, name)
        return np.sqrt((a * a).sum(axis=-1).mean(axis=-1))


def run_triple(config: SimConfig, replication: int = 0, max_n: int = 512) -> TripleHistory:
    """Evolve the coupled triple with one shared batch stream.

    Records, at every window boundary t_k of the full system (i.e. after N/p
    RBM-r steps), the coupling discrepancy w_V and the time-change
    discrepancy between the diagonal of the copies and the full system.
    """
    config.validate()
    n, p = config.n, config.p
    if n > max_n:
        raise ConfigError(f"invariant N <= {max_n} for the triple violated (N={n})")
    if n % p:
        raise ConfigError(f"invariant p | N violated for the triple (N={n}, p={p})")
    nsub = n_substeps(config.tau, config.dt)
    h = config.tau / nsub
    args = config.kernel.backend_args()
    kappa = float(config.kappa)
    impl = backend.impl

    e0 = make_initial(config)
    rng = RngStream(config.seed, sampling.batch_stream_id(replication))
    rx, rv = _work(e0)
    ix, iv = _work(e0)
    hat_x = np.repeat(e0.x[None], n, axis=0)
    hat_v = np.repeat(e0.v[None], n, axis=0)
    ledger = SelectionLedger(n, config.tau)
    m0 = e0.v.sum(axis=0)

    k_windows = int(round(config.t_end / config.tau))
    diag = np.arange(n)
    w_v = np.empty((k_windows + 1, n, config.d))
    step2 = np.empty_like(w_v)
    drift = np.empty((k_windows + 1, 3))

    def snapshot(k: int):
        vd = hat_v[diag, diag]
        w_v[k] = rv - vd
        step2[k] = vd - iv
        drift[k, 0] = np.abs(rv.sum(axis=0) - m0).max()
        drift[k, 1] = np.abs(iv.sum(axis=0) - m0).max()
        drift[k, 2] = np.abs(hat_v.sum(axis=1) - m0).max()

    snapshot(0)
    for k in range(k_windows):
        rows = sampling.draw_batches(rng, n, p, n // p)
        for row in rows:
            impl.advance_batches(rx, rv, row[None], *args, kappa, h, nsub)
            for i in row:
                impl.advance_full(hat_x[i], hat_v[i], *args, kappa, h, nsub)
        ledger.record_batches(rows)
        impl.advance_full(ix, iv, *args, kappa, h, nsub)
        if not (np.all(np.isfinite(rv)) and np.all(np.isfinite(iv))):
            raise BlowupError(k)
        snapshot(k + 1)
    t = np.arange(k_windows + 1) * config.tau
    state = TripleState(Ensemble(rx, rv, t[-1] * n / p), Ensemble(ix, iv, t[-1]),
                        hat_x, hat_v, ledger)
    return TripleHistory(t, w_v, step2, drift, state)
