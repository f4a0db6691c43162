"""Command line entry point: ``rbmflock <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import backend, harness, methods, theory
from .config import MethodKind, SimConfig, parse_mapping, read_config_items
from .errors import RbmError
from .harness import Axis, SweepSpec, fmt
from .metrics import rate_constants

SUBCOMMANDS = ("simulate", "flocking", "sweep-p", "sweep-tau", "compare", "conserve",
               "verify-theory", "bench")

# (flag, config key, type); None defaults let file keys survive unless overridden
_SIM_FLAGS = [
    ("--method", "method", str), ("--n", "n", int), ("--d", "d", int), ("--p", "p", int),
    ("--tau", "tau", float), ("--dt", "dt", float), ("--kappa", "kappa", float),
    ("--t-end", "t_end", float), ("--seed", "seed", int), ("--reps", "replications", int),
    ("--kernel", "kernel", str),
]


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rbmflock", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "verify-theory":
            continue
        for flag, _, typ in _SIM_FLAGS:
            sp.add_argument(flag, type=typ, default=None)
        sp.add_argument("--values", type=_values, default=None)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--at", type=float, default=None, help="report time for error tables")
        if name == "simulate":
            sp.add_argument("--snapshots", action="store_true")
        if name == "bench":
            sp.add_argument("--backend", choices=sorted(backend.available()), default=None)
            sp.add_argument("--repeats", type=int, default=5)
    return ap


def resolve_config(args, **defaults) -> SimConfig:
    """Layering: built-in defaults < subcommand defaults < config file < flags."""
    cfg = SimConfig(**defaults)
    if getattr(args, "config", None):
        cfg = cfg.with_(**parse_mapping(read_config_items(args.config)))
    overrides = {}
    for flag, key, _ in _SIM_FLAGS:
        val = getattr(args, flag.lstrip("-").replace("-", "_"), None)
        if val is not None:
            overrides[key] = str(val) if key in ("method", "kernel") else val
    if overrides:
        cfg = cfg.with_(**parse_mapping(overrides))
    if args.out is not None:
        cfg = cfg.with_(out=str(args.out))
    return cfg


def _out(cfg: SimConfig) -> Path:
    return Path(cfg.out or "out")


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[c if isinstance(c, str) else fmt_short(c) for c in r]
                                           for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def fmt_short(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def cmd_simulate(args) -> int:
    cfg = resolve_config(args).validate()
    out = _out(cfg)
    ref = methods.reference_velocities(cfg)
    res = methods.run(cfg, reference=ref, snapshots=args.snapshots)
    path = harness.write_metrics_csv(out / f"{cfg.method.value}_metrics.csv", res.metrics, cfg)
    print(f"wrote {path}")
    if args.snapshots:
        print(f"wrote {harness.write_snapshots_csv(out / f'{cfg.method.value}_snapshots.csv', res.snapshots, cfg)}")
    m = res.metrics
    print(_table(["t", "ssd_v", "ssd_x", "d_v", "max|dP|", "l2_error"],
                 [[m.t[-1], m.ssd_v[-1], m.ssd_x[-1], m.d_v[-1], m.max_momentum_drift(),
                   m.l2_error[-1]]]))
    return 0


def cmd_flocking(args) -> int:
    cfg = resolve_config(args, replications=100).validate()
    res = harness.flocking(cfg, out_dir=_out(cfg) / "flocking", workers=args.workers,
                           t_fit=args.at)
    rows = [[k.value, res.fitted[k], res.theory_rate] for k in res.results]
    print(_table(["method", "fitted_rate", "guaranteed_rate"], rows))
    if res.theory_rate is None:
        print("kernel has no positive lower bound; no guaranteed rate")
    else:
        c = rate_constants(cfg.kernel.psi0, cfg.p, cfg.tau)
        print(f"C1={c.c1:.6g} C2={c.c2:.6g} C3={c.c3:.6g}")
    return 0


def _sweep(args, axis: Axis, default_values, dt_is_tau: bool) -> int:
    values = args.values or default_values
    if axis is Axis.P:
        values = [int(v) for v in values]
    cfg = resolve_config(args, replications=100, t_end=2.0)
    if dt_is_tau and args.dt is None:
        cfg = cfg.with_(dt=cfg.tau)
    spec = SweepSpec(axis, tuple(values), cfg.replications, cfg)
    out = _out(cfg) / f"sweep_{axis.value}"
    sweep = harness.run_sweep(spec, out_dir=out, workers=args.workers)
    t_at = args.at if args.at is not None else cfg.t_end
    rows = []
    for (kind, val) in sweep.results:
        sc = sweep.scales[(kind, val)]
        med = sweep.results[(kind, val)].at("l2_error", t_at)
        rows.append([kind.value, fmt(val), med, sc, med / sc if sc > 0 else None])
    print(_table(["method", axis.value, f"l2_q50@t={t_at:g}", "scale", "scaled"], rows))
    print(f"wrote CSVs under {out}")
    return 0


def cmd_compare(args) -> int:
    cfg = resolve_config(args, replications=100).validate()
    n_values = [int(v) for v in args.values] if args.values else [cfg.n]
    t_at = args.at if args.at is not None else min(5.0, cfg.t_end)
    rows = []
    for n in n_values:
        c = cfg.with_(n=n).validate()
        res = harness.compare_methods(c, out_dir=_out(cfg) / f"compare_n{n}", workers=args.workers)
        rows.append([n, res.median_error(MethodKind.RBM1, t_at),
                     res.median_error(MethodKind.RBMR_EQUIV, t_at)])
    print(_table(["N", f"rbm1_q50@{t_at:g}", f"rbmr_q50@{t_at:g}"], rows))
    return 0


def cmd_conserve(args) -> int:
    cfg = resolve_config(args, replications=1).validate()
    kinds = (MethodKind.RBMR_EQUIV, MethodKind.MC, MethodKind.RBM1, MethodKind.IPS)
    res = harness.compare_methods(cfg, kinds=kinds, out_dir=_out(cfg) / "conserve",
                                  workers=args.workers)
    first = res.results[MethodKind.RBMR_EQUIV].series[0]
    header = ["t"] + [f"{k.value}_momentum_{c}" for k in kinds for c in range(cfg.d)]

    def rows():
        for i, t in enumerate(first.t):
            line = [t]
            for k in kinds:
                line += list(res.results[k].series[0].column("momentum")[i])
            yield line

    path = harness.write_csv(_out(cfg) / "conserve" / "first_moment.csv", header, rows(),
                             harness.header_line(cfg, 0))
    print(_table(["method", "max_drift_median", "max_drift_max"],
                 [[k.value, float(np.median(res.max_drift(k))), float(res.max_drift(k).max())]
                  for k in kinds]))
    print(f"wrote {path}")
    return 0


def cmd_verify_theory(args) -> int:
    rows = theory.verify_all()
    print(_table(["check", "cases", "worst", "tol", "result"],
                 [[r.name, r.cases, r.worst, r.tol, "PASS" if r.passed else "FAIL"] for r in rows]))
    if args.out is not None:
        harness.write_csv(Path(args.out) / "verify_theory.csv", ["check", "cases", "worst", "tol", "passed"],
                          ([r.name, r.cases, r.worst, r.tol, int(r.passed)] for r in rows))
    return 0 if all(r.passed for r in rows) else 1


def cmd_bench(args) -> int:
    cfg = resolve_config(args)
    n_grid = [int(v) for v in args.values] if args.values else [256, 512, 1024, 2048]
    rows, slopes = harness.bench(n_grid, p=cfg.p, tau=cfg.tau, dt=args.dt, repeats=args.repeats,
                                 seed=cfg.seed, backend_name=args.backend)
    path = harness.write_bench_csv(_out(cfg) / "bench.csv", rows)
    print(_table(["n", "method", "median_ns_per_window", "backend"],
                 [[r.n, r.method, r.median_ns_per_window, r.backend] for r in rows]))
    print(_table(["method", "loglog_slope"], [[k, v] for k, v in slopes.items()]))
    print(f"wrote {path}")
    return 0


_DISPATCH = {
    "simulate": cmd_simulate,
    "flocking": cmd_flocking,
    "sweep-p": lambda a: _sweep(a, Axis.P, [2, 4, 8, 16, 32], dt_is_tau=True),
    "sweep-tau": lambda a: _sweep(a, Axis.TAU, [0.1, 0.05, 0.025, 0.0125], dt_is_tau=False),
    "compare": cmd_compare,
    "conserve": cmd_conserve,
    "verify-theory": cmd_verify_theory,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _DISPATCH[args.command](args)
    except RbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
