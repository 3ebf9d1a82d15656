"""Command-line front end: ``stpbp {simulate,estimate,theory,compare}``.

Every numeric option can also come from a ``--config`` key=value file (keys
are the option names, ``-`` or ``_``); flags win over the file. The output
directory may additionally default from ``$STPBP_OUT_DIR``.
"""
from __future__ import annotations

import argparse
import glob
import logging
import math
import os
import sys

import numpy as np

from . import theory
from .config import format_key_values, read_key_values, write_atomic
from .tef import BinnedTef, TefParams, TwoSlopeFitError, TwoSlopeTef, estimate_tef
from .trace import DEFAULT_DELTA, EmbeddedTrace, SimConfig, is_viral

log = logging.getLogger("stpbp")

OUT_ENV = "STPBP_OUT_DIR"


class UsageError(Exception):
    pass


# option name -> (type, default); None default means "required or optional"
_OPTIONS = {
    "simulate": {
        "graph": (str, None), "directed": (bool, False), "abstract": (bool, False),
        "tef": (str, None), "offspring": (str, "poisson"), "n_max": (int, 0),
        "rho": (float, None), "seeds": (int, 2), "runs": (int, 1), "seed": (int, 0),
        "lam": (float, 1.0), "max_epochs": (int, None), "out": (str, "."), "jobs": (int, 1),
    },
    "estimate": {
        "traces": (list, None), "bins": (str, None), "bin_width": (int, 1000),
        "min_transitions": (int, 30), "delta": (int, DEFAULT_DELTA), "all_paths": (bool, False),
        "rho": (float, 1.0), "out": (str, "."),
    },
    "theory": {
        "tef": (str, None), "rho": (float, None), "a0": (int, 2), "t_max": (float, None),
        "t_points": (int, 1001), "epochs_only": (bool, False), "out": (str, "."),
    },
    "compare": {
        "traces": (list, None), "tef": (str, None), "rho": (float, None), "a0": (int, None),
        "delta": (int, DEFAULT_DELTA), "out": (str, "compare_report.csv"),
    },
}


def _convert(typ, raw):
    if typ is bool:
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if typ is list:
        return [s for s in str(raw).split(",") if s]
    return typ(raw)


def _resolve(args) -> None:
    """Fill unset options from the config file, the environment, then defaults."""
    file_vals = read_key_values(args.config) if args.config else {}
    for name, (typ, default) in _OPTIONS[args.command].items():
        current = getattr(args, name, None)
        if current is not None and current is not False:
            continue
        if name in file_vals:
            try:
                setattr(args, name, _convert(typ, file_vals[name]))
            except ValueError as exc:
                raise UsageError(f"config key {name}: {exc}") from None
        elif name == "out" and os.environ.get(OUT_ENV):
            args.out = os.environ[OUT_ENV]
        else:
            setattr(args, name, default)


def _load_tef(path: str, rho: float | None = None) -> TefParams:
    kv = read_key_values(path)
    p = TefParams.from_mapping(kv)
    return p.with_rho(rho) if rho is not None else p


def _trace_files(dirs) -> list[str]:
    files = []
    for d in dirs:
        found = sorted(glob.glob(os.path.join(d, "trace_*.csv")))
        if not found:
            raise FileNotFoundError(f"no trace_*.csv files in {d}")
        files.extend(found)
    return files


def _read_trace(path: str) -> EmbeddedTrace:
    with open(path, encoding="utf-8") as fh:
        return EmbeddedTrace.from_csv(fh.read())


def _run_meta(d: str) -> dict:
    path = os.path.join(d, "run.cfg")
    return read_key_values(path) if os.path.exists(path) else {}


# -------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    if bool(args.graph) == bool(args.abstract):
        raise UsageError("give exactly one of --graph PATH or --abstract")
    meta = [("mode", "abstract" if args.abstract else "graph"), ("seeds", args.seeds),
            ("runs", args.runs), ("seed", args.seed), ("lam", repr(args.lam)),
            ("max_epochs", "" if args.max_epochs is None else args.max_epochs)]

    if args.abstract:
        from .abstract import OffspringModel, iter_abstract

        if not args.tef:
            raise UsageError("--abstract needs --tef CONFIG")
        p = _load_tef(args.tef, args.rho)
        model = OffspringModel(p, kind=args.offspring, n_max=args.n_max)
        cfg = SimConfig(rho=p.rho, seed_count=args.seeds, lam=args.lam, rng_seed=args.seed,
                        max_epochs=args.max_epochs)
        traces = iter_abstract(model, cfg, args.runs)
        meta.insert(1, ("rho", repr(p.rho)))
        meta += [(k, v) for k, v in zip(("m_bar", "kappa1", "kappa2", "a_bar"),
                                        map(repr, (p.m_bar, p.kappa1, p.kappa2, p.a_bar)))]
    else:
        from .cascade import iter_batch, simulate_batch
        from .graph import load_edge_list

        if args.rho is None:
            raise UsageError("--rho is required with --graph")
        g = load_edge_list(args.graph, directed=args.directed)
        cfg = SimConfig(rho=args.rho, seed_count=args.seeds, lam=args.lam, rng_seed=args.seed,
                        max_epochs=args.max_epochs)
        traces = (simulate_batch(g, cfg, args.runs, jobs=args.jobs) if args.jobs > 1
                  else iter_batch(g, cfg, args.runs))
        meta.insert(1, ("rho", repr(args.rho)))
        meta.append(("directed", str(args.directed).lower()))

    os.makedirs(args.out, exist_ok=True)
    for i, tr in enumerate(traces):
        write_atomic(os.path.join(args.out, f"trace_{i:05d}.csv"), tr.to_csv())
        log.info("run %d: %d epochs, final total %d, %s", i, tr.epochs, tr.final_total, tr.terminal)
    write_atomic(os.path.join(args.out, "run.cfg"), format_key_values(meta))
    print(f"wrote {args.runs} trace(s) to {args.out}")
    return 0


def cmd_estimate(args) -> int:
    if bool(args.traces) == bool(args.bins):
        raise UsageError("give exactly one of --traces DIR[,DIR...] or --bins FILE")
    if args.bins:
        with open(args.bins, encoding="utf-8") as fh:
            bins = BinnedTef.from_csv(fh.read())
        n_used = None
    else:
        files = _trace_files(args.traces)
        traces = (_read_trace(f) for f in files)
        if not args.all_paths:
            traces = (t for t in traces if is_viral(t, args.delta))
        used = []

        def counted(it):
            for t in it:
                used.append(1)
                yield t
        try:
            bins = estimate_tef(counted(traces), args.bin_width)
        except ValueError:
            print(f"error: no viral traces (delta={args.delta}) among {len(files)} files", file=sys.stderr)
            return 1
        n_used = len(used)

    os.makedirs(args.out, exist_ok=True)
    write_atomic(os.path.join(args.out, "bins.csv"), bins.to_csv())
    populated = int((bins.transitions >= args.min_transitions).sum())
    if (n_used is not None and n_used < 10) or populated < 10:
        print(f"warning: sparse bins ({n_used if n_used is not None else 'n/a'} traces, "
              f"{populated} bins with >= {args.min_transitions} transitions)", file=sys.stderr)

    est = TwoSlopeTef(min_transitions=args.min_transitions)
    try:
        est.fit_binned(bins, rho=args.rho)
    except TwoSlopeFitError as exc:
        print(f"error: fit failed: {exc}", file=sys.stderr)
        u = exc.unconstrained
        if u is not None:
            print(f"unconstrained: m_bar={u.m_bar!r} kappa1={u.kappa1!r} kappa2={u.kappa2!r} "
                  f"a_bar={u.a_bar!r} sse={u.sse!r}", file=sys.stderr)
        return 1
    write_atomic(os.path.join(args.out, "tef.cfg"), est.params_.to_config())
    total = float(np.sum(bins.transitions[bins.transitions >= args.min_transitions]
                         * (bins.estimate[bins.transitions >= args.min_transitions] / args.rho) ** 2))
    print(f"fit: objective={est.sse_!r} a_bar={est.breakpoint_!r} candidates={est.n_candidates_}")
    print(est.params_.to_config(), end="")
    if est.sse_ <= 1e-20 * max(total, 1.0):
        print("exact recovery: zero residual")
    return 0


def cmd_theory(args) -> int:
    if not args.tef:
        raise UsageError("--tef CONFIG is required")
    p = _load_tef(args.tef, args.rho)
    summ = theory.summarize(p, args.a0)
    os.makedirs(args.out, exist_ok=True)

    n = np.arange(0, int(math.ceil(summ.n_e)) + 1)
    a_n, c_n = theory.shares_at_epoch(n, p, args.a0)
    rows = "".join(f"{k},{a!r},{c!r}\n" for k, a, c in zip(n.tolist(), a_n.tolist(), c_n.tolist()))
    write_atomic(os.path.join(args.out, "theory_epochs.csv"), "n,a_n,c_n\n" + rows)
    if not args.epochs_only:
        t_max = args.t_max if args.t_max is not None else summ.tau_e + 1.0
        t = np.linspace(0.0, t_max, args.t_points)
        a = theory.total_shares(t, p, args.a0)
        c = theory.current_shares(t, p, args.a0)
        rows = "".join(f"{ti!r},{ai!r},{ci!r}\n" for ti, ai, ci in zip(t.tolist(), a.tolist(), c.tolist()))
        write_atomic(os.path.join(args.out, "theory_curve.csv"), "t,a,c\n" + rows)
        write_atomic(os.path.join(args.out, "summary.txt"), summ.to_text())
    print(summ.to_text(), end="")
    return 0


def cmd_compare(args) -> int:
    from .validate import SweepReport, aggregate, compare_trace

    if not args.traces or not args.tef:
        raise UsageError("--traces and --tef are required")
    rows = []
    for d in args.traces:
        meta = _run_meta(d)
        rho = args.rho if args.rho is not None else float(meta.get("rho", 1.0))
        a0 = args.a0 if args.a0 is not None else int(meta.get("seeds", 2))
        p = _load_tef(args.tef, rho)
        files = _trace_files([d])
        reps = []
        for f in files:
            t = _read_trace(f)
            if is_viral(t, args.delta):
                reps.append(compare_trace(t, p, a0, args.delta))
        rows.append(aggregate(rho, len(files), reps))
    report = SweepReport(rows)
    if os.path.isdir(args.out):
        args.out = os.path.join(args.out, "compare_report.csv")
    write_atomic(args.out, report.to_csv())
    text = report.summary()
    write_atomic(os.path.splitext(args.out)[0] + "_summary.txt", text)
    print(text, end="")
    if all(r.inconclusive for r in rows):
        print("error: inconclusive, no viral traces", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stpbp", description=__doc__.splitlines()[0])
    ap.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value file supplying defaults for any option")
        sp.add_argument("--out", help=f"output location (default ${OUT_ENV})")

    sp = sub.add_parser("simulate", help="simulate cascades and write trace CSVs")
    common(sp)
    sp.add_argument("--graph", help="edge-list path (.gz allowed)")
    sp.add_argument("--directed", action="store_true", default=None, help="keep edge direction")
    sp.add_argument("--abstract", action="store_true", default=None, help="graph-free branching process")
    sp.add_argument("--tef", help="TeF key=value file (abstract mode)")
    sp.add_argument("--offspring", choices=["poisson", "binomial"])
    sp.add_argument("--n-max", type=int, dest="n_max", help="binomial trial count")
    sp.add_argument("--rho", type=float, help="attractiveness (forwarding probability)")
    sp.add_argument("--seeds", type=int, help="number of seed users a0 (default 2)")
    sp.add_argument("--runs", type=int, help="number of runs (default 1)")
    sp.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    sp.add_argument("--lam", type=float, help="wake-up rate for timestamps (default 1)")
    sp.add_argument("--max-epochs", type=int, dest="max_epochs")
    sp.add_argument("--jobs", type=int, help="worker processes for graph batches")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", aliases=["fit"], help="estimate binned TeF and fit two slopes")
    common(sp)
    sp.add_argument("--traces", type=lambda s: [x for x in s.split(",") if x],
                    help="comma-separated trace directories")
    sp.add_argument("--bins", help="fit an existing BinnedTef CSV instead")
    sp.add_argument("--bin-width", type=int, dest="bin_width", help="bin width (default 1000)")
    sp.add_argument("--min-transitions", type=int, dest="min_transitions",
                    help="drop bins with fewer transitions from the fit (default 30)")
    sp.add_argument("--delta", type=int, help=f"virality threshold (default {DEFAULT_DELTA})")
    sp.add_argument("--all-paths", action="store_true", default=None, dest="all_paths",
                    help="include non-viral traces")
    sp.add_argument("--rho", type=float, help="divide estimates by rho before fitting (default 1)")
    sp.set_defaults(func=cmd_estimate, command="estimate")

    sp = sub.add_parser("theory", help="closed-form trajectories and summary metrics")
    common(sp)
    sp.add_argument("--tef", help="TeF key=value file")
    sp.add_argument("--rho", type=float, help="override rho from the TeF file")
    sp.add_argument("--a0", type=int, help="seed users (default 2)")
    sp.add_argument("--t-max", type=float, dest="t_max", help="end of the continuous grid")
    sp.add_argument("--t-points", type=int, dest="t_points", help="grid size (default 1001)")
    sp.add_argument("--epochs-only", action="store_true", default=None, dest="epochs_only")
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("compare", help="theory vs simulated traces error report")
    common(sp)
    sp.add_argument("--traces", type=lambda s: [x for x in s.split(",") if x],
                    help="comma-separated trace directories (one per rho)")
    sp.add_argument("--tef", help="network TeF key=value file (rho taken from each run.cfg)")
    sp.add_argument("--rho", type=float, help="override rho for all directories")
    sp.add_argument("--a0", type=int, help="override seed count")
    sp.add_argument("--delta", type=int, help=f"virality threshold (default {DEFAULT_DELTA})")
    sp.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _resolve(args)
        return args.func(args)
    except UsageError as exc:
        ap.error(str(exc))
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
