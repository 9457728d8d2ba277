"""Command-line interface.

Exit codes: 0 on any normal termination, 2 on invalid flags, 3 on I/O errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import nine_window_rate
from .errors import StabGreedyError
from .experiments import (FPAccuracyPreset, PointDistPreset, PowerDecayPreset, cell_stem,
                          fp_accuracy, point_dist, power_decay, write_cell)
from .geometry import DomainKind, DomainSampler, PointCloud
from .greedy import GreedyConfig, SelectionRule, run
from .interpolant import TargetFunction, parse_target
from .kernels import parse_kernel, theoretical_power_rate

log = logging.getLogger("stabgreedy")


class UsageError(Exception):
    pass


def _float_list(s):
    return tuple(float(v) for v in s.split(",") if v)


def _int_list(s):
    return tuple(int(v) for v in s.split(",") if v)


def build_parser():
    ap = argparse.ArgumentParser(prog="stabgreedy", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="single greedy run")
    r.add_argument("--kernel", default="linear-matern", help="name[:eps]")
    r.add_argument("--rule", default="p", choices=["p", "f", "fp", "random"])
    r.add_argument("--gamma", type=float, default=1.0)
    r.add_argument("--dim", type=int, default=1)
    r.add_argument("--domain", default="unit-cube",
                   help="unit-cube | interval:LO,HI | blob (for generated candidates)")
    r.add_argument("--candidates", default="10000", help="count or CSV file")
    r.add_argument("--target", default=None, help="builtin[:params] or CSV file of values")
    r.add_argument("--max-n", type=int, default=1000)
    r.add_argument("--power-tol", type=float, default=0.0)
    r.add_argument("--residual-tol", type=float, default=0.0)
    r.add_argument("--cond-bound", type=float, default=None)
    r.add_argument("--cond-every", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="out")
    r.add_argument("--format", default="csv", choices=["csv", "json"])

    pd = sub.add_parser("power-decay", help="Power-function decay rates over a gamma grid")
    pd.add_argument("--quick", action="store_true", help="d=1 only, 3 seeds, N=400")
    pd.add_argument("--kernels", default=None)
    pd.add_argument("--dims", type=_int_list, default=None)
    pd.add_argument("--gammas", type=_float_list, default=None)
    pd.add_argument("--seeds", type=_int_list, default=None)
    pd.add_argument("--candidates", type=int, default=None)
    pd.add_argument("--max-n", type=int, default=None)
    pd.add_argument("--out", default="out")

    fp = sub.add_parser("fp-accuracy", help="stabilized f/P-greedy accuracy table")
    fp.add_argument("--quick", action="store_true",
                    help="1e4 points, condition check every 10 steps (non-reproducing)")
    fp.add_argument("--gammas", type=_float_list, default=None)
    fp.add_argument("--alphas", type=_float_list, default=None)
    fp.add_argument("--seed", type=int, default=0)
    fp.add_argument("--out", default="out")

    pt = sub.add_parser("point-dist", help="selected points on the blob-with-hole domain")
    pt.add_argument("--gammas", type=_float_list, default=None)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--n-points", type=int, default=50)
    pt.add_argument("--out", default="out")
    return ap


def _sampler(domain, dim, seed):
    name, _, arg = domain.partition(":")
    if name == "unit-cube":
        return DomainSampler(DomainKind.UNIT_CUBE, dim, seed)
    if name == "interval":
        lo, hi = (float(v) for v in arg.split(",")) if arg else (0.0, 1.0)
        return DomainSampler(DomainKind.INTERVAL, dim, seed, bounds=(lo, hi))
    if name == "blob":
        return DomainSampler(DomainKind.BLOB_WITH_HOLE, 2, seed)
    raise UsageError(f"unknown domain {domain!r}")


def _read_values(path):
    vals = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            vals.append(float(ln.split(",")[0]))
        except ValueError:
            continue  # header
    return TargetFunction.tabulated(vals)


def cmd_run(args):
    try:
        kernel = parse_kernel(args.kernel)
        rule = SelectionRule.parse(args.rule)
        cfg = GreedyConfig(rule, gamma=args.gamma, max_n=args.max_n, power_tol=args.power_tol,
                           residual_tol=args.residual_tol, cond_bound=args.cond_bound,
                           cond_every=args.cond_every, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if rule.needs_target and args.target is None:
        raise UsageError(f"--rule {args.rule} needs --target")
    if args.candidates.isdigit():
        cand = _sampler(args.domain, args.dim, args.seed).sample(int(args.candidates))
    else:
        text = Path(args.candidates).read_text()
        try:
            cand = PointCloud.from_csv(text)
        except ValueError as exc:
            raise UsageError(f"cannot parse {args.candidates}: {exc}") from exc
    target = None
    if args.target is not None:
        try:
            target = parse_target(args.target)
        except ValueError:
            if not Path(args.target).exists():
                raise UsageError(f"unknown target {args.target!r}") from None
            target = _read_values(args.target)
    model, trace = run(cfg, kernel, cand, target)
    trace.meta["dim"] = cand.dim
    rate = None
    theory = theoretical_power_rate(kernel, cand.dim)
    if len(trace) >= 16:
        rate = nine_window_rate(trace.column("p_max"), theory).to_dict()
    stem = cell_stem(kernel, cand.dim, args.gamma, args.seed)
    write_cell(Path(args.out) / "run", stem, model, trace, rate, fmt=args.format)
    last = trace.rows[-1] if trace.rows else None
    r_max = "" if last is None or last.r_max is None else f"{last.r_max:.6e}"
    p_max = "" if last is None else f"{last.p_max:.6e}"
    print(f"N_max={model.n} stop_reason={trace.stop_reason.value} p_max={p_max} r_max={r_max}")
    return 0


def cmd_power_decay(args):
    p = PowerDecayPreset.quick() if args.quick else PowerDecayPreset()
    if args.kernels:
        p.kernels = tuple(args.kernels.split(","))
    for name in ("dims", "gammas", "seeds"):
        if getattr(args, name) is not None:
            setattr(p, name, getattr(args, name))
    if args.candidates is not None:
        p.n_candidates = args.candidates
    if args.max_n is not None:
        p.max_n = args.max_n
    tables = power_decay(args.out, p)
    for (k, d), rows in tables.items():
        for g, mean, std, theory in rows:
            print(f"{k} d={d} gamma={g:g} slope={mean:.4f}+-{std:.4f} theory={theory:.4f}")
    return 0


def cmd_fp_accuracy(args):
    p = FPAccuracyPreset.quick() if args.quick else FPAccuracyPreset()
    if args.gammas is not None:
        p.gammas = args.gammas
    if args.alphas is not None:
        p.alphas = args.alphas
    p.seed = args.seed
    table = fp_accuracy(args.out, p)
    for (g, a), (n, res, stop) in sorted(table.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"alpha={a:g} gamma={g:g} N_max={n} r_max={res:.3e} stop_reason={stop}")
    return 0


def cmd_point_dist(args):
    p = PointDistPreset(seed=args.seed, n_points=args.n_points)
    if args.gammas is not None:
        p.gammas = args.gammas
    selected = point_dist(args.out, p)
    a = np.asarray(p.hole_center)
    for g, pts in selected.items():
        print(f"gamma={g:g} points={len(pts)} "
              f"mean_dist_to_a={np.mean(np.linalg.norm(pts - a, axis=1)):.4f}")
    return 0


COMMANDS = {"run": cmd_run, "power-decay": cmd_power_decay,
            "fp-accuracy": cmd_fp_accuracy, "point-dist": cmd_point_dist}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"stabgreedy: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"stabgreedy: I/O error: {exc}", file=sys.stderr)
        return 3
    except (StabGreedyError, json.JSONDecodeError) as exc:
        print(f"stabgreedy: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
