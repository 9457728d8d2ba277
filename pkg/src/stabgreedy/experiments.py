"""Experiment presets: Power decay rates, f/P accuracy table, point distributions.

Every grid cell is an independent run.  Cells execute in a process pool
capped by ``STABGREEDY_THREADS`` and each writes its own files, so output
does not depend on scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import aggregate_fits, nine_window_rate, rate_table_csv
from .geometry import RNG_NAME, DomainKind, DomainSampler
from .greedy import GreedyConfig, RunTrace, SelectionRule, run
from .interpolant import TargetFunction
from .kernels import parse_kernel, theoretical_power_rate

log = logging.getLogger(__name__)

POWER_DECAY_GAMMAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
FP_GAMMAS = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
FP_ALPHAS = (1.51, 3.5)
POINT_DIST_GAMMAS = (0.0, 0.04, 0.15, 1.0)


def worker_count():
    try:
        cap = int(os.environ.get("STABGREEDY_THREADS", "0"))
    except ValueError:
        cap = 0
    n = os.cpu_count() or 1
    return max(1, min(cap, n) if cap > 0 else n)


def pmap(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def gamma_tag(g):
    return f"{float(g):g}"


def cell_stem(kernel, dim, gamma, seed):
    return f"{kernel.family.value}_d{dim}_g{gamma_tag(gamma)}_s{seed}"


def header_lines(meta):
    return [f"{k}={v}" for k, v in meta.items()]


def write_cell(outdir: Path, stem, model, trace: RunTrace, rate=None, fmt="csv"):
    """Write ``<stem>.trace.{csv,json}``, ``<stem>.model.json`` and optionally ``<stem>.rate.json``."""
    outdir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        trace.to_json(outdir / f"{stem}.trace.json")
    else:
        trace.to_csv(outdir / f"{stem}.trace.csv")
    meta = dict(trace.meta, stop_reason=trace.stop_reason.value)
    (outdir / f"{stem}.model.json").write_text(
        json.dumps({"metadata": meta, **model.to_dict()}, indent=1))
    if rate is not None:
        (outdir / f"{stem}.rate.json").write_text(
            json.dumps({"metadata": meta, **rate}, indent=1))


# -- power decay --------------------------------------------------------------------


@dataclass
class PowerDecayPreset:
    kernels: tuple = ("basic-matern", "linear-matern")
    dims: tuple = (1, 3, 5)
    gammas: tuple = POWER_DECAY_GAMMAS
    seeds: tuple = tuple(range(10))
    n_candidates: int = 30_000
    max_n: int = 800

    @classmethod
    def quick(cls):
        return cls(dims=(1,), seeds=(0, 1, 2), max_n=400)


def _power_decay_cell(args):
    root, kname, dim, gamma, seed, n_cand, max_n = args
    kernel = parse_kernel(kname)
    cand = DomainSampler(DomainKind.UNIT_CUBE, dim, seed).sample(n_cand)
    cfg = GreedyConfig(SelectionRule.RANDOM_RESTRICTED, gamma=gamma, max_n=max_n, seed=seed)
    model, trace = run(cfg, kernel, cand)
    trace.meta["dim"] = dim
    fit = nine_window_rate(trace.column("p_max"), theoretical_power_rate(kernel, dim))
    write_cell(root, cell_stem(kernel, dim, gamma, seed), model, trace, fit.to_dict())
    return fit


def power_decay(out, preset: PowerDecayPreset | None = None):
    """Random restricted-set selection over the (kernel, d, gamma, seed) grid.

    Writes one trace/model/rate triple per cell and, per (kernel, d), a
    ``rates_<kernel>_d<d>.csv`` with the per-gamma mean and spread of slopes.
    """
    p = preset or PowerDecayPreset()
    root = Path(out) / "power-decay"
    root.mkdir(parents=True, exist_ok=True)
    cells = [(root, k, d, g, s, p.n_candidates, p.max_n)
             for k in p.kernels for d in p.dims for g in p.gammas for s in p.seeds]
    results = pmap(_power_decay_cell, cells)
    summary = {}
    for (_, k, d, g, s, *_), fit in zip(cells, results):
        summary.setdefault((k, d), {}).setdefault(g, []).append(fit)
    tables = {}
    for (k, d), per_gamma in summary.items():
        theory = theoretical_power_rate(parse_kernel(k), d)
        rows = [(g, *aggregate_fits(fits), theory) for g, fits in per_gamma.items()]
        name = f"rates_{parse_kernel(k).family.value}_d{d}.csv"
        (root / name).write_text(rate_table_csv(rows))
        tables[(k, d)] = rows
    return tables


# -- f/P accuracy ---------------------------------------------------------------------


@dataclass
class FPAccuracyPreset:
    gammas: tuple = FP_GAMMAS
    alphas: tuple = FP_ALPHAS
    n_train: int = 100_000
    n_test: int = 100_000
    cond_bound: float = 1e14
    cond_every: int = 1
    seed: int = 0
    kernel: str = "linear-matern"
    max_n: int = 5000
    label: str = "reproducing"

    @classmethod
    def quick(cls):
        return cls(n_train=10_000, n_test=10_000, cond_every=10, label="quick (non-reproducing)")


def fp_clouds(preset):
    sampler = DomainSampler(DomainKind.INTERVAL, 1, preset.seed, bounds=(-0.5, 0.5))
    train = sampler.sample(preset.n_train, stream=0)
    test = sampler.sample(preset.n_test, stream=1)
    return train, test


def _fp_cell(args):
    root, preset, alpha, gamma = args
    kernel = parse_kernel(preset.kernel)
    train, test = fp_clouds(preset)
    target = TargetFunction("falpha", {"alpha": alpha})
    cfg = GreedyConfig(SelectionRule.F_OVER_P_GREEDY, gamma=gamma, max_n=preset.max_n,
                       cond_bound=preset.cond_bound, cond_every=preset.cond_every,
                       seed=preset.seed)
    model, trace = run(cfg, kernel, train, target)
    test_res = float(np.max(np.abs(target(test) - model.evaluate(test))))
    trace.meta.update({"alpha": alpha, "profile": preset.label})
    write_cell(root, f"{cell_stem(kernel, 1, gamma, preset.seed)}_a{alpha:g}", model, trace)
    return model.n, test_res, trace.stop_reason.value


def fp_accuracy(out, preset: FPAccuracyPreset | None = None):
    """Stabilized f/P-greedy on ``|x|^alpha exp(-x^2)`` until the condition bound.

    Returns ``{(gamma, alpha): (N_max, test residual, stop reason)}`` and
    writes ``table.csv`` with one row per gamma.
    """
    p = preset or FPAccuracyPreset()
    root = Path(out) / "fp-accuracy"
    root.mkdir(parents=True, exist_ok=True)
    cells = [(root, p, a, g) for a in p.alphas for g in p.gammas]
    table = {(g, a): res for (_, _, a, g), res in zip(cells, pmap(_fp_cell, cells))}
    kernel = parse_kernel(p.kernel)
    buf = io.StringIO()
    buf.write(f"# kernel={kernel.descriptor()}\n# rule=fp\n# cond_bound={p.cond_bound!r}\n")
    buf.write(f"# n_train={p.n_train}\n# n_test={p.n_test}\n# seed={p.seed}\n# rng={RNG_NAME}\n")
    buf.write(f"# profile={p.label}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma"] + [c for a in p.alphas for c in (f"n_max_a{a:g}", f"r_max_a{a:g}")])
    for g in p.gammas:
        row = [repr(float(g))]
        for a in p.alphas:
            n, res, _ = table[(g, a)]
            row += [n, repr(res)]
        w.writerow(row)
    (root / "table.csv").write_text(buf.getvalue())
    return table


def read_fp_table(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return rows


# -- point distributions ----------------------------------------------------------------


@dataclass
class PointDistPreset:
    gammas: tuple = POINT_DIST_GAMMAS
    n_domain: int = 831
    n_points: int = 50
    seed: int = 0
    kernel: str = "linear-matern"
    hole_center: tuple = field(default=(0.17, 0.17))


def point_dist(out, preset: PointDistPreset | None = None):
    """Stabilized f/P-greedy on the blob-with-hole domain for several gammas.

    Writes ``domain.csv`` and one ``selected_g<gamma>.csv`` per gamma;
    returns ``{gamma: selected coordinates}``.
    """
    p = preset or PointDistPreset()
    root = Path(out) / "point-dist"
    root.mkdir(parents=True, exist_ok=True)
    kernel = parse_kernel(p.kernel)
    domain = DomainSampler(DomainKind.BLOB_WITH_HOLE, 2, p.seed).sample(p.n_domain)
    domain.to_csv(root / "domain.csv", comments=[f"seed={p.seed}", f"rng={RNG_NAME}",
                                                  f"n={p.n_domain}"])
    target = TargetFunction("inverse-square", {"a": p.hole_center})
    selected = {}
    for g in p.gammas:
        cfg = GreedyConfig(SelectionRule.F_OVER_P_GREEDY, gamma=g, max_n=p.n_points, seed=p.seed)
        model, trace = run(cfg, kernel, domain, target)
        write_cell(root, cell_stem(kernel, 2, g, p.seed), model, trace)
        model.centers.to_csv(root / f"selected_g{gamma_tag(g)}.csv",
                             comments=header_lines(dict(trace.meta, stop_reason=trace.stop_reason.value)))
        selected[g] = model.center_coords.copy()
    return selected
