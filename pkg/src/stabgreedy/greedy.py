"""Gamma-restricted greedy selection and the main greedy loop.

At every step only candidates whose Power value is at least ``gamma`` times
the current maximum are admissible; the selection rule picks among them.
``gamma = 1`` reduces every rule to P-greedy, ``gamma = 0`` removes the
restriction (the unstabilized algorithms).
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllPowerZero, ConfigError, NumericallySingular
from .geometry import RNG_NAME, DistanceTracker, make_rng
from .interpolant import PIVOT_FLOOR, GreedyModel, TargetFunction
from .kernels import Kernel


class SelectionRule(str, enum.Enum):
    P_GREEDY = "p"
    F_GREEDY = "f"
    F_OVER_P_GREEDY = "fp"
    RANDOM_RESTRICTED = "random"

    @property
    def needs_target(self):
        return self in (SelectionRule.F_GREEDY, SelectionRule.F_OVER_P_GREEDY)

    @classmethod
    def parse(cls, name):
        aliases = {"pgreedy": "p", "p-greedy": "p", "fgreedy": "f", "f-greedy": "f",
                   "fpgreedy": "fp", "f/p": "fp", "fp-greedy": "fp", "rand": "random"}
        key = str(name).strip().lower()
        return cls(aliases.get(key, key))


class StopReason(str, enum.Enum):
    MAX_N = "MaxN"
    POWER_TOL = "PowerTol"
    RESIDUAL_TOL = "ResidualTol"
    COND_BOUND = "CondBound"
    EXHAUSTED = "Exhausted"


@dataclass
class GreedyConfig:
    """Settings of one greedy run.

    Zero tolerances are disabled.  ``cond_bound=None`` disables condition
    tracking unless ``track_cond`` is set; ``cond_every`` evaluates the (dense, O(N^3)) condition number only
    every that many steps.
    """

    rule: SelectionRule = SelectionRule.P_GREEDY
    gamma: float = 1.0
    max_n: int = 100
    power_tol: float = 0.0
    residual_tol: float = 0.0
    cond_bound: float | None = None
    seed: int = 0
    track_cond: bool = False
    cond_every: int = 1

    def __post_init__(self):
        self.rule = SelectionRule.parse(self.rule) if not isinstance(self.rule, SelectionRule) else self.rule
        if not 0.0 <= self.gamma <= 1.0 or math.isnan(self.gamma):
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.max_n < 1:
            raise ConfigError("max_n must be positive")
        if self.power_tol < 0 or self.residual_tol < 0:
            raise ConfigError("tolerances must be nonnegative")
        if self.cond_bound is not None and not self.cond_bound > 1.0:
            raise ConfigError("cond_bound must exceed 1")
        if self.cond_every < 1:
            raise ConfigError("cond_every must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def stabilized(self):
        return self.gamma > 0.0

    @property
    def tracks_cond(self):
        return self.track_cond or self.cond_bound is not None


TRACE_COLUMNS = ("n", "chosen_index", "p_max", "r_max", "fill", "sep",
                 "lambda_min_upper", "cond", "restricted_size")


@dataclass
class TraceRow:
    n: int
    chosen_index: int
    coords: tuple
    p_max: float
    r_max: float | None
    fill: float
    sep: float | None
    lambda_min_upper: float
    cond: float | None
    restricted_size: int
    power_at_choice: float = float("nan")
    lambda_min: float | None = None


@dataclass
class RunTrace:
    """Per-iteration record of a greedy run."""

    dim: int
    rows: list = field(default_factory=list)
    stop_reason: StopReason | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.rows], dtype=float)

    @property
    def indices(self):
        return [r.chosen_index for r in self.rows]

    @property
    def columns(self):
        return (["n", "chosen_index"] + [f"x{i}" for i in range(self.dim)]
                + ["p_max", "r_max", "fill", "sep", "lambda_min_upper", "cond",
                   "restricted_size"])

    def to_csv(self, path=None):
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}={v}\n")
        buf.write(f"# stop_reason={self.stop_reason.value if self.stop_reason else ''}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([r.n, r.chosen_index, *[_fmt(c) for c in r.coords], _fmt(r.p_max),
                        _fmt(r.r_max), _fmt(r.fill), _fmt(r.sep), _fmt(r.lambda_min_upper),
                        _fmt(r.cond), r.restricted_size])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text):
        text = _text(path_or_text)
        meta, body = {}, []
        for ln in text.splitlines():
            if ln.startswith("#"):
                k, _, v = ln[1:].strip().partition("=")
                meta[k] = v
            elif ln.strip():
                body.append(ln)
        rows = list(csv.reader(body))
        header = rows[0]
        dim = sum(1 for h in header if h.startswith("x"))
        stop = meta.pop("stop_reason", "")
        trace = cls(dim, meta=meta, stop_reason=StopReason(stop) if stop else None)
        for r in rows[1:]:
            rec = dict(zip(header, r))
            trace.rows.append(TraceRow(
                n=int(rec["n"]), chosen_index=int(rec["chosen_index"]),
                coords=tuple(float(rec[f"x{i}"]) for i in range(dim)),
                p_max=float(rec["p_max"]), r_max=_opt(rec["r_max"]), fill=float(rec["fill"]),
                sep=_opt(rec["sep"]), lambda_min_upper=float(rec["lambda_min_upper"]),
                cond=_opt(rec["cond"]), restricted_size=int(rec["restricted_size"])))
        return trace

    def to_dict(self):
        meta = dict(self.meta)
        meta["stop_reason"] = self.stop_reason.value if self.stop_reason else None
        rows = []
        for r in self.rows:
            d = {"n": r.n, "chosen_index": r.chosen_index}
            d.update({f"x{i}": c for i, c in enumerate(r.coords)})
            d.update({k: getattr(r, k) for k in TRACE_COLUMNS[2:]})
            rows.append(d)
        return {"metadata": meta, "rows": rows}

    def to_json(self, path=None):
        text = json.dumps(_jsonable(self.to_dict()), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, path_or_text):
        d = json.loads(_text(path_or_text))
        meta = dict(d["metadata"])
        stop = meta.pop("stop_reason", None)
        dim = sum(1 for k in (d["rows"][0] if d["rows"] else {}) if k.startswith("x"))
        trace = cls(dim, meta=meta, stop_reason=StopReason(stop) if stop else None)
        for r in d["rows"]:
            trace.rows.append(TraceRow(
                n=r["n"], chosen_index=r["chosen_index"],
                coords=tuple(r[f"x{i}"] for i in range(dim)),
                **{k: _unjson(r[k]) for k in TRACE_COLUMNS[2:]}))
        return trace


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def _opt(s):
    return None if s == "" else float(s)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _unjson(v):
    if isinstance(v, str):
        return float(v)
    return v


def _text(path_or_text):
    from .geometry import _read_text
    return _read_text(path_or_text)


# -- selection ----------------------------------------------------------------------


def restricted_set(power_sq, gamma):
    """Indices whose Power value is at least ``gamma`` times the maximum."""
    p2 = np.asarray(power_sq, dtype=float)
    top = float(np.max(p2))
    if not top > 0.0:
        raise AllPowerZero("Power function vanishes on all candidates")
    if gamma <= 0.0:
        return np.arange(p2.shape[0])
    # compare squares: P >= gamma * max P  <=>  P^2 >= gamma^2 * max P^2
    return np.flatnonzero(p2 >= gamma * gamma * top)


def _admissible(model: GreedyModel, gamma):
    if gamma <= 0.0:
        mask = (model.power_sq > PIVOT_FLOOR) & ~model.selected
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise AllPowerZero("no candidate left with nonzero Power value")
        return idx
    idx = restricted_set(model.power_sq, gamma)
    idx = idx[model.power_sq[idx] > PIVOT_FLOOR]
    if idx.size == 0:
        raise AllPowerZero("Power function vanishes on all candidates")
    return idx


def select_next(model: GreedyModel, rule, gamma, rng=None):
    """Index of the next center; ties go to the lowest candidate index."""
    return _select(model, SelectionRule.parse(rule) if not isinstance(rule, SelectionRule) else rule,
                   gamma, rng)[0]


def _select(model, rule, gamma, rng):
    idx = _admissible(model, gamma)
    if rule is SelectionRule.P_GREEDY:
        crit = model.power_sq[idx]
    elif rule is SelectionRule.RANDOM_RESTRICTED:
        if rng is None:
            raise ConfigError("random-restricted selection needs a generator")
        return int(idx[rng.integers(idx.size)]), idx.size
    else:
        if model.f_values is None:
            raise ConfigError(f"rule {rule.value!r} needs a target function")
        r = np.abs(model.residuals[idx])
        crit = r if rule is SelectionRule.F_GREEDY else r / np.sqrt(model.power_sq[idx])
    # np.argmax returns the first maximum, idx is sorted
    return int(idx[int(np.argmax(crit))]), idx.size


# -- main loop --------------------------------------------------------------------------


def run(config: GreedyConfig, kernel: Kernel, candidates, target: TargetFunction | None = None,
        model: GreedyModel | None = None, first: int | None = None):
    """Run the greedy loop; returns ``(model, trace)``.

    ``first`` fixes the initial center.  At ``N = 0`` the Power function is
    constant, so every candidate ties and each rule resolves the tie its
    own way.  Numerical breakdown ends the run with a stop reason rather
    than an error.
    """
    if config.rule.needs_target and target is None:
        raise ConfigError(f"rule {config.rule.value!r} needs a target function")
    if config.residual_tol > 0 and target is None:
        raise ConfigError("residual_tol needs a target function")
    if model is None:
        cap = config.max_n if config.cond_bound is None else None
        model = GreedyModel(kernel, candidates, target, capacity=cap)
    rng = make_rng(config.seed, 0x5E1)
    tracker = DistanceTracker(model.candidates)
    for i in model.center_indices:
        tracker.add(model.candidates[i])
    trace = RunTrace(model.dim, meta={
        "kernel": kernel.descriptor(),
        "gamma": repr(float(config.gamma)),
        "rule": config.rule.value,
        "seed": int(config.seed),
        "rng": RNG_NAME,
        "stabilized": config.stabilized,
        "candidates": len(model.candidates),
    })
    cond = None
    stop = None
    while stop is None:
        if model.n >= config.max_n:
            stop = StopReason.MAX_N
            break
        try:
            if first is not None and model.n == 0:
                m, rsize = int(first), len(model.candidates)
            else:
                m, rsize = _select(model, config.rule, config.gamma, rng)
            p_choice = float(np.sqrt(model.power_sq[m]))
            model.add_center(m)
        except (AllPowerZero, NumericallySingular):
            stop = StopReason.EXHAUSTED
            break
        tracker.add(model.candidates[m])
        lam_min = None
        if config.tracks_cond and (model.n % config.cond_every == 0 or model.n == config.max_n):
            diag = model.condition_diagnostics()
            cond, lam_min = diag["cond"], diag["lambda_min"]
        p_max = model.power_max()
        r_max = model.residual_max()
        trace.rows.append(TraceRow(
            n=model.n, chosen_index=m, coords=tuple(float(c) for c in model.candidates[m]),
            p_max=p_max, r_max=r_max, fill=tracker.fill,
            sep=tracker.sep if model.n >= 2 else None,
            lambda_min_upper=float(model.lambda_min_upper),
            cond=cond if config.tracks_cond else None, restricted_size=int(rsize),
            power_at_choice=p_choice, lambda_min=lam_min))
        if config.cond_bound is not None and cond is not None and cond >= config.cond_bound:
            stop = StopReason.COND_BOUND
        elif config.power_tol > 0 and p_max <= config.power_tol:
            stop = StopReason.POWER_TOL
        elif config.residual_tol > 0 and r_max is not None and r_max <= config.residual_tol:
            stop = StopReason.RESIDUAL_TOL
    trace.stop_reason = stop
    return model, trace


def config_dict(config: GreedyConfig):
    d = asdict(config)
    d["rule"] = config.rule.value
    return d
