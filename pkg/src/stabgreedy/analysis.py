"""Decay-rate estimation by windowed log-log least squares."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveValue, WindowOutOfRange
from .kernels import Kernel, theoretical_power_rate

CANONICAL_STARTS = (50, 75, 100)
CANONICAL_ENDS = (600, 700, 800)


def fit_loglog(values, window):
    """Least-squares fit ``log v_n = intercept + slope * log n`` over ``n in [a, b]``.

    ``values[0]`` belongs to ``n = 1``.
    """
    v = np.asarray(values, dtype=float)
    a, b = int(window[0]), int(window[1])
    if a < 1 or b > v.shape[0] or b <= a:
        raise WindowOutOfRange(f"window [{a}, {b}] outside 1..{v.shape[0]}")
    seg = v[a - 1:b]
    if np.any(~(seg > 0)):
        raise NonPositiveValue("log-log fit needs strictly positive values")
    n = np.arange(a, b + 1, dtype=float)
    slope, intercept = np.polyfit(np.log(n), np.log(seg), 1)
    return float(intercept), float(slope)


def canonical_windows(length):
    """The nine fit windows; scaled down proportionally for runs shorter than 800."""
    if length >= CANONICAL_ENDS[-1]:
        return [(a, b) for a in CANONICAL_STARTS for b in CANONICAL_ENDS]
    N = int(length)
    starts = [math.ceil(N / 16), math.ceil(3 * N / 32), math.ceil(N / 8)]
    ends = [math.ceil(3 * N / 4), math.ceil(7 * N / 8), N]
    return [(max(a, 1), b) for a in starts for b in ends]


@dataclass
class RateFit:
    windows: list
    intercepts: list
    slopes: list
    theory: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def mean_slope(self):
        return float(np.mean(self.slopes))

    @property
    def std_slope(self):
        # sample standard deviation
        return float(np.std(self.slopes, ddof=1)) if len(self.slopes) > 1 else 0.0

    def to_dict(self, tolerance=None):
        d = {"windows": [list(w) for w in self.windows], "intercepts": self.intercepts,
             "slopes": self.slopes, "mean": self.mean_slope, "std": self.std_slope,
             "theory": self.theory}
        if tolerance is not None and self.theory is not None:
            d["tolerance"] = tolerance
            d["verdict"] = "pass" if abs(self.mean_slope - self.theory) <= tolerance else "fail"
        d.update(self.extra)
        return d

    def to_json(self, tolerance=None):
        return json.dumps(self.to_dict(tolerance), indent=1)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls([tuple(w) for w in d["windows"]], d["intercepts"], d["slopes"], d.get("theory"))


def fit_windows(values, windows):
    fits = [fit_loglog(values, w) for w in windows]
    return RateFit(list(windows), [f[0] for f in fits], [f[1] for f in fits])


def nine_window_rate(values, theory=None):
    """Mean and spread of the slopes over the nine canonical windows."""
    fit = fit_windows(values, canonical_windows(len(values)))
    fit.theory = theory
    return fit


def sandwich_verdict(rate_fit: RateFit, kernel: Kernel, dim: int, tolerance: float):
    """Compare the fitted mean slope with the proven exponent ``1/2 - tau/d``.

    Upper and lower bounds share that exponent; their constants are unknown
    and not checked.
    """
    theory = theoretical_power_rate(kernel, dim)
    if theory is None:
        raise ValueError("sandwich verdict needs a kernel of finite smoothness")
    dev = rate_fit.mean_slope - theory
    ok = abs(dev) <= tolerance
    report = {
        "kernel": kernel.descriptor(), "dim": dim,
        "upper_bound_exponent": theory, "lower_bound_exponent": theory,
        "mean_slope": rate_fit.mean_slope, "std_slope": rate_fit.std_slope,
        "deviation": dev, "tolerance": tolerance, "verdict": "pass" if ok else "fail",
    }
    return ok, report


def aggregate_fits(fits):
    """Pool the slopes of several runs (e.g. seeds) into one mean/std."""
    slopes = np.concatenate([np.asarray(f.slopes, dtype=float) for f in fits])
    return float(np.mean(slopes)), float(np.std(slopes, ddof=1)) if slopes.size > 1 else 0.0


def rate_table_csv(rows):
    """Plot-ready CSV with columns gamma, mean_slope, std_slope, theory."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "mean_slope", "std_slope", "theory"])
    for g, mean, std, theory in rows:
        w.writerow([repr(float(g)), repr(float(mean)), repr(float(std)),
                    "" if theory is None else repr(float(theory))])
    return buf.getvalue()


def exponential_fit(values, dim, window):
    """Fit ``log v_n = c - lam * n^(1/d)`` (diagnostic for the Gaussian only)."""
    v = np.asarray(values, dtype=float)
    a, b = window
    if a < 1 or b > v.shape[0] or b <= a:
        raise WindowOutOfRange(f"window [{a}, {b}] outside 1..{v.shape[0]}")
    n = np.arange(a, b + 1, dtype=float)
    slope, intercept = np.polyfit(n ** (1.0 / dim), np.log(v[a - 1:b]), 1)
    return float(intercept), float(-slope)
