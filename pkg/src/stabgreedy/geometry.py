"""Point clouds, domain samplers and distance diagnostics.

Fill distances are *discrete*: the supremum runs over a candidate
discretization of the domain, never over the continuous set.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import (DimensionMismatch, DuplicatePoints, EmptySet,
                     RejectionBudgetExceeded, TooFewPoints)

RNG_NAME = "numpy.random.PCG64"

# blob-with-hole domain
BLOB_SHIFT = np.array([0.1, 0.0])
HOLE_CENTER = np.array([0.17, 0.17])
HOLE_RADIUS_SQ = 0.003
BLOB_BOX = ((-0.7, 0.9), (-0.8, 0.8))


def make_rng(seed, *stream):
    """Seeded generator; ``stream`` keys select independent child streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


class PointCloud:
    """Immutable ordered set of ``N`` points in ``R^d``.

    Parameters
    ----------
    coords
        Array of shape ``(N, d)``; a 1-D array is read as ``N`` points in ``R^1``.
    distinct
        Reject clouds containing coincident points.
    """

    def __init__(self, coords, labels=None, distinct=False):
        c = np.array(coords, dtype=float)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ValueError(f"coordinates must have shape (N, d), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("point coordinates must be finite")
        c.flags.writeable = False
        self._coords = c
        self.labels = None if labels is None else list(labels)
        if distinct and not self.is_distinct():
            raise DuplicatePoints("point cloud contains coincident points")

    @property
    def coords(self):
        return self._coords

    @property
    def dim(self):
        return self._coords.shape[1]

    def __len__(self):
        return self._coords.shape[0]

    def __getitem__(self, idx):
        return self._coords[idx]

    def __repr__(self):
        return f"PointCloud(n={len(self)}, dim={self.dim})"

    def is_distinct(self):
        if len(self) < 2:
            return True
        return np.unique(self._coords, axis=0).shape[0] == len(self)

    def subset(self, indices):
        return PointCloud(self._coords[np.asarray(indices, dtype=int)])

    # -- serialization --------------------------------------------------------

    def to_csv(self, path=None, comments=None):
        buf = io.StringIO()
        for line in comments or ():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.dim)])
        for row in self._coords:
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text):
        text = _read_text(path_or_text)
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        header, body = rows[0], rows[1:]
        if not all(h.strip().startswith("x") for h in header):
            raise ValueError(f"unexpected point-cloud header {header!r}")
        coords = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, len(header))
        return cls(coords)

    def to_json(self):
        return json.dumps({"dim": self.dim, "points": self._coords.tolist()})

    @classmethod
    def from_json(cls, path_or_text):
        d = json.loads(_read_text(path_or_text))
        coords = np.array(d["points"], dtype=float).reshape(-1, int(d["dim"]))
        return cls(coords)


def _read_text(path_or_text):
    s = str(path_or_text)
    if "\n" not in s and os.path.exists(s):
        with open(s) as fh:
            return fh.read()
    return s


def _coords(points):
    if isinstance(points, PointCloud):
        return points.coords
    c = np.asarray(points, dtype=float)
    return c.reshape(-1, 1) if c.ndim == 1 else c


# -- samplers -------------------------------------------------------------------


class DomainKind(str, enum.Enum):
    UNIT_CUBE = "unit-cube"
    BLOB_WITH_HOLE = "blob-with-hole"
    INTERVAL = "interval"


def blob_radius(phi):
    """Boundary radius of the blob as a function of the angle argument."""
    phi = np.asarray(phi, dtype=float)
    return 0.35 * (np.cos(np.pi * (phi / np.pi) ** 2) + 2.0) * (0.15 * np.cos(phi) ** 2 + 0.3)


def in_blob_with_hole(points):
    """Membership predicate of the blob-with-hole domain (2-D)."""
    x = _coords(points)
    u = x - BLOB_SHIFT
    theta = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2.0 * np.pi)
    inside = np.hypot(u[:, 0], u[:, 1]) < blob_radius(theta + np.pi)
    outside_hole = np.sum((x - HOLE_CENTER) ** 2, axis=1) > HOLE_RADIUS_SQ
    return inside & outside_hole


@dataclass(frozen=True)
class DomainSampler:
    """Uniform sampler on one of the experimental domains.

    ``interval`` samples ``[low, high]^d`` (``bounds``); ``unit-cube`` is
    ``[0, 1]^d``; ``blob-with-hole`` is 2-D and uses rejection sampling.
    """

    kind: DomainKind
    dim: int = 1
    seed: int = 0
    bounds: tuple = field(default=(0.0, 1.0))

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.kind is DomainKind.BLOB_WITH_HOLE:
            object.__setattr__(self, "dim", 2)
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def sample(self, n, stream=0):
        return sample(self, n, stream)


def sample(sampler: DomainSampler, n: int, stream: int = 0) -> PointCloud:
    """Draw ``n`` uniform points, reproducibly from ``(seed, stream)``."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    rng = make_rng(sampler.seed, 0xD0, stream)
    if sampler.kind is DomainKind.UNIT_CUBE:
        return PointCloud(rng.random((n, sampler.dim)))
    if sampler.kind is DomainKind.INTERVAL:
        lo, hi = sampler.bounds
        return PointCloud(lo + (hi - lo) * rng.random((n, sampler.dim)))
    lows = np.array([b[0] for b in BLOB_BOX])
    widths = np.array([b[1] - b[0] for b in BLOB_BOX])
    accepted, drawn = [], 0
    count = 0
    while count < n:
        batch = max(256, 2 * (n - count))
        cand = lows + widths * rng.random((batch, 2))
        drawn += batch
        keep = cand[in_blob_with_hole(cand)]
        accepted.append(keep)
        count += keep.shape[0]
        if drawn >= 10**6 and count < 1e-4 * drawn:
            raise RejectionBudgetExceeded(f"acceptance rate {count / drawn:.2e} below 1e-4")
    return PointCloud(np.concatenate(accepted)[:n])


# -- distances --------------------------------------------------------------------


def min_distances(candidates, centers):
    """Distance from every candidate to its nearest center."""
    cand, cent = _coords(candidates), _coords(centers)
    if cand.shape[0] == 0 or cent.shape[0] == 0:
        raise EmptySet("fill distance needs nonempty candidate and center sets")
    if cand.shape[1] != cent.shape[1]:
        raise DimensionMismatch(f"dimension {cand.shape[1]} vs {cent.shape[1]}")
    d, _ = cKDTree(cent).query(cand, k=1)
    return np.asarray(d, dtype=float)


def fill_distance(candidates, centers) -> float:
    """Discrete fill distance ``max_x min_j ||x - x_j||`` over the candidates."""
    return float(np.max(min_distances(candidates, centers)))


def separation_distance(points) -> float:
    """Smallest pairwise distance among ``points``."""
    x = _coords(points)
    if x.shape[0] < 2:
        raise TooFewPoints("separation distance needs at least two points")
    if x.shape[0] <= 2000:
        return float(np.min(pdist(x)))
    d, _ = cKDTree(x).query(x, k=2)
    return float(np.min(d[:, 1]))


def uniformity_constant(candidates, centers) -> float:
    """Ratio of fill distance to separation distance."""
    return fill_distance(candidates, centers) / separation_distance(centers)


class DistanceTracker:
    """Incremental fill/separation distances for a growing center set.

    Each ``add`` costs ``O(M + N)`` instead of a full recomputation.
    """

    def __init__(self, candidates):
        self._cand = _coords(candidates)
        self._mind = np.full(self._cand.shape[0], np.inf)
        self._centers = []
        self.sep = math.inf

    def add(self, point):
        p = np.asarray(point, dtype=float).reshape(-1)
        if self._centers:
            prev = np.asarray(self._centers)
            self.sep = min(self.sep, float(np.min(np.sqrt(np.sum((prev - p) ** 2, axis=1)))))
        self._centers.append(p)
        d = np.sqrt(np.sum((self._cand - p) ** 2, axis=1))
        np.minimum(self._mind, d, out=self._mind)

    @property
    def fill(self):
        return float(np.max(self._mind))
