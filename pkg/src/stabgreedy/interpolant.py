"""Incremental kernel interpolation in the Newton basis.

The model keeps, for a fixed candidate set ``x_1..x_M``, the values of the
Newton basis functions ``v_1..v_N`` at every candidate.  Adding a center
``x_m`` appends one basis function

    v_{N+1}(x) = (k(x, x_m) - sum_j v_j(x) v_j(x_m)) / P_N(x_m)

and updates the squared Power function and the interpolant in ``O(M N)``.
The lower-triangular matrix of Newton values at the centers is a Cholesky
factor of the kernel matrix, ``A = L L^T``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (ConfigError, DimensionMismatch, DuplicatePoints,
                     NumericallySingular, UnsupportedDerivative)
from .geometry import PointCloud, _coords
from .kernels import Kernel, Family, kernel_from_dict

PIVOT_FLOOR = 1e-14
"""Squared Power values at or below this are treated as numerically zero."""

_GROW = 256


# -- target functions -----------------------------------------------------------


def f_alpha(x, alpha):
    """``|x|^alpha * exp(-x^2)`` (first coordinate of 1-D points)."""
    t = _coords(x)[:, 0]
    return np.abs(t) ** alpha * np.exp(-t * t)


def inverse_square(x, a=(0.17, 0.17)):
    x = _coords(x)
    return 1.0 / np.sum((x - np.asarray(a, dtype=float)) ** 2, axis=1)


def motivating(x):
    """``-x + x^2 + (1 + x) exp(-x)``: equals ``-x + x^2 + k(x, 0)`` on ``x >= 0``."""
    t = _coords(x)[:, 0]
    return -t + t * t + (1.0 + np.abs(t)) * np.exp(-np.abs(t))


@dataclass
class TargetFunction:
    """Function to interpolate, either a named builtin or values on the candidates.

    Builtins are ``falpha`` (param ``alpha``), ``inverse-square`` (param ``a``),
    ``motivating`` and ``translates`` (params ``kernel``, ``centers``,
    ``weights``: a finite combination of kernel translates).
    """

    name: str
    params: dict = field(default_factory=dict)
    values: np.ndarray | None = None

    @classmethod
    def tabulated(cls, values):
        return cls("tabulated", values=np.asarray(values, dtype=float).reshape(-1))

    @classmethod
    def translates(cls, kernel, centers, weights):
        return cls("translates", {"kernel": kernel, "centers": _coords(centers).copy(),
                                  "weights": np.asarray(weights, dtype=float).reshape(-1)})

    @property
    def is_tabulated(self):
        return self.values is not None

    def __call__(self, points):
        if self.is_tabulated:
            raise ValueError("a tabulated target can only be read on its candidate set")
        x = _coords(points)
        if self.name == "falpha":
            return f_alpha(x, float(self.params["alpha"]))
        if self.name == "inverse-square":
            return inverse_square(x, self.params.get("a", (0.17, 0.17)))
        if self.name == "motivating":
            return motivating(x)
        if self.name == "translates":
            p = self.params
            return p["kernel"](x, p["centers"]) @ p["weights"]
        raise ValueError(f"unknown target {self.name!r}")

    def on(self, candidates):
        """Values on a candidate cloud."""
        n = len(_coords(candidates))
        if self.is_tabulated:
            if self.values.shape[0] != n:
                raise DimensionMismatch(f"tabulated target has {self.values.shape[0]} "
                                        f"values for {n} candidates")
            return self.values.copy()
        return np.asarray(self(candidates), dtype=float)

    def gradient(self, points, axis):
        if self.name != "translates":
            raise NotImplementedError("gradients are only available for kernel translates")
        p = self.params
        return p["kernel"].grad1(_coords(points), p["centers"], axis) @ p["weights"]

    def native_norm(self):
        """Native-space norm; defined only for kernel-translate targets."""
        if self.name != "translates":
            raise NotImplementedError("native norm is only computable for kernel translates")
        p = self.params
        c = p["weights"]
        return float(np.sqrt(max(c @ p["kernel"](p["centers"]) @ c, 0.0)))


def parse_target(spec: str) -> TargetFunction:
    """Parse ``falpha:3.5``, ``inverse-square[:a0,a1]`` or ``motivating``."""
    name, _, arg = spec.strip().lower().partition(":")
    if name in ("falpha", "f_alpha"):
        return TargetFunction("falpha", {"alpha": float(arg) if arg else 3.5})
    if name in ("inverse-square", "invsq"):
        a = tuple(float(v) for v in arg.split(",")) if arg else (0.17, 0.17)
        return TargetFunction("inverse-square", {"a": a})
    if name == "motivating":
        return TargetFunction("motivating")
    raise ValueError(f"unknown target {spec!r}")


# -- the model ----------------------------------------------------------------------


class GreedyModel:
    """Kernel interpolant on a growing center set drawn from fixed candidates.

    Parameters
    ----------
    kernel
        The kernel.
    candidates
        Candidate set; centers are always chosen among these.
    target
        Optional function to interpolate (builtin or tabulated).

    Attributes
    ----------
    power_sq
        Squared Power function at every candidate, clamped at zero.
    interp_values
        Interpolant at every candidate (``None`` without a target).
    """

    def __init__(self, kernel: Kernel, candidates, target: TargetFunction | None = None,
                 capacity: int | None = None, check_distinct: bool = True):
        cloud = candidates if isinstance(candidates, PointCloud) else PointCloud(candidates)
        if len(cloud) == 0:
            raise ValueError("candidate set is empty")
        if check_distinct and not cloud.is_distinct():
            raise DuplicatePoints("candidate set contains coincident points")
        self.kernel = kernel
        self.candidates = cloud
        self._x = cloud.coords
        M = len(cloud)
        self.target = target
        self.f_values = None if target is None else target.on(cloud)
        self.power_sq = np.asarray(kernel.diag(self._x), dtype=float).copy()
        self.interp_values = None if target is None else np.zeros(M)
        self.selected = np.zeros(M, dtype=bool)
        self.center_indices = []
        self.n = 0
        cap = _GROW if capacity is None else max(1, min(int(capacity), M))
        self._V = np.zeros((M, cap))
        self._L = np.zeros((cap, cap))
        self._c = np.zeros(cap)
        self.lambda_min_upper = np.inf
        self.pivots_sq = []

    # -- state views ----------------------------------------------------------

    @property
    def dim(self):
        return self.candidates.dim

    @property
    def newton_values(self):
        """Newton basis values at the candidates, shape ``(M, N)``."""
        return self._V[:, :self.n]

    @property
    def newton_factor(self):
        """Lower-triangular ``L`` with ``A = L L^T`` on the current centers."""
        return self._L[:self.n, :self.n]

    @property
    def newton_coefficients(self):
        return self._c[:self.n]

    @property
    def centers(self):
        return PointCloud(self._x[self.center_indices].reshape(-1, self.dim))

    @property
    def center_coords(self):
        return self._x[self.center_indices].reshape(-1, self.dim)

    @property
    def coefficients(self):
        """Coefficients ``alpha`` of the interpolant in the kernel-translate basis."""
        if self.n == 0:
            return np.zeros(0)
        return solve_triangular(self.newton_factor.T, self.newton_coefficients, lower=False)

    @property
    def residuals(self):
        if self.f_values is None:
            return None
        return self.f_values - self.interp_values

    def power_max(self):
        return float(np.sqrt(np.max(self.power_sq)))

    def residual_max(self):
        r = self.residuals
        return None if r is None else float(np.max(np.abs(r)))

    # -- update ---------------------------------------------------------------

    def _grow(self):
        cap = self._V.shape[1]
        new = min(cap + _GROW, self._V.shape[0])
        V = np.zeros((self._V.shape[0], new))
        V[:, :cap] = self._V
        L = np.zeros((new, new))
        L[:cap, :cap] = self._L
        c = np.zeros(new)
        c[:cap] = self._c
        self._V, self._L, self._c = V, L, c

    def add_center(self, m: int):
        """Add candidate ``m`` as the next center; returns ``self``."""
        m = int(m)
        p2 = float(self.power_sq[m])
        if self.selected[m] or p2 <= PIVOT_FLOOR:
            raise NumericallySingular(f"candidate {m} has squared Power {p2:.3e}; "
                                      "it is (numerically) already interpolated")
        N = self.n
        if N == self._V.shape[1]:
            self._grow()
        piv = np.sqrt(p2)
        V = self._V
        kcol = self.kernel(self._x, self._x[m:m + 1])[:, 0]
        if N:
            kcol -= V[:, :N] @ V[m, :N]
        col = kcol / piv
        col[m] = piv
        V[:, N] = col
        self.power_sq -= col * col
        np.maximum(self.power_sq, 0.0, out=self.power_sq)
        self.power_sq[m] = 0.0
        self._L[N, :N] = V[m, :N]
        self._L[N, N] = piv
        if self.f_values is not None:
            coef = (self.f_values[m] - self.interp_values[m]) / piv
            self._c[N] = coef
            self.interp_values += coef * col
        self.selected[m] = True
        self.center_indices.append(m)
        self.pivots_sq.append(p2)
        self.lambda_min_upper = min(self.lambda_min_upper, p2)
        self.n = N + 1
        return self

    # -- evaluation off the candidate set --------------------------------------------

    def _check_dim(self, X):
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {X.shape[1]}, model has {self.dim}")

    def newton_basis(self, points):
        """Newton basis values at arbitrary points, shape ``(P, N)``."""
        X = _coords(points)
        self._check_dim(X)
        if self.n == 0:
            return np.zeros((X.shape[0], 0))
        K = self.kernel(X, self.center_coords)
        return solve_triangular(self.newton_factor, K.T, lower=True, check_finite=False).T

    def evaluate(self, points):
        """Interpolant values at ``points``."""
        W = self.newton_basis(points)
        if self.f_values is None:
            raise ValueError("model has no target function")
        return W @ self.newton_coefficients

    def residual(self, f, points):
        """``f - s_N`` at ``points``; ``f`` is a callable target or an array of values."""
        vals = f(points) if callable(f) else np.asarray(f, dtype=float)
        return vals - self.evaluate(points)

    def power_squared(self, points):
        """Squared Power function at arbitrary points (clamped at zero)."""
        X = _coords(points)
        W = self.newton_basis(X)
        return np.maximum(self.kernel.diag(X) - np.sum(W * W, axis=1), 0.0)

    def power(self, points):
        return np.sqrt(self.power_squared(points))

    def evaluate_grad(self, points, axis):
        """Partial derivative of the interpolant along ``axis``."""
        X = _coords(points)
        self._check_dim(X)
        if self.n == 0:
            return np.zeros(X.shape[0])
        return self.kernel.grad1(X, self.center_coords, axis) @ self.coefficients

    def cardinal_functions(self, points):
        """Lagrange basis values, shape ``(P, N)``; row ``p`` solves ``A l = k(X, x_p)``."""
        if self.n == 0:
            raise ValueError("cardinal functions need at least one center")
        if np.min(np.diag(self.newton_factor)) <= PIVOT_FLOOR:
            raise NumericallySingular("Newton factor has a vanishing diagonal entry")
        W = self.newton_basis(points)
        return solve_triangular(self.newton_factor.T, W.T, lower=False, check_finite=False).T

    def lebesgue_constant(self, points):
        """Largest l1 norm of the cardinal-function rows over ``points``."""
        return float(np.max(np.sum(np.abs(self.cardinal_functions(points)), axis=1)))

    def derivative_power(self, points, axis):
        """Generalized Power function of the functional ``f -> d/dx_axis f(x)``."""
        if not self.kernel.supports_derivatives:
            raise UnsupportedDerivative("derivative Power function needs a kernel "
                                        "with a mixed second derivative")
        X = _coords(points)
        self._check_dim(X)
        diag = np.array([self.kernel.hess12(x[None, :], x[None, :], axis)[0, 0] for x in X])
        if self.n == 0:
            return np.sqrt(np.maximum(diag, 0.0))
        Z = self.kernel.grad1(X, self.center_coords, axis)
        W = solve_triangular(self.newton_factor, Z.T, lower=True, check_finite=False)
        return np.sqrt(np.maximum(diag - np.sum(W * W, axis=0), 0.0))

    def condition_diagnostics(self):
        """Extreme eigenvalues and condition number of the kernel matrix.

        ``lambda_min_upper`` is the smallest squared Power value at a newly
        selected point seen so far, an upper bound for ``lambda_min``.
        """
        if self.n == 0:
            raise ValueError("no centers")
        A = self.kernel(self.center_coords)
        ev = np.linalg.eigvalsh(A)
        lo, hi = float(ev[0]), float(ev[-1])
        spd = lo > 0.0
        return {
            "lambda_min": lo,
            "lambda_max": hi,
            "cond": hi / lo if spd else np.inf,
            "lambda_min_upper": float(self.lambda_min_upper),
            "spd": spd,
        }

    # -- serialization ----------------------------------------------------------------

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "dim": self.dim,
            "centers": self.center_coords.tolist(),
            "center_indices": [int(i) for i in self.center_indices],
            "values": (None if self.f_values is None
                       else self.f_values[self.center_indices].tolist()),
            "coefficients": self.coefficients.tolist() if self.f_values is not None else None,
            "newton_diag": np.diag(self.newton_factor).tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def new_model(kernel: Kernel, candidates, f: TargetFunction | None = None, **kw) -> GreedyModel:
    return GreedyModel(kernel, candidates, f, **kw)


def add_center(model: GreedyModel, m: int) -> GreedyModel:
    return model.add_center(m)


def evaluate(model: GreedyModel, points):
    return model.evaluate(points)


def residual(model: GreedyModel, f, points):
    return model.residual(f, points)


def cardinal_functions(model: GreedyModel, points):
    return model.cardinal_functions(points)


def lebesgue_constant(model: GreedyModel, points) -> float:
    return model.lebesgue_constant(points)


def derivative_power(model: GreedyModel, x, axis: int):
    return model.derivative_power(x, axis)


def condition_diagnostics(model: GreedyModel) -> dict:
    return model.condition_diagnostics()


def load_model(data) -> GreedyModel:
    """Rebuild a model from :meth:`GreedyModel.to_dict` output.

    The centers become the candidate set.  The stored coefficients must
    solve the interpolation system to a relative backward error of 1e-8.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    kernel = kernel_from_dict(data["kernel"])
    X = np.asarray(data["centers"], dtype=float).reshape(-1, int(data["dim"]))
    values = data.get("values")
    target = None if values is None else TargetFunction.tabulated(values)
    model = GreedyModel(kernel, X, target, capacity=X.shape[0])
    for i in range(X.shape[0]):
        model.add_center(i)
    if values is not None and data.get("coefficients") is not None:
        alpha = np.asarray(data["coefficients"], dtype=float)
        A = kernel(X)
        b = np.asarray(values, dtype=float)
        res = np.max(np.abs(A @ alpha - b))
        scale = max(1.0, np.max(np.abs(A)) * np.max(np.abs(alpha)) * X.shape[0], np.max(np.abs(b)))
        if res > 1e-8 * scale:
            raise ConfigError(f"stored coefficients violate the interpolation system "
                              f"(residual {res:.3e})")
    return model


__all__ = [
    "Family", "GreedyModel", "TargetFunction", "PIVOT_FLOOR", "new_model", "add_center",
    "evaluate", "residual", "cardinal_functions", "lebesgue_constant", "derivative_power",
    "condition_diagnostics", "load_model", "parse_target", "f_alpha", "inverse_square",
    "motivating",
]
