"""Radial basis function kernels and their derivatives.

All kernels are normalized so that ``k(x, x) = 1`` and are evaluated as
``Phi(eps * ||x - y||_2)``.

==============  ==========================  ===================
family          Phi(r)                      smoothness tau
==============  ==========================  ===================
basic-matern    exp(-r)                     (d + 1) / 2
linear-matern   (1 + r) exp(-r)             (d + 3) / 2
gaussian        exp(-r**2)                  infinite
==============  ==========================  ===================
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import UnsupportedDerivative


class Family(str, enum.Enum):
    BASIC_MATERN = "basic-matern"
    LINEAR_MATERN = "linear-matern"
    GAUSSIAN = "gaussian"


def _as_points(X, dim=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        # a bare vector is a single point unless the dimension says otherwise
        X = X.reshape(-1, 1) if dim == 1 else X.reshape(1, -1)
    return X


@dataclass(frozen=True)
class Kernel:
    """Normalized radial kernel ``k(x, y) = Phi(shape * ||x - y||)``.

    Parameters
    ----------
    family
        One of :class:`Family` (or its string value).
    shape
        Positive scale ``eps`` applied to the distance.
    """

    family: Family
    shape: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"kernel shape must be positive, got {self.shape!r}")

    # -- radial profile -----------------------------------------------------

    def phi(self, r):
        """Radial profile evaluated at (unscaled) distances ``r``."""
        s = self.shape * np.asarray(r, dtype=float)
        if self.family is Family.BASIC_MATERN:
            return np.exp(-s)
        if self.family is Family.LINEAR_MATERN:
            return (1.0 + s) * np.exp(-s)
        return np.exp(-s * s)

    def __call__(self, X, Y=None):
        """Kernel matrix between the rows of ``X`` and ``Y``."""
        X = _as_points(X)
        Y = X if Y is None else _as_points(Y)
        return self.phi(cdist(X, Y))

    matrix = __call__

    def diag(self, X):
        return np.ones(_as_points(X).shape[0])

    # -- derivatives ----------------------------------------------------------

    def _radial_factor(self, r):
        # g(r) = Phi'(r) / r, so that d/dx_i k(x, y) = g(r) * (x_i - y_i)
        e = self.shape
        if self.family is Family.LINEAR_MATERN:
            return -e * e * np.exp(-e * r)
        if self.family is Family.GAUSSIAN:
            return -2.0 * e * e * np.exp(-(e * r) ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -e * np.exp(-e * r) / r

    def grad1(self, X, Y, axis):
        """Matrix of ``d/dx_axis k(x, y)`` (derivative in the first argument)."""
        X, Y = _as_points(X), _as_points(Y)
        r = cdist(X, Y)
        if self.family is Family.BASIC_MATERN and np.any(r == 0.0):
            raise UnsupportedDerivative("basic Matern kernel is not differentiable at x = y")
        delta = X[:, axis][:, None] - Y[:, axis][None, :]
        return self._radial_factor(r) * delta

    def hess12(self, X, Y, axis):
        """Matrix of the mixed derivative ``d/dx_axis d/dy_axis k(x, y)``."""
        if self.family is Family.BASIC_MATERN:
            raise UnsupportedDerivative("basic Matern kernel has no mixed second derivative")
        X, Y = _as_points(X), _as_points(Y)
        r = cdist(X, Y)
        delta = X[:, axis][:, None] - Y[:, axis][None, :]
        e = self.shape
        if self.family is Family.LINEAR_MATERN:
            # -g'(r) delta^2 / r - g(r); delta^2 / r <= r keeps the limit r -> 0 finite
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(r > 0.0, delta * delta / np.where(r > 0.0, r, 1.0), 0.0)
            return e * e * np.exp(-e * r) - e**3 * np.exp(-e * r) * ratio
        g = np.exp(-(e * r) ** 2)
        return 2.0 * e * e * g - 4.0 * e**4 * g * delta * delta

    # -- metadata -------------------------------------------------------------

    def smoothness(self, dim):
        """Sobolev smoothness ``tau`` of the native space in dimension ``dim``.

        Returns ``None`` for the Gaussian (infinitely smooth).
        """
        if self.family is Family.BASIC_MATERN:
            return (dim + 1) / 2
        if self.family is Family.LINEAR_MATERN:
            return (dim + 3) / 2
        return None

    @property
    def supports_derivatives(self):
        return self.family is not Family.BASIC_MATERN

    def descriptor(self):
        if self.shape == 1.0:
            return self.family.value
        return f"{self.family.value}:{self.shape!r}"

    def to_dict(self):
        return {"family": self.family.value, "shape": self.shape}


def eval(kernel: Kernel, x, y) -> float:  # noqa: A001
    """Kernel value ``k(x, y)`` for two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(kernel.phi(np.linalg.norm(x - y)))


def eval_grad1(kernel: Kernel, x, y, i: int) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(kernel.grad1(x[None, :], y[None, :], i)[0, 0])


def eval_hess12(kernel: Kernel, x, y, i: int) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(kernel.hess12(x[None, :], y[None, :], i)[0, 0])


def theoretical_power_rate(kernel: Kernel, dim: int):
    """Proven decay exponent ``1/2 - tau/d`` of ``||P_N||_inf``, or ``None``."""
    tau = kernel.smoothness(dim)
    if tau is None:
        return None
    return 0.5 - tau / dim


_ALIASES = {
    "basic": Family.BASIC_MATERN,
    "basic-matern": Family.BASIC_MATERN,
    "linear": Family.LINEAR_MATERN,
    "linear-matern": Family.LINEAR_MATERN,
    "gaussian": Family.GAUSSIAN,
    "gauss": Family.GAUSSIAN,
}


def parse_kernel(spec: str) -> Kernel:
    """Parse ``"<family>[:<eps>]"``, e.g. ``"gaussian:2.5"``."""
    name, _, eps = spec.strip().lower().partition(":")
    try:
        family = _ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of "
                         f"basic-matern, linear-matern, gaussian") from None
    return Kernel(family, float(eps) if eps else 1.0)


def kernel_from_dict(d) -> Kernel:
    return Kernel(Family(d["family"]), float(d.get("shape", 1.0)))
