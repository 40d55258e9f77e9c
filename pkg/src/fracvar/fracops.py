"""Discrete Riemann-Liouville operators as triangular Toeplitz sums.

Left derivatives use unshifted Grunwald-Letnikov weights,

    (D f)_j = h**-alpha * sum_{k=0}^{j} w_k f_{j-k},
    w_0 = 1,  w_k = w_{k-1} * (k - 1 - alpha) / k,

and left integrals use product-integration kernel weights
``((k+1)**alpha - k**alpha) / Gamma(alpha + 1)`` scaled by ``h**alpha``.
Right operators are the exact matrix transposes of the left ones, so the
discrete integration-by-parts identity ``<g, L f> = <L^T g, f>`` holds to
round-off for arbitrary vectors.

Every output element is accumulated in ascending ``k`` and the scale factor
is applied last, which keeps results bit-identical however the independent
1D lines are split across worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import GridError, OrderError
from .grid import Field, Grid


class Kind(str, Enum):
    LEFT_DERIVATIVE = "left-derivative"
    RIGHT_DERIVATIVE = "right-derivative"
    LEFT_INTEGRAL = "left-integral"
    RIGHT_INTEGRAL = "right-integral"

    @property
    def is_left(self) -> bool:
        return self in (Kind.LEFT_DERIVATIVE, Kind.LEFT_INTEGRAL)

    @property
    def is_derivative(self) -> bool:
        return self in (Kind.LEFT_DERIVATIVE, Kind.RIGHT_DERIVATIVE)

    def mirrored(self) -> "Kind":
        return {
            Kind.LEFT_DERIVATIVE: Kind.RIGHT_DERIVATIVE,
            Kind.RIGHT_DERIVATIVE: Kind.LEFT_DERIVATIVE,
            Kind.LEFT_INTEGRAL: Kind.RIGHT_INTEGRAL,
            Kind.RIGHT_INTEGRAL: Kind.LEFT_INTEGRAL,
        }[self]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise OrderError(f"order {alpha} outside (0, 1]")
    return alpha


@dataclass(frozen=True)
class FracOrder:
    """Per-axis orders, each in (0, 1]."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(_check_alpha(a) for a in self.alpha)
        if not alpha:
            raise OrderError("empty order vector")
        object.__setattr__(self, "alpha", alpha)

    def __len__(self) -> int:
        return len(self.alpha)

    def __getitem__(self, i: int) -> float:
        return self.alpha[i]

    def with_axes(self, axes: Sequence[int], value: float) -> "FracOrder":
        alpha = list(self.alpha)
        for i in axes:
            alpha[i] = value
        return FracOrder(tuple(alpha))

    @classmethod
    def uniform(cls, alpha: float, dims: int) -> "FracOrder":
        return cls((float(alpha),) * dims)


def gl_weights(alpha: float, count: int) -> np.ndarray:
    """Unscaled Grunwald-Letnikov weights ``(-1)**k * binom(alpha, k)``.

    >>> gl_weights(0.5, 4).tolist()
    [1.0, -0.5, -0.125, -0.0625]
    """
    alpha = _check_alpha(alpha)
    if count < 1:
        raise ValueError("count must be at least 1")
    w = np.empty(count)
    w[0] = 1.0
    for k in range(1, count):
        w[k] = w[k - 1] * ((k - 1 - alpha) / k)
    # alpha == 1 gives exact zeros from k=2; drop the sign of -0.0
    return w + 0.0


def integral_weights(alpha: float, count: int) -> np.ndarray:
    """Unscaled kernel weights ``((k+1)**alpha - k**alpha) / Gamma(alpha+1)``."""
    alpha = _check_alpha(alpha)
    if count < 1:
        raise ValueError("count must be at least 1")
    k = np.arange(count, dtype=float)
    return ((k + 1.0) ** alpha - k**alpha) / math.gamma(alpha + 1.0)


@dataclass(frozen=True, eq=False)
class FracOp:
    """A 1D operator along ``axis``.

    ``weights`` are unscaled; application multiplies the Toeplitz sum by
    ``h**alpha`` (integrals) or divides it by ``h**alpha`` (derivatives).
    """

    kind: Kind
    order: float
    axis: int
    spacing: float
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        _check_alpha(self.order)
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        if not isinstance(other, FracOp):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.order == other.order
            and self.axis == other.axis
            and self.spacing == other.spacing
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    @property
    def scaled_weights(self) -> np.ndarray:
        if self.kind.is_derivative:
            return self.weights / self.spacing**self.order
        return self.weights * self.spacing**self.order

    def matrix(self) -> np.ndarray:
        """Dense N x N matrix of the operator (for small N)."""
        n = len(self.weights)
        return _apply_lines(self, np.eye(n), 1)


def make_op(kind: Kind | str, alpha: float, axis: int, grid: Grid) -> FracOp:
    kind = Kind(kind)
    if not 0 <= axis < grid.dims:
        raise GridError(f"axis {axis} out of range for a {grid.dims}-axis grid")
    n = grid.nodes[axis]
    weights = gl_weights(alpha, n) if kind.is_derivative else integral_weights(alpha, n)
    return FracOp(kind, float(alpha), axis, grid.spacing[axis], weights)


def adjoint(op: FracOp) -> FracOp:
    """Opposite-handed operator with identical weights (the matrix transpose)."""
    return FracOp(op.kind.mirrored(), op.order, op.axis, op.spacing, op.weights)


def thread_count() -> int:
    """Worker threads for line-parallel application (``FRACVAR_THREADS``)."""
    try:
        return max(1, int(os.environ.get("FRACVAR_THREADS", "1")))
    except ValueError:
        return 1


def _toeplitz_sum(w: np.ndarray, x: np.ndarray, left: bool) -> np.ndarray:
    # x has the operator axis first; accumulate in ascending k
    n = x.shape[0]
    out = np.zeros_like(x)
    for k in range(n):
        wk = w[k]
        if wk == 0.0:
            continue
        if left:
            out[k:] += wk * x[: n - k]
        else:
            out[: n - k] += wk * x[k:]
    return out


def _apply_lines(op: FracOp, x: np.ndarray, threads: int) -> np.ndarray:
    """Apply ``op`` along axis 0 of ``x``; other axes index independent lines."""
    left = op.kind.is_left
    w = op.weights
    n_lines = x[0].size
    if threads > 1 and x.ndim > 1 and n_lines >= 2 * threads:
        flat = x.reshape(x.shape[0], -1)
        chunks = np.array_split(np.arange(n_lines), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _toeplitz_sum(w, flat[:, c], left), chunks))
        acc = np.concatenate(parts, axis=1).reshape(x.shape)
    else:
        acc = _toeplitz_sum(w, x, left)
    hp = op.spacing**op.order
    return acc / hp if op.kind.is_derivative else acc * hp


def apply_array(op: FracOp, data: np.ndarray, axis: int | None = None) -> np.ndarray:
    """Apply ``op`` to a raw array along ``axis`` (defaults to ``op.axis``)."""
    axis = op.axis if axis is None else axis
    if data.shape[axis] != len(op.weights):
        raise GridError(
            f"operator of length {len(op.weights)} applied to axis of length {data.shape[axis]}"
        )
    x = np.moveaxis(np.asarray(data, dtype=float), axis, 0)
    out = _apply_lines(op, x, thread_count())
    return np.moveaxis(out, 0, axis)


def apply_axis(op: FracOp, field: Field, component: int = 0) -> Field:
    grid = field.grid
    if not 0 <= op.axis < grid.dims:
        raise GridError(f"axis {op.axis} out of range for a {grid.dims}-axis grid")
    if not math.isclose(op.spacing, grid.spacing[op.axis], rel_tol=1e-12):
        raise GridError(
            f"operator spacing {op.spacing} does not match grid spacing "
            f"{grid.spacing[op.axis]} on axis {op.axis}"
        )
    if len(op.weights) != grid.nodes[op.axis]:
        raise GridError("operator length does not match node count")
    return Field(grid, apply_array(op, field.data[component])[np.newaxis])


def frac_gradient(order: FracOrder, field: Field, component: int = 0) -> list[Field]:
    """Left partial RL derivatives of one component, one Field per axis."""
    grid = field.grid
    if len(order) != grid.dims:
        raise OrderError(f"order has {len(order)} entries for a {grid.dims}-axis grid")
    return [
        apply_axis(make_op(Kind.LEFT_DERIVATIVE, order[i], i, grid), field, component)
        for i in range(grid.dims)
    ]


class AxisOperators:
    """Left derivative operators for every axis of a grid, built once."""

    def __init__(self, grid: Grid, order: FracOrder):
        if len(order) != grid.dims:
            raise OrderError(f"order has {len(order)} entries for a {grid.dims}-axis grid")
        self.grid = grid
        self.order = order
        self.left = [make_op(Kind.LEFT_DERIVATIVE, order[i], i, grid) for i in range(grid.dims)]
        self.right = [adjoint(op) for op in self.left]

    def gradient(self, data: np.ndarray) -> np.ndarray:
        """``data`` of shape ``(m, *nodes)`` -> ``(m, dims, *nodes)``."""
        return np.stack(
            [np.stack([apply_array(op, d) for op in self.left]) for d in data]
        )

    def divergence_t(self, flux: np.ndarray) -> np.ndarray:
        """Sum over axes of right derivatives: ``(m, dims, *nodes)`` -> ``(m, *nodes)``."""
        out = np.zeros((flux.shape[0], *self.grid.shape))
        for j in range(flux.shape[0]):
            for i, op in enumerate(self.right):
                out[j] += apply_array(op, flux[j, i])
        return out
