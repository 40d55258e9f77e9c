"""Lagrangian densities L(u, grad^alpha u) and the discrete action.

Densities are evaluated vectorised over nodes. Arrays follow the shapes

    u  : (m, *S)          field components
    g  : (m, dims, *S)    g[j, i] = left derivative of u_j along axis i
    c  : mapping name -> array broadcastable to S (nodewise coefficients)

and ``value`` returns ``S``, ``du`` returns ``(m, *S)``, ``dg`` returns
``(m, dims, *S)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import NonFiniteError
from .fracops import AxisOperators, FracOrder
from .grid import Field, first_nonfinite

Evaluator = Callable[[np.ndarray, np.ndarray, Mapping[str, np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class MaterialParams:
    rho: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and self.k > 0):
            raise ValueError(f"rho and k must be positive, got rho={self.rho}, k={self.k}")

    @property
    def c2(self) -> float:
        return self.k / self.rho


@dataclass(frozen=True, eq=False)
class LagrangianDensity:
    """Density with user-supplied partial derivatives.

    ``classical_axes`` lists axes whose derivative is always taken at
    order 1, whatever order the caller passes (used by the wave density
    with a classical spatial gradient).
    """

    m: int
    dims: int
    value: Evaluator
    du: Evaluator
    dg: Evaluator
    label: str
    coefficients: Mapping[str, np.ndarray] = field(default_factory=dict)
    classical_axes: tuple[int, ...] = ()

    def effective_order(self, order: FracOrder) -> FracOrder:
        if len(order) != self.dims:
            raise ValueError(f"order has {len(order)} entries, density expects {self.dims}")
        return order.with_axes(self.classical_axes, 1.0) if self.classical_axes else order

    def evaluate(self, u, g):
        return self.value(u, g, self.coefficients)

    def partials(self, u, g):
        return self.du(u, g, self.coefficients), self.dg(u, g, self.coefficients)


def builtin_poisson(source: Field) -> LagrangianDensity:
    """``0.5 * sum_i g_i**2 - f*u`` for a single scalar field."""
    if source.components != 1:
        raise ValueError("Poisson source must be single-component")
    dims = source.grid.dims

    def value(u, g, c):
        return 0.5 * np.sum(g[0] ** 2, axis=0) - c["f"] * u[0]

    def du(u, g, c):
        return -np.broadcast_to(c["f"], u.shape).astype(float)

    def dg(u, g, c):
        return np.array(g, dtype=float)

    return LagrangianDensity(1, dims, value, du, dg, "poisson", {"f": source.data[0]})


def builtin_wave(
    params: MaterialParams,
    fractional_space: bool = True,
    dims: int = 3,
    source: Field | None = None,
) -> LagrangianDensity:
    """``0.5 * (rho*g_0**2 - k*sum_{i>=1} g_i**2)``, optionally ``- f*u``.

    Axis 0 is time. With ``fractional_space=False`` the spatial derivatives
    are classical (order 1).
    """
    if dims < 2:
        raise ValueError("wave density needs a time axis and at least one space axis")
    rho, k = float(params.rho), float(params.k)
    coef = np.array([rho] + [-k] * (dims - 1))
    coefficients = {} if source is None else {"f": source.data[0]}

    def _c(g):
        return coef.reshape((dims,) + (1,) * (g.ndim - 2))

    def value(u, g, c):
        out = 0.5 * np.sum(_c(g) * g[0] ** 2, axis=0)
        if "f" in c:
            out = out - c["f"] * u[0]
        return out

    def du(u, g, c):
        if "f" in c:
            return -np.broadcast_to(c["f"], u.shape).astype(float)
        return np.zeros(u.shape)

    def dg(u, g, c):
        return _c(g)[np.newaxis] * g

    label = "wave-frac-space" if fractional_space else "wave-classical-space"
    classical = () if fractional_space else tuple(range(1, dims))
    return LagrangianDensity(1, dims, value, du, dg, label, coefficients, classical)


def nodal_state(density: LagrangianDensity, order: FracOrder, u: Field):
    """Return ``(ops, g)`` with ``g`` the fractional gradient of every component."""
    if u.components != density.m or u.grid.dims != density.dims:
        raise ValueError(
            f"field ({u.components} comps, {u.grid.dims} axes) does not match "
            f"density ({density.m} comps, {density.dims} axes)"
        )
    ops = AxisOperators(u.grid, density.effective_order(order))
    return ops, ops.gradient(u.data)


def action(density: LagrangianDensity, order: FracOrder, u: Field) -> float:
    """Rectangle-rule action: every node carries the full cell volume."""
    _, g = nodal_state(density, order, u)
    dens = np.asarray(density.evaluate(u.data, g), dtype=float)
    bad = first_nonfinite(dens)
    if bad is not None:
        raise NonFiniteError(f"density is not finite at node {bad}", node=bad)
    return float(np.sum(dens.reshape(-1)) * u.grid.cell_volume)


@dataclass
class PartialsReport:
    label: str
    trials: int
    max_rel_error: float
    passed: bool
    worst: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def validate_partials(
    density: LagrangianDensity, trials: int = 10, seed: int = 0, tol: float = 1e-6
) -> PartialsReport:
    """Compare ``du``/``dg`` with central differences of ``value`` at random points."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    m, dims = density.m, density.dims
    worst_err, worst = 0.0, ""
    for t in range(trials):
        u = rng.standard_normal(m)
        g = rng.standard_normal((m, dims))
        c = {name: rng.standard_normal() for name in density.coefficients}
        du = np.asarray(density.du(u, g, c), dtype=float).reshape(m)
        dg = np.asarray(density.dg(u, g, c), dtype=float).reshape(m, dims)
        probes = [("du", (j,), u, du[j]) for j in range(m)]
        probes += [("dg", (j, i), g, dg[j, i]) for j in range(m) for i in range(dims)]
        for name, idx, arr, exact in probes:
            step = 1e-5 * max(1.0, abs(arr[idx]))
            plus, minus = arr.copy(), arr.copy()
            plus[idx] += step
            minus[idx] -= step
            if name == "du":
                fp, fm = density.value(plus, g, c), density.value(minus, g, c)
            else:
                fp, fm = density.value(u, plus, c), density.value(u, minus, c)
            fd = (float(fp) - float(fm)) / (2 * step)
            err = abs(fd - exact) / max(1.0, abs(exact))
            if not np.isfinite(err):
                err = np.inf
            if err > worst_err or not worst:
                worst_err = max(worst_err, err)
                worst = f"trial {t}: {name}{list(idx)} analytic={exact:.6g} fd={fd:.6g}"
    return PartialsReport(density.label, trials, worst_err, worst_err <= tol, worst)
