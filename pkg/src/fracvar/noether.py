"""Invariance condition, the bilinear operator D^gamma and the conservation sum.

For any fields the three nodewise quantities computed here satisfy

    noether_sum = invariance_residual - sum_j R_j * xi_j

exactly (up to round-off), because the right operators are transposes of
the left ones. Along a discrete extremal (R = 0 in the interior) of an
invariant density the conservation sum therefore vanishes in the interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, OrderError
from .fracops import FracOrder, Kind, adjoint, apply_array, make_op
from .grid import Field, Grid, check_same_grid
from .lagrangian import LagrangianDensity, nodal_state
from .variational import el_residual_array, interior_max


@dataclass(frozen=True)
class Generator:
    xi: Field
    label: str = "custom"


def power_generator(grid: Grid, order: FracOrder) -> Generator:
    """``prod_i (x_i - a_i)**(alpha_i - 1)``, zero on nodes where a factor is singular."""
    if len(order) != grid.dims:
        raise OrderError("order length does not match grid")
    xi = np.ones(grid.shape)
    for i, x in enumerate(grid.mesh()):
        a = order[i]
        if a == 1.0:
            continue
        s = x - grid.lower[i]
        with np.errstate(divide="ignore"):
            factor = np.where(s > 0, s, 1.0) ** (a - 1.0)
        xi = xi * np.where(s > 0, factor, 0.0)
    return Generator(Field(grid, xi[np.newaxis]), "paper-example")


def constant_generator(grid: Grid, m: int = 1, value: float = 1.0) -> Generator:
    return Generator(Field(grid, np.full((m, *grid.shape), float(value))), "constant")


def _d_op_array(gamma: float, axis: int, grid: Grid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    left = make_op(Kind.LEFT_DERIVATIVE, gamma, axis, grid)
    return f * apply_array(left, g) - g * apply_array(adjoint(left), f)


def d_op(gamma: float, axis: int, f: Field, g: Field) -> Field:
    """``f * (left derivative of g) - g * (right derivative of f)`` along ``axis``."""
    grid = check_same_grid(f, g)
    if f.components != 1 or g.components != 1:
        raise GridError("d_op takes single-component fields")
    return Field(grid, _d_op_array(gamma, axis, grid, f.data[0], g.data[0])[np.newaxis])


def _check(density: LagrangianDensity, u: Field, xi: Generator) -> None:
    check_same_grid(u, xi.xi)
    if xi.xi.components != density.m:
        raise GridError(f"generator has {xi.xi.components} components, density expects {density.m}")


def _partials(density, order, u):
    ops, g = nodal_state(density, order, u)
    du, dg = density.partials(u.data, g)
    return ops, np.asarray(du, dtype=float), np.asarray(dg, dtype=float)


def invariance_residual_array(density, order, u, xi) -> np.ndarray:
    _check(density, u, xi)
    ops, du, dg = _partials(density, order, u)
    gxi = ops.gradient(xi.xi.data)
    return np.sum(du * xi.xi.data, axis=0) + np.sum(dg * gxi, axis=(0, 1))


def invariance_residual(density: LagrangianDensity, order: FracOrder, u: Field, xi: Generator) -> Field:
    """Nodewise ``sum_j dL/du_j xi_j + sum_ij dL/dg_ij * D_i xi_j``."""
    return Field(u.grid, invariance_residual_array(density, order, u, xi)[np.newaxis])


@dataclass
class NoetherReport:
    invariance_residual: Field
    noether_sum: Field
    el_pairing: Field
    identity_defect: float
    conservation_norm: float
    scale: float

    def summary(self) -> dict:
        return {
            "identity_defect": self.identity_defect,
            "conservation_norm": self.conservation_norm,
            "invariance_norm": interior_max(self.invariance_residual.data[0], self.noether_sum.grid),
            "el_pairing_norm": interior_max(self.el_pairing.data[0], self.noether_sum.grid),
            "scale": self.scale,
        }


def noether_sum(density: LagrangianDensity, order: FracOrder, u: Field, xi: Generator) -> NoetherReport:
    _check(density, u, xi)
    grid = u.grid
    eff = density.effective_order(order)
    _, _, dg = _partials(density, order, u)
    s = np.zeros(grid.shape)
    for j in range(density.m):
        for i in range(grid.dims):
            s += _d_op_array(eff[i], i, grid, dg[j, i], xi.xi.data[j])
    n1 = invariance_residual_array(density, order, u, xi)
    res = el_residual_array(density, order, u)
    pair = np.sum(res * xi.xi.data, axis=0)
    scale = max(1.0, interior_max(s, grid), interior_max(n1, grid), interior_max(pair, grid))
    return NoetherReport(
        invariance_residual=Field(grid, n1[np.newaxis]),
        noether_sum=Field(grid, s[np.newaxis]),
        el_pairing=Field(grid, pair[np.newaxis]),
        identity_defect=interior_max(s - n1 + pair, grid),
        conservation_norm=interior_max(s, grid),
        scale=scale,
    )


def classical_current_divergence(
    density: LagrangianDensity, u: Field, xi: Generator, order: FracOrder | None = None
) -> Field:
    """Discrete divergence of the current ``sum_j dL/dg_ij * xi_j`` for order 1.

    Along each axis the current is staggered, ``F_k = P_k * xi_{k-1}`` with
    ``xi_{-1} = 0``, and differenced forward with ``F_N = 0``; this is the
    conservative form that the order-1 ``D`` operator reduces to.
    """
    _check(density, u, xi)
    grid = u.grid
    if order is not None and any(a != 1.0 for a in order.alpha):
        raise OrderError("classical current needs every order equal to 1")
    data = u.data
    g = np.empty((density.m, grid.dims, *grid.shape))
    for i, h in enumerate(grid.spacing):
        pad = [(0, 0)] * data.ndim
        pad[i + 1] = (1, 0)
        g[:, i] = np.diff(np.pad(data, pad), axis=i + 1) / h
    dg = np.asarray(density.dg(data, g, density.coefficients), dtype=float)
    out = np.zeros(grid.shape)
    for j in range(density.m):
        for i, h in enumerate(grid.spacing):
            xs = np.pad(xi.xi.data[j], [(1, 0) if a == i else (0, 0) for a in range(grid.dims)])
            xs = np.delete(xs, -1, axis=i)
            flux = np.pad(dg[j, i] * xs, [(0, 1) if a == i else (0, 0) for a in range(grid.dims)])
            out += np.diff(flux, axis=i) / h
    return Field(grid, out[np.newaxis])
