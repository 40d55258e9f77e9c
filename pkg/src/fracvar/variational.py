"""Discrete fractional Euler-Lagrange residual and gradient consistency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, NonFiniteError
from .fracops import FracOrder
from .grid import Field, check_same_grid, first_nonfinite
from .lagrangian import LagrangianDensity, action, nodal_state


def interior_max(data: np.ndarray, grid) -> float:
    """Max absolute value over interior nodes; ``data`` is ``(*nodes)`` or ``(m, *nodes)``."""
    sl = grid.interior_slices()
    if data.ndim == grid.dims + 1:
        sl = (slice(None),) + sl
    inner = data[sl]
    return float(np.max(np.abs(inner))) if inner.size else 0.0


@dataclass(frozen=True)
class ElResidual:
    field: Field
    interior_norm: float


def el_residual_array(density: LagrangianDensity, order: FracOrder, u: Field) -> np.ndarray:
    ops, g = nodal_state(density, order, u)
    du, dg = density.partials(u.data, g)
    res = np.asarray(du, dtype=float) + ops.divergence_t(np.asarray(dg, dtype=float))
    bad = first_nonfinite(res)
    if bad is not None:
        raise NonFiniteError(f"residual is not finite at {bad}", node=bad)
    return res


def el_residual(density: LagrangianDensity, order: FracOrder, u: Field) -> ElResidual:
    """``dL/du_j + sum_i R_i(dL/dg_ij)`` at every node, ``R_i`` the transposed left operator."""
    res = el_residual_array(density, order, u)
    return ElResidual(Field(u.grid, res), interior_max(res, u.grid))


def pairing(a: Field, b: Field) -> float:
    """Uniform-weight inner product ``sum_nodes sum_j a_j b_j * prod(h)``."""
    grid = check_same_grid(a, b)
    return float(np.sum((a.data * b.data).reshape(-1)) * grid.cell_volume)


@dataclass
class GradientCheckReport:
    quotient: float
    quotient_half: float
    extrapolated: float
    pairing: float
    defect: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _shifted(u: Field, h: Field, s: float) -> Field:
    return Field(u.grid, u.data + s * h.data)


def _quotient(density, order, u, h, eps):
    jp = action(density, order, _shifted(u, h, eps))
    jm = action(density, order, _shifted(u, h, -eps))
    return (jp - jm) / (2 * eps)


def gradient_check(
    density: LagrangianDensity,
    order: FracOrder,
    u: Field,
    h: Field,
    eps: float = 1e-4,
    rtol: float = 1e-8,
) -> GradientCheckReport:
    """Compare the central difference of the action along ``h`` with ``<R(u), h>``.

    The quotient is computed at ``eps`` and ``eps/2`` and Richardson
    extrapolated; the tolerance is ``rtol * scale`` widened by the observed
    ``eps``-dependence, which vanishes for quadratic densities.
    """
    check_same_grid(u, h)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if np.any(h.data[:, u.grid.boundary_mask().flags] != 0.0):
        raise GridError("variation must vanish on the boundary")
    q1 = _quotient(density, order, u, h, eps)
    q2 = _quotient(density, order, u, h, eps / 2)
    extrap = (4.0 * q2 - q1) / 3.0
    res = el_residual(density, order, u).field
    pair = pairing(res, h)
    scale = max(1.0, abs(pair), abs(q1))
    defect = abs(extrap - pair)
    tol = max(rtol * scale, abs(q1 - q2))
    return GradientCheckReport(q1, q2, extrap, pair, defect, tol, defect <= tol)
