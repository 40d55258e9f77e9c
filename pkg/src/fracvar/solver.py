"""Dirichlet boundary-value solves for the quadratic example densities.

The full-grid operator is ``K u = sum_i c_i A_i^T A_i u`` with ``A_i`` the
left derivative along axis ``i`` and ``c = (1, ..., 1)`` for Poisson or
``c = (rho, -k, ..., -k)`` for the wave densities. Boundary values are
lifted into the right-hand side, leaving ``K_II u_I = f_I - K_IB phi_B``
on interior unknowns.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla
from threadpoolctl import threadpool_limits

from .errors import SolverError
from .fracops import FracOrder, Kind, apply_array, make_op
from .grid import Field, Grid
from .lagrangian import LagrangianDensity, MaterialParams, builtin_poisson, builtin_wave
from .variational import el_residual

logger = logging.getLogger(__name__)

KINDS = ("poisson", "wave-frac-space", "wave-classical-space")
DENSE_CAP = 20_000


@dataclass(frozen=True, eq=False)
class LinearProblem:
    kind: str
    grid: Grid
    order: FracOrder
    params: MaterialParams | None = None
    source: Field | None = None
    dirichlet: Field | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}; expected one of {KINDS}")
        if len(self.order) != self.grid.dims:
            raise ValueError("order length does not match grid dimension")
        if self.kind == "poisson" and self.source is None:
            raise ValueError("poisson problem needs a source field")
        if self.kind != "poisson":
            if self.params is None:
                raise ValueError("wave problem needs material parameters")
            if self.grid.dims < 2:
                raise ValueError("wave problem needs at least two axes")
        for f in (self.source, self.dirichlet):
            if f is not None and (f.grid != self.grid or f.components != 1):
                raise ValueError("source and dirichlet data must be scalar fields on the problem grid")

    @property
    def is_wave(self) -> bool:
        return self.kind != "poisson"

    @property
    def effective_order(self) -> FracOrder:
        if self.kind == "wave-classical-space":
            return self.order.with_axes(range(1, self.grid.dims), 1.0)
        return self.order

    @property
    def coefficients(self) -> tuple[float, ...]:
        if not self.is_wave:
            return (1.0,) * self.grid.dims
        return (self.params.rho,) + (-self.params.k,) * (self.grid.dims - 1)

    def density(self) -> LagrangianDensity:
        if self.kind == "poisson":
            return builtin_poisson(self.source)
        return builtin_wave(
            self.params,
            fractional_space=self.kind == "wave-frac-space",
            dims=self.grid.dims,
            source=self.source,
        )


def apply_operator(kind: str, order: FracOrder, grid: Grid, data: np.ndarray,
                   params: MaterialParams | None = None) -> np.ndarray:
    """Full-grid ``K u`` for a scalar array ``data`` of the grid shape."""
    problem = LinearProblem(kind, grid, order, params or MaterialParams(),
                            source=Field.zeros(grid) if kind == "poisson" else None)
    return _full_apply(problem, data)


def _full_apply(problem: LinearProblem, data: np.ndarray) -> np.ndarray:
    grid, order = problem.grid, problem.effective_order
    out = np.zeros(grid.shape)
    for i, c in enumerate(problem.coefficients):
        left = make_op(Kind.LEFT_DERIVATIVE, order[i], i, grid)
        right = make_op(Kind.RIGHT_DERIVATIVE, order[i], i, grid)
        out += c * apply_array(right, apply_array(left, data))
    return out


@dataclass(eq=False)
class InteriorOperator:
    """Matrix-free ``K_II`` plus the lifted right-hand side."""

    problem: LinearProblem
    rhs: np.ndarray
    lift: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(np.prod(self.problem.grid.interior_shape))

    def embed(self, v: np.ndarray) -> np.ndarray:
        full = np.zeros(self.problem.grid.shape)
        full[self.problem.grid.interior_slices()] = v.reshape(self.problem.grid.interior_shape)
        return full

    def matvec(self, v: np.ndarray) -> np.ndarray:
        full = _full_apply(self.problem, self.embed(np.asarray(v, dtype=float)))
        return full[self.problem.grid.interior_slices()].reshape(-1)

    __call__ = matvec

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.n, self.n), matvec=self.matvec, dtype=float)

    def axis_blocks(self) -> list[np.ndarray]:
        """Per-axis interior blocks of ``c_i A_i^T A_i``."""
        grid, order = self.problem.grid, self.problem.effective_order
        blocks = []
        for i, c in enumerate(self.problem.coefficients):
            a = make_op(Kind.LEFT_DERIVATIVE, order[i], i, grid).matrix()
            with threadpool_limits(1):
                b = a.T @ a
            blocks.append(c * b[1:-1, 1:-1])
        return blocks

    def dense(self) -> np.ndarray:
        """Kronecker-sum assembly of ``K_II``; the interior set is a tensor product."""
        blocks = self.axis_blocks()
        sizes = [b.shape[0] for b in blocks]
        m = np.zeros((self.n, self.n))
        for i, b in enumerate(blocks):
            left = np.eye(int(np.prod(sizes[:i])))
            right = np.eye(int(np.prod(sizes[i + 1 :])))
            m += np.kron(np.kron(left, b), right)
        return m

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.problem.grid.interior_shape)
        for i, b in enumerate(self.axis_blocks()):
            shape = [1] * diag.ndim
            shape[i] = -1
            diag = diag + np.diag(b).reshape(shape)
        return diag.reshape(-1)

    def eigen_extremes(self) -> tuple[float, float]:
        """Smallest and largest ``|lambda|`` of ``K_II`` from the per-axis spectra."""
        lam = np.zeros(())
        for b in self.axis_blocks():
            with threadpool_limits(1):
                ev = np.linalg.eigvalsh(b)
            lam = np.add.outer(lam, ev)
        a = np.abs(lam)
        return float(a.min()), float(a.max())

    def eigen_solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``K_II x = b`` by diagonalising each axis block."""
        blocks = self.axis_blocks()
        with threadpool_limits(1):
            pairs = [np.linalg.eigh(blk) for blk in blocks]
            lam = np.zeros(())
            for ev, _ in pairs:
                lam = np.add.outer(lam, ev)
            if np.min(np.abs(lam)) <= 64 * np.finfo(float).eps * np.max(np.abs(lam)):
                raise SolverError("interior operator is numerically singular")
            y = b.reshape(self.problem.grid.interior_shape)
            for i, (_, q) in enumerate(pairs):
                y = np.moveaxis(np.tensordot(q.T, y, axes=(1, i)), 0, i)
            y = y / lam
            for i, (_, q) in enumerate(pairs):
                y = np.moveaxis(np.tensordot(q, y, axes=(1, i)), 0, i)
        return y.reshape(-1)


def assemble_matvec(problem: LinearProblem) -> InteriorOperator:
    grid = problem.grid
    lift = np.zeros(grid.shape)
    if problem.dirichlet is not None:
        phi = problem.dirichlet.data[0]
        mask = grid.boundary_mask().flags
        lift[mask] = phi[mask]
    f = problem.source.data[0] if problem.source is not None else np.zeros(grid.shape)
    sl = grid.interior_slices()
    rhs = (f - _full_apply(problem, lift))[sl].reshape(-1)
    return InteriorOperator(problem, rhs, lift)


def _dot(a, b) -> float:
    # numpy pairwise summation: fixed order, no BLAS threading
    return float(np.sum(a * b))


def conjugate_gradient(
    matvec: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    diag: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
    x0: np.ndarray | None = None,
):
    """Jacobi-preconditioned CG; stops when ``||r|| <= tol * ||b||``.

    Returns ``(x, iterations, relative_residual, converged)``.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.sqrt(_dot(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0, True
    inv_d = 1.0 / diag if diag is not None else np.ones_like(b)
    r = b - matvec(x)
    z = inv_d * r
    p = z.copy()
    rz = _dot(r, z)
    rel = np.sqrt(_dot(r, r)) / bnorm
    it = 0
    while rel > tol and it < max_iter:
        ap = matvec(p)
        step = rz / _dot(p, ap)
        x = x + step * p
        r = r - step * ap
        it += 1
        rel = np.sqrt(_dot(r, r)) / bnorm
        z = inv_d * r
        rz_new = _dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it, float(rel), bool(rel <= tol)


@dataclass
class SolveResult:
    u: Field
    residual_norm: float
    iterations: int
    method: str
    linear_residual: float
    converged: bool
    condition_estimate: float
    flagged: bool
    wall_time: float = 0.0

    def report(self, timings: bool = False) -> dict:
        out = {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "linear_residual": self.linear_residual,
            "residual_norm": self.residual_norm,
            "condition_estimate": self.condition_estimate,
            "flagged": self.flagged,
        }
        if timings:
            out["wall_time"] = self.wall_time
        return out


COND_FLAG = 1e12


def solve(problem: LinearProblem, tol: float = 1e-10, max_iter: int = 10_000,
          method: str = "auto") -> SolveResult:
    """Solve for the interior unknowns and rebuild the full field.

    ``method`` is ``"cg"``, ``"direct"``, ``"eigen"`` or ``"minres"``;
    ``"auto"`` picks CG for Poisson and a dense symmetric-indefinite solve
    for the wave system, switching to the tensor-product eigensolver once
    the unknown count exceeds ``DENSE_CAP``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    op = assemble_matvec(problem)
    if method == "auto":
        if not problem.is_wave:
            method = "cg"
        else:
            method = "direct" if op.n <= DENSE_CAP else "eigen"
    lo, hi = op.eigen_extremes()
    cond = hi / lo if lo > 0 else float("inf")

    bnorm = np.sqrt(_dot(op.rhs, op.rhs))
    if method == "cg":
        x, iters, rel, ok = conjugate_gradient(op.matvec, op.rhs, op.diagonal(), tol, max_iter)
    elif method == "direct":
        if op.n > DENSE_CAP:
            raise SolverError(f"{op.n} unknowns exceed the dense solve cap of {DENSE_CAP}")
        with threadpool_limits(1):
            try:
                x = scipy.linalg.solve(op.dense(), op.rhs, assume_a="sym")
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
                raise SolverError(f"dense solve failed: {exc}") from exc
        r = op.rhs - op.matvec(x)
        rel = np.sqrt(_dot(r, r)) / bnorm if bnorm > 0 else float(np.sqrt(_dot(r, r)))
        iters, ok = 1, bool(rel <= tol)
    elif method == "eigen":
        x = op.eigen_solve(op.rhs)
        r = op.rhs - op.matvec(x)
        rel = np.sqrt(_dot(r, r)) / bnorm if bnorm > 0 else float(np.sqrt(_dot(r, r)))
        iters, ok = 1, bool(rel <= tol)
    elif method == "minres":
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.minres(op.as_linear_operator(), op.rhs, rtol=tol, maxiter=max_iter, callback=cb)
        r = op.rhs - op.matvec(x)
        rel = np.sqrt(_dot(r, r)) / bnorm if bnorm > 0 else 0.0
        iters, ok = count[0], bool(info == 0 and rel <= 10 * tol)
    else:
        raise ValueError(f"unknown method {method!r}")

    full = op.lift.copy()
    full[problem.grid.interior_slices()] = x.reshape(problem.grid.interior_shape)
    u = Field(problem.grid, full[np.newaxis])
    res = el_residual(problem.density(), problem.order, u).interior_norm
    flagged = (not ok) or cond > COND_FLAG
    if flagged:
        logger.warning("solve flagged: converged=%s cond=%.3g", ok, cond)
    return SolveResult(u, res, int(iters), method, float(rel), ok, float(cond), flagged,
                       time.perf_counter() - t0)


def manufacture_source(kind: str, order: FracOrder, grid: Grid, u_target: Field,
                       params: MaterialParams | None = None) -> Field:
    """Source ``f = K u*`` making ``u_target`` the exact discrete solution."""
    if u_target.grid != grid or u_target.components != 1:
        raise ValueError("target must be a scalar field on the given grid")
    return Field(grid, apply_operator(kind, order, grid, u_target.data[0], params)[np.newaxis])


def problem_with_target(kind: str, order: FracOrder, u_target: Field,
                        params: MaterialParams | None = None) -> LinearProblem:
    """Manufactured problem: source from ``u_target`` and its boundary values as data."""
    grid = u_target.grid
    params = params if params is not None or kind == "poisson" else MaterialParams()
    f = manufacture_source(kind, order, grid, u_target, params)
    return LinearProblem(kind, grid, order, params, f, u_target)
