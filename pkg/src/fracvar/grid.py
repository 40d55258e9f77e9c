"""Uniform rectangular space-time grids and fields sampled on them.

Axis 0 is time by convention. Node storage is row-major with axis 0
slowest; a multicomponent field is stored component-major, i.e. the flat
value array is ``data.reshape(-1)`` for ``data`` of shape ``(m, *nodes)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridError, NonFiniteError


@dataclass(frozen=True)
class Grid:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.nodes)):
            raise GridError(
                f"dimension mismatch: lower={len(self.lower)}, "
                f"upper={len(self.upper)}, nodes={len(self.nodes)}"
            )
        if len(self.nodes) == 0:
            raise GridError("grid needs at least one axis")
        for i, (a, b, n) in enumerate(zip(self.lower, self.upper, self.nodes)):
            if not (np.isfinite(a) and np.isfinite(b)) or not b > a:
                raise GridError(f"degenerate interval on axis {i}: [{a}, {b}]")
            if n < 3:
                raise GridError(f"axis {i} has {n} nodes; at least 3 are required")

    @property
    def dims(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (b - a) / (n - 1) for a, b, n in zip(self.lower, self.upper, self.nodes)
        )

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis, ``a + j*h``."""
        a, n = self.lower[axis], self.nodes[axis]
        return a + np.arange(n) * self.spacing[axis]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.coords(i) for i in range(self.dims)), indexing="ij")

    def boundary_mask(self) -> "BoundaryMask":
        flags = np.zeros(self.nodes, dtype=bool)
        for axis, n in enumerate(self.nodes):
            idx = [slice(None)] * self.dims
            idx[axis] = 0
            flags[tuple(idx)] = True
            idx[axis] = n - 1
            flags[tuple(idx)] = True
        flags.setflags(write=False)
        return BoundaryMask(self, flags)

    def interior_slices(self) -> tuple[slice, ...]:
        return tuple(slice(1, n - 1) for n in self.nodes)

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 2 for n in self.nodes)

    def to_dict(self) -> dict:
        return {
            "lower": list(self.lower),
            "upper": list(self.upper),
            "nodes": list(self.nodes),
        }


def make_grid(lower: Sequence[float], upper: Sequence[float], nodes: Sequence[int]) -> Grid:
    """Build a uniform grid; raises :class:`GridError` on bad input."""
    if not (len(lower) == len(upper) == len(nodes)):
        raise GridError(
            f"dimension mismatch: lower={len(lower)}, upper={len(upper)}, nodes={len(nodes)}"
        )
    return Grid(
        tuple(float(a) for a in lower),
        tuple(float(b) for b in upper),
        tuple(int(n) for n in nodes),
    )


@dataclass(frozen=True)
class BoundaryMask:
    grid: Grid
    flags: np.ndarray = field(repr=False)

    @property
    def interior(self) -> np.ndarray:
        return ~self.flags


@dataclass(frozen=True, eq=False)
class Field:
    """Real multicomponent function on a grid; ``data`` has shape ``(m, *nodes)``."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == self.grid.dims:
            data = data[np.newaxis]
        if data.shape[1:] != self.grid.shape or data.shape[0] < 1:
            raise GridError(
                f"field data of shape {data.shape} does not fit grid {self.grid.shape}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Flat row-major, component-major view."""
        return self.data.reshape(-1)

    def component(self, j: int) -> "Field":
        return Field(self.grid, self.data[j : j + 1])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    @classmethod
    def from_flat(cls, grid: Grid, components: int, values) -> "Field":
        values = np.asarray(values, dtype=float)
        if values.size != components * grid.size:
            raise GridError(
                f"expected {components * grid.size} values, got {values.size}"
            )
        return cls(grid, values.reshape((components, *grid.shape)))

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "Field":
        return cls(grid, np.zeros((components, *grid.shape)))


def check_same_grid(*items) -> Grid:
    grids = [it.grid for it in items]
    for g in grids[1:]:
        if g != grids[0]:
            raise GridError("grid mismatch")
    return grids[0]


def first_nonfinite(arr: np.ndarray):
    bad = np.argwhere(~np.isfinite(arr))
    return tuple(int(i) for i in bad[0]) if len(bad) else None


def sample(grid: Grid, m: int, f: Callable[..., object]) -> Field:
    """Evaluate ``f(x0, x1, ...)`` on all nodes.

    ``f`` receives broadcast coordinate arrays, one per axis, and returns
    either an array of the grid shape (``m == 1``) or a sequence of ``m``
    such arrays. Scalars broadcast.
    """
    mesh = grid.mesh()
    out = f(*mesh)
    if m == 1 and not (isinstance(out, (list, tuple)) and len(out) == 1):
        out = [out]
    if len(out) != m:
        raise GridError(f"sampled function returned {len(out)} components, expected {m}")
    data = np.stack([np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in out])
    bad = first_nonfinite(data)
    if bad is not None:
        raise NonFiniteError(
            f"non-finite value {data[bad]} for component {bad[0]} at node {bad[1:]}",
            node=bad[1:],
        )
    return Field(grid, data)


def interior_projection(field: Field, mask: BoundaryMask) -> Field:
    """Copy of ``field`` with every boundary node set to zero."""
    if mask.grid != field.grid:
        raise GridError("grid mismatch between field and boundary mask")
    data = field.data.copy()
    data[:, mask.flags] = 0.0
    return Field(field.grid, data)
