"""Seeded property batteries behind ``fracvar verify``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .fracops import FracOrder, Kind, apply_array, make_op
from .grid import Field, interior_projection, make_grid
from .lagrangian import MaterialParams, builtin_poisson, builtin_wave
from .noether import Generator, noether_sum
from .variational import gradient_check

SUITES = ("ibp", "kernel", "limit", "noether-identity", "gradcheck")


@dataclass
class Case:
    name: str
    tolerance: float
    defect: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def ibp(seed: int = 0, sizes=(64, 512), alphas=(0.25, 0.5, 0.75, 1.0), pairs: int = 50) -> list[Case]:
    """``<g, L f> = <f, L^T g>`` for derivative and integral operators."""
    rng = np.random.default_rng(seed)
    cases = []
    for n in sizes:
        grid = make_grid([0.0], [1.0], [n])
        for a in alphas:
            for kind in (Kind.LEFT_DERIVATIVE, Kind.LEFT_INTEGRAL):
                left = make_op(kind, a, 0, grid)
                right = make_op(kind.mirrored(), a, 0, grid)
                worst = 0.0
                for _ in range(pairs):
                    f, g = rng.standard_normal((2, n))
                    f[[0, -1]] = 0.0
                    g[[0, -1]] = 0.0
                    lhs = float(np.sum(g * apply_array(left, f)))
                    rhs = float(np.sum(f * apply_array(right, g)))
                    worst = max(worst, abs(lhs - rhs) / (abs(lhs) + 1.0))
                cases.append(Case(f"{kind.value} alpha={a} N={n}", 1e-12, worst, worst <= 1e-12))
    return cases


def kernel_profile(alpha: float, sizes=(65, 129, 257, 513)) -> dict:
    """Left derivative of sampled ``x**(alpha-1)`` on [0, 1], singular node set to 0.

    Returns the max over the interior nodes of the coarsest grid (a node
    set shared by every refinement) and, for reference, over all interior
    nodes of each grid.
    """
    base = sizes[0] - 1
    fixed, full = [], []
    for n in sizes:
        if (n - 1) % base:
            raise ValueError("refinements must nest the coarsest grid")
        grid = make_grid([0.0], [1.0], [n])
        x = grid.coords(0)
        xi = np.zeros(n)
        xi[1:] = x[1:] ** (alpha - 1.0)
        d = apply_array(make_op(Kind.LEFT_DERIVATIVE, alpha, 0, grid), xi)
        step = (n - 1) // base
        fixed.append(float(np.max(np.abs(d[step:-1:step]))))
        full.append(float(np.max(np.abs(d[1:-1]))))
    return {"alpha": alpha, "sizes": list(sizes), "fixed_nodes": fixed, "all_interior": full}


def kernel(seed: int = 0, alphas=(0.5, 0.75)) -> list[Case]:
    cases = []
    for a in alphas:
        prof = kernel_profile(a)
        v = prof["fixed_nodes"]
        monotone = all(y < x for x, y in zip(v, v[1:]))
        ratio = v[-1] / v[0]
        cases.append(Case(
            f"kernel alpha={a}", 0.1, ratio, monotone and ratio <= 0.1,
            f"fixed-node norms {v}; all-interior norms {prof['all_interior']}",
        ))
    return cases


def limit(seed: int = 0, n: int = 2049, alpha: float = 0.999) -> list[Case]:
    grid = make_grid([0.0], [1.0], [n])
    x = grid.coords(0)
    f = np.sin(x)
    d = apply_array(make_op(Kind.LEFT_DERIVATIVE, alpha, 0, grid), f)
    dev = float(np.max(np.abs(d[1:-1] - np.cos(x[1:-1]))))
    d1 = apply_array(make_op(Kind.LEFT_DERIVATIVE, 1.0, 0, grid), f)
    backward = np.concatenate([[f[0]], np.diff(f)]) / grid.spacing[0]
    mismatches = int(np.count_nonzero(d1 != backward))
    return [
        Case(f"alpha={alpha} vs cos, N={n}", 2e-2, dev, dev <= 2e-2),
        Case("alpha=1 equals backward difference bitwise", 0.0, float(mismatches), mismatches == 0),
    ]


def _random_setup(rng, n: int, dims: int = 3):
    grid = make_grid([0.0] * dims, [1.0] * dims, [n] * dims)
    order = FracOrder(tuple(rng.uniform(0.3, 0.95, dims)))
    source = Field(grid, rng.standard_normal(grid.shape))
    densities = [
        builtin_poisson(source),
        builtin_wave(MaterialParams(1.0 + rng.random(), 1.0 + rng.random()), True, dims),
    ]
    return grid, order, densities


def noether_identity(seed: int = 0, trials: int = 20, n: int = 9) -> list[Case]:
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(trials):
        grid, order, densities = _random_setup(rng, n)
        u = Field(grid, rng.standard_normal(grid.shape))
        xi = Generator(Field(grid, rng.standard_normal(grid.shape)))
        for dens in densities:
            rep = noether_sum(dens, order, u, xi)
            worst[dens.label] = max(worst.get(dens.label, 0.0), rep.identity_defect / rep.scale)
    return [Case(f"noether identity {k}", 1e-10, v, v <= 1e-10) for k, v in worst.items()]


def gradcheck(seed: int = 0, trials: int = 20, n: int = 9, eps: float = 1e-4) -> list[Case]:
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(trials):
        grid, order, densities = _random_setup(rng, n)
        mask = grid.boundary_mask()
        u = Field(grid, rng.standard_normal(grid.shape))
        h = interior_projection(Field(grid, rng.standard_normal(grid.shape)), mask)
        for dens in densities:
            rep = gradient_check(dens, order, u, h, eps)
            scale = max(1.0, abs(rep.pairing))
            worst[dens.label] = max(worst.get(dens.label, 0.0), abs(rep.quotient - rep.pairing) / scale)
    return [Case(f"gradient consistency {k}", 1e-8, v, v <= 1e-8) for k, v in worst.items()]


def run_suite(name: str, seed: int = 0) -> list[Case]:
    fn = {
        "ibp": ibp,
        "kernel": kernel,
        "limit": limit,
        "noether-identity": noether_identity,
        "gradcheck": gradcheck,
    }.get(name)
    if fn is None:
        raise KeyError(name)
    return fn(seed=seed)
