"""Field files, problem spec files and built-in analytic profiles.

Field file (JSON)::

    {"grid": {"lower": [...], "upper": [...], "nodes": [...]},
     "components": m,
     "values": [...]}          # flat, component-major, row-major nodes

Problem spec (JSON)::

    {"kind": "poisson" | "wave-frac-space" | "wave-classical-space",
     "grid": {...}, "alpha": [...], "rho": 1.0, "k": 1.0,
     "source": "zero" | "file:<path>" | "manufactured:<profile>",
     "dirichlet": "zero" | "file:<path>" | "manufactured:<profile>",
     "tol": 1e-10, "max_iter": 10000, "method": "auto"}

Relative paths inside a spec resolve against the spec's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fracops import FracOrder
from .grid import Field, Grid, make_grid, sample
from .lagrangian import MaterialParams
from .solver import LinearProblem, manufacture_source


def _normalised(grid: Grid, x: list[np.ndarray]) -> list[np.ndarray]:
    return [(xi - a) / (b - a) for xi, a, b in zip(x, grid.lower, grid.upper)]


def _sine(grid: Grid, *x):
    out = 1.0
    for s in _normalised(grid, list(x)):
        out = out * np.sin(np.pi * s)
    return out


def _smooth(grid: Grid, *x):
    s = _normalised(grid, list(x))
    alt = sum(((-1) ** i) * si for i, si in enumerate(s))
    out = 1.0 + 0.5 * s[0] + np.sin(alt)
    if len(s) > 1:
        out = out + np.prod(s[1:], axis=0)
    return out


PROFILES = {"sine": _sine, "smooth": _smooth}


def profile_field(grid: Grid, name: str) -> Field:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    fn = PROFILES[name]
    return sample(grid, 1, lambda *x: fn(grid, *x))


def field_to_dict(field: Field) -> dict:
    return {
        "grid": field.grid.to_dict(),
        "components": field.components,
        "values": [float(v) for v in field.values],
    }


def field_from_dict(doc: dict) -> Field:
    g = doc["grid"]
    grid = make_grid(g["lower"], g["upper"], g["nodes"])
    return Field.from_flat(grid, int(doc["components"]), doc["values"])


def write_json(path: Path | str, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")


def write_field(path: Path | str, field: Field) -> None:
    Path(path).write_text(json.dumps(field_to_dict(field), allow_nan=False) + "\n")


def read_field(path: Path | str) -> Field:
    return field_from_dict(json.loads(Path(path).read_text()))


@dataclass
class ProblemSpec:
    problem: LinearProblem
    tol: float
    max_iter: int
    method: str
    raw: dict


def _resolve(ref: str, base: Path) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else base / p


def _data_field(ref: str, grid: Grid, base: Path, what: str, make_source=None) -> Field | None:
    if ref == "zero":
        return Field.zeros(grid)
    if ref.startswith("file:"):
        f = read_field(_resolve(ref[5:], base))
        if f.grid != grid or f.components != 1:
            raise ValueError(f"{what} file does not hold a scalar field on the problem grid")
        return f
    if ref.startswith("manufactured:"):
        target = profile_field(grid, ref.split(":", 1)[1])
        return make_source(target) if make_source else target
    raise ValueError(f"cannot interpret {what} reference {ref!r}")


def load_problem_spec(doc: dict, base: Path | str = ".") -> ProblemSpec:
    base = Path(base)
    g = doc["grid"]
    grid = make_grid(g["lower"], g["upper"], g["nodes"])
    kind = doc["kind"]
    order = FracOrder(tuple(float(a) for a in doc["alpha"]))
    params = None
    if kind != "poisson":
        params = MaterialParams(float(doc.get("rho", 1.0)), float(doc.get("k", 1.0)))

    def make_source(target):
        return manufacture_source(kind, order, grid, target, params)

    source_ref = doc.get("source", "zero")
    source = _data_field(source_ref, grid, base, "source", make_source)
    if kind != "poisson" and source_ref == "zero":
        source = None
    dirichlet = _data_field(doc.get("dirichlet", "zero"), grid, base, "dirichlet")
    problem = LinearProblem(kind, grid, order, params, source, dirichlet)
    return ProblemSpec(
        problem,
        float(doc.get("tol", 1e-10)),
        int(doc.get("max_iter", 10_000)),
        str(doc.get("method", "auto")),
        doc,
    )


def read_problem_spec(path: Path | str) -> ProblemSpec:
    path = Path(path)
    return load_problem_spec(json.loads(path.read_text()), path.parent)
