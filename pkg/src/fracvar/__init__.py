"""Fractional variational calculus on uniform grids."""

from .errors import FracvarError, GridError, NonFiniteError, OrderError, SolverError
from .fracops import (
    FracOp,
    FracOrder,
    Kind,
    adjoint,
    apply_axis,
    frac_gradient,
    gl_weights,
    integral_weights,
    make_op,
)
from .grid import BoundaryMask, Field, Grid, interior_projection, make_grid, sample
from .lagrangian import (
    LagrangianDensity,
    MaterialParams,
    action,
    builtin_poisson,
    builtin_wave,
    validate_partials,
)
from .noether import (
    Generator,
    NoetherReport,
    classical_current_divergence,
    constant_generator,
    d_op,
    invariance_residual,
    noether_sum,
    power_generator,
)
from .solver import LinearProblem, SolveResult, assemble_matvec, manufacture_source, solve
from .variational import ElResidual, el_residual, gradient_check

__version__ = "0.1.0"
