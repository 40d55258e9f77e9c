import numpy as np
import pytest

from fracvar.errors import SolverError
from fracvar.fracops import FracOrder
from fracvar.grid import Field, make_grid, sample
from fracvar.io import profile_field
from fracvar.lagrangian import MaterialParams
from fracvar.solver import (
    DENSE_CAP,
    LinearProblem,
    assemble_matvec,
    conjugate_gradient,
    manufacture_source,
    problem_with_target,
    solve,
)


def _poisson(grid, alpha, source=None, dirichlet=None):
    source = source if source is not None else Field.zeros(grid)
    return LinearProblem("poisson", grid, FracOrder.uniform(alpha, grid.dims), source=source, dirichlet=dirichlet)


def test_poisson_alpha_one_1d_tridiagonal():
    g = make_grid([0], [1], [5])
    op = assemble_matvec(_poisson(g, 1.0))
    m = np.column_stack([op.matvec(e) for e in np.eye(3)])
    # oracle: dense product A^T A of the 5x5 backward-difference matrix, interior block
    a = (np.eye(5) - np.eye(5, k=-1)) / 0.25
    np.testing.assert_allclose(m, (a.T @ a)[1:-1, 1:-1], rtol=1e-14)
    np.testing.assert_allclose(m, 16 * (2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)), rtol=1e-14)
    np.testing.assert_allclose(op.dense(), m, rtol=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.75, 1.0])
def test_matvec_linear_and_symmetric(alpha, rng):
    g = make_grid([0, 0], [1, 1], [9, 8])
    op = assemble_matvec(_poisson(g, alpha))
    v, w = rng.standard_normal((2, op.n))
    a, b = 1.7, -0.4
    np.testing.assert_allclose(op.matvec(a * v + b * w), a * op.matvec(v) + b * op.matvec(w), rtol=1e-12, atol=1e-9)
    assert op.matvec(v) @ w == pytest.approx(v @ op.matvec(w), rel=1e-12)
    dense = np.column_stack([op.matvec(e) for e in np.eye(op.n)])
    np.testing.assert_allclose(dense, dense.T, rtol=1e-12, atol=1e-12 * np.abs(dense).max())
    np.testing.assert_allclose(op.dense(), dense, rtol=1e-12, atol=1e-12 * np.abs(dense).max())
    assert v @ op.matvec(v) > 0


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9, 1.0])
def test_poisson_operator_positive_definite(alpha):
    g = make_grid([0, 0], [1, 1], [7, 7])
    lo, hi = assemble_matvec(_poisson(g, alpha)).eigen_extremes()
    dense = assemble_matvec(_poisson(g, alpha)).dense()
    ev = np.linalg.eigvalsh(dense)
    assert ev.min() > 0
    assert lo == pytest.approx(ev.min(), rel=1e-8) and hi == pytest.approx(ev.max(), rel=1e-10)


def test_manufacture_zero():
    g = make_grid([0, 0], [1, 1], [5, 5])
    assert not manufacture_source("poisson", FracOrder((0.5, 0.5)), g, Field.zeros(g)).data.any()


def test_manufacture_quadratic_1d():
    g = make_grid([0], [1], [5])
    u = sample(g, 1, lambda x: x * (1 - x))
    f = manufacture_source("poisson", FracOrder((1.0,)), g, u).values
    np.testing.assert_allclose(f[1:-1], 2.0, rtol=1e-13)


def test_poisson_manufactured_sine_alpha_one():
    g = make_grid([0, 0], [1, 2], [17, 17])
    order = FracOrder((1.0, 1.0))
    target = profile_field(g, "sine")
    res = solve(problem_with_target("poisson", order, target), tol=1e-12)
    assert res.method == "cg" and res.converged
    np.testing.assert_allclose(res.u.data, target.data, atol=1e-9)


def test_classical_limit_continuity():
    g = make_grid([0, 0], [1, 1], [33, 33])
    f = manufacture_source("poisson", FracOrder((1.0, 1.0)), g, profile_field(g, "sine"))
    one = solve(LinearProblem("poisson", g, FracOrder((1.0, 1.0)), source=f), 1e-10)
    near = solve(LinearProblem("poisson", g, FracOrder((0.999, 0.999)), source=f), 1e-10)
    assert np.abs(one.u.data - near.u.data).max() <= 5e-2


def test_wave_zero_data_gives_zero():
    g = make_grid([0, 0, 0], [1, 1, 1], [7, 7, 7])
    res = solve(LinearProblem("wave-frac-space", g, FracOrder((0.75,) * 3), MaterialParams()), 1e-10)
    assert not res.u.data.any()


@pytest.mark.parametrize("kind", ["wave-frac-space", "wave-classical-space"])
def test_wave_round_trip_direct_and_eigen(kind):
    g = make_grid([0, 0, 0], [1, 1, 1], [9, 8, 7])
    target = profile_field(g, "smooth")
    prob = problem_with_target(kind, FracOrder((0.75, 0.6, 0.5)), target, MaterialParams(1.2, 0.9))
    for method in ("direct", "eigen"):
        res = solve(prob, 1e-12, method=method)
        assert res.converged and res.method == method
        np.testing.assert_allclose(res.u.data, target.data, atol=1e-9)


def test_wave_minres_available():
    g = make_grid([0, 0], [1, 1.3], [9, 9])
    target = profile_field(g, "smooth")
    prob = problem_with_target("wave-frac-space", FracOrder((0.75, 0.75)), target)
    res = solve(prob, 1e-10, max_iter=500, method="minres")
    assert res.method == "minres"
    assert np.abs(res.u.data - target.data).max() < 1e-6


def test_dense_cap_enforced():
    n = int(round((DENSE_CAP + 1) ** (1 / 3))) + 3
    g = make_grid([0, 0, 0], [1, 1, 1], [n, n, n])
    prob = LinearProblem("wave-frac-space", g, FracOrder((0.75,) * 3), MaterialParams())
    with pytest.raises(SolverError):
        solve(prob, 1e-10, method="direct")


def test_residual_recomputed_independently():
    g = make_grid([0, 0], [1, 1], [17, 17])
    f = sample(g, 1, lambda x, y: 1 + x * y)
    res = solve(_poisson(g, 0.6, source=f), 1e-11)
    from fracvar.lagrangian import builtin_poisson
    from fracvar.variational import el_residual

    assert res.residual_norm == el_residual(builtin_poisson(f), FracOrder((0.6, 0.6)), res.u).interior_norm
    rhs = assemble_matvec(_poisson(g, 0.6, source=f)).rhs
    assert res.residual_norm <= 10 * 1e-11 * np.linalg.norm(rhs)


def test_nonconvergence_is_flagged():
    g = make_grid([0, 0], [1, 1], [17, 17])
    res = solve(_poisson(g, 0.5, source=sample(g, 1, lambda x, y: np.exp(x))), 1e-12, max_iter=2)
    assert not res.converged and res.flagged and res.iterations == 2


def test_cg_on_spd_matrix(rng):
    q = rng.standard_normal((20, 20))
    a = q @ q.T + 20 * np.eye(20)
    b = rng.standard_normal(20)
    x, it, rel, ok = conjugate_gradient(lambda v: a @ v, b, np.diag(a), 1e-12, 200)
    assert ok and rel <= 1e-12
    np.testing.assert_allclose(a @ x, b, atol=1e-10)


def test_problem_validation():
    g = make_grid([0, 0], [1, 1], [5, 5])
    with pytest.raises(ValueError):
        LinearProblem("heat", g, FracOrder((0.5, 0.5)))
    with pytest.raises(ValueError):
        LinearProblem("poisson", g, FracOrder((0.5, 0.5)))
    with pytest.raises(ValueError):
        LinearProblem("wave-frac-space", g, FracOrder((0.5, 0.5)))
    with pytest.raises(ValueError):
        LinearProblem("poisson", g, FracOrder((0.5,)), source=Field.zeros(g))


def test_singular_wave_is_flagged():
    # identical time and space axes: rho A0^T A0 - k A1^T A1 has a zero mode
    g = make_grid([0, 0], [1, 1], [9, 9])
    prob = problem_with_target("wave-frac-space", FracOrder((0.75, 0.75)), profile_field(g, "smooth"))
    assert assemble_matvec(prob).eigen_extremes()[0] < 1e-10
    with pytest.raises(SolverError):
        solve(prob, 1e-10, method="eigen")
    res = solve(prob, 1e-10, method="minres", max_iter=50)
    assert res.flagged
