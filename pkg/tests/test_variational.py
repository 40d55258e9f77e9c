import numpy as np
import pytest

from fracvar.errors import GridError
from fracvar.fracops import FracOrder, Kind, make_op
from fracvar.grid import Field, interior_projection, make_grid, sample
from fracvar.lagrangian import MaterialParams, builtin_poisson, builtin_wave
from fracvar.solver import manufacture_source
from fracvar.variational import el_residual, gradient_check, pairing


def dense_axis(grid, order, i):
    """Full-grid matrix of the left derivative along axis i (Kronecker form)."""
    mats = [np.eye(n) for n in grid.nodes]
    mats[i] = make_op(Kind.LEFT_DERIVATIVE, order[i], i, grid).matrix()
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def test_zero_extremal():
    g = make_grid([0, 0], [1, 1], [6, 6])
    r = el_residual(builtin_poisson(Field.zeros(g)), FracOrder((0.4, 0.6)), Field.zeros(g))
    assert not r.field.data.any() and r.interior_norm == 0.0


def test_poisson_classical_manufactured():
    g = make_grid([0, 0], [1, 1], [9, 9])
    order = FracOrder((1.0, 1.0))
    u = sample(g, 1, lambda x, y: x * (1 - x) * y * (1 - y))
    f = manufacture_source("poisson", order, g, u)
    r = el_residual(builtin_poisson(f), order, u)
    assert r.interior_norm <= 1e-10


def test_wave_residual_matches_dense(rng):
    g = make_grid([0, 0, 0], [1, 1, 2], [5, 6, 4])
    order = FracOrder((0.7, 0.35, 0.9))
    rho, k = 1.4, 0.8
    u = rng.standard_normal(g.shape)
    a = [dense_axis(g, order, i) for i in range(3)]
    ref = rho * a[0].T @ a[0] @ u.reshape(-1) - k * sum(ai.T @ ai @ u.reshape(-1) for ai in a[1:])
    r = el_residual(builtin_wave(MaterialParams(rho, k), True, 3), order, Field(g, u))
    np.testing.assert_allclose(r.field.values, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_interior_norm_ignores_boundary(rng):
    g = make_grid([0, 0], [1, 1], [5, 5])
    u = Field(g, rng.standard_normal(g.shape))
    r = el_residual(builtin_poisson(Field.zeros(g)), FracOrder((0.5, 0.5)), u)
    assert r.interior_norm == np.abs(r.field.data[0, 1:-1, 1:-1]).max()


def test_gradient_check_quadratic_17cube(rng):
    g = make_grid([0] * 3, [1] * 3, [17] * 3)
    order = FracOrder((0.6, 0.75, 0.4))
    u = Field(g, rng.standard_normal(g.shape))
    h = interior_projection(Field(g, rng.standard_normal(g.shape)), g.boundary_mask())
    for dens in (builtin_poisson(Field(g, rng.standard_normal(g.shape))),
                 builtin_wave(MaterialParams(1.0, 2.0), True, 3)):
        rep = gradient_check(dens, order, u, h, 1e-4)
        assert rep.passed
        assert abs(rep.quotient - rep.pairing) <= 1e-9 * max(1.0, abs(rep.pairing))


def test_gradient_check_zero_variation(cube9, rng):
    u = Field(cube9, rng.standard_normal(cube9.shape))
    rep = gradient_check(builtin_wave(MaterialParams(), True, 3), FracOrder((0.5,) * 3), u, Field.zeros(cube9))
    assert rep.quotient == 0.0 and rep.pairing == 0.0


def test_gradient_check_rejects_boundary_variation(cube9):
    with pytest.raises(GridError):
        gradient_check(builtin_wave(MaterialParams(), True, 3), FracOrder((0.5,) * 3),
                       Field.zeros(cube9), Field(cube9, np.ones(cube9.shape)))


def test_gradient_check_at_solution():
    from fracvar.solver import LinearProblem, solve

    g = make_grid([0, 0], [1, 1], [17, 17])
    order = FracOrder((0.6, 0.8))
    f = sample(g, 1, lambda x, y: np.exp(x - y))
    res = solve(LinearProblem("poisson", g, order, source=f), tol=1e-12)
    h = interior_projection(sample(g, 1, lambda x, y: np.sin(3 * x) * np.cos(2 * y)), g.boundary_mask())
    rep = gradient_check(builtin_poisson(f), order, res.u, h)
    hnorm = np.sqrt(pairing(h, h))
    assert abs(rep.pairing) <= res.residual_norm * hnorm * 10
    assert res.residual_norm < 1e-8


def test_exact_variational_identity_bilinear(rng):
    # <R(u), h> equals the closed-form derivative sum_i c_i <A_i u, A_i h> - <f, h>
    g = make_grid([0, 0, 0], [1, 1, 1], [6, 5, 7])
    order = FracOrder((0.3, 0.55, 0.85))
    u = rng.standard_normal(g.shape)
    h = interior_projection(Field(g, rng.standard_normal(g.shape)), g.boundary_mask()).data[0]
    f = rng.standard_normal(g.shape)
    a = [dense_axis(g, order, i) for i in range(3)]
    vol = np.prod(g.spacing)
    uf, hf = u.reshape(-1), h.reshape(-1)
    closed = (sum((ai @ uf) @ (ai @ hf) for ai in a) - f.reshape(-1) @ hf) * vol
    r = el_residual(builtin_poisson(Field(g, f)), order, Field(g, u)).field
    assert pairing(r, Field(g, h)) == pytest.approx(closed, rel=1e-12)


def test_alpha_one_is_discrete_laplacian():
    g = make_grid([0, 0], [1, 1], [9, 9])
    order = FracOrder((1.0, 1.0))
    n = g.size
    cols = []
    dens = builtin_poisson(Field.zeros(g))
    for e in np.eye(n):
        cols.append(el_residual(dens, order, Field(g, e.reshape(g.shape))).field.values)
    m = np.array(cols).T
    interior = g.boundary_mask().interior.reshape(-1)
    h = g.spacing[0]
    k1 = (np.diag(np.full(7, 2.0)) - np.diag(np.ones(6), 1) - np.diag(np.ones(6), -1)) / h**2
    lap = np.kron(k1, np.eye(7)) + np.kron(np.eye(7), k1)
    np.testing.assert_allclose(m[np.ix_(interior, interior)], lap, rtol=1e-12, atol=1e-9)
