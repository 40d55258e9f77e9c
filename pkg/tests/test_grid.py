import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracvar.errors import GridError, NonFiniteError
from fracvar.grid import Field, interior_projection, make_grid, sample


def test_spacing_1d():
    assert make_grid([0], [1], [5]).spacing == (0.25,)


def test_spacing_3d():
    assert make_grid([0, 0, 0], [1, 2, 1], [3, 5, 3]).spacing == (0.5, 0.5, 0.5)


@pytest.mark.parametrize(
    "lower, upper, nodes",
    [([0], [0], [5]), ([1], [0], [5]), ([0], [1], [2]), ([0, 0], [1], [3, 3])],
)
def test_make_grid_rejects(lower, upper, nodes):
    with pytest.raises(GridError):
        make_grid(lower, upper, nodes)


def test_sample_identity():
    g = make_grid([0], [1], [3])
    np.testing.assert_array_equal(sample(g, 1, lambda x: x).values, [0, 0.5, 1])


def test_sample_product_row_major():
    g = make_grid([0, 0], [1, 1], [3, 3])
    f = sample(g, 1, lambda t, x: t * x)
    # node (1, 1) sits at flat index 1*3 + 1
    assert f.values[4] == 0.25
    assert f.data[0, 1, 1] == 0.25


def test_sample_reports_bad_node():
    g = make_grid([0], [1], [5])
    with pytest.raises(NonFiniteError) as err:
        with np.errstate(divide="ignore"):
            sample(g, 1, lambda x: 1.0 / (x - 0.5))
    assert err.value.node == (2,)


def test_sample_multicomponent_layout():
    g = make_grid([0, 0], [1, 1], [3, 4])
    f = sample(g, 2, lambda t, x: (t, x + 10))
    assert f.values.shape == (2 * 12,)
    np.testing.assert_array_equal(f.values[12:], (g.mesh()[1] + 10).reshape(-1))


def test_boundary_mask_flags():
    g = make_grid([0, 0, 0], [1, 1, 1], [3, 4, 5])
    flags = g.boundary_mask().flags
    for idx in np.ndindex(*g.shape):
        on = any(i in (0, n - 1) for i, n in zip(idx, g.shape))
        assert flags[idx] == on


def test_interior_projection_examples():
    g1 = make_grid([0], [1], [3])
    ones = Field(g1, np.ones((1, 3)))
    np.testing.assert_array_equal(interior_projection(ones, g1.boundary_mask()).values, [0, 1, 0])
    zero = Field.zeros(g1)
    np.testing.assert_array_equal(interior_projection(zero, g1.boundary_mask()).values, 0)
    g2 = make_grid([0, 0], [1, 1], [3, 3])
    out = interior_projection(Field(g2, np.ones((1, 3, 3))), g2.boundary_mask())
    assert out.values.sum() == 1 and out.data[0, 1, 1] == 1


def test_interior_projection_grid_mismatch():
    a, b = make_grid([0], [1], [3]), make_grid([0], [1], [4])
    with pytest.raises(GridError):
        interior_projection(Field.zeros(a), b.boundary_mask())


def test_field_is_immutable():
    f = Field.zeros(make_grid([0], [1], [3]))
    with pytest.raises(ValueError):
        f.data[0, 0] = 1.0


@settings(max_examples=40, deadline=None)
@given(
    nodes=st.lists(st.integers(3, 6), min_size=1, max_size=3),
    seed=st.integers(0, 2**31 - 1),
)
def test_interior_projection_idempotent(nodes, seed):
    g = make_grid([0.0] * len(nodes), [1.0] * len(nodes), nodes)
    f = Field(g, np.random.default_rng(seed).standard_normal((2, *nodes)))
    once = interior_projection(f, g.boundary_mask())
    twice = interior_projection(once, g.boundary_mask())
    np.testing.assert_array_equal(once.data, twice.data)


@settings(max_examples=25, deadline=None)
@given(coef=st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_sample_polynomial_readback(coef):
    g = make_grid([-1.0, 0.0], [2.0, 1.0], [5, 7])
    f = sample(g, 1, lambda t, x: coef[0] + coef[1] * t * x + coef[2] * x**2)
    t, x = g.mesh()
    np.testing.assert_allclose(f.data[0], coef[0] + coef[1] * t * x + coef[2] * x**2, rtol=0, atol=1e-14)
