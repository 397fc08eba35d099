import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvimex.errors import GridError
from fvimex.mesh import State, build_grid, l1_error, project_initial


def test_unit_interval_four_cells():
    g = build_grid(0.0, 1.0, 4)
    np.testing.assert_allclose(g.edges, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(g.centers, [0.125, 0.375, 0.625, 0.875])


def test_barrier_domain_spacing():
    assert build_grid(200.0, 1000.0, 50).ds == 16.0


@pytest.mark.parametrize("args", [(0.0, 1.0, 2), (1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, np.inf, 10)])
def test_bad_grids_rejected(args):
    with pytest.raises(GridError):
        build_grid(*args)


@given(
    st.floats(-1e3, 1e3),
    st.floats(1e-2, 1e4),
    st.integers(3, 2000),
)
def test_grid_invariants(s_min, width, n):
    g = build_grid(s_min, s_min + width, n)
    assert g.edges.size == n + 1
    assert np.all(np.diff(g.edges) > 0)
    ulp = np.spacing(np.max(np.abs(g.edges)))
    assert np.max(np.abs(np.diff(g.edges) - g.ds)) <= 8 * ulp
    np.testing.assert_array_equal(g.centers, 0.5 * (g.edges[:-1] + g.edges[1:]))


def test_grid_arrays_are_read_only():
    g = build_grid(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        g.centers[0] = 3.0


def test_state_rejects_non_finite():
    with pytest.raises(ValueError):
        State(np.array([1.0, np.nan, 2.0]))


def test_ramp_cell_fully_above_strike():
    g = build_grid(0.0, 10.0, 10)
    K = 3.0
    u = project_initial(g, lambda s: np.maximum(s - K, 0.0), (K,))
    above = g.edges[:-1] >= K
    np.testing.assert_allclose(u.values[above], g.centers[above] - K, rtol=0, atol=1e-13)


@given(st.floats(0.01, 0.99))
def test_ramp_cell_straddling_strike(frac):
    # cell [a, b] with a < K < b averages to (b - K)^2 / (2 (b - a))
    g = build_grid(0.0, 3.0, 3)
    a, b = 1.0, 2.0
    K = a + frac
    u = project_initial(g, lambda s: np.maximum(s - K, 0.0), (K,))
    assert u.values[1] == pytest.approx((b - K) ** 2 / (2 * (b - a)), rel=1e-12)


def test_zero_payoff():
    g = build_grid(0.0, 1.0, 7)
    u = project_initial(g, lambda s: np.zeros_like(s))
    assert np.all(u.values == 0.0)
    assert u.time == 0.0


def test_jump_is_averaged_exactly():
    # knocked payoff: 0 below B, s - K above, B inside a cell
    g = build_grid(0.0, 4.0, 4)
    B, K = 1.5, 0.5
    u = project_initial(g, lambda s: np.where(s > B, s - K, 0.0), (B, K))
    # cell [1, 2]: half of it at zero, the other half averages 1.75 - 0.5
    assert u.values[1] == pytest.approx(0.5 * 1.25, rel=1e-14)


@settings(max_examples=50)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(3, 300))
def test_linear_payoff_is_exact(a, b, n):
    g = build_grid(-1.0, 2.0, n)
    u = project_initial(g, lambda s: a * s + b, (0.3, 1.1))
    exact = a * g.centers + b
    tol = 4 * np.spacing(np.max(np.abs(exact)) + 1.0) * 4
    assert np.max(np.abs(u.values - exact)) <= tol


def test_l1_zero_for_exact_data():
    f = np.cos
    for n in (10, 100, 1000):
        g = build_grid(0.0, 3.0, n)
        assert l1_error(g, State(f(g.centers)), f) == 0.0


def test_l1_constant_offset():
    g = build_grid(2.0, 7.0, 40)
    eps = 1e-3
    assert l1_error(g, State(g.centers + eps), lambda s: s) == pytest.approx(eps * 5.0, rel=1e-9)


@given(st.floats(-100, 100))
def test_l1_homogeneous(c):
    g = build_grid(0.0, 1.0, 32)
    rng = np.random.default_rng(0)
    d = rng.normal(size=32)
    base = l1_error(g, State(d), lambda s: np.zeros_like(s))
    scaled = l1_error(g, State(c * d), lambda s: np.zeros_like(s))
    assert scaled == pytest.approx(abs(c) * base, rel=1e-12, abs=1e-300)
