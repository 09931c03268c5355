import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirchhoff_ocp.fem import assemble, interpolate_nodal
from kirchhoff_ocp.forward import (
    CoefficientError,
    ForwardConfig,
    ForwardError,
    StateSolver,
    residual_state,
    solve_state,
)
from kirchhoff_ocp.mesh import generate_rect
from oracles import cubic_energy_root, state_residual_loop

SQUARE = (-0.5, 0.5, -0.5, 0.5)


@pytest.fixture(scope="module")
def mesh16():
    return generate_rect(*SQUARE, 16)


@pytest.fixture(scope="module")
def ops16(mesh16):
    return assemble(mesh16)


def km_norm(ops, v):
    return float(np.sqrt(v @ ((ops.K + ops.M) @ v)))


def test_residual_at_zero_state(ops4):
    n = ops4.n
    u = np.linspace(1, 2, n)
    f = np.full(n, 100.0)
    e = residual_state(np.zeros(n), u, ops4, f, np.ones(n))
    np.testing.assert_array_equal(e[ops4.boundary], 0.0)
    np.testing.assert_allclose(e[ops4.interior], -(ops4.M_lumped * f / u)[ops4.interior], rtol=1e-15)


def test_residual_matches_loop_oracle():
    m = generate_rect(*SQUARE, 2)
    ops = assemble(m)
    rng = np.random.default_rng(3)
    n = ops.n
    y, u, f, b = rng.normal(size=n), rng.uniform(1, 2, n), rng.uniform(10, 20, n), rng.uniform(0, 1, n)
    e = residual_state(y, u, ops, f, b)
    ref = state_residual_loop(y, u, f, b, ops.K.toarray().tolist(), ops.M_lumped, ops.boundary)
    np.testing.assert_allclose(e, ref, rtol=1e-14, atol=1e-14)


def test_residual_rejects_nonpositive_coefficient(ops4):
    n = ops4.n
    u = np.ones(n)
    u[np.flatnonzero(ops4.interior)[0]] = -1.0
    with pytest.raises(CoefficientError):
        residual_state(np.zeros(n), u, ops4, np.ones(n), np.zeros(n))


def test_local_case_is_poisson(mesh16, ops16):
    n = ops16.n
    f = interpolate_nodal(mesh16, 100.0)
    solver = StateSolver(ops16, f, np.zeros(n))
    y = solver.solve(np.ones(n))
    yp = solver.poisson(ops16.M_lumped * f)
    np.testing.assert_allclose(y, yp, rtol=1e-12, atol=1e-14)
    assert solver.residual_norm(y, np.ones(n)) <= 1e-10


def test_constant_coefficients_match_cubic(mesh16, ops16):
    n = ops16.n
    f = interpolate_nodal(mesh16, 100.0)
    solver = StateSolver(ops16, f, np.ones(n))
    y = solver.solve(np.ones(n))
    yp = solver.poisson(ops16.M_lumped * f)
    s_ref = cubic_energy_root(yp @ (ops16.K @ yp))
    s = y @ (ops16.K @ y)
    assert s == pytest.approx(s_ref, rel=1e-8)
    np.testing.assert_allclose(y, yp / (1 + s_ref), rtol=1e-8)


def test_benchmark_initial_state_is_accurate():
    m = generate_rect(*SQUARE, 25)
    ops = assemble(m)
    u_a = interpolate_nodal(m, lambda x, y: -3 * x - 3 * y + 10)
    f = interpolate_nodal(m, 100.0)
    b = interpolate_nodal(m, lambda x, y: x ** 2 + y ** 2)
    solver = StateSolver(ops, f, b)
    y = solver.solve(u_a)
    assert solver.residual_norm(y, u_a) <= 1e-10


def test_zero_source_gives_zero_state(ops4):
    n = ops4.n
    y = solve_state(np.ones(n), ops4, np.zeros(n), np.ones(n))
    assert np.all(y == 0)


def test_g_is_increasing(mesh16, ops16):
    rng = np.random.default_rng(5)
    n = ops16.n
    f = interpolate_nodal(mesh16, 100.0)
    solver = StateSolver(ops16, f, rng.uniform(0.1, 3, n))
    u = rng.uniform(0.5, 2, n)
    s = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 60)])
    g = np.array([solver.g(v, u) for v in s])
    assert g[0] <= 0
    assert np.all(np.diff(g) > 0)
    assert g[-1] > 0


def test_uniqueness_independent_of_initial_guess(mesh16, ops16):
    rng = np.random.default_rng(11)
    n = ops16.n
    f = interpolate_nodal(mesh16, 100.0)
    b = interpolate_nodal(mesh16, lambda x, y: 10 * (x ** 2 + y ** 2))
    cfg = ForwardConfig(tol=1e-10)
    solver = StateSolver(ops16, f, b, cfg)
    u = rng.uniform(1, 5, n)
    y1 = solver.solve(u)
    y2 = solver.solve(u, y_init=10 * rng.uniform(size=n))
    y3 = solver.solve(u, y_init=1e-3 * y1)
    assert km_norm(ops16, y1 - y2) <= 10 * cfg.tol
    assert km_norm(ops16, y1 - y3) <= 10 * cfg.tol


@settings(max_examples=15, deadline=None)
@given(c=st.floats(0.01, 100))
def test_linear_scaling_in_source(c):
    m = generate_rect(*SQUARE, 4)
    ops = assemble(m)
    n = ops.n
    u = 1 + 0.1 * np.arange(n) / n
    y1 = solve_state(u, ops, np.full(n, 10.0), np.zeros(n))
    yc = solve_state(u, ops, np.full(n, 10.0 * c), np.zeros(n))
    np.testing.assert_allclose(yc, c * y1, rtol=1e-12, atol=1e-15)


def test_invalid_control_raises(ops4):
    n = ops4.n
    u = np.ones(n)
    u[ops4.interior] = 0.0
    with pytest.raises(CoefficientError):
        solve_state(u, ops4, np.ones(n), np.ones(n))


def test_max_iter_exceeded(ops4):
    n = ops4.n
    cfg = ForwardConfig(max_iter=1)
    with pytest.raises(ForwardError):
        solve_state(np.full(n, 1e-6), ops4, np.full(n, 1e3), np.ones(n), cfg)


@pytest.mark.parametrize("kw", [dict(tol=0), dict(max_iter=0), dict(bracket_growth=1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ForwardConfig(**kw)
