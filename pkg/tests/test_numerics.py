import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import beta as B

from steadyvirial.numerics import (DEFAULT_TOL, IntegrationError, QuadratureError,
                                   RadialGrid, RootBracketError, Tolerances,
                                   fd_derivatives, find_root_bracketed, gauss_jacobi,
                                   integrate_ode, invert_dense, quad, step_cap,
                                   tanh_sinh)


def lane_emden_n1(tol, max_step=np.inf):
    x0 = 1e-6

    def rhs(x, y):
        return np.array([y[1], -y[0] - 2.0 * y[1] / x])

    return integrate_ode(rhs, [1.0 - x0**2 / 6.0, -x0 / 3.0], (x0, 10.0), tol,
                         stop=lambda x, y: y[0], require_event=True,
                         nodes=np.linspace(x0, 3.0, 60), max_step=max_step)


# ---------------------------------------------------------------- tolerances

def test_default_tolerances():
    assert DEFAULT_TOL.ode_rel <= 1e-6
    assert all(v > 0 for v in DEFAULT_TOL.as_dict().values())


@pytest.mark.parametrize("field", ["ode_rel", "ode_abs", "quad_tol", "root_tol"])
def test_tolerances_reject_nonpositive(field):
    with pytest.raises(ValueError):
        Tolerances(**{field: 0.0})


@given(st.floats(1e-6, 1.0))
def test_scaled_tightens_every_field(f):
    t = DEFAULT_TOL.scaled(f)
    assert t.ode_abs == pytest.approx(DEFAULT_TOL.ode_abs * f)
    assert t.quad_tol == pytest.approx(DEFAULT_TOL.quad_tol * f)
    assert t.root_tol == pytest.approx(DEFAULT_TOL.root_tol * f)
    assert 2.5e-14 <= t.ode_rel <= DEFAULT_TOL.ode_rel


# ---------------------------------------------------------------- grid

@given(st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=40, unique=True))
def test_grid_invariants(values):
    nodes = np.sort(values)
    g = RadialGrid(nodes, float(nodes[-1]) * 2)
    assert g.r_eps == nodes[0]
    assert np.all(np.diff(g.nodes) > 0) and np.all(g.nodes > 0)
    assert g.r_max > g.nodes[-1]


@pytest.mark.parametrize("nodes", [[0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [1.0]])
def test_grid_rejects_bad_nodes(nodes):
    with pytest.raises(ValueError):
        RadialGrid(np.array(nodes), 5.0)


def test_piecewise_grid():
    g = RadialGrid.piecewise([1e-6, 1.0, 2.0], [11, 21], 40.0, n_exterior=16)
    assert len(g) == 11 + 20 + 16
    assert g.nodes[-1] == pytest.approx(40.0)


# ---------------------------------------------------------------- ODE

def test_exponential():
    sol = integrate_ode(lambda r, y: y, [1.0], (0.0, 1.0))
    assert abs(sol.y_end[0] - math.e) < 1e-8


@given(st.floats(-1e3, 1e3))
@settings(max_examples=25)
def test_constant_solution(c):
    sol = integrate_ode(lambda r, y: np.zeros_like(y), [c], (1e-6, 3.0),
                        nodes=np.linspace(1e-6, 3.0, 7))
    assert np.all(sol.states[:, 0] == c)


def test_backwards_integration():
    sol = integrate_ode(lambda r, y: y, [math.e], (1.0, 0.0))
    assert abs(sol.y_end[0] - 1.0) < 1e-8


def test_lane_emden_n1_zero_and_profile():
    sol = lane_emden_n1(DEFAULT_TOL)
    assert abs(sol.event_radius - math.pi) < 1e-6
    x = sol.grid.nodes
    assert np.max(np.abs(sol.states[:, 0] - np.sin(x) / x)) < 1e-8


@pytest.mark.parametrize("h", [0.2, 0.1, 0.05])
def test_lane_emden_zero_converges_under_step_halving(h):
    loose = Tolerances(ode_rel=1e-3, ode_abs=1e-3)
    e1 = abs(lane_emden_n1(loose, h).event_radius - math.pi)
    e2 = abs(lane_emden_n1(loose, h / 2).event_radius - math.pi)
    assert e1 >= 4.0 * e2


def test_event_located_to_root_tol():
    sol = integrate_ode(lambda r, y: np.array([1.0]), [0.0], (0.0, 5.0),
                        stop=lambda r, y: 2.0 - y[0] ** 2)
    assert abs(sol.event_radius - math.sqrt(2.0)) < DEFAULT_TOL.root_tol
    assert sol.grid is None


def test_nodes_past_event_dropped():
    sol = integrate_ode(lambda r, y: np.array([-1.0]), [1.0], (0.5, 3.0),
                        stop=lambda r, y: y[0], nodes=np.linspace(0.5, 3.0, 26))
    assert sol.grid.nodes[-1] <= 1.5 + 1e-12
    assert sol.states.shape == (len(sol.grid), 1)


def test_required_event_missing():
    with pytest.raises(IntegrationError):
        integrate_ode(lambda r, y: np.array([1.0]), [1.0], (0.0, 1.0),
                      stop=lambda r, y: y[0], require_event=True)


def test_guard_raises():
    with pytest.raises(IntegrationError):
        integrate_ode(lambda r, y: np.array([-1.0]), [1.0], (0.0, 3.0),
                      guard=lambda r, y: y[0] - 0.5)


def test_blowup_signals_failure():
    with pytest.raises(IntegrationError):
        integrate_ode(lambda r, y: y * y, [1.0], (0.0, 2.0))


def test_degenerate_domain():
    with pytest.raises(ValueError):
        integrate_ode(lambda r, y: y, [1.0], (1.0, 1.0))


def test_step_cap_formula():
    t = Tolerances(ode_rel=1e-6)
    assert step_cap(t, 2.0) == pytest.approx(0.5)
    assert step_cap(DEFAULT_TOL, 1.0) < step_cap(t, 1.0)


def test_invert_dense():
    f = lambda s: np.array([np.asarray(s) ** 3])
    targets = np.array([0.001, 0.2, 0.9])
    s = invert_dense(f, targets, 0.0, 1.0)
    assert np.allclose(s**3, targets, atol=1e-14)


# ---------------------------------------------------------------- quadrature

def test_quad_polynomial():
    assert abs(quad(lambda x: x * x, 0.0, 1.0) - 1.0 / 3.0) < 1e-14


def test_quad_sine():
    assert abs(quad(math.sin, 0.0, math.pi) - 2.0) < 1e-12


def test_quad_reference_value(oracles):
    # frozen closed-form value from scripts/derive_oracles.py
    ref = oracles["quad_eps2_sqrt"]
    val = quad(lambda e: e * e * (e + 1.0) ** 0.5, 1.0, 2.0, 1e-13, singular=(0.5, 0.0))
    assert abs(val - ref) < 1e-12
    plain = quad(lambda e: e * e * math.sqrt(e * e - 1.0), 1.0, 2.0, 1e-13)
    assert abs(plain - ref) < 1e-10


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=10), st.floats(-3, 3),
       st.floats(0.1, 4))
@settings(max_examples=50)
def test_quad_exact_on_polynomials(coeffs, a, width):
    b = a + width
    p = np.polynomial.Polynomial(coeffs)
    exact = p.integ()(b) - p.integ()(a)
    # round-off scale: width times a bound on |p| over [a, b]
    R = max(abs(a), abs(b), 1.0)
    scale = width * sum(abs(c) * R**i for i, c in enumerate(coeffs))
    assert abs(quad(p, a, b) - exact) <= 1e-13 * max(scale, 1.0)


@given(st.integers(2, 20), st.floats(-0.9, 3), st.floats(-0.9, 3))
@settings(max_examples=50)
def test_gauss_jacobi_exact_degree(n, alpha, beta):
    t, w = gauss_jacobi(n, alpha, beta)
    deg = 2 * n - 1
    # int_0^1 (1-t)^alpha t^(beta+deg) dt = B(alpha+1, beta+deg+1)
    assert np.sum(w * t**deg) == pytest.approx(B(alpha + 1, beta + deg + 1), rel=1e-10)


def test_tanh_sinh_distances():
    x, w, dl, dr = tanh_sinh(1.0, 3.0)
    assert np.allclose(x - 1.0, dl) and np.allclose(3.0 - x, dr)
    assert abs(np.sum(w * x**2) - 26.0 / 3.0) < 1e-12


def test_quad_rejects_bad_exponent():
    with pytest.raises(ValueError):
        quad(lambda x: 1.0, 0.0, 1.0, singular=(-1.0, 0.0))


def test_quad_non_convergence():
    with pytest.raises(QuadratureError):
        quad(lambda x: math.sin(1.0 / x) / x, 1e-12, 1.0, limit=5)


# ---------------------------------------------------------------- roots

def test_root_linear():
    assert find_root_bracketed(lambda x: x - 1.0, 0.0, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_root_cosine():
    assert abs(find_root_bracketed(math.cos, 1.0, 2.0, 1e-12) - math.pi / 2) < 1e-12


def test_root_endpoint():
    assert find_root_bracketed(lambda x: x, 0.0, 1.0) == 0.0


def test_root_no_sign_change():
    with pytest.raises(RootBracketError):
        find_root_bracketed(lambda x: x * x + 1.0, -1.0, 1.0)


@given(st.floats(-10, 10), st.floats(0.01, 5))
def test_root_inside_bracket(x0, w):
    x = find_root_bracketed(lambda x: x - x0, x0 - w, x0 + 0.7 * w, 1e-12)
    assert abs(x - x0) <= 1e-11 * max(1.0, abs(x0))


# ---------------------------------------------------------------- differences

@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=30))
def test_fd_exact_on_quadratics(steps):
    x = np.concatenate([[1.0], 1.0 + np.cumsum(steps)])
    y = 3.0 * x * x - 2.0 * x + 5.0
    d1, d2 = fd_derivatives(x, y)
    assert np.allclose(d1, 6.0 * x[1:-1] - 2.0, rtol=1e-7, atol=1e-7)
    assert np.allclose(d2, 6.0, rtol=1e-6)


@given(st.lists(st.floats(0.01, 1.0), min_size=5, max_size=30),
       st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_fd_five_point_exact_on_quartics(steps, coeffs):
    x = np.concatenate([[1.0], 1.0 + np.cumsum(steps)])
    p = np.polynomial.Polynomial(coeffs)
    d1, d2 = fd_derivatives(x, p(x), 5)
    xi = x[1:-1]
    scale = sum(abs(c) for c in coeffs) * x[-1] ** 4
    assert np.allclose(d1, p.deriv()(xi), rtol=0, atol=1e-8 * scale)
    assert np.allclose(d2, p.deriv(2)(xi), rtol=0, atol=1e-6 * scale / min(steps) ** 2)


def test_fd_five_point_fourth_order():
    errs = []
    for n in (41, 81):
        x = np.geomspace(1.0, 5.0, n)
        d1, d2 = fd_derivatives(x, np.log(x), 5)
        errs.append(np.max(np.abs(d1 - 1.0 / x[1:-1])))
    assert errs[0] / errs[1] > 12.0


def test_fd_rejects_unknown_stencil():
    with pytest.raises(ValueError):
        fd_derivatives(np.linspace(0, 1, 9), np.zeros(9), 4)
