"""
Numerical kernels shared by the model builders: adaptive ODE integration
with terminal events, adaptive and fixed-rule quadrature, bracketed root
finding and radial grids.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special


class NumericsError(RuntimeError):
    """Base class for numerical failures."""


class IntegrationError(NumericsError):
    pass


class QuadratureError(NumericsError):
    pass


class RootBracketError(NumericsError):
    pass


@dataclass(frozen=True)
class Tolerances:
    ode_rel: float = 1e-8
    ode_abs: float = 1e-10
    quad_tol: float = 1e-10
    root_tol: float = 1e-12

    def __post_init__(self):
        for name in ("ode_rel", "ode_abs", "quad_tol", "root_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be strictly positive")

    def scaled(self, factor: float) -> "Tolerances":
        """All four tolerances multiplied by ``factor`` (0.1 tightens 10x)."""
        # scipy refuses rtol below 100 * machine epsilon
        return Tolerances(
            ode_rel=max(self.ode_rel * factor, 2.5e-14),
            ode_abs=self.ode_abs * factor,
            quad_tol=self.quad_tol * factor,
            root_tol=self.root_tol * factor,
        )

    def as_dict(self) -> dict:
        return {
            "ode_rel": self.ode_rel,
            "ode_abs": self.ode_abs,
            "quad_tol": self.quad_tol,
            "root_tol": self.root_tol,
        }


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    r_max: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if nodes[0] <= 0:
            raise ValueError("grid nodes must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if self.r_max < nodes[-1]:
            raise ValueError("r_max below last node")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def r_eps(self) -> float:
        return float(self.nodes[0])

    def __len__(self):
        return self.nodes.size

    @classmethod
    def piecewise(cls, breaks: Sequence[float], counts: Sequence[int],
                  r_max: float, n_exterior: int = 64) -> "RadialGrid":
        """
        Uniform blocks between consecutive ``breaks`` followed by a geometric
        exterior from ``breaks[-1]`` out to ``r_max``.
        """
        pieces = []
        for i, n in enumerate(counts):
            a, b = breaks[i], breaks[i + 1]
            if b <= a:
                continue
            block = np.linspace(a, b, n)
            pieces.append(block if not pieces else block[1:])
        edge = breaks[-1]
        if r_max > edge and n_exterior > 0:
            pieces.append(np.geomspace(edge, r_max, n_exterior + 1)[1:])
        return cls(np.concatenate(pieces), float(r_max))


@dataclass(frozen=True)
class OdeSolution:
    grid: Optional[RadialGrid]
    states: Optional[np.ndarray]
    event_radius: Optional[float]
    r_end: float
    y_end: np.ndarray
    dense: Callable = field(repr=False)
    nfev: int = 0

    def __call__(self, r):
        return self.dense(r)


def integrate_ode(rhs, y0, domain, tol: Tolerances = DEFAULT_TOL, stop=None,
                  nodes=None, guard=None, require_event=False,
                  method="DOP853", max_step=np.inf) -> OdeSolution:
    """
    Integrate ``y' = rhs(r, y)`` across ``domain`` with an embedded adaptive
    Runge-Kutta pair and dense output.

    Parameters
    ----------
    rhs : callable
        ``rhs(r, y) -> array``.
    y0 : array_like
        State at ``domain[0]``.
    domain : (float, float)
        May run backwards (``domain[1] < domain[0]``).
    tol : Tolerances
    stop : callable, optional
        ``stop(r, y)``; integration halts where it first crosses zero from
        above. The crossing is refined by bracketed root finding on the dense
        interpolant.
    nodes : array_like, optional
        Radii at which states are reported; nodes past the event are dropped.
    guard : callable, optional
        Second terminal event; crossing it raises ``IntegrationError``
        (used for horizon formation).
    require_event : bool
        Raise if ``stop`` never fires inside the domain.
    max_step : float
        Upper bound on the step length. Callers that need the global error
        to scale smoothly with the tolerance pass ``step_cap``.

    Returns
    -------
    OdeSolution
    """
    r0, r1 = map(float, domain)
    if r1 == r0 or not np.isfinite(r1 - r0):
        raise ValueError("degenerate integration domain")
    events = []
    if stop is not None:
        def ev_stop(r, y):
            return stop(r, y)
        ev_stop.terminal = True
        ev_stop.direction = -1
        events.append(ev_stop)
    if guard is not None:
        def ev_guard(r, y):
            return guard(r, y)
        ev_guard.terminal = True
        ev_guard.direction = -1
        events.append(ev_guard)

    res = integrate.solve_ivp(rhs, (r0, r1), np.asarray(y0, dtype=float),
                              method=method, rtol=tol.ode_rel,
                              atol=tol.ode_abs, dense_output=True,
                              max_step=max_step,
                              events=events or None)
    if res.status == -1:
        raise IntegrationError(f"integration failed at r={res.t[-1]:.6g}: "
                               f"{res.message}")
    event_radius = None
    if guard is not None and res.t_events[-1].size:
        raise IntegrationError(
            f"guard event fired at r={res.t_events[-1][0]:.6g}")
    if stop is not None and res.t_events[0].size:
        event_radius = float(res.t_events[0][0])
    elif require_event:
        raise IntegrationError("stop event not bracketed inside the domain")

    grid = states = None
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=float)
        end = event_radius if event_radius is not None else r1
        nodes = nodes[nodes <= end] if r1 > r0 else nodes[nodes >= end]
        grid = RadialGrid(nodes, end)
        states = res.sol(nodes).T
    return OdeSolution(grid=grid, states=states, event_radius=event_radius,
                       r_end=float(res.t[-1]), y_end=res.y[:, -1].copy(),
                       dense=res.sol, nfev=res.nfev)


def step_cap(tol: Tolerances, scale: float, order: int = 7) -> float:
    """
    Step bound ``scale * 0.25 * (ode_rel / 1e-6)**(1/order)``.

    Below this cap the eighth-order pair takes near-uniform steps, so its
    global error (order 7 once dense output is involved) behaves like
    ``C * ode_rel`` rather than jumping with the discrete step sequence
    chosen by the controller.
    """
    return scale * 0.25 * (tol.ode_rel / 1e-6) ** (1.0 / order)


def invert_dense(dense, targets, lo, hi, component=0, iterations=60):
    """
    Solve ``dense(s)[component] = target`` for each target by vectorized
    bisection on [lo, hi], assuming the component is monotone in ``s``.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    a = np.full_like(targets, float(lo))
    b = np.full_like(targets, float(hi))
    increasing = dense(float(hi))[component] > dense(float(lo))[component]
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        above = dense(mid)[component] > targets
        go_left = above if increasing else ~above
        a = np.where(go_left, a, mid)
        b = np.where(go_left, mid, b)
    return 0.5 * (a + b)


def quad(f, a, b, tol=1e-10, singular=None, points=None, limit=400):
    """
    Adaptive Gauss-Kronrod estimate of the integral of ``f`` over [a, b].

    ``singular=(alpha, beta)`` declares an integrand of the form
    ``f(x) * (x-a)**alpha * (b-x)**beta``; only the smooth factor ``f`` is
    passed and the algebraic weight is integrated exactly by the rule.
    Infinite limits are allowed when no singular weight is declared.
    """
    kwargs = dict(epsabs=tol, epsrel=tol, limit=limit)
    if singular is not None:
        alpha, beta = singular
        if alpha <= -1 or beta <= -1:
            raise ValueError("endpoint exponents must exceed -1")
        kwargs.update(weight="alg", wvar=(alpha, beta))
    elif points is not None:
        pts = [p for p in points if a < p < b]
        if pts and np.isfinite(a) and np.isfinite(b):
            kwargs["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def find_root_bracketed(g, a, b, tol=1e-12, maxiter=200):
    """Brent's method on [a, b]; requires ``g(a) * g(b) <= 0``."""
    ga, gb = g(a), g(b)
    if ga == 0:
        return a
    if gb == 0:
        return b
    if np.sign(ga) == np.sign(gb):
        raise RootBracketError(
            f"no sign change on [{a:.6g}, {b:.6g}] (g={ga:.3g}, {gb:.3g})")
    return optimize.brentq(g, a, b, xtol=tol, rtol=4 * np.finfo(float).eps,
                           maxiter=maxiter)


@lru_cache(maxsize=256)
def _jacobi_rule(n, alpha, beta):
    x, w = special.roots_jacobi(n, alpha, beta)
    t = 0.5 * (1.0 + x)
    w = w / 2.0 ** (alpha + beta + 1.0)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_jacobi(n, alpha, beta):
    """
    Nodes and weights on [0, 1] for the weight ``(1-t)**alpha * t**beta``.
    Exact for polynomial cofactors of degree < 2n.
    """
    return _jacobi_rule(int(n), float(alpha), float(beta))


@lru_cache(maxsize=64)
def _tanh_sinh_std(level, t_max):
    h = 2.0 ** -level
    t = np.arange(-t_max, t_max + 0.5 * h, h)
    u = 0.5 * np.pi * np.sinh(t)
    cu = np.cosh(u)
    w = h * 0.5 * np.pi * np.cosh(t) / cu**2
    # distances to +-1 without cancellation
    e = np.exp(-2.0 * np.abs(u))
    small = 2.0 * e / (1.0 + e)
    d_left = np.where(u < 0, small, 2.0 - small)
    d_right = np.where(u > 0, small, 2.0 - small)
    for arr in (w, d_left, d_right):
        arr.setflags(write=False)
    return w, d_left, d_right


def tanh_sinh(a, b, level=6, t_max=4.0):
    """
    Double-exponential nodes on [a, b].

    Returns ``(x, w, dl, dr)`` where ``dl = x - a`` and ``dr = b - x`` are
    evaluated without cancellation, so integrands with algebraic endpoint
    behaviour can be written in terms of the distances.
    """
    w, d_left, d_right = _tanh_sinh_std(level, t_max)
    half = 0.5 * (b - a)
    dl = half * d_left
    dr = half * d_right
    x = np.where(dl <= dr, a + dl, b - dr)
    return x, half * w, dl, dr


def beta_fn(a, b):
    return float(special.beta(a, b))


def fd_derivatives(x, y, points: int = 3):
    """
    First and second derivatives at the interior nodes of a (possibly
    non-uniform) grid by Lagrange differences on ``points`` = 3 or 5 nodes.

    Five-point stencils are centred where possible and shifted inwards at
    the two ends, so d1 is fourth order and d2 at least third order.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if points == 5 and x.size >= 5:
        return _fd_five_point(x, y)
    if points not in (3, 5):
        raise ValueError("points must be 3 or 5")
    h0 = x[1:-1] - x[:-2]
    h1 = x[2:] - x[1:-1]
    ym, y0, yp = y[:-2], y[1:-1], y[2:]
    d1 = (-h1 / (h0 * (h0 + h1)) * ym + (h1 - h0) / (h0 * h1) * y0
          + h0 / (h1 * (h0 + h1)) * yp)
    d2 = 2.0 * (h1 * ym - (h0 + h1) * y0 + h0 * yp) / (h0 * h1 * (h0 + h1))
    return d1, d2


def _fd_five_point(x, y):
    n = x.size
    i = np.arange(1, n - 1)
    start = np.clip(i - 2, 0, n - 5)
    idx = start[:, None] + np.arange(5)
    # offsets scaled by the local spacing keep the Vandermonde systems tame
    scale = x[i + 1] - x[i - 1]
    t = (x[idx] - x[i][:, None]) / scale[:, None]
    V = t[:, None, :] ** np.arange(5)[None, :, None]
    rhs = np.zeros((i.size, 5, 2))
    rhs[:, 1, 0] = 1.0
    rhs[:, 2, 1] = 2.0
    w = np.linalg.solve(V, rhs)
    yy = y[idx]
    d1 = np.einsum("nk,nk->n", w[:, :, 0], yy) / scale
    d2 = np.einsum("nk,nk->n", w[:, :, 1], yy) / scale**2
    return d1, d2


__all__ = [
    "NumericsError", "IntegrationError", "QuadratureError", "RootBracketError",
    "Tolerances", "DEFAULT_TOL", "RadialGrid", "OdeSolution", "integrate_ode",
    "step_cap", "invert_dense", "quad", "find_root_bracketed", "gauss_jacobi", "tanh_sinh", "beta_fn",
    "fd_derivatives",
]
