"""
Static spherically symmetric Einstein-Vlasov states (G = c = 1) for the
Jeans-type ansatz f = c (E0 - E)_+^k (F - F0)_+^l, E = e^mu sqrt(1 + |v|^2),
F = |x ^ v|^2.

The structure equations are integrated for the quasi-local mass m and the
shifted potential z = mu - ln E0,

    m' = 4 pi r^2 h,    z' = (m/r^2 + 4 pi r p_rad) / (1 - 2m/r),

since the matter moments depend on mu only through z and on E0 only through
the amplitude c E0^k. Matching the Schwarzschild exterior at the outer
radius R2 then fixes E0 = sqrt(1 - 2H/R2) e^{-z(R2)}.

Without an angular cutoff (F0 = 0) the equations are scale invariant: a
solution with amplitude A is a solution with amplitude 1 stretched by
A^(-1/(2+2l)). With F0 > 0 (shells) the cutoff sets a length and E0 is found
by a scalar root search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .ansatz import AnsatzProfile, MomentSet, ev_moments_shifted
from .numerics import (DEFAULT_TOL, IntegrationError, RadialGrid,
                       RootBracketError, Tolerances, fd_derivatives,
                       find_root_bracketed, integrate_ode, invert_dense,
                       step_cap)
from .report import VirialReport, identity, le

FOUR_PI = 4.0 * math.pi

# abort once 1 - 2m/r falls below this (Schwarzschild coordinates degenerate)
HORIZON_GUARD = 1e-3
BUCHDAHL = 8.0 / 9.0
# the stored metric is differentiated twice by the consistency check, so the
# structure equations run this much tighter than the requested tolerance
PROFILE_TOL_FACTOR = 1e-3


@dataclass(frozen=True)
class EVSolution:
    grid: RadialGrid
    mu: np.ndarray
    lam: np.ndarray
    m: np.ndarray
    moments: MomentSet
    R1: float
    R2: float
    ansatz: AnsatzProfile
    E0: float
    z_central: float = 0.0
    H: float = 0.0
    rest_mass: float = 0.0
    # int e^{lambda+mu}(h + p_rad + p_tan) dx from the augmented system
    virial_integral: float = 0.0
    # int 4 pi r e^{2 lambda}(h + p_rad) dr = (lambda + mu)(R2) - mu(0), from
    # the auxiliary relation; the builder never uses it
    aux_integral: float = 0.0
    buchdahl_sup: float = 0.0
    tol: Tolerances = DEFAULT_TOL
    nfev: int = 0

    @property
    def is_vacuum(self) -> bool:
        return self.H == 0.0

    @property
    def mu_center(self) -> float:
        return self.z_central + math.log(self.E0) if self.E0 > 0 else 0.0


@dataclass(frozen=True)
class EVInvariants:
    H: float
    M: float
    Zc: float
    E0: float
    R1: float
    R2: float

    @property
    def binding(self) -> float:
        return 1.0 - self.H / self.M if self.M else 0.0


# ------------------------------------------------------------ integration

@dataclass
class _UnitSolution:
    """Structure-equation solution at a fixed amplitude, before rescaling."""

    inner: object          # dense output in r: [m, z, I_M, I_vir, I_aux]
    r_start: float
    r_half: Optional[float]
    outer: Optional[object]  # dense output in s = sqrt(-z): [r, m, I_M, I_vir, I_aux]
    s_half: float
    R1: float
    R2: float
    y_surface: np.ndarray  # [m, z, I_M, I_vir, I_aux] at R2
    buchdahl_sup: float
    nfev: int

    def state_at(self, r):
        """[m, z] at radii inside [0, R2]."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros((2, r.size))
        vac = r <= self.R1
        out[1, vac] = self.inner(self.r_start)[1]
        if self.outer is None:
            idx = ~vac
            if idx.any():
                Y = self.inner(np.clip(r[idx], self.r_start, self.R2))
                out[:, idx] = Y[:2]
            return out
        a = ~vac & (r <= self.r_half)
        if a.any():
            out[:, a] = self.inner(np.maximum(r[a], self.r_start))[:2]
        b = r > self.r_half
        if b.any():
            s = invert_dense(self.outer, np.minimum(r[b], self.R2), 0.0, self.s_half)
            Y = self.outer(s)
            out[0, b] = Y[1]
            out[1, b] = -s * s
        return out


def _rhs_factory(k, l, F0, amp):
    def mom(z, r):
        return ev_moments_shifted(z, r, k, l, F0, amp)

    def rhs(r, y):
        m, z = y[0], y[1]
        mm = mom(min(z, 0.0), r)
        w = FOUR_PI * r * r
        g = 1.0 - 2.0 * m / r
        el = 1.0 / math.sqrt(g)
        return np.array([w * mm.h, (m / (r * r) + FOUR_PI * r * mm.p_rad) / g,
                         w * el * mm.rho,
                         w * el * math.exp(z) * (mm.h + mm.p_rad + mm.p_tan),
                         FOUR_PI * r * (mm.h + mm.p_rad) / g])

    return mom, rhs


def _sup_compactness(dense, lo, hi, n=400, col_r=None, col_m=0):
    t = np.linspace(lo, hi, n)
    Y = dense(t)
    r = t if col_r is None else Y[col_r]
    m = Y[col_m]
    ok = r > 0
    return float(np.max(2.0 * m[ok] / r[ok])) if ok.any() else 0.0


def _integrate(k, l, F0, amp, z_c, tol) -> _UnitSolution:
    """Integrate outwards from the centre (or the inner shell radius)."""
    mom, rhs = _rhs_factory(k, l, F0, amp)
    guard = lambda r, y: 1.0 - 2.0 * y[0] / r - HORIZON_GUARD  # noqa: E731

    eta_c = math.exp(-z_c)
    if F0 > 0:
        R1 = math.sqrt(F0 / (eta_c * eta_c - 1.0))
        # matter density just outside R1 sets the local length scale
        h_ref = mom(z_c, 2.0 * R1).h
        L = min(R1, 1.0 / math.sqrt(h_ref)) if h_ref > 0 else R1
        y0 = [0.0, z_c, 0.0, 0.0, 0.0]
        r0 = R1
        r_eps = None
    else:
        R1 = 0.0
        h_c = mom(z_c, 1.0).h  # l > 0 makes h vanish at the centre
        L = 1.0 / math.sqrt(max(h_c, 1e-300))
        r_eps = 1e-5 * L
        mm = mom(z_c, r_eps)
        m0 = FOUR_PI * mm.h * r_eps**3 / (2.0 * l + 3.0)
        el0 = 1.0 / math.sqrt(1.0 - 2.0 * m0 / r_eps)
        vol = FOUR_PI * r_eps**3 / 3.0
        y0 = [m0, z_c + (2.0 * math.pi / 3.0) * (mm.h + 3.0 * mm.p_rad) * r_eps**2,
              el0 * mm.rho * vol,
              el0 * math.exp(z_c) * (mm.h + mm.p_rad + mm.p_tan) * vol,
              2.0 * math.pi * (mm.h + mm.p_rad) * r_eps**2]
        r0 = r_eps

    r_max = r0 + 1e5 * L
    cap = step_cap(tol, L)
    if F0 > 0:
        edge = lambda r, y: -y[1] - 0.5 * math.log1p(F0 / (r * r))  # noqa: E731
        sol = integrate_ode(rhs, y0, (r0, r_max), tol, stop=edge, guard=guard,
                            require_event=True, max_step=cap)
        R2 = sol.event_radius
        return _UnitSolution(sol.dense, r0, None, None, 0.0, R1, R2,
                             np.asarray(sol.dense(R2)),
                             _sup_compactness(sol.dense, r0, R2), sol.nfev)

    # star: r up to z = z_c/2, then s = sqrt(-z) down to the surface s = 0
    half = 0.5 * z_c
    sol = integrate_ode(rhs, y0, (r0, r_max), tol, stop=lambda r, y: half - y[1],
                        guard=guard, require_event=True, max_step=cap)
    r_half = sol.event_radius
    yh = sol.dense(r_half)

    def rhs_s(s, y):
        r = y[0]
        d = rhs(r, [y[1], -s * s, y[2], y[3], y[4]])
        drds = -2.0 * s / d[1]
        return np.array([drds, d[0] * drds, d[2] * drds, d[3] * drds, d[4] * drds])

    s_half = math.sqrt(-half)
    guard_s = lambda s, y: 1.0 - 2.0 * y[1] / y[0] - HORIZON_GUARD  # noqa: E731
    outer = integrate_ode(rhs_s, [r_half, yh[0], yh[2], yh[3], yh[4]], (s_half, 0.0),
                          tol, guard=guard_s, max_step=step_cap(tol, s_half))
    R2, m2, im, iv, ia = map(float, outer.y_end)
    sup = max(_sup_compactness(sol.dense, r0, r_half),
              _sup_compactness(outer.dense, s_half, 0.0, col_r=0, col_m=1))
    return _UnitSolution(sol.dense, r0, r_half, outer.dense, s_half, R1, R2,
                         np.array([m2, 0.0, im, iv, ia]), sup, sol.nfev + outer.nfev)


def _realized_E0(u: _UnitSolution) -> float:
    m2, z2 = u.y_surface[0], u.y_surface[1]
    return math.sqrt(1.0 - 2.0 * m2 / u.R2) * math.exp(-z2)


# ------------------------------------------------------------------ build

def _vacuum(a, n_nodes, tol):
    grid = RadialGrid(np.linspace(1e-6, 1.0, n_nodes), 1.0)
    z = np.zeros(n_nodes)
    return EVSolution(grid, z, z.copy(), z.copy(),
                      MomentSet(z.copy(), z.copy(), z.copy(), z.copy(), z.copy()),
                      0.0, 0.0, a, a.E0, tol=tol)


def build_ev_static(a: AnsatzProfile, z_central: float, tol: Tolerances = DEFAULT_TOL,
                    n_nodes: int = 401, n_exterior: Optional[int] = None) -> EVSolution:
    """
    Build a static Einstein-Vlasov star (F0 = 0) or shell (F0 > 0).

    Parameters
    ----------
    a : AnsatzProfile
        ``c, k, l, F0`` are used; ``a.E0`` is ignored and the realized cutoff
        is returned in ``EVSolution.E0`` and ``EVSolution.ansatz``.
    z_central : float
        mu(0) - ln E0 < 0.
    tol : Tolerances
    n_nodes : int
        Uniform nodes across the matter region [R1, R2] (shells add a vacuum
        block on [r_eps, R1]).
    n_exterior : int, optional
        Exterior nodes out to 20 R2, geometric in r - 2H; defaults to
        ``2 * n_nodes`` (the exterior is analytic, so nodes are cheap).

    Raises
    ------
    IntegrationError
        Horizon formation (1 - 2m/r below 1e-3) or no outer boundary.
    RootBracketError
        Shells only: no consistent E0 found.
    """
    z_c = float(z_central)
    if n_exterior is None:
        n_exterior = 2 * n_nodes
    if not z_c < 0:
        raise ValueError("shifted central potential must be negative")
    if a.c == 0:
        return _vacuum(a, n_nodes, tol)
    k, l, F0 = a.k, a.l, a.F0
    tol_ode = tol.scaled(PROFILE_TOL_FACTOR)

    if F0 == 0:
        unit = _integrate(k, l, F0, 1.0, z_c, tol_ode)
        E0 = _realized_E0(unit)
        amp = a.c * E0**k
        scale = amp ** (-1.0 / (2.0 + 2.0 * l))
    else:
        def g(x):
            u = _integrate(k, l, F0, a.c * math.exp(k * x), z_c, tol_ode)
            return math.log(_realized_E0(u)) - x

        if k == 0:
            x = g(0.0)
        else:
            x = _scan_root(g, tol)
        E0 = math.exp(x)
        amp = a.c * E0**k
        unit = _integrate(k, l, F0, amp, z_c, tol_ode)
        E0 = _realized_E0(unit)
        scale = 1.0

    return _assemble(a, unit, z_c, E0, amp, scale, tol, n_nodes, n_exterior)


def _scan_root(g, tol):
    """Walk ln E0 downwards from just below 0 until g changes sign."""
    xs = [math.log(0.999), -0.05, -0.1, -0.2, -0.4, -0.8, -1.6, -3.2, -6.4]
    prev = None
    for x in xs:
        try:
            gx = g(x)
        except IntegrationError:
            prev = None
            continue
        if prev is not None and np.sign(gx) != np.sign(prev[1]):
            return find_root_bracketed(g, x, prev[0], tol.root_tol)
        prev = (x, gx)
    raise RootBracketError("no self-consistent cutoff E0 found for the shell")


def _matter_nodes(unit: _UnitSolution, r_in: float, n: int,
                  weight: float = 0.5) -> np.ndarray:
    """
    Nodes on [r_in, R2] equidistributing weight * (r - r_in)/(R2 - r_in) +
    (1 - weight) * (m(r)/m(R2))^(1/3), so compact cores keep half the
    resolution (the cube root is linear in r at the centre, with slope set
    by the central density).
    The inverse map is a monotone cubic, keeping the spacing smooth.
    """
    R2 = unit.R2
    fine = np.linspace(r_in, R2, 40 * n)
    m = unit.state_at(fine)[0]
    xi = weight * (fine - r_in) / (R2 - r_in) + (1.0 - weight) * np.cbrt((m - m[0]) / (m[-1] - m[0]))
    keep = np.concatenate([[True], np.diff(xi) > 0])
    nodes = PchipInterpolator(xi[keep], fine[keep])(np.linspace(0.0, 1.0, n))
    nodes[0], nodes[-1] = r_in, R2
    return nodes


def _assemble(a, unit, z_c, E0, amp, scale, tol, n_nodes, n_exterior):
    s = scale
    R1, R2 = s * unit.R1, s * unit.R2
    m2, _, i_m, i_v, i_aux = unit.y_surface
    H = s * m2
    rest = s * i_m
    vir = E0 * s * i_v
    ln_E0 = math.log(E0)

    if R1 > 0:
        vac = np.linspace(1e-6 * R1, R1, max(n_nodes // 8, 3))[:-1]
        mat = s * _matter_nodes(unit, unit.R1, n_nodes)
        inner_nodes = np.concatenate([vac, mat])
    else:
        inner_nodes = s * _matter_nodes(unit, unit.r_start, n_nodes)
    # Schwarzschild fields vary on the scale of the distance to r = 2H, so
    # the exterior is geometric in r - 2H rather than in r
    outer_nodes = 2.0 * H + np.geomspace(R2 - 2.0 * H, 20.0 * R2 - 2.0 * H,
                                         n_exterior + 1)[1:]
    nodes = np.concatenate([inner_nodes, outer_nodes])

    st = unit.state_at(inner_nodes / s)
    m_in = s * st[0]
    z_in = st[1]
    z_in[-1] = unit.y_surface[1]
    mu = np.concatenate([z_in + ln_E0, 0.5 * np.log1p(-2.0 * H / outer_nodes)])
    m = np.concatenate([m_in, np.full(outer_nodes.size, H)])
    lam = -0.5 * np.log1p(-2.0 * m / nodes)
    mom = [ev_moments_shifted(min(z, 0.0), r, a.k, a.l, a.F0, amp)
           for z, r in zip(z_in, inner_nodes)]
    pad = np.zeros(outer_nodes.size)

    def col(name):
        return np.concatenate([[getattr(x, name) for x in mom], pad])

    moments = MomentSet(col("h"), col("p_rad"), col("p_tan"), col("n_aux"), col("rho"))
    return EVSolution(RadialGrid(nodes, nodes[-1]), mu, lam, m, moments, R1, R2,
                      a.with_E0(E0), E0, z_central=z_c, H=H, rest_mass=rest,
                      virial_integral=vir, aux_integral=float(i_aux),
                      buchdahl_sup=unit.buchdahl_sup, tol=tol, nfev=unit.nfev)


# ------------------------------------------------------------ diagnostics

def ev_invariants(s: EVSolution) -> EVInvariants:
    """ADM mass H = m(R2), rest mass M = int e^lambda int f dv dx, redshift Zc."""
    if s.is_vacuum:
        return EVInvariants(0.0, 0.0, 0.0, s.E0, 0.0, 0.0)
    return EVInvariants(H=s.H, M=s.rest_mass, Zc=math.expm1(-s.mu_center),
                        E0=s.E0, R1=s.R1, R2=s.R2)


def ev_virial_residual(s: EVSolution) -> float:
    """H - int e^{lambda+mu}(h + p_rad + p_tan) dx."""
    if s.is_vacuum:
        return 0.0
    return s.H - s.virial_integral


def _segments(s: EVSolution):
    """Index ranges of the smooth pieces: vacuum core, matter, exterior."""
    r = s.grid.nodes
    i2 = int(np.searchsorted(r, s.R2, side="right")) - 1
    cuts = [0]
    if s.R1 > 0:
        cuts.append(int(np.searchsorted(r, s.R1, side="right")) - 1)
    cuts += [i2, r.size - 1]
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b - a >= 2]


def ev_consistency_residual(s: EVSolution, region: str = "all") -> float:
    """
    sup over grid nodes of

        | e^{-2 lambda}(mu'' + (mu' - lambda')(mu' + 1/r)) - 4 pi p_tan |

    with derivatives from three-point differences of the stored mu and
    lambda (five-point on the vacuum exterior), divided by sup_r 4 pi h (the size of each curvature term) so
    the value is dimensionless. This field
    equation is not used by the builder. Stencils never straddle R1 or R2,
    where mu'' may jump. ``region`` restricts the sup to "matter"
    ([R1, R2]), "exterior" (r > R2) or "all".
    """
    if s.is_vacuum:
        return 0.0
    r = s.grid.nodes
    worst = {"vacuum": 0.0, "matter": 0.0, "exterior": 0.0}
    for a, b in _segments(s):
        sl = slice(a, b + 1)
        # the exterior fields are analytic, so a higher order stencil pays off;
        # matter moments are only finitely smooth at the support edges
        pts = 5 if r[a] >= s.R2 else 3
        d1m, d2m = fd_derivatives(r[sl], s.mu[sl], pts)
        d1l, _ = fd_derivatives(r[sl], s.lam[sl], pts)
        ri = r[a + 1:b]
        res = (np.exp(-2.0 * s.lam[a + 1:b]) * (d2m + (d1m - d1l) * (d1m + 1.0 / ri))
               - FOUR_PI * s.moments.p_tan[a + 1:b])
        mid = ri[ri.size // 2]
        key = "exterior" if mid > s.R2 else ("vacuum" if mid < s.R1 else "matter")
        worst[key] = max(worst[key], float(np.max(np.abs(res))))
    if region == "all":
        val = max(worst.values())
    elif region in worst:
        val = worst[region]
    else:
        raise ValueError(f"unknown region {region!r}")
    return val / (FOUR_PI * float(np.max(s.moments.h)))


def ev_bounds_report(s: EVSolution) -> VirialReport:
    """Identity (virial), redshift, Buchdahl, Jeans and shell bounds with margins."""
    inv = ev_invariants(s)
    rep = VirialReport(model="ev", tolerances=s.tol.as_dict(),
                       grid={"nodes": len(s.grid), "r_eps": s.grid.r_eps,
                             "R1": s.R1, "R2": s.R2, "nfev": s.nfev})
    trivial = s.is_vacuum
    rep.trivial = trivial
    H, M, R2 = inv.H, inv.M, inv.R2
    ratio = H / M if M else 0.0
    rep.invariants = {"H": H, "M": M, "Zc": inv.Zc, "E0": inv.E0, "R1": inv.R1,
                      "R2": R2, "binding": inv.binding, "z_central": s.z_central,
                      "buchdahl_sup": s.buchdahl_sup, "H/M": ratio}
    vir = ev_virial_residual(s)
    rep.residuals["virial"] = vir
    rep.residuals["virial_rel"] = abs(vir) / H if H else 0.0
    rep.residuals["flag_H/M<=1/2"] = bool(M and ratio <= 0.5)
    rep.residuals["redshift_branch"] = "H<=M" if ratio <= 1 else "H>=M"

    e_mu0 = math.exp(s.mu_center) if not trivial else 1.0
    surface = math.sqrt(1.0 - 2.0 * H / R2) if R2 else 1.0
    gap = abs(M / H - 1.0) if H else 0.0
    rep.add(identity("virial", vir / H if H else 0.0, 1e-3, trivial=trivial))
    rep.add(le("Zc>=|M/H-1|", gap, inv.Zc, trivial=trivial))
    if ratio <= 1:
        rep.add(le("e^mu0<=H/M", e_mu0, ratio, trivial=trivial))
    else:
        rep.add(le("e^mu0<=H/(2H-M)", e_mu0, H / (2.0 * H - M), trivial=trivial))
    rep.add(le("e^mu0<=sqrt(1-2H/R2)", e_mu0, surface, trivial=trivial))
    rep.add(le("e^mu0<=E0*M/H", e_mu0, inv.E0 * M / H if H else 1.0,
               trivial=trivial))
    rep.add(le("buchdahl:2m/r<=8/9", s.buchdahl_sup, BUCHDAHL, trivial=trivial))
    lm = s.lam + s.mu
    rep.add(le("lambda+mu<=0", float(np.max(lm)), 1e-12, trivial=trivial,
               note="1e-12 round-off slack outside R2"))
    rep.add(le("lambda+mu>=mu(0)", s.mu_center, float(np.min(lm)) + 1e-12,
               trivial=trivial, saturates=True, note="equality at r = 0"))
    jeans = trivial or not s.ansatz.F0 == 0
    # second route to E0: lambda + mu vanishes at R2, so mu(0) = -aux_integral
    E0_aux = math.exp(-s.aux_integral - s.z_central) if not trivial else 1.0
    rep.residuals["E0_aux"] = E0_aux
    aux = s.mu_center + s.aux_integral if not trivial else 0.0
    rep.residuals["aux_relation"] = aux
    rep.add(identity("mu(0)=-int(lambda'+mu')", aux, 1e-6, trivial=trivial))
    rep.add(identity("E0=sqrt(1-2H/R2)", E0_aux - surface, 1e-6, trivial=jeans))
    rep.add(le("e^mu0<=min(1,M/H)sqrt(1-2H/R2)", e_mu0,
               min(1.0, 1.0 / ratio if ratio else 1.0) * surface, trivial=jeans))
    shell = inv.R1 > 0 and not trivial
    shell_bound = 18.0 * H / math.log1p(gap) if shell and gap > 0 else math.inf
    rep.add(le("R1<=18H/ln(|M/H-1|+1)", inv.R1, shell_bound, trivial=not shell))
    return rep


__all__ = ["EVSolution", "EVInvariants", "build_ev_static", "ev_invariants",
           "ev_virial_residual", "ev_consistency_residual", "ev_bounds_report",
           "HORIZON_GUARD", "BUCHDAHL"]
