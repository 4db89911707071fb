"""
Static Nordstrom-Vlasov states (units 4 pi G = c = 1).

For a static field the particle energy sqrt(e^{2 phi} + |p|^2) is conserved
along characteristics, so f = c (E0 - eps)_+^k solves the Vlasov equation and
the field obeys the nonlinear Poisson equation

    (1/r^2)(r^2 phi')' = e^{2 phi} int f / eps dp.

Matter occupies phi < ln E0 and the exterior is phi = -A/r. The builder
shoots on ln E0 (central field given) or on phi(0) (cutoff given) until the
interior solution meets the exterior tail with matching value and slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzProfile, nv_moments
from .numerics import (DEFAULT_TOL, IntegrationError, RadialGrid,
                       RootBracketError, Tolerances,
                       find_root_bracketed, integrate_ode, invert_dense,
                       quad, step_cap)
from .report import VirialReport, identity, le

FOUR_PI = 4.0 * math.pi

# the stored field is differentiated twice by the residual check, so the
# shooting runs one decade below the requested ODE tolerance
PROFILE_TOL_FACTOR = 0.1


@dataclass(frozen=True)
class _Profile:
    """Dense interior solution: in r up to r_half, then in s = sqrt(ln E0 - phi)."""

    inner: Callable
    r_eps: float
    r_half: float
    outer: Callable
    s_half: float
    ln_E0: float
    R: float

    def s_of_r(self, r):
        """Invert the decreasing map s -> r on [r_half, R]."""
        return invert_dense(self.outer, r, 0.0, self.s_half)


@dataclass(frozen=True)
class NVSolution:
    grid: RadialGrid
    phi: np.ndarray
    dphi: np.ndarray
    rho: np.ndarray
    h_kin: np.ndarray
    mu_N: np.ndarray
    R_support: float
    ansatz: AnsatzProfile
    central_field: float = 0.0
    tail: float = 0.0  # A in phi = -A/r outside the support
    # running integrals closed at the surface
    kinetic: float = 0.0
    gradient_interior: float = 0.0
    rest_mass: float = 0.0
    source_term: float = 0.0
    mismatch: float = 0.0
    tol: Tolerances = DEFAULT_TOL
    nfev: int = 0
    profile: Optional[_Profile] = field(default=None, repr=False, compare=False)

    @property
    def is_vacuum(self) -> bool:
        return self.rest_mass == 0.0

    def field_at(self, r):
        """phi and phi' at arbitrary radii (interior dense output, exterior tail)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        phi = np.zeros_like(r)
        dphi = np.zeros_like(r)
        if self.is_vacuum:
            return phi, dphi
        p = self.profile
        ext = r >= p.R
        phi[ext] = -self.tail / r[ext]
        dphi[ext] = self.tail / r[ext] ** 2
        a = r < p.r_half
        if a.any():
            Y = p.inner(np.maximum(r[a], p.r_eps))
            phi[a], dphi[a] = Y[0], Y[1]
        b = ~a & ~ext
        if b.any():
            s = p.s_of_r(r[b])
            phi[b] = p.ln_E0 - s * s
            dphi[b] = p.outer(s)[1]
        return phi, dphi


@dataclass(frozen=True)
class LorentzInvariants:
    M: float
    H: float
    Q: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float).reshape(3))

    @property
    def rest_energy(self) -> float:
        """sqrt(H^2 - |Q|^2), the energy in the centre-of-momentum frame."""
        return math.sqrt(max(self.H * self.H - float(self.Q @ self.Q), 0.0))


@dataclass(frozen=True)
class MultiplierChi:
    chi: Callable
    dchi: Callable
    ddchi: Callable
    breakpoints: tuple = ()
    label: str = ""

    def lattice(self, r_max: float, n: int = 400) -> np.ndarray:
        pts = np.geomspace(r_max * 1e-4, r_max, n)
        return np.union1d(pts, np.asarray(self.breakpoints, dtype=float))

    def admissible(self, r_max: float, n: int = 400) -> bool:
        """C^2 across breakpoints, chi' and chi/r bounded on the lattice."""
        r = self.lattice(r_max, n)
        if not (np.all(np.isfinite(self.chi(r))) and
                np.all(np.isfinite(self.dchi(r))) and
                np.all(np.isfinite(self.ddchi(r)))):
            return False
        bound = 10.0 * (1.0 + abs(float(self.dchi(r[0]))))
        if np.max(np.abs(self.dchi(r))) > bound or np.max(np.abs(self.chi(r) / r)) > bound:
            return False
        for b in self.breakpoints:
            h = 1e-7 * b
            for fn in (self.chi, self.dchi, self.ddchi):
                if abs(float(fn(b + h)) - float(fn(b - h))) > 1e-5 * (1.0 + abs(float(fn(b)))):
                    return False
        return True

    def monotone(self, r_max: float, n: int = 400) -> bool:
        """chi/r - chi' >= 0 and chi'' <= 0 on the lattice."""
        r = self.lattice(r_max, n)
        slack = 1e-12
        return bool(np.all(self.chi(r) / r - self.dchi(r) >= -slack) and
                    np.all(self.ddchi(r) <= slack))


def make_chi_R(R: float) -> MultiplierChi:
    """chi(r) = r inside R and 3R - 3R^2/r + R^3/r^2 outside; C^2 at r = R."""
    if not R > 0:
        raise ValueError("R must be positive")
    R = float(R)

    def chi(r):
        r = np.asarray(r, dtype=float)
        q = R / np.maximum(r, R)
        return np.where(r <= R, r, R * (3.0 - 3.0 * q + q * q))

    def dchi(r):
        r = np.asarray(r, dtype=float)
        q = R / np.maximum(r, R)
        return np.where(r <= R, 1.0, 3.0 * q * q - 2.0 * q**3)

    def ddchi(r):
        r = np.asarray(r, dtype=float)
        q = R / np.maximum(r, R)
        return np.where(r <= R, 0.0, 6.0 * q**3 * (q - 1.0) / R)

    return MultiplierChi(chi, dchi, ddchi, breakpoints=(R,), label=f"chi_R(R={R:.6g})")


# ------------------------------------------------------------------ build

@dataclass
class _Shot:
    mismatch: float
    profile: _Profile
    y_surface: np.ndarray
    nfev: int


def _shoot(a: AnsatzProfile, phi_c: float, ln_E0: float, tol: Tolerances) -> _Shot:
    """Integrate from the centre to the surface phi = ln E0 and measure the
    mismatch ln E0 + R phi'(R) against the exterior tail."""
    depth = ln_E0 - phi_c
    m0 = nv_moments(a, phi_c)
    src0 = math.exp(2.0 * phi_c) * m0.n_aux
    L = math.sqrt(depth / src0)

    def densities(phi):
        m = nv_moments(a, phi)
        e2 = math.exp(2.0 * phi)
        return m.h, m.rho, e2 * m.n_aux, e2 * (phi - 1.0) * m.n_aux

    def rhs(r, y):
        phi, dphi = y[0], y[1]
        h, rho, src, vir = densities(min(phi, ln_E0))
        w = FOUR_PI * r * r
        return np.array([dphi, src - 2.0 * dphi / r, w * h,
                         0.5 * w * dphi * dphi, w * rho, w * vir])

    r_eps = 1e-5 * L
    h0, rho0, _, vir0 = densities(phi_c)
    vol = FOUR_PI * r_eps**3 / 3.0
    y0 = [phi_c + src0 * r_eps**2 / 6.0, src0 * r_eps / 3.0, h0 * vol,
          FOUR_PI * (src0 / 3.0) ** 2 * r_eps**5 / 10.0, rho0 * vol, vir0 * vol]
    half = phi_c + 0.5 * depth
    sol = integrate_ode(rhs, y0, (r_eps, 1e4 * L), tol,
                        stop=lambda r, y: half - y[0], require_event=True,
                        max_step=step_cap(tol, L))
    r_half = sol.event_radius
    yh = sol.dense(r_half)

    def rhs_s(s, y):
        r, dphi = y[0], y[1]
        h, rho, src, vir = densities(ln_E0 - s * s)
        w = FOUR_PI * r * r
        return (-2.0 * s / dphi) * np.array([1.0, src - 2.0 * dphi / r, w * h,
                                             0.5 * w * dphi * dphi, w * rho, w * vir])

    s_half = math.sqrt(0.5 * depth)
    outer = integrate_ode(rhs_s, [r_half, *yh[1:]], (s_half, 0.0), tol,
                          max_step=step_cap(tol, s_half))
    y_s = outer.y_end
    R, dphi_R = float(y_s[0]), float(y_s[1])
    prof = _Profile(sol.dense, r_eps, r_half, outer.dense, s_half, ln_E0, R)
    return _Shot(ln_E0 + R * dphi_R, prof, y_s, sol.nfev + outer.nfev)


def _bracket_and_solve(g, start, steps_up, steps_down, tol):
    """Find a sign change of ``g`` starting from ``start`` and walking in the
    direction the sign indicates, then refine with Brent's method."""
    g0 = g(start)
    seq = steps_down if g0 > 0 else steps_up
    prev, g_prev = start, g0
    for x in seq:
        try:
            gx = g(x)
        except IntegrationError:
            continue
        if np.sign(gx) != np.sign(g_prev):
            lo, hi = sorted((prev, x))
            return find_root_bracketed(g, lo, hi, tol.root_tol)
        prev, g_prev = x, gx
    raise RootBracketError("shooting mismatch kept one sign over the scan")


def _vacuum(a, n_nodes, tol) -> NVSolution:
    grid = RadialGrid(np.linspace(1e-6, 1.0, n_nodes), 1.0)
    z = np.zeros(n_nodes)
    return NVSolution(grid, z, z.copy(), z.copy(), z.copy(), z.copy(), 0.0, a,
                      tol=tol)


def build_nv_static(a: AnsatzProfile, central_field: Optional[float] = None,
                    tol: Tolerances = DEFAULT_TOL, n_nodes: int = 401,
                    n_exterior: int = 64) -> NVSolution:
    """
    Build a static, compactly supported Nordstrom-Vlasov state.

    Parameters
    ----------
    a : AnsatzProfile
        Isotropic profile. With ``central_field`` given, ``a.E0`` is ignored
        and the realized cutoff is returned in ``NVSolution.ansatz``.
    central_field : float, optional
        phi(0) < 0. If omitted, phi(0) is found by shooting at fixed ``a.E0``.
    tol : Tolerances
    n_nodes, n_exterior : int
        Uniform interior nodes on [r_eps, R] and geometric exterior nodes out
        to 20 R.

    Raises
    ------
    RootBracketError
        No sign change of the matching condition was found.
    IntegrationError
        The field never reaches the cutoff (non-compact profile).
    """
    if not a.isotropic:
        raise ValueError("nv supports only the isotropic ansatz")
    if a.c == 0:
        return _vacuum(a, n_nodes, tol)
    ptol = tol.scaled(PROFILE_TOL_FACTOR)

    if central_field is not None:
        phi_c = float(central_field)
        if not phi_c < 0:
            raise ValueError("central field must be negative")

        def g(x):
            return _shoot(a.with_E0(math.exp(x)), phi_c, x, ptol).mismatch

        # Newtonian estimate ln E0 ~ phi(0)/2
        ln_E0 = _bracket_and_solve(
            g, 0.5 * phi_c,
            steps_up=[q * phi_c for q in (0.25, 0.1, 0.02, 1e-3)],
            steps_down=[q * phi_c for q in (0.75, 0.9, 0.97, 0.995)], tol=ptol)
    else:
        if not 0 < a.E0 < 1:
            raise ValueError("cutoff E0 must lie in (0, 1)")
        ln_E0 = math.log(a.E0)

        def g(pc):
            return _shoot(a, pc, ln_E0, ptol).mismatch

        phi_c = _bracket_and_solve(
            g, 2.0 * ln_E0,
            steps_up=[q * ln_E0 for q in (3.0, 4.0, 6.0, 8.0)],
            steps_down=[q * ln_E0 for q in (1.5, 1.2, 1.05, 1.01)], tol=ptol)

    realized = a.with_E0(math.exp(ln_E0))
    shot = _shoot(realized, phi_c, ln_E0, ptol)
    prof = shot.profile
    R, dphi_R = prof.R, float(shot.y_surface[1])
    _, _, kin, grad, rest, vir = map(float, shot.y_surface)
    A = R * R * dphi_R

    r_in = np.linspace(prof.r_eps, R, n_nodes)
    r_out = np.geomspace(R, 20.0 * R, n_exterior + 1)[1:]
    nodes = np.concatenate([r_in, r_out])
    sol = NVSolution(RadialGrid(nodes, nodes[-1]), np.zeros(1), np.zeros(1),
                     np.zeros(1), np.zeros(1), np.zeros(1), R, realized,
                     phi_c, A, kin, grad, rest, vir, shot.mismatch, tol,
                     shot.nfev, prof)
    phi, dphi = sol.field_at(nodes)
    phi[n_nodes - 1] = ln_E0
    mom = [nv_moments(realized, p) for p in phi]
    return NVSolution(sol.grid, phi, dphi,
                      np.array([m.rho for m in mom]),
                      np.array([m.h for m in mom]),
                      np.array([m.n_aux for m in mom]), R, realized, phi_c, A,
                      kin, grad, rest, vir, shot.mismatch, tol, shot.nfev, prof)


# ------------------------------------------------------------ invariants

def nv_invariants(s: NVSolution) -> LorentzInvariants:
    """
    H = int (h_kin + |phi'|^2/2) dx including the exterior field energy
    2 pi A^2 / R; M = int rho dx; Q = 0 for a static state.
    """
    if s.is_vacuum:
        return LorentzInvariants(0.0, 0.0)
    H = s.kinetic + s.gradient_interior + 2.0 * math.pi * s.tail**2 / s.R_support
    return LorentzInvariants(M=s.rest_mass, H=H)


def lorentz_boost_invariants(inv: LorentzInvariants, u) -> LorentzInvariants:
    """
    M' = M, H' = u0 H - Q.u and Q' = Q - H u + (u.Q) u / (u0 + 1) with
    u0 = sqrt(1 + |u|^2). The last coefficient equals (u0 - 1)/|u|^2 without
    the 0/0 at u = 0.
    """
    u = np.asarray(u, dtype=float).reshape(3)
    u0 = math.sqrt(1.0 + float(u @ u))
    uq = float(u @ inv.Q)
    return LorentzInvariants(M=inv.M, H=u0 * inv.H - uq,
                             Q=inv.Q - inv.H * u + (uq / (u0 + 1.0)) * u)


def center_of_momentum_velocity(inv: LorentzInvariants) -> np.ndarray:
    """u = Q / sqrt(H^2 - |Q|^2), the boost that removes the momentum."""
    return inv.Q / inv.rest_energy


def _profile_integral(s: NVSolution, density, breaks=(), tol=None):
    """
    int_0^R density(r, phi, phi') 4 pi r^2 dr over the matter region. The
    outer piece is integrated in s = sqrt(ln E0 - phi), where the integrand
    is smooth up to the surface.
    """
    p = s.profile
    tol = s.tol.quad_tol if tol is None else tol

    def f_r(r):
        y = p.inner(r)
        return density(r, y[0], y[1]) * FOUR_PI * r * r

    def f_s(sv):
        y = p.outer(sv)
        r, dphi = y[0], y[1]
        return density(r, p.ln_E0 - sv * sv, dphi) * FOUR_PI * r * r * 2.0 * sv / dphi

    inner_pts = [b for b in breaks if p.r_eps < b < p.r_half]
    outer_pts = [float(p.s_of_r(b)[0]) for b in breaks if p.r_half < b < p.R]
    total = quad(f_r, p.r_eps, p.r_half, tol, points=inner_pts)
    total += quad(f_s, 0.0, p.s_half, tol, points=outer_pts)
    return total


def nv_chi_functional(s: NVSolution, m: MultiplierChi) -> float:
    """
    int (chi' h - (chi/r) rho) dx with h = h_kin + |phi'|^2/2 the full static
    energy density. The exterior (rho = 0, h = A^2/(2 r^4)) is integrated in
    closed form when ``m`` comes from ``make_chi_R``, by quadrature otherwise.
    """
    if s.is_vacuum:
        return 0.0
    a = s.ansatz

    def density(r, phi, dphi):
        mom = nv_moments(a, phi)
        return (float(m.dchi(r)) * (mom.h + 0.5 * dphi * dphi)
                - float(m.chi(r)) / r * mom.rho)

    interior = _profile_integral(s, density, m.breakpoints)
    R, A = s.R_support, s.tail
    if m.label.startswith("chi_R") and len(m.breakpoints) == 1:
        Rc = m.breakpoints[0]
        # int_R^inf chi'(r) r^-2 dr
        if Rc >= R:
            tail = 1.0 / R - 0.5 / Rc
        else:
            tail = Rc**2 / R**3 - 0.5 * Rc**3 / R**4
        exterior = 2.0 * math.pi * A * A * tail
    else:
        exterior = quad(lambda r: float(m.dchi(r)) * 2.0 * math.pi * A * A / (r * r),
                        R, np.inf, s.tol.quad_tol)
    return interior + exterior


def nv_static_virial_residual(s: NVSolution) -> float:
    """H + int e^{2 phi}(phi - 1) mu_N dx; zero for exact static states."""
    if s.is_vacuum:
        return 0.0
    return nv_invariants(s).H + s.source_term


def nv_field_residual(s: NVSolution, step: float = 1e-3) -> float:
    """
    sup over the stored interior nodes of |(1/r^2)(r^2 phi')' - e^{2 phi} mu_N|
    with the Laplacian taken by three-point differences of phi alone, at
    spacing ``step * R`` around each node. Only field values enter, so the
    check is independent of the first-order system that was integrated.
    """
    if s.is_vacuum:
        return 0.0
    r = s.grid.nodes[1:-1]
    r = r[r < s.R_support]
    h = np.minimum(step * s.R_support, 0.5 * r)
    phi_m, _ = s.field_at(r - h)
    phi_0, _ = s.field_at(r)
    phi_p, _ = s.field_at(r + h)
    d1 = (phi_p - phi_m) / (2.0 * h)
    d2 = (phi_p - 2.0 * phi_0 + phi_m) / (h * h)
    src = np.array([math.exp(2.0 * p) * nv_moments(s.ansatz, p).n_aux for p in phi_0])
    return float(np.max(np.abs(d2 + 2.0 * d1 / r - src)))


def chi_sweep_radii(R_support: float, n: int = 10) -> np.ndarray:
    return np.geomspace(0.25 * R_support, 1000.0 * R_support, n)


def nv_report(s: NVSolution, boosts=(), chi_radii=None) -> VirialReport:
    """
    H <= M with margin, the static virial residual, the chi_R sweep and,
    per boost, sqrt(H'^2 - |Q'|^2) <= M together with its invariance.
    """
    inv = nv_invariants(s)
    rep = VirialReport(model="nv", tolerances=s.tol.as_dict(),
                       grid={"nodes": len(s.grid), "r_eps": s.grid.r_eps,
                             "R_support": s.R_support, "nfev": s.nfev})
    trivial = s.is_vacuum
    rep.trivial = trivial
    rep.invariants = {"M": inv.M, "H": inv.H, "E0": s.ansatz.E0,
                      "phi_c": s.central_field, "A": s.tail, "R2": s.R_support,
                      "Zc": math.exp(-s.central_field) - 1.0}
    vir = nv_static_virial_residual(s)
    rep.residuals["virial"] = vir
    rep.residuals["virial_rel"] = abs(vir) / inv.H if inv.H else 0.0
    rep.residuals["matching"] = s.mismatch
    rep.add(le("H<=M", inv.H, inv.M, strict=True, trivial=trivial))
    rep.add(identity("virial", vir / inv.H if inv.H else 0.0, 1e-3,
                     trivial=trivial))
    if not trivial:
        radii = chi_sweep_radii(s.R_support) if chi_radii is None else chi_radii
        values = []
        for i, Rc in enumerate(radii):
            val = nv_chi_functional(s, make_chi_R(Rc))
            values.append(val)
            rep.add(le(f"chi[{i}](R={Rc:.6g})<=0", val, 0.0))
        rep.residuals["chi_values"] = values
        big = 1000.0 * s.R_support
        lim = nv_chi_functional(s, make_chi_R(big)) if big not in list(radii) else values[-1]
        gap = inv.H - inv.M
        rep.residuals["chi_limit"] = lim
        rep.residuals["chi_limit_offset"] = -math.pi * s.tail**2 / big
        rep.add(identity("chi_limit->H-M", (lim - gap) / gap, 1e-3))
    for i, u in enumerate(boosts):
        b = lorentz_boost_invariants(inv, u)
        e = b.rest_energy
        rep.add(le(f"boost[{i}]:sqrt(H'^2-|Q'|^2)<=M", e, b.M, trivial=trivial))
        rep.add(identity(f"boost[{i}]:norm", (e - inv.H) / inv.H if inv.H else 0.0,
                         1e-12, trivial=trivial))
    return rep


__all__ = ["NVSolution", "LorentzInvariants", "MultiplierChi",
           "build_nv_static", "nv_invariants", "lorentz_boost_invariants",
           "center_of_momentum_velocity", "make_chi_R", "nv_chi_functional",
           "nv_static_virial_residual", "nv_field_residual", "nv_report",
           "chi_sweep_radii"]
