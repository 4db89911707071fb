"""
Static polytropic Vlasov-Poisson states in units with 4 pi G = 1.

The radial Poisson equation is written for the depth D = E0 - U, which
obeys (1/r^2)(r^2 D')' = -C D^n with n = k + 3/2. The depth at the centre
fixes the solution up to the additive constant of U; matching the Coulomb
tail -M/(4 pi r) outside the support then fixes E0 = -M/(4 pi R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ansatz import (AnsatzProfile, vp_density, vp_density_coefficient,
                     vp_kinetic_density)
from .numerics import (DEFAULT_TOL, RadialGrid, Tolerances, integrate_ode,
                       invert_dense, step_cap)
from .report import VirialReport, identity, le

FOUR_PI = 4.0 * math.pi

# polytropes with n = k + 3/2 >= 5 have unbounded support
K_MAX = 3.5


@dataclass(frozen=True)
class VPSolution:
    grid: RadialGrid
    U: np.ndarray
    dU: np.ndarray
    rho: np.ndarray
    R_support: float
    ansatz: AnsatzProfile
    central_depth: float = 0.0
    # running integrals carried along the ODE, closed at the surface
    mass: float = 0.0
    kinetic: float = 0.0
    field_interior: float = 0.0
    tol: Tolerances = DEFAULT_TOL
    nfev: int = 0

    @property
    def is_vacuum(self) -> bool:
        return self.mass == 0.0

    @property
    def length_scale(self) -> float:
        """Natural radius 1/sqrt(C D0^(n-1)); the surface sits at O(1) of it."""
        return _length_scale(self.ansatz, self.central_depth)


@dataclass(frozen=True)
class GalileanInvariants:
    M: float
    H: float
    E_kin: float
    E_pot: float
    Q: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float).reshape(3))

    @property
    def internal_energy(self) -> float:
        """H - |Q|^2/(2M), unchanged by Galilean boosts."""
        if self.M == 0:
            return self.H
        return self.H - float(self.Q @ self.Q) / (2.0 * self.M)


def _length_scale(a: AnsatzProfile, depth: float) -> float:
    coeff = vp_density_coefficient(a)
    n = a.k + 1.5
    return 1.0 / math.sqrt(coeff * depth ** (n - 1.0))


def _vacuum(a: AnsatzProfile, n_nodes: int, tol: Tolerances) -> VPSolution:
    grid = RadialGrid(np.linspace(1e-6, 1.0, n_nodes), 1.0)
    z = np.zeros(n_nodes)
    return VPSolution(grid, z, z.copy(), z.copy(), 0.0, a, tol=tol)


def build_vp_polytrope(a: AnsatzProfile, central_depth: float = 1.0,
                       tol: Tolerances = DEFAULT_TOL, n_nodes: int = 401,
                       n_exterior: int = 64) -> VPSolution:
    """
    Integrate the radial Poisson equation for the isotropic polytrope.

    Parameters
    ----------
    a : AnsatzProfile
        Only ``c`` and ``k`` are used; ``E0`` of the returned profile is the
        value realized by the exterior matching.
    central_depth : float
        E0 - U(0) > 0.
    tol : Tolerances
    n_nodes : int
        Uniform interior nodes on [r_eps, R_support].
    n_exterior : int
        Geometric exterior nodes out to 20 R_support.

    Raises
    ------
    ValueError
        Anisotropic ansatz, nonpositive depth, or k >= 7/2.
    IntegrationError
        The density never vanishes before the outer radius.
    """
    if not a.isotropic:
        raise ValueError("vp supports only the isotropic ansatz")
    if not central_depth > 0:
        raise ValueError("central depth must be positive")
    if a.k >= K_MAX:
        raise ValueError(f"k={a.k} >= 7/2 gives a polytrope of unbounded support")
    if a.c == 0:
        return _vacuum(a, n_nodes, tol)

    n = a.k + 1.5
    coeff = vp_density_coefficient(a)
    # the kinetic density is a fixed multiple of D^(n+1)
    kin_coeff = vp_kinetic_density(replace(a, E0=1.0), 0.0)
    D0 = float(central_depth)
    L = _length_scale(a, D0)

    # Lane-Emden form in x = r/L, theta = D/D0; scale-free, so the error is
    # the same for every depth. State: theta, theta', and the running
    # integrals of theta^n, theta^(n+1) and theta'^2/2 against 4 pi x^2.
    def rhs(x, y):
        th = y[0] if y[0] > 0 else 0.0
        w = FOUR_PI * x * x
        th_n = th**n
        return np.array([y[1], -th_n - 2.0 * y[1] / x, w * th_n,
                         w * th_n * th, 0.5 * w * y[1] * y[1]])

    x_eps = 1e-5
    vol = FOUR_PI * x_eps**3 / 3.0
    y0 = [1.0 - x_eps**2 / 6.0, -x_eps / 3.0, vol, vol,
          FOUR_PI * x_eps**5 / 90.0]
    # inner segment until theta = 1/2
    sol = integrate_ode(rhs, y0, (x_eps, 1e4), tol,
                        stop=lambda x, y: y[0] - 0.5, require_event=True,
                        max_step=step_cap(tol, 1.0))
    x_half = sol.event_radius
    y_half = sol.dense(x_half)

    # outer segment in s = sqrt(theta): theta^n = s^(2n) is smooth up to the
    # surface for half-integer k, and the surface is the fixed endpoint s = 0
    def rhs_s(s, y):
        x, dth = y[0], y[1]
        th_n = s ** (2.0 * n)
        w = FOUR_PI * x * x
        return (2.0 * s / dth) * np.array([1.0, -th_n - 2.0 * dth / x,
                                           w * th_n, w * th_n * s * s,
                                           0.5 * w * dth * dth])

    s_half = math.sqrt(0.5)
    z_half = [x_half, y_half[1], y_half[2], y_half[3], y_half[4]]
    outer_sol = integrate_ode(rhs_s, z_half, (s_half, 0.0), tol,
                              max_step=step_cap(tol, s_half))
    x_surf, _, i_rho, i_kin, i_grad = map(float, outer_sol.y_end)
    L3 = L**3
    R = L * x_surf
    mass = coeff * D0**n * L3 * i_rho
    kinetic = kin_coeff * D0 ** (n + 1.0) * L3 * i_kin
    field_int = (D0 / L) ** 2 * L3 * i_grad
    E0 = -mass / (FOUR_PI * R)

    x_in = np.linspace(x_eps, x_surf, n_nodes)
    theta = np.empty_like(x_in)
    dtheta = np.empty_like(x_in)
    near = x_in <= x_half
    Y = sol.dense(x_in[near])
    theta[near], dtheta[near] = Y[0], Y[1]
    s_far = invert_dense(outer_sol.dense, x_in[~near], 0.0, s_half)
    theta[~near] = s_far**2
    dtheta[~near] = outer_sol.dense(s_far)[1]
    theta[-1] = 0.0

    inner = L * x_in
    outer = np.geomspace(R, 20.0 * R, n_exterior + 1)[1:]
    nodes = np.concatenate([inner, outer])
    U = np.concatenate([E0 - D0 * theta, -mass / (FOUR_PI * outer)])
    dU = np.concatenate([-(D0 / L) * dtheta, mass / (FOUR_PI * outer**2)])
    nfev = sol.nfev + outer_sol.nfev
    realized = a.with_E0(E0)
    rho = vp_density(realized, U)
    return VPSolution(RadialGrid(nodes, nodes[-1]), U, dU, rho, float(R),
                      realized, D0, mass, kinetic, field_int, tol, nfev)


def vp_invariants(s: VPSolution) -> GalileanInvariants:
    """
    Mass, kinetic and field energy of a static build. The field energy adds
    the exterior Coulomb contribution M^2/(8 pi R) to the interior integral.
    """
    if s.is_vacuum:
        return GalileanInvariants(0.0, 0.0, 0.0, 0.0)
    E_pot = s.field_interior + s.mass**2 / (8.0 * math.pi * s.R_support)
    return GalileanInvariants(M=s.mass, H=s.kinetic - E_pot, E_kin=s.kinetic,
                              E_pot=E_pot)


def galilean_boost(inv: GalileanInvariants, u) -> GalileanInvariants:
    """
    Invariants seen in a frame moving with velocity ``-u`` (x' = x - u t,
    p' = p - u): M' = M, Q' = Q - M u, E_kin' = E_kin - u.Q + M|u|^2/2,
    and E_pot is unchanged.
    """
    if inv.M < 0:
        raise ValueError("mass must be nonnegative")
    u = np.asarray(u, dtype=float).reshape(3)
    shift = -float(u @ inv.Q) + 0.5 * inv.M * float(u @ u)
    return GalileanInvariants(M=inv.M, H=inv.H + shift, E_kin=inv.E_kin + shift,
                              E_pot=inv.E_pot, Q=inv.Q - inv.M * u)


def vp_report(s: VPSolution, boosts=()) -> VirialReport:
    """Virial residual, the sign of H and the travelling-state bound per boost."""
    inv = vp_invariants(s)
    rep = VirialReport(model="vp", tolerances=s.tol.as_dict(),
                       grid={"nodes": len(s.grid), "r_eps": s.grid.r_eps,
                             "R_support": s.R_support, "nfev": s.nfev})
    rep.invariants = {"M": inv.M, "H": inv.H, "E_kin": inv.E_kin,
                      "E_pot": inv.E_pot, "E0": s.ansatz.E0, "R2": s.R_support}
    residual = inv.H + inv.E_kin
    rep.residuals["virial"] = residual
    rep.residuals["virial_rel"] = abs(residual) / abs(inv.H) if inv.H else 0.0
    trivial = s.is_vacuum
    rep.trivial = trivial
    rep.add(identity("virial", residual / inv.H if inv.H else 0.0, 1e-3,
                     trivial=trivial))
    rep.add(le("H<0", inv.H, 0.0, strict=True, trivial=trivial))
    for i, u in enumerate(boosts):
        b = galilean_boost(inv, u)
        bound = float(b.Q @ b.Q) / (2.0 * b.M) if b.M else 0.0
        rep.add(le(f"boost[{i}]:H'<|Q'|^2/2M", b.H, bound, strict=True,
                   trivial=trivial))
    return rep


__all__ = ["VPSolution", "GalileanInvariants", "build_vp_polytrope",
           "vp_invariants", "galilean_boost", "vp_report", "K_MAX"]
