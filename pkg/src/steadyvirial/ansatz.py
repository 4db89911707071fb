"""
Polytropic Jeans-type distribution functions

    psi(E, F) = c * (E0 - E)_+^k * (F - F0)_+^l

and their momentum-space moments for the three models. Reduced moments go
through one-dimensional Gauss-Jacobi rules in the particle energy, which
absorb the algebraic endpoint behaviour exactly. ``brute_force_moment`` is an
independent slow path that integrates over momentum space directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import beta_fn, gauss_jacobi, tanh_sinh

# nodes of the energy rule; cofactors are analytic so 48 is far past roundoff
N_ENERGY = 48

MODELS = ("vp", "nv", "ev")
MOMENTS = ("h", "p_rad", "p_tan", "n_aux", "rho", "e_kin")


@dataclass(frozen=True)
class AnsatzProfile:
    c: float = 1.0
    k: float = 1.0
    E0: float = 0.9
    l: float = 0.0
    F0: float = 0.0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("amplitude c must be nonnegative")
        # integrability of (E0-E)^k needs k > -1
        if not self.k > -1.0:
            raise ValueError(f"energy exponent k={self.k} must exceed -1")
        if self.l < 0 or self.F0 < 0:
            raise ValueError("angular exponent and cutoff must be nonnegative")

    @property
    def isotropic(self) -> bool:
        return self.l == 0 and self.F0 == 0

    @property
    def is_shell(self) -> bool:
        return self.F0 > 0

    def with_E0(self, E0: float) -> "AnsatzProfile":
        return replace(self, E0=float(E0))

    def validate_for(self, model: str):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        if model in ("vp", "nv") and not self.isotropic:
            raise ValueError(f"{model} supports only the isotropic ansatz")
        if model in ("nv", "ev") and not 0 < self.E0 < 1:
            raise ValueError("relativistic cutoff E0 must lie in (0, 1)")


@dataclass(frozen=True)
class MomentSet:
    """Momentum-space moments at one radius (or arrays over a grid)."""

    h: float = 0.0
    p_rad: float = 0.0
    p_tan: float = 0.0
    n_aux: float = 0.0
    rho: float = 0.0

    def scaled(self, factor):
        return MomentSet(self.h * factor, self.p_rad * factor,
                         self.p_tan * factor, self.n_aux * factor,
                         self.rho * factor)


ZERO_MOMENTS = MomentSet()


def eval_profile(a: AnsatzProfile, E, F=0.0):
    E = np.asarray(E, dtype=float)
    F = np.asarray(F, dtype=float)
    de = a.E0 - E
    df = F - a.F0
    inside = (de > 0) & ((df > 0) | (a.l == 0 and a.F0 == 0))
    de = np.where(inside, de, 1.0)
    df = np.where(inside, df, 1.0)
    val = a.c * de**a.k * (df**a.l if a.l else 1.0)
    val = np.where(inside, val, 0.0)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------- VP

def _vp_const(k, power):
    # int (D - p^2/2)_+^k |p|^(power-3) dp over R^3, divided by D^(k+power/2)
    return 4.0 * math.pi * 2.0 ** ((power - 2) / 2.0) * beta_fn(power / 2.0, k + 1.0)


def vp_density(a: AnsatzProfile, U):
    """rho(U) = int psi(|p|^2/2 + U) dp, proportional to (E0 - U)^(k+3/2)."""
    if not a.k > -1:
        raise ValueError("invalid exponent")
    depth = np.maximum(a.E0 - np.asarray(U, dtype=float), 0.0)
    val = a.c * _vp_const(a.k, 3) * depth ** (a.k + 1.5)
    return float(val) if val.ndim == 0 else val


def vp_kinetic_density(a: AnsatzProfile, U):
    """int |p|^2/2 psi dp, proportional to (E0 - U)^(k+5/2)."""
    depth = np.maximum(a.E0 - np.asarray(U, dtype=float), 0.0)
    val = 0.5 * a.c * _vp_const(a.k, 5) * depth ** (a.k + 2.5)
    return float(val) if val.ndim == 0 else val


def vp_density_coefficient(a: AnsatzProfile) -> float:
    """C with rho = C * (E0 - U)^n, n = k + 3/2."""
    return a.c * _vp_const(a.k, 3)


# ---------------------------------------------------------------- NV

def nv_moments(a: AnsatzProfile, phi: float) -> MomentSet:
    """
    Static Nordstrom-Vlasov moments at field value ``phi`` with particle
    energy eps = sqrt(e^{2 phi} + |p|^2).

    ``h`` holds the kinetic energy density int eps f dp, ``n_aux`` the source
    density int f dp / eps, ``rho`` the rest-mass density int f dp and
    ``p_rad``/``p_tan`` the matter stresses int p_i p_j f / eps dp.
    """
    lo = math.exp(phi)
    hi = a.E0
    if a.c == 0 or lo >= hi:
        return ZERO_MOMENTS
    # gap E0 - e^phi without cancellation near the surface
    d = -hi * math.expm1(phi - math.log(hi))
    t, w = gauss_jacobi(N_ENERGY, a.k, 0.5)
    eps = lo + d * t
    s = np.sqrt(eps + lo)
    base = 4.0 * math.pi * a.c * d ** (a.k + 1.5)
    n_aux = base * np.dot(w, s)
    rho = base * np.dot(w, s * eps)
    h = base * np.dot(w, s * eps * eps)
    p_rad = base / 3.0 * np.dot(w, s * d * t * (eps + lo))
    return MomentSet(h=h, p_rad=p_rad, p_tan=2.0 * p_rad, n_aux=n_aux, rho=rho)


# ---------------------------------------------------------------- EV

def _ev_core(amp, eta, r, k, l, F0):
    """
    Moments of amp * (eta - eps)_+^k (F - F0)_+^l, eps = sqrt(1 + |v|^2),
    F = r^2 |v_tan|^2, after the tangential integral is done in closed form.
    """
    eps_min = math.sqrt(1.0 + F0 / (r * r)) if F0 else 1.0
    if amp == 0 or eta <= eps_min:
        return ZERO_MOMENTS
    d = eta - eps_min
    beta = l + 0.5
    t, w = gauss_jacobi(N_ENERGY, k, beta)
    eps = eps_min + d * t
    s = eps + eps_min
    sb = s**beta
    pref = amp * 2.0 * math.pi * r ** (2.0 * l) * d ** (k + beta + 1.0)
    b_half = beta_fn(l + 1.0, 0.5)
    inner = pref * b_half
    n_aux = inner * np.dot(w, sb)
    rho = inner * np.dot(w, sb * eps)
    h = inner * np.dot(w, sb * eps * eps)
    x = d * t * s  # (eps^2 - eps_min^2)
    p_rad = pref * beta_fn(l + 1.0, 1.5) * np.dot(w, sb * x)
    p_tan = pref * np.dot(w, sb * (beta_fn(l + 2.0, 0.5) * x
                                   + b_half * F0 / (r * r)))
    return MomentSet(h=h, p_rad=p_rad, p_tan=p_tan, n_aux=n_aux, rho=rho)


def ev_moments_shifted(z: float, r: float, k: float, l: float = 0.0,
                       F0: float = 0.0, amp: float = 1.0) -> MomentSet:
    """
    Moments of f = amp * (1 - e^z eps)_+^k (F - F0)_+^l, i.e. the ansatz
    written in the shifted potential z = mu - ln E0 with amp = c E0^k.
    """
    eta = math.exp(-z)
    return _ev_core(amp * eta ** (-k), eta, r, k, l, F0)


def ev_moments(a: AnsatzProfile, mu: float, r: float) -> MomentSet:
    """
    Einstein-Vlasov moments h, p_rad, p_tan, n_aux = int f dv/sqrt(1+|v|^2)
    and rho = int f dv at metric value ``mu`` and radius ``r > 0``.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if a.c == 0:
        return ZERO_MOMENTS
    eta = a.E0 * math.exp(-mu)
    amp = a.c * math.exp(mu * a.k)
    return _ev_core(amp, eta, r, a.k, a.l, a.F0)


def moments(model: str, a: AnsatzProfile, field: float, r: float = 1.0):
    """Dispatch helper returning a dict of every moment the model defines."""
    if model == "vp":
        return {"rho": vp_density(a, field), "e_kin": vp_kinetic_density(a, field)}
    if model == "nv":
        m = nv_moments(a, field)
    elif model == "ev":
        m = ev_moments(a, field, r)
    else:
        raise ValueError(f"unknown model {model!r}")
    return {"h": m.h, "p_rad": m.p_rad, "p_tan": m.p_tan,
            "n_aux": m.n_aux, "rho": m.rho}


# ---------------------------------------------------------------- oracle

def _oracle_weights(model, which, p, pr2, pt2, field):
    """Integrand factor (without f) for each moment, from momentum components."""
    p2 = pr2 + pt2
    if model == "vp":
        return {"rho": 1.0, "e_kin": 0.5 * p2}[which]
    if model == "nv":
        eps = np.sqrt(math.exp(2 * field) + p2)
    else:
        eps = np.sqrt(1.0 + p2)
    return {
        "h": eps,
        "rho": 1.0,
        "n_aux": 1.0 / eps,
        "p_rad": pr2 / eps,
        "p_tan": pt2 / eps,
    }[which]


def brute_force_moment(a: AnsatzProfile, field: float, r: float, which: str,
                       model: str, level: int = 6) -> float:
    """
    Direct quadrature of a moment over momentum space in spherical
    coordinates (|p|, cos theta, azimuth) about the radial direction.

    Radial and polar directions use double-exponential rules restricted to
    the support of f; the azimuth uses the trapezoidal rule. The cutoff
    factor is evaluated from the distance to the support boundary so no
    reduction formula enters.
    """
    if which not in MOMENTS:
        raise ValueError(f"unknown moment {which!r}")
    if a.c == 0:
        return 0.0
    # radial support [p_lo, p_hi] and cutoff factor as a function of p
    if model == "vp":
        depth = a.E0 - field
        if depth <= 0:
            return 0.0
        p_hi = math.sqrt(2.0 * depth)
        mass2 = None
    elif model == "nv":
        mass2 = math.exp(2.0 * field)
        if math.exp(field) >= a.E0:
            return 0.0
        p_hi = math.sqrt(a.E0**2 - mass2)
        e_scale = 1.0
    elif model == "ev":
        mass2 = 1.0
        e_scale = math.exp(field)
        eta = a.E0 / e_scale
        if eta <= 1.0:
            return 0.0
        p_hi = math.sqrt(eta * eta - 1.0)
    else:
        raise ValueError(f"unknown model {model!r}")
    # angular cutoff: r^2 p^2 sin^2 > F0
    p_lo = math.sqrt(a.F0) / r if a.F0 else 0.0
    if p_lo >= p_hi:
        return 0.0

    p, wp, _, dp = tanh_sinh(p_lo, p_hi, level)
    # energy gap E0 - E written through p_hi^2 - p^2 to avoid cancellation
    gap2 = dp * (2.0 * p_hi - dp)
    if model == "vp":
        e_gap = 0.5 * gap2
    else:
        eps = np.sqrt(mass2 + p * p)
        e_gap = e_scale * gap2 / (np.sqrt(mass2 + p_hi**2) + eps)

    # polar variable u = cos(theta) in [-u_max, u_max]
    if a.F0:
        u_max = np.sqrt(np.maximum(1.0 - a.F0 / (r * r * p * p), 0.0))
    else:
        u_max = np.ones_like(p)
    _, wu_std, dl_std, _ = tanh_sinh(-1.0, 1.0, level)
    u = -u_max[:, None] + u_max[:, None] * dl_std[None, :]
    wu = u_max[:, None] * wu_std[None, :]
    # F - F0 = r^2 p^2 (u_max^2 - u^2); distance to the boundary from the rule
    dl = u_max[:, None] * dl_std[None, :]
    du = np.minimum(dl, 2.0 * u_max[:, None] - dl)
    f_gap = r * r * (p * p)[:, None] * du * (2.0 * u_max[:, None] - du)

    n_az = 8
    az = 2.0 * math.pi * np.arange(n_az) / n_az
    w_az = np.full(n_az, 2.0 * math.pi / n_az)

    P = p[:, None, None]
    U = u[:, :, None]
    px = P * np.sqrt(1.0 - U**2) * np.cos(az)[None, None, :]
    py = P * np.sqrt(1.0 - U**2) * np.sin(az)[None, None, :]
    pz = P * U * np.ones_like(px)
    pr2 = pz**2
    pt2 = px**2 + py**2

    f = a.c * e_gap[:, None, None] ** a.k
    if a.l:
        f = f * f_gap[:, :, None] ** a.l
    weight = _oracle_weights(model, which, p, pr2, pt2, field)
    integrand = f * weight * P**2
    total = np.einsum("i,ij,k,ijk->", wp, wu, w_az, integrand)
    return float(total)


__all__ = [
    "AnsatzProfile", "MomentSet", "ZERO_MOMENTS", "eval_profile", "vp_density",
    "vp_kinetic_density", "vp_density_coefficient", "nv_moments", "ev_moments",
    "ev_moments_shifted", "moments", "brute_force_moment", "MODELS", "MOMENTS",
]
