"""
Independent reference values for the regression tests.

Nothing here imports steadyvirial. Moments are 1-D energy integrals taken
with Gauss-Legendre after the substitution eps = a + (E0 - a) s^2, which
removes the square-root endpoint; the structure equations are integrated
with the implicit Radau method at rtol 1e-12 and the free constants are
found with brentq. The result is written to tests/data/oracles.json.

    python3 scripts/derive_oracles.py [--out tests/data/oracles.json]
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

RTOL, ATOL = 1e-12, 1e-14
S, WS = np.polynomial.legendre.leggauss(80)
S, WS = 0.5 * (S + 1.0), 0.5 * WS


def energy_integral(weight, a, top, k):
    """int_a^top (top - eps)^k * weight(eps) * sqrt(eps^2 - a^2) d eps, k >= 0."""
    if top <= a:
        return 0.0
    w = top - a
    eps = a + w * S * S
    root = S * math.sqrt(w) * np.sqrt(eps + a)
    cut = (w * (1.0 - S * S)) ** k
    return float(np.sum(WS * 2.0 * w * S * cut * weight(eps) * root))


def closed_form_quadrature():
    # int_1^2 eps^2 sqrt(eps^2 - 1): eps = cosh t gives sinh(4t)/32 - t/8
    t = math.acosh(2.0)
    return math.sinh(4.0 * t) / 32.0 - t / 8.0


def vp_polytrope(k=1.0, c=1.0, depth=1.0):
    """Lane-Emden form of Delta D = -rho(D) with rho = C D^(k+3/2)."""
    n = k + 1.5
    # rho(D) = 4 pi c int_0^sqrt(2D) (D - p^2/2)^k p^2 dp at D = 1
    C = 4 * math.pi * c * quad(lambda p: (1 - p * p / 2) ** k * p * p, 0, math.sqrt(2),
                              epsabs=0, epsrel=1e-13)[0]
    K = 4 * math.pi * c * quad(lambda p: (1 - p * p / 2) ** k * p**4 / 2, 0, math.sqrt(2),
                              epsabs=0, epsrel=1e-13)[0]

    def rhs(r, y):
        D, dD = y[0], y[1]
        Dp = max(D, 0.0)
        w = 4 * math.pi * r * r
        return [dD, -C * Dp**n - 2 * dD / r, w * C * Dp**n, w * K * Dp ** (n + 1),
                0.5 * w * dD * dD]

    r0 = 1e-6
    rho0 = C * depth**n
    y0 = [depth - rho0 * r0**2 / 6, -rho0 * r0 / 3, 0, 0, 0]
    surf = lambda r, y: y[0]
    surf.terminal, surf.direction = True, -1
    sol = solve_ivp(rhs, (r0, 100.0), y0, method="Radau", rtol=RTOL, atol=ATOL,
                    events=surf)
    R = float(sol.t_events[0][0])
    _, _, M, E_kin, grad = sol.y_events[0][0]
    E_pot = grad + M * M / (8 * math.pi * R)
    return {"k": k, "c": c, "central_depth": depth, "R": R, "M": M,
            "E_kin": E_kin, "H": E_kin - E_pot, "E0": -M / (4 * math.pi * R)}


def nv_static(k=1.0, c=1.0, phi_c=-0.5):
    """Shoot on ln E0 so that phi = -A/r matches at the surface phi = ln E0."""

    def mom(phi, E0):
        a = math.exp(phi)
        mu_n = 4 * math.pi * c * energy_integral(lambda e: np.ones_like(e), a, E0, k)
        h = 4 * math.pi * c * energy_integral(lambda e: e * e, a, E0, k)
        rho = 4 * math.pi * c * energy_integral(lambda e: e, a, E0, k)
        return h, rho, mu_n

    def shoot(lnE0):
        E0 = math.exp(lnE0)

        def rhs(r, y):
            phi, dphi = y[0], y[1]
            h, rho, mu_n = mom(min(phi, lnE0), E0)
            w = 4 * math.pi * r * r
            return [dphi, math.exp(2 * phi) * mu_n - 2 * dphi / r,
                    w * (h + 0.5 * dphi * dphi), w * rho]

        src0 = math.exp(2 * phi_c) * mom(phi_c, E0)[2]
        r0 = 1e-6
        y0 = [phi_c + src0 * r0**2 / 6, src0 * r0 / 3, 0, 0]
        surf = lambda r, y: y[0] - lnE0
        surf.terminal, surf.direction = True, 1
        sol = solve_ivp(rhs, (r0, 1e3), y0, method="Radau", rtol=RTOL, atol=ATOL,
                        events=surf)
        R = float(sol.t_events[0][0])
        return R, sol.y_events[0][0]

    def mismatch(lnE0):
        R, y = shoot(lnE0)
        return lnE0 + R * y[1]

    lnE0 = brentq(mismatch, 0.9 * phi_c, 0.2 * phi_c, xtol=1e-14, rtol=1e-14)
    R, y = shoot(lnE0)
    A = R * R * y[1]
    H = y[2] + 2 * math.pi * A * A / R
    return {"k": k, "c": c, "phi_c": phi_c, "E0": math.exp(lnE0), "R": R,
            "A": A, "H": H, "M": y[3]}


def ev_star(k=1.0, c=1.0, z_c=-0.5):
    """Isotropic TOV star; E0 solves E0 = sqrt(1 - 2H/R2) with z = mu - ln E0."""

    def mom(z, E0):
        eta = math.exp(-z)
        amp = c * (E0 * math.exp(z)) ** k
        h = 4 * math.pi * amp * energy_integral(lambda e: e * e, 1.0, eta, k)
        p = 4 * math.pi / 3 * amp * energy_integral(lambda e: e * e - 1.0, 1.0, eta, k)
        n = 4 * math.pi * amp * energy_integral(lambda e: e, 1.0, eta, k)
        return h, p, n

    def integrate(E0):
        def rhs(r, y):
            m, z = y[0], y[1]
            h, p, n = mom(min(z, 0.0), E0)
            g = 1 - 2 * m / r
            w = 4 * math.pi * r * r
            return [w * h, (m / (r * r) + 4 * math.pi * r * p) / g,
                    w * n / math.sqrt(g)]

        h0, p0, _ = mom(z_c, E0)
        r0 = 1e-6
        y0 = [4 * math.pi * h0 * r0**3 / 3,
              z_c + 2 * math.pi * (h0 / 3 + p0) * r0 * r0, 0.0]
        surf = lambda r, y: y[1]
        surf.terminal, surf.direction = True, 1
        sol = solve_ivp(rhs, (r0, 1e4), y0, method="Radau", rtol=RTOL, atol=ATOL,
                        events=surf)
        return float(sol.t_events[0][0]), sol.y_events[0][0]

    def g(E0):
        R2, y = integrate(E0)
        return E0 - math.sqrt(1 - 2 * y[0] / R2)

    E0 = brentq(g, 0.3, 0.999999, xtol=1e-15, rtol=1e-14)
    R2, y = integrate(E0)
    H, M = y[0], y[2]
    mu0 = z_c + math.log(E0)
    return {"k": k, "c": c, "z_central": z_c, "E0": E0, "R2": R2, "H": H, "M": M,
            "Zc": math.expm1(-mu0)}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    here = Path(__file__).resolve().parent.parent
    p.add_argument("--out", default=str(here / "tests" / "data" / "oracles.json"))
    args = p.parse_args()
    data = {
        "quad_eps2_sqrt": closed_form_quadrature(),
        "vp_k1": vp_polytrope(1.0),
        "vp_k0": vp_polytrope(0.0),
        "nv_k1": nv_static(1.0, phi_c=-0.5),
        "nv_k0": nv_static(0.0, phi_c=-0.1),
        "ev_k1": ev_star(1.0, z_c=-0.5),
        "ev_k0": ev_star(0.0, z_c=-0.2),
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(json.dumps(data, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
