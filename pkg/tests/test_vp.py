import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from steadyvirial import (AnsatzProfile, DEFAULT_TOL, build_vp_polytrope,
                          brute_force_moment, galilean_boost, vp_invariants, vp_report)
from steadyvirial.ansatz import vp_density
from steadyvirial.vlasov_poisson import GalileanInvariants

vec = st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(np.array)


@pytest.fixture(scope="module")
def k1():
    return build_vp_polytrope(AnsatzProfile(c=1.0, k=1.0), 1.0)


def test_vacuum():
    s = build_vp_polytrope(AnsatzProfile(c=0.0, k=1.0), 1.0)
    inv = vp_invariants(s)
    assert np.all(s.U == 0)
    assert (inv.M, inv.H, inv.E_kin) == (0.0, 0.0, 0.0)
    rep = vp_report(s, [(0.1, 0.0, 0.0)])
    assert rep.trivial and rep.passed
    assert all(c.trivial for c in rep.checks)
    assert rep.residuals["virial"] == 0.0


@pytest.mark.parametrize("kw,depth", [(dict(k=3.5), 1.0), (dict(k=1.0, F0=0.1), 1.0),
                                      (dict(k=1.0), 0.0), (dict(k=1.0), -1.0)])
def test_invalid_inputs(kw, depth):
    with pytest.raises(ValueError):
        build_vp_polytrope(AnsatzProfile(c=1.0, **kw), depth)


def test_solution_invariants(k1):
    s = k1
    r = s.grid.nodes
    assert np.all(np.diff(s.U) > 0)
    inside = r < s.R_support
    assert np.all(s.U[inside] < 0)
    assert np.all(s.rho[r >= s.R_support] == 0)
    assert np.allclose(s.rho, vp_density(s.ansatz, s.U), rtol=1e-14, atol=0)
    assert s.grid.r_max > s.R_support
    inv = vp_invariants(s)
    # Coulomb tail U = -M / (4 pi r)
    out = r > s.R_support
    assert np.allclose(s.U[out], -inv.M / (4 * math.pi * r[out]), rtol=1e-13)
    assert s.ansatz.E0 == pytest.approx(-inv.M / (4 * math.pi * s.R_support))


def test_energy_split_exact(k1):
    inv = vp_invariants(k1)
    assert inv.H == inv.E_kin - inv.E_pot
    assert np.all(inv.Q == 0)
    assert inv.M > 0


def test_mass_two_ways(k1):
    s = k1
    inv = vp_invariants(s)
    i = int(np.searchsorted(s.grid.nodes, s.R_support))
    # Gauss law at the surface
    flux = 4 * math.pi * s.R_support**2 * s.dU[i]
    assert flux == pytest.approx(inv.M, rel=1e-8)
    # radial quadrature of the brute-force density
    r = s.grid.nodes[: i + 1]
    rho = np.array([brute_force_moment(s.ansatz, u, 1.0, "rho", "vp") for u in s.U[: i + 1]])
    M = simpson(4 * math.pi * r * r * rho, x=r)
    assert M == pytest.approx(inv.M, rel=1e-6)


@pytest.mark.parametrize("key", ["vp_k1", "vp_k0"])
def test_against_frozen_oracle(oracles, key):
    ref = oracles[key]
    s = build_vp_polytrope(AnsatzProfile(c=ref["c"], k=ref["k"]), ref["central_depth"])
    inv = vp_invariants(s)
    for got, want in ((inv.M, ref["M"]), (inv.H, ref["H"]), (inv.E_kin, ref["E_kin"]),
                      (s.R_support, ref["R"]), (s.ansatz.E0, ref["E0"])):
        assert got == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("n", [201, 401])
def test_k1_residual_two_resolutions(n):
    s = build_vp_polytrope(AnsatzProfile(c=1.0, k=1.0), 1.0, n_nodes=n)
    rep = vp_report(s)
    assert rep.residuals["virial_rel"] < 1e-3
    assert rep.check("H<0").passed


@given(st.sampled_from([-0.5, 0.0, 0.5, 1.0, 2.0, 3.0]), st.floats(0.05, 20.0),
       st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_any_build_negative_energy_and_virial(k, depth, c):
    s = build_vp_polytrope(AnsatzProfile(c=c, k=k), depth)
    inv = vp_invariants(s)
    assert inv.H < 0
    assert abs(inv.H + inv.E_kin) / abs(inv.H) < 1e-3


def test_residual_decreases_with_tolerance():
    a = AnsatzProfile(c=1.0, k=1.0)
    res = []
    for f in (1.0, 0.5, 0.1):
        inv = vp_invariants(build_vp_polytrope(a, 1.0, DEFAULT_TOL.scaled(f)))
        res.append(abs(inv.H + inv.E_kin))
    assert res[2] < res[0]


# ---------------------------------------------------------------- boosts

def test_boost_identity():
    inv = GalileanInvariants(M=2.0, H=-1.0, E_kin=1.0, E_pot=2.0)
    b = galilean_boost(inv, (0.0, 0.0, 0.0))
    assert (b.M, b.H, b.E_kin, b.E_pot) == (inv.M, inv.H, inv.E_kin, inv.E_pot)


def test_boost_arithmetic():
    inv = GalileanInvariants(M=2.0, H=-1.0, E_kin=1.0, E_pot=2.0)
    b = galilean_boost(inv, (1.0, 0.0, 0.0))
    assert np.array_equal(b.Q, [-2.0, 0.0, 0.0])
    assert b.H == 0.0
    assert b.H < float(b.Q @ b.Q) / (2 * b.M) == 1.0


def test_center_of_mass_boost():
    inv = GalileanInvariants(M=2.0, H=1.0, E_kin=3.0, E_pot=2.0, Q=(0.4, -1.0, 2.0))
    b = galilean_boost(inv, inv.Q / inv.M)
    assert np.allclose(b.Q, 0.0, atol=1e-15)
    assert b.H == pytest.approx(inv.internal_energy)


def test_boost_rejects_negative_mass():
    with pytest.raises(ValueError):
        galilean_boost(GalileanInvariants(M=-1.0, H=0.0, E_kin=0.0, E_pot=0.0), (1, 0, 0))


@given(vec, vec, st.floats(0.1, 10), st.floats(-10, 10))
def test_boost_properties(q, u, M, H):
    inv = GalileanInvariants(M=M, H=H, E_kin=H + 1.0, E_pot=1.0, Q=q)
    b = galilean_boost(inv, u)
    assert b.M == inv.M and b.E_pot == inv.E_pot
    assert b.internal_energy == pytest.approx(inv.internal_energy, rel=1e-9, abs=1e-9)
    back = galilean_boost(b, -u)
    assert np.allclose(back.Q, inv.Q, atol=1e-12 * (1 + M * np.abs(u).max()))
    assert back.H == pytest.approx(inv.H, abs=1e-9 * (1 + M * float(u @ u) + abs(float(u @ q))))
