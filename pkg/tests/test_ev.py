import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steadyvirial import (AnsatzProfile, DEFAULT_TOL, Tolerances, build_ev_static,
                          ev_bounds_report, ev_consistency_residual, ev_invariants,
                          ev_virial_residual)
from steadyvirial.ansatz import ev_moments
from steadyvirial.einstein_vlasov import BUCHDAHL, HORIZON_GUARD

_cache = {}


def build(z, tol=DEFAULT_TOL, n_nodes=401, **kw):
    kw.setdefault("k", 1.0)
    key = (z, tol, n_nodes, tuple(sorted(kw.items())))
    if key not in _cache:
        _cache[key] = build_ev_static(AnsatzProfile(c=1.0, **kw), z, tol, n_nodes=n_nodes)
    return _cache[key]


STARS = [dict(k=1.0), dict(k=0.0), dict(k=2.0)]
SHELLS = [dict(k=1.0, F0=0.1), dict(k=0.0, F0=0.5), dict(k=1.0, l=1.0, F0=0.1)]


# ---------------------------------------------------------------- build

def test_vacuum():
    s = build_ev_static(AnsatzProfile(c=0.0), -0.5)
    inv = ev_invariants(s)
    assert s.is_vacuum and (inv.H, inv.M, inv.Zc) == (0.0, 0.0, 0.0)
    assert ev_virial_residual(s) == 0.0 and ev_consistency_residual(s) == 0.0
    rep = ev_bounds_report(s)
    assert rep.trivial and rep.passed and all(c.trivial for c in rep.checks)


@pytest.mark.parametrize("z", [0.0, 0.3])
def test_rejects_nonnegative_central_potential(z):
    with pytest.raises(ValueError):
        build_ev_static(AnsatzProfile(c=1.0), z)


def test_compactness_stays_below_horizon_guard_deep_in_the_centre():
    # even far past the operating range the isotropic stars stay sub-Buchdahl
    s = build(-10.0)
    assert s.buchdahl_sup < BUCHDAHL
    assert 1.0 - s.buchdahl_sup > HORIZON_GUARD


@pytest.mark.parametrize("kw", STARS + SHELLS)
@pytest.mark.parametrize("z", [-0.1, -0.5])
def test_solution_invariants(kw, z):
    s = build(z, **kw)
    r = s.grid.nodes
    assert np.all(s.lam >= -1e-14)
    assert np.all(s.mu <= 1e-14)
    lm = s.lam + s.mu
    assert np.all(lm <= 1e-12)
    assert np.all(lm >= s.mu_center - 1e-12)
    assert np.all(np.diff(s.m) >= -1e-14)
    out = r > s.R2
    assert np.allclose(s.m[out], s.H, rtol=1e-13)
    assert np.allclose(s.mu[out], 0.5 * np.log1p(-2 * s.H / r[out]), rtol=1e-10, atol=1e-14)
    assert np.all(s.moments.h[out] == 0)
    if s.R1 > 0:
        core = r < s.R1
        assert np.all(s.moments.h[core] == 0) and np.all(s.m[core] == 0)
    # the cutoff is reached at R2 by the slowest admissible particle
    surface = math.sqrt(1 - 2 * s.H / s.R2) * math.sqrt(1 + s.ansatz.F0 / s.R2**2)
    assert s.E0 == pytest.approx(surface, rel=1e-10)


@pytest.mark.parametrize("kw", STARS)
def test_isotropic_pressure_and_surface(kw):
    s = build(-0.4, **kw)
    assert np.allclose(s.moments.p_tan, 2 * s.moments.p_rad, rtol=1e-12, atol=0)
    i = int(np.searchsorted(s.grid.nodes, s.R2))
    assert s.moments.p_rad[i] <= 1e-12 * s.moments.p_rad[0]


@pytest.mark.parametrize("kw", [STARS[0], SHELLS[2]])
def test_stored_moments_match_ansatz(kw):
    s = build(-0.3, **kw)
    r = s.grid.nodes
    for i in range(0, len(r), 37):
        m = ev_moments(s.ansatz, s.mu[i], r[i])
        assert m.h == pytest.approx(s.moments.h[i], rel=1e-12, abs=1e-300)
        assert m.p_tan == pytest.approx(s.moments.p_tan[i], rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("key", ["ev_k1", "ev_k0"])
def test_against_frozen_oracle(oracles, key):
    ref = oracles[key]
    s = build(ref["z_central"], k=ref["k"])
    inv = ev_invariants(s)
    for got, want in ((inv.H, ref["H"]), (inv.M, ref["M"]), (inv.R2, ref["R2"]),
                      (inv.E0, ref["E0"]), (inv.Zc, ref["Zc"])):
        assert got == pytest.approx(want, rel=1e-8)


def test_near_vacuum_trend():
    # as the central potential rises to the cutoff the star turns Newtonian
    rows = [ev_invariants(build(z)) for z in (-0.05, -1e-2, -1e-3)]
    for prev, cur in zip(rows, rows[1:]):
        assert cur.Zc < prev.Zc and cur.binding < prev.binding
        assert 2 * cur.H / cur.R2 < 2 * prev.H / prev.R2
    assert rows[-1].Zc < 2e-3 and rows[-1].binding < 1e-3


def test_redshift_grows_with_depth():
    zs = [ev_invariants(build(z)).Zc for z in (-0.1, -0.3, -0.6)]
    assert zs[0] < zs[1] < zs[2]


# ---------------------------------------------------------------- identities

@pytest.mark.parametrize("kw", STARS + SHELLS)
def test_virial_default(kw):
    s = build(-0.5, **kw)
    assert abs(ev_virial_residual(s)) / s.H < 1e-3


@pytest.mark.parametrize("z", [-0.2, -0.5, -0.8])
def test_virial_converges_under_tightening(z):
    # at default tolerance the residual is at round-off, so start looser
    loose = Tolerances(ode_rel=1e-3, ode_abs=1e-5)
    res = [abs(ev_virial_residual(build(z, t))) for t in (loose, loose.scaled(0.1))]
    assert res[0] >= 4.0 * res[1]


@pytest.mark.parametrize("kw", STARS + SHELLS)
@pytest.mark.parametrize("z", [-0.05, -0.5, -0.8])
def test_consistency_residual_by_region(kw, z):
    s = build(z, **kw)
    assert ev_consistency_residual(s, "matter") < 1e-3
    assert ev_consistency_residual(s, "exterior") < 1e-6
    assert ev_consistency_residual(s) == max(ev_consistency_residual(s, g)
                                             for g in ("vacuum", "matter", "exterior"))
    with pytest.raises(ValueError):
        ev_consistency_residual(s, "nowhere")


# ---------------------------------------------------------------- report

@pytest.mark.parametrize("kw", STARS + SHELLS)
def test_report_passes_with_unique_names(kw):
    rep = ev_bounds_report(build(-0.5, **kw))
    assert rep.passed, [c.name for c in rep.checks if not c.passed]
    names = [c.name for c in rep.checks]
    assert len(names) == len(set(names))


@pytest.mark.parametrize("kw", STARS)
def test_report_isotropic_branch(kw):
    rep = ev_bounds_report(build(-0.5, **kw))
    inv = rep.invariants
    assert inv["H/M"] <= 1 and rep.residuals["redshift_branch"] == "H<=M"
    assert rep.check("e^mu0<=H/M").passed
    assert not rep.check("E0=sqrt(1-2H/R2)").trivial
    assert rep.check("R1<=18H/ln(|M/H-1|+1)").trivial


def test_report_shell_branches():
    rep = ev_bounds_report(build(-0.5, k=1.0, F0=0.1))
    assert rep.check("E0=sqrt(1-2H/R2)").trivial
    assert not rep.check("R1<=18H/ln(|M/H-1|+1)").trivial
    branch = rep.residuals["redshift_branch"]
    assert branch == ("H<=M" if rep.invariants["H/M"] <= 1 else "H>=M")
    name = "e^mu0<=H/M" if branch == "H<=M" else "e^mu0<=H/(2H-M)"
    assert rep.check(name).passed


def test_report_flags_small_mass_ratio():
    rep = ev_bounds_report(build(-0.5))
    assert rep.residuals["flag_H/M<=1/2"] == (rep.invariants["H/M"] <= 0.5)


@given(st.sampled_from([0.0, 1.0, 2.0]), st.floats(-0.8, -0.02))
@settings(max_examples=8, deadline=None)
def test_any_star_obeys_bounds(k, z):
    s = build_ev_static(AnsatzProfile(c=1.0, k=k), z, n_nodes=201)
    inv = ev_invariants(s)
    assert inv.Zc >= abs(inv.M / inv.H - 1)
    assert math.exp(s.mu_center) <= inv.H / inv.M
    assert s.buchdahl_sup < BUCHDAHL
    assert abs(ev_virial_residual(s)) / inv.H < 1e-3
