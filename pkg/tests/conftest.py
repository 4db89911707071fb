import json
import os
from functools import lru_cache
from pathlib import Path

import pytest

from steadyvirial import AnsatzProfile
from steadyvirial.config import RunConfig, ScanSpec
from steadyvirial.scan import scan_sequence

DATA = Path(__file__).parent / "data"

CRITERIA = {
    1: "vp virial identity and 10x-tolerance convergence",
    2: "vp H < 0 and travelling-state bound under random boosts",
    3: "n = 1 Lane-Emden profile and first zero",
    4: "nv H < M and static virial identity",
    5: "nv chi_R sweep <= 0 and large-R limit H - M",
    6: "Lorentz transformation laws",
    7: "ev virial identity on an isotropic scan",
    8: "ev redshift bound and Buchdahl bound on every row",
    9: "ev isotropic cutoff identity and redshift bound",
    10: "ev shell inner-radius bound",
    11: "ev independent field-equation residual and its convergence",
    12: "reduced moments against brute-force quadrature",
    13: "determinism and CLI exit codes",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    os.environ.setdefault("STEADYVIRIAL_WORKERS", "4")


def pytest_runtest_logreport(report):
    marks = getattr(report, "criterion_ids", None)
    if not marks:
        return
    if report.when == "call" or report.failed or report.skipped:
        for n in marks:
            _outcomes.setdefault(n, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criterion_ids = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        got = _outcomes.get(n)
        if not got:
            status = "NOT RUN"
        elif all(o == "passed" for o in got):
            status = "PASS"
        else:
            status = "FAIL"
        tr.write_line(f"[{n:02d}] {status:7s} {title} ({len(got or [])} tests)")


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


# ---------------------------------------------------------------- shared builds

EV_SCANS = {
    "k1": dict(ansatz=AnsatzProfile(c=1.0, k=1.0), start=-0.05, stop=-0.8),
    "k0": dict(ansatz=AnsatzProfile(c=1.0, k=0.0), start=-0.05, stop=-0.8),
    "k2": dict(ansatz=AnsatzProfile(c=1.0, k=2.0), start=-0.05, stop=-0.8),
    "shell_k1": dict(ansatz=AnsatzProfile(c=1.0, k=1.0, F0=0.1), start=-0.05, stop=-0.8),
    "shell_k0": dict(ansatz=AnsatzProfile(c=1.0, k=0.0, F0=0.5), start=-0.05, stop=-0.8),
    "shell_l1": dict(ansatz=AnsatzProfile(c=1.0, k=1.0, l=1.0, F0=0.1), start=-0.05,
                     stop=-0.8),
}


@lru_cache(maxsize=None)
def ev_scan(name, count=10):
    spec = EV_SCANS[name]
    cfg = RunConfig(model="ev", ansatz=spec["ansatz"],
                    scan=ScanSpec("central", spec["start"], spec["stop"], count))
    return scan_sequence(cfg)
