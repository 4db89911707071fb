"""
Single builds and sequence scans driven by a RunConfig, plus CSV/JSON output.

Every build goes through ``build_report``; a report whose inequality margins
are within round-off of zero (or negative) is rebuilt once at 10x tighter
tolerances before it is returned. Scan points are independent and run in a
process pool (``STEADYVIRIAL_WORKERS`` sets the worker count); rows are
sorted by parameter value before anything is emitted.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import RunConfig
from .einstein_vlasov import build_ev_static, ev_bounds_report
from .nordstrom_vlasov import build_nv_static, nv_report
from .numerics import (IntegrationError, NumericsError, QuadratureError,
                       RootBracketError)
from .report import VirialReport
from .vlasov_poisson import build_vp_polytrope, vp_report

CSV_FIELDS = ("param", "Zc", "H", "M", "binding", "R1", "R2", "E0",
              "virial_residual", "buchdahl_sup", "checks_passed")
WORKERS_ENV = "STEADYVIRIAL_WORKERS"

# a margin this close to zero (relative to the compared values) is re-checked
NEAR_ZERO = 1e-9

EXIT_OK, EXIT_VIOLATION, EXIT_FAILURE = 0, 1, 2


@dataclass(frozen=True)
class ScanRow:
    param: float
    Zc: float = math.nan
    H: float = math.nan
    M: float = math.nan
    binding: float = math.nan
    R1: float = math.nan
    R2: float = math.nan
    E0: float = math.nan
    virial_residual: float = math.nan
    buchdahl_sup: float = math.nan
    checks_passed: bool = False
    margins: dict = field(default_factory=dict)
    failure: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def as_dict(self) -> dict:
        d = {k: _json_number(getattr(self, k)) for k in CSV_FIELDS}
        d["margins"] = {k: _json_number(v) for k, v in self.margins.items()}
        d["failure"] = self.failure
        return d


@dataclass(frozen=True)
class ScanResult:
    model: str
    param: str
    rows: tuple
    argmax_binding: Optional[int]

    @property
    def exit_code(self) -> int:
        if self.rows and all(r.failed for r in self.rows):
            return EXIT_FAILURE
        if any(not r.failed and not r.checks_passed for r in self.rows):
            return EXIT_VIOLATION
        return EXIT_OK

    def as_dict(self) -> dict:
        return {"model": self.model, "param": self.param,
                "argmax_binding": self.argmax_binding,
                "rows": [r.as_dict() for r in self.rows]}


def _json_number(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# ---------------------------------------------------------------- builds

def _build_once(cfg: RunConfig, tol) -> VirialReport:
    a = cfg.ansatz
    if cfg.model == "vp":
        s = build_vp_polytrope(a, cfg.central, tol, n_nodes=cfg.n_nodes)
        return vp_report(s, cfg.all_boosts())
    if cfg.model == "nv":
        s = build_nv_static(a, cfg.central, tol, n_nodes=cfg.n_nodes)
        return nv_report(s, cfg.all_boosts())
    s = build_ev_static(a, cfg.central, tol, n_nodes=cfg.n_nodes)
    return ev_bounds_report(s)


def _needs_retry(rep: VirialReport) -> bool:
    for c in rep.checks:
        if c.trivial:
            continue
        if not c.passed:
            return True
        if c.kind == "inequality" and not c.saturates:
            scale = max(abs(c.lhs), abs(c.rhs))
            if scale > 0 and abs(c.margin) <= NEAR_ZERO * scale:
                return True
    return False


def build_report(cfg: RunConfig) -> VirialReport:
    """
    Build the single state described by ``cfg`` and evaluate its report.

    Raises the model's NumericsError / ValueError on build failure.
    """
    rep = _build_once(cfg, cfg.tolerances)
    if _needs_retry(rep):
        rep = _build_once(cfg, cfg.tolerances.scaled(0.1))
        rep.grid["retried_at_tighter_tolerance"] = True
    return rep


def failure_code(exc: Exception) -> str:
    if isinstance(exc, IntegrationError):
        return "integration"
    if isinstance(exc, RootBracketError):
        return "root_bracket"
    if isinstance(exc, QuadratureError):
        return "quadrature"
    if isinstance(exc, NumericsError):
        return "numerics"
    return "invalid_parameter"


def row_from_report(param: float, rep: VirialReport) -> ScanRow:
    inv = rep.invariants
    H, M = inv["H"], inv["M"]
    return ScanRow(
        param=float(param),
        Zc=float(inv.get("Zc", 0.0)) if not rep.trivial else 0.0,
        H=float(H), M=float(M),
        binding=1.0 - H / M if M else 0.0,
        R1=float(inv.get("R1", 0.0)),
        R2=float(inv.get("R2", 0.0)),
        E0=float(inv.get("E0", 0.0)) if not rep.trivial else 0.0,
        virial_residual=float(rep.residuals.get("virial_rel", 0.0)),
        buchdahl_sup=float(inv.get("buchdahl_sup", 0.0)),
        checks_passed=rep.passed,
        # a check that does not apply has no margin (null in JSON)
        margins={c.name: math.nan if c.trivial else c.margin for c in rep.checks},
    )


def _run_point(args) -> ScanRow:
    value, cfg = args
    try:
        return row_from_report(value, build_report(cfg))
    except (NumericsError, ValueError, ZeroDivisionError, OverflowError) as exc:
        return ScanRow(param=float(value), failure=f"{failure_code(exc)}: {exc}")


def worker_count(n_tasks: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 1
    else:
        n = os.cpu_count() or 1
    return max(1, min(n, n_tasks))


def scan_sequence(cfg: RunConfig) -> ScanResult:
    """One independent build per scan value; rows sorted by parameter."""
    if cfg.scan is None:
        raise ValueError("config has no scan")
    values = [float(v) for v in cfg.scan.values()]
    tasks = [(v, cfg.point(v)) for v in values]
    n = worker_count(len(tasks))
    if n == 1:
        rows = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_run_point, tasks))
    rows.sort(key=lambda r: r.param)
    ok = [i for i, r in enumerate(rows) if not r.failed]
    argmax = max(ok, key=lambda i: (rows[i].binding, -i)) if ok else None
    return ScanResult(cfg.model, cfg.scan.param, tuple(rows), argmax)


def run_from_config(cfg: RunConfig):
    """A ScanResult when ``cfg.scan`` is set, otherwise a VirialReport."""
    if cfg.scan is not None:
        return scan_sequence(cfg)
    try:
        return build_report(cfg)
    except (NumericsError, ValueError, ZeroDivisionError, OverflowError) as exc:
        rep = VirialReport(model=cfg.model, tolerances=cfg.tolerances.as_dict())
        rep.failure = f"{failure_code(exc)}: {exc}"
        return rep


def exit_code(result) -> int:
    if isinstance(result, ScanResult):
        return result.exit_code
    if result.failure is not None:
        return EXIT_FAILURE
    return EXIT_OK if result.passed else EXIT_VIOLATION


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])
    return buf.getvalue()


def to_json(result) -> str:
    if isinstance(result, (list, tuple)):
        payload = [r.as_dict() for r in result]
    else:
        payload = result.as_dict()
    return json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _json_number(obj)


def render(result, fmt: str, param: float = math.nan) -> str:
    """
    CSV holds scan rows only (a single build becomes a one-row table with
    ``param`` in the first column); JSON holds the full scan or report.
    """
    if fmt == "csv":
        if isinstance(result, ScanResult):
            rows = result.rows
        elif isinstance(result, (list, tuple)):
            rows = result
        else:
            rows = [] if result.failure else [row_from_report(param, result)]
        return to_csv(rows)
    if fmt == "json":
        return to_json(result)
    raise ValueError(f"unknown format {fmt!r}")


def emit(result, fmt: str = "csv", path=None, param: float = math.nan) -> str:
    """Write ``result`` as CSV or JSON to ``path`` (stdout when None)."""
    text = render(result, fmt, param)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_json_rows(text: str) -> list:
    """Inverse of ``to_json`` for scan rows (null -> nan)."""
    data = json.loads(text)
    rows = data["rows"] if isinstance(data, dict) else data
    out = []
    for d in rows:
        vals = {k: (math.nan if d[k] is None else d[k]) for k in CSV_FIELDS}
        margins = {k: (math.nan if v is None else v) for k, v in d["margins"].items()}
        out.append(ScanRow(margins=margins, failure=d["failure"], **vals))
    return out


__all__ = ["ScanRow", "ScanResult", "CSV_FIELDS", "build_report",
           "scan_sequence", "run_from_config", "exit_code", "emit", "render",
           "to_csv", "to_json", "read_json_rows", "row_from_report",
           "EXIT_OK", "EXIT_VIOLATION", "EXIT_FAILURE", "WORKERS_ENV"]
