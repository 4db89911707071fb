"""Verdict records shared by the three model reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional


@dataclass(frozen=True)
class Check:
    """
    One inequality ``lhs <= rhs`` (or an identity residual against a
    threshold). ``margin = rhs - lhs`` is signed; negative means violated.
    ``trivial`` marks checks that are vacuous (vacuum state, branch not
    applicable) and never count as failures. ``saturates`` marks bounds
    attained with equality somewhere by construction (so a near-zero margin
    is expected, not a sign of under-resolution).
    """

    name: str
    lhs: float
    rhs: float
    kind: str = "inequality"
    strict: bool = False
    trivial: bool = False
    note: str = ""
    saturates: bool = False

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.trivial:
            return True
        return self.margin > 0 if self.strict else self.margin >= 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = self.margin
        d["passed"] = self.passed
        return d


def le(name, lhs, rhs, **kw) -> Check:
    return Check(name, float(lhs), float(rhs), **kw)


def identity(name, residual, threshold, **kw) -> Check:
    return Check(name, abs(float(residual)), float(threshold), kind="identity", **kw)


@dataclass
class VirialReport:
    model: str
    residuals: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    invariants: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    trivial: bool = False
    failure: Optional[str] = None

    def add(self, check: Check):
        if any(c.name == check.name for c in self.checks):
            raise ValueError(f"duplicate check {check.name!r}")
        self.checks.append(check)

    def check(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return self.failure is None and all(c.passed for c in self.checks)

    @property
    def violations(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "passed": self.passed,
            "trivial": self.trivial,
            "failure": self.failure,
            "invariants": self.invariants,
            "residuals": self.residuals,
            "checks": [c.as_dict() for c in self.checks],
            "tolerances": self.tolerances,
            "grid": self.grid,
        }
