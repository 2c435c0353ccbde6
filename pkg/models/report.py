# models/report.py
import math
import platform
import time
from dataclasses import dataclass, field

import numpy as np


def _number(value):
    """JSON-safe float: None for nan and infinities"""
    value = float(value)
    return value if math.isfinite(value) else None


def _pair(value):
    if value is None:
        return None
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return [_number(arr.real), _number(arr.imag)]
    return [[_number(v.real), _number(v.imag)] for v in arr.ravel()]


@dataclass
class CheckResult:
    name: str
    formula: str
    lhs: object
    rhs: object
    abs_err: float
    rel_err: float
    tol: float
    passed: bool
    gating: bool = True
    wall_time: float = 0.0
    absolute: bool = False
    note: str = ""
    equation: str = ""  # name of the identity under test

    @staticmethod
    def compare(name: str, formula: str, lhs, rhs, tol: float, gating: bool = True,
                absolute: bool = False, wall_time: float = 0.0, note: str = "", equation: str = ""):
        lhs_arr = np.asarray(lhs, dtype=complex)
        rhs_arr = np.asarray(rhs, dtype=complex)
        abs_err = float(np.max(np.abs(lhs_arr - rhs_arr))) if lhs_arr.size else 0.0
        scale = float(max(np.max(np.abs(rhs_arr)) if rhs_arr.size else 0.0,
                          np.max(np.abs(lhs_arr)) if lhs_arr.size else 0.0))
        rel_err = abs_err / scale if scale > 0 else abs_err
        err = abs_err if absolute else rel_err
        return CheckResult(name, formula, lhs, rhs, abs_err, rel_err, tol, bool(err <= tol),
                           gating, wall_time, absolute, note, equation)

    @staticmethod
    def failure(name: str, formula: str, message: str, gating: bool = True, equation: str = ""):
        return CheckResult(name, formula, None, None, math.inf, math.inf, 0.0, False,
                           gating, 0.0, False, message, equation)

    def to_dict(self):
        return {
            "name": self.name,
            "paper_eq": self.equation,
            "formula": self.formula,
            "lhs": _pair(self.lhs),
            "rhs": _pair(self.rhs),
            "abs_err": _number(self.abs_err),
            "rel_err": _number(self.rel_err),
            "tol": self.tol,
            "pass": self.passed,
            "gating": self.gating,
            "wall_time": round(self.wall_time, 3),
            "note": self.note,
        }


@dataclass
class Report:
    instance: str
    suite: str
    checks: list = field(default_factory=list)
    environment: dict = field(default_factory=lambda: {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    })

    def add(self, check: CheckResult):
        self.checks.append(check)
        return check

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.gating)

    @property
    def failures(self):
        return [c for c in self.checks if c.gating and not c.passed]

    def to_dict(self):
        return {
            "instance": self.instance,
            "suite": self.suite,
            "checks": [c.to_dict() for c in self.checks],
            "environment": self.environment,
            "pass": self.passed,
        }
