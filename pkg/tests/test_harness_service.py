import csv
import json

import numpy as np
import pytest

from models.report import CheckResult, Report
from services.harness_service import equation_for
from utils.errors import HarnessError, InstanceError


def test_check_result_compare():
    close = CheckResult.compare("c", "a = b", 1.0 + 1e-10, 1.0, 1e-9)
    assert close.passed and close.rel_err < 1e-9
    far = CheckResult.compare("c", "a = b", [1.0, 2.0], [1.0, 2.1], 1e-3)
    assert not far.passed
    assert abs(far.abs_err - 0.1) < 1e-12
    absolute = CheckResult.compare("c", "x = 0", 1e-12, 0.0, 1e-10, absolute=True)
    assert absolute.passed


def test_report_gating():
    report = Report("demo", "surface")
    report.add(CheckResult.compare("gating", "1 = 1", 1.0, 1.0, 0))
    report.add(CheckResult.failure("exploratory", "f", "diverged", gating=False))
    assert report.passed
    assert report.failures == []
    report.add(CheckResult.failure("broken", "f", "boom"))
    assert not report.passed
    assert [c.name for c in report.failures] == ["broken"]


def test_report_dict():
    report = Report("demo", "surface")
    report.add(CheckResult.compare("c", "a = b", 1 + 2j, 1 + 2j, 1e-9))
    data = report.to_dict()
    assert set(data) == {"instance", "suite", "checks", "environment", "pass"}
    check = data["checks"][0]
    assert check["lhs"] == [1.0, 2.0]
    assert check["formula"] == "a = b"
    assert set(check) >= {"name", "paper_eq", "rhs", "abs_err", "rel_err", "tol", "pass", "gating", "wall_time"}
    json.dumps(data)


def test_failed_check_serializes_without_nan():
    report = Report("demo", "surface")
    report.add(CheckResult.failure("broken", "f", "boom", equation="theta parity"))
    report.add(CheckResult.compare("inf", "a = b", float("inf"), 1.0, 1e-9))
    data = json.loads(json.dumps(report.to_dict(), allow_nan=False))
    broken, inf = data["checks"]
    assert broken["lhs"] is None and broken["rhs"] is None
    assert broken["abs_err"] is None and broken["rel_err"] is None
    assert broken["paper_eq"] == "theta parity"
    assert inf["lhs"] == [None, 0.0]
    assert not inf["pass"]


@pytest.mark.parametrize("name, expected", [
    ("build", "surface construction"),
    ("counts.zeros", "Riemann-Hurwitz counts"),
    ("dm-cubic.A0", "period-matrix variation (cubic form)"),
    ("dm-cubic.forms.C1.0.2", "pairing and single-residue forms of the period-matrix variation"),
    ("kernel.B.A1.2", "variation of the Bergman bidifferential"),
    ("kernel.B-symmetric.A1.2", "symmetry of the Bergman bidifferential variation"),
    ("prime-form.A0.1", "variation of the prime form"),
    ("prime-form.antisymmetric", "prime form antisymmetry"),
    ("bilinear.third-kind.1.0", "bilinear relation for third-kind b-periods (Abel map)"),
    ("hierarchy.R2-kernel.A0", "variation of the R hierarchy"),
    ("hierarchy.r2", "multidifferential hierarchy identities"),
])
def test_equation_names_use_longest_prefix(name, expected):
    assert equation_for(name) == expected


def test_unknown_check_name_has_no_equation():
    assert equation_for("nonsense") == ""


def test_unknown_suite(harness):
    with pytest.raises(HarnessError):
        harness.run_suite("ell4", "everything")


def test_unknown_instance(harness):
    with pytest.raises(InstanceError):
        harness.run_suite("no-such-instance", "surface")


def test_describe_counts(harness):
    ell4 = harness.describe("ell4")
    assert ell4["counts"] == {"n": 2, "K": 4, "p": 4, "genus": 1, "r": 8, "dim": 8, "coefficient_dims": [3, 5]}
    assert len(ell4["branch_points"]) == 4
    assert len(ell4["zeros"]) == 8
    g2 = harness.describe("g2-23")
    assert g2["counts"]["genus"] == 2
    assert g2["counts"]["dim"] == 11
    assert g2["counts"]["coefficient_dims"] == [4, 7]


def test_describe_dump(harness, tmp_path):
    dump = tmp_path / "ell4.json"
    harness.describe("ell4", str(dump))
    data = json.loads(dump.read_text())
    assert data["contours"]
    assert all(len(point) == 3 for polyline in data["contours"].values() for point in polyline)


def test_surface_suite_on_three_sheets(harness):
    report = harness.run_suite("n3-smoke", "surface")
    names = [c.name for c in report.checks]
    assert "counts.branch-points" in names
    assert "omega.symmetric" not in names
    assert report.passed
    monodromy = next(c for c in report.checks if c.name == "monodromy.product")
    assert monodromy.gating and monodromy.passed
    assert all(c.to_dict()["paper_eq"] for c in report.checks if c.gating)


def test_analytic_suites_skip_three_sheets(harness):
    report = harness.run_suite("n3-smoke", "dm-cubic")
    assert report.checks == []
    assert report.passed


@pytest.mark.slow
def test_surface_suite_on_elliptic_instance(harness):
    report = harness.run_suite("ell4", "surface")
    names = {c.name for c in report.checks}
    assert {"elliptic.j-invariant", "elliptic.theta", "basis.a-normalized"} <= names
    assert {"theta.quasi-periodic.odd", "theta.parity.odd", "bilinear.second-kind.0.0.4", "bilinear.third-kind.0.1",
            "bilinear.reciprocity.0.0.0.1", "jet.stability.0", "jet.quadrature.3"} <= names
    assert all(c.equation for c in report.checks if c.gating)
    assert report.passed, [(c.name, c.note, c.rel_err) for c in report.failures]


def test_tolerance_override(harness):
    report = harness.run_suite("n3-smoke", "surface", tol=0.5)
    assert all(c.tol == 0.5 for c in report.checks)


def test_sweep_rejects_empty_list(harness):
    with pytest.raises(HarnessError):
        harness.sweep_epsilon("ell4", "omega", "A0", [])


def test_sweep_rejects_unknown_inputs(harness):
    with pytest.raises(HarnessError):
        harness.sweep_epsilon("ell4", "omega", "C0.0.1", [1e-3])
    with pytest.raises(HarnessError):
        harness.sweep_epsilon("ell4", "curvature", "A0", [1e-3])
    with pytest.raises(HarnessError):
        harness.sweep_epsilon("n3-smoke", "omega", "A0", [1e-3])


@pytest.mark.slow
def test_sweep_writes_rows(harness, tmp_path):
    out = tmp_path / "sweep.csv"
    rows = harness.sweep_epsilon("ell4", "omega", "A0", [1e-2, 5e-3, 2.5e-3], str(out))
    assert [r["eps"] for r in rows] == [1e-2, 5e-3, 2.5e-3]
    assert rows[0]["flag"] == ""
    assert all(r["flag"] in ("ok", "noise-floor", "irregular") for r in rows[1:])
    with open(out, newline="", encoding="utf-8") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 3
    assert np.isfinite(float(table[-1]["abs_err"]))
