"""Acceptance criteria, one test per criterion.

Each test runs the corresponding suite checks at their pinned tolerances
and prints a single PASS/FAIL line (visible with ``pytest -s`` or in the
failure report).  These are the exit criteria of the whole toolkit; no
tolerance here is looser than the one stated in the module defaults.
"""

from cottonkit import suite
from cottonkit.catalog import CASE_TAGS, SolutionCase


ALL_CASES = [SolutionCase(tag, -1.0 if tag == "b" else 1.0) for tag in CASE_TAGS]


def _summarize(n, name, reports):
    failed = [r for r in reports if not r.passed]
    worst = max((r.max_residual for r in reports), default=0.0)
    verdict = "PASS" if not failed else "FAIL"
    print(f"ACCEPTANCE {n:02d} {name}: {verdict} ({len(reports)} checks, worst residual {worst:.3e})")
    assert not failed, "\n".join(r.line() for r in failed)


def test_criterion_01_convention_calibration():
    # r = +C at C in {0.25, 1, 9}, relative 1e-9, on the homogeneous branch
    reports = suite.check_calibration()
    for r in reports:
        assert r.tolerance <= 1e-9
    _summarize(1, "convention-calibration", reports)


def test_criterion_02_curvature_catalog():
    reports = []
    for case in ALL_CASES:
        reports.extend(suite.check_curvature(case))
    for r in reports:
        assert r.tolerance <= 1e-9
    _summarize(2, "curvature-catalog", reports)


def test_criterion_03_cotton_vanishing_with_control():
    reports = [suite.check_cotton_vanishing(case) for case in ALL_CASES]
    for r in reports:
        assert r.tolerance <= 1e-8
    reports.append(suite.check_cotton_control())
    _summarize(3, "cotton-vanishing", reports)


def test_criterion_04_cotton_identities():
    rep = suite.check_cotton_identities(n_metrics=20)
    assert rep.tolerance <= 1e-8
    _summarize(4, "cotton-identities", [rep])


def test_criterion_05_field_equations_and_first_integral():
    reports = []
    for case in ALL_CASES:
        reports.append(suite.check_eom(case))
        reports.append(suite.check_first_integral(case))
    for r in reports:
        assert r.tolerance <= 1e-9
    _summarize(5, "field-equations", reports)


def test_criterion_06_kk_curvature_relation():
    reports = [suite.check_kk(case) for case in ALL_CASES]
    for r in reports:
        assert r.tolerance <= 1e-9
    # the closed-form cross-check for the kink branch is the 3D curvature
    # comparison of criterion 2; assert it again explicitly here
    kink_reports = suite.check_curvature(SolutionCase("kink+", 1.0))
    reports.extend(kink_reports)
    _summarize(6, "kk-relation", reports)


def test_criterion_07_transforms():
    reports = [suite.check_transform(case) for case in ALL_CASES]
    for r in reports:
        assert r.tolerance <= 1e-9
    limit = suite.check_transform_limit(1.0)
    assert limit.tolerance <= 0.01
    reports.append(limit)
    _summarize(7, "conformal-transforms", reports)


def test_criterion_08_kink_solver():
    reports = suite.check_kink_solver((0.25, 1.0, 4.0))
    for r in reports:
        assert r.tolerance <= 1e-6
    conv = suite.check_kink_convergence()
    assert conv.details["fitted_order"] >= 4.0
    assert min(conv.details["ratios"]) >= 16.0
    reports.append(conv)
    _summarize(8, "kink-solver", reports)


def test_criterion_09_lifting_theorem():
    reports = suite.check_lift("phi4") + suite.check_lift("sine-gordon")
    for r in reports:
        if r.check_id == "lift-catalog-match":
            assert r.tolerance <= 1e-9
        else:
            assert r.tolerance <= 1e-8
    _summarize(9, "lifting-theorem", reports)


def test_criterion_10_killing_suite():
    reports = []
    for tag in ("a", "b", "c+", "c-"):
        case = SolutionCase(tag, -1.0 if tag == "b" else 1.0)
        reports.extend(suite.check_killing_fields(case))
        reports.append(suite.check_max_symmetry(case))
    for tag in ("flat", "a", "b", "c+", "c-"):
        reports.append(suite.check_killing_dimension(tag))
    counts = {r.case: r.details["rank"] for r in reports if r.check_id == "killing-count"}
    assert counts == {"a": 4, "b": 4, "c+": 6, "c-": 6}
    dims = {r.case: r.details["estimate"] for r in reports if r.check_id == "killing-dim"}
    assert dims == {"flat": 6, "a": 4, "b": 4, "c+": 6, "c-": 6}
    _summarize(10, "killing-suite", reports)


def test_criterion_11_variational_lattices():
    reports = [
        suite.check_lattice_2d("random"),
        suite.check_lattice_2d("solution"),
        suite.check_lattice_3d(),
    ]
    for r in reports:
        assert abs(r.details["fitted_order"] - 2.0) <= 0.3
        ds = r.details["discrepancies"]
        assert all(ds[i] > ds[i + 1] for i in range(len(ds) - 1))
    _summarize(11, "variational-lattices", reports)


def test_criterion_12_engine_oracles():
    reports = [suite.check_jets_fd(n=1000)]
    assert reports[0].tolerance <= 1e-6
    reports.append(suite.check_parser_roundtrip(n=200))
    geo = suite.check_geometry_identities()
    for r in geo:
        assert r.tolerance <= 1e-10
    reports.extend(geo)
    _summarize(12, "engine-oracles", reports)
