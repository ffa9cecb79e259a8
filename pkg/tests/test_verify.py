import json
import math

import numpy as np
import pytest

from helisoliton.curve import build_generating_curve
from helisoliton.integrator import integrate_trajectory
from helisoliton.phase import ROTATOR, PerturbedLaw, SolitonParams
from helisoliton.verify import (
    CHECKS, CheckResult, ParameterGrid, convergence_study, run_invariant_suite, symmetry_check,
)


@pytest.fixture(scope="module")
def default_report():
    return run_invariant_suite()


def small_grid(**kw):
    base = dict(hs=(1.0,), tau0s=(0.0, 1.0), mu0s=(-1.0, 0.5), convergence=False)
    base.update(kw)
    return ParameterGrid(**base)


def test_default_grid_passes(default_report):
    failed = [c.to_dict() for c in default_report.checks if not c.passed]
    assert failed == []
    assert {c.name for c in default_report.checks} == set(CHECKS)


def test_report_json_is_deterministic(default_report):
    text = default_report.to_json()
    assert text == run_invariant_suite().to_json()
    doc = json.loads(text)
    assert "timings" not in doc
    assert doc["grid"]["hs"] == [0.5, 1.0, 2.0]
    assert len(doc["checks"]) == len(CHECKS)
    assert "timings" in json.loads(default_report.to_json(include_timings=True))


def test_parallel_matches_serial():
    grid = small_grid()
    assert run_invariant_suite(grid, workers=2).to_json() == run_invariant_suite(grid).to_json()


@pytest.mark.parametrize("kw", [{"hs": ()}, {"tau0s": ()}, {"mu0s": ()}, {"hs": (0.0,)}, {"span": (0, 5)}])
def test_grid_preconditions(kw):
    with pytest.raises(ValueError):
        ParameterGrid(**kw)


def test_h1_grid_has_closed_form_check():
    report = run_invariant_suite(small_grid())
    c = report.check("h1_closed_form")
    assert c.passed and c.worst_value <= 1e-12


def test_closed_form_check_absent_without_h1():
    report = run_invariant_suite(small_grid(hs=(2.0,)))
    with pytest.raises(KeyError):
        report.check("h1_closed_form")
    assert report.passed


def test_perturbed_law_fails_residual():
    report = run_invariant_suite(small_grid(), law=PerturbedLaw(ROTATOR, 1e-3))
    assert not report.passed
    assert not report.check("soliton_identity").passed
    assert not report.check("h1_closed_form").passed
    # both soliton targets are k-independent, so their agreement survives the fault
    assert report.check("rotator_translator_equality").passed


@pytest.mark.parametrize("init, h", [((0.0, 0.0, 0.0), 1.0), ((1.0, -1.0, 0.0), 2.0)])
def test_symmetry_check_examples(init, h):
    traj = integrate_trajectory(init, SolitonParams(h))
    res = symmetry_check(traj)
    assert res.passed
    assert res.tolerance == pytest.approx(10 * 1e-10)


def test_convergence_study():
    params = SolitonParams(1.0)
    curve = build_generating_curve(integrate_trajectory((0, 0, 0), params, tol=(1e-12, 1e-12)))
    res = convergence_study(curve, params, [1e-2, 5e-3, 2.5e-3])
    assert res.passed
    assert res.location["order"] == pytest.approx(2.0, abs=0.05)
    errs = res.location["errors"]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(ValueError):
        convergence_study(curve, params, [1e-2, 5e-3])
    with pytest.raises(ValueError):
        convergence_study(curve, params, [1e-2, 2e-2, 5e-3])


def test_check_result_serialisation():
    d = CheckResult("x", False, math.inf, 1.0).to_dict()
    assert d["worst_value"] is None
    json.dumps(d, allow_nan=False)
    assert CheckResult("y", True, 0.5, 1.0, {"s": 1.0}).to_dict()["location"] == {"s": 1.0}


def test_report_locations_name_grid_points(default_report):
    for c in default_report.checks:
        if c.location is not None:
            assert {"h", "tau0", "mu0"} <= set(c.location)
            assert all(not isinstance(v, float) or np.isfinite(v) for v in c.location.values())
