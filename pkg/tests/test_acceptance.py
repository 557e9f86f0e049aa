"""The acceptance gate: twelve criteria, one pass/fail line each.

Every criterion is evaluated at its stated tolerance by the shared
validation suite; this module only reports and asserts.  Run with
``pytest -v tests/test_acceptance.py`` to see one line per criterion.
"""

import pytest

from taucalc.validation import CRITERIA, SuiteData

CRITERION_NAMES = list(CRITERIA)


@pytest.fixture(scope="module")
def suite_data():
    return SuiteData()


@pytest.mark.parametrize("name", CRITERION_NAMES)
def test_criterion(name, suite_data):
    result = CRITERIA[name](suite_data)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} {name}")
    for check in result.checks:
        op = ">=" if check.at_least else "<"
        marker = "" if check.passed else "   <-- FAILED"
        print(f"    {check.name}: {check.value:.6e} "
              f"(needs {op} {check.threshold:g}){marker}")
    failed = [c.name for c in result.checks if not c.passed]
    assert result.passed, (
        f"criterion {name!r} failed checks: {', '.join(failed)}")
