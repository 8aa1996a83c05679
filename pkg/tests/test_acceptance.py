"""Acceptance criteria 1-12, each at its stated tolerance.

Every criterion prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated
in the terminal summary.  Criteria 4, 5, 6 and 10 share one cache of exact
runs, so the module takes several minutes.
"""

import pytest

from dicke_squeeze.verification import RunCache, run_checks

RESULTS = []


@pytest.fixture(scope="module")
def cache():
    return RunCache()


@pytest.mark.parametrize("number", range(1, 13))
def test_criterion(number, cache):
    (result,) = run_checks([number], cache=cache)
    RESULTS.append(result)
    print(result.line())
    assert result.passed, result.line()
