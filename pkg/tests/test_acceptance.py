"""The ten acceptance criteria, one test each, at their stated tolerances."""

import pytest

from fbmh.acceptance import CRITERIA, run_criterion

RESULTS = []


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda k: f"c{k:02d}_{CRITERIA[k][0].replace(' ', '_')}")
def test_criterion(number):
    r = run_criterion(number)
    RESULTS.append(r)
    print(r.line())
    for d in r.details:
        print("      " + d)
    assert r.passed, "\n".join(r.details)
