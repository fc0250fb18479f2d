"""Acceptance gate: every criterion from the battery must pass at its stated
tolerance. One pass/fail line is printed per criterion.

Set SKETCHLAB_FAST_ACCEPTANCE=1 to run the reduced-size smoke variant during
development; the default is the full battery.
"""

import os

import pytest

from sketchlab import acceptance

FAST = os.environ.get("SKETCHLAB_FAST_ACCEPTANCE", "0") == "1"

_RESULTS = {}


def _run(criterion_id):
    if criterion_id not in _RESULTS:
        fn = acceptance.ALL_CRITERIA[criterion_id - 1]
        rec = fn(fast=FAST)
        status = "PASS" if rec["ok"] else "FAIL"
        print(f"[{status}] criterion {rec['id']:2d}: {rec['name']} "
              f"({rec['elapsed_s']}s)")
        _RESULTS[criterion_id] = rec
    return _RESULTS[criterion_id]


@pytest.mark.parametrize("cid", range(1, 15))
def test_acceptance_criterion(cid):
    rec = _run(cid)
    assert rec["ok"], f"criterion {cid} failed: {rec['detail']}"
