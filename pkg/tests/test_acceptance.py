"""The twelve acceptance checks at full size.

Each test prints one PASS/FAIL line (visible with `pytest -s`, and in the
captured output of failures) and asserts the check passed.
"""

import pytest

from kohnmult import verify
from kohnmult.reporting import dumps


@pytest.mark.parametrize("k", sorted(verify.CRITERIA), ids=lambda k: f"{k:02d}-{verify.TITLES[k].replace(' ', '_')}")
def test_acceptance(k, capsys):
    r = verify.run_criterion(k, seed=0, quick=False)
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, dumps(r.as_dict())
