"""Acceptance criteria at their stated replication counts and tolerances.

Each criterion prints one PASS/FAIL line (visible with ``pytest -v`` or
``-s``); the same checks back ``llr-lab validate``.
"""

import pytest

from llr_lab import validation
from llr_lab.rng import SeedSpec

SETTINGS = validation.Settings(SeedSpec(validation.DEFAULT_SEED))


@pytest.mark.parametrize("number", sorted(validation.CHECKS),
                         ids=[f"{n:02d}-{name.replace(' ', '-')}"
                              for n, (name, _) in sorted(validation.CHECKS.items())])
def test_criterion(number, capsys):
    result = validation.run_check(number, SETTINGS)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
