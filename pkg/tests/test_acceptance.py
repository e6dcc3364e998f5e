"""One test per acceptance criterion; each prints its PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines, or use
``introimmune accept``.
"""

import pytest

from introimmune.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.key)
def test_criterion(criterion):
    outcome = run_criterion(criterion)
    print(outcome.line())
    assert outcome.passed, outcome.line()


@pytest.mark.parametrize("key", ["spacing-containment", "viable-counting", "q-state-machine"])
def test_injected_fault_is_caught(key):
    criterion = next(c for c in CRITERIA if c.key == key)
    outcome = run_criterion(criterion, fault=True)
    print(outcome.line())
    assert not outcome.passed
