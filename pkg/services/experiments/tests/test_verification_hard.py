# test_verification_hard.py
#
# The full `verify` level:
# - 10^4 clipping cases, every grid with n_x, n_s <= 16 against the dense pair
# - 1000 random configurations for the weight-sum bounds
#
# Slow (several seconds plus kernel compilation); run with:
#   pytest services/experiments/tests/test_verification_hard.py -q --runslow

from __future__ import annotations

import pytest

from services.experiments.verification import GROUPS, run_verification

pytestmark = pytest.mark.slow


def test_full_level_passes_every_group():
    results = run_verification("full")
    assert [r.name for r in results] == list(GROUPS)
    failed = {r.name: r.detail for r in results if not r.passed}
    assert not failed, failed
