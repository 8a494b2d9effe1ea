# test_verification.py
#
# The `verify` self-checks:
# - every quick-level group passes on the real implementation
# - a broken weight function is caught by its group
# - group selection and reproducible seeding
#
# Run:
#   pytest services/experiments/tests/test_verification.py -q

from __future__ import annotations

import pytest

from services.experiments import verification
from services.experiments.verification import GROUPS, LEVELS, QUICK, run_verification
from services.projection import weights


@pytest.mark.parametrize("group", sorted(GROUPS))
def test_quick_group_passes(group):
    (result,) = run_verification("quick", groups=[group])
    assert result.name == group
    assert result.passed, f"{group} failed: {result.detail}"
    assert result.elapsed_s >= 0.0


def test_groups_run_in_requested_order():
    results = run_verification("quick", groups=["weight-mass", "clip-oracle"])
    assert [r.name for r in results] == ["weight-mass", "clip-oracle"]


def test_unknown_group_is_rejected():
    with pytest.raises(ValueError, match="no-such-group"):
        run_verification("quick", groups=["clip-oracle", "no-such-group"])


def test_levels():
    assert set(LEVELS) == {"quick", "full"}
    assert LEVELS["full"].clip_cases == 10_000
    assert QUICK.clip_cases < LEVELS["full"].clip_cases
    assert LEVELS["full"].full_dense_grid and not QUICK.full_dense_grid


def test_faulty_closed_form_is_caught(monkeypatch):
    real = weights.intersection_length_closed_form

    def off_by_a_bit(phi, s, center, delta_x):
        return real(phi, s, center, delta_x) * (1.0 + 1e-9)

    monkeypatch.setattr(weights, "intersection_length_closed_form", off_by_a_bit)
    (result,) = run_verification("quick", groups=["clip-oracle"])
    assert not result.passed
    assert "closed" in result.detail


def test_faulty_weight_values_are_caught(monkeypatch):
    real = weights.weight_values

    def doubled(kind, ts, phi, delta_x, delta_s):
        return 2.0 * real(kind, ts, phi, delta_x, delta_s)

    monkeypatch.setattr(weights, "weight_values", doubled)
    (result,) = run_verification("quick", groups=["exact-pixel-sum"])
    assert not result.passed


def test_exact_pixel_sum_reports_both_projection_mass_spreads():
    (result,) = run_verification("quick", groups=["exact-pixel-sum"])
    assert result.passed
    assert "projection mass spread" in result.detail
    assert "ray-driven" in result.detail


def test_brute_force_group_demands_bitwise_equality():
    (result,) = run_verification("quick", groups=["brute-force-equivalence"])
    assert result.passed
    assert result.detail.endswith("bitwise equal")


def test_same_seed_gives_same_detail():
    a = run_verification("quick", groups=["clip-oracle"], seed=7)
    b = run_verification("quick", groups=["clip-oracle"], seed=7)
    assert a[0].detail == b[0].detail


def test_check_failure_is_an_assertion():
    assert issubclass(verification.CheckFailure, AssertionError)
