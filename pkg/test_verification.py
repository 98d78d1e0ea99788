import pytest

from lambda_emission.errors import ConfigError, VerificationError
from lambda_emission.verification import VerificationSuite


@pytest.fixture
def suite():
    return VerificationSuite()


def test_tiers(suite):
    quick = [name for name, _ in suite.checks("quick")]
    full = [name for name, _ in suite.checks("full")]
    assert full[:len(quick)] == quick
    assert "full_bath_decay" in full and "full_bath_decay" not in quick
    with pytest.raises(ConfigError):
        suite.checks("thorough")


def test_failure_is_named(suite, monkeypatch):
    monkeypatch.setattr(suite, "quick_checks", [
        ("always_fine", lambda: (0.0, 1.0, "ok")),
        ("always_broken", lambda: (2.0, 1.0, "too large")),
        ("never_reached", lambda: (0.0, 1.0, "ok")),
    ])
    with pytest.raises(VerificationError) as info:
        suite.run("quick")
    assert info.value.check == "always_broken"

    results = suite.run("quick", stop_on_failure=False)
    assert [r.passed for r in results] == [True, False, True]
    assert results[1].to_dict()["detail"] == "too large"


def test_closed_form_checks_pass(suite):
    for check in (suite.check_dressed_unitarity, suite.check_coupling_round_trip, suite.check_classical_dip,
                  suite.check_reflection, suite.check_separated_additivity):
        value, tolerance, _ = check()
        assert value <= tolerance


def test_small_drive_phase_checks_pass(suite):
    for check in (suite.check_phase_sum, suite.check_coupling_phase):
        value, tolerance, _ = check()
        assert value <= tolerance
