"""Acceptance suite: every headline criterion at full scale, one test each.

Each test prints its pass/fail line (visible with `pytest -s` or on failure)
and asserts the criterion at its stated tolerance.  The same check functions
back the CLI `selfcheck` command.
"""

from todalab import acceptance


def _run(fn):
    result = fn(scale=1.0)
    print(result.line())
    assert result.passed, result.detail
    return result


def test_criterion_01_isospectrality():
    _run(acceptance.check_isospectrality)


def test_criterion_02_solver_equivalence():
    _run(acceptance.check_solver_equivalence)


def test_criterion_03_asymptotics():
    _run(acceptance.check_asymptotics)


def test_criterion_04_inverse_spectral_roundtrips():
    _run(acceptance.check_inverse_spectral)


def test_criterion_05_atlas():
    _run(acceptance.check_atlas)


def test_criterion_06_qr_interpolation():
    _run(acceptance.check_qr_interpolation)


def test_criterion_07_shift_dynamics():
    _run(acceptance.check_shift_dynamics)


def test_criterion_08_shifted_chart_formula():
    _run(acceptance.check_shifted_chart_formula)


def test_criterion_09_conserved_quantities():
    _run(acceptance.check_conserved_quantities)


def test_criterion_10_billiard():
    _run(acceptance.check_billiard)


def test_criterion_11_cli_determinism():
    _run(acceptance.check_cli_determinism)
