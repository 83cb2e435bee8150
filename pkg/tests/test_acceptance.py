"""Acceptance gate: one test per headline check, full-size by default.

The whole battery runs once per session (about 15 minutes single-threaded
at the default sizes) and each test prints its check's verdict line.  Set
``QTRAJ_ACCEPTANCE_QUICK=1`` to run the tenfold-smaller smoke variant, and
``QTRAJ_THREADS`` to parallelize the ensembles.
"""

import os

import pytest

from qtraj import verify

QUICK = os.environ.get("QTRAJ_ACCEPTANCE_QUICK", "") not in ("", "0")


@pytest.fixture(scope="module")
def verdicts():
    results = verify.run_all(quick=QUICK)
    return {r.criterion: r for r in results}


def _assert_passed(res):
    print(res.line())
    for detail in res.details:
        print(f"  - {detail}")
    assert res.passed, res.line() + "".join(f"\n  - {d}" for d in res.details)


def test_criterion_01_born_frequencies(verdicts):
    _assert_passed(verdicts[1])


def test_criterion_02_noiseless_step_function(verdicts):
    _assert_passed(verdicts[2])


def test_criterion_03_strong_noise_flattening(verdicts):
    _assert_passed(verdicts[3])


def test_criterion_04_conditioned_peak_statistics(verdicts):
    _assert_passed(verdicts[4])


def test_criterion_05_collapse_milestones(verdicts):
    _assert_passed(verdicts[5])


def test_criterion_06_ensemble_decoherence(verdicts):
    _assert_passed(verdicts[6])


def test_criterion_07_channel_forms_agree(verdicts):
    _assert_passed(verdicts[7])


def test_criterion_08_jump_two_point_split(verdicts):
    _assert_passed(verdicts[8])


def test_criterion_09_fluctuation_dissipation(verdicts):
    _assert_passed(verdicts[9])


def test_criterion_10_trajectory_integrity(verdicts):
    _assert_passed(verdicts[10])


def test_criterion_11_multilevel_frequencies(verdicts):
    _assert_passed(verdicts[11])
