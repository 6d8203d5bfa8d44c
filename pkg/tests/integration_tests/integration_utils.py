import logging
import os
from typing import Sequence

import pytest

from bench.config import ExperimentConfig
from bench.sweep import run_sweep

FULL_ACCEPTANCE_VAR = 'TENSORCS_FULL_ACCEPTANCE'


def full_acceptance() -> bool:
    return os.environ.get(FULL_ACCEPTANCE_VAR, '') == '1'


def trial_count(full: int, reduced: int) -> int:
    """
    Repeat count for an experiment reproduction. Reduced counts keep the default test run short, the full counts
    are used when TENSORCS_FULL_ACCEPTANCE=1.
    """
    return full if full_acceptance() else reduced


@pytest.fixture(scope="function")
def no_logged_errors(caplog):
    """
    Fails the test if anything was logged at ERROR level. Trials inside a sweep catch their own exceptions, so a
    failed trial otherwise only shows up as a log record and an error column.
    """
    yield caplog

    # ----- Following code is run on cleanup -----

    for when in ("setup", "call"):
        messages = [x.message for x in caplog.get_records(when) if x.levelno == logging.ERROR]
        if messages:
            pytest.fail(f"Errors reported in logs: {messages}")


def sweep_means(points: Sequence[ExperimentConfig], key: str = 'mse'):
    """Runs a sweep and returns the per-point mean of key, failing on any failed trial."""
    result = run_sweep(points)
    means = []
    for row in result.aggregates:
        assert row['error'] == '', row['error']
        means.append(float(row[key]))
    return means


def paired_means(groups: Sequence[Sequence[ExperimentConfig]], key: str = 'mse'):
    """
    Runs one sweep per group. Trial seeds depend on the point index, so the i-th point of every group sees the same
    random data and the groups compare on common draws.
    """
    return [sweep_means(group, key) for group in groups]
