import numpy as np
import pytest
from numpy.testing import assert_allclose

from dictionary.cksvd import CKSVD_ITERATION_EVENT, learn_cksvd
from dictionary.ctksvd import LearnConfig, normalize_columns
from util.errors import InvalidArgument
from util.event_stats import get_event_stats_snapshot


@pytest.fixture()
def problem():
    rng = np.random.default_rng(43)
    psi = normalize_columns(rng.standard_normal((12, 20)))
    codes = np.zeros((20, 150))
    for t in range(150):
        codes[rng.choice(20, 2, replace=False), t] = rng.standard_normal(2)
    phi = rng.standard_normal((6, 12))
    psi0 = normalize_columns(rng.standard_normal((12, 20)))
    return psi @ codes, phi, psi0


def test_error_decreases(problem):
    x, phi, psi0 = problem
    snapshot = get_event_stats_snapshot()

    result = learn_cksvd(x, phi, psi0, LearnConfig(gamma=0.1, sparsity_k=2, outer_iters=8))

    assert CKSVD_ITERATION_EVENT.count(snapshot) == 8
    assert result.are_trace[-1] < result.are_trace[0]
    assert_allclose(np.linalg.norm(result.psis[0], axis=0), 1)
    assert_allclose(result.ds[0], np.vstack([0.1 * result.psis[0], phi @ result.psis[0]]), atol=1e-10)
    assert result.codes.shape == (20, 150)


def test_explicit_measurements(problem):
    x, phi, psi0 = problem
    cfg = LearnConfig(gamma=0.1, sparsity_k=2, outer_iters=2)

    generated = learn_cksvd(x, phi, psi0, cfg)
    given = learn_cksvd(x, phi, psi0, cfg, y=phi @ x)

    assert_allclose(generated.psis[0], given.psis[0])


def test_noisy_measurements_seeded(problem):
    x, phi, psi0 = problem
    cfg = LearnConfig(gamma=0.1, sparsity_k=2, outer_iters=1, noise_var=0.01, seed=3)

    first = learn_cksvd(x, phi, psi0, cfg)
    second = learn_cksvd(x, phi, psi0, cfg)

    assert_allclose(first.psis[0], second.psis[0])


def test_measurement_shape(problem):
    x, phi, psi0 = problem

    with pytest.raises(InvalidArgument):
        learn_cksvd(x, phi, psi0, LearnConfig(sparsity_k=2), y=np.zeros((5, 150)))


def test_incompatible_phi(problem):
    x, _, psi0 = problem

    with pytest.raises(InvalidArgument):
        learn_cksvd(x, np.zeros((3, 10)), psi0, LearnConfig(sparsity_k=2))
