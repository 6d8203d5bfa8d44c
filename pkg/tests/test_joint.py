import numpy as np
import pytest
from numpy.testing import assert_allclose

from bench.config import ExperimentConfig
from bench.joint import JOINT_ITERATION_EVENT, initial_dictionaries, joint_optimize
from bench.patches import extract_patches, overcomplete_dct, synthetic_images, tile_image
from dictionary.coupling import TrainingSet
from dictionary.ctksvd import LearnConfig, learn
from sensing.design import DesignConfig, gaussian_sensing, normalize_sensing
from sensing.methods.approach1 import Approach1Sensing
from util.errors import InvalidArgument, StepSizeFailure
from util.event_stats import get_event_stats_snapshot


def _config(**kwargs):
    values = dict(kind='joint', n=(4, 4), nhat=(6, 6), m=(2, 2), image_size=16, joint_iters=3,
                  learn_params=LearnConfig(gamma=0.1, sparsity_k=2), design_params=DesignConfig(eta=1e-6))
    values.update(kwargs)
    return ExperimentConfig(**values)


@pytest.fixture()
def train():
    rng = np.random.default_rng(71)
    return extract_patches(synthetic_images(2, 16, rng), 4, 20, rng)


def test_initial_dictionaries():
    psis = initial_dictionaries(_config(learner='ctksvd'))
    vectorized = initial_dictionaries(_config(learner='cksvd'))

    assert [p.shape for p in psis] == [(4, 6), (4, 6)]
    assert_allclose(psis[0], overcomplete_dct(4, 6))
    assert [p.shape for p in vectorized] == [(16, 36)]


def test_no_learner_single_iteration(train):
    snapshot = get_event_stats_snapshot()

    result = joint_optimize(train, _config(design='approach1', learner='none'))

    assert result.iterations == 1
    assert JOINT_ITERATION_EVENT.count(snapshot) == 1
    assert result.are_trace == []
    assert not result.converged
    assert_allclose(result.psis[0], overcomplete_dct(4, 6))


def test_one_iteration_matches_direct_learning(train):
    cfg = _config(design='gaussian', learner='ctksvd', joint_iters=1)
    phis = [normalize_sensing(phi) for phi in gaussian_sensing((2, 2), (4, 4), np.random.default_rng(cfg.seed))]
    psis0 = [overcomplete_dct(4, 6), overcomplete_dct(4, 6)]

    result = joint_optimize(train, cfg)
    direct = learn(train, phis, psis0, LearnConfig(gamma=0.1, sparsity_k=2, outer_iters=1))

    assert result.iterations == 1
    for got, expected in zip(result.psis, direct.psis):
        assert_allclose(got, expected, atol=1e-10)
    assert result.are_trace == [pytest.approx(direct.are_trace[-1])]
    assert np.isnan(result.objective_trace[0])


@pytest.mark.parametrize("design,learner", [
    ('approach1', 'tksvd'),
    ('approach2', 'ctksvd'),
    ('separable-sapiro-stub', 'ctksvd'),
])
def test_traces(train, design, learner):
    result = joint_optimize(train, _config(design=design, learner=learner))

    assert 1 <= result.iterations <= 3
    assert len(result.psnr_trace) == len(result.mse_trace) == len(result.objective_trace) == result.iterations
    assert len(result.are_trace) == result.iterations
    assert all(np.isfinite(result.mse_trace))
    for psi in result.psis:
        assert_allclose(np.linalg.norm(psi, axis=0), 1)


def test_vectorized_learner(train):
    result = joint_optimize(train, _config(design='approach1', learner='cksvd', joint_iters=2))

    assert [p.shape for p in result.psis] == [(16, 36)]
    assert [p.shape for p in result.phis] == [(4, 16)]
    assert len(result.are_trace) == result.iterations


def test_converges_on_tolerance(train):
    result = joint_optimize(train, _config(design='approach1', learner='tksvd', joint_iters=10, psnr_tol_db=1e9))

    assert result.iterations == 2
    assert result.converged


def test_test_patches_used_for_proxy(train):
    rng = np.random.default_rng(72)
    test = tile_image(synthetic_images(1, 16, rng)[0], 4)
    cfg = _config(design='approach1', learner='none')

    on_train = joint_optimize(train, cfg)
    on_test = joint_optimize(train, cfg, test)

    assert on_train.psnr_trace != on_test.psnr_trace


def test_shape_mismatch(train):
    with pytest.raises(InvalidArgument):
        joint_optimize(TrainingSet(np.zeros((5, 5, 3))), _config(learner='none'))
    with pytest.raises(InvalidArgument):
        joint_optimize(train, _config(learner='none'), np.zeros((5, 5, 2)))


def test_diverged_design_continues(mocker, train):
    last = [np.ones((2, 4)), 2 * np.ones((2, 4))]
    mocker.patch('sensing.methods.approach2.Approach2Sensing.design',
                 side_effect=StepSizeFailure("diverged", last_phis=last, objective_trace=[1.0]))

    result = joint_optimize(train, _config(design='approach2', learner='tksvd', joint_iters=2, psnr_tol_db=0.0))

    assert result.iterations == 2
    assert all(np.isnan(result.objective_trace))
    for got, phi in zip(result.phis, last):
        assert_allclose(got, normalize_sensing(phi))


def test_designs_continue_from_previous_phis(mocker, train):
    design = mocker.spy(Approach1Sensing, 'design')

    joint_optimize(train, _config(design='approach1', learner='tksvd', joint_iters=2, psnr_tol_db=0.0))

    assert design.call_count == 2
    assert all(call.args[3].init == 'given' for call in design.call_args_list)
