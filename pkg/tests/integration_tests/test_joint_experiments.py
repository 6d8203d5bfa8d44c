import dataclasses

import numpy as np
import pytest

from bench.config import ExperimentConfig
from bench.joint import joint_optimize
from bench.trials import patch_sets
from dictionary.ctksvd import LearnConfig
from sensing.design import DesignConfig
from .integration_utils import no_logged_errors, paired_means, trial_count


@pytest.fixture()
def base():
    return ExperimentConfig(kind='joint', n=(8, 8), nhat=(16, 16), m=(6, 6), sparsity_k=4, learner='ctksvd',
                            design_params=DesignConfig(alpha=3.0, beta=0.8, eta=1e-5),
                            learn_params=LearnConfig(gamma=1 / 8, sparsity_k=4),
                            joint_iters=20, synthetic_images=12, image_size=64, patches_per_image=50, seed=17)


def test_psnr_trace_settles(no_logged_errors, base):
    cfg = dataclasses.replace(base, design='approach1')
    train, test = patch_sets(cfg, np.random.default_rng(cfg.seed))

    result = joint_optimize(train, cfg, test)

    assert result.iterations <= 20
    assert all(b >= a - 0.2 for a, b in zip(result.psnr_trace, result.psnr_trace[1:]))


def test_design_ordering(no_logged_errors, base):
    designs = ('approach2', 'approach1', 'gaussian')
    groups = [[dataclasses.replace(base, design=design, trials=trial_count(20, 3))] for design in designs]

    (approach2,), (approach1,), (gaussian,) = paired_means(groups, 'psnr')

    assert approach2 >= approach1 >= gaussian
    assert approach2 - gaussian >= 2.0


def test_separable_design_keeps_improving(no_logged_errors, base):
    cfg = dataclasses.replace(base, design='approach1', psnr_tol_db=0.0, joint_iters=6)
    train, test = patch_sets(cfg, np.random.default_rng(cfg.seed))

    result = joint_optimize(train, cfg, test)

    assert result.iterations == 6
    assert result.psnr_trace[-1] >= result.psnr_trace[0] - 0.2
    assert min(result.psnr_trace) > 20.0


def test_large_initial_step_completes(no_logged_errors, base):
    cfg = dataclasses.replace(base, design='approach2', joint_iters=5)
    train, test = patch_sets(cfg, np.random.default_rng(cfg.seed))

    result = joint_optimize(train, cfg, test)

    assert all(np.isfinite(result.objective_trace))
    assert all(np.isfinite(result.psnr_trace))
