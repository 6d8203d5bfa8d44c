"""
Joint optimization of sensing matrices and dictionaries on image patches.

Every joint iteration designs the sensing matrices for the current dictionaries and then runs one outer iteration of
the configured learner with those sensing matrices fixed. The loop stops when the PSNR of the proxy set (test patches
if given, otherwise the training patches) changes by less than psnr_tol_db, or after joint_iters iterations.
"""

import dataclasses
from collections import namedtuple
from typing import List, Optional

import numpy as np

from dictionary.cksvd import learn_cksvd
from dictionary.coupling import TrainingSet
from dictionary.ctksvd import learn
from metrics.quality import mse, psnr
from sensing.design import gaussian_sensing, normalize_sensing
from sensing.sensing_method_list import get_sensing_method
from tensor.ops import kron_factors
from util.detail import LOGGER
from util.errors import StepSizeFailure, require
from util.event_stats import Event
from .config import ExperimentConfig
from .patches import overcomplete_dct, reconstruct_patches

JOINT_ITERATION_EVENT = Event('joint_iteration')

JointResult = namedtuple('JointResult', (
    'phis',
    'psis',
    'psnr_trace',  # Proxy PSNR after every joint iteration
    'mse_trace',
    'objective_trace',  # Last design objective of every joint iteration, nan when the design has none
    'are_trace',  # Learner ARE of every joint iteration, empty for learner none
    'iterations',
    'converged',
))


def initial_dictionaries(cfg: ExperimentConfig) -> List[np.ndarray]:
    psis = [overcomplete_dct(n, nhat) for n, nhat in zip(cfg.n, cfg.nhat)]
    if cfg.learner == 'cksvd':
        return [kron_factors(psis)]
    return psis


def _vectorize(stack: np.ndarray) -> np.ndarray:
    return np.reshape(stack, (-1, stack.shape[-1]), order='F')


class _ProxySet:
    """Patches on which the per-iteration PSNR is measured, vectorized when the learner is."""

    def __init__(self, stack: np.ndarray, cfg: ExperimentConfig):
        self.stack = stack
        self.vectorized = cfg.learner == 'cksvd'
        self.k = cfg.learn_params.sparsity_k
        self.noise_var = cfg.noise_var
        self.seed = cfg.seed

    def evaluate(self, phis, psis):
        signals = _vectorize(self.stack) if self.vectorized else self.stack
        # Same noise draw every iteration so that only the matrices change between evaluations
        rng = np.random.default_rng(self.seed)
        recon = reconstruct_patches(signals, phis, psis, self.k, self.noise_var, rng)
        recon = np.reshape(recon, self.stack.shape, order='F')
        return psnr(self.stack, recon), mse(self.stack, recon)


def _learn_once(train: TrainingSet, phis, psis, cfg: ExperimentConfig):
    params = dataclasses.replace(cfg.learn_params, outer_iters=1)
    if cfg.learner == 'cksvd':
        result = learn_cksvd(train.vectorized(), phis[0], psis[0], params)
    else:
        result = learn(train, phis, psis, dataclasses.replace(params, coupled=cfg.learner == 'ctksvd'))
    return result.psis, result.are_trace[-1]


def _design(method, psis, phis, params, iteration: int):
    """Returns the designed phis and the last design objective. A diverged design falls back to its last iterate."""
    try:
        design = method.design(psis, phis, params)
    except StepSizeFailure as e:
        LOGGER.warning(f"Joint iteration {iteration}: {e}, continuing from the last accepted sensing matrices")
        return [normalize_sensing(phi) for phi in e.last_phis], float('nan')
    return design.phis, design.objective_trace[-1] if design.objective_trace else float('nan')


def joint_optimize(train: TrainingSet, cfg: ExperimentConfig, test: Optional[np.ndarray] = None) -> JointResult:
    """
    :param train: Training patches, shape (N_1, N_2, T)
    :param cfg: Sizes, design method, learner and their parameters
    :param test: Optional test patch stack used for the PSNR proxy
    """
    require(train.signal_shape == cfg.n, f"Training patches {train.signal_shape} do not match n={cfg.n}")
    if test is not None:
        require(test.shape[:-1] == cfg.n, f"Test patches {test.shape[:-1]} do not match n={cfg.n}")

    method = get_sensing_method(cfg.design)
    rng = np.random.default_rng(cfg.seed)
    psis = initial_dictionaries(cfg)
    if cfg.learner == 'cksvd':
        phis = gaussian_sensing([int(np.prod(cfg.m))], [int(np.prod(cfg.n))], rng)
    else:
        phis = gaussian_sensing(cfg.m, cfg.n, rng)

    proxy = _ProxySet(train.signals if test is None else test, cfg)
    psnr_trace, mse_trace, objective_trace, are_trace = [], [], [], []
    converged = False
    iterations = cfg.joint_iters if cfg.learner != 'none' else 1

    # Each design continues from the previous sensing matrices
    design_params = dataclasses.replace(cfg.design_params, init='given')

    for iteration in range(1, iterations + 1):
        phis, objective = _design(method, psis, phis, design_params, iteration)
        objective_trace.append(objective)

        if cfg.learner != 'none':
            psis, final_are = _learn_once(train, phis, psis, cfg)
            are_trace.append(final_are)

        value, error = proxy.evaluate(phis, psis)
        psnr_trace.append(value)
        mse_trace.append(error)
        JOINT_ITERATION_EVENT.increment()
        LOGGER.debug(f"Joint iteration {iteration}: PSNR {value} dB, design objective {objective_trace[-1]}")

        if len(psnr_trace) >= 2 and abs(psnr_trace[-1] - psnr_trace[-2]) < cfg.psnr_tol_db:
            converged = True
            break

    LOGGER.info(f"Joint optimization ({cfg.design} + {cfg.learner}) stopped after {len(psnr_trace)} iterations "
                f"at {psnr_trace[-1]} dB")
    return JointResult(phis, psis, psnr_trace, mse_trace, objective_trace, are_trace, len(psnr_trace), converged)
