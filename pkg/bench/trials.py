"""One Monte-Carlo trial per experiment kind, each returning a flat dict of metrics."""

import dataclasses
from typing import Any, Dict, List, Tuple

import numpy as np

from dictionary.cksvd import learn_cksvd
from dictionary.coupling import TrainingSet
from dictionary.ctksvd import learn
from metrics.quality import mse
from recovery.fista import fista_bpdn
from recovery.omp import sparse_code_stack
from recovery.operator import KronOperator
from sensing.sensing_method_list import get_sensing_method
from tensor.ops import kron_factors, multi_mode_product
from .config import ExperimentConfig
from .joint import joint_optimize
from .patches import extract_patches, load_images, synthetic_images, tile_image
from .synthetic import gen_synthetic, measure, random_dictionaries

Metrics = Dict[str, Any]


def recover(cfg: ExperimentConfig, equivalent: List[np.ndarray], y: np.ndarray, k: int) -> np.ndarray:
    """Codes for every slice of y against the equivalent matrices A_i, shape in_shape + (T,)."""
    op = KronOperator(equivalent)
    if cfg.recovery == 'omp':
        return sparse_code_stack(op, y, k).codes
    slices = [fista_bpdn(op, y[..., t], cfg.bp_lambda, cfg.bp_iters).to_dense() for t in range(y.shape[-1])]
    return np.stack(slices, axis=-1)


def _metrics(error: float, **extra) -> Metrics:
    metrics = {'mse': error, 'psnr': None, 'are': None, 'objective': None, 'iterations': None,
               'objective_trace': [], 'are_trace': [], 'psnr_trace': []}
    metrics.update(extra)
    return metrics


def sensing_trial(cfg: ExperimentConfig, seed: int) -> Metrics:
    """Design Phi_i for random dictionaries and recover K-sparse test signals."""
    data = gen_synthetic(dataclasses.replace(cfg, train_count=0), seed)
    rng = np.random.default_rng([seed, 1])
    design = get_sensing_method(cfg.design).design(data.psis, data.phis, cfg.design_params)

    y = measure(data.test.signals, design.phis, cfg.noise_var, rng)
    equivalent = [phi @ psi for phi, psi in zip(design.phis, data.psis)]
    codes = recover(cfg, equivalent, y, cfg.sparsity_k)
    recon = multi_mode_product(codes, data.psis)

    trace = list(design.objective_trace)
    return _metrics(mse(data.test.signals, recon),
                    objective=trace[-1] if trace else None,
                    iterations=design.iterations_used,
                    objective_trace=trace)


def dictionary_trial(cfg: ExperimentConfig, seed: int) -> Metrics:
    """Learn dictionaries from synthetic training data and recover the test signals through them."""
    data = gen_synthetic(cfg, seed)
    rng = np.random.default_rng([seed, 1])
    psis0 = random_dictionaries(cfg.n, cfg.nhat, rng)
    phis = get_sensing_method(cfg.design).design(psis0, data.phis, cfg.design_params).phis

    train = TrainingSet(data.train.signals).with_measurements(phis, cfg.noise_var, rng)
    learn_cfg = dataclasses.replace(cfg.learn_params, sparsity_k=cfg.sparsity_k)

    if cfg.learner == 'cksvd':
        phis = [kron_factors(phis)]
        result = learn_cksvd(train.vectorized(), phis[0], kron_factors(psis0), learn_cfg,
                             y=train.vectorized_measurements())
        psis = result.psis
        signals = np.reshape(data.test.signals, (-1, cfg.test_count), order='F')
    else:
        if cfg.learner == 'none':
            psis, result = psis0, None
        else:
            result = learn(train, phis, psis0, dataclasses.replace(learn_cfg, coupled=cfg.learner == 'ctksvd'))
            psis = result.psis
        signals = data.test.signals

    y = measure(signals, phis, cfg.noise_var, rng)
    codes = recover(cfg, [phi @ psi for phi, psi in zip(phis, psis)], y, cfg.sparsity_k)
    recon = multi_mode_product(codes, psis)

    if result is None:
        return _metrics(mse(signals, recon))
    return _metrics(mse(signals, recon),
                    are=result.are_trace[-1],
                    iterations=len(result.are_trace),
                    are_trace=list(result.are_trace))


def patch_sets(cfg: ExperimentConfig, rng: np.random.Generator) -> Tuple[TrainingSet, np.ndarray]:
    """
    Training patches from all but the last quarter of the images, test tiles from that held-out quarter. A single
    image serves both sides.
    """
    if cfg.images:
        images = load_images(cfg.images)
    else:
        images = synthetic_images(cfg.synthetic_images, cfg.image_size, rng)

    held_out = max(1, len(images) // 4) if len(images) > 1 else 0
    train_images = images[:len(images) - held_out]
    test_images = images[len(images) - held_out:] or images

    patch = cfg.n[0]
    train = extract_patches(train_images, patch, cfg.patches_per_image, rng)
    return train, np.concatenate([tile_image(image, patch) for image in test_images], axis=-1)


def joint_trial(cfg: ExperimentConfig, seed: int) -> Metrics:
    """Joint optimization on training patches, PSNR on the non-overlapping tiles of held-out images."""
    train, test = patch_sets(cfg, np.random.default_rng(seed))
    result = joint_optimize(train, dataclasses.replace(cfg, seed=seed), test)
    return _metrics(result.mse_trace[-1],
                    psnr=result.psnr_trace[-1],
                    are=result.are_trace[-1] if result.are_trace else None,
                    objective=result.objective_trace[-1],
                    iterations=result.iterations,
                    objective_trace=list(result.objective_trace),
                    are_trace=list(result.are_trace),
                    psnr_trace=list(result.psnr_trace))


TRIALS = {
    'sensing': sensing_trial,
    'dictionary': dictionary_trial,
    'joint': joint_trial,
}


def run_trial(cfg: ExperimentConfig, seed: int) -> Metrics:
    return TRIALS[cfg.kind](cfg, seed)
