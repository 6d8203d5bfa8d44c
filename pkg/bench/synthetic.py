"""Synthetic sparse-tensor data: random dictionaries, K-sparse codes, Gaussian sensing and noise."""

from collections import namedtuple
from typing import List, Optional, Sequence

import numpy as np

from dictionary.coupling import TrainingSet
from dictionary.ctksvd import normalize_columns
from sensing.design import gaussian_sensing
from tensor.ops import multi_mode_product
from util.errors import InvalidArgument
from .config import ExperimentConfig

TestSet = namedtuple('TestSet', ('signals', 'measurements', 'codes'))

SyntheticData = namedtuple('SyntheticData', (
    'train',  # TrainingSet with every measurement stack, None when train_count is 0
    'test',
    'psis',  # Ground-truth dictionaries
    'phis',  # Normalized Gaussian sensing matrices
    'train_codes',
))


def random_dictionaries(ns: Sequence[int], nhats: Sequence[int], rng: np.random.Generator) -> List[np.ndarray]:
    return [normalize_columns(rng.standard_normal((n, nhat))) for n, nhat in zip(ns, nhats)]


def sparse_codes(shape: Sequence[int], k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of count tensors, each with exactly k Gaussian non-zeros at uniformly random positions."""
    atoms = int(np.prod(shape))
    if k > atoms:
        raise InvalidArgument(f"Sparsity {k} exceeds the {atoms} available atoms")
    codes = np.zeros((atoms, count))
    for t in range(count):
        codes[rng.choice(atoms, size=k, replace=False), t] = rng.standard_normal(k)
    return np.reshape(codes, tuple(shape) + (count,), order='F')


def measure(signals, phis: Sequence[np.ndarray], noise_var: float, rng: np.random.Generator) -> np.ndarray:
    y = multi_mode_product(signals, phis)
    if noise_var > 0:
        y = y + np.sqrt(noise_var) * rng.standard_normal(y.shape)
    return y


def gen_synthetic(cfg: ExperimentConfig, seed: Optional[int] = None) -> SyntheticData:
    """
    :param cfg: Sizes, sparsity, counts and noise variance
    :param seed: Defaults to cfg.seed
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    if cfg.sparsity_k > int(np.prod(cfg.nhat)):
        raise InvalidArgument(f"Sparsity {cfg.sparsity_k} exceeds the {int(np.prod(cfg.nhat))} available atoms")

    psis = random_dictionaries(cfg.n, cfg.nhat, rng)
    phis = gaussian_sensing(cfg.m, cfg.n, rng)

    train = None
    train_codes = None
    if cfg.train_count:
        train_codes = sparse_codes(cfg.nhat, cfg.sparsity_k, cfg.train_count, rng)
        train = TrainingSet(multi_mode_product(train_codes, psis)).with_measurements(phis, cfg.noise_var, rng)

    test_codes = sparse_codes(cfg.nhat, cfg.sparsity_k, cfg.test_count, rng)
    test_signals = multi_mode_product(test_codes, psis)
    test = TestSet(test_signals, measure(test_signals, phis, cfg.noise_var, rng), test_codes)

    return SyntheticData(train, test, psis, phis, train_codes)
