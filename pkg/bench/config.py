"""
Experiment configuration loaded from TOML or JSON.

Top-level keys are ExperimentConfig fields, [design_params] and [learn_params] hold DesignConfig and LearnConfig
fields, and [grid] maps field names (dotted for nested ones, e.g. "design_params.beta") to lists of values that are
expanded into a cartesian product for sweeps.
"""

import dataclasses
import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import toml

from dictionary.ctksvd import LearnConfig
from sensing.design import DesignConfig
from sensing.sensing_method_list import get_sensing_method
from util.errors import InvalidArgument, require

KINDS = ('sensing', 'dictionary', 'joint')
LEARNERS = ('none', 'tksvd', 'ctksvd', 'cksvd')
RECOVERIES = ('omp', 'bp')

_NESTED = {
    'design_params': DesignConfig,
    'learn_params': LearnConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = 'sensing'
    n: Tuple[int, ...] = (32, 32)
    nhat: Tuple[int, ...] = (64, 64)
    m: Tuple[int, ...] = (20, 20)
    sparsity_k: int = 20
    trials: int = 1
    noise_var: float = 0.0
    train_count: int = 0
    test_count: int = 1
    design: str = 'gaussian'
    learner: str = 'none'
    recovery: str = 'omp'
    bp_lambda: float = 1e-3
    bp_iters: int = 500
    design_params: DesignConfig = field(default_factory=DesignConfig)
    learn_params: LearnConfig = field(default_factory=LearnConfig)
    joint_iters: int = 20
    psnr_tol_db: float = 0.01
    images: Optional[str] = None  # Directory or file of PGM images, synthetic images when None
    synthetic_images: int = 8
    image_size: int = 64
    patches_per_image: int = 25
    out: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        for name in ('n', 'nhat', 'm'):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))

        require(self.kind in KINDS, f"kind must be one of {KINDS}, got {self.kind!r}")
        require(self.learner in LEARNERS, f"learner must be one of {LEARNERS}, got {self.learner!r}")
        require(self.recovery in RECOVERIES, f"recovery must be one of {RECOVERIES}, got {self.recovery!r}")
        get_sensing_method(self.design)

        require(len(self.n) >= 1 and len(self.n) == len(self.nhat) == len(self.m),
                f"n, nhat and m need one entry per mode, got {self.n}, {self.nhat}, {self.m}")
        for i, (n, nhat, m) in enumerate(zip(self.n, self.nhat, self.m), start=1):
            require(0 < m <= n <= nhat, f"Mode {i}: need 0 < M <= N <= N^, got M={m}, N={n}, N^={nhat}")

        require(self.sparsity_k >= 1, f"sparsity_k must be >= 1, got {self.sparsity_k}")
        require(self.trials >= 1, f"trials must be >= 1, got {self.trials}")
        require(self.noise_var >= 0, f"noise_var must be >= 0, got {self.noise_var}")
        require(self.train_count >= 0 and self.test_count >= 1, "train_count must be >= 0 and test_count >= 1")
        require(self.bp_lambda > 0 and self.bp_iters >= 1, "bp_lambda must be > 0 and bp_iters >= 1")
        require(self.joint_iters >= 1 and self.psnr_tol_db >= 0, "joint_iters must be >= 1, psnr_tol_db >= 0")
        require(self.synthetic_images >= 1 and self.patches_per_image >= 1, "Need at least one image and patch")
        require(self.seed >= 0, f"seed must be unsigned, got {self.seed}")
        if self.kind == 'joint':
            require(len(self.n) == 2 and self.n[0] == self.n[1], "Joint experiments work on square 2-D image patches")
            require(self.image_size >= max(self.n), f"image_size must be at least the patch size {self.n}")
        if self.kind == 'dictionary':
            require(self.train_count >= 1, "Dictionary experiments need train_count >= 1")


def _build(values: Dict[str, Any]) -> ExperimentConfig:
    values = dict(values)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise InvalidArgument(f"Unknown config keys {sorted(unknown)}")

    for name, cls in _NESTED.items():
        section = values.get(name)
        if isinstance(section, dict):
            try:
                values[name] = cls(**section)
            except TypeError as e:
                raise InvalidArgument(f"[{name}]: {e}") from e

    return ExperimentConfig(**values)


def load_config(path: str, seed: Optional[int] = None, out: Optional[str] = None):
    """
    :param path: .toml or .json file
    :param seed: Overrides the seed from the file
    :param out: Overrides the output path from the file
    :return: (ExperimentConfig, grid dict)
    """
    ext = os.path.splitext(path)[1].lower()
    try:
        with open(path, 'r') as f:
            if ext == '.toml':
                values = toml.load(f)
            elif ext == '.json':
                values = json.load(f)
            else:
                raise InvalidArgument(f"{path}: config must be .toml or .json")
    except (toml.TomlDecodeError, json.JSONDecodeError) as e:
        raise InvalidArgument(f"{path}: {e}") from e
    except OSError as e:
        raise InvalidArgument(f"{path}: {e.strerror}") from e

    grid = values.pop('grid', {}) or {}
    if seed is not None:
        values['seed'] = seed
    if out is not None:
        values['out'] = out
    return _build(values), grid


def _with_value(cfg: ExperimentConfig, key: str, value) -> ExperimentConfig:
    name, _, nested = key.partition('.')
    if nested:
        if name not in _NESTED:
            raise InvalidArgument(f"Grid key {key!r} does not name a nested config")
        section = getattr(cfg, name)
        try:
            return dataclasses.replace(cfg, **{name: dataclasses.replace(section, **{nested: value})})
        except TypeError as e:
            raise InvalidArgument(f"Grid key {key!r}: {e}") from e
    try:
        return dataclasses.replace(cfg, **{name: value})
    except TypeError as e:
        raise InvalidArgument(f"Grid key {key!r}: {e}") from e


def expand_grid(base: ExperimentConfig, grid: Dict[str, List[Any]]) -> List[ExperimentConfig]:
    """Cartesian product over the grid values, the last key varying fastest."""
    if not grid:
        return [base]
    keys = list(grid.keys())
    for key in keys:
        require(isinstance(grid[key], list) and len(grid[key]) >= 1, f"Grid entry {key!r} must be a non-empty list")

    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cfg = base
        for key, value in zip(keys, combo):
            cfg = _with_value(cfg, key, value)
        points.append(cfg)
    return points


def config_to_row(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Flat echo of the settings that identify a grid point."""
    return {
        'kind': cfg.kind,
        'design': cfg.design,
        'learner': cfg.learner,
        'recovery': cfg.recovery,
        'n': 'x'.join(str(v) for v in cfg.n),
        'nhat': 'x'.join(str(v) for v in cfg.nhat),
        'm': 'x'.join(str(v) for v in cfg.m),
        'k': cfg.sparsity_k,
        'noise_var': repr(float(cfg.noise_var)),
        'train_count': cfg.train_count,
        'alpha': repr(float(cfg.design_params.alpha)),
        'beta': repr(float(cfg.design_params.beta)),
        'gamma': repr(float(cfg.learn_params.gamma)),
    }
