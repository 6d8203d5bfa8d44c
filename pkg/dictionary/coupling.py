"""
Training data and the coupled block tensor.

For n modes, every subset J of measured modes contributes the stack Y_J = X x_{j in J} Phi_j + E_J with weight
gamma^(n - |J|). Along mode i the block sits in the top N_i rows when i is not in J and in the bottom M_i rows
otherwise. For two modes this is Z = [[gamma^2 X, gamma Y_2], [gamma Y_1, Y]], and Z is represented by the coupled
matrices D_i = [gamma I; Phi_i] Psi_i.
"""

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from tensor.ops import as_tensor, multi_mode_product
from util.errors import InvalidArgument, require

MAX_COUPLED_ORDER = 3

Modes = Tuple[int, ...]


def measurement_subsets(order: int) -> List[Modes]:
    """All non-empty sorted tuples of 1-based modes, smallest subsets first."""
    return [combo for size in range(1, order + 1) for combo in itertools.combinations(range(1, order + 1), size)]


class TrainingSet:
    """
    Training stack X (N_1 x ... x N_n x T) plus measurement stacks keyed by the sorted tuple of measured modes,
    e.g. (1,) -> Y_1, (2,) -> Y_2, (1, 2) -> Y.
    """

    def __init__(self, signals, measurements: Optional[Dict[Modes, np.ndarray]] = None):
        self.signals = as_tensor(signals)
        require(self.signals.ndim >= 2, f"Training stack needs at least one mode plus a sample axis, "
                                        f"got shape {self.signals.shape}")
        require(self.signals.shape[-1] >= 1, "Training stack is empty")

        self.measurements: Dict[Modes, np.ndarray] = {}
        for modes, stack in (measurements or {}).items():
            key = tuple(sorted(int(m) for m in modes))
            if not key or len(set(key)) != len(key) or key[0] < 1 or key[-1] > self.order:
                raise InvalidArgument(f"Invalid measured modes {modes} for order-{self.order} signals")
            stack = as_tensor(stack)
            if stack.ndim != self.signals.ndim or stack.shape[-1] != self.count:
                raise InvalidArgument(f"Measurement stack {key} has shape {stack.shape}, "
                                      f"signals have shape {self.signals.shape}")
            self.measurements[key] = stack

    @property
    def order(self) -> int:
        return self.signals.ndim - 1

    @property
    def count(self) -> int:
        return self.signals.shape[-1]

    @property
    def signal_shape(self) -> Tuple[int, ...]:
        return self.signals.shape[:-1]

    def with_measurements(self, phis: Sequence[np.ndarray], noise_var: float = 0.0,
                          rng: Optional[np.random.Generator] = None) -> 'TrainingSet':
        """
        Returns a copy where every missing measurement stack is generated from the signals with i.i.d. Gaussian noise
        of variance noise_var. Existing stacks are kept.
        """
        _check_phis(phis, self.signal_shape)
        require(noise_var >= 0, f"noise_var must be >= 0, got {noise_var}")
        if noise_var > 0 and rng is None:
            raise InvalidArgument("A random generator is needed for noisy measurements")

        measurements = dict(self.measurements)
        for modes in measurement_subsets(self.order):
            if modes in measurements:
                continue
            matrices = [phi if i in modes else None for i, phi in enumerate(phis, start=1)]
            stack = multi_mode_product(self.signals, matrices)
            if noise_var > 0:
                stack = stack + np.sqrt(noise_var) * rng.standard_normal(stack.shape)
            measurements[modes] = stack
        return TrainingSet(self.signals, measurements)

    def vectorized(self) -> np.ndarray:
        """Signals as an N x T matrix, N = prod N_i, each column in canonical order."""
        return np.reshape(self.signals, (-1, self.count), order='F')

    def vectorized_measurements(self) -> Optional[np.ndarray]:
        """The fully measured stack as an M x T matrix, if present."""
        full = self.measurements.get(tuple(range(1, self.order + 1)))
        return None if full is None else np.reshape(full, (-1, self.count), order='F')


def _check_phis(phis: Sequence[np.ndarray], signal_shape: Tuple[int, ...]) -> None:
    if len(phis) != len(signal_shape):
        raise InvalidArgument(f"Need {len(signal_shape)} sensing matrices, got {len(phis)}")
    for i, (phi, n) in enumerate(zip(phis, signal_shape), start=1):
        phi = np.asarray(phi)
        if phi.ndim != 2 or phi.shape[1] != n:
            raise InvalidArgument(f"Mode {i}: sensing matrix {phi.shape} incompatible with N_{i}={n}")


def coupling_stack(phi, gamma: float) -> np.ndarray:
    """[gamma I; Phi], an (N + M) x N matrix."""
    phi = np.asarray(phi, dtype=np.float64)
    require(gamma > 0, f"gamma must be > 0, got {gamma}")
    return np.vstack([gamma * np.eye(phi.shape[1]), phi])


def coupling_pinv(phi, gamma: float) -> np.ndarray:
    """(gamma^2 I + Phi^T Phi)^-1 [gamma I, Phi^T], the left inverse of coupling_stack(phi, gamma)."""
    phi = np.asarray(phi, dtype=np.float64)
    require(gamma > 0, f"gamma must be > 0, got {gamma}")
    n = phi.shape[1]
    gram = gamma ** 2 * np.eye(n) + phi.T @ phi
    return scipy.linalg.solve(gram, np.hstack([gamma * np.eye(n), phi.T]), assume_a='pos')


def build_coupled_tensor(train: TrainingSet, phis: Sequence[np.ndarray], gamma: float, noise_var: float = 0.0,
                         rng: Optional[np.random.Generator] = None):
    """
    :param train: Training set, missing measurement stacks are generated from the signals
    :param phis: Sensing matrices Phi_i (M_i x N_i), M_i may be 0
    :param gamma: Coupling weight
    :param noise_var: Noise variance for generated measurement stacks
    :param rng: Random generator for the noise
    :return: (Z, [gamma I; Phi_i] per mode)
    """
    order = train.order
    if order > MAX_COUPLED_ORDER:
        raise InvalidArgument(f"Coupled block tensors are supported up to order {MAX_COUPLED_ORDER}, got {order}")
    require(gamma > 0, f"gamma must be > 0, got {gamma}")
    _check_phis(phis, train.signal_shape)

    phis = [np.asarray(phi, dtype=np.float64) for phi in phis]
    train = train.with_measurements(phis, noise_var, rng)
    ns = train.signal_shape
    ms = tuple(phi.shape[0] for phi in phis)

    z = np.zeros(tuple(n + m for n, m in zip(ns, ms)) + (train.count,))
    for measured in itertools.product((False, True), repeat=order):
        modes = tuple(i for i, chosen in enumerate(measured, start=1) if chosen)
        block = train.measurements[modes] if modes else train.signals

        expected = tuple(m if chosen else n for n, m, chosen in zip(ns, ms, measured)) + (train.count,)
        if block.shape != expected:
            raise InvalidArgument(f"Measurement stack {modes} has shape {block.shape}, expected {expected}")

        region = tuple(slice(n, n + m) if chosen else slice(0, n) for n, m, chosen in zip(ns, ms, measured))
        z[region + (slice(None),)] = gamma ** (order - len(modes)) * block

    return z, [coupling_stack(phi, gamma) for phi in phis]
