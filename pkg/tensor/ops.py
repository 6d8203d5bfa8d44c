"""
Mode-wise tensor algebra.

Tensors are plain float64 numpy arrays. The canonical linear order is column-major (mode-1 index fastest) so that
vec(S x_1 A_1 x_2 A_2 ... x_n A_n) = (A_n kron ... kron A_1) vec(S) holds verbatim. Modes are numbered from 1.
"""

from functools import reduce
from typing import Optional, Sequence

import numpy as np

from util.errors import InvalidArgument, require


def as_tensor(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    require(arr.ndim >= 1, "Tensor must have at least one mode")
    return arr


def _check_mode(t: np.ndarray, mode: int) -> int:
    if not isinstance(mode, (int, np.integer)) or not 1 <= mode <= t.ndim:
        raise InvalidArgument(f"Mode {mode} out of range for order-{t.ndim} tensor")
    return int(mode) - 1


def unfold(t, mode: int) -> np.ndarray:
    """
    Mode-i unfolding. Columns are the mode-i fibers ordered by the canonical order of the remaining indices.

    :param t: Tensor
    :param mode: 1-based mode
    :return: N_i x prod_{j != i} N_j matrix
    """
    t = as_tensor(t)
    axis = _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, axis, 0), (t.shape[axis], -1), order='F')


def fold(m, mode: int, shape: Sequence[int]) -> np.ndarray:
    """
    Inverse of unfold.

    :param m: Unfolded matrix
    :param mode: 1-based mode that was unfolded
    :param shape: Shape of the folded tensor
    :return: Tensor of the given shape
    """
    m = np.asarray(m, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if not 1 <= mode <= len(shape):
        raise InvalidArgument(f"Mode {mode} out of range for order-{len(shape)} shape")
    axis = mode - 1
    moved_shape = (shape[axis],) + shape[:axis] + shape[axis + 1:]
    if m.ndim != 2 or m.size != int(np.prod(moved_shape)) or m.shape[0] != shape[axis]:
        raise InvalidArgument(f"Cannot fold {m.shape} matrix along mode {mode} into {shape}")
    return np.moveaxis(np.reshape(m, moved_shape, order='F'), 0, axis)


def mode_product(t, m, mode: int) -> np.ndarray:
    """
    Mode-k tensor by matrix product, equal to fold(m @ unfold(t, mode)).

    :param t: Tensor
    :param m: Matrix with as many columns as t has entries along mode
    :param mode: 1-based mode
    :return: Tensor with N_mode replaced by rows(m)
    """
    t = as_tensor(t)
    m = np.asarray(m, dtype=np.float64)
    axis = _check_mode(t, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[axis]:
        raise InvalidArgument(f"Matrix {m.shape} incompatible with mode {mode} of tensor {t.shape}")
    return np.moveaxis(np.tensordot(m, t, axes=(1, axis)), 0, axis)


def multi_mode_product(t, matrices: Sequence[Optional[np.ndarray]], modes: Optional[Sequence[int]] = None,
                       transpose: bool = False) -> np.ndarray:
    """
    Applies one matrix per mode. None entries leave their mode untouched.

    :param t: Tensor
    :param matrices: Matrices to apply
    :param modes: 1-based modes, defaults to 1..len(matrices)
    :param transpose: Apply the transposes instead (adjoint of the forward map)
    :return: Resulting tensor
    """
    if modes is None:
        modes = range(1, len(matrices) + 1)
    modes = list(modes)
    if len(modes) != len(matrices):
        raise InvalidArgument("Need exactly one mode per matrix")
    if len(set(modes)) != len(modes):
        raise InvalidArgument(f"Repeated modes in {modes}")

    result = as_tensor(t)
    for mode, m in zip(modes, matrices):
        if m is None:
            continue
        m = np.asarray(m, dtype=np.float64)
        result = mode_product(result, m.T if transpose else m, mode)
    return result


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def kron_factors(factors: Sequence[np.ndarray]) -> np.ndarray:
    """
    Explicit A_n kron ... kron A_1 for a FactorSet ordered [A_1, ..., A_n].
    """
    require(len(factors) >= 1, "Need at least one factor")
    return reduce(lambda acc, f: kron(f, acc), factors[1:], np.asarray(factors[0], dtype=np.float64))


def vec(t) -> np.ndarray:
    return np.reshape(as_tensor(t), -1, order='F')


def unvec(v, shape: Sequence[int]) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if v.size != int(np.prod(shape)):
        raise InvalidArgument(f"Cannot reshape {v.size} entries into {shape}")
    return np.reshape(v, shape, order='F')


def outer(*vectors) -> np.ndarray:
    """Outer product v_1 o v_2 o ... o v_n."""
    require(len(vectors) >= 1, "Need at least one vector")
    result = np.asarray(vectors[0], dtype=np.float64)
    for v in vectors[1:]:
        result = np.multiply.outer(result, np.asarray(v, dtype=np.float64))
    return result
