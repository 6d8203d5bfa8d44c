from typing import List, Sequence, Tuple

import numpy as np

from util.errors import InvalidArgument, require


class SparseTensor:
    """
    Support multi-indices and values over a dense shape. Support is kept sorted by canonical linear index.
    """

    def __init__(self, shape: Sequence[int], support: Sequence[Sequence[int]], values: Sequence[float]):
        self.shape = tuple(int(s) for s in shape)
        require(len(self.shape) >= 1 and all(s >= 1 for s in self.shape), f"Invalid shape {self.shape}")

        support = [tuple(int(i) for i in idx) for idx in support]
        values = np.asarray(values, dtype=np.float64).ravel()
        if len(support) != len(values):
            raise InvalidArgument(f"{len(support)} support entries but {len(values)} values")

        for idx in support:
            if len(idx) != len(self.shape) or any(not 0 <= i < n for i, n in zip(idx, self.shape)):
                raise InvalidArgument(f"Support index {idx} out of range for shape {self.shape}")

        linear = np.array([np.ravel_multi_index(idx, self.shape, order='F') for idx in support], dtype=np.int64)
        if len(np.unique(linear)) != len(linear):
            raise InvalidArgument("Support indices must be unique")

        order = np.argsort(linear, kind='stable')
        self.support: List[Tuple[int, ...]] = [support[i] for i in order]
        self.values: np.ndarray = values[order]
        self._linear = linear[order]

    @classmethod
    def from_dense(cls, t, tol: float = 0.0) -> 'SparseTensor':
        t = np.asarray(t, dtype=np.float64)
        if t.ndim == 0:
            t = t.reshape(1)
        linear = np.flatnonzero(np.abs(t.ravel(order='F')) > tol)
        support = list(zip(*np.unravel_index(linear, t.shape, order='F')))
        return cls(t.shape, support, t.ravel(order='F')[linear])

    @classmethod
    def from_linear(cls, shape: Sequence[int], linear, values) -> 'SparseTensor':
        linear = np.asarray(linear, dtype=np.int64).ravel()
        support = list(zip(*np.unravel_index(linear, tuple(shape), order='F'))) if len(linear) else []
        return cls(shape, support, values)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def order(self) -> int:
        return len(self.shape)

    @property
    def linear_indices(self) -> np.ndarray:
        return self._linear.copy()

    def to_dense(self) -> np.ndarray:
        flat = np.zeros(int(np.prod(self.shape)))
        flat[self._linear] = self.values
        return np.reshape(flat, self.shape, order='F')

    def __eq__(self, other):
        if not isinstance(other, SparseTensor):
            return NotImplemented
        return (self.shape == other.shape and np.array_equal(self._linear, other._linear)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"SparseTensor(shape={self.shape}, nnz={self.nnz})"


def stack_to_sparse(codes) -> List[SparseTensor]:
    """Splits a dense code stack (trailing axis = slice) into one SparseTensor per slice."""
    codes = np.asarray(codes, dtype=np.float64)
    return [SparseTensor.from_dense(codes[..., t]) for t in range(codes.shape[-1])]


def sparse_to_stack(slices: Sequence[SparseTensor]) -> np.ndarray:
    require(len(slices) >= 1, "Need at least one slice")
    shape = slices[0].shape
    for s in slices:
        require(s.shape == shape, f"Mixed slice shapes {shape} and {s.shape}")
    return np.stack([s.to_dense() for s in slices], axis=-1)


def as_code_stack(codes) -> np.ndarray:
    """Dense codes from a dense array, a single SparseTensor, or a list of per-slice SparseTensors."""
    if isinstance(codes, SparseTensor):
        return codes.to_dense()
    if isinstance(codes, np.ndarray):
        return np.asarray(codes, dtype=np.float64)
    return sparse_to_stack(list(codes))
