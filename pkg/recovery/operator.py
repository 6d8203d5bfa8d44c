from typing import Sequence, Tuple

import numpy as np

from tensor.ops import as_tensor, kron_factors, multi_mode_product, unvec, vec
from util.errors import InvalidArgument, require

POWER_ITERS = 100
POWER_REL_TOL = 1e-10


class KronOperator:
    """
    The matrix A_n kron ... kron A_1 represented by its factors [A_1, ..., A_n]. Forward and adjoint applications go
    through mode products, so the full matrix is only ever built by explicit().
    """

    def __init__(self, factors: Sequence[np.ndarray]):
        require(len(factors) >= 1, "KronOperator needs at least one factor")
        self.factors = []
        for i, f in enumerate(factors, start=1):
            f = np.asarray(f, dtype=np.float64)
            require(f.ndim == 2, f"Factor {i} must be a matrix, got shape {f.shape}")
            self.factors.append(f)

        self.out_shape: Tuple[int, ...] = tuple(f.shape[0] for f in self.factors)
        self.in_shape: Tuple[int, ...] = tuple(f.shape[1] for f in self.factors)

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, int]:
        return int(np.prod(self.out_shape)), int(np.prod(self.in_shape))

    def _check(self, t, expected: Tuple[int, ...], stacked: bool) -> np.ndarray:
        t = as_tensor(t)
        shape = t.shape[:-1] if stacked else t.shape
        if shape != expected:
            raise InvalidArgument(f"Expected {'stack of ' if stacked else ''}{expected} tensor, got {t.shape}")
        return t

    def apply(self, s) -> np.ndarray:
        return multi_mode_product(self._check(s, self.in_shape, False), self.factors)

    def adjoint(self, y) -> np.ndarray:
        return multi_mode_product(self._check(y, self.out_shape, False), self.factors, transpose=True)

    def apply_stack(self, s) -> np.ndarray:
        """Applies the operator to every slice along the trailing axis."""
        return multi_mode_product(self._check(s, self.in_shape, True), self.factors)

    def adjoint_stack(self, y) -> np.ndarray:
        return multi_mode_product(self._check(y, self.out_shape, True), self.factors, transpose=True)

    def apply_vec(self, v) -> np.ndarray:
        return vec(self.apply(unvec(v, self.in_shape)))

    def adjoint_vec(self, v) -> np.ndarray:
        return vec(self.adjoint(unvec(v, self.out_shape)))

    def columns(self, linear_indices) -> np.ndarray:
        """
        Selected columns of the full matrix, indexed in canonical order.

        :param linear_indices: Column indices into the prod(N^_i) columns
        :return: prod(M_i) x len(linear_indices) matrix
        """
        linear = np.asarray(linear_indices, dtype=np.intp).ravel()
        if linear.size and (linear.min() < 0 or linear.max() >= self.shape[1]):
            raise InvalidArgument(f"Column index out of range for {self.shape} operator")

        multi = np.unravel_index(linear, self.in_shape, order='F')
        cols = np.ones((1, linear.size))
        for f, idx in zip(self.factors, multi):
            block = f[:, idx]
            # Earlier modes vary fastest in the combined row index
            cols = np.einsum('as,bs->abs', cols, block).reshape((-1, linear.size), order='F')
        return cols

    def explicit(self) -> np.ndarray:
        return kron_factors(self.factors)

    def spectral_norm(self, iters: int = POWER_ITERS, tol: float = POWER_REL_TOL, seed: int = 0) -> float:
        """Largest singular value by power iteration on A^T A."""
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(self.in_shape)
        x /= np.linalg.norm(x)
        estimate = 0.0
        for _ in range(iters):
            y = self.adjoint(self.apply(x))
            norm = np.linalg.norm(y)
            if norm == 0:
                return 0.0
            x = y / norm
            previous, estimate = estimate, float(np.sqrt(norm))
            if abs(estimate - previous) <= tol * estimate:
                break
        return estimate
