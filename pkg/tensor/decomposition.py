"""SVD and leading rank-1 HOSVD kernels with a deterministic sign convention."""

from collections import namedtuple
from typing import List

import numpy as np
import scipy.linalg

from util.detail import LOGGER
from util.errors import NumericalFailure, require
from tensor.ops import as_tensor, unfold

HOSVD_REL_TOL = 1e-10
HOSVD_MAX_SWEEPS = 100

# Entries below this magnitude do not decide the sign of a unit vector
_SIGN_TOL = 1e-12


class SvdResult(namedtuple('SvdResult', ('u', 's', 'v'))):
    """
    u: left singular vectors (columns), s: non-increasing singular values, v: right singular vectors (columns),
    so that m = u[:, :r] @ diag(s) @ v[:, :r].T with r = len(s).
    """
    __slots__ = ()

    def reconstruct(self) -> np.ndarray:
        r = len(self.s)
        return (self.u[:, :r] * self.s) @ self.v[:, :r].T


Hosvd1Result = namedtuple('Hosvd1Result', (
    'vectors',  # Unit leading vector per mode
    'value',  # Leading core value, >= 0
    'degenerate',  # True for an all-zero input, vectors are then arbitrary
    'sweeps',
))


def _first_significant(vector: np.ndarray) -> float:
    idx = np.flatnonzero(np.abs(vector) > _SIGN_TOL)
    return vector[idx[0]] if len(idx) else 0.0


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    """Flips paired columns in place so that the first significant entry of each column of u is non-negative."""
    paired = min(u.shape[1], v.shape[1])
    for k in range(u.shape[1]):
        if _first_significant(u[:, k]) < 0:
            u[:, k] *= -1
            if k < paired:
                v[:, k] *= -1


def _lapack_svd(m: np.ndarray, full_matrices: bool):
    try:
        return scipy.linalg.svd(m, full_matrices=full_matrices, lapack_driver='gesdd', check_finite=False)
    except scipy.linalg.LinAlgError:
        LOGGER.warning(f"gesdd did not converge on {m.shape} matrix, retrying with gesvd")
    try:
        return scipy.linalg.svd(m, full_matrices=full_matrices, lapack_driver='gesvd', check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise NumericalFailure(f"SVD did not converge on {m.shape} matrix") from e


def svd(m, full_matrices: bool = True) -> SvdResult:
    """
    Singular value decomposition with sorted singular values and a fixed sign convention.

    :param m: Finite real matrix
    :param full_matrices: Return square u and v
    :return: SvdResult
    """
    m = np.asarray(m, dtype=np.float64)
    require(m.ndim == 2, f"svd expects a matrix, got shape {m.shape}")
    require(bool(np.all(np.isfinite(m))), "svd input has non-finite entries")

    u, s, vh = _lapack_svd(m, full_matrices)
    u = np.array(u)
    v = np.array(vh.T)
    _fix_signs(u, v)
    return SvdResult(u, s, v)


def leading_triple(m):
    """
    Leading singular triple of a matrix using the same sign convention as svd.

    :return: (u, value, v)
    """
    result = svd(m, full_matrices=False)
    return result.u[:, 0], float(result.s[0]), result.v[:, 0]


def numerical_rank(s, rel_tol: float = 1e-10) -> int:
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def _contract_except(t: np.ndarray, vectors: List[np.ndarray], skip: int) -> np.ndarray:
    result = t
    # Highest axis first so lower axis positions stay valid
    for axis in reversed(range(t.ndim)):
        if axis != skip:
            result = np.tensordot(result, vectors[axis], axes=([axis], [0]))
    return result


def hosvd_rank1(t, rel_tol: float = HOSVD_REL_TOL, max_sweeps: int = HOSVD_MAX_SWEEPS) -> Hosvd1Result:
    """
    Leading rank-1 term of a tensor by higher-order power iteration.

    Starts from the leading left singular vector of every unfolding and alternates over modes until the core value
    changes by less than rel_tol (relative) or max_sweeps is reached. For a matrix this is its leading singular
    triple. The first significant entry of every vector except the last is non-negative; the last vector carries the
    sign that keeps the value non-negative.

    :param t: Tensor of order >= 2
    :return: Hosvd1Result
    """
    t = as_tensor(t)
    require(t.ndim >= 2, f"hosvd_rank1 expects order >= 2, got {t.ndim}")
    require(bool(np.all(np.isfinite(t))), "hosvd_rank1 input has non-finite entries")

    if not np.any(t):
        vectors = [np.eye(n, 1).ravel() for n in t.shape]
        return Hosvd1Result(vectors, 0.0, True, 0)

    if t.ndim == 2:
        u, value, v = leading_triple(t)
        return Hosvd1Result([u, v], value, False, 0)

    vectors = [leading_triple(unfold(t, mode))[0] for mode in range(1, t.ndim + 1)]

    value = 0.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        previous = value
        for axis in range(t.ndim):
            w = _contract_except(t, vectors, axis)
            norm = np.linalg.norm(w)
            if norm == 0:
                # Orthogonal start on this mode, fall back to the unfolding direction
                w = leading_triple(unfold(t, axis + 1))[0]
                norm = 1.0
            vectors[axis] = w / norm
        value = float(np.dot(_contract_except(t, vectors, t.ndim - 1), vectors[-1]))
        if abs(value - previous) <= rel_tol * abs(value):
            break
    else:
        LOGGER.debug(f"hosvd_rank1 hit {max_sweeps} sweeps on {t.shape} tensor")

    for axis in range(t.ndim - 1):
        if _first_significant(vectors[axis]) < 0:
            vectors[axis] = -vectors[axis]
            vectors[-1] = -vectors[-1]
    value = float(np.dot(_contract_except(t, vectors, t.ndim - 1), vectors[-1]))
    if value < 0:
        vectors[-1] = -vectors[-1]
        value = -value

    return Hosvd1Result(vectors, value, False, sweeps)
