"""
Orthogonal matching pursuit through Kronecker-structured operators.

Every slice of a stack is coded independently: the atom with the largest absolute correlation (lowest canonical
index on ties) joins the support, the coefficients are refit by least squares on the whole support, and coding stops
after k atoms or when the residual norm drops to tol. Correlations for all active slices are computed together with
one adjoint application, and only the selected columns of the big matrix are ever formed.
"""

from collections import namedtuple

import numpy as np

from tensor.ops import as_tensor
from util.detail import LOGGER
from util.errors import InvalidArgument, require
from util.event_stats import Event
from .least_squares import least_squares_on_support
from .operator import KronOperator
from .sparse import SparseTensor

CODER_FAILURE_EVENT = Event('coder_failure')

CodingResult = namedtuple('CodingResult', (
    'codes',  # Dense codes, shape in_shape + (T,)
    'supports',  # Per slice array of selected linear indices in selection order
    'failures',  # Slices whose least squares refit was non-finite, their codes are zero
))


def sparse_code_stack(op: KronOperator, stack, k: int, tol: float = 0.0) -> CodingResult:
    """
    :param op: Operator with factors A_i
    :param stack: Measurements, shape out_shape + (T,)
    :param k: Atom budget per slice
    :param tol: Residual 2-norm at which a slice stops early
    """
    stack = as_tensor(stack)
    if stack.shape[:-1] != op.out_shape:
        raise InvalidArgument(f"Stack {stack.shape} does not match operator output {op.out_shape}")
    rows, atoms = op.shape
    if not 0 <= k <= atoms:
        raise InvalidArgument(f"Sparsity {k} must be between 0 and {atoms}")
    require(tol >= 0, f"tol must be >= 0, got {tol}")

    count = stack.shape[-1]
    y = np.reshape(stack, (rows, count), order='F')
    residual = y.copy()
    support = np.zeros((count, k), dtype=np.intp)
    coefficients = [np.zeros(0)] * count
    selected = np.zeros(count, dtype=np.intp)
    active = np.ones(count, dtype=bool)
    failed = np.zeros(count, dtype=bool)

    for step in range(k):
        active &= np.linalg.norm(residual, axis=0) > tol
        slices = np.flatnonzero(active)
        if slices.size == 0:
            break

        corr = op.adjoint_stack(np.reshape(residual[:, slices], op.out_shape + (slices.size,), order='F'))
        corr = np.abs(np.reshape(corr, (atoms, slices.size), order='F'))
        if step:
            corr[support[slices, :step].T, np.arange(slices.size)] = -1

        picks = np.argmax(corr, axis=0)
        progress = corr[picks, np.arange(slices.size)] > 0
        active[slices[~progress]] = False

        for t, pick in zip(slices[progress], picks[progress]):
            support[t, step] = pick
            cols = op.columns(support[t, :step + 1])
            coef = least_squares_on_support(cols, y[:, t])
            if not np.all(np.isfinite(coef)):
                failed[t] = True
                active[t] = False
                continue
            selected[t] = step + 1
            coefficients[t] = coef
            residual[:, t] = y[:, t] - cols @ coef

    codes = np.zeros((atoms, count))
    supports = []
    for t in range(count):
        if failed[t]:
            supports.append(np.zeros(0, dtype=np.intp))
            continue
        chosen = support[t, :selected[t]]
        codes[chosen, t] = coefficients[t]
        supports.append(chosen.copy())

    failures = int(failed.sum())
    if failures:
        CODER_FAILURE_EVENT.increment(failures)
        LOGGER.warning(f"Sparse coding failed on {failures} of {count} slices, their codes were zeroed")

    return CodingResult(np.reshape(codes, op.in_shape + (count,), order='F'), supports, failures)


def kron_omp(op: KronOperator, y, k: int, tol: float = 0.0) -> SparseTensor:
    """
    OMP on vec(y) against A_n kron ... kron A_1 without forming the matrix.

    :param op: Operator with factors A_i
    :param y: Measurement tensor of shape op.out_shape
    :return: SparseTensor of shape op.in_shape with at most k entries
    """
    y = as_tensor(y)
    result = sparse_code_stack(op, y[..., None], k, tol)
    chosen = result.supports[0]
    values = np.reshape(result.codes[..., 0], -1, order='F')[chosen]
    return SparseTensor.from_linear(op.in_shape, chosen, values)


def omp(a, y, k: int, tol: float = 0.0) -> SparseTensor:
    """
    Plain OMP for a single matrix.

    :param a: M x N matrix
    :param y: Length-M measurement vector
    :return: Order-1 SparseTensor of length N
    """
    a = np.asarray(a, dtype=np.float64)
    require(a.ndim == 2, f"omp expects a matrix, got shape {a.shape}")
    return kron_omp(KronOperator([a]), np.asarray(y, dtype=np.float64).ravel(), k, tol)
