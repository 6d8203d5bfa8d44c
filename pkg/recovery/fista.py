"""Basis pursuit denoising, min 1/2 ||y - A s||^2 + lambda ||s||_1, by accelerated proximal gradient."""

from collections import namedtuple

import numpy as np

from tensor.ops import as_tensor
from util.detail import LOGGER
from util.errors import InvalidArgument, NumericalFailure, require
from .least_squares import least_squares_on_support
from .operator import KronOperator
from .sparse import SparseTensor

DEFAULT_ITERS = 500
DEFAULT_TOL = 1e-10
SUPPORT_THRESHOLD = 1e-8

# Power iteration approaches the spectral norm from below
_LIPSCHITZ_SLACK = 1.01

BpdnResult = namedtuple('BpdnResult', ('codes', 'objective_trace', 'iterations'))


def _soft(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0)


def fista_bpdn_solve(op: KronOperator, y, lam: float, iters: int = DEFAULT_ITERS, tol: float = DEFAULT_TOL,
                     restart: bool = True) -> BpdnResult:
    """
    FISTA with restart on objective increase. On an increase the momentum is dropped and a plain proximal step is
    taken from the last iterate instead, which keeps the objective trace non-increasing.

    :param op: Operator with factors A_i
    :param y: Measurement tensor, shape op.out_shape
    :param lam: l1 weight, > 0
    :param iters: Iteration cap
    :param tol: Stop when the relative iterate change falls below tol
    :return: BpdnResult with dense codes of shape op.in_shape
    """
    y = as_tensor(y)
    if y.shape != op.out_shape:
        raise InvalidArgument(f"Measurements {y.shape} do not match operator output {op.out_shape}")
    require(lam > 0, f"lambda must be > 0, got {lam}")
    require(iters >= 1, f"iters must be >= 1, got {iters}")

    lipschitz = (op.spectral_norm() ** 2) * _LIPSCHITZ_SLACK
    x = np.zeros(op.in_shape)
    if lipschitz == 0:
        return BpdnResult(x, [0.5 * float(np.sum(y ** 2))], 0)

    def objective(s):
        return 0.5 * float(np.sum((y - op.apply(s)) ** 2)) + lam * float(np.sum(np.abs(s)))

    def prox_step(s):
        return _soft(s - op.adjoint(op.apply(s) - y) / lipschitz, lam / lipschitz)

    z = x
    t = 1.0
    previous = objective(x)
    trace = [previous]
    iteration = 0
    for iteration in range(1, iters + 1):
        x_new = prox_step(z)
        current = objective(x_new)
        if restart and current > previous:
            t = 1.0
            x_new = prox_step(x)
            current = objective(x_new)

        if not np.isfinite(current):
            raise NumericalFailure(f"BPDN objective became {current} at iteration {iteration}")
        trace.append(current)

        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        z = x_new + ((t - 1) / t_new) * (x_new - x)
        change = np.linalg.norm(x_new - x)
        scale = max(1.0, float(np.linalg.norm(x)))
        x, t, previous = x_new, t_new, current
        if change <= tol * scale:
            break

    LOGGER.debug(f"BPDN finished after {iteration} iterations, objective {trace[-1]}")
    return BpdnResult(x, trace, iteration)


def fista_bpdn(op: KronOperator, y, lam: float, iters: int = DEFAULT_ITERS, tol: float = DEFAULT_TOL,
               restart: bool = True) -> SparseTensor:
    """Thresholded BPDN solution, entries with |s| <= 1e-8 are dropped."""
    result = fista_bpdn_solve(op, y, lam, iters, tol, restart)
    return SparseTensor.from_dense(result.codes, tol=SUPPORT_THRESHOLD)


def debias(op: KronOperator, y, sparse: SparseTensor) -> SparseTensor:
    """Refits the values of a sparse solution by least squares on its support."""
    y = as_tensor(y)
    if sparse.shape != op.in_shape:
        raise InvalidArgument(f"Sparse shape {sparse.shape} does not match operator input {op.in_shape}")
    linear = sparse.linear_indices
    if linear.size == 0:
        return sparse
    if linear.size > op.shape[0]:
        LOGGER.warning(f"Debiasing {linear.size} coefficients from {op.shape[0]} measurements")
    values = least_squares_on_support(op.columns(linear), np.reshape(y, -1, order='F'))
    return SparseTensor.from_linear(op.in_shape, linear, values)
