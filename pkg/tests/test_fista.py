import numpy as np
import pytest
from numpy.testing import assert_allclose

from recovery.fista import debias, fista_bpdn, fista_bpdn_solve
from recovery.operator import KronOperator
from recovery.sparse import SparseTensor
from util.errors import InvalidArgument


@pytest.fixture()
def rng():
    return np.random.default_rng(59)


def test_orthonormal_soft_threshold(rng):
    q1 = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    q2 = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    op = KronOperator([q1, q2])
    y = rng.standard_normal((4, 3))
    lam = 0.3

    result = fista_bpdn_solve(op, y, lam, iters=2000)

    correlations = op.adjoint(y)
    expected = np.sign(correlations) * np.maximum(np.abs(correlations) - lam, 0)
    assert_allclose(result.codes, expected, atol=1e-8)


def test_objective_non_increasing(rng):
    op = KronOperator([rng.standard_normal((5, 8)), rng.standard_normal((4, 6))])
    y = rng.standard_normal((5, 4))

    result = fista_bpdn_solve(op, y, 0.05, iters=300)

    trace = result.objective_trace
    assert len(trace) == result.iterations + 1
    assert all(b <= a + 1e-12 * a for a, b in zip(trace, trace[1:]))


def test_sparse_recovery(rng):
    factors = [rng.standard_normal((10, 12)), rng.standard_normal((10, 12))]
    factors = [f / np.linalg.norm(f, axis=0) for f in factors]
    op = KronOperator(factors)
    truth = np.zeros((12, 12))
    truth[3, 4] = 2.0
    truth[9, 1] = -1.5

    result = fista_bpdn(op, op.apply(truth), 1e-3, iters=3000)
    refit = debias(op, op.apply(truth), result)

    assert (3, 4) in result.support
    assert (9, 1) in result.support
    assert np.max(np.abs(refit.to_dense() - truth)) < 1e-2


def test_threshold_drops_small_entries(mocker, rng):
    op = KronOperator([np.eye(3)])
    codes = np.array([1.0, 1e-9, -2e-8])
    mocker.patch('recovery.fista.fista_bpdn_solve', return_value=mocker.Mock(codes=codes))

    result = fista_bpdn(op, np.zeros(3), 0.1)

    assert result.support == [(0,), (2,)]


def test_zero_operator():
    result = fista_bpdn_solve(KronOperator([np.zeros((2, 3))]), np.ones(2), 0.1)

    assert result.iterations == 0
    assert not np.any(result.codes)


def test_invalid_lambda(rng):
    with pytest.raises(InvalidArgument):
        fista_bpdn_solve(KronOperator([np.eye(2)]), np.ones(2), 0.0)


def test_debias_exact(rng):
    a = rng.standard_normal((6, 10))
    truth = SparseTensor((10,), [(2,), (7,)], [1.0, -3.0])
    rough = SparseTensor((10,), [(2,), (7,)], [0.8, -2.5])

    refit = debias(KronOperator([a]), a @ truth.to_dense(), rough)

    assert_allclose(refit.values, truth.values, atol=1e-10)


def test_debias_empty():
    empty = SparseTensor((3,), [], [])

    assert debias(KronOperator([np.eye(3)]), np.ones(3), empty) is empty
