import numpy as np
import pytest
from numpy.testing import assert_allclose

from recovery.operator import KronOperator
from tensor.ops import kron_factors, vec
from util.errors import InvalidArgument


@pytest.fixture()
def op():
    rng = np.random.default_rng(47)
    return KronOperator([rng.standard_normal((3, 5)), rng.standard_normal((2, 4)), rng.standard_normal((4, 3))])


def test_shapes(op):
    assert op.order == 3
    assert op.in_shape == (5, 4, 3)
    assert op.out_shape == (3, 2, 4)
    assert op.shape == (24, 60)


def test_apply_matches_explicit(op):
    s = np.random.default_rng(1).standard_normal(op.in_shape)

    assert_allclose(vec(op.apply(s)), op.explicit() @ vec(s), atol=1e-10)
    assert_allclose(op.apply_vec(vec(s)), op.explicit() @ vec(s), atol=1e-10)


def test_adjoint(op):
    rng = np.random.default_rng(2)
    s = rng.standard_normal(op.in_shape)
    y = rng.standard_normal(op.out_shape)

    assert np.sum(op.apply(s) * y) == pytest.approx(np.sum(s * op.adjoint(y)))
    assert_allclose(op.adjoint_vec(vec(y)), op.explicit().T @ vec(y), atol=1e-10)


def test_stacks(op):
    stack = np.random.default_rng(3).standard_normal(op.in_shape + (6,))

    applied = op.apply_stack(stack)

    assert applied.shape == op.out_shape + (6,)
    assert_allclose(applied[..., 4], op.apply(stack[..., 4]), atol=1e-12)
    assert_allclose(op.adjoint_stack(applied)[..., 1], op.adjoint(applied[..., 1]), atol=1e-12)


def test_columns(op):
    indices = [0, 17, 59, 33]

    assert_allclose(op.columns(indices), op.explicit()[:, indices], atol=1e-12)


def test_columns_out_of_range(op):
    with pytest.raises(InvalidArgument):
        op.columns([60])


def test_spectral_norm(op):
    assert op.spectral_norm() == pytest.approx(np.linalg.norm(op.explicit(), 2), rel=1e-4)


def test_spectral_norm_zero():
    assert KronOperator([np.zeros((2, 3))]).spectral_norm() == 0


def test_wrong_input_shape(op):
    with pytest.raises(InvalidArgument):
        op.apply(np.zeros((4, 5, 3)))
    with pytest.raises(InvalidArgument):
        op.adjoint_stack(np.zeros((3, 2, 5, 2)))


def test_single_factor():
    a = np.arange(6, dtype=np.float64).reshape(2, 3)

    assert_allclose(KronOperator([a]).explicit(), kron_factors([a]))
    assert_allclose(KronOperator([a]).apply([1.0, 0.0, 0.0]), a[:, 0])
