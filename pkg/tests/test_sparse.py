import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from recovery.least_squares import least_squares_on_support, solve_normal_equations
from recovery.sparse import SparseTensor, as_code_stack, sparse_to_stack, stack_to_sparse
from util.errors import InvalidArgument


class TestSparseTensor:

    def test_sorted_by_canonical_index(self):
        s = SparseTensor((2, 3), [(1, 2), (0, 1), (1, 0)], [3.0, 1.0, 2.0])

        # Canonical order has mode 1 fastest
        assert s.support == [(1, 0), (0, 1), (1, 2)]
        assert_array_equal(s.values, [2.0, 1.0, 3.0])
        assert_array_equal(s.linear_indices, [1, 2, 5])

    def test_dense_round_trip(self):
        dense = np.zeros((3, 2, 2))
        dense[2, 1, 0] = 4.0
        dense[0, 0, 1] = -1.0

        s = SparseTensor.from_dense(dense)

        assert s.nnz == 2
        assert s.order == 3
        assert_array_equal(s.to_dense(), dense)

    def test_from_dense_tolerance(self):
        s = SparseTensor.from_dense([1.0, 1e-9, 0.5], tol=1e-6)

        assert s.support == [(0,), (2,)]

    def test_from_linear(self):
        s = SparseTensor.from_linear((2, 3), [5, 0], [1.0, 2.0])

        assert s.support == [(0, 0), (1, 2)]
        assert_array_equal(s.values, [2.0, 1.0])

    def test_empty(self):
        s = SparseTensor.from_linear((2, 2), [], [])

        assert s.nnz == 0
        assert not np.any(s.to_dense())

    def test_equality(self):
        a = SparseTensor((3,), [(0,), (2,)], [1.0, 2.0])

        assert a == SparseTensor((3,), [(2,), (0,)], [2.0, 1.0])
        assert a != SparseTensor((3,), [(0,), (2,)], [1.0, 2.5])
        assert a != SparseTensor((4,), [(0,), (2,)], [1.0, 2.0])

    @pytest.mark.parametrize("support,values", [
        ([(0, 3)], [1.0]),
        ([(0,)], [1.0]),
        ([(0, 0), (0, 0)], [1.0, 2.0]),
        ([(0, 0)], [1.0, 2.0]),
    ])
    def test_invalid(self, support, values):
        with pytest.raises(InvalidArgument):
            SparseTensor((2, 3), support, values)


def test_stack_conversions():
    stack = np.zeros((2, 3, 4))
    stack[1, 2, 0] = 1.0
    stack[0, 1, 3] = -2.0

    slices = stack_to_sparse(stack)

    assert [s.nnz for s in slices] == [1, 0, 0, 1]
    assert_array_equal(sparse_to_stack(slices), stack)
    assert_array_equal(as_code_stack(slices), stack)
    assert_array_equal(as_code_stack(slices[0]), stack[..., 0])
    assert_array_equal(as_code_stack(stack), stack)


def test_sparse_to_stack_mixed_shapes():
    with pytest.raises(InvalidArgument):
        sparse_to_stack([SparseTensor((2,), [], []), SparseTensor((3,), [], [])])


class TestLeastSquares:

    def test_full_rank(self):
        rng = np.random.default_rng(61)
        cols = rng.standard_normal((8, 3))
        coef = np.array([1.0, -2.0, 0.5])

        assert_allclose(least_squares_on_support(cols, cols @ coef), coef, atol=1e-12)

    def test_multiple_right_hand_sides(self):
        rng = np.random.default_rng(62)
        cols = rng.standard_normal((6, 2))
        coef = rng.standard_normal((2, 4))

        assert_allclose(least_squares_on_support(cols, cols @ coef), coef, atol=1e-12)

    def test_rank_deficient_stays_finite(self):
        cols = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])

        coef = least_squares_on_support(cols, [2.0, 0.0, 0.0])

        assert np.all(np.isfinite(coef))
        assert_allclose(cols @ coef, [2.0, 0.0, 0.0], atol=1e-6)

    def test_no_columns(self):
        assert least_squares_on_support(np.zeros((3, 0)), np.ones(3)).shape == (0,)

    def test_batched_normal_equations(self):
        gram = np.array([[[2.0, 0.0], [0.0, 4.0]], [[1.0, 0.0], [0.0, 1.0]]])
        rhs = np.array([[2.0, 4.0], [3.0, -1.0]])

        assert_allclose(solve_normal_equations(gram, rhs), [[1.0, 1.0], [3.0, -1.0]])

    def test_singular_normal_equations(self):
        gram = np.zeros((1, 2, 2))

        result = solve_normal_equations(gram, np.zeros((1, 2)))

        assert_allclose(result, 0)
