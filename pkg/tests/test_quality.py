import numpy as np
import pytest

from metrics.quality import are, mse, psnr
from recovery.sparse import SparseTensor, stack_to_sparse
from tensor.ops import multi_mode_product
from util.errors import InvalidArgument


def test_mse():
    assert mse([0.0, 0.0], [1.0, 3.0]) == pytest.approx(5)


def test_mse_shape_mismatch():
    with pytest.raises(InvalidArgument):
        mse(np.zeros(3), np.zeros(4))


def test_psnr():
    x = np.zeros((10, 10))

    assert psnr(x, x + 0.1) == pytest.approx(20)
    assert psnr(x, x) == float('inf')
    assert psnr(x, x + 1, peak=10) == pytest.approx(20)


class TestAre:

    @pytest.fixture()
    def problem(self):
        rng = np.random.default_rng(23)
        ds = [rng.standard_normal((5, 4)), rng.standard_normal((6, 3))]
        codes = np.zeros((4, 3, 7))
        codes[1, 2, :] = rng.standard_normal(7)
        return ds, codes

    def test_exact(self, problem):
        ds, codes = problem

        assert are(multi_mode_product(codes, ds), codes, ds) == pytest.approx(0, abs=1e-12)

    def test_value(self, problem):
        ds, codes = problem
        z = multi_mode_product(codes, ds)
        z[0, 0, 0] += 3

        assert are(z, codes, ds) == pytest.approx(np.sqrt(9 / z.size))

    def test_sparse_inputs(self, problem):
        ds, codes = problem
        z = multi_mode_product(codes, ds) + 0.5

        assert are(z, stack_to_sparse(codes), ds) == pytest.approx(are(z, codes, ds))
        assert are(z, SparseTensor.from_dense(codes), ds) == pytest.approx(are(z, codes, ds))

    def test_mismatch(self, problem):
        ds, codes = problem

        with pytest.raises(InvalidArgument):
            are(np.zeros((5, 6, 8)), codes, ds)
