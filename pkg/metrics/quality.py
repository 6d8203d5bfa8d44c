"""Signal quality measures: MSE, PSNR and average representation error."""

from typing import Sequence, Union

import numpy as np

from recovery.sparse import SparseTensor, as_code_stack
from tensor.ops import as_tensor, multi_mode_product
from util.errors import InvalidArgument

Codes = Union[np.ndarray, SparseTensor, Sequence[SparseTensor]]


def _pair(x_true, x_hat):
    x_true = as_tensor(x_true)
    x_hat = as_tensor(x_hat)
    if x_true.shape != x_hat.shape:
        raise InvalidArgument(f"Shape mismatch {x_true.shape} vs {x_hat.shape}")
    return x_true, x_hat


def mse(x_true, x_hat) -> float:
    x_true, x_hat = _pair(x_true, x_hat)
    return float(np.sum((x_true - x_hat) ** 2) / x_true.size)


def psnr(x_true, x_hat, peak: float = 1.0) -> float:
    """PSNR in dB over the given peak value. Identical inputs give inf."""
    err = mse(x_true, x_hat)
    if err == 0:
        return float('inf')
    return float(10 * np.log10(peak ** 2 / err))


def are(z, s: Codes, ds: Sequence[np.ndarray]) -> float:
    """
    Average representation error sqrt(||Z - S x_1 D_1 ... x_n D_n||_F^2 / len(Z)).

    :param z: Coupled tensor, one slice per training sample along the trailing axis when stacked
    :param s: Codes as a dense stack, a SparseTensor, or a list of per-slice SparseTensors
    :param ds: Coupled matrices D_i
    """
    z = as_tensor(z)
    codes = as_code_stack(s)
    if codes.ndim < len(ds):
        raise InvalidArgument(f"Codes of order {codes.ndim} cannot be used with {len(ds)} factors")
    recon = multi_mode_product(codes, ds)
    if recon.shape != z.shape:
        raise InvalidArgument(f"Reconstruction shape {recon.shape} does not match {z.shape}")
    return float(np.sqrt(np.sum((z - recon) ** 2) / z.size))
