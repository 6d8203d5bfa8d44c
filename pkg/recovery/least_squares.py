import numpy as np
import scipy.linalg

RIDGE = 1e-12
RANK_REL_TOL = 1e-12


def least_squares_on_support(cols, y) -> np.ndarray:
    """
    Least squares coefficients of y on the given columns. Uses QR, falling back to ridge-regularized normal
    equations when the columns are numerically rank deficient.

    :param cols: L x s matrix of selected columns
    :param y: Length-L vector (or L x R matrix of right hand sides)
    :return: Length-s coefficients (or s x R)
    """
    cols = np.asarray(cols, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if cols.shape[1] == 0:
        return np.zeros((0,) + y.shape[1:])

    q, r = scipy.linalg.qr(cols, mode='economic', check_finite=False)
    diag = np.abs(np.diag(r))
    if diag.min() > RANK_REL_TOL * diag.max():
        return scipy.linalg.solve_triangular(r, q.T @ y, check_finite=False)

    gram = cols.T @ cols + RIDGE * np.eye(cols.shape[1])
    return scipy.linalg.solve(gram, cols.T @ y, assume_a='pos', check_finite=False)


def solve_normal_equations(gram, rhs) -> np.ndarray:
    """
    Batched normal equation solve, gram is G x s x s and rhs is G x s. Singular systems are retried with a ridge.
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    try:
        return np.linalg.solve(gram, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        ridge = RIDGE * np.eye(gram.shape[-1])
        return np.linalg.solve(gram + ridge, rhs[..., None])[..., 0]
